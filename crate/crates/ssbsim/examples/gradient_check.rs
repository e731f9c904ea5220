//! Backprop against central finite differences on the production network
//! shapes.

use rand::Rng;
use ssbsim::neuralnet::{backward, forward, quadratic_loss, DenseNet};
use ssbsim::rng::{stream, StreamKind};

fn main() {
    let mut rng = stream(5, StreamKind::NetInit, &[1]);
    for dims in [vec![48, 512, 512, 256, 144], vec![48, 256, 128, 1], vec![6, 10, 4]] {
        let net = DenseNet::mlp(&dims, 42).unwrap();
        let input: Vec<f64> = (0..dims[0]).map(|_| rng.gen::<f64>() * 0.2).collect();
        let target: Vec<f64> =
            (0..*dims.last().unwrap()).map(|_| rng.gen::<f64>() - 0.5).collect();

        let (out, tape) = forward(&net, &input).unwrap();
        let (_, dgrad) = quadratic_loss(&out, &target);
        let grads = backward(&net, &tape, &dgrad).unwrap();

        // Check a seeded sample of parameters per layer.
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        let mut checked = 0usize;
        for l in 0..net.layers.len() {
            let count = net.layers[l].weights.len();
            let step = (count / 64).max(1);
            for i in (0..count).step_by(step) {
                let mut plus = net.clone();
                let mut minus = net.clone();
                plus.layers[l].weights[i] += h;
                minus.layers[l].weights[i] -= h;
                let loss = |n: &DenseNet| {
                    let (o, _) = forward(n, &input).unwrap();
                    quadratic_loss(&o, &target).0
                };
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = grads.weights[l][i];
                let denom = numeric.abs().max(analytic.abs()).max(1e-6);
                max_rel = max_rel.max((numeric - analytic).abs() / denom);
                checked += 1;
            }
        }
        println!(
            "{dims:?}: {} params, {checked} sampled, max relative error {max_rel:.2e}",
            net.num_params()
        );
        assert!(max_rel <= 1e-4);
    }
}
