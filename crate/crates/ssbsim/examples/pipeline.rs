//! The whole command pipeline on a small profile, driven through the same
//! entry points as the `ssbsim` binary: gen -> sweep -> train -> select ->
//! eval -> report. Artifacts land under `target/pipeline-demo/`.

use std::path::Path;

use ssbsim::beams::PoolConfig;
use ssbsim::cli;
use ssbsim::config::ExperimentConfig;

fn main() {
    let root = Path::new("target/pipeline-demo");
    std::fs::create_dir_all(root).unwrap();

    let doc = ExperimentConfig::default_document();
    let cfg = ExperimentConfig::from_toml(
        &doc,
        &[
            "codebook_size=2".into(),
            "scenario.num_ues=200".into(),
            "scenario.seed=5".into(),
            "radio.detection_threshold_dbm=-78.0".into(),
            "train.iterations=150".into(),
            "train.batch_size=8".into(),
            "train.actor_hidden=[32,32,16]".into(),
            "train.critic_hidden=[16,8]".into(),
            "train.entropy_bonus=0.01".into(),
            "train.convergence_window=0".into(),
            "train.checkpoint_interval=50".into(),
            "eval.num_instances=20".into(),
            "eval.seed_start=5000000".into(),
            "eval.methods='neural,c1,c2,max-of-experts,greedy,random'".into(),
        ],
    )
    .map(|mut c| {
        // Small array and pool keep the demo quick.
        c.pool = PoolConfig::toy();
        c
    })
    .unwrap();
    cfg.validate().unwrap();

    let out = root.join("artifacts");
    print!("{}", cli::cmd_gen(&cfg, &out).unwrap());
    let pool_path = out.join("pool.txt");

    print!(
        "{}",
        cli::cmd_sweep(&cfg, Some(&pool_path), None, &out.join("sweep")).unwrap()
    );

    let ckpt = out.join("checkpoint");
    print!("{}", cli::cmd_train(&cfg, Some(&pool_path), &ckpt, None).unwrap());

    print!(
        "{}",
        cli::cmd_select(&cfg, Some(&pool_path), &ckpt, None, &out.join("deployment.txt")).unwrap()
    );

    let report_dir = out.join("report");
    print!(
        "{}",
        cli::cmd_eval(&cfg, Some(&pool_path), Some(&ckpt), &report_dir).unwrap()
    );

    print!(
        "{}",
        cli::cmd_report(&report_dir.join("per_instance.csv"), &out.join("report-rebuilt")).unwrap()
    );
}
