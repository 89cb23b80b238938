//! Runs the three preprocessing modes on the bundled synthetic corpus and
//! prints a timing and metric line per mode.

use std::time::Instant;

use specpipe_core::pipeline::{run, PipelineConfig, PreprocMode};

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "sweep-out".into());
    let t0 = Instant::now();
    for mode in PreprocMode::ALL {
        let t = Instant::now();
        let cfg = PipelineConfig {
            mode,
            out_dir: format!("{root}/{}", mode.tag()).into(),
            cache_dir: Some(format!("{root}/cache").into()),
            ..PipelineConfig::default()
        };
        let s = run(&cfg).expect("run");
        println!(
            "{:<10} auc {:?} st {:?} sp {:?} cm {:?} {:.1}s",
            mode.tag(),
            s.metrics.auc,
            s.metrics.sensitivity,
            s.metrics.specificity,
            s.confusion,
            t.elapsed().as_secs_f64()
        );
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
