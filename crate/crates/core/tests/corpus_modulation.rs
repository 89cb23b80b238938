//! Independent check of the synthetic corpus: a crude envelope demodulator
//! measures amplitude-modulation depth per clip, and that single number
//! must separate pass from fail clips.

use std::f64::consts::PI;

use specpipe_core::manifest::Label;
use specpipe_core::synth_corpus::{plan_manifest, render_clips, CorpusSpec};

/// RMS envelope over 20 ms frames every 10 ms, then the largest sinusoid
/// amplitude in 2–8 Hz (scanned every 0.05 Hz) relative to the mean.
fn modulation_depth(x: &[f64], fs: f64) -> f64 {
    let win = (0.02 * fs) as usize;
    let hop = (0.01 * fs) as usize;
    let env: Vec<f64> = (0..=(x.len() - win) / hop)
        .map(|k| {
            let w = &x[k * hop..k * hop + win];
            (w.iter().map(|v| v * v).sum::<f64>() / win as f64).sqrt()
        })
        .collect();
    let mean = env.iter().sum::<f64>() / env.len() as f64;
    let rate = fs / hop as f64;
    let n = env.len() as f64;
    (0..=120)
        .map(|i| {
            let f = 2.0 + 0.05 * i as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (k, e) in env.iter().enumerate() {
                let ph = 2.0 * PI * f * k as f64 / rate;
                re += (e - mean) * ph.cos();
                im -= (e - mean) * ph.sin();
            }
            2.0 * (re * re + im * im).sqrt() / n / mean
        })
        .fold(0.0, f64::max)
}

#[test]
fn fail_clips_carry_deeper_modulation() {
    let spec = CorpusSpec::default();
    let m = plan_manifest(&spec).unwrap();
    let clips = render_clips(&spec, &m);
    let labels: Vec<Label> = m
        .participants
        .iter()
        .flat_map(|p| p.clips.iter().map(move |_| p.label))
        .collect();
    let fs = spec.sample_rate as f64;
    let depths: Vec<(f64, Label)> = clips
        .iter()
        .zip(&labels)
        .map(|((_, c), &l)| (modulation_depth(&c.samples, fs), l))
        .collect();
    let mean = |want| {
        let v: Vec<f64> = depths.iter().filter(|d| d.1 == want).map(|d| d.0).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (fail, pass) = (mean(Label::Fail), mean(Label::Pass));
    // configured depths are 0.6 and 0; windowing and jitter blur both a bit
    assert!(fail - pass > 0.4, "fail {fail:.3} pass {pass:.3}");

    let best = depths
        .iter()
        .map(|&(t, _)| {
            depths
                .iter()
                .filter(|&&(d, l)| (d >= t) == (l == Label::Fail))
                .count()
        })
        .max()
        .unwrap();
    let acc = best as f64 / depths.len() as f64;
    assert!(acc >= 0.95, "threshold accuracy {acc:.3}");
}
