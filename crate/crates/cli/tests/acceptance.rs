//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=2,4` restricts the run to the listed criteria (6 is
//! required by 9 and runs implicitly).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specpipe_core::eval::{
    auc_trapezoid, bootstrap_ci, majority_vote, metrics, read_report, roc_auc, ConfusionMatrix,
    EvaluationReport,
};
use specpipe_core::manifest::{
    split_by_epoch, ClipRecord, Manifest, ParticipantRecord, Task, Vowel,
};
use specpipe_core::model::{
    batch_loss, load_checkpoint, loss_and_grad, predict_clip, Architecture, ModelConfig,
    ModelParams,
};
use specpipe_core::pipeline::{segment_input, FeatureConfig, PreprocMode};
use specpipe_core::stft_mel::{stft, WindowKind};
use specpipe_core::superlet::{morlet_wavelet, superlet_response, CycleMode, SuperletConfig};
use specpipe_core::synth_corpus::{
    plan_manifest, render_clips, CorpusSpec, EnrollmentEpoch, Generator,
};
use specpipe_core::Label;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

fn c1_metrics() -> Verdict {
    let m = metrics(&ConfusionMatrix::new(7, 2, 0, 19));
    let r2 = |v: Option<f64>| (v.unwrap_or(f64::NAN) * 100.0).round() / 100.0;
    let got = [
        r2(m.sensitivity),
        r2(m.specificity),
        r2(m.precision),
        r2(m.f1),
    ];
    check(
        got == [0.78, 1.00, 1.00, 0.88],
        format!(
            "ST {:.2} SP {:.2} precision {:.2} F1 {:.2}",
            got[0], got[1], got[2], got[3]
        ),
    )
}

// ---------------------------------------------------------------- 2

fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                // reduce k·j mod n first so the angle stays small
                let ph = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            (re, im)
        })
        .collect()
}

/// Direct "same" convolution of `x` with an odd-length complex kernel.
fn direct_morlet(x: &[f64], w: &[(f64, f64)]) -> Vec<f64> {
    let half = w.len() / 2;
    (0..x.len())
        .map(|n| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &(wr, wi)) in w.iter().enumerate() {
                let idx = n as isize + half as isize - k as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    re += x[idx as usize] * wr;
                    im += x[idx as usize] * wi;
                }
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

fn c2_dsp() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_fft = 0.0f64;
    for _ in 0..50 {
        let n_fft = 1usize << rng.random_range(1..=12);
        let hop = rng.random_range(1..=n_fft);
        let frames = rng.random_range(1..=3);
        let len = n_fft + (frames - 1) * hop;
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = stft(&x, n_fft, hop, WindowKind::Hann).map_err(|e| e.to_string())?;
        for t in 0..s.n_frames {
            let frame: Vec<f64> = (0..n_fft)
                .map(|i| x[t * hop + i] * (0.5 - 0.5 * (2.0 * PI * i as f64 / n_fft as f64).cos()))
                .collect();
            let want = naive_dft(&frame);
            let scale = want
                .iter()
                .map(|c| c.0.hypot(c.1))
                .fold(0.0, f64::max)
                .max(1e-300);
            let err = s
                .frame(t)
                .iter()
                .zip(&want)
                .map(|(g, w)| (g.re - w.0).hypot(g.im - w.1))
                .fold(0.0, f64::max);
            worst_fft = worst_fft.max(err / scale);
        }
    }

    let fs = 8000.0;
    let mut worst_sl = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1500..4000);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut freqs: Vec<f64> = (0..4).map(|_| rng.random_range(100.0..3500.0)).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        let cfg = SuperletConfig {
            freqs: freqs.clone(),
            base_cycles: rng.random_range(1.0..4.0),
            order_min: 1.0,
            order_max: 1.0,
            mode: CycleMode::Multiplicative,
            k_sd: 5.0,
            frame_len: 256,
            frame_hop: 128,
            db_floor: -100.0,
        };
        let resp = superlet_response(&x, &cfg, fs).map_err(|e| e.to_string())?;
        for (i, &f) in freqs.iter().enumerate() {
            let w: Vec<(f64, f64)> = morlet_wavelet(f, cfg.base_cycles, fs, cfg.k_sd)
                .iter()
                .map(|c| (c.re, c.im))
                .collect();
            let want = direct_morlet(&x, &w);
            let scale = want.iter().fold(0.0f64, |m, v| m.max(*v));
            let err = resp
                .row(i)
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_sl = worst_sl.max(err / scale);
        }
    }
    check(
        worst_fft < 1e-9 && worst_sl < 1e-6,
        format!("STFT max rel err {worst_fft:.2e} (< 1e-9), superlet o=1 max rel err {worst_sl:.2e} (< 1e-6)"),
    )
}

// ---------------------------------------------------------------- 3

fn c3_gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lambdas = [0.0, 0.5, 1.0];
    let mut worst = 0.0f64;
    for i in 0..20 {
        let lambda = if i < 18 {
            lambdas[i % 3]
        } else {
            rng.random_range(0.0..1.0)
        };
        let cfg = ModelConfig {
            architecture: if i % 7 == 6 {
                Architecture::LinearProbe
            } else {
                Architecture::Cnn
            },
            input_shape: [
                rng.random_range(1..=3),
                rng.random_range(3..=9),
                rng.random_range(3..=9),
            ],
            widths: [
                rng.random_range(1..=3),
                rng.random_range(1..=4),
                rng.random_range(1..=4),
            ],
            embed_dim: rng.random_range(2..=5),
        };
        let n_classes = rng.random_range(2..=4);
        let mut p = ModelParams::init(&cfg, n_classes, i as u64).map_err(|e| e.to_string())?;
        // zero-initialized conv biases put pre-activations of dead regions
        // exactly on the ReLU kink, where central differences see slope ½;
        // a small offset moves the check point to where the loss is smooth
        for v in &mut p.values {
            *v += rng.random_range(-0.05..0.05);
        }
        let batch = rng.random_range(3..=6);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| {
                (0..cfg.input_len())
                    .map(|_| rng.random_range(0.0..1.0))
                    .collect()
            })
            .collect();
        let mut labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..n_classes)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let weights: Vec<f64> = (0..n_classes).map(|_| rng.random_range(0.5..2.0)).collect();
        let margin = rng.random_range(0.5..2.0);
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (_, g) = loss_and_grad(&p, &refs, &labels, &weights, lambda, margin)
            .map_err(|e| e.to_string())?;
        let h = 1e-6;
        let mut fd = vec![0.0; g.len()];
        for (j, fd_j) in fd.iter_mut().enumerate() {
            let mut q = p.clone();
            q.values[j] = p.values[j] + h;
            let up = batch_loss(&q, &refs, &labels, &weights, lambda, margin)
                .map_err(|e| e.to_string())?;
            q.values[j] = p.values[j] - h;
            let dn = batch_loss(&q, &refs, &labels, &weights, lambda, margin)
                .map_err(|e| e.to_string())?;
            *fd_j = (up.total - dn.total) / (2.0 * h);
        }
        let diff = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = g
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        let rel = diff / norm.max(1e-12);
        worst = worst.max(rel);
    }
    check(
        worst < 1e-4,
        format!("max norm-wise rel err {worst:.2e} over 20 configs (< 1e-4)"),
    )
}

// ---------------------------------------------------------------- 4

fn auc_pairs(scores: &[f64], truth: &[Label]) -> f64 {
    let (mut s, mut n) = (0.0, 0.0);
    for (i, &a) in scores.iter().enumerate() {
        for (j, &b) in scores.iter().enumerate() {
            if truth[i] == Label::Fail && truth[j] == Label::Pass {
                n += 1.0;
                s += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    s / n
}

fn c4_auc() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = rng.random_range(2..=100);
        let ties = k % 2 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if ties {
                    rng.random_range(0..8) as f64 / 8.0
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect();
        let mut truth: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random_bool(0.4) {
                    Label::Fail
                } else {
                    Label::Pass
                }
            })
            .collect();
        truth[0] = Label::Fail;
        truth[1] = Label::Pass;
        let curve = roc_auc(&scores, &truth).map_err(|e| e.to_string())?;
        let oracle = auc_pairs(&scores, &truth);
        worst = worst
            .max((auc_trapezoid(&curve.points) - oracle).abs())
            .max((curve.auc - oracle).abs());
    }
    check(
        worst <= 1e-12,
        format!("max |AUC − pairwise| {worst:.2e} on 200 sets (≤ 1e-12)"),
    )
}

// ---------------------------------------------------------------- 5

fn c5_vote() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut ties = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=20);
        let mut labels: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Label::Fail
                } else {
                    Label::Pass
                }
            })
            .collect();
        if n % 2 == 0 && rng.random_bool(0.3) {
            for (i, l) in labels.iter_mut().enumerate() {
                *l = if i < n / 2 { Label::Fail } else { Label::Pass };
            }
            labels.shuffle(&mut rng);
        }
        let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
        for &l in &labels {
            *counts.entry(l).or_default() += 1;
        }
        let (f, p) = (
            counts.get(&Label::Fail).copied().unwrap_or(0),
            counts.get(&Label::Pass).copied().unwrap_or(0),
        );
        let want = if f == p {
            ties += 1;
            Label::Fail
        } else if f > p {
            Label::Fail
        } else {
            Label::Pass
        };
        if majority_vote(&labels) != Some(want) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatches on 1000 multisets ({ties} ties)"),
    )
}

// ---------------------------------------------------------------- 6, 7, 9

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_specpipe")
}

fn specpipe(args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin())
        .args(args)
        .env("SPECPIPE_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "specpipe {args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn write_config(path: &Path, value: serde_json::Value) {
    fs::write(path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
}

struct Sweep {
    root: PathBuf,
    reports: BTreeMap<&'static str, EvaluationReport>,
}

fn c6_sweep(root: &Path) -> (Verdict, Option<Sweep>) {
    let t0 = Instant::now();
    let mut reports = BTreeMap::new();
    let mut lines = Vec::new();
    let mut ok = true;
    for mode in PreprocMode::ALL {
        let cfg = root.join(format!("{}.json", mode.tag()));
        write_config(
            &cfg,
            serde_json::json!({
                "mode": mode.tag(),
                "seed": 42,
                "cache_dir": root.join("cache"),
            }),
        );
        let out = root.join(mode.tag());
        if let Err(e) = specpipe(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]) {
            return (Err(e), None);
        }
        let r = match read_report(&out.join("report.json")) {
            Ok(r) => r,
            Err(e) => return (Err(e.to_string()), None),
        };
        let (auc, st) = (
            r.metrics.auc.unwrap_or(0.0),
            r.metrics.sensitivity.unwrap_or(0.0),
        );
        let n = r.participants.len();
        ok &= auc >= 0.95 && st >= 0.85 && n == 28;
        lines.push(format!("{} AUC {auc:.3} ST {st:.3} ({n} test)", mode.tag()));
        reports.insert(mode.tag(), r);
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    let train_log = fs::read_to_string(root.join("mel_rgb/train_log.json")).unwrap_or_default();
    let v: serde_json::Value = serde_json::from_str(&train_log).unwrap_or_default();
    let n_train = v["n_segments"]["train"].as_u64().unwrap_or(0);
    let epochs = v["log"]["stages"]
        .as_array()
        .and_then(|s| s.last())
        .map_or(0, |s| s["epoch_losses"].as_array().map_or(0, Vec::len));
    ok &= n_train == 200 && epochs == 20;
    lines.push(format!(
        "{n_train} train segments, {epochs} fine-tune epochs, sweep {secs:.0} s (< 600 s)"
    ));
    (
        check(ok, lines.join("; ")),
        Some(Sweep {
            root: root.to_path_buf(),
            reports,
        }),
    )
}

fn c7_determinism(root: &Path) -> Verdict {
    let cfg = root.join("det.json");
    write_config(&cfg, serde_json::json!({ "mode": "mel_rgb", "seed": 42 }));
    let mut bytes = Vec::new();
    for k in 0..2 {
        let out = root.join(format!("det{k}"));
        specpipe(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])?;
        bytes.push(fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    check(
        !bytes[0].is_empty() && bytes[0] == bytes[1],
        format!(
            "two independent runs: report.json {} bytes, identical: {}",
            bytes[0].len(),
            bytes[0] == bytes[1]
        ),
    )
}

fn c9_bootstrap(sweep: &Sweep) -> Verdict {
    let r = &sweep.reports["mel_rgb"];
    let scores: Vec<f64> = r.participants.iter().map(|p| p.score).collect();
    let truth: Vec<Label> = r.participants.iter().map(|p| p.truth).collect();
    let (lo, hi) = r.metrics.auc_ci.ok_or("benchmark report has no CI")?;
    let again = bootstrap_ci(
        &scores,
        &truth,
        r.options.n_resamples,
        r.options.level,
        r.seed,
    )
    .map_err(|e| e.to_string())?;
    let mut ok =
        lo <= hi && (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && again == (lo, hi);
    let mut lines = vec![format!(
        "benchmark CI [{lo:.3}, {hi:.3}] reproduced: {}",
        again == (lo, hi)
    )];

    // the benchmark separates perfectly, so its CI is degenerate; widths are
    // compared on a low-modulation corpus (scores overlap, AUC near 0.8)
    // scored by the benchmark's mel_rgb model
    let (params, _) =
        load_checkpoint(&sweep.root.join("mel_rgb/checkpoint.bin")).map_err(|e| e.to_string())?;
    let spec = CorpusSpec {
        clips_per_participant: 1,
        seed: 9,
        fail: Generator::HarmonicVowel {
            f0_min: 100.0,
            f0_max: 220.0,
            jitter: 0.008,
            am_depth: 0.07,
            am_rate_min: 3.0,
            am_rate_max: 6.0,
        },
        epochs: vec![EnrollmentEpoch {
            start: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2023, 12, 31).unwrap(),
            n_participants: 560,
        }],
        ..CorpusSpec::default()
    };
    let m = plan_manifest(&spec).map_err(|e| e.to_string())?;
    let clips = render_clips(&spec, &m);
    let fc = FeatureConfig::default();
    let mut pool: Vec<(f64, Label)> = Vec::new();
    for (p, (_, clip)) in m.participants.iter().zip(&clips) {
        let x = segment_input(&clip.samples, clip.sample_rate, PreprocMode::MelRgb, &fc)
            .map_err(|e| e.to_string())?;
        pool.push((
            predict_clip(&params, &x.data).map_err(|e| e.to_string())?,
            p.label,
        ));
    }
    let fails: Vec<f64> = pool
        .iter()
        .filter(|s| s.1 == Label::Fail)
        .map(|s| s.0)
        .collect();
    let passes: Vec<f64> = pool
        .iter()
        .filter(|s| s.1 == Label::Pass)
        .map(|s| s.0)
        .collect();
    let pool_auc = {
        let s: Vec<f64> = pool.iter().map(|p| p.0).collect();
        let t: Vec<Label> = pool.iter().map(|p| p.1).collect();
        roc_auc(&s, &t).map_err(|e| e.to_string())?.auc
    };
    let draw = |rng: &mut ChaCha8Rng, n_fail: usize, n_pass: usize| {
        let mut s: Vec<f64> = fails.choose_multiple(rng, n_fail).copied().collect();
        s.extend(passes.choose_multiple(rng, n_pass).copied());
        let mut t = vec![Label::Fail; n_fail];
        t.extend(vec![Label::Pass; n_pass]);
        (s, t)
    };
    let (mut small_w, mut large_w, mut narrower) = (0.0, 0.0, 0);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s1, t1) = draw(&mut rng, 11, 17);
        let (s4, t4) = draw(&mut rng, 44, 68);
        let a = bootstrap_ci(&s1, &t1, 1000, 0.95, seed).map_err(|e| e.to_string())?;
        let b = bootstrap_ci(&s4, &t4, 1000, 0.95, seed).map_err(|e| e.to_string())?;
        let b2 = bootstrap_ci(&s4, &t4, 1000, 0.95, seed).map_err(|e| e.to_string())?;
        for (lo, hi) in [a, b] {
            ok &= lo <= hi && (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi);
        }
        ok &= b == b2;
        small_w += (a.1 - a.0) / 20.0;
        large_w += (b.1 - b.0) / 20.0;
        narrower += usize::from(b.1 - b.0 < a.1 - a.0);
    }
    ok &= large_w < small_w && narrower >= 15;
    lines.push(format!(
        "harder corpus (pool AUC {pool_auc:.3}): mean width 28 → {small_w:.3}, 112 → {large_w:.3}, narrower in {narrower}/20 seeds"
    ));
    check(ok, lines.join("; "))
}

// ---------------------------------------------------------------- 8

fn c8_splits() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
    let mut checked = 0;
    let mut violations = Vec::new();
    for k in 0..1000 {
        let n = rng.random_range(1..=40);
        let participants: Vec<ParticipantRecord> = (0..n)
            .map(|i| {
                let pid = format!("M{k}P{i}");
                ParticipantRecord {
                    participant_id: pid.clone(),
                    label: if rng.random_bool(0.4) {
                        Label::Fail
                    } else {
                        Label::Pass
                    },
                    enrollment_date: base + chrono::Duration::days(rng.random_range(0..400)),
                    clips: vec![ClipRecord {
                        clip_id: format!("{pid}_a"),
                        file_path: format!("{pid}.wav").into(),
                        task: Task::Vowel(Vowel::A),
                        repetition_index: 1,
                        excluded: false,
                    }],
                }
            })
            .collect();
        let m = Manifest::new(participants).map_err(|e| e.to_string())?;
        let cutoff = base + chrono::Duration::days(rng.random_range(0..420));
        let mut permuted = m.clone();
        let mut labels: Vec<Label> = m.participants.iter().map(|p| p.label).collect();
        labels.shuffle(&mut rng);
        for (p, l) in permuted.participants.iter_mut().zip(labels) {
            p.label = l;
        }
        let ids = |m: &Manifest| {
            m.participants
                .iter()
                .map(|p| p.participant_id.clone())
                .collect::<BTreeSet<_>>()
        };
        match (
            split_by_epoch(&m, cutoff),
            split_by_epoch(&permuted, cutoff),
        ) {
            (Ok((a, b)), Ok((pa, pb))) => {
                checked += 1;
                let (ta, tb) = (ids(&a), ids(&b));
                if !ta.is_disjoint(&tb) || ta.len() + tb.len() != n {
                    violations.push(format!("manifest {k}: overlap or loss"));
                }
                if ta != ids(&pa) || tb != ids(&pb) {
                    violations.push(format!("manifest {k}: depends on labels"));
                }
                if a.participants.iter().any(|p| p.enrollment_date >= cutoff)
                    || b.participants.iter().any(|p| p.enrollment_date < cutoff)
                {
                    violations.push(format!("manifest {k}: wrong side of cutoff"));
                }
            }
            (Err(e1), Err(e2)) if e1 == e2 => {}
            _ => violations.push(format!("manifest {k}: permutation changed the outcome")),
        }
    }
    check(
        violations.is_empty(),
        format!(
            "1000 manifests ({checked} non-empty splits), violations: {}",
            violations.len()
        ),
    )
}

// ----------------------------------------------------------------

fn main() {
    let only: Option<BTreeSet<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let want = |k: u32| only.as_ref().is_none_or(|s| s.contains(&k));
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut failed = 0;
    let mut report = |k: u32, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match v {
            Ok(d) => println!("PASS criterion {k} ({name}): {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {k} ({name}): {d} [{secs:.1} s]");
            }
        }
    };
    if want(1) {
        report(1, "metric reconstruction", &mut c1_metrics);
    }
    if want(2) {
        report(2, "DSP oracle equivalence", &mut c2_dsp);
    }
    if want(3) {
        report(3, "gradient check", &mut c3_gradients);
    }
    if want(4) {
        report(4, "AUC oracle", &mut c4_auc);
    }
    if want(5) {
        report(5, "majority-vote oracle", &mut c5_vote);
    }
    let mut sweep = None;
    if want(6) || want(9) {
        let root = tmp.path().join("sweep");
        fs::create_dir_all(&root).unwrap();
        report(6, "end-to-end synthetic benchmark", &mut || {
            let (v, s) = c6_sweep(&root);
            sweep = s;
            v
        });
    }
    if want(7) {
        let root = tmp.path().join("determinism");
        fs::create_dir_all(&root).unwrap();
        report(7, "determinism", &mut || c7_determinism(&root));
    }
    if want(8) {
        report(8, "split hygiene", &mut c8_splits);
    }
    if want(9) {
        report(9, "bootstrap CI sanity", &mut || match &sweep {
            Some(s) => c9_bootstrap(s),
            None => Err("benchmark sweep unavailable".into()),
        });
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
