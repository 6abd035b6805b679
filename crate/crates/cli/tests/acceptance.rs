//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any
//! failure. Each check runs against the built `fer` binary or an oracle that
//! shares no code with the implementation under test.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fer_core::audio::{hz_to_mel, mel_spectrogram, mel_to_hz, stft_magnitude, AudioClip, MelConfig};
use fer_core::augment::{half_mix, kept_extent, sample_spec, ImageTensor, SoftLabel};
use fer_core::dataset::{ExpressionClass, NUM_CLASSES};
use fer_core::fusion::{confusion, f1_per_class, macro_f1, ConfusionMatrix};
use fer_core::model::{batch_loss_and_gradient, lr_schedule, soft_cross_entropy, LinearHead, TrainConfig};
use fer_core::rng::seeded;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fer(args: &[&str], cwd: &Path, threads: usize) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_fer"))
        .args(args)
        .current_dir(cwd)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .map_err(|e| format!("spawn fer: {e}"))?;
    if !o.status.success() {
        return Err(format!("fer {} failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn random_label(rng: &mut impl Rng) -> SoftLabel {
    let raw: [f64; NUM_CLASSES] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
    let sum: f64 = raw.iter().sum();
    let mut p = raw.map(|v| v / sum);
    p[0] += 1.0 - p.iter().sum::<f64>();
    SoftLabel::new(p).expect("normalized label")
}

fn reference_count_ratios() -> Check {
    let expected = [0.306, 0.028, 0.019, 0.016, 0.157, 0.138, 0.052, 0.284];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    fer(&["synth", "--reference-counts", "--out", "t"], dir.path(), 1)?;
    let out = fer(&["stats", "--manifest", "t/reference.manifest.tsv"], dir.path(), 1)?;
    let elapsed = start.elapsed();
    let rows: BTreeMap<&str, (u64, &str)> = out
        .lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let (name, count, ratio) = (it.next()?, it.next()?.parse().ok()?, it.next()?);
            Some((name, (count, ratio)))
        })
        .collect();
    for (class, want) in ExpressionClass::ALL.iter().zip(expected) {
        let got = rows.get(class.name()).map(|r| r.1);
        ensure(got == Some(format!("{want:.3}").as_str()), format!("{class}: {got:?} vs {want:.3}"))?;
    }
    ensure(rows.get("total").map(|r| r.0) == Some(574_003), "total is not 574003")?;
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("8 ratios and total 574003 in {:.2}s", elapsed.as_secs_f64()))
}

fn schedule_fixed_points() -> Check {
    let config = TrainConfig::default();
    for (epoch, want) in [(39, 1e-3), (40, 1e-4), (55, 1e-5), (65, 1e-6)] {
        let got = lr_schedule(epoch, &config).map_err(|e| e.to_string())?;
        ensure(got == want, format!("epoch {epoch}: {got:e} != {want:e}"))?;
    }
    Ok("1e-3 1e-4 1e-5 1e-6 at epochs 39 40 55 65".into())
}

fn mixed_label_loss() -> Check {
    let mut rng = seeded(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let logits: [f64; NUM_CLASSES] = std::array::from_fn(|_| rng.gen_range(-8.0..8.0));
        let (y, y_ref) = (random_label(&mut rng), random_label(&mut rng));
        let alpha = rng.gen_range(0.0..=1.0);
        let mixed = soft_cross_entropy(&logits, &y.mix(&y_ref, alpha)).map_err(|e| e.to_string())?;
        let a = soft_cross_entropy(&logits, &y).map_err(|e| e.to_string())?;
        let b = soft_cross_entropy(&logits, &y_ref).map_err(|e| e.to_string())?;
        worst = worst.max((mixed - (alpha * a + (1.0 - alpha) * b)).abs());
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("1000 draws, max deviation {worst:.1e}"))
}

/// Batch loss recomputed from the parameters by hand.
fn reference_loss(params: &[f64], dim: usize, features: &[Vec<f64>], targets: &[SoftLabel]) -> f64 {
    let mut total = 0.0;
    for (f, t) in features.iter().zip(targets) {
        let logits: Vec<f64> = (0..NUM_CLASSES)
            .map(|c| params[NUM_CLASSES * dim + c] + (0..dim).map(|d| params[c * dim + d] * f[d]).sum::<f64>())
            .collect();
        let z = logits.iter().map(|l| l.exp()).sum::<f64>().ln();
        total += t.probabilities().iter().zip(&logits).map(|(p, l)| p * (z - l)).sum::<f64>();
    }
    total / features.len() as f64
}

fn gradient_oracle() -> Check {
    let mut rng = seeded(12);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let dim = rng.gen_range(1..12);
        let batch = rng.gen_range(1..6);
        let weights: Vec<f64> = (0..NUM_CLASSES * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias: [f64; NUM_CLASSES] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let head = LinearHead::from_parts(weights, bias).map_err(|e| e.to_string())?;
        let features: Vec<Vec<f64>> = (0..batch).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let targets: Vec<SoftLabel> = (0..batch).map(|_| random_label(&mut rng)).collect();
        let (_, grad) = batch_loss_and_gradient(&head, &features, &targets).map_err(|e| e.to_string())?;
        let params = head.params().to_vec();
        let numeric: Vec<f64> = (0..params.len())
            .map(|i| {
                let (mut up, mut down) = (params.clone(), params.clone());
                up[i] += h;
                down[i] -= h;
                (reference_loss(&up, dim, &features, &targets) - reference_loss(&down, dim, &features, &targets)) / (2.0 * h)
            })
            .collect();
        let diff = grad.0.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = grad.0.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
        let rel = diff / scale.max(1e-12);
        ensure(rel < 1e-4, format!("case {case}: relative error {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("50 cases, max relative error {worst:.1e}"))
}

fn dsp_oracle() -> Check {
    let n = 1024;
    let config = MelConfig::default();
    let mut rng = seeded(13);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let frame: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let clip = AudioClip::new(frame.clone(), 16_000).map_err(|e| e.to_string())?;
        let fast = stft_magnitude(&clip, &config).map_err(|e| e.to_string())?;
        ensure(fast.cols == 1 && fast.rows == n / 2 + 1, format!("grid {}x{}", fast.rows, fast.cols))?;
        for k in 0..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in frame.iter().enumerate() {
                let w = (PI * i as f64 / n as f64).sin().powi(2);
                let phase = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
                re += w * x * phase.cos();
                im -= w * x * phase.sin();
            }
            worst = worst.max((fast.get(k, 0) - re.hypot(im)).abs());
        }
    }
    ensure(worst < 1e-6, format!("max abs error {worst:e}"))?;

    // Filter whose peak is nearest 440 Hz on the mel axis between 0 and 8 kHz.
    let step = 2595.0 * (1.0 + 8000.0 / 700.0f64).log10() / (config.n_mels + 1) as f64;
    let expected = ((2595.0 * (1.0 + 440.0 / 700.0f64).log10()) / step).round() as usize - 1;
    ensure((mel_to_hz(hz_to_mel(440.0)) - 440.0).abs() < 1e-9, "mel round trip")?;
    let tone: Vec<f64> = (0..16_000).map(|i| (2.0 * PI * 440.0 * i as f64 / 16_000.0).sin()).collect();
    let grid = mel_spectrogram(&AudioClip::new(tone, 16_000).map_err(|e| e.to_string())?, &config).map_err(|e| e.to_string())?;
    let t = grid.n_frames() / 2;
    let peak = (0..grid.n_mels())
        .max_by(|&a, &b| grid.values.get(a, t).total_cmp(&grid.values.get(b, t)))
        .unwrap_or(0);
    ensure(peak == expected, format!("440 Hz peaks in mel bin {peak}, expected {expected}"))?;
    Ok(format!("100 frames, max abs error {worst:.1e}; 440 Hz in mel bin {peak}"))
}

fn metric_oracle() -> Check {
    let mut rng = seeded(14);
    for set in 0..1000 {
        let len = rng.gen_range(1..200);
        let labels: Vec<ExpressionClass> = (0..len).map(|_| ExpressionClass::ALL[rng.gen_range(0..NUM_CLASSES)]).collect();
        let preds: Vec<ExpressionClass> = (0..len).map(|_| ExpressionClass::ALL[rng.gen_range(0..NUM_CLASSES)]).collect();
        let cm = confusion(&preds, &labels).map_err(|e| e.to_string())?;
        let mut f1_sum = 0.0;
        for class in ExpressionClass::ALL {
            let count = |f: &dyn Fn(ExpressionClass, ExpressionClass) -> bool| {
                preds.iter().zip(&labels).filter(|(&p, &l)| f(p, l)).count() as f64
            };
            let tp = count(&|p, l| p == class && l == class);
            let fp = count(&|p, l| p == class && l != class);
            let fn_ = count(&|p, l| p != class && l == class);
            let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let recall = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
            f1_sum += if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
        }
        let expected = f1_sum / NUM_CLASSES as f64;
        let got = macro_f1(&cm);
        ensure(got == expected, format!("set {set}: {got} vs {expected}"))?;
    }
    let mut cm = ConfusionMatrix::default();
    let (a, b) = (ExpressionClass::Anger, ExpressionClass::Fear);
    let mut add = |truth, predicted| cm.add(truth, predicted).map_err(|e| e.to_string());
    add(a, a)?;
    add(b, a)?;
    for _ in 0..3 {
        add(a, b)?;
    }
    let f1 = f1_per_class(&cm, a).2;
    ensure(f1 == 1.0 / 3.0, format!("tp=1 fp=1 fn=3 gives {f1}"))?;
    Ok("1000 sets match the recount; tp=1 fp=1 fn=3 gives 1/3".into())
}

fn halfmix_invariants() -> Check {
    let mut rng = seeded(15);
    for case in 0..1000 {
        let (h, w) = (rng.gen_range(2..40), rng.gen_range(2..40));
        let input = ImageTensor::from_fn(h, w, |_, _, _| rng.gen_range(0.0..1.0)).map_err(|e| e.to_string())?;
        let reference = ImageTensor::from_fn(h, w, |_, _, _| rng.gen_range(0.0..1.0)).map_err(|e| e.to_string())?;
        let (y, y_ref) = (random_label(&mut rng), random_label(&mut rng));
        let spec = sample_spec(&mut rng);
        let out = half_mix((&input, &y), (&reference, &y_ref), &spec).map_err(|e| e.to_string())?;
        let (rows, cols) = kept_extent(&spec, h, w);
        let mut kept = 0usize;
        for yy in 0..h {
            for xx in 0..w {
                let from_input = (0..3).all(|c| out.image.get(yy, xx, c) == input.get(yy, xx, c));
                let from_ref = (0..3).all(|c| out.image.get(yy, xx, c) == reference.get(yy, xx, c));
                let inside = rows.contains(&yy) && cols.contains(&xx);
                ensure(
                    (inside && from_input) || (!inside && from_ref),
                    format!("case {case}: pixel ({yy},{xx}) has no provenance"),
                )?;
                kept += inside as usize;
            }
        }
        let fraction = kept as f64 / (h * w) as f64;
        let tolerance = (1.0 / h as f64).max(1.0 / w as f64);
        ensure(
            (fraction - spec.alpha()).abs() <= tolerance,
            format!("case {case}: kept {fraction} for alpha {} ({:?})", spec.alpha(), spec.orientation),
        )?;
        let sum: f64 = out.label.probabilities().iter().sum();
        ensure((sum - 1.0).abs() < 1e-12, format!("case {case}: label sums to {sum}"))?;
    }
    Ok("1000 applications: provenance, kept area and label mass hold".into())
}

const RUN_OUTPUTS: [&str; 8] = [
    "visual.head",
    "temporal.head",
    "audio.head",
    "visual.scores.csv",
    "temporal.scores.csv",
    "audio.scores.csv",
    "report.txt",
    "report.kv",
];

/// Full pipeline through the binary in `dir`; returns the parsed report.
fn pipeline(dir: &Path, config: &Path, threads: usize) -> Result<BTreeMap<String, f64>, String> {
    let config = config.to_str().ok_or("config path")?;
    fer(&["synth", "--out", "corpus"], dir, threads)?;
    for stream in ["visual", "temporal", "audio"] {
        fer(&["train", "--config", config, "--stream", stream, "--root", "corpus", "--out", "run"], dir, threads)?;
        let head = format!("run/{stream}.head");
        fer(&["predict", "--config", config, "--stream", stream, "--checkpoint", &head, "--root", "corpus", "--out", "run"], dir, threads)?;
    }
    fer(
        &[
            "eval", "--config", config, "--visual", "run/visual.scores.csv", "--temporal", "run/temporal.scores.csv",
            "--audio", "run/audio.scores.csv", "--root", "corpus", "--out", "run",
        ],
        dir,
        threads,
    )?;
    let kv = fs::read_to_string(dir.join("run/report.kv")).map_err(|e| e.to_string())?;
    Ok(kv
        .lines()
        .filter_map(|l| l.split_once('='))
        .filter_map(|(k, v)| Some((k.to_string(), v.parse().ok()?)))
        .collect())
}

fn desk_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.ini")
}

fn end_to_end(dir: &Path) -> Check {
    let start = Instant::now();
    let report = pipeline(dir, &desk_config(), 1)?;
    let elapsed = start.elapsed();
    let f1 = |row: &str| report.get(&format!("{row}.macro_f1")).copied().ok_or(format!("report lacks {row}"));
    let (v, t, a, vt, vta) = (f1("Visual")?, f1("Temporal")?, f1("Audio")?, f1("V+T")?, f1("V+T+A")?);
    let summary = format!(
        "Visual {v:.4}, Temporal {t:.4}, Audio {a:.4}, V+T {vt:.4}, V+T+A {vta:.4} in {:.1}s",
        elapsed.as_secs_f64()
    );
    ensure(elapsed < Duration::from_secs(180), format!("{summary}: too slow"))?;
    ensure(vta > v.max(t).max(a), format!("{summary}: fusion does not beat the best stream"))?;
    ensure(v < vt && vt < vta, format!("{summary}: ordering Visual < V+T < V+T+A fails"))?;
    Ok(summary)
}

fn determinism(first: &Path) -> Check {
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(second.path(), &desk_config(), 4)?;
    for name in RUN_OUTPUTS {
        let a = fs::read(first.join("run").join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = fs::read(second.path().join("run").join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} outputs byte-identical across 1 and 4 threads", RUN_OUTPUTS.len()))
}

fn main() -> ExitCode {
    let e2e_dir = tempfile::tempdir().expect("temp dir");
    let checks: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("class distribution table", Box::new(reference_count_ratios)),
        ("schedule fixed points", Box::new(schedule_fixed_points)),
        ("mixed-label loss split", Box::new(mixed_label_loss)),
        ("gradient oracle", Box::new(gradient_oracle)),
        ("dsp oracle", Box::new(dsp_oracle)),
        ("metric oracle", Box::new(metric_oracle)),
        ("half-mix invariants", Box::new(halfmix_invariants)),
        ("end-to-end desk run", Box::new(|| end_to_end(e2e_dir.path()))),
        ("determinism", Box::new(|| determinism(e2e_dir.path()))),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
