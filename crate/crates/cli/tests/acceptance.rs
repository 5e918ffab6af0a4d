//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always shown.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use plr_cli::bench::{self, BenchConfig};
use plr_cli::manifest::{Resolved, RunManifest, MANIFEST_FILE};
use plr_cli::pipeline::DatasetRef;
use plr_cli::scaling::{self, ScalingConfig};
use plr_core::data::{synth_linear, CorruptionConfig, PartialDataset, SplitTag};
use plr_core::losses::{plr_loss, weights, Aggregation, CandidateSet, PlrLoss, PointwiseLoss};
use plr_core::model::{ModelKind, RegressionModel};
use plr_core::numeric::{least_squares, Matrix, Rng};
use plr_core::report::{aggregate, BenchReport, TrialResult};
use plr_core::trainer::{fit, GridSpec, Method, TrainConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn dataset(name: &str) -> DatasetRef {
    DatasetRef {
        name: name.to_string(),
        data: data_dir().join(format!("{name}.csv")),
        schema: data_dir().join(format!("{name}.schema.json")),
    }
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed < Duration::from_secs(budget_secs)
}

// ---------------------------------------------------------------- AC1 ----

/// Independent forward pass: output and every hidden pre-activation.
fn oracle_forward(model: &RegressionModel, x: &[f64]) -> (f64, Vec<f64>) {
    let mut a = x.to_vec();
    let mut hidden = Vec::new();
    let layers = model.layers();
    for (li, layer) in layers.iter().enumerate() {
        let (fan_in, fan_out) = layer.weight.shape();
        let mut z = layer.bias.clone();
        for (j, zj) in z.iter_mut().enumerate().take(fan_out) {
            for (i, ai) in a.iter().enumerate().take(fan_in) {
                *zj += ai * layer.weight.get(i, j);
            }
        }
        if li + 1 < layers.len() {
            hidden.extend_from_slice(&z);
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        } else {
            a = z;
        }
    }
    (a[0], hidden)
}

fn point(loss: PointwiseLoss, f: f64, y: f64) -> f64 {
    let r = f - y;
    match loss {
        PointwiseLoss::Mse => r * r,
        PointwiseLoss::Mae => r.abs(),
        PointwiseLoss::Huber { delta } => {
            if r.abs() <= delta {
                0.5 * r * r
            } else {
                delta * (r.abs() - 0.5 * delta)
            }
        }
    }
}

fn oracle_weights(losses: &[f64], beta1: f64, beta2: f64) -> Vec<f64> {
    let scores: Vec<f64> = losses.iter().map(|l| beta2 * l.max(1e-8).powf(-beta1)).collect();
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

struct Problem {
    x: Vec<Vec<f64>>,
    sets: Vec<Vec<f64>>,
    y: Vec<f64>,
}

/// Mean objective over the batch. Candidate weights are held at `frozen`,
/// matching a gradient that treats them as constants.
fn objective(
    model: &RegressionModel,
    p: &Problem,
    agg: Aggregation,
    loss: PointwiseLoss,
    frozen: &[Vec<f64>],
) -> f64 {
    let mut total = 0.0;
    for i in 0..p.x.len() {
        let f = oracle_forward(model, &p.x[i]).0;
        let s = &p.sets[i];
        total += match agg {
            Aggregation::Supervised => point(loss, f, p.y[i]),
            Aggregation::AvgLoss => s.iter().map(|&y| point(loss, f, y)).sum::<f64>() / s.len() as f64,
            Aggregation::AvgValue => point(loss, f, s.iter().sum::<f64>() / s.len() as f64),
            Aggregation::MinLoss => s.iter().map(|&y| point(loss, f, y)).fold(f64::INFINITY, f64::min),
            Aggregation::Weighted { .. } => s.iter().zip(&frozen[i]).map(|(&y, w)| w * point(loss, f, y)).sum(),
        };
    }
    total / p.x.len() as f64
}

/// True when some prediction, hidden unit or candidate sits close enough to a
/// non-differentiable point that a finite difference would straddle it.
fn near_kink(model: &RegressionModel, p: &Problem, agg: Aggregation, loss: PointwiseLoss) -> bool {
    const MARGIN: f64 = 1e-3;
    for i in 0..p.x.len() {
        let (f, hidden) = oracle_forward(model, &p.x[i]);
        if hidden.iter().any(|z| z.abs() < MARGIN) {
            return true;
        }
        let s = &p.sets[i];
        let targets: Vec<f64> = match agg {
            Aggregation::Supervised => vec![p.y[i]],
            Aggregation::AvgValue => vec![s.iter().sum::<f64>() / s.len() as f64],
            _ => s.clone(),
        };
        for y in &targets {
            let r = (f - y).abs();
            let kink = match loss {
                PointwiseLoss::Mse => false,
                PointwiseLoss::Mae => r < MARGIN,
                PointwiseLoss::Huber { delta } => (r - delta).abs() < MARGIN,
            };
            if kink {
                return true;
            }
        }
        if agg == Aggregation::MinLoss && s.len() > 1 {
            let mut l: Vec<f64> = s.iter().map(|&y| point(loss, f, y)).collect();
            l.sort_by(f64::total_cmp);
            if l[1] - l[0] < MARGIN {
                return true;
            }
        }
    }
    false
}

fn ac1_gradients() -> Verdict {
    let start = Instant::now();
    let kinds = [ModelKind::Linear, ModelKind::Mlp];
    let mut rng = Rng::new(2024, 0);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut skipped = 0;
    for c in 0..20 {
        let kind = kinds[c % 2];
        let loss = match c % 3 {
            0 => PointwiseLoss::Mse,
            1 => PointwiseLoss::Mae,
            _ => PointwiseLoss::Huber {
                delta: rng.uniform_between(0.5, 2.0),
            },
        };
        let agg = match c % 5 {
            0 => Aggregation::Supervised,
            1 => Aggregation::AvgLoss,
            2 => Aggregation::AvgValue,
            3 => Aggregation::MinLoss,
            _ => Aggregation::Weighted {
                beta1: rng.uniform_between(0.3, 1.0),
                beta2: rng.uniform_between(0.5, 20.0),
            },
        };
        let (model, problem) = loop {
            let d = 1 + rng.below(4);
            let n = 4 + rng.below(5);
            let model = RegressionModel::init(kind, d, &mut rng).unwrap();
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.uniform_between(-2.0, 2.0)).collect()).collect();
            let mut sets = Vec::new();
            let mut y = Vec::new();
            for _ in 0..n {
                let k = 1 + rng.below(5);
                let s: Vec<f64> = (0..k).map(|_| rng.uniform_between(-3.0, 3.0)).collect();
                y.push(s[rng.below(k)]);
                sets.push(s);
            }
            let p = Problem { x, sets, y };
            if near_kink(&model, &p, agg, loss) {
                skipped += 1;
                continue;
            }
            break (model, p);
        };

        let n = problem.x.len();
        let xm = Matrix::from_rows(&problem.x).unwrap();
        let mut upstream = Vec::with_capacity(n);
        let mut frozen = Vec::with_capacity(n);
        for i in 0..n {
            let f = oracle_forward(&model, &problem.x[i]).0;
            let set = CandidateSet::new(problem.sets[i].clone()).unwrap();
            let (_, d) = plr_loss(agg, loss, f, &set, Some(problem.y[i])).unwrap();
            upstream.push(d / n as f64);
            frozen.push(match agg {
                Aggregation::Weighted { beta1, beta2 } => {
                    let l: Vec<f64> = problem.sets[i].iter().map(|&y| point(loss, f, y)).collect();
                    oracle_weights(&l, beta1, beta2)
                }
                _ => Vec::new(),
            });
        }
        let analytic = model.backward_batch(&xm, &upstream).unwrap().flatten();

        let theta = model.params();
        let h = 1e-5;
        let mut numeric = Vec::with_capacity(theta.len());
        let mut t = theta.clone();
        for j in 0..theta.len() {
            t[j] = theta[j] + h;
            let up = objective(&model.with_params(&t).unwrap(), &problem, agg, loss, &frozen);
            t[j] = theta[j] - h;
            let down = objective(&model.with_params(&t).unwrap(), &problem, agg, loss, &frozen);
            t[j] = theta[j];
            numeric.push((up - down) / (2.0 * h));
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm_a = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let norm_n = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = diff / norm_a.max(norm_n).max(1e-12);
        worst = worst.max(rel);
        if rel >= 1e-4 {
            failures.push(format!("{kind:?}/{}/{agg:?}: {rel:.2e}", loss.name()));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within(elapsed, 30);
    Verdict {
        pass,
        detail: format!(
            "20 configs, worst relative error {worst:.2e}, {skipped} kink draws redrawn, {:.1}s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    }
}

// ---------------------------------------------------------------- AC2 ----

fn ac2_weights() -> Verdict {
    let start = Instant::now();
    let mut rng = Rng::new(77, 0);
    let mut problems = Vec::new();
    let mut min_top_weight: f64 = 1.0;
    for case in 0..1000 {
        let k = 2 + rng.below(9);
        let losses: Vec<f64> = (0..k).map(|_| rng.uniform_between(0.1, 10.0)).collect();
        let beta1 = rng.uniform_between(0.1, 1.0);
        let beta2 = rng.uniform_between(0.1, 10.0);
        let w = weights(&losses, beta1, beta2).unwrap();
        if w.iter().any(|&v| v < 0.0) {
            problems.push(format!("case {case}: negative weight"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            problems.push(format!("case {case}: sum {}", w.iter().sum::<f64>()));
        }
        for i in 0..k {
            for j in 0..k {
                if losses[i] < losses[j] && !(w[i] > w[j]) {
                    problems.push(format!("case {case}: not strictly monotone"));
                }
            }
        }
        let uniform = weights(&losses, beta1, 0.0).unwrap();
        if uniform.iter().any(|&v| v != 1.0 / k as f64) {
            problems.push(format!("case {case}: beta2 = 0 not exactly uniform"));
        }
        // sorted losses in [0, 10] with gaps of at least 0.1
        let mut gapped = Vec::with_capacity(k);
        let mut l = rng.uniform_between(0.0, 1.0);
        for _ in 0..k {
            gapped.push(l);
            l += 0.1 + rng.uniform_between(0.0, 8.0 / k as f64);
        }
        rng.shuffle(&mut gapped);
        let w = weights(&gapped, 0.5, 1e4).unwrap();
        let argmin = (0..k).min_by(|&a, &b| gapped[a].total_cmp(&gapped[b])).unwrap();
        min_top_weight = min_top_weight.min(w[argmin]);
        if w[argmin] < 0.999 {
            problems.push(format!("case {case}: min-loss weight {}", w[argmin]));
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: problems.is_empty() && within(elapsed, 5),
        detail: format!(
            "1000 vectors, smallest min-loss weight at beta2=1e4 {min_top_weight:.6}, {:.2}s{}",
            elapsed.as_secs_f64(),
            problems.first().map(|p| format!("; first problem: {p} ({} total)", problems.len())).unwrap_or_default()
        ),
    }
}

// ---------------------------------------------------------------- AC3 ----

fn ac3_sandwich() -> Verdict {
    let start = Instant::now();
    let mut rng = Rng::new(99, 0);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let pred = rng.uniform_between(-10.0, 10.0);
        let k = 1 + rng.below(9);
        let set = CandidateSet::new((0..k).map(|_| rng.uniform_between(-10.0, 10.0)).collect()).unwrap();
        let loss = match rng.below(3) {
            0 => PointwiseLoss::Mse,
            1 => PointwiseLoss::Mae,
            _ => PointwiseLoss::Huber {
                delta: rng.uniform_between(0.1, 5.0),
            },
        };
        let agg = Aggregation::Weighted {
            beta1: rng.uniform_between(0.01, 2.0),
            beta2: if rng.below(10) == 0 { 0.0 } else { rng.uniform_between(0.0, 1e4) },
        };
        let min = plr_loss(Aggregation::MinLoss, loss, pred, &set, None).unwrap().0;
        let avg = plr_loss(Aggregation::AvgLoss, loss, pred, &set, None).unwrap().0;
        let wtd = plr_loss(agg, loss, pred, &set, None).unwrap().0;
        let gap = (min - wtd).max(wtd - avg);
        worst = worst.max(gap);
        if gap > 1e-12 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: violations == 0 && within(elapsed, 5),
        detail: format!(
            "10^4 triples, {violations} violations, largest excursion {worst:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

// ---------------------------------------------------------------- AC4 ----

fn ac4_identification() -> Verdict {
    let start = Instant::now();
    let data = synth_linear(2000, &[2.0], 1.0, (-1.0, 1.0), &mut Rng::new(4, 0)).unwrap();
    let (w, b) = least_squares(&data.x, &data.y).unwrap();
    let (w0, b0) = (w[0], b);
    let cfg = CorruptionConfig::from_training_labels(&data.y, 4, 41).unwrap();
    let ds = PartialDataset::corrupted(data, &cfg, SplitTag::Train).unwrap();
    let run = |agg: Aggregation| {
        let config = TrainConfig::new(ModelKind::Linear, PlrLoss::new(agg, PointwiseLoss::Mse).unwrap(), 0.01, 5);
        let p = fit(&config, &ds, &ds).unwrap().model.params();
        (p[0] - w0).abs().max((p[1] - b0).abs())
    };
    let ident = run(Aggregation::MinLoss);
    let pident = run(Aggregation::weighted(0.5, 100.0).unwrap());
    let avgl = run(Aggregation::AvgLoss);
    let elapsed = start.elapsed();
    Verdict {
        pass: ident < 0.05 && pident < 0.05 && avgl > 0.2 && within(elapsed, 120),
        detail: format!(
            "L-inf error vs normal equations: IDent {ident:.2e}, PIDent {pident:.2e}, AVGL-MSE {avgl:.3}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

// ------------------------------------------------------------ AC5/AC6 ----

fn mlp_bench(methods: &[&str], num_false: Vec<usize>) -> BenchConfig {
    BenchConfig {
        datasets: vec![dataset("abalone")],
        methods: methods.iter().map(|m| m.parse::<Method>().unwrap()).collect(),
        num_false,
        repeats: 5,
        base_seed: 0,
        model: ModelKind::Mlp,
        grid: GridSpec::default(),
    }
}

fn timings(dir: &Path) -> Vec<(String, usize, f64)> {
    std::fs::read_to_string(dir.join(bench::TIMINGS_FILE))
        .unwrap_or_default()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (
                v["method"].as_str().unwrap().to_string(),
                v["num_false"].as_u64().unwrap() as usize,
                v["seconds"].as_f64().unwrap(),
            )
        })
        .collect()
}

struct AbaloneRuns {
    report: Option<BenchReport>,
    seconds_k4: f64,
    seconds_degradation: f64,
    error: Option<String>,
}

fn abalone_runs(root: &Path) -> AbaloneRuns {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let degradation_dir = root.join("abalone-degradation");
    let mae_dir = root.join("abalone-mae");
    let degradation = mlp_bench(&["ident", "avgl-mse"], vec![2, 4, 8]);
    let mae = mlp_bench(&["avgl-mae"], vec![4]);
    let mut error = None;
    for (cfg, dir) in [(&degradation, &degradation_dir), (&mae, &mae_dir)] {
        if let Err(e) = bench::run(cfg, dir, workers) {
            error = Some(e.to_string());
        }
    }
    let mut trials: Vec<TrialResult> = bench::read_results(&degradation_dir).unwrap_or_default();
    trials.extend(bench::read_results(&mae_dir).unwrap_or_default());
    let t1 = timings(&degradation_dir);
    let t2 = timings(&mae_dir);
    let seconds_k4 = t1.iter().chain(&t2).filter(|t| t.1 == 4).map(|t| t.2).sum();
    let seconds_degradation = t1.iter().map(|t| t.2).sum();
    AbaloneRuns {
        report: aggregate(&trials).ok(),
        seconds_k4,
        seconds_degradation,
        error,
    }
}

fn mean_of(report: &BenchReport, method: &str, k: usize) -> Option<f64> {
    report.cell("abalone", method, k).map(|c| c.mean)
}

fn ac5_table_trend(runs: &AbaloneRuns) -> Verdict {
    let Some(r) = &runs.report else {
        return Verdict {
            pass: false,
            detail: format!("no results: {}", runs.error.clone().unwrap_or_default()),
        };
    };
    let (Some(ident), Some(mae), Some(mse)) =
        (mean_of(r, "IDent", 4), mean_of(r, "AVGL-MAE", 4), mean_of(r, "AVGL-MSE", 4))
    else {
        return Verdict {
            pass: false,
            detail: "missing cells".into(),
        };
    };
    let pass = ident <= 6.5 && mse >= 10.0 && ident < mae && mae < mse && runs.seconds_k4 < 15.0 * 60.0;
    Verdict {
        pass,
        detail: format!(
            "Abalone MLP |S|=4, 5 seeds: IDent {ident:.2}, AVGL-MAE {mae:.2}, AVGL-MSE {mse:.2}; {:.0}s",
            runs.seconds_k4
        ),
    }
}

fn ac6_degradation(runs: &AbaloneRuns) -> Verdict {
    let Some(r) = &runs.report else {
        return Verdict {
            pass: false,
            detail: format!("no results: {}", runs.error.clone().unwrap_or_default()),
        };
    };
    let series = |m: &str| -> Option<Vec<f64>> { [2, 4, 8].iter().map(|&k| mean_of(r, m, k)).collect() };
    let (Some(avgl), Some(ident)) = (series("AVGL-MSE"), series("IDent")) else {
        return Verdict {
            pass: false,
            detail: "missing cells".into(),
        };
    };
    let increasing = avgl[0] < avgl[1] && avgl[1] < avgl[2];
    let growth = ident[2] / ident[0] - 1.0;
    let pass = increasing && growth < 0.15 && runs.seconds_degradation < 30.0 * 60.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" -> ");
    Verdict {
        pass,
        detail: format!(
            "|S| 2/4/8: AVGL-MSE {}, IDent {} (+{:.1}%); {:.0}s",
            fmt(&avgl),
            fmt(&ident),
            100.0 * growth,
            runs.seconds_degradation
        ),
    }
}

// ---------------------------------------------------------------- AC7 ----

fn ac7_scaling(root: &Path) -> Verdict {
    let start = Instant::now();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let config = ScalingConfig {
        dataset: dataset("concrete"),
        method: "ident".parse().unwrap(),
        num_false: 4,
        fractions: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        repeats: 5,
        base_seed: 0,
        model: ModelKind::Mlp,
        grid: GridSpec::default(),
    };
    let dir = root.join("concrete-scaling");
    if let Err(e) = scaling::run(&config, &dir, workers) {
        return Verdict {
            pass: false,
            detail: e.to_string(),
        };
    }
    let text = std::fs::read_to_string(dir.join("scaling.csv")).unwrap();
    let points = plr_core::report::parse_scaling_csv(&text).unwrap();
    let means: Vec<f64> = points.iter().map(|p| p.mean_mse).collect();
    let inversions = means.windows(2).filter(|w| w[1] > w[0]).count();
    let elapsed = start.elapsed();
    Verdict {
        pass: means.last() <= means.first() && inversions <= 1 && within(elapsed, 600),
        detail: format!(
            "Concrete IDent |S|=4 mean MSE by fraction: {}; {inversions} inversion(s), {:.0}s",
            means.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    }
}

// ---------------------------------------------------------------- AC8 ----

fn ac8_determinism(root: &Path) -> Verdict {
    let mut grid = GridSpec::default();
    grid.epochs = 20;
    let config = BenchConfig {
        datasets: vec![dataset("concrete")],
        methods: vec!["ident".parse().unwrap(), "pident".parse().unwrap()],
        num_false: vec![2],
        repeats: 2,
        base_seed: 3,
        model: ModelKind::Linear,
        grid,
    };
    let first = root.join("det-a");
    let again = root.join("det-b");
    let parallel = root.join("det-c");
    let step = || -> Result<(), String> {
        bench::run(&config, &first, 1).map_err(|e| e.to_string())?;
        let manifest = RunManifest::load(&first.join(MANIFEST_FILE)).map_err(|e| e.to_string())?;
        let Resolved::Bench(replayed) = manifest.resolved else {
            return Err("manifest does not hold a bench config".into());
        };
        bench::run(&replayed, &again, 1).map_err(|e| e.to_string())?;
        bench::run(&config, &parallel, 4).map_err(|e| e.to_string())?;
        Ok(())
    };
    if let Err(e) = step() {
        return Verdict { pass: false, detail: e };
    }
    let read = |d: &Path| std::fs::read(d.join(bench::RESULTS_FILE)).unwrap();
    let sorted = |bytes: Vec<u8>| {
        let mut lines: Vec<String> = String::from_utf8(bytes).unwrap().lines().map(String::from).collect();
        lines.sort();
        lines
    };
    let a = read(&first);
    let identical = a == read(&again);
    let parallel_agrees = sorted(a.clone()) == sorted(read(&parallel));
    let lines = a.iter().filter(|&&b| b == b'\n').count();
    Verdict {
        pass: identical && parallel_agrees && lines == 4,
        detail: format!(
            "{lines} trials; replayed store byte-identical: {identical}; 1 vs 4 workers agree: {parallel_agrees}"
        ),
    }
}

fn main() {
    // `cargo test -- --list` and filters probe test binaries; nothing to list here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let mut results: Vec<(&str, &str, Verdict)> = Vec::new();
    let mut report = |id: &'static str, name: &'static str, v: Verdict| {
        println!("{} {id} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };
    report("AC1", "gradient correctness", ac1_gradients());
    report("AC2", "weighting function", ac2_weights());
    report("AC3", "sandwich property", ac3_sandwich());
    report("AC4", "identification on synthetic data", ac4_identification());
    report("AC8", "determinism", ac8_determinism(root));
    report("AC7", "scaling trend", ac7_scaling(root));
    let runs = abalone_runs(root);
    report("AC5", "table trend on Abalone", ac5_table_trend(&runs));
    report("AC6", "degradation with more false labels", ac6_degradation(&runs));

    let failed: Vec<&str> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
