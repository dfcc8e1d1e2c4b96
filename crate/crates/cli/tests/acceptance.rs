//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use levy_cumulants::bell::{self, BellEvaluator, SubordinatedModel};
use levy_cumulants::mc::{self, SimulationModel, SimulationPlan};
use levy_cumulants::multiindex::enumerate_partitions;
use levy_cumulants::providers::{ig_cumulant, JointCumulantProvider, UnivariateCumulants};
use levy_cumulants::rho_alpha::{linear_grid, polynomial_fit_residual, RhoAlphaNigModel, DEFAULT_TIMES};
use levy_cumulants::{MultiIndex, OrderCap};
use nalgebra::DMatrix;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PARTITION_TIME_LIMIT: Duration = Duration::from_secs(1);
const ENGINE_MODELS: usize = 200;
const ENGINE_MAX_ORDER: u32 = 6;
const ENGINE_TOLERANCE: f64 = 1e-10;
const ENGINE_TIME_LIMIT: Duration = Duration::from_secs(60);
const UNIVARIATE_DRAWS: usize = 50;
const UNIVARIATE_TOLERANCE: f64 = 1e-12;
const MARGINAL_MAX_ORDER: u32 = 8;
const MARGINAL_TOLERANCE: f64 = 1e-12;
const TIME_SCALING_TOLERANCE: f64 = 1e-12;
const RHO_GRID_POINTS: usize = 41;
const FIT_TOLERANCE: f64 = 1e-10;
const A_LINEARITY_TOLERANCE: f64 = 1e-12;
const CORRELATION_TARGET: f64 = 0.5;
const CORRELATION_TOLERANCE: f64 = 0.05;
const MC_PATHS: usize = 1_000_000;
const MC_SEED: u64 = 20_240_601;
const MC_BAND: f64 = 4.0;
const MC_MAX_ORDER: u32 = 4;
const MC_TIME_LIMIT: Duration = Duration::from_secs(300);

type Outcome = Result<String, String>;

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

fn rel_err(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- 1: partition combinatorics against brute force ----

fn set_partitions(len: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, len: usize, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=blocks {
            prefix.push(b);
            grow(prefix, len, blocks.max(b + 1), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), len, 0, &mut out);
    out
}

fn brute_force(i: &MultiIndex) -> BTreeMap<Vec<MultiIndex>, u64> {
    let colours: Vec<usize> = i
        .components()
        .iter()
        .enumerate()
        .flat_map(|(m, &c)| std::iter::repeat_n(m, c as usize))
        .collect();
    let mut counts = BTreeMap::new();
    for assignment in set_partitions(colours.len()) {
        let blocks = assignment.iter().max().map_or(0, |b| b + 1);
        let mut cols = vec![vec![0u32; i.len()]; blocks];
        for (e, &b) in assignment.iter().enumerate() {
            cols[b][colours[e]] += 1;
        }
        let mut key: Vec<MultiIndex> = cols.into_iter().map(MultiIndex::new).collect();
        key.sort();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

fn criterion_partitions() -> Outcome {
    let indices: Vec<MultiIndex> = (1..=3).flat_map(|n| MultiIndex::all_up_to(n, 6)).collect();
    let start = Instant::now();
    let enumerated: Vec<_> = indices
        .iter()
        .map(|i| enumerate_partitions(i, OrderCap::default()).unwrap())
        .collect();
    let elapsed = start.elapsed();
    for (i, parts) in indices.iter().zip(&enumerated) {
        let oracle = brute_force(i);
        ensure(parts.len() == oracle.len(), || {
            format!("{i}: {} partitions, brute force {}", parts.len(), oracle.len())
        })?;
        for p in parts {
            let mut cols: Vec<MultiIndex> = p
                .parts()
                .flat_map(|(c, r)| std::iter::repeat_n(c.clone(), r as usize))
                .collect();
            cols.sort();
            let want = oracle.get(&cols).ok_or_else(|| format!("{p} is not a partition of {i}"))?;
            ensure(p.set_partition_count() == BigUint::from(*want), || {
                format!("{p}: count {} vs brute force {want}", p.set_partition_count())
            })?;
        }
    }
    let univariate: Vec<usize> = (0..=6)
        .map(|k| enumerate_partitions(&mi(&[k]), OrderCap::default()).unwrap().len())
        .collect();
    ensure(univariate == [1, 1, 2, 3, 5, 7, 11], || format!("univariate counts {univariate:?}"))?;
    ensure(elapsed < PARTITION_TIME_LIMIT, || format!("enumeration took {elapsed:?}"))?;
    Ok(format!(
        "{} indices match brute force, univariate {univariate:?}, {elapsed:.2?}",
        indices.len()
    ))
}

// ---- 2: Bell engine against series composition ----

fn random_ig<R: Rng>(rng: &mut R) -> UnivariateCumulants {
    UnivariateCumulants::inverse_gaussian(rng.random_range(0.2..2.0), rng.random_range(0.5..2.0)).unwrap()
}

fn random_model<R: Rng>(rng: &mut R) -> SubordinatedModel {
    let n = rng.random_range(1..=3);
    let d = rng.random_range(1..=3);
    let matrix = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
    let bases = (0..d)
        .map(|_| match rng.random_range(0..3) {
            0 => UnivariateCumulants::gaussian(rng.random_range(-0.5..0.5), rng.random_range(0.1..1.5)).unwrap(),
            1 => random_ig(rng),
            _ => UnivariateCumulants::Table((0..ENGINE_MAX_ORDER).map(|_| rng.random_range(-1.0..1.0)).collect()),
        })
        .collect();
    let clock = match rng.random_range(0..3) {
        0 => JointCumulantProvider::Independent((0..d).map(|_| random_ig(rng)).collect()),
        1 => JointCumulantProvider::Comonotone { dim: d, base: random_ig(rng) },
        _ => JointCumulantProvider::Tabulated {
            dim: d,
            max_order: ENGINE_MAX_ORDER,
            values: MultiIndex::all_up_to(d, ENGINE_MAX_ORDER)
                .into_iter()
                .map(|j| (j, rng.random_range(-1.0..1.0)))
                .collect::<HashMap<_, _>>(),
        },
    };
    SubordinatedModel::new(matrix, bases, clock).unwrap()
}

fn criterion_engine_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let (mut worst, mut compared) = (0.0f64, 0usize);
    for m in 0..ENGINE_MODELS {
        let model = random_model(&mut rng);
        let series = model.cgf_series(ENGINE_MAX_ORDER).map_err(|e| e.to_string())?;
        let mut engine = BellEvaluator::new(&model);
        for i in MultiIndex::all_up_to(model.dim_output(), ENGINE_MAX_ORDER) {
            let (x, y) = (engine.cumulant(&i).map_err(|e| e.to_string())?, series.coefficient(&i));
            let err = rel_err(x, y);
            worst = worst.max(err);
            compared += 1;
            ensure(err <= ENGINE_TOLERANCE, || format!("model {m} index {i}: engine {x:e} series {y:e}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < ENGINE_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{ENGINE_MODELS} models, {compared} cumulants, worst rel err {worst:.1e}, {elapsed:.2?}"
    ))
}

// ---- 3: univariate closed forms ----

fn criterion_univariate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for draw in 0..UNIVARIATE_DRAWS {
        let clock = random_ig(&mut rng);
        let mu: f64 = rng.random_range(-1.0..1.0);
        let sigma: f64 = rng.random_range(0.1..1.5);
        let s2 = sigma * sigma;
        let k = |n| clock.cumulant(n).unwrap();
        let expected = [
            (2, s2 * k(1) + mu * mu * k(2)),
            (3, mu.powi(3) * k(3) + 3.0 * mu * s2 * k(2)),
            (4, mu.powi(4) * k(4) + 6.0 * mu * mu * s2 * k(3) + 3.0 * s2 * s2 * k(2)),
        ];
        for (n, want) in expected {
            let got = bell::cumulant_univariate(mu, s2, &clock, n).map_err(|e| e.to_string())?;
            let err = rel_err(got, want);
            worst = worst.max(err);
            ensure(err <= UNIVARIATE_TOLERANCE, || format!("draw {draw} order {n}: {got:e} vs {want:e}"))?;
        }
    }
    Ok(format!("{UNIVARIATE_DRAWS} draws, orders 2-4, worst rel err {worst:.1e}"))
}

// ---- 4: IG convolution keeps the marginals NIG ----

fn criterion_marginals() -> Outcome {
    let mut worst = 0.0f64;
    for a in [0.1, 1.05, 2.1] {
        for rho in [-1.0, 0.0, 0.5, 1.0] {
            let m = RhoAlphaNigModel::reference_pair(a, rho).map_err(|e| e.to_string())?;
            for j in 0..2 {
                let b = m.clock_rate(j);
                let nig_clock = UnivariateCumulants::inverse_gaussian(1.0, b).unwrap();
                for k in 1..=MARGINAL_MAX_ORDER {
                    let clock_sum = m.idiosyncratic_clock(j).cumulant(k).unwrap()
                        + m.alpha(j).powi(k as i32) * m.common_clock().cumulant(k).unwrap();
                    let target = ig_cumulant(1.0, b, k).unwrap();
                    let mut e = vec![0; 2];
                    e[j] = k;
                    let marginal = m.cumulant(&MultiIndex::new(e), 1.0).unwrap();
                    let nig = bell::cumulant_univariate(m.mu(j), m.sigma(j).powi(2), &nig_clock, k).unwrap();
                    for (what, got, want) in [("clock", clock_sum, target), ("marginal", marginal, nig)] {
                        let err = rel_err(got, want);
                        worst = worst.max(err);
                        ensure(err <= MARGINAL_TOLERANCE, || {
                            format!("{what} a={a} rho={rho} j={j} k={k}: {got:e} vs {want:e}")
                        })?;
                    }
                }
            }
        }
    }
    Ok(format!("a in {{0.1, 1.05, 2.1}}, k <= {MARGINAL_MAX_ORDER}, worst rel err {worst:.1e}"))
}

// ---- 5: time scaling, polynomial dependence on rho, linearity in a ----

fn criterion_structure() -> Outcome {
    let m = RhoAlphaNigModel::reference_pair(1.05, 0.5).map_err(|e| e.to_string())?;
    let mut worst_t = 0.0f64;
    for (i, power) in [(mi(&[1, 1]), 0.0), (mi(&[1, 2]), 0.5), (mi(&[1, 3]), 1.0), (mi(&[2, 2]), 1.0)] {
        let scaled: Vec<f64> = DEFAULT_TIMES
            .iter()
            .map(|&t| m.normalized_cumulant(&i, t).unwrap() * t.powf(power))
            .collect();
        for v in &scaled {
            let err = rel_err(*v, scaled[0]);
            worst_t = worst_t.max(err);
            ensure(err <= TIME_SCALING_TOLERANCE, || format!("time scaling {i}: {scaled:?}"))?;
        }
    }

    let grid = linear_grid(-1.0, 1.0, RHO_GRID_POINTS).map_err(|e| e.to_string())?;
    let mut worst_fit = 0.0f64;
    for (i, degree) in [(mi(&[1, 1]), 1), (mi(&[1, 2]), 1), (mi(&[1, 3]), 1), (mi(&[2, 2]), 2)] {
        let ys: Vec<f64> = grid
            .iter()
            .map(|&r| m.with_rho12(r).unwrap().normalized_cumulant(&i, 1.0).unwrap())
            .collect();
        let res = polynomial_fit_residual(&grid, &ys, degree).map_err(|e| e.to_string())?;
        worst_fit = worst_fit.max(res);
        ensure(res <= FIT_TOLERANCE, || format!("degree-{degree} fit of {i}: residual {res:e}"))?;
    }

    let mut worst_a = 0.0f64;
    let base = m.with_a(1.0).unwrap();
    for a in [0.1, 0.5, 1.05, 2.1] {
        let scaled = m.with_a(a).unwrap();
        for i in MultiIndex::all_up_to(2, 6).into_iter().filter(|i| i.support_size() == 2) {
            let ratio = scaled.cumulant(&i, 1.0).unwrap() / base.cumulant(&i, 1.0).unwrap();
            let err = rel_err(ratio, a);
            worst_a = worst_a.max(err);
            ensure(err <= A_LINEARITY_TOLERANCE, || format!("a-ratio {i} at a={a}: {ratio}"))?;
        }
    }
    Ok(format!(
        "time scaling {worst_t:.1e}, max fit residual {worst_fit:.1e}, a-linearity {worst_a:.1e}"
    ))
}

// ---- 6: attainable correlation levels ----

fn max_correlation(a: f64) -> Result<(f64, Vec<f64>), String> {
    let grid = linear_grid(-1.0, 1.0, RHO_GRID_POINTS).map_err(|e| e.to_string())?;
    let values: Vec<f64> = grid
        .iter()
        .map(|&r| {
            RhoAlphaNigModel::reference_pair(a, r)
                .and_then(|m| m.normalized_cumulant(&mi(&[1, 1]), 1.0))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok((values.iter().cloned().fold(f64::NEG_INFINITY, f64::max), values))
}

fn criterion_correlation_levels() -> Outcome {
    let (mid, mid_curve) = max_correlation(1.05)?;
    ensure((mid - CORRELATION_TARGET).abs() <= CORRELATION_TOLERANCE, || {
        format!("a = 1.05: max correlation {mid}")
    })?;
    let (top, top_curve) = max_correlation(2.1)?;
    let ceiling = RhoAlphaNigModel::reference_pair(2.1, 0.0)
        .and_then(|m| m.max_attainable_correlation())
        .map_err(|e| e.to_string())?;
    ensure((top - ceiling).abs() <= CORRELATION_TOLERANCE, || {
        format!("a = 2.1: max correlation {top}, model maximum {ceiling}")
    })?;
    // the plotted curves increase in rho and co-skewness decays like t^{-1/2}
    for curve in [&mid_curve, &top_curve] {
        ensure(curve.windows(2).all(|w| w[1] > w[0]), || "correlation not increasing in rho".into())?;
    }
    let m = RhoAlphaNigModel::reference_pair(1.05, 0.5).unwrap();
    let skew: Vec<f64> = DEFAULT_TIMES
        .iter()
        .map(|&t| m.normalized_cumulant(&mi(&[1, 2]), t).unwrap().abs())
        .collect();
    ensure(skew.windows(2).all(|w| w[1] < w[0]), || format!("co-skewness not decaying: {skew:?}"))?;
    Ok(format!(
        "a = 1.05: max {mid:.4}; a = 2.1: max {top:.4} vs model maximum {ceiling:.4}"
    ))
}

// ---- 7: Monte Carlo ----

fn criterion_monte_carlo() -> Outcome {
    let model = RhoAlphaNigModel::reference_pair(1.05, 0.5).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let plan = SimulationPlan {
        model: SimulationModel::RhoAlpha(model.clone()),
        t: 1.0,
        num_paths: MC_PATHS,
        seed: MC_SEED,
        num_workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let est = mc::run(&plan, MC_MAX_ORDER).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in MultiIndex::all_up_to(2, MC_MAX_ORDER) {
        let analytic = model.cumulant(&i, 1.0).unwrap();
        let (e, se) = (est.estimate(&i).unwrap(), est.standard_error(&i).unwrap());
        let z = (e - analytic).abs() / se;
        worst = worst.max(z);
        count += 1;
        ensure(z <= MC_BAND, || format!("{i}: estimate {e:e} analytic {analytic:e} se {se:e} ({z:.2} se)"))?;
    }
    ensure(elapsed < MC_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{count} cumulants, {MC_PATHS} paths, worst {worst:.2} se, {elapsed:.2?}"))
}

// ---- 8: scan determinism ----

fn criterion_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("levycum-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (run, workers) in [(0, "1"), (1, "1"), (2, "4"), (3, "4")] {
        let path = dir.join(format!("scan{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_levycum"))
            .args(["scan", "--param", "rho", "--from", "-1", "--to", "1", "--steps", "41", "--orders", "4"])
            .args(["--format", "csv", "--workers", workers, "--out"])
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("scan exited with {status}"))?;
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(outputs.iter().all(|o| o == &outputs[0]), || "scan outputs differ".into())?;
    Ok(format!(
        "4 runs (workers 1, 1, 4, 4) byte-identical, {} bytes",
        outputs[0].len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("partition combinatorics", criterion_partitions),
        ("engine vs series oracle", criterion_engine_oracle),
        ("univariate closed forms", criterion_univariate),
        ("IG convolution / NIG marginals", criterion_marginals),
        ("normalized cumulant structure", criterion_structure),
        ("attainable correlation", criterion_correlation_levels),
        ("Monte Carlo agreement", criterion_monte_carlo),
        ("scan determinism", criterion_determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
