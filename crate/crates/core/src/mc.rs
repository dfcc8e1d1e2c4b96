//! Monte Carlo check on the closed forms: simulate subordinated Brownian
//! increments and estimate joint cumulants from sample moments.
//!
//! Every path draws from its own ChaCha stream selected by the path index, so
//! the output depends on `(model, t, num_paths, seed)` only and not on the
//! number of worker threads.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use rayon::prelude::*;

use crate::bell::SubordinatedModel;
use crate::error::{Error, Result};
use crate::multiindex::{enumerate_partitions, MultiIndex, OrderCap};
use crate::providers::{JointCumulantProvider, UnivariateCumulants};
use crate::rho_alpha::RhoAlphaNigModel;

/// Fewest samples accepted by [`estimate_cumulants`].
pub const MIN_SAMPLES: usize = 10_000;

/// Default number of batches used for standard errors.
pub const DEFAULT_BATCHES: usize = 100;

/// Draws from `IG(a, b)` (mean `a/b`, variance `a/b³`). In the mean/shape
/// parameterization this is `IG(μ = a/b, λ = a²)`.
#[derive(Debug, Clone, Copy)]
pub struct IgSampler {
    inner: Option<InverseGaussian<f64>>,
}

impl IgSampler {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        UnivariateCumulants::inverse_gaussian(a, b)?;
        let inner = InverseGaussian::new(a / b, a * a)
            .map_err(|e| Error::invalid(format!("inverse Gaussian parameters ({a}, {b}): {e}")))?;
        Ok(IgSampler { inner: Some(inner) })
    }

    /// Sampler for a subordinator law: IG or the zero process.
    pub fn for_law(law: &UnivariateCumulants) -> Result<Self> {
        match law {
            UnivariateCumulants::InverseGaussian { a, b } => Self::new(*a, *b),
            UnivariateCumulants::Zero => Ok(IgSampler { inner: None }),
            other => Err(Error::Unsupported(format!("cannot sample subordinator law {other:?}"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Some(d) => d.sample(rng),
            None => 0.0,
        }
    }
}

/// `count` i.i.d. draws from `IG(a, b)`.
pub fn sample_ig(a: f64, b: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = IgSampler::new(a, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}

/// Symmetric square root factor `L` with `L Lᵀ = cov`; eigenvalues down to
/// `-1e-12 · max|λ|` are clamped to zero.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let min_eigenvalue = eig.eigenvalues.min();
    if min_eigenvalue < -1e-12 * scale {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// A model that can be simulated.
#[derive(Debug, Clone)]
pub enum SimulationModel {
    RhoAlpha(RhoAlphaNigModel),
    /// Gaussian bases with an independent or comonotone IG clock.
    Subordinated(SubordinatedModel),
}

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub model: SimulationModel,
    pub t: f64,
    pub num_paths: usize,
    pub seed: u64,
    pub num_workers: usize,
}

/// Per-path `n`-dimensional increments, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    dim: usize,
    values: Vec<f64>,
}

impl Increments {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid("increment buffer is not a whole number of rows"));
        }
        Ok(Increments { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        self.rows().map(|r| r[m]).collect()
    }
}

// Everything a path needs, resolved up front so path generation cannot fail.
enum PathKernel {
    RhoAlpha {
        idiosyncratic: Vec<IgSampler>,
        drift: Vec<f64>,
        sigma: Vec<f64>,
        common: IgSampler,
        common_drift: Vec<f64>,
        common_factor: DMatrix<f64>,
    },
    Subordinated {
        clocks: ClockSampler,
        means: Vec<f64>,
        sds: Vec<f64>,
        matrix: DMatrix<f64>,
    },
}

enum ClockSampler {
    Independent(Vec<IgSampler>),
    Comonotone { dim: usize, sampler: IgSampler },
}

impl PathKernel {
    fn build(model: &SimulationModel, t: f64) -> Result<Self> {
        match model {
            SimulationModel::RhoAlpha(m) => {
                let n = m.dim();
                let idiosyncratic = (0..n)
                    .map(|j| IgSampler::for_law(&m.idiosyncratic_clock(j).at_time(t)?))
                    .collect::<Result<Vec<_>>>()?;
                let cov = m.common_covariance();
                let cov = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
                Ok(PathKernel::RhoAlpha {
                    idiosyncratic,
                    drift: (0..n).map(|j| m.mu(j)).collect(),
                    sigma: (0..n).map(|j| m.sigma(j)).collect(),
                    common: IgSampler::for_law(&m.common_clock().at_time(t)?)?,
                    common_drift: m.common_drift(),
                    common_factor: psd_factor(&cov)?,
                })
            }
            SimulationModel::Subordinated(m) => {
                let mut means = Vec::new();
                let mut sds = Vec::new();
                for (k, b) in m.bases().iter().enumerate() {
                    match b {
                        UnivariateCumulants::Gaussian { mean, variance } => {
                            means.push(*mean);
                            sds.push(variance.sqrt());
                        }
                        _ => return Err(Error::Unsupported(format!("base process {k} is not Gaussian"))),
                    }
                }
                let clocks = match m.clock() {
                    JointCumulantProvider::Independent(laws) => ClockSampler::Independent(
                        laws.iter()
                            .map(|l| IgSampler::for_law(&l.at_time(t)?))
                            .collect::<Result<_>>()?,
                    ),
                    JointCumulantProvider::Comonotone { dim, base } => ClockSampler::Comonotone {
                        dim: *dim,
                        sampler: IgSampler::for_law(&base.at_time(t)?)?,
                    },
                    JointCumulantProvider::Tabulated { .. } => {
                        return Err(Error::Unsupported("cannot simulate a tabulated clock".into()))
                    }
                };
                Ok(PathKernel::Subordinated {
                    clocks,
                    means,
                    sds,
                    matrix: m.matrix().clone(),
                })
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            PathKernel::RhoAlpha { drift, .. } => drift.len(),
            PathKernel::Subordinated { matrix, .. } => matrix.nrows(),
        }
    }

    fn fill<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            PathKernel::RhoAlpha {
                idiosyncratic,
                drift,
                sigma,
                common,
                common_drift,
                common_factor,
            } => {
                for (j, y) in out.iter_mut().enumerate() {
                    let x = idiosyncratic[j].sample(rng);
                    let n: f64 = rng.sample(StandardNormal);
                    *y = drift[j] * x + sigma[j] * x.sqrt() * n;
                }
                let z = common.sample(rng);
                let root = z.sqrt();
                let k = common_factor.ncols();
                let normals: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                for (j, y) in out.iter_mut().enumerate() {
                    let mut w = 0.0;
                    for (c, e) in normals.iter().enumerate() {
                        w += common_factor[(j, c)] * e;
                    }
                    *y += common_drift[j] * z + root * w;
                }
            }
            PathKernel::Subordinated {
                clocks,
                means,
                sds,
                matrix,
            } => {
                let d = means.len();
                let times: Vec<f64> = match clocks {
                    ClockSampler::Independent(s) => s.iter().map(|s| s.sample(rng)).collect(),
                    ClockSampler::Comonotone { dim, sampler } => vec![sampler.sample(rng); *dim],
                };
                let mut z = vec![0.0; d];
                for k in 0..d {
                    let n: f64 = rng.sample(StandardNormal);
                    z[k] = means[k] * times[k] + sds[k] * times[k].sqrt() * n;
                }
                for (m, y) in out.iter_mut().enumerate() {
                    *y = (0..d).map(|k| matrix[(m, k)] * z[k]).sum();
                }
            }
        }
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// One increment over `[0, t]` per path.
pub fn simulate_increments(plan: &SimulationPlan) -> Result<Increments> {
    if !(plan.t > 0.0) || !plan.t.is_finite() {
        return Err(Error::invalid(format!("time must be positive, got {}", plan.t)));
    }
    if plan.num_paths == 0 {
        return Err(Error::invalid("at least one path is required"));
    }
    let kernel = PathKernel::build(&plan.model, plan.t)?;
    let dim = kernel.dim();
    let mut values = vec![0.0; plan.num_paths * dim];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.num_workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        values.par_chunks_mut(dim).enumerate().for_each(|(p, row)| {
            let mut rng = path_rng(plan.seed, p);
            kernel.fill(&mut rng, row);
        });
    });
    Increments::new(dim, values)
}

/// Joint cumulant estimates with batch standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCumulants {
    pub estimates: BTreeMap<MultiIndex, f64>,
    pub standard_errors: BTreeMap<MultiIndex, f64>,
    pub num_samples: usize,
}

impl EmpiricalCumulants {
    pub fn estimate(&self, i: &MultiIndex) -> Option<f64> {
        self.estimates.get(i).copied()
    }

    pub fn standard_error(&self, i: &MultiIndex) -> Option<f64> {
        self.standard_errors.get(i).copied()
    }
}

/// `κ_i = Σ_{Λ ⊢ i} (−1)^{l−1} (l−1)! · i!/(Λ! m(Λ)!) · ∏ μ_λ^r`.
pub fn moments_to_cumulant(moment: impl Fn(&MultiIndex) -> f64, i: &MultiIndex) -> Result<f64> {
    let mut total = 0.0;
    for p in enumerate_partitions(i, OrderCap::default())? {
        let l = p.length();
        if l == 0 {
            continue;
        }
        let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
        let mobius = sign * (1..l).map(|x| x as f64).product::<f64>();
        let count = p.set_partition_count().to_f64().expect("finite count");
        total += mobius * count * p.associated_product(&moment);
    }
    Ok(total)
}

/// `μ_i = Σ_{Λ ⊢ i} i!/(Λ! m(Λ)!) · ∏ κ_λ^r`.
pub fn cumulants_to_moment(cumulant: impl Fn(&MultiIndex) -> f64, i: &MultiIndex) -> Result<f64> {
    let mut total = 0.0;
    for p in enumerate_partitions(i, OrderCap::default())? {
        if p.is_empty() {
            continue;
        }
        let count = p.set_partition_count().to_f64().expect("finite count");
        total += count * p.associated_product(&cumulant);
    }
    Ok(total)
}

// Mean and cumulants of orders 2..=max_order for one block of rows.
fn block_cumulants(data: &Increments, range: std::ops::Range<usize>, indices: &[MultiIndex]) -> Result<Vec<f64>> {
    let n = data.dim();
    let count = range.len() as f64;
    let mut mean = vec![0.0; n];
    for p in range.clone() {
        for (m, v) in data.row(p).iter().enumerate() {
            mean[m] += v;
        }
    }
    for v in &mut mean {
        *v /= count;
    }
    let higher: Vec<&MultiIndex> = indices.iter().filter(|i| i.order() >= 2).collect();
    let mut sums = vec![0.0; higher.len()];
    let mut centered = vec![0.0; n];
    for p in range {
        for (m, v) in data.row(p).iter().enumerate() {
            centered[m] = v - mean[m];
        }
        for (s, i) in sums.iter_mut().zip(&higher) {
            *s += i.monomial(&centered);
        }
    }
    let central: HashMap<&MultiIndex, f64> = higher.iter().copied().zip(sums.iter().map(|s| s / count)).collect();
    let moment = |j: &MultiIndex| -> f64 {
        if j.order() == 1 {
            0.0
        } else {
            central[j]
        }
    };
    indices
        .iter()
        .map(|i| match i.order() {
            1 => Ok(mean[i.concentrated_on().expect("unit index")]),
            _ => moments_to_cumulant(moment, i),
        })
        .collect()
}

/// Cumulant estimates for every `1 ≤ |i| ≤ max_order` from the full sample,
/// with standard errors from `batches` contiguous batches.
pub fn estimate_cumulants(samples: &Increments, max_order: u32, batches: usize) -> Result<EmpiricalCumulants> {
    let total = samples.len();
    if total < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: total,
        });
    }
    if batches < 2 || batches > total {
        return Err(Error::invalid(format!("batch count {batches} out of range")));
    }
    let indices = MultiIndex::all_up_to(samples.dim(), max_order);
    let full = block_cumulants(samples, 0..total, &indices)?;
    let per_batch = (0..batches)
        .map(|b| block_cumulants(samples, b * total / batches..(b + 1) * total / batches, &indices))
        .collect::<Result<Vec<_>>>()?;

    let mut estimates = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    let bf = batches as f64;
    for (k, i) in indices.into_iter().enumerate() {
        let mean = per_batch.iter().map(|v| v[k]).sum::<f64>() / bf;
        let var = per_batch.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (bf - 1.0);
        estimates.insert(i.clone(), full[k]);
        standard_errors.insert(i, (var / bf).sqrt());
    }
    Ok(EmpiricalCumulants {
        estimates,
        standard_errors,
        num_samples: total,
    })
}

/// Simulates `plan` and estimates cumulants up to `max_order`.
pub fn run(plan: &SimulationPlan, max_order: u32) -> Result<EmpiricalCumulants> {
    let samples = simulate_increments(plan)?;
    estimate_cumulants(&samples, max_order, DEFAULT_BATCHES)
}
