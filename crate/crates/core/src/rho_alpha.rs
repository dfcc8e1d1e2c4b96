//! The ρα-model with NIG marginals.
//!
//! Each component is `Y_j(t) = B_j(X_j(t)) + B^ρ_j(Z(t))`: an idiosyncratic
//! Brownian motion on its own IG clock plus one coordinate of a correlated
//! Brownian motion on a common IG clock. With
//!
//! ```text
//! α_j^{-1/2} = δ_j √(γ_j² − β_j²),   μ_j = β_j δ_j²,   σ_j = δ_j,
//! X_j ~ IG(1 − a√α_j, α_j^{-1/2}),   Z ~ IG(a, 1),
//! ```
//!
//! every marginal is `NIG(γ_j, δ_j, β_j)` at `t = 1` whatever `a` and `ρ`.
//!
//! The cgf splits as `Σ_j K_{X_j}(μ_j z_j + σ_j² z_j²/2) + K_Z(zᵀμ^ρ + ½zᵀΣ^ρz)`,
//! so cross cumulants come from the common part alone and marginal cumulants
//! add one univariate term.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::bell::{cumulant_quadratic_inner, cumulant_univariate, SubordinatedModel};
use crate::error::{Error, Result};
use crate::multiindex::{MultiIndex, OrderCap};
use crate::providers::{JointCumulantProvider, UnivariateCumulants};
use crate::series::TruncatedSeries;

/// Default maturities in years: one day, one month, one year (252 trading days).
pub const DEFAULT_TIMES: [f64; 3] = [1.0 / 252.0, 21.0 / 252.0, 1.0];

/// Eigenvalue slack accepted when checking positive semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RhoAlphaNigModel {
    gamma: Vec<f64>,
    delta: Vec<f64>,
    beta: Vec<f64>,
    rho: DMatrix<f64>,
    a: f64,
}

impl RhoAlphaNigModel {
    pub fn new(gamma: Vec<f64>, delta: Vec<f64>, beta: Vec<f64>, rho: DMatrix<f64>, a: f64) -> Result<Self> {
        let n = gamma.len();
        if n == 0 {
            return Err(Error::invalid("model needs at least one asset"));
        }
        for (name, v) in [("delta", &delta), ("beta", &beta)] {
            if v.len() != n {
                return Err(Error::invalid(format!("{name} has {} entries, gamma has {n}", v.len())));
            }
        }
        for j in 0..n {
            let (g, d, b) = (gamma[j], delta[j], beta[j]);
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::invalid(format!("gamma[{j}] must be positive, got {g}")));
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::invalid(format!("delta[{j}] must be positive, got {d}")));
            }
            if !(b.abs() < g) {
                return Err(Error::invalid(format!("|beta[{j}]| must be below gamma[{j}], got {b}")));
            }
        }
        check_correlation(&rho, n)?;
        let model = RhoAlphaNigModel {
            gamma,
            delta,
            beta,
            rho,
            a,
        };
        model.check_a(a)?;
        Ok(model)
    }

    /// Two-asset reference parameters (the shipped default config) with the
    /// given `a` and `ρ_12`.
    pub fn reference_pair(a: f64, rho12: f64) -> Result<Self> {
        Self::new(
            vec![85.4175, 64.2544],
            vec![0.0248, 0.0335],
            vec![-8.8886, -13.5988],
            correlation_2x2(rho12),
            a,
        )
    }

    fn check_a(&self, a: f64) -> Result<()> {
        let a_max = self.a_max();
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::invalid(format!("common clock weight a must be positive, got {a}")));
        }
        if a > a_max * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("a = {a} exceeds a_max = {a_max}")));
        }
        Ok(())
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        let mut m = self.clone();
        m.check_a(a)?;
        m.a = a;
        Ok(m)
    }

    /// Same model with `ρ_12 = ρ_21 = rho12`.
    pub fn with_rho12(&self, rho12: f64) -> Result<Self> {
        if self.dim() < 2 {
            return Err(Error::invalid("rho_12 needs at least two assets"));
        }
        let mut rho = self.rho.clone();
        rho[(0, 1)] = rho12;
        rho[(1, 0)] = rho12;
        check_correlation(&rho, self.dim())?;
        let mut m = self.clone();
        m.rho = rho;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `α_j^{-1/2} = δ_j √(γ_j² − β_j²)`, the rate of the marginal NIG clock.
    pub fn clock_rate(&self, j: usize) -> f64 {
        self.delta[j] * (self.gamma[j].powi(2) - self.beta[j].powi(2)).sqrt()
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.clock_rate(j).powi(-2)
    }

    /// Brownian drift `μ_j = β_j δ_j²`.
    pub fn mu(&self, j: usize) -> f64 {
        self.beta[j] * self.delta[j] * self.delta[j]
    }

    pub fn sigma(&self, j: usize) -> f64 {
        self.delta[j]
    }

    /// Largest admissible `a`: `min_j α_j^{-1/2}`.
    pub fn a_max(&self) -> f64 {
        (0..self.dim()).map(|j| self.clock_rate(j)).fold(f64::INFINITY, f64::min)
    }

    /// Time-one law of `X_j`: `IG(1 − a√α_j, α_j^{-1/2})`, or the zero
    /// subordinator when the first parameter vanishes.
    pub fn idiosyncratic_clock(&self, j: usize) -> UnivariateCumulants {
        let rate = self.clock_rate(j);
        let shape = 1.0 - self.a / rate;
        if shape <= 1e-12 {
            UnivariateCumulants::Zero
        } else {
            UnivariateCumulants::InverseGaussian { a: shape, b: rate }
        }
    }

    /// Time-one law of `Z`: `IG(a, 1)`.
    pub fn common_clock(&self) -> UnivariateCumulants {
        UnivariateCumulants::InverseGaussian { a: self.a, b: 1.0 }
    }

    /// `μ^ρ = (μ_1 α_1, …, μ_n α_n)`.
    pub fn common_drift(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.mu(j) * self.alpha(j)).collect()
    }

    /// `Σ^ρ_{ij} = ρ_ij σ_i σ_j √(α_i α_j)`.
    pub fn common_covariance(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        self.rho[(i, j)] * self.sigma(i) * self.sigma(j) * (self.alpha(i) * self.alpha(j)).sqrt()
                    })
                    .collect()
            })
            .collect()
    }

    /// `c_i(Y(t)) = t · c_i(Y(1))`.
    pub fn cumulant(&self, i: &MultiIndex, t: f64) -> Result<f64> {
        if i.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: i.len(),
            });
        }
        if i.order() == 0 {
            return Err(Error::invalid("cumulants start at order 1"));
        }
        check_time(t)?;
        OrderCap::default().check(i)?;
        let common = cumulant_quadratic_inner(&self.common_drift(), &self.common_covariance(), &self.common_clock(), i)?;
        let idiosyncratic = match i.concentrated_on() {
            Some(m) => {
                let s = self.sigma(m);
                cumulant_univariate(self.mu(m), s * s, &self.idiosyncratic_clock(m), i.components()[m])?
            }
            None => 0.0,
        };
        Ok(t * (idiosyncratic + common))
    }

    /// Variance of `Y_j(t)`.
    pub fn marginal_variance(&self, j: usize, t: f64) -> Result<f64> {
        self.cumulant(&MultiIndex::unit(self.dim(), j).scaled(2), t)
    }

    /// `c_i(Y(t)) / ∏_m c_2(Y_m(t))^{i_m/2}`.
    pub fn normalized_cumulant(&self, i: &MultiIndex, t: f64) -> Result<f64> {
        let raw = self.cumulant(i, t)?;
        self.normalize(i, t, raw)
    }

    fn normalize(&self, i: &MultiIndex, t: f64, raw: f64) -> Result<f64> {
        let mut denom = 1.0;
        for (m, &e) in i.components().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let var = self.marginal_variance(m, t)?;
            if !(var > 0.0) {
                return Err(Error::invalid(format!("marginal variance of component {m} is zero")));
            }
            denom *= var.powf(e as f64 / 2.0);
        }
        Ok(raw / denom)
    }

    /// Largest attainable `c̄_{1,1}`: the value at `a = a_max`, `ρ_12 = 1`.
    pub fn max_attainable_correlation(&self) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::invalid("linear correlation bound is defined for two assets"));
        }
        let extreme = self.with_rho12(1.0)?.with_a(self.a_max())?;
        extreme.normalized_cumulant(&MultiIndex::new(vec![1, 1]), 1.0)
    }

    /// The cgf of `Y(1)` built by series composition of the additive split.
    pub fn cgf_series(&self, max_degree: u32) -> Result<TruncatedSeries> {
        let n = self.dim();
        let mut total = TruncatedSeries::zero(n, max_degree);
        for j in 0..n {
            let mut drift = vec![0.0; n];
            let mut cov = vec![vec![0.0; n]; n];
            drift[j] = self.mu(j);
            cov[j][j] = self.sigma(j).powi(2);
            let inner = TruncatedSeries::quadratic_form(&drift, &cov, max_degree);
            let outer = TruncatedSeries::cgf(max_degree, &self.idiosyncratic_clock(j))?;
            total = total.add(&outer.compose_outer(&[inner])?)?;
        }
        let inner = TruncatedSeries::quadratic_form(&self.common_drift(), &self.common_covariance(), max_degree);
        let common = TruncatedSeries::cgf(max_degree, &self.common_clock())?.compose_outer(&[inner])?;
        total.add(&common)
    }

    /// The model written as `A B(T)` with `d = 2n`: `A = [I | L]` where
    /// `L Lᵀ = Σ^ρ`, `T = (X_1, …, X_n, Z, …, Z)`, and the last `n` Brownian
    /// bases have unit variance and drift `L⁻¹ μ^ρ`. Needs `Σ^ρ` positive
    /// definite.
    pub fn as_subordinated_model(&self, max_order: u32) -> Result<SubordinatedModel> {
        let n = self.dim();
        let cov = self.common_covariance();
        let sigma = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
        let chol = sigma
            .cholesky()
            .ok_or_else(|| Error::invalid("common covariance is singular; embedding needs |ρ| < 1"))?;
        let l = chol.l();
        let nu = l
            .solve_lower_triangular(&DVector::from_vec(self.common_drift()))
            .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;

        let mut a = DMatrix::zeros(n, 2 * n);
        for i in 0..n {
            a[(i, i)] = 1.0;
            for j in 0..n {
                a[(i, n + j)] = l[(i, j)];
            }
        }
        let mut bases = Vec::with_capacity(2 * n);
        for j in 0..n {
            bases.push(UnivariateCumulants::gaussian(self.mu(j), self.sigma(j).powi(2))?);
        }
        for k in 0..n {
            bases.push(UnivariateCumulants::gaussian(nu[k], 1.0)?);
        }

        let mut values = std::collections::HashMap::new();
        let z = self.common_clock();
        for j in MultiIndex::all_up_to(2 * n, max_order) {
            let comps = j.components();
            let in_common = comps[..n].iter().all(|&c| c == 0);
            let v = if in_common {
                z.cumulant(j.order())?
            } else {
                match j.concentrated_on() {
                    Some(m) if m < n => self.idiosyncratic_clock(m).cumulant(j.order())?,
                    _ => 0.0,
                }
            };
            if v != 0.0 {
                values.insert(j, v);
            }
        }
        let clock = JointCumulantProvider::Tabulated {
            dim: 2 * n,
            max_order,
            values,
        };
        SubordinatedModel::new(a, bases, clock)
    }
}

pub fn correlation_2x2(rho12: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, rho12, rho12, 1.0])
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Symmetric, unit diagonal, entries in `[-1, 1]`, positive semidefinite.
pub fn check_correlation(rho: &DMatrix<f64>, n: usize) -> Result<()> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rho.nrows().max(rho.ncols()),
        });
    }
    for i in 0..n {
        if rho[(i, i)] != 1.0 {
            return Err(Error::invalid(format!("rho[{i}][{i}] must be 1")));
        }
        for j in 0..n {
            let v = rho[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 {
                return Err(Error::invalid(format!("rho[{i}][{j}] = {v} is outside [-1, 1]")));
            }
            if v != rho[(j, i)] {
                return Err(Error::invalid(format!("rho is not symmetric at ({i}, {j})")));
            }
        }
    }
    let min_eigenvalue = SymmetricEigen::new(rho.clone()).eigenvalues.min();
    if min_eigenvalue < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    Ok(())
}

/// A raw and (for cross indices) normalized cumulant at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub index: MultiIndex,
    pub t: f64,
    pub raw: f64,
    pub normalized: Option<f64>,
}

/// Cumulants of one model, keyed by `(index, t)`, ordered by time then index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CumulantTable {
    entries: Vec<TableEntry>,
}

impl CumulantTable {
    /// All cross indices (two or more nonzero components) with `2 ≤ |i| ≤ max_order`
    /// at each time.
    pub fn cross(model: &RhoAlphaNigModel, times: &[f64], max_order: u32) -> Result<Self> {
        let mut indices: Vec<MultiIndex> = MultiIndex::all_up_to(model.dim(), max_order)
            .into_iter()
            .filter(|i| i.support_size() >= 2)
            .collect();
        indices.sort_by(|x, y| x.components().cmp(y.components()));
        let mut sorted_times = times.to_vec();
        sorted_times.sort_by(f64::total_cmp);
        let mut entries = Vec::with_capacity(indices.len() * times.len());
        for &t in &sorted_times {
            for i in &indices {
                let raw = model.cumulant(i, t)?;
                let normalized = model.normalize(i, t, raw).ok();
                entries.push(TableEntry {
                    index: i.clone(),
                    t,
                    raw,
                    normalized,
                });
            }
        }
        Ok(CumulantTable { entries })
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn get(&self, index: &MultiIndex, t: f64) -> Option<&TableEntry> {
        self.entries.iter().find(|e| &e.index == index && e.t == t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The free parameter of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    /// `ρ_12`
    Rho,
    /// common clock weight `a`
    A,
    /// maturity `t`
    T,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::Rho => "rho",
            ScanParameter::A => "a",
            ScanParameter::T => "t",
        }
    }
}

impl std::str::FromStr for ScanParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(ScanParameter::Rho),
            "a" => Ok(ScanParameter::A),
            "t" => Ok(ScanParameter::T),
            other => Err(Error::invalid(format!("unknown scan parameter {other:?} (expected rho, a or t)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    pub table: CumulantTable,
}

/// `steps` evenly spaced points from `from` to `to` inclusive; `[from]` when `steps = 1`.
pub fn linear_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::invalid("a grid needs at least one point"));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::invalid("grid bounds must be finite"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k + 1 == steps { to } else { from + (to - from) * (k as f64) / last })
        .collect())
}

/// One [`CumulantTable`] per grid value of `param`. For `ρ` and `a` scans the
/// tables hold every time in `times`; for a `t` scan each table holds the
/// grid time only. Every grid point is validated before any evaluation.
pub fn scan(
    base: &RhoAlphaNigModel,
    param: ScanParameter,
    grid: &[f64],
    times: &[f64],
    max_order: u32,
    workers: usize,
) -> Result<Vec<ScanPoint>> {
    OrderCap::default().check(&MultiIndex::new(vec![max_order]))?;
    let points: Vec<(f64, RhoAlphaNigModel, Vec<f64>)> = grid
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            let point = match param {
                ScanParameter::Rho => base.with_rho12(value).map(|m| (m, times.to_vec())),
                ScanParameter::A => base.with_a(value).map(|m| (m, times.to_vec())),
                ScanParameter::T => check_time(value).map(|_| (base.clone(), vec![value])),
            };
            point
                .map(|(m, ts)| (value, m, ts))
                .map_err(|e| Error::GridPoint {
                    index,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    for &t in times {
        check_time(t)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, (value, model, ts))| {
                CumulantTable::cross(model, ts, max_order)
                    .map(|table| ScanPoint { value: *value, table })
                    .map_err(|e| Error::GridPoint {
                        index,
                        source: Box::new(e),
                    })
            })
            .collect()
    })
}

/// Largest absolute residual of the least-squares polynomial of `degree`
/// through `(xs, ys)`.
pub fn polynomial_fit_residual(xs: &[f64], ys: &[f64], degree: usize) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(Error::invalid("polynomial fit needs more points than the degree"));
    }
    let vander = DMatrix::from_fn(xs.len(), degree + 1, |r, c| xs[r].powi(c as i32));
    let y = DVector::from_column_slice(ys);
    let coef = vander
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
    let residual = &vander * coef - y;
    Ok(residual.amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::rel_close;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn reference(a: f64, rho: f64) -> RhoAlphaNigModel {
        RhoAlphaNigModel::reference_pair(a, rho).unwrap()
    }

    #[test]
    fn derived_parameters() {
        let m = reference(1.05, 0.5);
        assert!(rel_close(m.clock_rate(0), 0.0248 * (85.4175f64.powi(2) - 8.8886f64.powi(2)).sqrt(), 1e-15));
        assert!((m.a_max() - 2.1038).abs() < 1e-3);
        assert!(m.a_max() > 2.1);
        assert_eq!(m.mu(1), -13.5988 * 0.0335 * 0.0335);
        assert_eq!(m.sigma(0), 0.0248);
        assert!(rel_close(m.alpha(0) * m.clock_rate(0).powi(2), 1.0, 1e-15));
    }

    #[test]
    fn validation() {
        assert!(RhoAlphaNigModel::reference_pair(0.0, 0.0).is_err());
        assert!(RhoAlphaNigModel::reference_pair(2.2, 0.0).is_err());
        assert!(RhoAlphaNigModel::reference_pair(1.0, 1.5).is_err());
        assert!(RhoAlphaNigModel::new(vec![1.0], vec![1.0], vec![1.0], DMatrix::identity(1, 1), 0.1).is_err());
        assert!(RhoAlphaNigModel::new(vec![1.0], vec![-1.0], vec![0.0], DMatrix::identity(1, 1), 0.1).is_err());
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let err = RhoAlphaNigModel::new(vec![2.0; 3], vec![1.0; 3], vec![0.0; 3], bad, 0.5).unwrap_err();
        assert!(matches!(err, Error::NotPositiveSemidefinite { .. }));
    }

    #[test]
    fn degenerate_idiosyncratic_clock_at_a_max() {
        let m = reference(1.0, 0.0);
        let edge = m.with_a(m.a_max()).unwrap();
        let which = if m.clock_rate(0) < m.clock_rate(1) { 0 } else { 1 };
        assert_eq!(edge.idiosyncratic_clock(which), UnivariateCumulants::Zero);
        assert!(matches!(edge.idiosyncratic_clock(1 - which), UnivariateCumulants::InverseGaussian { .. }));
        assert!(edge.cumulant(&mi(&[2, 2]), 1.0).unwrap().is_finite());
    }

    #[test]
    fn mixed_cumulants_vanish_as_a_goes_to_zero() {
        let m = reference(1e-9, 0.7);
        assert!(m.cumulant(&mi(&[1, 1]), 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn covariance_hand_expansion() {
        let m = reference(1.05, 0.3);
        let (a1, a2) = (m.alpha(0), m.alpha(1));
        let c1z = m.a;
        let c2z = m.a;
        let expected =
            c1z * 0.3 * m.sigma(0) * m.sigma(1) * (a1 * a2).sqrt() + c2z * m.mu(0) * a1 * m.mu(1) * a2;
        assert!(rel_close(m.cumulant(&mi(&[1, 1]), 1.0).unwrap(), expected, 1e-14));
        let series = m.cgf_series(2).unwrap();
        assert!(rel_close(series.coefficient(&mi(&[1, 1])), expected, 1e-14));
    }

    #[test]
    fn marginal_variance_is_nig_variance() {
        // NIG(γ, δ, β) variance: δ γ² / (γ² − β²)^{3/2}
        for (a, rho) in [(0.1, -0.9), (1.05, 0.0), (2.1, 0.9)] {
            let m = reference(a, rho);
            for j in 0..2 {
                let (g, d, b) = (m.gamma[j], m.delta[j], m.beta[j]);
                let nig_var = d * g * g / (g * g - b * b).powf(1.5);
                assert!(rel_close(m.marginal_variance(j, 1.0).unwrap(), nig_var, 1e-12));
            }
        }
    }

    #[test]
    fn normalized_time_scaling() {
        let m = reference(1.05, 0.5);
        let c11 = m.normalized_cumulant(&mi(&[1, 1]), 1.0).unwrap();
        let c12 = m.normalized_cumulant(&mi(&[1, 2]), 1.0).unwrap();
        let c22 = m.normalized_cumulant(&mi(&[2, 2]), 1.0).unwrap();
        for t in DEFAULT_TIMES {
            assert!(rel_close(m.normalized_cumulant(&mi(&[1, 1]), t).unwrap(), c11, 1e-12));
            assert!(rel_close(m.normalized_cumulant(&mi(&[1, 2]), t).unwrap() * t.sqrt(), c12, 1e-12));
            assert!(rel_close(m.normalized_cumulant(&mi(&[2, 2]), t).unwrap() * t, c22, 1e-12));
        }
        assert!(c11 > 0.0 && c11 < 1.0);
    }

    #[test]
    fn embedding_agrees_with_additive_split() {
        let m = reference(1.05, 0.4);
        let embedded = m.as_subordinated_model(6).unwrap();
        let mut eval = crate::bell::BellEvaluator::brownian(&embedded).unwrap();
        for i in MultiIndex::all_up_to(2, 6) {
            let split = m.cumulant(&i, 1.0).unwrap();
            let bell = eval.cumulant(&i).unwrap();
            assert!(rel_close(split, bell, 1e-10), "{i}: {split} vs {bell}");
        }
        assert!(reference(1.0, 1.0).as_subordinated_model(4).is_err());
    }

    #[test]
    fn grid_and_scan_shape() {
        assert_eq!(linear_grid(-1.0, 1.0, 41).unwrap().len(), 41);
        assert_eq!(linear_grid(0.3, 9.0, 1).unwrap(), vec![0.3]);
        assert_eq!(*linear_grid(-1.0, 1.0, 41).unwrap().last().unwrap(), 1.0);
        assert!(linear_grid(0.0, 1.0, 0).is_err());

        let m = reference(1.05, 0.0);
        let grid = linear_grid(-1.0, 1.0, 41).unwrap();
        let out = scan(&m, ScanParameter::Rho, &grid, &[1.0], 4, 2).unwrap();
        assert_eq!(out.len(), 41);
        for p in &out {
            let shown: Vec<String> = p.table.entries().iter().map(|e| e.index.to_string()).collect();
            assert_eq!(shown, ["(1,1)", "(1,2)", "(1,3)", "(2,1)", "(2,2)", "(3,1)"]);
        }
    }

    #[test]
    fn scan_reports_bad_grid_point() {
        let m = reference(1.05, 0.0);
        let err = scan(&m, ScanParameter::A, &[1.0, 2.0, 2.5], &[1.0], 4, 1).unwrap_err();
        assert!(matches!(err, Error::GridPoint { index: 2, .. }));
        let err = scan(&m, ScanParameter::T, &[1.0, -1.0], &[1.0], 4, 1).unwrap_err();
        assert!(matches!(err, Error::GridPoint { index: 1, .. }));
    }

    #[test]
    fn polyfit_detects_curvature() {
        let xs: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let line: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x).collect();
        let parabola: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(polynomial_fit_residual(&xs, &line, 1).unwrap() < 1e-13);
        assert!(polynomial_fit_residual(&xs, &parabola, 1).unwrap() > 1e-3);
        assert!(polynomial_fit_residual(&xs, &parabola, 2).unwrap() < 1e-13);
    }
}
