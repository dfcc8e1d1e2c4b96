//! Joint cumulants of `Y = A Z(T)` through generalized Bell polynomials.
//!
//! For a target multi-index `i`, the cumulant is
//!
//! ```text
//! c_i(Y) = Σ_{s_1+…+s_d = i} Σ_{Λ_k ⊢ s_k}
//!            i! / (∏ Λ_k! m(Λ_k)!) · c_{(l(Λ_1),…,l(Λ_d))}(T) · ∏_k g_{k,Λ_k}
//! ```
//!
//! with `g_{k,λ} = c_{|λ|}(Z_k) ∏_m a_{mk}^{λ_m}`. A zero `s_k` contributes the
//! empty partition (factor 1, `l = 0`); the all-zero length vector has no
//! cumulant and is skipped. The combinatorial prefactor is an integer and is
//! assembled exactly before the single conversion to `f64`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::multiindex::{
    enumerate_decompositions, enumerate_partitions, enumerate_p2_partitions, MultiIndex, MultiIndexPartition, OrderCap,
};
use crate::providers::{brownian_inner_coefficient, generic_inner_coefficient, JointCumulantProvider, UnivariateCumulants};

/// `Y(t) = A Z(T(t))`: `A` is `n×d`, `Z_k` has cumulants `bases[k]`, and `T`
/// is a `d`-dimensional subordinator independent of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatedModel {
    matrix: DMatrix<f64>,
    bases: Vec<UnivariateCumulants>,
    clock: JointCumulantProvider,
}

impl SubordinatedModel {
    pub fn new(matrix: DMatrix<f64>, bases: Vec<UnivariateCumulants>, clock: JointCumulantProvider) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::invalid("mixing matrix must be non-empty"));
        }
        if bases.len() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.ncols(),
                actual: bases.len(),
            });
        }
        if clock.dim() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.ncols(),
                actual: clock.dim(),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("mixing matrix has non-finite entries"));
        }
        Ok(SubordinatedModel { matrix, bases, clock })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn bases(&self) -> &[UnivariateCumulants] {
        &self.bases
    }

    pub fn clock(&self) -> &JointCumulantProvider {
        &self.clock
    }

    /// `n`, the dimension of `Y`.
    pub fn dim_output(&self) -> usize {
        self.matrix.nrows()
    }

    /// `d`, the dimension of `T`.
    pub fn dim_clock(&self) -> usize {
        self.matrix.ncols()
    }

    /// Same model with the rows of `A` reordered: row `m` of the result is
    /// row `perm[m]` of `self`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim_output() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_output(),
                actual: perm.len(),
            });
        }
        let matrix = DMatrix::from_fn(self.dim_output(), self.dim_clock(), |r, c| self.matrix[(perm[r], c)]);
        Self::new(matrix, self.bases.clone(), self.clock.clone())
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InnerRule {
    /// All partitions, `g` from the base cumulant sequences.
    Generic,
    /// Columns with `|λ| ≤ 2` only, `g` from the Brownian table.
    Brownian,
}

/// One partition of a decomposition component, reduced to what the sum needs.
#[derive(Debug, Clone)]
struct PartitionWeight {
    length: u32,
    /// `s! / (Λ! m(Λ)!)`
    count: BigUint,
    /// `g_{k,Λ}`
    product: f64,
}

/// Cumulant evaluator bound to one model, memoizing partition lists, inner
/// coefficients and clock cumulants. Not shared across threads; create one
/// per worker.
pub struct BellEvaluator<'m> {
    model: &'m SubordinatedModel,
    cap: OrderCap,
    rule: InnerRule,
    weights: HashMap<(usize, MultiIndex), Vec<PartitionWeight>>,
    inner: HashMap<(usize, MultiIndex), f64>,
    clock: HashMap<MultiIndex, f64>,
}

impl<'m> BellEvaluator<'m> {
    /// General evaluator for any base laws.
    pub fn new(model: &'m SubordinatedModel) -> Self {
        Self::with_rule(model, InnerRule::Generic)
    }

    /// Evaluator restricted to `P₂` partitions; every base must be Gaussian.
    pub fn brownian(model: &'m SubordinatedModel) -> Result<Self> {
        if let Some(k) = model.bases.iter().position(|b| !b.is_gaussian()) {
            return Err(Error::invalid(format!("base process {k} is not Gaussian")));
        }
        Ok(Self::with_rule(model, InnerRule::Brownian))
    }

    fn with_rule(model: &'m SubordinatedModel, rule: InnerRule) -> Self {
        BellEvaluator {
            model,
            cap: OrderCap::default(),
            rule,
            weights: HashMap::new(),
            inner: HashMap::new(),
            clock: HashMap::new(),
        }
    }

    pub fn with_cap(mut self, cap: OrderCap) -> Self {
        self.cap = cap;
        self
    }

    /// `c_i(Y)` for `|i| ≥ 1`.
    pub fn cumulant(&mut self, i: &MultiIndex) -> Result<f64> {
        let n = self.model.dim_output();
        let d = self.model.dim_clock();
        if i.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: i.len(),
            });
        }
        if i.order() == 0 {
            return Err(Error::invalid("cumulants start at order 1"));
        }
        self.cap.check(i)?;
        let i_fact = i.factorial();

        let mut total = CompensatedSum::default();
        for decomposition in enumerate_decompositions(i, d, self.cap)? {
            let mut lists = Vec::with_capacity(d);
            for (k, s) in decomposition.iter().enumerate() {
                lists.push(self.partition_weights(k, s)?);
            }
            if lists.iter().any(|l| l.is_empty()) {
                continue;
            }
            let multinomial = decomposition
                .iter()
                .fold(i_fact.clone(), |acc, s| acc / s.factorial());

            // odometer over the cartesian product of partition lists
            let mut pos = vec![0usize; d];
            loop {
                let chosen: Vec<&PartitionWeight> = pos.iter().zip(&lists).map(|(&p, l)| &l[p]).collect();
                if chosen.iter().any(|w| w.length > 0) {
                    let product: f64 = chosen.iter().map(|w| w.product).product();
                    if product != 0.0 {
                        let lengths = MultiIndex::new(chosen.iter().map(|w| w.length).collect());
                        let ct = self.clock_cumulant(&lengths)?;
                        if ct != 0.0 {
                            let prefactor = chosen.iter().fold(multinomial.clone(), |acc, w| acc * &w.count);
                            let prefactor = prefactor.to_f64().expect("finite prefactor");
                            total.add(prefactor * (ct * product));
                        }
                    }
                }
                let mut k = d;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    pos[k] += 1;
                    if pos[k] < lists[k].len() {
                        break;
                    }
                    pos[k] = 0;
                }
                if pos.iter().all(|&p| p == 0) {
                    break;
                }
            }
        }
        Ok(total.value())
    }

    fn clock_cumulant(&mut self, lengths: &MultiIndex) -> Result<f64> {
        if let Some(&v) = self.clock.get(lengths) {
            return Ok(v);
        }
        let v = self.model.clock.cumulant(lengths)?;
        self.clock.insert(lengths.clone(), v);
        Ok(v)
    }

    fn inner_coefficient(&mut self, k: usize, lambda: &MultiIndex) -> Result<f64> {
        let key = (k, lambda.clone());
        if let Some(&v) = self.inner.get(&key) {
            return Ok(v);
        }
        let v = match self.rule {
            InnerRule::Generic => generic_inner_coefficient(lambda, k, &self.model.matrix, &self.model.bases[k])?,
            InnerRule::Brownian => match self.model.bases[k] {
                UnivariateCumulants::Gaussian { mean, variance } => {
                    brownian_inner_coefficient(lambda, k, &self.model.matrix, mean, variance)?
                }
                _ => unreachable!("checked at construction"),
            },
        };
        self.inner.insert(key, v);
        Ok(v)
    }

    fn partition_weights(&mut self, k: usize, s: &MultiIndex) -> Result<Vec<PartitionWeight>> {
        let key = (k, s.clone());
        if let Some(w) = self.weights.get(&key) {
            return Ok(w.clone());
        }
        let partitions: Vec<MultiIndexPartition> = match self.rule {
            InnerRule::Generic => enumerate_partitions(s, self.cap)?,
            InnerRule::Brownian => enumerate_p2_partitions(s, self.cap)?,
        };
        let mut out = Vec::with_capacity(partitions.len());
        for p in &partitions {
            let mut product = 1.0;
            for (col, r) in p.parts() {
                product *= self.inner_coefficient(k, col)?.powi(r as i32);
            }
            let count = if p.is_empty() {
                BigUint::from(1u32)
            } else {
                s.factorial() / (p.factorial() * p.multiplicity_factorial())
            };
            out.push(PartitionWeight {
                length: p.length(),
                count,
                product,
            });
        }
        self.weights.insert(key, out.clone());
        Ok(out)
    }
}

/// `c_i(Y)` by the general Bell-polynomial formula.
pub fn cumulant(model: &SubordinatedModel, i: &MultiIndex) -> Result<f64> {
    BellEvaluator::new(model).cumulant(i)
}

/// `c_i(Y)` for Gaussian bases, summing over `P₂` partitions only.
pub fn cumulant_brownian(model: &SubordinatedModel, i: &MultiIndex) -> Result<f64> {
    BellEvaluator::brownian(model)?.cumulant(i)
}

/// Cumulant of order `i` of `B(T)` for a univariate clock `T` and a Brownian
/// motion with drift `mean` and variance `variance`.
pub fn cumulant_univariate(mean: f64, variance: f64, clock: &UnivariateCumulants, i: u32) -> Result<f64> {
    cumulant_quadratic_inner(&[mean], &[vec![variance]], clock, &MultiIndex::new(vec![i]))
}

/// `i`-th coefficient of `K_T(drift·z + ½ zᵀ cov z)` for a univariate clock `T`:
/// the cumulants of a correlated Brownian motion run on a single clock.
pub fn cumulant_quadratic_inner(
    drift: &[f64],
    cov: &[Vec<f64>],
    clock: &UnivariateCumulants,
    i: &MultiIndex,
) -> Result<f64> {
    let n = drift.len();
    if i.len() != n || cov.len() != n || cov.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: i.len(),
        });
    }
    if i.order() == 0 {
        return Err(Error::invalid("cumulants start at order 1"));
    }
    let inner = |lambda: &MultiIndex| -> f64 {
        let comps = lambda.components();
        match lambda.order() {
            1 => drift[lambda.concentrated_on().expect("order one")],
            2 => match lambda.concentrated_on() {
                Some(m) => cov[m][m],
                None => {
                    let mut rows = comps.iter().enumerate().filter(|(_, &c)| c == 1).map(|(m, _)| m);
                    let (m1, m2) = (rows.next().unwrap(), rows.next().unwrap());
                    cov[m1][m2]
                }
            },
            _ => 0.0,
        }
    };
    let mut total = CompensatedSum::default();
    for p in enumerate_p2_partitions(i, OrderCap::default())? {
        let product = p.associated_product(inner);
        if product == 0.0 {
            continue;
        }
        let count = p.set_partition_count().to_f64().expect("finite count");
        total.add(count * (clock.cumulant(p.length())? * product));
    }
    Ok(total.value())
}
