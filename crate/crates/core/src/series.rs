//! Truncated multivariate power series in the exponential convention.
//!
//! A series is stored as the coefficients `c_j` of `Σ_j c_j z^j / j!` for all
//! `|j| ≤ max_degree`. In this convention the coefficients of a cumulant
//! generating function are exactly the joint cumulants, so composing cgfs and
//! reading off coefficients gives cumulants without any Bell-polynomial
//! bookkeeping. This is the independent analytic check on [`crate::bell`].

use std::collections::BTreeMap;

use crate::bell::SubordinatedModel;
use crate::error::{Error, Result};
use crate::multiindex::{MultiIndex, OrderCap};
use crate::providers::UnivariateCumulants;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    num_vars: usize,
    max_degree: u32,
    coefficients: BTreeMap<MultiIndex, f64>,
}

/// Default truncation degree.
pub const DEFAULT_MAX_DEGREE: u32 = 8;

impl TruncatedSeries {
    pub fn zero(num_vars: usize, max_degree: u32) -> Self {
        assert!(num_vars > 0, "a series needs at least one variable");
        TruncatedSeries {
            num_vars,
            max_degree,
            coefficients: BTreeMap::new(),
        }
    }

    /// Builds a series from `(j, c_j)` pairs, discarding `|j| > max_degree`.
    pub fn from_coefficients(
        num_vars: usize,
        max_degree: u32,
        coefficients: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self> {
        let mut s = Self::zero(num_vars, max_degree);
        for (j, c) in coefficients {
            if j.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    actual: j.len(),
                });
            }
            s.add_to(j, c);
        }
        Ok(s)
    }

    /// The series of `Σ_k c_k w^k / k!` in one variable, from `c_1, c_2, ...`.
    pub fn univariate(max_degree: u32, cumulant: impl Fn(u32) -> Result<f64>) -> Result<Self> {
        let mut s = Self::zero(1, max_degree);
        for k in 1..=max_degree {
            s.add_to(MultiIndex::new(vec![k]), cumulant(k)?);
        }
        Ok(s)
    }

    /// The cgf series of a univariate cumulant sequence.
    pub fn cgf(max_degree: u32, law: &UnivariateCumulants) -> Result<Self> {
        Self::univariate(max_degree, |k| law.cumulant(k))
    }

    /// `Σ_m weights[m] z_m`.
    pub fn linear_form(weights: &[f64], max_degree: u32) -> Self {
        let n = weights.len();
        let mut s = Self::zero(n, max_degree);
        for (m, &w) in weights.iter().enumerate() {
            s.add_to(MultiIndex::unit(n, m), w);
        }
        s
    }

    /// `drift·z + ½ zᵀ cov z` for a symmetric `cov`.
    pub fn quadratic_form(drift: &[f64], cov: &[Vec<f64>], max_degree: u32) -> Self {
        let n = drift.len();
        let mut s = Self::linear_form(drift, max_degree);
        for m in 0..n {
            for l in m..n {
                let mut j = vec![0; n];
                j[m] += 1;
                j[l] += 1;
                // ½Σ_mm z_m² = Σ_mm z_m²/2!;  ½(Σ_ml + Σ_lm) z_m z_l = Σ_ml z^j/j!
                let c = if m == l { cov[m][m] } else { 0.5 * (cov[m][l] + cov[l][m]) };
                s.add_to(MultiIndex::new(j), c);
            }
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Coefficient of `z^j / j!`; zero when absent.
    pub fn coefficient(&self, j: &MultiIndex) -> f64 {
        self.coefficients.get(j).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&MultiIndex::zeros(self.num_vars))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coefficients.iter().map(|(j, &c)| (j, c))
    }

    fn add_to(&mut self, j: MultiIndex, c: f64) {
        if j.order() <= self.max_degree && c != 0.0 {
            *self.coefficients.entry(j).or_insert(0.0) += c;
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                actual: other.num_vars,
            });
        }
        if self.max_degree != other.max_degree {
            return Err(Error::invalid(format!(
                "truncation degrees differ ({} vs {})",
                self.max_degree, other.max_degree
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (j, c) in other.iter() {
            out.add_to(j.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self::zero(self.num_vars, self.max_degree);
        for (j, c) in self.iter() {
            out.add_to(j.clone(), c * factor);
        }
        out
    }

    /// Truncated product: `(ab)_j = Σ_{k ≤ j} C(j, k) a_k b_{j-k}`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.num_vars, self.max_degree);
        for (j, a) in self.iter() {
            let room = self.max_degree - j.order();
            for (k, b) in other.iter() {
                if k.order() > room {
                    continue;
                }
                let sum = j.add(k);
                let weight = binomial_f64(&sum, j);
                out.add_to(sum, weight * a * b);
            }
        }
        Ok(out)
    }

    /// `f(inner_1(z), ..., inner_d(z))`, exact up to the truncation degree.
    ///
    /// `self` is the outer series in `d` variables; each inner series must have
    /// zero constant term.
    pub fn compose_outer(&self, inner: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        if inner.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                actual: inner.len(),
            });
        }
        let first = inner.first().expect("at least one inner series");
        let (n, degree) = (first.num_vars, first.max_degree);
        for g in inner {
            g.check_compatible(first)?;
            let c0 = g.constant_term();
            if c0 != 0.0 {
                return Err(Error::NonzeroConstantTerm(c0));
            }
        }
        if self.max_degree < degree {
            return Err(Error::invalid(format!(
                "outer series truncated at {} but {} is required",
                self.max_degree, degree
            )));
        }

        // scaled_powers[k][e] = inner_k^e / e!
        let mut one = Self::zero(n, degree);
        one.add_to(MultiIndex::zeros(n), 1.0);
        let mut scaled_powers: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(inner.len());
        for g in inner {
            let mut pows = vec![one.clone()];
            for e in 1..=degree {
                let next = pows[e as usize - 1].multiply(g)?.scale(1.0 / e as f64);
                pows.push(next);
            }
            scaled_powers.push(pows);
        }

        let mut out = Self::zero(n, degree);
        for (m, fm) in self.iter() {
            // each inner series starts at degree one, so z-degree ≥ |m|
            if m.order() > degree {
                continue;
            }
            let mut term = one.clone();
            for (k, &e) in m.components().iter().enumerate() {
                if e > 0 {
                    term = term.multiply(&scaled_powers[k][e as usize])?;
                }
            }
            for (j, c) in term.iter() {
                out.add_to(j.clone(), fm * c);
            }
        }
        Ok(out)
    }
}

fn binomial_f64(n: &MultiIndex, k: &MultiIndex) -> f64 {
    n.components()
        .iter()
        .zip(k.components())
        .map(|(&n, &k)| {
            let mut acc = 1.0;
            for j in 0..k {
                acc = acc * (n - j) as f64 / (j + 1) as f64;
            }
            acc
        })
        .product()
}

impl SubordinatedModel {
    /// The cgf of `Y = A Z(T)` as `K_T(K_{Z_1}(a_{·1}·z), ..., K_{Z_d}(a_{·d}·z))`,
    /// truncated at `max_degree`.
    pub fn cgf_series(&self, max_degree: u32) -> Result<TruncatedSeries> {
        let d = self.dim_clock();
        let outer = TruncatedSeries::from_coefficients(
            d,
            max_degree,
            MultiIndex::all_up_to(d, max_degree)
                .into_iter()
                .map(|j| self.clock().cumulant(&j).map(|c| (j, c)))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let mut inner = Vec::with_capacity(d);
        for (k, base) in self.bases().iter().enumerate() {
            let column: Vec<f64> = self.matrix().column(k).iter().copied().collect();
            let law = TruncatedSeries::cgf(max_degree, base)?;
            let linear = TruncatedSeries::linear_form(&column, max_degree);
            inner.push(law.compose_outer(std::slice::from_ref(&linear))?);
        }
        outer.compose_outer(&inner)
    }
}

/// The coefficient of `z^i / i!` in the composed cgf of `model`: the
/// oracle value of `c_i(Y)`.
pub fn cumulants_by_composition(model: &SubordinatedModel, i: &MultiIndex) -> Result<f64> {
    if i.len() != model.dim_output() {
        return Err(Error::DimensionMismatch {
            expected: model.dim_output(),
            actual: i.len(),
        });
    }
    OrderCap::default().check(i)?;
    let degree = i.order().max(1);
    Ok(model.cgf_series(degree)?.coefficient(i))
}
