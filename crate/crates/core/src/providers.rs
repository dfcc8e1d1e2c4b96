//! Cumulant sources: univariate sequences for subordinators and base
//! processes, joint cumulants of multivariate subordinators, and the inner
//! coefficients `g_{k,λ}` that feed the Bell polynomial.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;

/// `(2m-1)!! = 1·3·5···(2m-1)`, with `(-1)!! = 1`.
pub fn odd_double_factorial(m: u32) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, j| acc * (2 * j - 1))
}

/// `k`-th cumulant of `IG(a, b)`: `a/b` for `k = 1`, `a (2k-3)!! / b^(2k-1)` otherwise.
pub fn ig_cumulant(a: f64, b: f64, k: u32) -> Result<f64> {
    check_ig(a, b)?;
    if k == 0 {
        return Err(Error::invalid("cumulant order must be at least 1"));
    }
    if k == 1 {
        return Ok(a / b);
    }
    let df = odd_double_factorial(k - 1).to_f64().expect("finite double factorial");
    Ok(a * df / b.powi(2 * k as i32 - 1))
}

/// Parameters of `αX` when `X ~ IG(a, b)`: `(a√α, b/√α)`.
pub fn ig_scale(a: f64, b: f64, alpha: f64) -> Result<(f64, f64)> {
    check_ig(a, b)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("scale factor must be positive, got {alpha}")));
    }
    let root = alpha.sqrt();
    Ok((a * root, b / root))
}

fn check_ig(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("IG shape parameter a must be positive, got {a}")));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("IG rate parameter b must be positive, got {b}")));
    }
    Ok(())
}

/// A univariate cumulant sequence `c_1, c_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum UnivariateCumulants {
    /// `IG(a, b)` with mean `a/b` and variance `a/b³`.
    InverseGaussian { a: f64, b: f64 },
    /// Normal law: `c_1 = mean`, `c_2 = variance`, higher cumulants zero.
    Gaussian { mean: f64, variance: f64 },
    /// Explicit values; `table[0]` is the first cumulant.
    Table(Vec<f64>),
    /// The zero process (all cumulants vanish).
    Zero,
}

impl UnivariateCumulants {
    pub fn inverse_gaussian(a: f64, b: f64) -> Result<Self> {
        check_ig(a, b)?;
        Ok(UnivariateCumulants::InverseGaussian { a, b })
    }

    /// Like [`Self::inverse_gaussian`] but maps `a = 0` to the zero subordinator.
    pub fn inverse_gaussian_or_zero(a: f64, b: f64) -> Result<Self> {
        if a == 0.0 {
            if !(b > 0.0) {
                return Err(Error::invalid(format!("IG rate parameter b must be positive, got {b}")));
            }
            return Ok(UnivariateCumulants::Zero);
        }
        Self::inverse_gaussian(a, b)
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::invalid(format!(
                "Gaussian needs finite mean and non-negative variance, got ({mean}, {variance})"
            )));
        }
        Ok(UnivariateCumulants::Gaussian { mean, variance })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, UnivariateCumulants::Gaussian { .. })
    }

    /// The `k`-th cumulant, `k ≥ 1`.
    pub fn cumulant(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("cumulant order must be at least 1"));
        }
        match self {
            UnivariateCumulants::InverseGaussian { a, b } => ig_cumulant(*a, *b, k),
            UnivariateCumulants::Gaussian { mean, variance } => Ok(match k {
                1 => *mean,
                2 => *variance,
                _ => 0.0,
            }),
            UnivariateCumulants::Table(t) => t.get(k as usize - 1).copied().ok_or(Error::MissingCumulant {
                order: k,
                available: t.len(),
            }),
            UnivariateCumulants::Zero => Ok(0.0),
        }
    }

    /// The law at time `t` of the Lévy process whose time-one law is `self`:
    /// every cumulant is multiplied by `t`.
    pub fn at_time(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("time must be positive, got {t}")));
        }
        Ok(match self {
            UnivariateCumulants::InverseGaussian { a, b } => UnivariateCumulants::InverseGaussian { a: a * t, b: *b },
            UnivariateCumulants::Gaussian { mean, variance } => UnivariateCumulants::Gaussian {
                mean: mean * t,
                variance: variance * t,
            },
            UnivariateCumulants::Table(v) => UnivariateCumulants::Table(v.iter().map(|c| c * t).collect()),
            UnivariateCumulants::Zero => UnivariateCumulants::Zero,
        })
    }
}

/// Joint cumulants `c_j(T)` of a `d`-dimensional subordinator.
#[derive(Debug, Clone, PartialEq)]
pub enum JointCumulantProvider {
    /// Mutually independent components.
    Independent(Vec<UnivariateCumulants>),
    /// `T_1 = ... = T_d = T` with `T` distributed as `base`.
    Comonotone { dim: usize, base: UnivariateCumulants },
    /// Explicit values for `1 ≤ |j| ≤ max_order`; unlisted indices in that range are zero.
    Tabulated {
        dim: usize,
        max_order: u32,
        values: HashMap<MultiIndex, f64>,
    },
}

impl JointCumulantProvider {
    pub fn dim(&self) -> usize {
        match self {
            JointCumulantProvider::Independent(c) => c.len(),
            JointCumulantProvider::Comonotone { dim, .. } | JointCumulantProvider::Tabulated { dim, .. } => *dim,
        }
    }

    /// `c_j(T)` for `|j| ≥ 1`.
    pub fn cumulant(&self, j: &MultiIndex) -> Result<f64> {
        if j.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: j.len(),
            });
        }
        let order = j.order();
        if order == 0 {
            return Err(Error::invalid("a subordinator has no order-0 cumulant"));
        }
        match self {
            JointCumulantProvider::Independent(comps) => match j.concentrated_on() {
                Some(k) => comps[k].cumulant(order),
                None => Ok(0.0),
            },
            JointCumulantProvider::Comonotone { base, .. } => base.cumulant(order),
            JointCumulantProvider::Tabulated {
                max_order, values, ..
            } => {
                if order > *max_order {
                    return Err(Error::MissingCumulant {
                        order,
                        available: *max_order as usize,
                    });
                }
                Ok(values.get(j).copied().unwrap_or(0.0))
            }
        }
    }

    /// Tabulates `c_j` for all `1 ≤ |j| ≤ max_order`.
    pub fn tabulate(&self, max_order: u32) -> Result<JointCumulantProvider> {
        let mut values = HashMap::new();
        for j in MultiIndex::all_up_to(self.dim(), max_order) {
            let v = self.cumulant(&j)?;
            if v != 0.0 {
                values.insert(j, v);
            }
        }
        Ok(JointCumulantProvider::Tabulated {
            dim: self.dim(),
            max_order,
            values,
        })
    }
}

/// `g_{k,λ}` for a Brownian base with drift `mean` and variance `variance`,
/// where `k` is a column of `a`.
pub fn brownian_inner_coefficient(
    lambda: &MultiIndex,
    k: usize,
    a: &DMatrix<f64>,
    mean: f64,
    variance: f64,
) -> Result<f64> {
    check_column(lambda, k, a)?;
    let comps = lambda.components();
    match lambda.order() {
        1 => {
            let m = lambda.concentrated_on().expect("order-one index");
            Ok(a[(m, k)] * mean)
        }
        2 => match lambda.concentrated_on() {
            Some(m) => Ok(a[(m, k)] * a[(m, k)] * variance),
            None => {
                let mut rows = comps.iter().enumerate().filter(|(_, &c)| c == 1).map(|(m, _)| m);
                let (m1, m2) = (rows.next().unwrap(), rows.next().unwrap());
                Ok(a[(m1, k)] * a[(m2, k)] * variance)
            }
        },
        _ => Ok(0.0),
    }
}

/// `g_{k,λ} = c_{|λ|}(Z_k) · ∏_m a_{mk}^{λ_m}`.
pub fn generic_inner_coefficient(
    lambda: &MultiIndex,
    k: usize,
    a: &DMatrix<f64>,
    base: &UnivariateCumulants,
) -> Result<f64> {
    check_column(lambda, k, a)?;
    let column: Vec<f64> = a.column(k).iter().copied().collect();
    let c = base.cumulant(lambda.order())?;
    Ok(c * lambda.monomial(&column))
}

fn check_column(lambda: &MultiIndex, k: usize, a: &DMatrix<f64>) -> Result<()> {
    if lambda.is_zero() {
        return Err(Error::invalid("inner coefficient requested for the zero column"));
    }
    if lambda.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: lambda.len(),
        });
    }
    if k >= a.ncols() {
        return Err(Error::invalid(format!("column {k} out of range for {} columns", a.ncols())));
    }
    Ok(())
}

/// Relative closeness test used throughout the test suites.
pub fn rel_close(x: f64, y: f64, rel: f64) -> bool {
    let scale = x.abs().max(y.abs());
    (x - y).abs() <= rel * scale
}
