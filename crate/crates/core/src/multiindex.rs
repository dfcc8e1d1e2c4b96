//! Multi-indices and multi-index partitions.
//!
//! A partition of a multi-index `i = (i_1, ..., i_n)` is a multiset of nonzero
//! columns `λ_j` (each a multi-index of length `n`) whose componentwise sum is
//! `i`. Partitions are stored canonically: distinct columns in strictly
//! increasing lexicographic order (first component most significant), each
//! with its multiplicity.
//!
//! Combinatorial prefactors (`i!`, `Λ!`, `m(Λ)!`) are exact big integers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

/// Default cap on the total order `|i|` accepted by the enumerators.
pub const DEFAULT_MAX_ORDER: u32 = 10;

/// A multi-index of non-negative integers.
///
/// The derived ordering compares components position by position from the
/// first, which is the lexicographic order used for canonical partitions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    /// Builds a multi-index from its components. Panics on an empty vector.
    pub fn new(components: Vec<u32>) -> Self {
        assert!(!components.is_empty(), "multi-index needs at least one component");
        MultiIndex(components)
    }

    pub fn zeros(len: usize) -> Self {
        MultiIndex::new(vec![0; len])
    }

    /// The unit multi-index with a one at position `m`.
    pub fn unit(len: usize, m: usize) -> Self {
        let mut c = vec![0; len];
        c[m] = 1;
        MultiIndex::new(c)
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// Number of components (rows).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; a multi-index has at least one component.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total order `|i|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Number of nonzero components.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    /// Position of the single nonzero component, if the index is concentrated
    /// on exactly one component.
    pub fn concentrated_on(&self) -> Option<usize> {
        let mut it = self.0.iter().enumerate().filter(|(_, &c)| c > 0);
        match (it.next(), it.next()) {
            (Some((m, _)), None) => Some(m),
            _ => None,
        }
    }

    /// `i! = ∏ i_s!`, exactly.
    pub fn factorial(&self) -> BigUint {
        self.0.iter().map(|&c| factorial(c)).product()
    }

    /// `∏_s C(self_s, other_s)`, or zero when `other` is not below `self`.
    pub fn binomial(&self, other: &MultiIndex) -> BigUint {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&n, &k)| binomial(n, k))
            .product()
    }

    /// Componentwise `self ≤ other`.
    pub fn le_componentwise(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, r: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * r).collect())
    }

    /// The monomial `x^self = ∏ x_s^{self_s}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.len(), x.len());
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// All `j` with `0 ≤ j ≤ self` componentwise, in ascending lexicographic order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut current = vec![0u32; self.len()];
        loop {
            out.push(MultiIndex(current.clone()));
            // odometer with the last component running fastest
            let mut pos = self.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                if current[pos] < self.0[pos] {
                    current[pos] += 1;
                    for c in current.iter_mut().skip(pos + 1) {
                        *c = 0;
                    }
                    break;
                }
            }
        }
    }

    /// Every multi-index of length `len` with `1 ≤ |j| ≤ max_order`, grouped by
    /// total order and lexicographically descending within each order.
    pub fn all_up_to(len: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 1..=max_order {
            out.extend(Self::all_of_order(len, order));
        }
        out
    }

    /// Every multi-index of length `len` with `|j| = order`.
    pub fn all_of_order(len: usize, order: u32) -> Vec<MultiIndex> {
        fn rec(len: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == len {
                cur.push(left);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for c in (0..=left).rev() {
                cur.push(c);
                rec(len, left - c, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(len, order, &mut Vec::with_capacity(len), &mut out);
        out
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex::new(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Parses `"i,j,k"`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = body
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::invalid(format!("multi-index component {p:?} is not a non-negative integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            return Err(Error::invalid("empty multi-index"));
        }
        Ok(MultiIndex(parts))
    }
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// Cap on `|i|` for the enumerators. Exceeding it is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderCap(pub u32);

impl Default for OrderCap {
    fn default() -> Self {
        OrderCap(DEFAULT_MAX_ORDER)
    }
}

impl OrderCap {
    pub fn check(self, i: &MultiIndex) -> Result<()> {
        let order = i.order();
        if order > self.0 {
            return Err(Error::Capacity { order, max: self.0 });
        }
        Ok(())
    }
}

/// A partition `Λ = (λ_1^{r_1}, λ_2^{r_2}, ...)` of a multi-index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndexPartition {
    columns: Vec<MultiIndex>,
    multiplicities: Vec<u32>,
}

impl MultiIndexPartition {
    /// The partition of the zero multi-index.
    pub fn empty() -> Self {
        MultiIndexPartition {
            columns: Vec::new(),
            multiplicities: Vec::new(),
        }
    }

    /// Builds the canonical partition from an arbitrary list of nonzero columns.
    pub fn from_columns(mut cols: Vec<MultiIndex>) -> Result<Self> {
        if cols.iter().any(MultiIndex::is_zero) {
            return Err(Error::invalid("partition column is the zero multi-index"));
        }
        if let Some(first) = cols.first() {
            let n = first.len();
            if let Some(bad) = cols.iter().find(|c| c.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: bad.len(),
                });
            }
        }
        cols.sort();
        Ok(Self::from_sorted(&cols))
    }

    fn from_sorted(cols: &[MultiIndex]) -> Self {
        let mut columns: Vec<MultiIndex> = Vec::new();
        let mut multiplicities: Vec<u32> = Vec::new();
        for c in cols {
            match columns.last() {
                Some(last) if last == c => *multiplicities.last_mut().unwrap() += 1,
                _ => {
                    columns.push(c.clone());
                    multiplicities.push(1);
                }
            }
        }
        MultiIndexPartition {
            columns,
            multiplicities,
        }
    }

    /// Distinct columns, strictly increasing.
    pub fn columns(&self) -> &[MultiIndex] {
        &self.columns
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// `(λ_j, r_j)` pairs.
    pub fn parts(&self) -> impl Iterator<Item = (&MultiIndex, u32)> {
        self.columns.iter().zip(self.multiplicities.iter().copied())
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `l(Λ) = Σ r_j`, the number of columns counted with multiplicity.
    pub fn length(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// `|Λ| = Σ r_j |λ_j|`.
    pub fn weight(&self) -> u32 {
        self.parts().map(|(c, r)| r * c.order()).sum()
    }

    /// `Λ! = ∏ (λ_j!)^{r_j}`.
    pub fn factorial(&self) -> BigUint {
        self.parts().map(|(c, r)| c.factorial().pow(r)).product()
    }

    /// `m(Λ)! = ∏ r_j!`.
    pub fn multiplicity_factorial(&self) -> BigUint {
        self.multiplicities.iter().map(|&r| factorial(r)).product()
    }

    /// `i! / (Λ! m(Λ)!)` for the target `i`: the number of set partitions of
    /// a labelled multiset of type `i` whose blocks have the column types of `Λ`.
    pub fn set_partition_count(&self) -> BigUint {
        match self.target() {
            None => BigUint::one(),
            Some(t) => t.factorial() / (self.factorial() * self.multiplicity_factorial()),
        }
    }

    /// `Σ r_j λ_j`, or `None` for the empty partition (its length is unknown).
    pub fn target(&self) -> Option<MultiIndex> {
        let n = self.columns.first()?.len();
        Some(
            self.parts()
                .fold(MultiIndex::zeros(n), |acc, (c, r)| acc.add(&c.scaled(r))),
        )
    }

    /// Largest `|λ_j|` over the columns (0 for the empty partition).
    pub fn max_column_order(&self) -> u32 {
        self.columns.iter().map(MultiIndex::order).max().unwrap_or(0)
    }

    /// `g_Λ = ∏ g_{λ_j}^{r_j}`; equals 1 for the empty partition.
    pub fn associated_product(&self, mut g: impl FnMut(&MultiIndex) -> f64) -> f64 {
        self.parts().map(|(c, r)| g(c).powi(r as i32)).product()
    }
}

impl fmt::Display for MultiIndexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, (c, r)) in self.parts().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            if r == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}^{r}")?;
            }
        }
        write!(f, "]")
    }
}

/// Every partition of `i`, each exactly once, in a fixed order.
pub fn enumerate_partitions(i: &MultiIndex, cap: OrderCap) -> Result<Vec<MultiIndexPartition>> {
    enumerate_restricted(i, cap, None)
}

/// Partitions of `i` whose columns all satisfy `|λ| ≤ 2`, in the same relative
/// order as [`enumerate_partitions`].
pub fn enumerate_p2_partitions(i: &MultiIndex, cap: OrderCap) -> Result<Vec<MultiIndexPartition>> {
    enumerate_restricted(i, cap, Some(2))
}

/// Partitions whose columns have order at most `max_column_order` (all when `None`).
pub fn enumerate_restricted(
    i: &MultiIndex,
    cap: OrderCap,
    max_column_order: Option<u32>,
) -> Result<Vec<MultiIndexPartition>> {
    cap.check(i)?;
    let mut out = Vec::new();
    let mut stack = Vec::new();
    descend(i, None, max_column_order, &mut stack, &mut out);
    Ok(out)
}

// Columns are chosen in non-decreasing order, so each multiset is reached once.
fn descend(
    remaining: &MultiIndex,
    floor: Option<&MultiIndex>,
    max_column_order: Option<u32>,
    stack: &mut Vec<MultiIndex>,
    out: &mut Vec<MultiIndexPartition>,
) {
    if remaining.is_zero() {
        out.push(MultiIndexPartition::from_sorted(stack));
        return;
    }
    for col in remaining.sub_indices() {
        if col.is_zero() || floor.is_some_and(|f| &col < f) {
            continue;
        }
        if max_column_order.is_some_and(|m| col.order() > m) {
            continue;
        }
        let rest = remaining.checked_sub(&col).expect("sub-index");
        stack.push(col);
        let col_ref = stack.last().unwrap().clone();
        descend(&rest, Some(&col_ref), max_column_order, stack, out);
        stack.pop();
    }
}

/// Every ordered tuple `(s_1, ..., s_d)` of multi-indices (zeros allowed) with
/// `s_1 + ... + s_d = i`.
pub fn enumerate_decompositions(i: &MultiIndex, d: usize, cap: OrderCap) -> Result<Vec<Vec<MultiIndex>>> {
    if d == 0 {
        return Err(Error::invalid("decomposition into zero parts"));
    }
    cap.check(i)?;
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(d);
    decompose(i, d, &mut stack, &mut out);
    Ok(out)
}

fn decompose(remaining: &MultiIndex, parts_left: usize, stack: &mut Vec<MultiIndex>, out: &mut Vec<Vec<MultiIndex>>) {
    if parts_left == 1 {
        stack.push(remaining.clone());
        out.push(stack.clone());
        stack.pop();
        return;
    }
    for s in remaining.sub_indices() {
        let rest = remaining.checked_sub(&s).expect("sub-index");
        stack.push(s);
        decompose(&rest, parts_left - 1, stack, out);
        stack.pop();
    }
}
