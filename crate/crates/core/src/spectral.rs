//! Perron-Frobenius analysis of nonnegative integer matrices.
//!
//! Primitivity and characteristic polynomials are computed exactly. Only the
//! eigenvalue itself is a float, and it always comes with a Collatz-Wielandt
//! bracket `[lower, upper]` that contains the true value.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Above this dimension `is_primitive_auto` switches from the Wielandt power
/// to the period computation.
pub const WIELANDT_MAX_DIM: usize = 8;

/// Square matrix of nonnegative integers; `m[i][j]` counts traversals of
/// petal j by the image of petal i.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransitionMatrix {
    rows: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::Precondition("matrix must be nonempty".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Precondition("matrix must be square".into()));
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| (0..k).map(|j| u64::from(i == j)).collect())
            .collect();
        TransitionMatrix { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn max_row_sum(&self) -> u64 {
        self.row_sums().into_iter().max().unwrap_or(0)
    }

    pub fn min_row_sum(&self) -> u64 {
        self.row_sums().into_iter().min().unwrap_or(0)
    }

    pub fn max_entry(&self) -> u64 {
        self.rows.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Sum of all entries.
    pub fn total(&self) -> u64 {
        self.rows.iter().flatten().sum()
    }

    /// Matrix product `self · other`. Panics on `u64` overflow.
    pub fn mul(&self, other: &TransitionMatrix) -> TransitionMatrix {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let k = self.dim();
        let rows = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        (0..k).fold(0u64, |acc, l| {
                            acc.checked_add(
                                self.rows[i][l]
                                    .checked_mul(other.rows[l][j])
                                    .expect("matrix entry overflow"),
                            )
                            .expect("matrix entry overflow")
                        })
                    })
                    .collect()
            })
            .collect();
        TransitionMatrix { rows }
    }

    pub fn transpose(&self) -> TransitionMatrix {
        let k = self.dim();
        let rows = (0..k)
            .map(|i| (0..k).map(|j| self.rows[j][i]).collect())
            .collect();
        TransitionMatrix { rows }
    }

    /// `P M P⁻¹` for the permutation sending index i to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> TransitionMatrix {
        let k = self.dim();
        let mut rows = vec![vec![0; k]; k];
        for i in 0..k {
            for j in 0..k {
                rows[perm[i]][perm[j]] = self.rows[i][j];
            }
        }
        TransitionMatrix { rows }
    }

    fn plus_identity(&self) -> TransitionMatrix {
        let mut m = self.clone();
        for i in 0..m.dim() {
            m.rows[i][i] += 1;
        }
        m
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(j, _)| j)
    }

    fn reach(&self, start: usize, transpose: bool) -> Vec<bool> {
        let k = self.dim();
        let mut seen = vec![false; k];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..k {
                let arc = if transpose {
                    self.rows[v][u]
                } else {
                    self.rows[u][v]
                };
                if arc > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Strong connectivity of the support digraph.
    pub fn is_irreducible(&self) -> bool {
        self.reach(0, false).into_iter().all(|b| b) && self.reach(0, true).into_iter().all(|b| b)
    }

    /// Gcd of the cycle lengths of an irreducible matrix; `None` if reducible.
    pub fn period(&self) -> Option<u64> {
        if !self.is_irreducible() {
            return None;
        }
        let k = self.dim();
        let mut level = vec![usize::MAX; k];
        level[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for v in self.successors(u) {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0u64;
        for u in 0..k {
            for v in self.successors(u) {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs();
                g = g.gcd(&diff);
            }
        }
        Some(g)
    }

    /// Wielandt test: `M^((k-1)^2+1)` is entrywise positive. Entries are
    /// clamped to 0/1 so the powers never grow.
    pub fn is_primitive(&self) -> bool {
        let k = self.dim();
        let support: Vec<Vec<bool>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| v > 0).collect())
            .collect();
        let bool_mul = |a: &Vec<Vec<bool>>, b: &Vec<Vec<bool>>| -> Vec<Vec<bool>> {
            (0..k)
                .map(|i| (0..k).map(|j| (0..k).any(|l| a[i][l] && b[l][j])).collect())
                .collect()
        };
        let mut exponent = (k - 1) * (k - 1) + 1;
        let mut base = support;
        let mut acc: Option<Vec<Vec<bool>>> = None;
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => bool_mul(&a, &base),
                });
            }
            exponent >>= 1;
            if exponent > 0 {
                base = bool_mul(&base, &base);
            }
        }
        acc.expect("exponent is positive")
            .iter()
            .all(|r| r.iter().all(|&b| b))
    }

    /// Irreducible with period 1.
    pub fn is_primitive_by_period(&self) -> bool {
        self.period() == Some(1)
    }

    /// Wielandt power for small matrices, period computation above
    /// [`WIELANDT_MAX_DIM`].
    pub fn is_primitive_auto(&self) -> bool {
        if self.dim() > WIELANDT_MAX_DIM {
            self.is_primitive_by_period()
        } else {
            self.is_primitive()
        }
    }

    /// PF eigenvalue of a primitive matrix by power iteration.
    pub fn pf_eigenvalue(&self, tol: f64) -> Result<SpectralResult> {
        if !(tol > 0.0) {
            return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
        }
        if !self.is_primitive_auto() {
            return Err(Error::NotPrimitive);
        }
        power_iteration(self, tol, 0.0)
    }

    /// PF eigenvalue of an irreducible (possibly imprimitive) matrix, via the
    /// primitive shift `M + I`.
    pub fn pf_eigenvalue_irreducible(&self, tol: f64) -> Result<SpectralResult> {
        if !self.is_irreducible() {
            return Err(Error::Precondition("matrix is reducible".into()));
        }
        if self.is_primitive_auto() {
            return self.pf_eigenvalue(tol);
        }
        power_iteration(&self.plus_identity(), tol, 1.0)
    }

    /// Characteristic polynomial `det(xI - M)`, coefficients from the
    /// constant term up to the leading 1 (Faddeev-LeVerrier; every division
    /// is exact over the integers).
    pub fn char_poly(&self) -> CharPoly {
        let k = self.dim();
        let a: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect();
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = BigInt::from(1);
        let mut m: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); k]; k];
        for j in 1..=k {
            // m <- A m + c_{k-j+1} I
            let mut next = big_mul(&a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += &coeffs[k - j + 1];
            }
            m = next;
            let am = big_mul(&a, &m);
            let trace: BigInt = (0..k).map(|i| am[i][i].clone()).sum();
            let (q, r) = (-trace).div_rem(&BigInt::from(j));
            debug_assert!(r.is_zero(), "Faddeev-LeVerrier division must be exact");
            coeffs[k - j] = q;
        }
        CharPoly { coeffs }
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

fn big_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let k = a.len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (0..k).map(|l| &a[i][l] * &b[l][j]).sum())
                .collect()
        })
        .collect()
}

/// Outcome of a PF eigenvalue computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Certified bracket: `lower <= λ <= upper`.
    pub lower: f64,
    pub upper: f64,
    /// Half the bracket width, plus a rounding allowance.
    pub error_bound: f64,
    /// Positive right eigenvector normalized to sum 1.
    pub right_eigenvector: Vec<f64>,
    pub iterations: usize,
}

fn power_iteration(m: &TransitionMatrix, tol: f64, shift: f64) -> Result<SpectralResult> {
    let k = m.dim();
    let rows: Vec<Vec<f64>> = m
        .rows
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let max_row = m.max_row_sum() as f64;
    let mut x = vec![1.0 / k as f64; k];
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (yi, xi) in y.iter().zip(&x) {
            let ratio = yi / xi;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        // the Collatz-Wielandt bounds only tighten; keep the best seen
        lower = lower.max(lo);
        upper = upper.min(hi);
        let sum: f64 = y.iter().sum();
        x = y.into_iter().map(|v| v / sum).collect();
        if upper - lower <= tol {
            let slack = 4.0 * f64::EPSILON * upper.abs() * k as f64;
            let lambda = ((lower + upper) / 2.0).min(max_row);
            return Ok(SpectralResult {
                lambda: lambda - shift,
                lower: lower - slack - shift,
                upper: upper + slack - shift,
                error_bound: (upper - lower) / 2.0 + slack,
                right_eigenvector: x,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        lower: lower - shift,
        upper: upper - shift,
    })
}

/// Integer polynomial, coefficients from the constant term upwards.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharPoly {
    coeffs: Vec<BigInt>,
}

impl CharPoly {
    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        CharPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficients as `i64`, highest degree first (JSON-friendly).
    pub fn to_i64_desc(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .rev()
            .map(|c| i64::try_from(c.clone()).expect("coefficient fits in i64"))
            .collect()
    }
}

impl fmt::Display for CharPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (deg, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let abs = c.abs();
            let show_coeff = deg == 0 || abs != BigInt::from(1);
            if show_coeff {
                write!(f, "{abs}")?;
            }
            match deg {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{deg}")?,
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

pub mod oracle {
    //! Independent check of PF eigenvalues: the largest real root of the
    //! characteristic polynomial, isolated by exact Sturm-sequence counting
    //! at dyadic rationals.

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    use super::{CharPoly, TransitionMatrix};

    type Poly = Vec<BigRational>;

    fn trim(mut p: Poly) -> Poly {
        while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
            p.pop();
        }
        p
    }

    fn derivative(p: &Poly) -> Poly {
        if p.len() <= 1 {
            return vec![BigRational::zero()];
        }
        trim(
            p.iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    fn is_zero_poly(p: &Poly) -> bool {
        p.iter().all(|c| c.is_zero())
    }

    fn rem(a: &Poly, b: &Poly) -> Poly {
        let mut r = a.clone();
        let db = b.len() - 1;
        let lead = b[db].clone();
        while r.len() > db && !is_zero_poly(&r) {
            let dr = r.len() - 1;
            let factor = &r[dr] / &lead;
            for i in 0..=db {
                let t = &factor * &b[i];
                r[dr - db + i] -= t;
            }
            r.pop();
            r = trim(r);
            if r.len() <= db {
                break;
            }
        }
        trim(r)
    }

    fn sturm_chain(p: &Poly) -> Vec<Poly> {
        let mut chain = vec![p.clone(), derivative(p)];
        loop {
            let n = chain.len();
            if is_zero_poly(&chain[n - 1]) || chain[n - 1].len() == 1 {
                break;
            }
            let r = rem(&chain[n - 2], &chain[n - 1]);
            if is_zero_poly(&r) {
                break;
            }
            chain.push(r.into_iter().map(|c| -c).collect());
        }
        chain.retain(|q| !is_zero_poly(q));
        chain
    }

    fn eval(p: &Poly, x: &BigRational) -> BigRational {
        p.iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    fn sign_changes(chain: &[Poly], x: &BigRational) -> usize {
        let signs: Vec<i8> = chain
            .iter()
            .map(|q| {
                let v = eval(q, x);
                if v.is_positive() {
                    1
                } else if v.is_negative() {
                    -1
                } else {
                    0
                }
            })
            .filter(|&s| s != 0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    fn dyadic(x: f64) -> BigRational {
        BigRational::from_float(x).expect("finite")
    }

    /// Largest real root of `p` inside `(lo, hi]`, to within `tol`.
    pub fn largest_real_root(p: &CharPoly, lo: f64, hi: f64, tol: f64) -> Option<f64> {
        let poly: Poly = trim(
            p.coeffs()
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        );
        let chain = sturm_chain(&poly);
        let count = |a: &BigRational, b: &BigRational| sign_changes(&chain, a) - sign_changes(&chain, b);
        let mut a = dyadic(lo);
        let mut b = dyadic(hi);
        if count(&a, &b) == 0 {
            return None;
        }
        // invariant: the largest root in (lo, hi] lies in (a, b]
        let two = BigRational::from_integer(BigInt::from(2));
        let tol = dyadic(tol);
        while &b - &a > tol {
            let mid = (&a + &b) / &two;
            if count(&mid, &b) > 0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        ((&a + &b) / two).to_f64()
    }

    /// Largest real root of `char_poly(M)` by bisection on `[1, max row sum]`.
    pub fn pf_root_oracle(m: &TransitionMatrix, tol: f64) -> f64 {
        let hi = m.max_row_sum().max(1) as f64;
        let poly = m.char_poly();
        // search from just below 1 so a root at exactly 1 is still seen
        largest_real_root(&poly, 1.0 - 1.0 / 1024.0, hi, tol)
            .or_else(|| largest_real_root(&poly, -(hi + 1.0), hi, tol))
            .unwrap_or_else(|| BigRational::one().to_f64().unwrap())
    }
}
