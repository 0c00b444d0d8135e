//! The kernels `g_k^r(x) = P(Bin(k, 1-x) ≤ r-1) / x` and their average
//! `G_ξ^r(x) = Σ_k P(ξ = k) g_k^r(x)`.
//!
//! Everything is evaluated through the polynomial form
//! `Σ_{i<r} C(k,i) x^{k-i-1} (1-x)^i`, which is finite at `x = 0` where the
//! quotient form is `0/0`.
//!
//! Two facts drive the truncation logic: `g_k^r(x)` is non-increasing in `k`
//! (consecutive differences are the non-negative terms
//! `C(k, r-1) x^{k-r} (1-x)^r`), and `g_r^r ≤ r`. So once `g_k(x) · P(ξ ≥ k)`
//! drops below the error budget, the rest of the table can be skipped.

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::offspring::OffspringDistribution;
use crate::sum::CompensatedSum;

const EXACT_BINOMIAL_MAX: usize = 50;

fn pascal() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(EXACT_BINOMIAL_MAX + 1);
        for n in 0..=EXACT_BINOMIAL_MAX {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Exact `C(n, k)` for `n ≤ 50` (every entry is below 2^53).
#[cfg(test)]
pub(crate) fn exact_binomial(n: u64, k: u64) -> Option<f64> {
    if n as usize > EXACT_BINOMIAL_MAX || k > n {
        return None;
    }
    Some(pascal()[n as usize][k as usize])
}

/// The pair `(x, y)` with logarithms, for evaluating
/// `Σ_{i<r} C(k,i) x^{k-i-1} y^i`. Ordinarily `y = 1 - x`; interval bounds
/// use independent endpoints.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    x: f64,
    y: f64,
    ln_x: f64,
    ln_y: f64,
}

impl Point {
    pub(crate) fn new(x: f64) -> Self {
        Self {
            x,
            y: 1.0 - x,
            ln_x: x.ln(),
            ln_y: (-x).ln_1p(),
        }
    }

    pub(crate) fn split(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            ln_x: x.ln(),
            ln_y: y.ln(),
        }
    }
}

/// `Σ_{i<r} C(k,i) x^{k-i-1} y^i` at `pt`; equals `g_k^r(x)` when
/// `y = 1 - x`. Requires `k ≥ r`.
#[inline]
pub(crate) fn g_at(k: u64, r: u64, pt: &Point) -> f64 {
    let (x, y) = (pt.x, pt.y);
    if x == 0.0 {
        return if k == r { r as f64 * y.powi(r as i32 - 1) } else { 0.0 };
    }
    if y == 0.0 {
        return x.powi((k - 1) as i32);
    }
    let mut acc = 0.0;
    if k as usize <= EXACT_BINOMIAL_MAX {
        let row = &pascal()[k as usize];
        let mut ypow = 1.0;
        for i in 0..r {
            acc += row[i as usize] * x.powi((k - i - 1) as i32) * ypow;
            ypow *= y;
        }
    } else {
        let mut ln_c = 0.0;
        for i in 0..r {
            if i > 0 {
                ln_c += ((k - i + 1) as f64 / i as f64).ln();
            }
            acc += (ln_c + (k - i - 1) as f64 * pt.ln_x + i as f64 * pt.ln_y).exp();
        }
    }
    acc
}

/// `g_k^r(x)` on `[0, 1]` for `k ≥ r ≥ 1`.
pub fn eval_g(k: u64, r: u64, x: f64) -> Result<f64> {
    if r == 0 {
        return Err(domain!("threshold r must be positive"));
    }
    if k < r {
        return Err(domain!("g_k^r needs k ≥ r, got k={k}, r={r}"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(domain!("x must lie in [0,1], got {x}"));
    }
    Ok(g_at(k, r, &Point::new(x)))
}

/// Result of evaluating `G_ξ^r(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEvaluation {
    pub x: f64,
    pub value: f64,
    /// Certified bound on the contribution of skipped or unstored support.
    pub truncation_error: f64,
    pub terms_used: usize,
}

/// Table view restricted to `k ≥ r`, used by the hot loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GSum<'a> {
    ks: &'a [u64],
    probs: &'a [f64],
    tail_from: &'a [f64],
    r: u64,
}

impl<'a> GSum<'a> {
    /// View of the entries of `dist` with `k ≥ r`.
    pub(crate) fn new(dist: &'a OffspringDistribution, r: u64) -> Self {
        let ks = dist.support();
        let start = ks.partition_point(|&k| k < r);
        Self {
            ks: &ks[start..],
            probs: &dist.probs()[start..],
            tail_from: &dist.tail_from()[start..],
            r,
        }
    }

    pub(crate) fn r(&self) -> u64 {
        self.r
    }

    pub(crate) fn ks(&self) -> &'a [u64] {
        self.ks
    }

    pub(crate) fn probs(&self) -> &'a [f64] {
        self.probs
    }

    pub(crate) fn tail_from(&self) -> &'a [f64] {
        self.tail_from
    }

    /// `(value, truncation_error, terms)`; stops once the remainder bound is
    /// at most `stop`.
    pub(crate) fn eval(&self, x: f64, stop: f64) -> (f64, f64, usize) {
        if x == 1.0 {
            let mass: CompensatedSum = self.probs.iter().copied().collect();
            return (mass.value(), self.tail_from[self.ks.len()], self.ks.len());
        }
        let pt = Point::new(x);
        let mut acc = CompensatedSum::new();
        let mut g_last = self.r as f64;
        for (j, (&k, &p)) in self.ks.iter().zip(self.probs).enumerate() {
            let g = g_at(k, self.r, &pt);
            acc.add(p * g);
            g_last = g;
            let rest = g * self.tail_from[j + 1];
            if rest <= stop {
                return (acc.value(), rest, j + 1);
            }
        }
        let omitted = self.tail_from[self.ks.len()];
        (acc.value(), g_last * omitted, self.ks.len())
    }
}

/// `G_ξ^r(x)` with truncation error at most `tol`.
#[allow(non_snake_case)]
pub fn eval_G(dist: &OffspringDistribution, r: u64, x: f64, tol: f64) -> Result<GEvaluation> {
    if r == 0 {
        return Err(domain!("threshold r must be positive"));
    }
    if dist.min_support() < r {
        return Err(domain!(
            "G_ξ^r needs ξ ≥ r, but the support starts at {} (r = {r})",
            dist.min_support()
        ));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(domain!("x must lie in [0,1], got {x}"));
    }
    if !(tol > 0.0) {
        return Err(domain!("tolerance must be positive"));
    }
    let dist = dist.with_tail_at_most(tol / (2.0 * r as f64))?;
    let (value, truncation_error, terms_used) = GSum::new(&dist, r).eval(x, tol / 2.0);
    Ok(GEvaluation {
        x,
        value,
        truncation_error,
        terms_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::{make_constant, make_corpus, make_table};
    use crate::specfun::binom_tail_le;
    use approx::assert_relative_eq;

    fn grid(step: f64) -> impl Iterator<Item = f64> {
        let n = (1.0 / step).round() as usize;
        (0..=n).map(move |i| i as f64 / n as f64)
    }

    #[test]
    fn kernel_examples() {
        assert_relative_eq!(eval_g(2, 2, 0.5).unwrap(), 1.5, max_relative = 1e-15);
        assert_relative_eq!(eval_g(3, 2, 0.5).unwrap(), 1.0, max_relative = 1e-15);
        for k in [2, 3, 7, 49, 50, 51, 400] {
            assert_eq!(eval_g(k, 2, 1.0).unwrap(), 1.0);
        }
        assert!(eval_g(1, 2, 0.5).is_err());
        assert!(eval_g(3, 2, 1.1).is_err());
    }

    #[test]
    fn kernel_endpoints() {
        for r in 2..=6 {
            assert_eq!(eval_g(r, r, 0.0).unwrap(), r as f64);
            for k in r + 1..r + 60 {
                assert_eq!(eval_g(k, r, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn g_rr_is_geometric_sum() {
        for r in 2..=6u64 {
            for x in grid(0.01) {
                let want: f64 = (0..r).map(|i| (1.0 - x).powi(i as i32)).sum();
                assert!((eval_g(r, r, x).unwrap() - want).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn recurrence_difference_identity() {
        for r in 2..=5u64 {
            for k in r + 1..=r + 40 {
                for x in grid(0.05) {
                    let lhs = eval_g(r, r, x).unwrap() - eval_g(k, r, x).unwrap();
                    let rhs: f64 = (r..k)
                        .map(|i| exact_binomial(i, r - 1).unwrap() * x.powi((i - r) as i32) * (1.0 - x).powi(r as i32))
                        .sum();
                    assert!((lhs - rhs).abs() <= 1e-10, "r={r} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn quotient_form_agrees() {
        for r in 2..=4u64 {
            for k in [r, r + 1, r + 5, 48, 52, 120] {
                for i in 1..=100 {
                    let x = i as f64 / 100.0;
                    let quotient = binom_tail_le(k, r - 1, 1.0 - x).unwrap() / x;
                    assert!(
                        (eval_g(k, r, x).unwrap() - quotient).abs() <= 1e-10,
                        "k={k} r={r} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn log_space_branch_is_continuous() {
        // k = 50 uses the exact table, k = 51 log space; compare against the
        // one-step recurrence g_50 - g_51 = C(50, r-1) x^{50-r} (1-x)^r
        for r in 2..=5u64 {
            for x in grid(0.05) {
                let d = eval_g(50, r, x).unwrap() - eval_g(51, r, x).unwrap();
                let term = exact_binomial(50, r - 1).unwrap() * x.powi(50 - r as i32) * (1.0 - x).powi(r as i32);
                assert!((d - term).abs() <= 1e-12, "r={r} x={x}");
            }
        }
    }

    #[test]
    fn lower_bound_near_one() {
        // g_k(1-t) ≥ (1 - k^r t^r / r!) / (1 - t)
        for r in 2..=4u64 {
            let fact: f64 = (1..=r).map(|i| i as f64).product();
            for k in r..r + 30 {
                for i in 0..100 {
                    let t = i as f64 / 100.0;
                    let lb = (1.0 - (k as f64 * t).powi(r as i32) / fact) / (1.0 - t);
                    assert!(eval_g(k, r, 1.0 - t).unwrap() >= lb - 1e-10);
                }
            }
        }
    }

    #[test]
    fn average_examples() {
        let c = make_constant(7).unwrap();
        for x in grid(0.1) {
            assert_eq!(eval_G(&c, 3, x, 1e-12).unwrap().value, eval_g(7, 3, x).unwrap());
        }
        let t = make_table(&[(3, 0.5), (4, 0.5)]).unwrap();
        assert_relative_eq!(eval_G(&t, 2, 0.5, 1e-12).unwrap().value, 0.8125, max_relative = 1e-15);
        assert!(matches!(eval_G(&t, 4, 0.5, 1e-12), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn average_equals_one_at_one_and_is_dominated() {
        for r in 2..=3 {
            for m in make_corpus(r).unwrap() {
                let at_one = eval_G(&m.dist, r, 1.0, 1e-12).unwrap();
                assert!((at_one.value - 1.0).abs() <= 1e-12, "{}", m.name);
                for x in grid(0.01) {
                    let e = eval_G(&m.dist, r, x, 1e-12).unwrap();
                    assert!(e.value >= 0.0);
                    assert!(e.truncation_error <= 1e-12);
                    assert!(e.value <= eval_g(r, r, x).unwrap() + 1e-10, "{} x={x}", m.name);
                }
            }
        }
    }

    #[test]
    fn truncation_error_is_honest() {
        // compare the early-stopped sum with a full sum on the power law
        let corpus = make_corpus(2).unwrap();
        let pl = &corpus
            .iter()
            .find(|m| m.name.starts_with("power-law-2.5"))
            .unwrap()
            .dist;
        for x in [0.3, 0.9, 0.99, 0.999] {
            let e = eval_G(pl, 2, x, 1e-9).unwrap();
            let pt = Point::new(x);
            let full: f64 = pl
                .entries()
                .map(|(k, p)| p * g_at(k, 2, &pt))
                .collect::<CompensatedSum>()
                .value();
            assert!((e.value - full).abs() <= e.truncation_error + 1e-14, "x={x}");
            assert!(e.truncation_error <= 1e-9);
        }
    }
}
