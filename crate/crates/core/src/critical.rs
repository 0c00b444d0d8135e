//! Critical probability `p_c = 1 - 1/max_{[0,1]} G_ξ^r` and the
//! density-evolution recursion that gives an independent route to it.
//!
//! Write `y` for the probability that a vertex is *not* infected from below.
//! A vertex with `k` children escapes infection iff it is not initially
//! infected and at most `r-1` children are infected, so
//!
//! ```text
//! T(y) = (1-p) · E[P(Bin(ξ, 1-y) ≤ r-1)] = (1-p) · (P(ξ < r) + y·G_ξ^r(y)).
//! ```
//!
//! Starting from `y_0 = 1-p` (a leaf at the truncation depth), the iterates
//! `y_d = T^d(y_0)` are the probabilities that the root of a depth-`d` tree
//! escapes. `T` is non-decreasing and `T(y) ≤ 1-p`, so the sequence is
//! non-increasing and converges to the largest fixed point in `[0, 1-p]`.
//! That fixed point is positive iff `(1-p)·G(y) ≥ 1` somewhere, which is the
//! threshold `1 - 1/max G` again.

use crate::error::{domain, Error, Result};
use crate::gfunction::{g_at, GSum, Point};
use crate::offspring::OffspringDistribution;
use crate::optimize::grid_golden_max;

/// Grid size of the scan that precedes golden-section refinement.
pub const GRID_POINTS: usize = 4096;
/// Bracket width at which golden-section refinement stops.
pub const REFINE_WIDTH: f64 = 1e-12;

/// Maximum of `G_ξ^r` and the resulting critical probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalProfile {
    /// `max_{[0,1]} G_ξ^r`; infinite when `P(ξ < r) > 0`.
    pub m: f64,
    pub x_star: f64,
    pub p_c: f64,
    pub tol: f64,
    /// Set when `P(ξ < r) > 0`, in which case `p_c = 1`.
    pub degenerate: bool,
    /// Root of `1 + y + … + y^{r-1} = M` in `[0, 1]`; `None` when degenerate.
    pub y_aux: Option<f64>,
}

fn check_r(r: u64) -> Result<()> {
    if r < 2 {
        return Err(domain!("threshold r must be at least 2, got {r}"));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(domain!("{name} must lie in [0,1], got {v}"));
    }
    Ok(())
}

/// `(M, x_star)`: the maximum of `G_ξ^r` over `[0, 1]` and the smallest
/// maximiser found.
#[allow(non_snake_case)]
pub fn maximize_G(dist: &OffspringDistribution, r: u64, tol: f64) -> Result<(f64, f64)> {
    check_r(r)?;
    if dist.min_support() < r {
        return Err(domain!(
            "G_ξ^r needs ξ ≥ r, but the support starts at {} (r = {r})",
            dist.min_support()
        ));
    }
    if !(tol > 0.0) {
        return Err(domain!("tolerance must be positive"));
    }
    let eval_tol = tol / 10.0;
    let table = dist.with_tail_at_most(eval_tol / (2.0 * r as f64))?;
    let sum = GSum::new(&table, r);
    let (x, m) = grid_golden_max(|x| sum.eval(x, eval_tol / 2.0).0, 0.0, 1.0, GRID_POINTS, REFINE_WIDTH);
    Ok((m, x))
}

/// Solves `Σ_{i<r} y^i = m` for `y ∈ [0, 1]` by bisection.
pub fn solve_y_aux(r: u64, m: f64) -> f64 {
    let h = |y: f64| g_at(r, r, &Point::new(1.0 - y));
    if m <= 1.0 {
        return 0.0;
    }
    if m >= r as f64 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `p_c(T_ξ, r)`; equal to 1 whenever `ξ < r` has positive probability.
pub fn critical_probability(dist: &OffspringDistribution, r: u64, tol: f64) -> Result<CriticalProfile> {
    check_r(r)?;
    if dist.mass_below(r) > 0.0 {
        return Ok(CriticalProfile {
            m: f64::INFINITY,
            x_star: 0.0,
            p_c: 1.0,
            tol,
            degenerate: true,
            y_aux: None,
        });
    }
    let (m, x_star) = maximize_G(dist, r, tol)?;
    Ok(CriticalProfile {
        m,
        x_star,
        p_c: 1.0 - 1.0 / m,
        tol,
        degenerate: false,
        y_aux: Some(solve_y_aux(r, m)),
    })
}

/// Outcome of iterating the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// The iterates converge to 0: the root is almost surely infected from
    /// below in the limit.
    Extinct,
    /// The iterates converge to a positive fixed point.
    Survives,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Extinct => "extinct",
            Classification::Survives => "survives",
        }
    }
}

/// How a classification was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// An iterate fell to `10·tol` or below.
    BelowCutoff,
    /// Consecutive iterates moved by at most `tol` and no extinction
    /// certificate exists.
    Stalled,
    /// A point `z ≤ y_n` with `T(z) ≥ z` was found; the iterates never drop
    /// below `z`.
    SurvivalWitness,
    /// `T(z) < z` was verified on all of `(0, y_n]`, so the only fixed point
    /// left is 0.
    ExtinctionCertificate,
    /// `max_iter` was reached; classified from the last iterate.
    IterationLimit,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BelowCutoff => "below-cutoff",
            Verdict::Stalled => "stalled",
            Verdict::SurvivalWitness => "survival-witness",
            Verdict::ExtinctionCertificate => "extinction-certificate",
            Verdict::IterationLimit => "iteration-limit",
        }
    }
}

/// Iterates `y_0 = 1-p, y_{n+1} = T(y_n)` and their classification.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTrace {
    pub p: f64,
    pub iterates: Vec<f64>,
    /// Last iterate computed.
    pub limit: f64,
    pub classified: Classification,
    pub verdict: Verdict,
    pub converged: bool,
}

/// Absolute stopping threshold used when summing `G` inside `T`.
const MAP_EVAL_STOP: f64 = 1e-18;
/// Interval budget of the extinction certificate at a stall or at the end.
const CERT_BUDGET_FINAL: usize = 200_000;
/// Interval budget of the opportunistic certificate at checkpoints.
const CERT_BUDGET_CHECKPOINT: usize = 2_000;

/// Remainder allowed in [`Map::upper_g`] relative to the partial sum.
const UPPER_TAIL_REL: f64 = 1e-15;

/// The map `T` for fixed `(ξ, r, p)`.
struct Map<'a> {
    sum: GSum<'a>,
    below: f64,
    q: f64,
}

impl<'a> Map<'a> {
    fn new(dist: &'a OffspringDistribution, r: u64, p: f64) -> Self {
        Self {
            sum: GSum::new(dist, r),
            below: dist.mass_below(r),
            q: 1.0 - p,
        }
    }

    fn apply(&self, y: f64) -> f64 {
        let inner = if y > 0.0 {
            y * self.sum.eval(y, MAP_EVAL_STOP).0
        } else {
            0.0
        };
        (self.q * (self.below + inner)).clamp(0.0, self.q)
    }

    /// Upper bound for `G` on `[a, b]`: every term of `g_k` is monotone in
    /// `x` and in `1-x`, so `V_k = Σ_{i<r} C(k,i) b^{k-i-1} (1-a)^i` dominates,
    /// and `g_k ≤ g_r(a)` always. For `(k+1)·b < k+2-r` the `V_k` are
    /// non-increasing in `k`, so `V_k·P(ξ > k)` bounds the rest of the table;
    /// summation stops once that remainder is negligible next to the sum.
    fn upper_g(&self, a: f64, b: f64) -> f64 {
        let r = self.sum.r();
        let cap = g_at(r, r, &Point::new(a));
        let pt = Point::split(b, 1.0 - a);
        let (ks, probs, tail) = (self.sum.ks(), self.sum.probs(), self.sum.tail_from());
        let mut acc = 0.0;
        let mut last = cap;
        for (j, (&k, &pk)) in ks.iter().zip(probs).enumerate() {
            let v = g_at(k, r, &pt).min(cap);
            acc += pk * v;
            last = v;
            let rest = v * tail[j + 1];
            if ((k + 1) as f64) * b < (k + 2 - r) as f64 && rest <= UPPER_TAIL_REL * acc {
                return acc + rest;
            }
        }
        acc + last.max(cap) * tail[ks.len()]
    }

    /// True if `T(z) < z` for every `z ∈ (0, hi]`, checked by adaptive
    /// interval bounds on `G` with at most `budget` intervals.
    fn certify_extinction(&self, hi: f64, budget: usize) -> bool {
        if self.q == 0.0 || hi <= 0.0 {
            return true;
        }
        if self.below > 0.0 {
            return false;
        }
        let limit = 1.0 / (self.q * (1.0 + 1e-13));
        const START: usize = 64;
        let mut stack: Vec<(f64, f64)> = (0..START)
            .map(|j| (hi * j as f64 / START as f64, hi * (j + 1) as f64 / START as f64))
            .collect();
        let mut used = 0usize;
        while let Some((a, b)) = stack.pop() {
            used += 1;
            if used > budget {
                return false;
            }
            if self.upper_g(a, b) < limit {
                continue;
            }
            let mid = 0.5 * (a + b);
            if !(a < mid && mid < b) {
                return false;
            }
            stack.push((mid, b));
            stack.push((a, mid));
        }
        true
    }

    /// True if some `z = y·2^{-j}` has `T(z) ≥ z`.
    fn survival_witness(&self, y: f64) -> bool {
        if self.q == 0.0 {
            return false;
        }
        let mut z = y;
        for _ in 0..80 {
            z *= 0.5;
            if z == 0.0 {
                break;
            }
            if self.apply(z) >= z {
                return true;
            }
        }
        false
    }
}

/// One step `y ↦ (1-p)·E[P(Bin(ξ, 1-y) ≤ r-1)]`, clamped to `[0, 1-p]`.
pub fn recursion_step(dist: &OffspringDistribution, r: u64, p: f64, y: f64) -> Result<f64> {
    check_r(r)?;
    check_unit("p", p)?;
    check_unit("y", y)?;
    Ok(Map::new(dist, r, p).apply(y))
}

fn run(
    dist: &OffspringDistribution,
    r: u64,
    p: f64,
    max_iter: usize,
    tol: f64,
    record: bool,
) -> Result<RecursionTrace> {
    check_r(r)?;
    check_unit("p", p)?;
    if !(tol > 0.0) {
        return Err(domain!("tolerance must be positive"));
    }
    let map = Map::new(dist, r, p);
    let cutoff = 10.0 * tol;
    let mut y = 1.0 - p;
    let mut iterates = vec![y];
    let finish = |iterates: Vec<f64>, y: f64, classified, verdict, converged| RecursionTrace {
        p,
        iterates,
        limit: y,
        classified,
        verdict,
        converged,
    };
    let mut checkpoint = 64usize;
    for n in 1..=max_iter {
        if y <= cutoff {
            return Ok(finish(iterates, y, Classification::Extinct, Verdict::BelowCutoff, true));
        }
        let next = map.apply(y);
        let step = y - next;
        y = next.min(y);
        if record {
            iterates.push(y);
        }
        if y <= cutoff {
            return Ok(finish(iterates, y, Classification::Extinct, Verdict::BelowCutoff, true));
        }
        if step.abs() <= tol {
            if map.certify_extinction(y, CERT_BUDGET_FINAL) {
                return Ok(finish(
                    iterates,
                    y,
                    Classification::Extinct,
                    Verdict::ExtinctionCertificate,
                    true,
                ));
            }
            return Ok(finish(iterates, y, Classification::Survives, Verdict::Stalled, true));
        }
        if n == checkpoint {
            checkpoint *= 2;
            if map.survival_witness(y) {
                return Ok(finish(
                    iterates,
                    y,
                    Classification::Survives,
                    Verdict::SurvivalWitness,
                    false,
                ));
            }
            if y <= 0.5 && map.certify_extinction(y, CERT_BUDGET_CHECKPOINT) {
                return Ok(finish(
                    iterates,
                    y,
                    Classification::Extinct,
                    Verdict::ExtinctionCertificate,
                    false,
                ));
            }
        }
    }
    if map.survival_witness(y) {
        return Ok(finish(
            iterates,
            y,
            Classification::Survives,
            Verdict::SurvivalWitness,
            false,
        ));
    }
    if map.certify_extinction(y, CERT_BUDGET_FINAL) {
        return Ok(finish(
            iterates,
            y,
            Classification::Extinct,
            Verdict::ExtinctionCertificate,
            false,
        ));
    }
    let classified = if y <= cutoff {
        Classification::Extinct
    } else {
        Classification::Survives
    };
    Ok(finish(iterates, y, classified, Verdict::IterationLimit, false))
}

/// Iterates the recursion from `y_0 = 1-p` until consecutive iterates differ
/// by at most `tol`, an iterate drops to `10·tol`, a certificate settles the
/// classification, or `max_iter` steps have been taken. Every iterate is
/// recorded.
pub fn recursion_limit(
    dist: &OffspringDistribution,
    r: u64,
    p: f64,
    max_iter: usize,
    tol: f64,
) -> Result<RecursionTrace> {
    run(dist, r, p, max_iter, tol, true)
}

/// `y_d = T^d(1-p)`: the probability that the root of a depth-`d` truncated
/// tree is not infected from below.
pub fn recursion_iterate(dist: &OffspringDistribution, r: u64, p: f64, depth: usize) -> Result<f64> {
    check_r(r)?;
    check_unit("p", p)?;
    let map = Map::new(dist, r, p);
    let mut y = 1.0 - p;
    for _ in 0..depth {
        y = map.apply(y);
    }
    Ok(y)
}

/// Classification only, without recording the iterates.
pub fn classify(dist: &OffspringDistribution, r: u64, p: f64, max_iter: usize, tol: f64) -> Result<Classification> {
    Ok(run(dist, r, p, max_iter, tol, false)?.classified)
}

pub const BISECTION_MAX_ITER: usize = 1_000_000;
pub const BISECTION_INNER_TOL: f64 = 1e-14;

/// Threshold in `p` between survival and extinction of the recursion, found
/// by bisection to bracket width `tol`.
pub fn threshold_by_bisection(dist: &OffspringDistribution, r: u64, tol: f64) -> Result<f64> {
    check_r(r)?;
    if !(tol > 0.0) {
        return Err(domain!("tolerance must be positive"));
    }
    let class = |p: f64| classify(dist, r, p, BISECTION_MAX_ITER, BISECTION_INNER_TOL);
    if class(0.0)? != Classification::Survives {
        return Err(Error::Diagnostic("recursion dies out at p = 0".into()));
    }
    if dist.mass_below(r) > 0.0 {
        return Ok(1.0);
    }
    if class(1.0)? != Classification::Extinct {
        return Err(Error::Diagnostic("recursion survives at p = 1".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match class(mid)? {
            Classification::Survives => lo = mid,
            Classification::Extinct => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunction::eval_G;
    use crate::offspring::{make_constant, make_corpus, make_table};

    /// Plain dense-grid maximum, independent of the optimiser.
    fn brute_max(dist: &OffspringDistribution, r: u64, n: usize) -> f64 {
        (0..=n)
            .map(|i| eval_G(dist, r, i as f64 / n as f64, 1e-13).unwrap().value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn constant_three_interior_maximum() {
        let d = make_constant(3).unwrap();
        let (m, x) = maximize_G(&d, 2, 1e-10).unwrap();
        assert!((m - 9.0 / 8.0).abs() < 1e-12);
        assert!((x - 0.75).abs() < 1e-6);
        assert!((brute_max(&d, 2, 1_000_000) - m).abs() < 1e-11);
        let prof = critical_probability(&d, 2, 1e-10).unwrap();
        assert!((prof.p_c - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn constant_r_maximum_at_zero() {
        for r in 2..=6 {
            let d = make_constant(r).unwrap();
            let (m, x) = maximize_G(&d, r, 1e-10).unwrap();
            assert_eq!(m, r as f64);
            assert_eq!(x, 0.0);
            let prof = critical_probability(&d, r, 1e-10).unwrap();
            assert!((prof.p_c - (1.0 - 1.0 / r as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_support() {
        let d = make_table(&[(1, 0.2), (4, 0.8)]).unwrap();
        let prof = critical_probability(&d, 2, 1e-10).unwrap();
        assert!(prof.degenerate);
        assert_eq!(prof.p_c, 1.0);
        assert_eq!(threshold_by_bisection(&d, 2, 1e-7).unwrap(), 1.0);
    }

    #[test]
    fn profile_invariants_on_corpus() {
        for r in 2..=3 {
            for c in make_corpus(r).unwrap() {
                let prof = critical_probability(&c.dist, r, 1e-10).unwrap();
                assert!(prof.m >= 1.0 - 1e-12, "{}", c.name);
                assert!((prof.p_c - (1.0 - 1.0 / prof.m)).abs() <= 1e-14);
                assert!((0.0..=1.0).contains(&prof.p_c));
                let y = prof.y_aux.unwrap();
                let s: f64 = (0..r).map(|i| y.powi(i as i32)).sum();
                assert!((s - prof.m).abs() <= 1e-10, "{}", c.name);
                assert!(prof.p_c >= (r - 1) as f64 / r as f64 * y - 1e-10, "{}", c.name);
            }
        }
    }

    #[test]
    fn step_examples() {
        let d = make_constant(3).unwrap();
        assert_eq!(recursion_step(&d, 2, 0.3, 0.0).unwrap(), 0.0);
        assert!((recursion_step(&d, 2, 0.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((recursion_step(&d, 2, 0.1, 0.5).unwrap() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn limit_examples() {
        let d = make_constant(3).unwrap();
        let t = recursion_limit(&d, 2, 0.0, 1000, 1e-14).unwrap();
        assert_eq!(t.classified, Classification::Survives);
        assert_eq!(t.limit, 1.0);

        let t = recursion_limit(&d, 2, 0.12, 1_000_000, 1e-14).unwrap();
        assert_eq!(t.classified, Classification::Extinct);

        let t = recursion_limit(&d, 2, 0.08, 1_000_000, 1e-14).unwrap();
        assert_eq!(t.classified, Classification::Survives);
        assert!(t.limit > 0.1);
        // the limit solves G(y) = 1/0.92, i.e. 3y - 2y² = 1/0.92 on the upper branch
        let want = (3.0 + (9.0 - 8.0 / 0.92f64).sqrt()) / 4.0;
        assert!((t.limit - want).abs() < 1e-6, "{} vs {want}", t.limit);
        for w in t.iterates.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
            assert!((0.0..=1.0).contains(&w[1]));
        }
    }

    #[test]
    fn bisection_examples() {
        for (b, r, want) in [(3, 2, 1.0 / 9.0), (2, 2, 0.5), (3, 3, 2.0 / 3.0), (4, 4, 0.75)] {
            let d = make_constant(b).unwrap();
            let p = threshold_by_bisection(&d, r, 1e-7).unwrap();
            assert!((p - want).abs() <= 1e-6, "b={b} r={r}: {p}");
        }
    }

    #[test]
    fn bisection_when_max_at_zero() {
        // mass above r makes the remainder bound in the certificate matter
        let d = make_table(&[(3, 0.6), (12, 0.4)]).unwrap();
        let prof = critical_probability(&d, 3, 1e-10).unwrap();
        assert_eq!(prof.x_star, 0.0);
        let p = threshold_by_bisection(&d, 3, 1e-7).unwrap();
        assert!((p - prof.p_c).abs() <= 1e-6, "{p} vs {}", prof.p_c);
    }

    #[test]
    fn classification_monotone_in_p() {
        for c in make_corpus(2).unwrap() {
            let pc = critical_probability(&c.dist, 2, 1e-10).unwrap().p_c;
            let ps: Vec<f64> = [-0.05, -0.01, 0.01, 0.05]
                .iter()
                .map(|d| (pc + d).clamp(0.0, 1.0))
                .collect();
            let cls: Vec<_> = ps
                .iter()
                .map(|&p| classify(&c.dist, 2, p, BISECTION_MAX_ITER, 1e-14).unwrap())
                .collect();
            for i in 1..cls.len() {
                if cls[i] == Classification::Survives {
                    assert_eq!(cls[i - 1], Classification::Survives, "{}", c.name);
                }
            }
            assert_eq!(cls[0], Classification::Survives, "{}", c.name);
        }
    }
}
