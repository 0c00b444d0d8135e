//! Explicit moment lower bounds on `p_c`, numerical checks of the integral
//! inequalities they rest on, and sharpness experiments.
//!
//! For `α ∈ (0, r-1)` with `t = ⌊α⌋`, `ε = α - t`:
//!
//! ```text
//! c1  = Γ(r-1-α) / [(r-1)(r-2)…(r-1-t) · Γ(r-1-t)]
//! c2  = Σ_{i=0}^{t+1} 1/(α+1-i)
//! c1' = (2α(α+1)·r·c1)^{-1/α}
//! c2' = (1/(2α(α+1)·c2))^{1/α}
//! c   = (r-1)/r · min(c1', c2')
//! p_c ≥ c · E[ξ^{1+α}]^{-1/α}
//! ```
//!
//! At `α = r-1` the constant above degenerates (`c1 → ∞`) and the endpoint
//! bound `p_c ≥ (1 - 1/r)·((r-1)!/E[ξ^r])^{1/(r-1)}` is used instead.

use crate::critical::{critical_probability, solve_y_aux};
use crate::error::{domain, Error, Result};
use crate::offspring::{make_constant, make_eta, moment, OffspringDistribution};
use crate::quadrature::integrate;
use crate::specfun::{log_beta, log_binomial, log_gamma};
use crate::sum::CompensatedSum;

/// Integer exponents `n ∈ [1, r-2]` are evaluated at `n - INTEGER_ALPHA_OFFSET`.
pub const INTEGER_ALPHA_OFFSET: f64 = 1e-6;
/// Absolute tolerance for moments of infinite-support distributions.
pub const MOMENT_TOL: f64 = 1e-12;

/// The intermediate constants for non-integer `α < r-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pipeline {
    pub t: u64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_prime: f64,
    pub c2_prime: f64,
}

/// Constant, moment and bound for one `(r, α, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundReport {
    pub r: u64,
    /// Exponent requested by the caller.
    pub alpha: f64,
    /// Exponent actually evaluated; differs from `alpha` for integer `α < r-1`.
    pub alpha_used: f64,
    /// `None` at the endpoint `α = r-1`.
    pub pipeline: Option<Pipeline>,
    pub c_r_alpha: f64,
    /// `E[ξ^{1+α_used}]`.
    pub moment_value: f64,
    pub bound: f64,
    /// `((r-1)!/E[ξ^r])^{1/(r-1)}`, set at the endpoint only.
    pub t0: Option<f64>,
}

/// Endpoint bound at `α = r-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointBound {
    pub r: u64,
    /// `E[ξ^r]`.
    pub moment_value: f64,
    pub t0: f64,
    pub bound: f64,
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `c1, c2, c1', c2'` for non-integer `α ∈ (0, r-1)`.
pub fn pipeline(r: u64, alpha: f64) -> Result<Pipeline> {
    if r < 2 {
        return Err(domain!("threshold r must be at least 2, got {r}"));
    }
    let rf = r as f64;
    if !(alpha > 0.0 && alpha < rf - 1.0) || alpha.fract() == 0.0 {
        return Err(domain!(
            "the constant pipeline needs non-integer α in (0, r-1), got {alpha}"
        ));
    }
    let t = alpha.floor() as u64;
    let eps = alpha - t as f64;
    let falling: f64 = (0..=t).map(|j| (rf - 1.0 - j as f64).ln()).sum();
    let c1 = (log_gamma(rf - 1.0 - alpha)? - falling - log_gamma(rf - 1.0 - t as f64)?).exp();
    let c2: f64 = (0..=t + 1).map(|i| 1.0 / (alpha + 1.0 - i as f64)).sum();
    let k = 2.0 * alpha * (alpha + 1.0);
    let c1_prime = (k * rf * c1).powf(-1.0 / alpha);
    let c2_prime = (1.0 / (k * c2)).powf(1.0 / alpha);
    Ok(Pipeline {
        t,
        eps,
        c1,
        c2,
        c1_prime,
        c2_prime,
    })
}

/// `c_{r,α}` for non-integer `α ∈ (0, r-1)`.
pub fn constant(r: u64, alpha: f64) -> Result<f64> {
    let p = pipeline(r, alpha)?;
    Ok((r - 1) as f64 / r as f64 * p.c1_prime.min(p.c2_prime))
}

fn checked_moment(dist: &OffspringDistribution, s: f64) -> Result<f64> {
    let m = moment(dist, s, MOMENT_TOL)?;
    if !m.is_finite() {
        return Err(domain!("E[ξ^{s}] is infinite"));
    }
    Ok(m)
}

/// `p_c ≥ (1 - 1/r)·((r-1)!/E[ξ^r])^{1/(r-1)}`.
pub fn bound_r_minus_1(r: u64, dist: &OffspringDistribution) -> Result<EndpointBound> {
    if r < 2 {
        return Err(domain!("threshold r must be at least 2, got {r}"));
    }
    let m = checked_moment(dist, r as f64)?;
    let t0 = ((ln_factorial(r - 1) - m.ln()) / (r - 1) as f64).exp();
    Ok(EndpointBound {
        r,
        moment_value: m,
        t0,
        bound: (1.0 - 1.0 / r as f64) * t0,
    })
}

/// The lower bound `c_{r,α}·E[ξ^{1+α}]^{-1/α}` with every constant reported.
pub fn bound_alpha(r: u64, alpha: f64, dist: &OffspringDistribution) -> Result<LowerBoundReport> {
    if r < 2 {
        return Err(domain!("threshold r must be at least 2, got {r}"));
    }
    let top = (r - 1) as f64;
    if !(alpha > 0.0 && alpha <= top) {
        return Err(domain!("α must lie in (0, r-1] = (0, {top}], got {alpha}"));
    }
    if alpha == top {
        let ep = bound_r_minus_1(r, dist)?;
        let c = (1.0 - 1.0 / r as f64) * (ln_factorial(r - 1) / top).exp();
        return Ok(LowerBoundReport {
            r,
            alpha,
            alpha_used: alpha,
            pipeline: None,
            c_r_alpha: c,
            moment_value: ep.moment_value,
            bound: ep.bound,
            t0: Some(ep.t0),
        });
    }
    let alpha_used = if alpha.fract() == 0.0 {
        alpha - INTEGER_ALPHA_OFFSET
    } else {
        alpha
    };
    let p = pipeline(r, alpha_used)?;
    let c = (r - 1) as f64 / r as f64 * p.c1_prime.min(p.c2_prime);
    let m = checked_moment(dist, 1.0 + alpha_used)?;
    Ok(LowerBoundReport {
        r,
        alpha,
        alpha_used,
        pipeline: Some(p),
        c_r_alpha: c,
        moment_value: m,
        bound: c * m.powf(-1.0 / alpha_used),
        t0: None,
    })
}

/// Numerical check of the two-sided estimate on
/// `I = ∫_0^1 (g_r^r - G_ξ^r)(x) / (1-x)^{2+α} dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralCheck {
    /// `I` by adaptive quadrature.
    pub integral: f64,
    pub quadrature_error: f64,
    /// `I` from the beta-function series.
    pub closed_form: f64,
    /// `r·c1·E[ξ^{1+α}]`.
    pub upper: f64,
    /// `y^{-α}/(2α(α+1))` with `y = y_aux`, present when `y^α < 1/(2α(α+1)c2)`.
    pub lower: Option<f64>,
    pub y_aux: f64,
    pub agrees: bool,
    pub upper_holds: bool,
    pub lower_holds: bool,
}

impl IntegralCheck {
    pub fn ok(&self) -> bool {
        self.agrees && self.upper_holds && self.lower_holds
    }
}

/// `S_i = P(ξ > i)` for `i = r..max_support`, from the table.
fn survival_from(dist: &OffspringDistribution, r: u64) -> Vec<f64> {
    let kmax = dist.max_support();
    if kmax <= r {
        return Vec::new();
    }
    let mut s = vec![0.0; (kmax - r) as usize];
    let mut acc = CompensatedSum::new();
    let entries: Vec<_> = dist.entries().collect();
    let mut j = entries.len();
    for i in (r..kmax).rev() {
        while j > 0 && entries[j - 1].0 > i {
            acc.add(entries[j - 1].1);
            j -= 1;
        }
        s[(i - r) as usize] = acc.value();
    }
    s
}

/// `h(x) = Σ_{i≥r} C(i, r-1) x^{i-r} P(ξ > i)`, so that
/// `g_r^r - G_ξ^r = (1-x)^r h(x)`. All terms are non-negative.
fn h_series(survival: &[f64], r: u64, x: f64) -> f64 {
    let mut coeff = r as f64; // C(r, r-1) x^0
    let mut acc = 0.0;
    for (n, &s) in survival.iter().enumerate() {
        let i = r + n as u64;
        acc += coeff * s;
        coeff *= (i + 1) as f64 / (i + 2 - r) as f64 * x;
        if coeff == 0.0 {
            break;
        }
    }
    acc
}

/// Verifies the integral estimates behind the bound for non-integer
/// `α ∈ (0, r-1)` on a finite table.
///
/// The integral is computed twice: by quadrature after substituting
/// `1 - x = v^{1/(r-1-α)}`, which turns it into
/// `(r-1-α)^{-1} ∫_0^1 h(1 - v^{1/(r-1-α)}) dv` with a bounded integrand, and
/// by the series `Σ_i C(i, r-1)·B(i-r+1, r-1-α)·P(ξ > i)`.
pub fn integral_moment_check(dist: &OffspringDistribution, r: u64, alpha: f64, tol: f64) -> Result<IntegralCheck> {
    if dist.tail_bound() > 0.0 {
        return Err(domain!("the integral check needs a finite table; truncate first"));
    }
    if dist.min_support() < r {
        return Err(domain!("the integral check needs ξ ≥ r"));
    }
    let p = pipeline(r, alpha)?;
    if !(tol > 0.0) {
        return Err(domain!("tolerance must be positive"));
    }
    let survival = survival_from(dist, r);
    let c = r as f64 - 1.0 - alpha;

    let mut closed = CompensatedSum::new();
    for (n, &s) in survival.iter().enumerate().rev() {
        if s > 0.0 {
            let i = r + n as u64;
            let ln_term = log_binomial(i, r - 1) + log_beta((i - r + 1) as f64, c)?;
            closed.add(ln_term.exp() * s);
        }
    }
    let closed_form = closed.value();

    let rel = tol.max(1e-8);
    let q = integrate(
        |v| h_series(&survival, r, 1.0 - v.powf(1.0 / c)),
        0.0,
        1.0,
        1e-300,
        rel * 0.05,
        20_000,
    );
    if !q.converged {
        return Err(Error::Capability(format!(
            "quadrature reached only {:e} after {} intervals",
            q.error / c,
            q.intervals
        )));
    }
    let integral = q.value / c;
    let quadrature_error = q.error / c;

    let scale = integral.abs().max(closed_form.abs());
    let agrees = (integral - closed_form).abs() <= rel * scale || scale == 0.0;

    let moment_value = checked_moment(dist, 1.0 + alpha)?;
    let upper = r as f64 * p.c1 * moment_value;
    let upper_holds = integral <= upper + quadrature_error;

    let prof = critical_probability(dist, r, 1e-12)?;
    let y_aux = prof.y_aux.unwrap_or_else(|| solve_y_aux(r, prof.m));
    let k = 2.0 * alpha * (alpha + 1.0);
    let lower = (y_aux.powf(alpha) < 1.0 / (k * p.c2)).then(|| y_aux.powf(-alpha) / k);
    let lower_holds = match lower {
        Some(l) => integral + quadrature_error >= l * (1.0 - 1e-9),
        None => true,
    };
    Ok(IntegralCheck {
        integral,
        quadrature_error,
        closed_form,
        upper,
        lower,
        y_aux,
        agrees,
        upper_holds,
        lower_holds,
    })
}

/// One row of the sharpness experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpnessRow {
    pub b: f64,
    pub k1: u64,
    pub p_c: f64,
    pub bound: f64,
    /// `E[η^{1+α}]^{1/α}`.
    pub moment_root: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessSweep {
    pub r: u64,
    pub alpha: f64,
    pub rows: Vec<SharpnessRow>,
    /// Least-squares slope of `ln p_c` against `b`.
    pub slope_ln_pc: f64,
    /// Least-squares slope of `ln E[η^{1+α}]^{1/α}` against `b`.
    pub slope_ln_moment_root: f64,
}

/// Tolerance for `max G` in the sweep; `p_c` is tiny there, so `M - 1` needs
/// many more correct digits than usual.
pub const SHARPNESS_TOL: f64 = 1e-13;

/// Least-squares slope of `ys` on `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Critical probability, lower bound and moment of the extremal mean-`b`
/// distribution for each `b`, with the fitted decay rates.
pub fn sharpness_sweep(r: u64, b_values: &[f64], alpha: f64) -> Result<SharpnessSweep> {
    if r < 3 {
        return Err(domain!("the sharpness sweep needs r ≥ 3, got {r}"));
    }
    if b_values.len() < 2 {
        return Err(domain!("the sharpness sweep needs at least two values of b"));
    }
    let mut rows = Vec::with_capacity(b_values.len());
    for &b in b_values {
        let (eta, params) = make_eta(r, b)?;
        let p_c = critical_probability(&eta, r, SHARPNESS_TOL)?.p_c;
        let rep = bound_alpha(r, alpha, &eta)?;
        rows.push(SharpnessRow {
            b,
            k1: params.k1,
            p_c,
            bound: rep.bound,
            moment_root: rep.moment_value.powf(1.0 / rep.alpha_used),
        });
    }
    let bs: Vec<f64> = rows.iter().map(|row| row.b).collect();
    let ln_pc: Vec<f64> = rows.iter().map(|row| row.p_c.ln()).collect();
    let ln_mr: Vec<f64> = rows.iter().map(|row| row.moment_root.ln()).collect();
    Ok(SharpnessSweep {
        r,
        alpha,
        slope_ln_pc: ls_slope(&bs, &ln_pc),
        slope_ln_moment_root: ls_slope(&bs, &ln_mr),
        rows,
    })
}

/// Tolerance for `max G` in [`asymptotic_ratio`].
pub const RATIO_TOL: f64 = 1e-13;

/// `p_c(T_b, r)` divided by `(1 - 1/r)·((r-1)!/b^r)^{1/(r-1)}`.
pub fn asymptotic_ratio(r: u64, b: u64) -> Result<f64> {
    if r < 2 || b < r {
        return Err(domain!("asymptotic ratio needs b ≥ r ≥ 2, got b={b}, r={r}"));
    }
    let p_c = critical_probability(&make_constant(b)?, r, RATIO_TOL)?.p_c;
    let ln_ref = (1.0 - 1.0 / r as f64).ln() + (ln_factorial(r - 1) - r as f64 * (b as f64).ln()) / (r - 1) as f64;
    Ok(p_c / ln_ref.exp())
}

/// The `α` grid used by the verification suite: `{0.25, 0.5, 0.75}`, the
/// integers below `r-1`, and `r-1`.
pub fn alpha_grid(r: u64) -> Vec<f64> {
    let top = (r - 1) as f64;
    let mut out: Vec<f64> = [0.25, 0.5, 0.75].into_iter().filter(|&a| a < top).collect();
    out.extend((1..r - 1).map(|n| n as f64));
    out.push(top);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunction::eval_G;
    use crate::offspring::{make_corpus, make_table, truncate};
    use approx::assert_relative_eq;

    /// Γ(z) by composite Simpson on t = e^u; independent of `log_gamma`.
    fn gamma_oracle(z: f64) -> f64 {
        let (lo, hi, n) = (-(40.0 / z).max(60.0), 5.0_f64, 400_000);
        let h = (hi - lo) / n as f64;
        let f = |u: f64| (z * u - u.exp()).exp();
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn pipeline_r3_half() {
        let p = pipeline(3, 0.5).unwrap();
        assert_eq!(p.t, 0);
        assert_relative_eq!(p.c1, gamma_oracle(1.5) / 2.0, max_relative = 1e-9);
        assert_relative_eq!(p.c1, 0.443_113_462_726_379_2, max_relative = 1e-12);
        assert_relative_eq!(p.c2, 8.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(p.c2_prime, 0.0625, max_relative = 1e-14);
        assert!((p.c1_prime - 0.2515).abs() < 1e-4);
        assert_relative_eq!(constant(3, 0.5).unwrap(), 0.0625 * 2.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn pipeline_r2_half() {
        let d = make_constant(2).unwrap();
        let rep = bound_alpha(2, 0.5, &d).unwrap();
        let p = rep.pipeline.unwrap();
        assert_relative_eq!(p.c1, std::f64::consts::PI.sqrt(), max_relative = 1e-13);
        assert!((p.c1_prime - 0.03537).abs() < 1e-5);
        assert!((rep.bound - 0.5 * p.c1_prime / 8.0).abs() < 1e-15);
        assert!((rep.bound - 0.00221).abs() < 1e-5);
    }

    #[test]
    fn endpoint_examples() {
        let b3 = bound_r_minus_1(2, &make_constant(3).unwrap()).unwrap();
        assert_relative_eq!(b3.bound, 1.0 / 18.0, max_relative = 1e-14);
        let b2 = bound_r_minus_1(2, &make_constant(2).unwrap()).unwrap();
        assert_relative_eq!(b2.bound, 0.125, max_relative = 1e-14);
        for r in 2..=6u64 {
            let d = make_constant(r).unwrap();
            let e = bound_r_minus_1(r, &d).unwrap();
            assert!(e.bound < 1.0 - 1.0 / r as f64);
            let via_alpha = bound_alpha(r, (r - 1) as f64, &d).unwrap();
            assert_eq!(via_alpha.bound, e.bound);
            assert_eq!(via_alpha.t0, Some(e.t0));
        }
    }

    #[test]
    fn domain_errors() {
        let d = make_constant(3).unwrap();
        assert!(matches!(bound_alpha(3, 0.0, &d), Err(Error::Domain(_))));
        assert!(matches!(bound_alpha(3, 2.5, &d), Err(Error::Domain(_))));
        assert!(matches!(bound_alpha(3, -1.0, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn integer_alpha_is_offset() {
        let d = make_constant(5).unwrap();
        let rep = bound_alpha(4, 1.0, &d).unwrap();
        assert_eq!(rep.alpha_used, 1.0 - INTEGER_ALPHA_OFFSET);
        // any offset in [1e-8, 1e-4] moves the constant by under 0.1%
        for off in [1e-8, 1e-4] {
            let c = constant(4, 1.0 - off).unwrap();
            assert!((c / rep.c_r_alpha - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn c1_lower_bounds() {
        for r in 2..=6u64 {
            for &alpha in &[0.1, 0.25, 0.5, 0.75, 0.9, 1.3, 1.5, 2.2, 2.5, 3.7, 4.5] {
                if alpha >= (r - 1) as f64 {
                    continue;
                }
                let p = pipeline(r, alpha).unwrap();
                if p.t + 2 < r {
                    // the falling product in the denominator has t+1 factors, so
                    // the gamma-ratio estimate gives (r-1)^{-(1+α)}, not (r-1)^{-α}
                    assert!(p.c1 >= ((r - 1) as f64).powf(-1.0 - alpha) - 1e-15, "r={r} α={alpha}");
                } else {
                    let fact: f64 = (1..r).map(|i| i as f64).product();
                    assert!(p.c1 >= 1.0 / (2.0 * fact * (1.0 - p.eps)) - 1e-15, "r={r} α={alpha}");
                }
            }
        }
    }

    #[test]
    fn c1_can_fall_below_the_power_without_the_extra_factor() {
        // r = 3, α = 0.5: c1 = Γ(1.5)/2 ≈ 0.443 < 2^{-1/2} ≈ 0.707
        let p = pipeline(3, 0.5).unwrap();
        assert!(p.c1 < 2f64.powf(-0.5));
        assert!(p.c1 >= 2f64.powf(-1.5));
    }

    #[test]
    fn constant_vanishes_at_the_edge() {
        for r in 2..=5u64 {
            let cs: Vec<f64> = [0.1, 0.01, 0.001]
                .iter()
                .map(|d| constant(r, (r - 1) as f64 - d).unwrap())
                .collect();
            assert!(cs[0] > cs[1] && cs[1] > cs[2], "r={r}: {cs:?}");
        }
    }

    #[test]
    fn bound_below_pc_on_corpus() {
        for r in 2..=4u64 {
            for m in make_corpus(r).unwrap() {
                let pc = critical_probability(&m.dist, r, 1e-10).unwrap().p_c;
                for alpha in alpha_grid(r) {
                    let rep = bound_alpha(r, alpha, &m.dist).unwrap();
                    assert!(
                        rep.bound <= pc + 1e-9,
                        "{} r={r} α={alpha}: {} > {pc}",
                        m.name,
                        rep.bound
                    );
                }
            }
        }
    }

    /// `I` by direct quadrature of the original integrand in `x`; a third,
    /// cruder route used only to pin the substitution.
    fn integral_direct(dist: &OffspringDistribution, r: u64, alpha: f64) -> f64 {
        let f = |x: f64| {
            let g = crate::gfunction::eval_g(r, r, x).unwrap() - eval_G(dist, r, x, 1e-15).unwrap().value;
            g / (1.0 - x).powf(2.0 + alpha)
        };
        integrate(f, 0.0, 1.0 - 1e-7, 1e-12, 1e-9, 5000).value
    }

    #[test]
    fn integral_atoms_match_beta_series() {
        for r in 2..=3u64 {
            for alpha in [0.25, 0.5] {
                for k in r + 1..=r + 20 {
                    let d = make_constant(k).unwrap();
                    let chk = integral_moment_check(&d, r, alpha, 1e-8).unwrap();
                    assert!(
                        chk.agrees,
                        "r={r} α={alpha} k={k}: {} vs {}",
                        chk.integral, chk.closed_form
                    );
                    assert!(chk.upper_holds);
                }
            }
        }
        // r = 2, α = 0.5: Σ_{i=2}^{k-1} i·B(i-1, 1/2)
        let k = 7u64;
        let want: f64 = (2..k)
            .map(|i| i as f64 * log_beta((i - 1) as f64, 0.5).unwrap().exp())
            .sum();
        let chk = integral_moment_check(&make_constant(k).unwrap(), 2, 0.5, 1e-8).unwrap();
        assert_relative_eq!(chk.closed_form, want, max_relative = 1e-13);
        assert!((integral_direct(&make_constant(k).unwrap(), 2, 0.5) / want - 1.0).abs() < 1e-3);
    }

    #[test]
    fn integral_vanishes_for_constant_r() {
        for r in 2..=4 {
            let chk = integral_moment_check(&make_constant(r).unwrap(), r, 0.5, 1e-8).unwrap();
            assert_eq!(chk.integral, 0.0);
            assert_eq!(chk.closed_form, 0.0);
            assert!(chk.ok());
        }
    }

    #[test]
    fn integral_on_mixture() {
        let d = make_table(&[(2, 0.3), (4, 0.5), (9, 0.2)]).unwrap();
        let chk = integral_moment_check(&d, 2, 0.25, 1e-9).unwrap();
        assert!(chk.ok(), "{chk:?}");
    }

    #[test]
    fn integral_on_truncated_geometric() {
        let d = truncate(&make_geometric_q(), 1e-14).unwrap();
        // truncation leaves a recorded tail; drop it into a plain table
        let table = make_table(&d.entries().collect::<Vec<_>>()).unwrap();
        let chk = integral_moment_check(&table, 2, 0.5, 1e-8).unwrap();
        assert!(chk.ok(), "{chk:?}");
    }

    fn make_geometric_q() -> OffspringDistribution {
        crate::offspring::make_geometric(2, 0.5).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let mut prev = f64::INFINITY;
        for b in [4u64, 8, 16, 32, 64, 128] {
            let q = asymptotic_ratio(2, b).unwrap();
            assert!(q >= 1.0 - 1e-9, "b={b}: {q}");
            assert!(q <= prev + 1e-12, "b={b}: {q} > {prev}");
            prev = q;
        }
        assert!(prev <= 1.2);
        for r in 3..=4 {
            for b in [r, r + 1, 2 * r, 10 * r] {
                assert!(asymptotic_ratio(r, b).unwrap() >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn no_uniform_constant_beyond_the_edge() {
        // α = 2 > r - 1 = 1: p_c · E[ξ^3]^{1/2} = p_c · b^{3/2} decays like b^{-1/2}
        let scaled = |b: u64| {
            let pc = critical_probability(&make_constant(b).unwrap(), 2, 1e-13).unwrap().p_c;
            pc * (b as f64).powf(1.5)
        };
        let vals: Vec<f64> = [64u64, 256, 1024, 4096].iter().map(|&b| scaled(b)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        assert!(vals[3] < 0.01, "{vals:?}");
    }

    #[test]
    fn alpha_grid_contents() {
        assert_eq!(alpha_grid(2), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(alpha_grid(3), vec![0.25, 0.5, 0.75, 1.0, 2.0]);
    }
}
