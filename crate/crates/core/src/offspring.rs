//! Offspring distributions on `{0, 1, 2, …}`.
//!
//! A distribution is stored as an ascending table of `(k, P(ξ = k))` pairs
//! plus a certified bound on the mass beyond the last stored point. Families
//! with infinite support (shifted geometric, shifted Poisson) keep their
//! parameters so that longer tables and tail moments can be produced on
//! demand; all other families are exact finite tables.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::seed::SeedSpec;
use crate::specfun::log_gamma_unchecked;
use crate::sum::CompensatedSum;

/// Omitted mass allowed when an infinite-support family is first tabulated.
const DEFAULT_TAIL: f64 = 1e-17;

/// Support cap used by the power-law corpus members.
pub const POWER_LAW_CAP: u64 = 100_000;

/// Parameters of the extremal mean-`b` distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaParams {
    pub r: u64,
    pub b: f64,
    pub k1: u64,
    /// Extra mass `(r-1)/k1` split between `k = r` and `k = 2r+1`.
    pub a: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Constant {
        b: u64,
    },
    Table,
    /// `P(ξ = r + j) = (1 - q) q^j`.
    Geometric {
        r: u64,
        q: f64,
    },
    /// `ξ = r + Poisson(rate)`.
    Poisson {
        r: u64,
        rate: f64,
    },
    /// `P(ξ = k) ∝ k^{-beta}` on `r..=cap`.
    PowerLaw {
        r: u64,
        beta: f64,
        cap: u64,
    },
    Eta(EtaParams),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Table => "table",
            Family::Geometric { .. } => "geometric",
            Family::Poisson { .. } => "poisson",
            Family::PowerLaw { .. } => "power-law",
            Family::Eta(_) => "eta",
        }
    }

    fn has_infinite_support(&self) -> bool {
        matches!(self, Family::Geometric { .. } | Family::Poisson { .. })
    }

    /// `P(ξ = k)` for the infinite families.
    fn pmf(&self, k: u64) -> f64 {
        match *self {
            Family::Geometric { r, q } => {
                if k < r {
                    0.0
                } else {
                    (1.0 - q) * q.powf((k - r) as f64)
                }
            }
            Family::Poisson { r, rate } => {
                if k < r {
                    0.0
                } else {
                    let j = (k - r) as f64;
                    (-rate + j * rate.ln() - log_gamma_unchecked(j + 1.0)).exp()
                }
            }
            _ => unreachable!("pmf is only used for infinite families"),
        }
    }

    /// Upper bound on `P(ξ ≥ k)` for the infinite families.
    fn tail_upper(&self, k: u64) -> f64 {
        match *self {
            Family::Geometric { r, q } => {
                if k <= r {
                    1.0
                } else {
                    q.powf((k - r) as f64)
                }
            }
            Family::Poisson { r, rate } => {
                if k <= r {
                    return 1.0;
                }
                let j = k - r;
                // successive pmf ratios rate/(i+1) are decreasing, so once
                // below one the tail is dominated by a geometric series
                let ratio = rate / (j as f64 + 1.0);
                if ratio < 1.0 {
                    (self.pmf(k) / (1.0 - ratio)).min(1.0)
                } else {
                    let below: f64 = (r..k).map(|i| self.pmf(i)).sum();
                    (1.0 - below).clamp(0.0, 1.0)
                }
            }
            _ => unreachable!("tail_upper is only used for infinite families"),
        }
    }

    fn first_support(&self) -> u64 {
        match *self {
            Family::Geometric { r, .. } | Family::Poisson { r, .. } => r,
            _ => unreachable!(),
        }
    }
}

/// A probability mass function with a certified tail bound.
#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    family: Family,
    ks: Vec<u64>,
    probs: Vec<f64>,
    /// `tail_from[j] = Σ_{i ≥ j} probs[i] + tail_bound`; one extra slot at the end.
    tail_from: Vec<f64>,
    tail_bound: f64,
}

impl OffspringDistribution {
    fn from_parts(family: Family, ks: Vec<u64>, probs: Vec<f64>, tail_bound: f64) -> Self {
        debug_assert_eq!(ks.len(), probs.len());
        debug_assert!(ks.windows(2).all(|w| w[0] < w[1]));
        let mut tail_from = vec![0.0; probs.len() + 1];
        let mut acc = CompensatedSum::new();
        acc.add(tail_bound);
        tail_from[probs.len()] = tail_bound;
        for j in (0..probs.len()).rev() {
            acc.add(probs[j]);
            tail_from[j] = acc.value();
        }
        Self {
            family,
            ks,
            probs,
            tail_from,
            tail_bound,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> &[u64] {
        &self.ks
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.ks.iter().copied().zip(self.probs.iter().copied())
    }

    /// Certified upper bound on the mass beyond the last stored point.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `P(ξ ≥ ks[j])` (stored mass plus tail bound); `j == len` gives the tail bound.
    pub(crate) fn tail_from(&self) -> &[f64] {
        &self.tail_from
    }

    pub fn min_support(&self) -> u64 {
        self.ks.first().copied().unwrap_or(0)
    }

    pub fn max_support(&self) -> u64 {
        self.ks.last().copied().unwrap_or(0)
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().copied().collect::<CompensatedSum>().value()
    }

    /// Mass on `{k < r}`.
    pub fn mass_below(&self, r: u64) -> f64 {
        self.entries().filter(|&(k, _)| k < r).map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> Result<f64> {
        moment(self, 1.0, 1e-12)
    }

    /// Tabulate an infinite family until `P(ξ ≥ k_last) < tail_tol`.
    fn tabulate(family: Family, tail_tol: f64) -> Self {
        let mut ks = Vec::new();
        let mut probs = Vec::new();
        let mut k = family.first_support();
        loop {
            let p = family.pmf(k);
            if p > 0.0 {
                ks.push(k);
                probs.push(p);
            }
            if family.tail_upper(k) < tail_tol {
                break;
            }
            k += 1;
        }
        let omitted = family.tail_upper(k + 1);
        Self::from_parts(family, ks, probs, omitted)
    }

    /// A version of this distribution whose omitted mass is at most
    /// `tail_tol`, extending infinite families when needed.
    pub(crate) fn with_tail_at_most(&self, tail_tol: f64) -> Result<std::borrow::Cow<'_, Self>> {
        if self.tail_bound <= tail_tol {
            return Ok(std::borrow::Cow::Borrowed(self));
        }
        if self.family.has_infinite_support() {
            return Ok(std::borrow::Cow::Owned(Self::tabulate(self.family.clone(), tail_tol)));
        }
        Err(Error::Capability(format!(
            "table has omitted mass {:e} and no tail model; cannot reach {:e}",
            self.tail_bound, tail_tol
        )))
    }
}

pub fn make_constant(b: u64) -> Result<OffspringDistribution> {
    if b < 1 {
        return Err(domain!("constant offspring count must be at least 1"));
    }
    Ok(OffspringDistribution::from_parts(
        Family::Constant { b },
        vec![b],
        vec![1.0],
        0.0,
    ))
}

/// Build a distribution from explicit `(k, prob)` pairs.
///
/// Probabilities must be non-negative, support points distinct and the total
/// within `1e-9` of one; the residual is rescaled away. Zero-mass points are
/// dropped after validation.
pub fn make_table(entries: &[(u64, f64)]) -> Result<OffspringDistribution> {
    if entries.is_empty() {
        return Err(Error::Validation("empty probability table".into()));
    }
    let mut sorted = entries.to_vec();
    for &(k, p) in &sorted {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Validation(format!("probability at k={k} is {p}")));
        }
    }
    sorted.sort_by_key(|&(k, _)| k);
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation(format!("duplicate support point k={}", w[0].0)));
    }
    let total = sorted.iter().map(|&(_, p)| p).collect::<CompensatedSum>().value();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("probabilities sum to {total}, not 1")));
    }
    let (ks, probs): (Vec<u64>, Vec<f64>) = sorted
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(k, p)| (k, p / total))
        .unzip();
    Ok(OffspringDistribution::from_parts(Family::Table, ks, probs, 0.0))
}

pub fn make_geometric(r: u64, q: f64) -> Result<OffspringDistribution> {
    if !(0.0..1.0).contains(&q) {
        return Err(domain!("geometric ratio must lie in [0,1), got {q}"));
    }
    Ok(OffspringDistribution::tabulate(
        Family::Geometric { r, q },
        DEFAULT_TAIL,
    ))
}

pub fn make_poisson(r: u64, rate: f64) -> Result<OffspringDistribution> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain!("Poisson rate must be positive, got {rate}"));
    }
    Ok(OffspringDistribution::tabulate(
        Family::Poisson { r, rate },
        DEFAULT_TAIL,
    ))
}

pub fn make_power_law(r: u64, beta: f64, cap: u64) -> Result<OffspringDistribution> {
    if cap < r || r == 0 {
        return Err(domain!("power law needs 1 ≤ r ≤ cap, got r={r}, cap={cap}"));
    }
    if !beta.is_finite() {
        return Err(domain!("power-law exponent must be finite"));
    }
    let ks: Vec<u64> = (r..=cap).collect();
    let weights: Vec<f64> = ks.iter().map(|&k| (k as f64).powf(-beta)).collect();
    // smallest first for the normaliser
    let z = weights.iter().rev().copied().collect::<CompensatedSum>().value();
    let probs = weights.into_iter().map(|w| w / z).collect();
    Ok(OffspringDistribution::from_parts(
        Family::PowerLaw { r, beta, cap },
        ks,
        probs,
        0.0,
    ))
}

/// The extremal distribution with mean `b`: masses `(r-1)/(k(k-1))` on
/// `r < k ≤ k1`, topped up at `k = r` and `k = 2r+1` by `λA` and `(1-λ)A`.
///
/// Total mass one forces `A = (r-1)/k1`; the mean is then linear in `λ`. The
/// cutoff `k1` is the largest value (scanning upward from `2r+2`) whose `λ`
/// lies in `(0, 1)`.
pub fn make_eta(r: u64, b: f64) -> Result<(OffspringDistribution, EtaParams)> {
    if r < 3 {
        return Err(Error::Construction(format!(
            "the extremal distribution needs r ≥ 3 (k1 cap vanishes at r = 2), got r={r}"
        )));
    }
    let rf = r as f64;
    let b_min = (rf - 1.0) * (4.0 * std::f64::consts::E * rf).ln();
    if !b.is_finite() || b < b_min {
        return Err(Error::Construction(format!(
            "mean b={b} violates b ≥ (r-1)·ln(4er) = {b_min:.6}"
        )));
    }
    let k1_cap = std::f64::consts::E * (rf - 2.0) * (b / (rf - 1.0)).exp() - 1.0;

    // H_{k-1} - H_{r-1} accumulated as k1 increases
    let mut harmonic = CompensatedSum::new();
    for i in r..(2 * r + 2) {
        harmonic.add(1.0 / i as f64);
    }
    let lambda_at = |k1: u64, h: f64| {
        let a = (rf - 1.0) / k1 as f64;
        let base_mean = 1.0 + (rf - 1.0) * h;
        (base_mean + a * (2.0 * rf + 1.0) - b) / (a * (rf + 1.0))
    };

    let mut best: Option<(u64, f64)> = None;
    let mut k1 = 2 * r + 2;
    loop {
        let lambda = lambda_at(k1, harmonic.value());
        if lambda > 0.0 && lambda < 1.0 {
            best = Some((k1, lambda));
        } else if lambda >= 1.0 {
            break;
        }
        if k1 as f64 > k1_cap + 1.0 {
            break;
        }
        harmonic.add(1.0 / k1 as f64);
        k1 += 1;
    }
    let (k1, lambda) =
        best.ok_or_else(|| Error::Construction(format!("no cutoff k1 gives a split λ in (0,1) for r={r}, b={b}")))?;
    if k1 as f64 > k1_cap {
        return Err(Error::Construction(format!(
            "cutoff k1={k1} exceeds e(r-2)e^(b/(r-1)) - 1 = {k1_cap:.3}"
        )));
    }
    let a = (rf - 1.0) / k1 as f64;
    let mut ks = Vec::with_capacity((k1 - r + 1) as usize);
    let mut probs = Vec::with_capacity(ks.capacity());
    for k in r..=k1 {
        let p = if k == r {
            1.0 / rf + lambda * a
        } else {
            let base = (rf - 1.0) / (k as f64 * (k - 1) as f64);
            if k == 2 * r + 1 {
                base + (1.0 - lambda) * a
            } else {
                base
            }
        };
        ks.push(k);
        probs.push(p);
    }
    let params = EtaParams { r, b, k1, a, lambda };
    Ok((
        OffspringDistribution::from_parts(Family::Eta(params), ks, probs, 0.0),
        params,
    ))
}

/// Named distributions used by the verification suites.
#[derive(Debug, Clone)]
pub struct CorpusMember {
    pub name: String,
    pub dist: OffspringDistribution,
}

/// Mean used for the corpus copy of the extremal distribution.
pub fn corpus_eta_mean(r: u64) -> f64 {
    let rf = r as f64;
    let floor = ((rf - 1.0) * (4.0 * std::f64::consts::E * rf).ln()).ceil();
    (3.0 * (rf - 1.0)).max(floor)
}

pub fn make_corpus(r: u64) -> Result<Vec<CorpusMember>> {
    if r < 2 {
        return Err(domain!("threshold r must be at least 2"));
    }
    let mut out = Vec::new();
    let mut push = |name: String, dist: OffspringDistribution| out.push(CorpusMember { name, dist });
    for b in [r, r + 1, 2 * r, 5 * r] {
        push(format!("constant-{b}"), make_constant(b)?);
    }
    for q in [0.3, 0.7] {
        push(format!("geometric-q{q}"), make_geometric(r, q)?);
    }
    for rate in [1.0, 5.0] {
        push(format!("poisson-{rate}"), make_poisson(r, rate)?);
    }
    for beta in [2.5, r as f64 + 1.5] {
        push(format!("power-law-{beta}"), make_power_law(r, beta, POWER_LAW_CAP)?);
    }
    if r >= 3 {
        let b = corpus_eta_mean(r);
        push(format!("eta-{b}"), make_eta(r, b)?.0);
    }
    Ok(out)
}

/// `E[ξ^s]` with absolute truncation error at most `tol`.
///
/// Finite tables are summed exactly. Infinite families are extended until the
/// remaining terms, whose successive ratios are non-increasing, are dominated
/// by a geometric series below `tol`.
pub fn moment(dist: &OffspringDistribution, s: f64, tol: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain!("moment order must be positive, got {s}"));
    }
    if !(tol > 0.0) {
        return Err(domain!("moment tolerance must be positive"));
    }
    let term = |k: u64, p: f64| if k == 0 { 0.0 } else { (k as f64).powf(s) * p };
    let mut acc = CompensatedSum::new();
    if !dist.family.has_infinite_support() {
        if dist.tail_bound > 0.0 {
            return Err(Error::Capability(
                "truncated table carries omitted mass but no tail model for moments".into(),
            ));
        }
        // smallest terms first
        for (k, p) in dist.entries().collect::<Vec<_>>().into_iter().rev() {
            acc.add(term(k, p));
        }
        return Ok(acc.value());
    }
    let family = &dist.family;
    const MAX_TERMS: usize = 100_000_000;
    for k in (family.first_support()..).take(MAX_TERMS) {
        acc.add(term(k, family.pmf(k)));
        let next = term(k + 1, family.pmf(k + 1));
        let after = term(k + 2, family.pmf(k + 2));
        if next == 0.0 {
            return Ok(acc.value());
        }
        let ratio = after / next;
        if ratio < 1.0 && next / (1.0 - ratio) <= tol {
            return Ok(acc.value());
        }
    }
    Err(Error::Capability(format!(
        "moment of order {s} did not reach tolerance {tol:e}"
    )))
}

/// Finite table whose omitted mass is at most `tol`.
///
/// Infinite families are cut after the first point `k` with `P(ξ ≥ k) < tol`;
/// finite families are returned unchanged.
pub fn truncate(dist: &OffspringDistribution, tol: f64) -> Result<OffspringDistribution> {
    if !(tol > 0.0) {
        return Err(domain!("truncation tolerance must be positive"));
    }
    if !dist.family.has_infinite_support() {
        if dist.tail_bound > tol {
            return Err(Error::Capability(format!(
                "table already omits {:e} > {tol:e} and has no tail model",
                dist.tail_bound
            )));
        }
        return Ok(dist.clone());
    }
    let t = OffspringDistribution::tabulate(dist.family.clone(), tol);
    Ok(OffspringDistribution::from_parts(
        Family::Table,
        t.ks,
        t.probs,
        t.tail_bound,
    ))
}

/// Inverse-CDF sampler over the stored table (renormalised over it).
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    ks: Vec<u64>,
    cdf: Vec<f64>,
}

impl OffspringSampler {
    pub fn new(dist: &OffspringDistribution) -> Self {
        let total = dist.total_mass();
        let mut acc = CompensatedSum::new();
        let cdf = dist
            .probs
            .iter()
            .map(|&p| {
                acc.add(p / total);
                acc.value()
            })
            .collect();
        Self {
            ks: dist.ks.clone(),
            cdf,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.ks.len() == 1 {
            return self.ks[0];
        }
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        self.ks[idx.min(self.ks.len() - 1)]
    }
}

/// One draw from `dist` using the substream named by `seed`.
pub fn sample_offspring(dist: &OffspringDistribution, seed: SeedSpec) -> u64 {
    OffspringSampler::new(dist).sample(&mut seed.rng())
}

/// Serializable description of a distribution, as read from spec files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    Constant {
        b: u64,
    },
    Table {
        entries: Vec<(u64, f64)>,
    },
    Geometric {
        r: u64,
        q: f64,
    },
    Poisson {
        r: u64,
        rate: f64,
    },
    PowerLaw {
        r: u64,
        beta: f64,
        #[serde(default = "default_cap")]
        cap: u64,
    },
    Eta {
        r: u64,
        b: f64,
    },
}

fn default_cap() -> u64 {
    POWER_LAW_CAP
}

impl DistSpec {
    pub fn build(&self) -> Result<OffspringDistribution> {
        match self {
            DistSpec::Constant { b } => make_constant(*b),
            DistSpec::Table { entries } => make_table(entries),
            DistSpec::Geometric { r, q } => make_geometric(*r, *q),
            DistSpec::Poisson { r, rate } => make_poisson(*r, *rate),
            DistSpec::PowerLaw { r, beta, cap } => make_power_law(*r, *beta, *cap),
            DistSpec::Eta { r, b } => make_eta(*r, *b).map(|(d, _)| d),
        }
    }
}
