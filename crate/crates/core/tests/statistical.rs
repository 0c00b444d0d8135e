//! Monte Carlo estimates against the exact iterates of the recursion.

use gwboot::critical::{critical_probability, recursion_iterate};
use gwboot::offspring::make_corpus;
use gwboot::simulator::{estimate_y_d, SimConfig};
use gwboot::SeedSpec;

const SEEDS: u64 = 20;
const MAX_DEPTH: usize = 10;
/// Expected depth-truncated tree size each member may reach.
const SIZE_BUDGET: f64 = 4096.0;
const REPS: u64 = 2_000;

/// Deepest `d ≤ MAX_DEPTH` with `1 + m + … + m^d ≤ SIZE_BUDGET`.
fn depth_for(mean: f64) -> usize {
    let mut size = 1.0;
    let mut level = 1.0;
    for d in 1..=MAX_DEPTH {
        level *= mean;
        size += level;
        if size > SIZE_BUDGET {
            return d - 1;
        }
    }
    MAX_DEPTH
}

/// The z-test uses the standard deviation under the exact value: the plug-in
/// stderr is zero whenever every replication agrees, which happens for exact
/// values far below `1/n` even though the estimator is unbiased.
#[test]
fn estimates_match_exact_iterates_on_the_corpus() {
    let mut report = Vec::new();
    for r in [2u64, 3] {
        for (mi, m) in make_corpus(r).unwrap().into_iter().enumerate() {
            let pc = critical_probability(&m.dist, r, 1e-10).unwrap().p_c;
            let depth = depth_for(m.dist.mean().unwrap());
            assert!(depth >= 2, "{}: depth {depth}", m.name);
            for factor in [0.5, 1.0, 2.0] {
                let p = (factor * pc).min(1.0);
                let exact = recursion_iterate(&m.dist, r, p, depth).unwrap();
                let sd = (exact * (1.0 - exact) / REPS as f64).sqrt();
                let mut failures = 0;
                for s in 0..SEEDS {
                    let seed = SeedSpec::new(1_000 * r + 10 * mi as u64 + s, 0);
                    let est = estimate_y_d(&m.dist, &SimConfig::new(r, p, depth, REPS, seed)).unwrap();
                    if (est.mean - exact).abs() > 4.0 * sd {
                        failures += 1;
                    }
                }
                report.push(format!("r={r} {} p={p:.4} depth={depth}: {failures} failures", m.name));
                assert!(failures <= 1, "{}", report.last().unwrap());
            }
        }
    }
    println!("{}", report.join("\n"));
}
