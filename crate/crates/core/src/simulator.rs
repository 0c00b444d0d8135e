//! Monte Carlo oracle: truncated Galton–Watson trees, the bootstrap closure
//! on them, and an estimator of the probability that the root escapes
//! infection from below.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::offspring::{OffspringDistribution, OffspringSampler};
use crate::seed::SeedSpec;

/// Default cap on the number of nodes of a sampled tree.
pub const DEFAULT_NODE_CAP: usize = 100_000_000;

const NO_PARENT: u32 = u32::MAX;

/// A rooted tree in breadth-first order: node 0 is the root and the children
/// of each node occupy a contiguous index range after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledTree {
    parent: Vec<u32>,
    child_start: Vec<u32>,
    child_count: Vec<u32>,
    depth: Vec<u32>,
}

impl SampledTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let s = self.child_start[v] as usize;
        s..s + self.child_count[v] as usize
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    /// Builds a tree from child counts listed in breadth-first order.
    ///
    /// Counts beyond the nodes actually created are ignored; missing counts
    /// are read as zero.
    pub fn from_bfs_counts(counts: &[u32]) -> Self {
        let mut t = SampledTree {
            parent: vec![NO_PARENT],
            child_start: Vec::new(),
            child_count: Vec::new(),
            depth: vec![0],
        };
        let mut v = 0;
        while v < t.parent.len() {
            let k = counts.get(v).copied().unwrap_or(0);
            t.push_children(v, k);
            v += 1;
        }
        t
    }

    fn push_children(&mut self, v: usize, k: u32) {
        self.child_start.push(self.parent.len() as u32);
        self.child_count.push(k);
        let d = self.depth[v] + 1;
        for _ in 0..k {
            self.parent.push(v as u32);
            self.depth.push(d);
        }
    }
}

/// Samples a Galton–Watson tree truncated at `depth` with the default cap.
pub fn sample_tree(dist: &OffspringDistribution, depth: usize, seed: SeedSpec) -> Result<SampledTree> {
    sample_tree_with_cap(dist, depth, seed, DEFAULT_NODE_CAP)
}

/// Breadth-first sampling: each node above the truncation depth draws its
/// child count from `ξ`, in node order, from the single stream `seed`.
pub fn sample_tree_with_cap(
    dist: &OffspringDistribution,
    depth: usize,
    seed: SeedSpec,
    cap: usize,
) -> Result<SampledTree> {
    let cap = cap.min(u32::MAX as usize - 1);
    let sampler = OffspringSampler::new(dist);
    let mut rng = seed.rng();
    sample_with(&sampler, depth, &mut rng, cap)
}

fn sample_with(sampler: &OffspringSampler, depth: usize, rng: &mut ChaCha8Rng, cap: usize) -> Result<SampledTree> {
    let mut t = SampledTree {
        parent: vec![NO_PARENT],
        child_start: Vec::new(),
        child_count: Vec::new(),
        depth: vec![0],
    };
    let mut v = 0;
    while v < t.parent.len() {
        let k = if (t.depth[v] as usize) < depth {
            sampler.sample(rng)
        } else {
            0
        };
        if t.parent.len() as u64 + k > cap as u64 {
            return Err(Error::Size { cap });
        }
        t.push_children(v, k as u32);
        v += 1;
    }
    Ok(t)
}

/// Independent `p`-coins for every node.
pub fn sample_initial<R: Rng + ?Sized>(tree: &SampledTree, p: f64, rng: &mut R) -> Vec<bool> {
    (0..tree.len()).map(|_| rng.random::<f64>() < p).collect()
}

/// Closure of `initially_infected` under the `r`-neighbour rule, where the
/// neighbours of a node are its parent and its children.
pub fn bootstrap_closure(tree: &SampledTree, initially_infected: &[bool], r: u32) -> Vec<bool> {
    assert_eq!(initially_infected.len(), tree.len(), "one flag per node");
    let mut infected = initially_infected.to_vec();
    let mut hits = vec![0u32; tree.len()];
    let mut work: Vec<usize> = (0..tree.len()).filter(|&v| infected[v]).collect();
    let mut touch = |v: usize, infected: &mut Vec<bool>, work: &mut Vec<usize>| {
        if !infected[v] {
            hits[v] += 1;
            if hits[v] >= r {
                infected[v] = true;
                work.push(v);
            }
        }
    };
    while let Some(u) = work.pop() {
        if let Some(p) = tree.parent(u) {
            touch(p, &mut infected, &mut work);
        }
        for c in tree.children(u) {
            touch(c, &mut infected, &mut work);
        }
    }
    infected
}

/// Infection from below: a node is marked iff it is initially infected or at
/// least `r` of its children are marked.
pub fn subtree_infected_bottom_up(tree: &SampledTree, initially_infected: &[bool], r: u32) -> Vec<bool> {
    assert_eq!(initially_infected.len(), tree.len(), "one flag per node");
    let mut marked = initially_infected.to_vec();
    // children have larger indices than their parent
    for v in (0..tree.len()).rev() {
        if !marked[v] {
            let n = tree.children(v).filter(|&c| marked[c]).take(r as usize).count();
            marked[v] = n >= r as usize;
        }
    }
    marked
}

/// Parameters of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub r: u64,
    pub p: f64,
    pub depth: usize,
    pub replications: u64,
    pub seed: SeedSpec,
    pub node_cap: usize,
}

impl SimConfig {
    pub fn new(r: u64, p: f64, depth: usize, replications: u64, seed: SeedSpec) -> Self {
        Self {
            r,
            p,
            depth,
            replications,
            seed,
            node_cap: DEFAULT_NODE_CAP,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(domain!("threshold r must be at least 2, got {}", self.r));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(domain!("p must lie in [0,1], got {}", self.p));
        }
        if self.replications == 0 {
            return Err(domain!("at least one replication is needed"));
        }
        Ok(())
    }
}

/// Fraction of replications in which the root escaped infection from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: SeedSpec,
}

/// Depth-first evaluation of one replication that samples a node's coin and
/// child count only when its status is still needed.
///
/// Every node is still an independent `p`-coin with an independent `ξ` child
/// count, so the root indicator has exactly the law of sampling the whole
/// tree and running [`subtree_infected_bottom_up`]; subtrees whose outcome
/// cannot change the parent's status are simply never drawn.
struct Lazy<'a> {
    sampler: &'a OffspringSampler,
    r: u64,
    threshold: u64,
    always: bool,
    cap: usize,
}

impl Lazy<'_> {
    fn coin(&self, rng: &mut ChaCha8Rng) -> bool {
        self.always || rng.random::<u64>() < self.threshold
    }

    fn infected(&self, rng: &mut ChaCha8Rng, remaining: usize, visited: &mut usize) -> Result<bool> {
        *visited += 1;
        if *visited > self.cap {
            return Err(Error::Size { cap: self.cap });
        }
        if self.coin(rng) {
            return Ok(true);
        }
        if remaining == 0 {
            return Ok(false);
        }
        let k = self.sampler.sample(rng);
        let mut got = 0;
        for j in 0..k {
            if got + (k - j) < self.r {
                return Ok(false);
            }
            if self.infected(rng, remaining - 1, visited)? {
                got += 1;
                if got >= self.r {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Estimates `y_d = P(root of a depth-d tree is not infected from below)`.
///
/// Replication `i` draws from `config.seed.child(i)`; the per-replication
/// indicators are summed as integers, so the result does not depend on how
/// rayon schedules them.
pub fn estimate_y_d(dist: &OffspringDistribution, config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let sampler = OffspringSampler::new(dist);
    // P(u64 < threshold) = threshold / 2^64 ≈ p
    let scaled = config.p * 18_446_744_073_709_551_616.0;
    let lazy = Lazy {
        sampler: &sampler,
        r: config.r,
        threshold: if scaled >= u64::MAX as f64 {
            u64::MAX
        } else {
            scaled as u64
        },
        always: config.p >= 1.0,
        cap: config.node_cap,
    };
    let escaped: u64 = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = config.seed.child(i).rng();
            let mut visited = 0;
            lazy.infected(&mut rng, config.depth, &mut visited)
                .map(|inf| u64::from(!inf))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let n = config.replications;
    let mean = escaped as f64 / n as f64;
    Ok(SimEstimate {
        mean,
        stderr: (mean * (1.0 - mean) / n as f64).sqrt(),
        n,
        seed: config.seed,
    })
}

/// Same quantity by sampling whole trees and running the bottom-up pass;
/// slower, used to cross-check [`estimate_y_d`].
pub fn estimate_y_d_full(dist: &OffspringDistribution, config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let sampler = OffspringSampler::new(dist);
    let escaped: u64 = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = config.seed.child(i).rng();
            let tree = sample_with(&sampler, config.depth, &mut rng, config.node_cap)?;
            let a = sample_initial(&tree, config.p, &mut rng);
            Ok(u64::from(!subtree_infected_bottom_up(&tree, &a, config.r as u32)[0]))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let n = config.replications;
    let mean = escaped as f64 / n as f64;
    Ok(SimEstimate {
        mean,
        stderr: (mean * (1.0 - mean) / n as f64).sqrt(),
        n,
        seed: config.seed,
    })
}
