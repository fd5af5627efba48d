//! Weighted `G(n, p)` samples, the combined weight `W_n^G` of all copies of a
//! pattern, and its exact first two moments.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pattern::{complete_edges, edge_index, HostGraph, PatternGraph, MAX_HOST_VERTICES};
use crate::rng::{Domain, Substream};
use crate::weights::WeightModel;

/// Cap on ordered copy pairs visited by the intersection census.
pub const MAX_CENSUS_PAIRS: u128 = 100_000_000;
/// Cap on the number of copies tabulated for fast simulation.
pub const MAX_TABLE_COPIES: u128 = 20_000_000;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        domain(format!("p = {p} must lie in (0, 1)"))
    }
}

/// One realisation of weighted `G(n, p)`: one uniform per edge of `K_n`.
/// Edge `e` is present iff `u_e < p`, with weight `F^{-1}(u_e / p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HostSample {
    n: usize,
    p: f64,
    model: WeightModel,
    uniforms: Vec<f64>,
}

impl HostSample {
    pub fn from_uniforms(n: usize, p: f64, model: WeightModel, uniforms: Vec<f64>) -> Result<Self> {
        check_p(p)?;
        if !(2..=MAX_HOST_VERTICES).contains(&n) {
            return domain(format!("host size n = {n} outside 2..={MAX_HOST_VERTICES}"));
        }
        if uniforms.len() != n * (n - 1) / 2 {
            return domain(format!(
                "expected {} edge uniforms for n = {n}, got {}",
                n * (n - 1) / 2,
                uniforms.len()
            ));
        }
        if uniforms.iter().any(|u| !(0.0..1.0).contains(u)) {
            return domain("edge uniforms must lie in [0, 1)");
        }
        Ok(Self { n, p, model, uniforms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn uniforms(&self) -> &[f64] {
        &self.uniforms
    }

    pub fn num_edges(&self) -> usize {
        self.uniforms.len()
    }

    pub fn present(&self, e: usize) -> bool {
        self.uniforms[e] < self.p
    }

    /// Weight of edge `e`, or 0 if absent.
    pub fn weight(&self, e: usize) -> f64 {
        if self.present(e) {
            self.model.quantile_unchecked(self.uniforms[e] / self.p)
        } else {
            0.0
        }
    }

    pub fn present_edge_count(&self) -> usize {
        (0..self.num_edges()).filter(|&e| self.present(e)).count()
    }

    pub fn present_graph(&self) -> HostGraph {
        let edges: Vec<_> = complete_edges(self.n)
            .into_iter()
            .enumerate()
            .filter(|&(e, _)| self.present(e))
            .map(|(_, edge)| edge)
            .collect();
        HostGraph::from_edges(self.n, &edges).expect("host size already validated")
    }
}

/// Draws the host for `(seed, replicate)`. Edge `e` takes the `e`-th uniform
/// of the replicate's substream.
pub fn sample_host(n: usize, p: f64, model: WeightModel, seed: u64, replicate: u64) -> Result<HostSample> {
    check_p(p)?;
    if !(2..=MAX_HOST_VERTICES).contains(&n) {
        return domain(format!("host size n = {n} outside 2..={MAX_HOST_VERTICES}"));
    }
    let mut uniforms = vec![0.0; n * (n - 1) / 2];
    Substream::new(seed, Domain::Host, replicate).fill_uniform(&mut uniforms);
    Ok(HostSample { n, p, model, uniforms })
}

/// `W` by enumerating the copies present in the host.
pub fn combined_weight(g: &PatternGraph, host: &HostSample) -> Result<f64> {
    let n = host.n;
    let copies = g.enumerate_copies(&host.present_graph())?;
    Ok(copies
        .iter()
        .map(|copy| copy.iter().map(|&(a, b)| host.weight(edge_index(n, a, b))).sum::<f64>())
        .sum())
}

/// `W = Σ_e weight(e) · #{present copies containing e}`, with the copy counts
/// obtained from embeddings rooted at each edge.
pub fn combined_weight_edge_centric(g: &PatternGraph, host: &HostSample) -> Result<f64> {
    if g.has_isolated_vertices() {
        return Err(Error::Unsupported("patterns with isolated vertices".into()));
    }
    let aut = g.automorphism_count()?;
    let graph = host.present_graph();
    Ok(complete_edges(host.n)
        .into_iter()
        .enumerate()
        .filter(|&(e, _)| host.present(e))
        .map(|(e, (a, b))| host.weight(e) * g.copies_through_edge(&graph, a, b, aut) as f64)
        .sum())
}

/// Number of copies of the pattern present in the host.
pub fn subgraph_count(g: &PatternGraph, host: &HostSample) -> Result<usize> {
    Ok(g.enumerate_copies(&host.present_graph())?.len())
}

/// All copies of a pattern in `K_n`, as sorted lists of edge indices.
#[derive(Debug, Clone)]
pub struct CopyTable {
    n: usize,
    edges_per_copy: usize,
    /// Flattened, `edges_per_copy` entries per copy.
    edges: Vec<u32>,
}

impl CopyTable {
    pub fn new(g: &PatternGraph, n: usize) -> Result<Self> {
        let count = g.copies_in_complete(n)?;
        if count > MAX_TABLE_COPIES {
            return Err(Error::Resource(format!("{count} copies of the pattern in K_{n}")));
        }
        let copies = g.enumerate_copies(&HostGraph::complete(n)?)?;
        let mut edges = Vec::with_capacity(copies.len() * g.num_edges());
        for copy in &copies {
            edges.extend(copy.iter().map(|&(a, b)| edge_index(n, a, b) as u32));
        }
        Ok(Self {
            n,
            edges_per_copy: g.num_edges(),
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len() / self.edges_per_copy
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn copies(&self) -> impl Iterator<Item = &[u32]> {
        self.edges.chunks_exact(self.edges_per_copy)
    }

    /// Combined weight of the copies present in `host`.
    pub fn combined_weight(&self, host: &HostSample) -> f64 {
        debug_assert_eq!(host.n, self.n);
        let weights: Vec<f64> = (0..host.num_edges()).map(|e| host.weight(e)).collect();
        let present: Vec<bool> = (0..host.num_edges()).map(|e| host.present(e)).collect();
        self.copies()
            .filter(|copy| copy.iter().all(|&e| present[e as usize]))
            .map(|copy| copy.iter().map(|&e| weights[e as usize]).sum::<f64>())
            .sum()
    }

    pub fn count_present(&self, host: &HostSample) -> usize {
        self.copies()
            .filter(|copy| copy.iter().all(|&e| host.present(e as usize)))
            .count()
    }
}

/// `E W = #copies(K_n) · e_G · p^{e_G} · E X`.
pub fn exact_mean(g: &PatternGraph, n: usize, p: f64, model: &WeightModel) -> Result<f64> {
    let copies = g.copies_in_complete(n)? as f64;
    let e = g.num_edges();
    Ok(copies * e as f64 * p.powi(e as i32) * model.moments().mean)
}

/// Ordered pairs of copies in `K_n` sharing exactly `h ≥ 1` edges, diagonal included.
pub fn intersection_pair_census(g: &PatternGraph, n: usize) -> Result<BTreeMap<usize, u64>> {
    let count = g.copies_in_complete(n)?;
    if count * count > MAX_CENSUS_PAIRS {
        return Err(Error::Resource(format!(
            "{} ordered copy pairs exceed the census cap {MAX_CENSUS_PAIRS}",
            count * count
        )));
    }
    let table = CopyTable::new(g, n)?;
    let num_edges = n * (n - 1) / 2;
    let mut by_edge: Vec<Vec<u32>> = vec![Vec::new(); num_edges];
    for (c, copy) in table.copies().enumerate() {
        for &e in copy {
            by_edge[e as usize].push(c as u32);
        }
    }
    let copies: Vec<&[u32]> = table.copies().collect();
    let census = copies
        .par_iter()
        .fold(
            || (vec![0u32; copies.len()], Vec::new(), BTreeMap::new()),
            |(mut shared, mut touched, mut hist): (Vec<u32>, Vec<u32>, BTreeMap<usize, u64>), copy| {
                for &e in copy.iter() {
                    for &other in &by_edge[e as usize] {
                        if shared[other as usize] == 0 {
                            touched.push(other);
                        }
                        shared[other as usize] += 1;
                    }
                }
                for &other in &touched {
                    *hist.entry(shared[other as usize] as usize).or_insert(0) += 1;
                    shared[other as usize] = 0;
                }
                touched.clear();
                (shared, touched, hist)
            },
        )
        .map(|(_, _, hist)| hist)
        .reduce(BTreeMap::new, |mut a, b| {
            for (h, c) in b {
                *a.entry(h).or_insert(0) += c;
            }
            a
        });
    Ok(census)
}

/// `Var W = Σ_h P_h p^{2e_G-h} (h Var X + e_G^2 (1 - p^h) (E X)^2)`.
pub fn exact_variance(g: &PatternGraph, n: usize, p: f64, model: &WeightModel) -> Result<f64> {
    let census = intersection_pair_census(g, n)?;
    Ok(variance_from_census(&census, g.num_edges(), p, model))
}

pub fn variance_from_census(census: &BTreeMap<usize, u64>, e: usize, p: f64, model: &WeightModel) -> f64 {
    let m = model.moments();
    let e2 = (e * e) as f64;
    census
        .iter()
        .map(|(&h, &count)| {
            count as f64
                * p.powi((2 * e - h) as i32)
                * (h as f64 * m.variance + e2 * (1.0 - p.powi(h as i32)) * m.mean * m.mean)
        })
        .sum()
}

/// Constant-free representative `(Var X + (1-p)(E X)^2) · max_H n^{2v_G-v_H} p^{2e_G-e_H}`.
pub fn asymptotic_variance(g: &PatternGraph, n: usize, p: f64, model: &WeightModel) -> Result<f64> {
    let m = model.moments();
    Ok((m.variance + (1.0 - p) * m.mean * m.mean) * g.max_variance_term(n, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticSample {
    pub replicate: u64,
    pub raw_w: f64,
    pub normalized: f64,
}

/// Exact mean and variance of `W`, with the census they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoments {
    pub mean: f64,
    pub variance: f64,
    pub census: BTreeMap<usize, u64>,
}

pub fn exact_moments(g: &PatternGraph, n: usize, p: f64, model: &WeightModel) -> Result<ExactMoments> {
    let census = intersection_pair_census(g, n)?;
    Ok(ExactMoments {
        mean: exact_mean(g, n, p, model)?,
        variance: variance_from_census(&census, g.num_edges(), p, model),
        census,
    })
}

/// `reps` replicates of `(W - E W)/sqrt(Var W)`; replicate `i` uses host
/// substream `i`, so results do not depend on the thread count.
pub fn normalized_samples(
    g: &PatternGraph,
    n: usize,
    p: f64,
    model: &WeightModel,
    reps: u64,
    seed: u64,
) -> Result<Vec<StatisticSample>> {
    check_p(p)?;
    let exact = exact_moments(g, n, p, model)?;
    normalized_samples_with(g, n, p, model, reps, seed, &exact)
}

/// As [`normalized_samples`] with moments already computed.
pub fn normalized_samples_with(
    g: &PatternGraph,
    n: usize,
    p: f64,
    model: &WeightModel,
    reps: u64,
    seed: u64,
    exact: &ExactMoments,
) -> Result<Vec<StatisticSample>> {
    if !(exact.variance > 1e-12 * exact.mean * exact.mean) || exact.variance <= 0.0 {
        return Err(Error::Degenerate(format!(
            "Var W = {} is numerically zero (mean {})",
            exact.variance, exact.mean
        )));
    }
    let table = CopyTable::new(g, n)?;
    let sd = exact.variance.sqrt();
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let host = sample_host(n, p, *model, seed, r)?;
            let raw_w = table.combined_weight(&host);
            Ok(StatisticSample {
                replicate: r,
                raw_w,
                normalized: (raw_w - exact.mean) / sd,
            })
        })
        .collect()
}
