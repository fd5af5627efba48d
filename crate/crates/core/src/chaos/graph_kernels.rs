//! Chaos kernels of the combined weight `W_n^G`.
//!
//! Block `k` carries the `k`-th edge of `K_n`; the edge uniform is
//! `(1 + U_k)/2`, so the edge is present iff the hit cell lies below `pM` and
//! its weight is the quantile at `(1 + U_k)/(2p)`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::kernel::{flat_index, psi_bar, symmetrize, unflatten};
use super::{ustat_decompose, GridSpec, Kernel, KernelFamily, PathRealization};
use crate::error::{Error, Result};
use crate::graph_stats::{CopyTable, HostSample};
use crate::pattern::PatternGraph;
use crate::util::factorial;
use crate::weights::WeightModel;

const ALIGNMENT_TOLERANCE: f64 = 1e-9;

fn integral_count(x: f64) -> Option<usize> {
    let r = x.round();
    ((x - r).abs() <= ALIGNMENT_TOLERANCE && r >= 0.0).then_some(r as usize)
}

/// The per-block kernels `g_0, …, g_{e_G}` on the local grid `M^k`:
/// `g_k(c) = p^{e-k}/((e-k)! k!) Π 1(c_i < pM) ((e-k) E X + Σ q̄(c_i))`,
/// `q̄` the cell average of the quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphKernelData {
    pub num_edges: usize,
    pub p: f64,
    pub model: WeightModel,
    pub cells_per_block: usize,
    g: Vec<Vec<f64>>,
}

impl GraphKernelData {
    /// Requires `pM` integral and, for two-point laws, `q p M` integral so
    /// that presence and weight are constant on every cell.
    pub fn new(num_edges: usize, p: f64, model: WeightModel, cells_per_block: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("p = {p} must lie in (0, 1)")));
        }
        let m = cells_per_block;
        let present = integral_count(p * m as f64)
            .ok_or_else(|| Error::Alignment(format!("p·M = {} must be an integer (p = {p}, M = {m})", p * m as f64)))?;
        if let WeightModel::TwoPoint { q, .. } = model {
            if integral_count(q * p * m as f64).is_none() {
                return Err(Error::Alignment(format!(
                    "q·p·M = {} must be an integer for the two-point atom split",
                    q * p * m as f64
                )));
            }
        }
        let pm = p * m as f64;
        let qbar: Vec<f64> = (0..present)
            .map(|c| model.quantile_average(c as f64 / pm, ((c + 1) as f64 / pm).min(1.0)))
            .collect::<Result<_>>()?;
        let mean = model.moments().mean;
        let e = num_edges;
        let g = (0..=e)
            .map(|k| {
                let factor = p.powi((e - k) as i32) / (factorial(e - k) * factorial(k));
                let mut cells = vec![0; k];
                (0..m.pow(k as u32))
                    .map(|idx| {
                        unflatten(idx, m, &mut cells);
                        if cells.iter().any(|&c| c >= present) {
                            0.0
                        } else {
                            factor * ((e - k) as f64 * mean + cells.iter().map(|&c| qbar[c]).sum::<f64>())
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            num_edges,
            p,
            model,
            cells_per_block,
            g,
        })
    }

    /// `g_k` on the local grid, row-major over `M^k`.
    pub fn g_k(&self, k: usize) -> &[f64] {
        &self.g[k]
    }

    /// `Ψ^{⊗k} g_k` on the local grid.
    pub fn psi_g_k(&self, k: usize) -> Vec<f64> {
        let m = self.cells_per_block;
        let mut values = self.g[k].clone();
        for j in 0..k {
            let stride = m.pow((k - 1 - j) as u32);
            for outer in 0..m.pow(j as u32) {
                for inner in 0..stride {
                    let start = outer * m * stride + inner;
                    let mean = (0..m).map(|c| values[start + c * stride]).sum::<f64>() / m as f64;
                    for c in 0..m {
                        values[start + c * stride] -= mean;
                    }
                }
            }
        }
        values
    }
}

/// Kernel family `{h̄_0, …, h̄_{e_G}}` with `W = h̄_0 + Σ_k I_k(h̄_k)` pathwise
/// under the edge coupling. `h̄_k` is `Ψ^{⊗k}` applied to `g_k` times the
/// number of ordered edge sequences completing the `k` edges to a copy.
pub fn graph_kernels(
    g: &PatternGraph,
    n: usize,
    p: f64,
    model: &WeightModel,
    cells_per_block: usize,
) -> Result<KernelFamily> {
    let e = g.num_edges();
    let data = GraphKernelData::new(e, p, *model, cells_per_block)?;
    let grid = GridSpec::new(n * (n - 1) / 2, cells_per_block)?;
    let table = CopyTable::new(g, n)?;
    let m = cells_per_block;
    let cells = grid.num_cells();
    let constant = data.g_k(0)[0] * factorial(e) * table.len() as f64;
    let mut kernels = Vec::with_capacity(e);
    for k in 1..=e {
        let mut values = vec![0.0; cells.pow(k as u32)];
        let completions = factorial(e - k);
        let gk = data.g_k(k);
        let mut local = vec![0; k];
        let mut global = vec![0; k];
        for copy in table.copies() {
            for blocks in copy.iter().permutations(k) {
                for (idx, &value) in gk.iter().enumerate() {
                    unflatten(idx, m, &mut local);
                    for ((slot, &&b), &c) in global.iter_mut().zip(&blocks).zip(&local) {
                        *slot = b as usize * m + c;
                    }
                    values[flat_index(&global, cells)] += completions * value;
                }
            }
        }
        kernels.push(psi_bar(&Kernel::from_values(grid, k, values)?));
    }
    KernelFamily::new(grid, constant, kernels)
}

/// The same family built generically: the order-`e_G` U-statistic kernel
/// `f = (1/e_G!) 1{copy} Π 1(present) Σ q̄`, decomposed and projected.
pub fn graph_kernels_via_ustat(
    g: &PatternGraph,
    n: usize,
    p: f64,
    model: &WeightModel,
    cells_per_block: usize,
) -> Result<KernelFamily> {
    let e = g.num_edges();
    let data = GraphKernelData::new(e, p, *model, cells_per_block)?;
    let grid = GridSpec::new(n * (n - 1) / 2, cells_per_block)?;
    let table = CopyTable::new(g, n)?;
    let m = cells_per_block;
    let cells = grid.num_cells();
    // g_1 is p^{e-1}/(e-1)! ((e-1) m1 + q̄); recover q̄ from it.
    let g1 = data.g_k(1);
    let factor = p.powi(e as i32 - 1) / factorial(e - 1);
    let mean = model.moments().mean;
    let qbar: Vec<Option<f64>> = g1
        .iter()
        .enumerate()
        .map(|(c, &v)| ((c as f64) < p * m as f64).then(|| v / factor - (e - 1) as f64 * mean))
        .collect();
    let mut values = vec![0.0; cells.pow(e as u32)];
    let scale = 1.0 / factorial(e);
    let mut local = vec![0; e];
    let mut global = vec![0; e];
    for copy in table.copies() {
        for idx in 0..m.pow(e as u32) {
            unflatten(idx, m, &mut local);
            let Some(weight) = local.iter().map(|&c| qbar[c]).sum::<Option<f64>>() else {
                continue;
            };
            for (slot, (&b, &c)) in global.iter_mut().zip(copy.iter().zip(&local)) {
                *slot = b as usize * m + c;
            }
            values[flat_index(&global, cells)] += scale * weight;
        }
    }
    let raw = symmetrize(grid, e, &values)?.scaled(factorial(e));
    Ok(ustat_decompose(&raw)?.projected())
}

/// Host whose edge `k` has uniform `(1 + U_k)/2`.
pub fn host_from_path(n: usize, p: f64, model: &WeightModel, path: &PathRealization) -> Result<HostSample> {
    HostSample::from_uniforms(n, p, *model, path.u.iter().map(|u| (1.0 + u) / 2.0).collect())
}

/// `∫ (Ψ^{⊗k} g_k)²` and `∫ (∫ (Ψ^{⊗k} g_k)² dx_1…dx_l)² dx_{l+1}…dx_k`
/// over `(0, 2)^k` with Lebesgue measure.
pub fn projected_kernel_norms(data: &GraphKernelData, k: usize, l: usize) -> Result<(f64, f64)> {
    if l > k || k > data.num_edges {
        return Err(Error::Domain(format!("need 0 ≤ l ≤ k ≤ e_G; got l={l}, k={k}")));
    }
    let m = data.cells_per_block;
    let width = 2.0 / m as f64;
    let psi = data.psi_g_k(k);
    let lhs1 = psi.iter().map(|v| v * v).sum::<f64>() * width.powi(k as i32);
    // Row-major: the first l coordinates vary slowest.
    let inner_len = m.pow((k - l) as u32);
    let mut partial = vec![0.0; inner_len];
    for (idx, v) in psi.iter().enumerate() {
        partial[idx % inner_len] += v * v;
    }
    let lhs2 = partial.iter().map(|s| (s * width.powi(l as i32)).powi(2)).sum::<f64>() * width.powi((k - l) as i32);
    Ok((lhs1, lhs2))
}

/// Rate factors `p^{2e-k}(1-p)^{k-1}(Var X + (1-p)(E X)²)` and
/// `p^{4e-3k+l}(1-p)^{k+l-2}(E(X - E X)⁴ + (1-p)²(E X)⁴)`.
pub fn projected_kernel_rates(num_edges: usize, k: usize, l: usize, p: f64, model: &WeightModel) -> (f64, f64) {
    let m = model.moments();
    let (e, k, l) = (num_edges as i32, k as i32, l as i32);
    let q = 1.0 - p;
    let rate1 = p.powi(2 * e - k) * q.powi(k - 1) * (m.variance + q * m.mean * m.mean);
    let rate2 = p.powi(4 * e - 3 * k + l) * q.powi(k + l - 2) * (m.central4 + q * q * m.mean.powi(4));
    (rate1, rate2)
}
