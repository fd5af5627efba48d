use itertools::Itertools;

use super::kernel::{contract_last, contract_power, unflatten};
use super::{Kernel, KernelFamily, PathRealization};
use crate::error::Result;
use crate::util::binom;

/// `I_n(f)` at a path, as `⟨f, (a - w/2)^{⊗n}⟩` where `a` marks the hit cells
/// and `w` is the cell width.
pub fn eval_in(f: &Kernel, path: &PathRealization) -> Result<f64> {
    let grid = f.grid();
    path.check(&grid)?;
    Ok(contract_power(f.values(), f.order(), &path.centred_measure(&grid)))
}

/// `I_n(f)` from its defining alternating sum
/// `Σ_r (-1)^{n-r} 2^{r-n} C(n,r) Σ_{Δ} f(hits_r, ·) dy^{n-r}`,
/// enumerating the off-diagonal region explicitly.
pub fn eval_in_alternating(f: &Kernel, path: &PathRealization) -> Result<f64> {
    let grid = f.grid();
    path.check(&grid)?;
    let n = f.order();
    let cells = grid.num_cells();
    let mut hit = vec![false; cells];
    for c in path.hit_cells(&grid) {
        hit[c] = true;
    }
    let width = grid.cell_width();
    let mut partial = vec![0.0; n + 1];
    let mut tuple = vec![0; n];
    for (idx, &value) in f.values().iter().enumerate() {
        if value == 0.0 {
            continue;
        }
        unflatten(idx, cells, &mut tuple);
        if !grid.in_delta(&tuple) {
            continue;
        }
        // The first r coordinates are evaluated at the path, the rest integrated.
        for r in 0..=n {
            if tuple[..r].iter().all(|&c| hit[c]) {
                partial[r] += value * width.powi((n - r) as i32);
            }
        }
    }
    Ok((0..=n)
        .map(|r| {
            let sign = if (n - r).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * 0.5f64.powi((n - r) as i32) * binom(n, r) * partial[r]
        })
        .sum())
}

/// Plain U-statistic `Σ f(hit cells)` over ordered tuples of distinct blocks.
pub fn eval_ustat(f: &Kernel, path: &PathRealization) -> Result<f64> {
    let grid = f.grid();
    path.check(&grid)?;
    let hits = path.hit_cells(&grid);
    Ok((0..grid.blocks())
        .permutations(f.order())
        .map(|blocks| {
            let cells: Vec<usize> = blocks.iter().map(|&b| hits[b]).collect();
            f.at(&cells)
        })
        .sum())
}

/// Kernels `f^{(r)} = C(n,r) 2^{r-n} ∫ f(·, y) dy^{n-r}` with
/// `Σ_{distinct} f(hits) = f^{(0)} + Σ_{r ≥ 1} I_r(f^{(r)})` on every path.
pub fn ustat_decompose(f: &Kernel) -> Result<KernelFamily> {
    let grid = f.grid();
    let n = f.order();
    let width = vec![grid.cell_width(); grid.num_cells()];
    // partials[j] integrates the last j coordinates.
    let mut partials = vec![f.values().to_vec()];
    for _ in 0..n {
        let next = contract_last(partials.last().expect("nonempty"), &width);
        partials.push(next);
    }
    let scaled = |r: usize| -> Vec<f64> {
        let c = binom(n, r) * 0.5f64.powi((n - r) as i32);
        partials[n - r].iter().map(|v| v * c).collect()
    };
    let constant = scaled(0)[0];
    let kernels = (1..=n)
        .map(|r| Kernel::from_values(grid, r, scaled(r)))
        .collect::<Result<Vec<_>>>()?;
    KernelFamily::new(grid, constant, kernels)
}
