use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contraction::contraction;
use super::kernel::{contract_last, l2_hat_norm, l2_lebesgue_sq};
use super::{KernelFamily, PathRealization};
use crate::error::{domain, Result};
use crate::util::{factorial, mean_var, variance_standard_error};

fn require_int0(f: &KernelFamily) -> Result<()> {
    if f.is_int0() {
        Ok(())
    } else {
        domain("kernels must have vanishing block averages; apply psi_bar first")
    }
}

/// Per-path values of `X`, `∇_t X` and `-∇_t L^{-1} X` for every cell `t`.
struct GradientSample {
    x: f64,
    grad: Vec<f64>,
    grad_l_inv: Vec<f64>,
}

fn gradient_sample(f: &KernelFamily, path: &PathRealization) -> GradientSample {
    let grid = f.grid();
    let v = path.centred_measure(&grid);
    let mut grad = vec![0.0; grid.num_cells()];
    let mut grad_l_inv = vec![0.0; grid.num_cells()];
    let mut x = f.constant;
    for k in f.kernels() {
        let j = k.order();
        // I_{j-1}(f_j(t, ·)) for every t.
        let mut slice = k.values().to_vec();
        for _ in 1..j {
            slice = contract_last(&slice, &v);
        }
        x += slice.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        for (t, s) in slice.iter().enumerate() {
            grad[t] += j as f64 * s;
            grad_l_inv[t] += s;
        }
    }
    GradientSample { x, grad, grad_l_inv }
}

/// `∇_t X = Σ_j j I_{j-1}(f_j(t, ·))` at the path, for `t` in cell `cell` of `block`.
pub fn grad_slice(f: &KernelFamily, block: usize, cell: usize, path: &PathRealization) -> Result<f64> {
    require_int0(f)?;
    path.check(&f.grid())?;
    let grid = f.grid();
    if block >= grid.blocks() || cell >= grid.cells_per_block() {
        return domain(format!("cell ({block}, {cell}) outside the grid"));
    }
    Ok(gradient_sample(f, path).grad[block * grid.cells_per_block() + cell])
}

/// For every global cell `t`, the family whose value is `∇_t X`.
pub fn grad_family(f: &KernelFamily) -> Result<Vec<KernelFamily>> {
    require_int0(f)?;
    let grid = f.grid();
    (0..grid.num_cells())
        .map(|t| {
            let constant = f.kernel(1).map_or(0.0, |k| k.values()[t]);
            let kernels = f.kernels()[1.min(f.max_order())..]
                .iter()
                .map(|k| k.slice_first(t).scaled(k.order() as f64))
                .collect();
            KernelFamily::new(grid, constant, kernels)
        })
        .collect()
}

/// `∇_t X` from the finite-difference definition: the value with block
/// `U_k` moved to the cell of `t`, minus its average over the block.
pub fn grad_direct(f: &KernelFamily, block: usize, cell: usize, path: &PathRealization) -> Result<f64> {
    let grid = f.grid();
    path.check(&grid)?;
    let m = grid.cells_per_block();
    let at_cell = |c: usize| -> Result<f64> {
        let mut moved = path.clone();
        moved.u[block] = -1.0 + (c as f64 + 0.5) * grid.cell_width();
        f.eval(&moved)
    };
    let mean = (0..m).map(at_cell).sum::<Result<f64>>()? / m as f64;
    Ok(at_cell(cell)? - mean)
}

/// `L^{-1}`: order-`n` kernels scaled by `-1/n`; defined on centred families.
pub fn apply_l_inv(f: &KernelFamily) -> Result<KernelFamily> {
    if f.constant != 0.0 {
        return domain("L^{-1} is only defined on centred families");
    }
    Ok(f.map_orders(|n| -1.0 / n as f64))
}

/// `-L`: order-`n` kernels scaled by `n`; constants are annihilated.
pub fn apply_neg_l(f: &KernelFamily) -> KernelFamily {
    let mut out = f.map_orders(|n| n as f64);
    out.constant = 0.0;
    out
}

/// `(-L)^{1/2}`: order-`n` kernels scaled by `sqrt(n)`.
pub fn apply_sqrt_l(f: &KernelFamily) -> KernelFamily {
    let mut out = f.map_orders(|n| (n as f64).sqrt());
    out.constant = 0.0;
    out
}

/// Terms of `|1 - E X²| + sqrt(Var ⟨∇X, -∇L^{-1}X⟩) + 2 sqrt(E X² ∫ E|∇_t X|⁴ dt/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinTerms {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub total: f64,
    /// One-standard-error shift of `term2 + term3` from Monte Carlo noise.
    pub mc_error: f64,
    pub second_moment: f64,
    pub paths: u64,
}

/// Monte Carlo evaluation of the explicit Stein bound over `paths` paths;
/// also returns `X` on each path.
pub fn stein_rhs_with_samples(f: &KernelFamily, paths: u64, seed: u64) -> Result<(SteinTerms, Vec<f64>)> {
    require_int0(f)?;
    if f.constant != 0.0 {
        return domain("the Stein bound needs a centred family");
    }
    if paths < 2 {
        return domain("at least two paths are needed");
    }
    let grid = f.grid();
    let mass = grid.hat_cell_mass();
    let per_path: Vec<(f64, f64, f64)> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let path = PathRealization::random(grid.blocks(), seed, i);
            let s = gradient_sample(f, &path);
            let inner = s.grad.iter().zip(&s.grad_l_inv).map(|(a, b)| a * b).sum::<f64>() * mass;
            let quartic = s.grad.iter().map(|d| d.powi(4)).sum::<f64>() * mass;
            (s.x, inner, quartic)
        })
        .collect();
    let inner: Vec<f64> = per_path.iter().map(|t| t.1).collect();
    let quartic: Vec<f64> = per_path.iter().map(|t| t.2).collect();
    let samples: Vec<f64> = per_path.iter().map(|t| t.0).collect();

    let second_moment = f.chaos_second_moment();
    let term1 = (1.0 - second_moment).abs();
    let (_, var_inner) = mean_var(&inner);
    let term2 = var_inner.max(0.0).sqrt();
    let (mean_quartic, var_quartic) = mean_var(&quartic);
    let term3 = 2.0 * (second_moment * mean_quartic).sqrt();

    let se_var = variance_standard_error(&inner);
    let err2 = (var_inner.max(0.0) + se_var).sqrt() - term2;
    let se_quartic = (var_quartic / paths as f64).sqrt();
    let err3 = 2.0 * (second_moment * (mean_quartic + se_quartic)).sqrt() - term3;
    Ok((
        SteinTerms {
            term1,
            term2,
            term3,
            total: term1 + term2 + term3,
            mc_error: err2 + err3,
            second_moment,
            paths,
        },
        samples,
    ))
}

pub fn stein_rhs(f: &KernelFamily, paths: u64, seed: u64) -> Result<SteinTerms> {
    Ok(stein_rhs_with_samples(f, paths, seed)?.0)
}

/// `|1 - E X²| + sqrt(Σ contraction norms)` with Lebesgue norms and without
/// the order-dependent constant.
pub fn contraction_norm_rhs(f: &KernelFamily) -> Result<f64> {
    let second_moment = f.constant * f.constant + f.chaos_second_moment();
    let n = f.max_order();
    let mut sum = 0.0;
    for i in 1..=n {
        let fi = f.kernel(i).expect("order within family");
        for l in 0..i {
            sum += l2_lebesgue_sq(&contraction(fi, fi, i, l)?);
        }
        for l in 1..i {
            let fl = f.kernel(l).expect("order within family");
            sum += l2_lebesgue_sq(&contraction(fi, fi, l, l)?);
            sum += l2_lebesgue_sq(&contraction(fl, fi, l, l)?);
        }
    }
    Ok((1.0 - second_moment).abs() + sum.sqrt())
}

/// `E ∫ (∇_t F)² dt/2`, `E[((-L)^{1/2} F)²]` and `E[(LF)²]`, all exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub inequality_rhs: f64,
}

pub fn norm_identity_check(f: &KernelFamily) -> NormIdentity {
    let grid = f.grid();
    let mass = grid.hat_cell_mass();
    let mut out = NormIdentity {
        lhs: 0.0,
        rhs: 0.0,
        inequality_rhs: 0.0,
    };
    for k in f.kernels() {
        let n = k.order();
        let nf = n as f64;
        let slices: f64 = (0..grid.num_cells())
            .map(|t| l2_hat_norm(&k.slice_first(t)).powi(2) * mass)
            .sum();
        out.lhs += nf * nf * factorial(n - 1) * slices;
        let norm = l2_hat_norm(k).powi(2);
        out.rhs += nf * factorial(n) * norm;
        out.inequality_rhs += nf * nf * factorial(n) * norm;
    }
    out
}

/// Monte Carlo `E[X²]` over `paths` paths, with its standard error.
pub fn monte_carlo_second_moment(f: &KernelFamily, paths: u64, seed: u64) -> Result<(f64, f64)> {
    let grid = f.grid();
    let squares: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| f.eval(&PathRealization::random(grid.blocks(), seed, i)).map(|x| x * x))
        .collect::<Result<_>>()?;
    let (mean, var) = mean_var(&squares);
    Ok((mean, (var / paths as f64).sqrt()))
}
