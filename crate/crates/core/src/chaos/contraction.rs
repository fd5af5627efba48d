use serde::{Deserialize, Serialize};

use super::kernel::{l2_lebesgue_sq, symmetrize};
use super::{eval_in, Kernel, PathRealization};
use crate::error::{domain, Result};
use crate::util::{binom, factorial};

/// `f ⋆_k^l g`: the first `l` coordinates are shared and integrated against
/// `dx/2`, the next `k - l` shared and kept, the rest free. Output coordinates
/// are ordered `(shared kept, free of f, free of g)`. The result is not
/// symmetrised.
pub fn contraction(f: &Kernel, g: &Kernel, k: usize, l: usize) -> Result<Kernel> {
    let (n, m) = (f.order(), g.order());
    if f.grid() != g.grid() {
        return domain("contraction of kernels on different grids");
    }
    if l > k || k > n.min(m) {
        return domain(format!(
            "contraction indices need 0 ≤ l ≤ k ≤ min(n, m); got l={l}, k={k}, n={n}, m={m}"
        ));
    }
    let grid = f.grid();
    let cells = grid.num_cells();
    let size = |d: usize| cells.pow(d as u32);
    let (sw, sx, sy, sz) = (size(l), size(k - l), size(n - k), size(m - k));
    let mass = grid.hat_cell_mass().powi(l as i32);
    let (fv, gv) = (f.values(), g.values());
    let mut out = vec![0.0; sx * sy * sz];
    for w in 0..sw {
        for x in 0..sx {
            let f_row = &fv[(w * sx + x) * sy..(w * sx + x + 1) * sy];
            let g_row = &gv[(w * sx + x) * sz..(w * sx + x + 1) * sz];
            if f_row.iter().all(|&v| v == 0.0) {
                continue;
            }
            let block = &mut out[x * sy * sz..(x + 1) * sy * sz];
            for (y, &fy) in f_row.iter().enumerate() {
                if fy == 0.0 {
                    continue;
                }
                let dst = &mut block[y * sz..(y + 1) * sz];
                for (d, &gz) in dst.iter_mut().zip(g_row) {
                    *d += fy * gz;
                }
            }
        }
    }
    if mass != 1.0 {
        out.iter_mut().for_each(|v| *v *= mass);
    }
    Kernel::from_values(grid, n + m - k - l, out)
}

/// Symmetrised contraction restricted to the off-diagonal region.
pub fn contraction_sym(f: &Kernel, g: &Kernel, k: usize, l: usize) -> Result<Kernel> {
    let raw = contraction(f, g, k, l)?;
    symmetrize(raw.grid(), raw.order(), raw.values())
}

/// Right-hand side of the product formula
/// `I_n(f) I_m(g) = Σ_k k! C(m,k) C(n,k) Σ_i C(k,i) I_{n+m-k-i}(f ⋆̃_k^i g)`,
/// with the contraction kernels precomputed.
#[derive(Debug, Clone)]
pub struct MultiplicationExpansion {
    terms: Vec<(f64, Kernel)>,
}

impl MultiplicationExpansion {
    pub fn new(f: &Kernel, g: &Kernel) -> Result<Self> {
        if !f.check_int0() || !g.check_int0() {
            return domain("the product formula needs kernels with vanishing block averages");
        }
        let (n, m) = (f.order(), g.order());
        let mut terms = Vec::new();
        for k in 0..=n.min(m) {
            let outer = factorial(k) * binom(m, k) * binom(n, k);
            for i in 0..=k {
                terms.push((outer * binom(k, i), contraction_sym(f, g, k, i)?));
            }
        }
        Ok(Self { terms })
    }

    pub fn eval(&self, path: &PathRealization) -> Result<f64> {
        self.terms.iter().map(|(c, h)| Ok(c * eval_in(h, path)?)).sum()
    }
}

/// `(I_n(f) I_m(g), product-formula expansion)` at one path.
pub fn multiplication_check(f: &Kernel, g: &Kernel, path: &PathRealization) -> Result<(f64, f64)> {
    let expansion = MultiplicationExpansion::new(f, g)?;
    Ok((eval_in(f, path)? * eval_in(g, path)?, expansion.eval(path)?))
}

/// Both sides of one contraction-norm inequality, with Lebesgue norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub k: usize,
    pub l: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// For `l < k`: the variant with `2^{2n-2k-1}` multiplying the left side.
    pub printed_lhs: Option<f64>,
    pub printed_rhs: Option<f64>,
    pub printed_holds: Option<bool>,
}

fn le(a: f64, b: f64) -> bool {
    a <= b + 1e-12 * a.abs().max(b.abs())
}

/// For `l < k`:
/// `‖f ⋆_k^l g‖² ≤ 2^{2n-2k-1} ‖f ⋆_n^{l+n-k} f‖² + 2^{2m-2k-1} ‖g ⋆_m^{l+m-k} g‖²`;
/// for `l = k`:
/// `‖f ⋆_k^k g‖² ≤ 2^{2n-4k-1} ‖f ⋆_{n-k}^{n-k} f‖² + 2^{2m-4k-1} ‖g ⋆_{m-k}^{m-k} g‖²`.
pub fn contraction_inequalities_check(f: &Kernel, g: &Kernel, k: usize, l: usize) -> Result<ContractionCheck> {
    let (n, m) = (f.order() as i32, g.order() as i32);
    let lhs = l2_lebesgue_sq(&contraction(f, g, k, l)?);
    let (ki, li) = (k as i32, l as i32);
    let pow2 = |e: i32| 2f64.powi(e);
    if l < k {
        let ff = l2_lebesgue_sq(&contraction(f, f, f.order(), l + f.order() - k)?);
        let gg = l2_lebesgue_sq(&contraction(g, g, g.order(), l + g.order() - k)?);
        let rhs = pow2(2 * n - 2 * ki - 1) * ff + pow2(2 * m - 2 * ki - 1) * gg;
        let printed_lhs = pow2(2 * n - 2 * ki - 1) * lhs;
        let printed_rhs = ff + pow2(2 * m - 2 * ki - 1) * gg;
        Ok(ContractionCheck {
            k,
            l,
            lhs,
            rhs,
            holds: le(lhs, rhs),
            printed_lhs: Some(printed_lhs),
            printed_rhs: Some(printed_rhs),
            printed_holds: Some(le(printed_lhs, printed_rhs)),
        })
    } else {
        let (fn_, gm) = (f.order() - k, g.order() - k);
        let ff = l2_lebesgue_sq(&contraction(f, f, fn_, fn_)?);
        let gg = l2_lebesgue_sq(&contraction(g, g, gm, gm)?);
        let rhs = pow2(2 * n - 4 * li - 1) * ff + pow2(2 * m - 4 * li - 1) * gg;
        Ok(ContractionCheck {
            k,
            l,
            lhs,
            rhs,
            holds: le(lhs, rhs),
            printed_lhs: None,
            printed_rhs: None,
            printed_holds: None,
        })
    }
}
