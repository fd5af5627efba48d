//! Grid-discretised multiple stochastic integrals.
//!
//! Time is split into `K` blocks `[2k, 2k + 2]`, each cut into `M` equal
//! cells. Kernels are piecewise constant on cells, so every integral is an
//! exact finite sum and the only randomness is the path `(U_0, …, U_{K-1})`.

mod contraction;
mod graph_kernels;
mod integral;
mod kernel;
mod operators;
pub mod suite;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{Domain, Substream};

pub use contraction::{
    contraction, contraction_inequalities_check, contraction_sym, multiplication_check, ContractionCheck,
    MultiplicationExpansion,
};
pub use graph_kernels::{
    graph_kernels, graph_kernels_via_ustat, host_from_path, projected_kernel_norms, projected_kernel_rates,
    GraphKernelData,
};
pub use integral::{eval_in, eval_in_alternating, eval_ustat, ustat_decompose};
pub use kernel::{
    inner_hat, l2_hat_norm, l2_lebesgue_sq, psi_bar, symmetrize, Kernel, KernelDump, KernelFlags, KERNEL_FORMAT_VERSION,
};
pub use operators::{
    apply_l_inv, apply_neg_l, apply_sqrt_l, contraction_norm_rhs, grad_direct, grad_family, grad_slice,
    monte_carlo_second_moment, norm_identity_check, stein_rhs, stein_rhs_with_samples, NormIdentity, SteinTerms,
};

/// Largest total cell count `K·M`.
pub const MAX_GRID_CELLS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    blocks: usize,
    cells_per_block: usize,
}

impl GridSpec {
    pub fn new(blocks: usize, cells_per_block: usize) -> Result<Self> {
        if blocks == 0 || cells_per_block == 0 {
            return domain("grid needs at least one block and one cell per block");
        }
        if blocks * cells_per_block > MAX_GRID_CELLS {
            return Err(Error::Resource(format!(
                "grid {blocks}x{cells_per_block} exceeds {MAX_GRID_CELLS} cells"
            )));
        }
        Ok(Self {
            blocks,
            cells_per_block,
        })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn cells_per_block(&self) -> usize {
        self.cells_per_block
    }

    pub fn num_cells(&self) -> usize {
        self.blocks * self.cells_per_block
    }

    pub fn block_of(&self, cell: usize) -> usize {
        cell / self.cells_per_block
    }

    /// Lebesgue width `2/M` of a cell.
    pub fn cell_width(&self) -> f64 {
        2.0 / self.cells_per_block as f64
    }

    /// Mass `1/M` of a cell under `dx/2`.
    pub fn hat_cell_mass(&self) -> f64 {
        1.0 / self.cells_per_block as f64
    }

    /// All coordinates in distinct blocks.
    pub fn in_delta(&self, cells: &[usize]) -> bool {
        for (i, &a) in cells.iter().enumerate() {
            for &b in &cells[i + 1..] {
                if self.block_of(a) == self.block_of(b) {
                    return false;
                }
            }
        }
        true
    }

    /// Cell of block `k` containing the point `2k + 1 + u`.
    pub fn cell_of(&self, u: f64) -> usize {
        (((1.0 + u) * self.cells_per_block as f64 / 2.0).floor() as usize).min(self.cells_per_block - 1)
    }
}

/// One realisation of `(U_0, …, U_{K-1})`, uniform on `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRealization {
    pub u: Vec<f64>,
}

impl PathRealization {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.iter().any(|x| !(x.abs() < 1.0)) {
            return domain("path values must lie in (-1, 1)");
        }
        Ok(Self { u })
    }

    /// Path `index` of the stream keyed by `seed`.
    pub fn random(blocks: usize, seed: u64, index: u64) -> Self {
        let mut s = Substream::new(seed, Domain::Path, index);
        Self {
            u: (0..blocks).map(|_| s.symmetric()).collect(),
        }
    }

    /// Global cell hit in each block.
    pub fn hit_cells(&self, grid: &GridSpec) -> Vec<usize> {
        self.u
            .iter()
            .enumerate()
            .map(|(k, &u)| k * grid.cells_per_block() + grid.cell_of(u))
            .collect()
    }

    /// `a - w/2` with `a` the indicator of hit cells: the integrator whose
    /// tensor powers evaluate multiple integrals.
    pub(crate) fn centred_measure(&self, grid: &GridSpec) -> Vec<f64> {
        let mut v = vec![-grid.hat_cell_mass(); grid.num_cells()];
        for c in self.hit_cells(grid) {
            v[c] += 1.0;
        }
        v
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.u.len() != grid.blocks() {
            return domain(format!("path has {} blocks, grid has {}", self.u.len(), grid.blocks()));
        }
        Ok(())
    }
}

/// `constant + Σ_k I_k(f_k)`; `kernels[j]` has order `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    grid: GridSpec,
    pub constant: f64,
    kernels: Vec<Kernel>,
}

impl KernelFamily {
    pub fn new(grid: GridSpec, constant: f64, kernels: Vec<Kernel>) -> Result<Self> {
        for (j, k) in kernels.iter().enumerate() {
            if k.grid() != grid || k.order() != j + 1 {
                return domain(format!(
                    "family slot {} holds an order-{} kernel on {:?}",
                    j + 1,
                    k.order(),
                    k.grid()
                ));
            }
        }
        Ok(Self {
            grid,
            constant,
            kernels,
        })
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            constant: 0.0,
            kernels: Vec::new(),
        }
    }

    pub fn single(f: Kernel) -> Self {
        let grid = f.grid();
        let order = f.order();
        if order == 0 {
            return Self {
                grid,
                constant: f.scalar_value(),
                kernels: Vec::new(),
            };
        }
        let mut kernels: Vec<Kernel> = (1..order).map(|j| Kernel::zero(grid, j)).collect();
        kernels.push(f);
        Self {
            grid,
            constant: 0.0,
            kernels,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn max_order(&self) -> usize {
        self.kernels.len()
    }

    /// Kernel of order `n ≥ 1`, if present.
    pub fn kernel(&self, n: usize) -> Option<&Kernel> {
        n.checked_sub(1).and_then(|j| self.kernels.get(j))
    }

    pub fn is_int0(&self) -> bool {
        self.kernels.iter().all(Kernel::check_int0)
    }

    pub fn map_orders(&self, factor: impl Fn(usize) -> f64) -> Self {
        Self {
            grid: self.grid,
            constant: self.constant,
            kernels: self
                .kernels
                .iter()
                .enumerate()
                .map(|(j, k)| k.scaled(factor(j + 1)))
                .collect(),
        }
    }

    /// Scales every kernel and the constant.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.map_orders(|_| c);
        out.constant *= c;
        out
    }

    /// Applies `psi_bar` to every kernel.
    pub fn projected(&self) -> Self {
        Self {
            grid: self.grid,
            constant: self.constant,
            kernels: self.kernels.iter().map(psi_bar).collect(),
        }
    }

    pub fn eval(&self, path: &PathRealization) -> Result<f64> {
        path.check(&self.grid)?;
        let v = path.centred_measure(&self.grid);
        Ok(self.constant
            + self
                .kernels
                .iter()
                .map(|k| kernel::contract_power(k.values(), k.order(), &v))
                .sum::<f64>())
    }

    /// `Σ_n n! ‖f_n‖²`, the second moment of the centred part under int0.
    pub fn chaos_second_moment(&self) -> f64 {
        self.kernels
            .iter()
            .map(|k| crate::util::factorial(k.order()) * l2_hat_norm(k).powi(2))
            .sum()
    }

    pub fn to_dumps(&self) -> Vec<KernelDump> {
        self.kernels.iter().map(Kernel::to_dump).collect()
    }
}
