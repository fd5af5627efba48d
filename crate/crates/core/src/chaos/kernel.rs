use std::sync::OnceLock;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{domain, Result};

/// Relative tolerance for the structural flags.
pub const FLAG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelFlags {
    pub is_symmetric: bool,
    pub vanishes_off_delta: bool,
    pub satisfies_int0: bool,
}

/// Piecewise-constant function on `order` copies of the cell grid, stored
/// densely in row-major order over global cell indices.
#[derive(Debug, Clone)]
pub struct Kernel {
    grid: GridSpec,
    order: usize,
    values: Vec<f64>,
    flags: OnceLock<KernelFlags>,
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.order == other.order && self.values == other.values
    }
}

impl Kernel {
    /// Wraps raw values without symmetrising; see [`symmetrize`].
    pub fn from_values(grid: GridSpec, order: usize, values: Vec<f64>) -> Result<Self> {
        let expected = grid.num_cells().pow(order as u32);
        if values.len() != expected {
            return domain(format!(
                "order-{order} kernel on {} cells needs {expected} values, got {}",
                grid.num_cells(),
                values.len()
            ));
        }
        Ok(Self {
            grid,
            order,
            values,
            flags: OnceLock::new(),
        })
    }

    pub fn zero(grid: GridSpec, order: usize) -> Self {
        Self::from_values(grid, order, vec![0.0; grid.num_cells().pow(order as u32)]).expect("length matches")
    }

    pub fn scalar(grid: GridSpec, c: f64) -> Self {
        Self::from_values(grid, 0, vec![c]).expect("length matches")
    }

    /// Order-1 kernel from one value per global cell.
    pub fn order_one(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::from_values(grid, 1, values)
    }

    /// Symmetrised, Δ-restricted tensor product of order-1 value vectors.
    pub fn tensor_product(grid: GridSpec, factors: &[&[f64]]) -> Result<Self> {
        let n = grid.num_cells();
        let mut values = vec![1.0];
        for f in factors {
            if f.len() != n {
                return domain("tensor factor length differs from the cell count");
            }
            values = values.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
        }
        symmetrize(grid, factors.len(), &values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of an order-0 kernel.
    pub fn scalar_value(&self) -> f64 {
        debug_assert_eq!(self.order, 0);
        self.values[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn at(&self, cells: &[usize]) -> f64 {
        self.values[flat_index(cells, self.grid.num_cells())]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_values(self.grid, self.order, self.values.iter().map(|v| v * c).collect()).expect("length matches")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::from_values(
            self.grid,
            self.order,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.order != other.order {
            return domain(format!(
                "kernel mismatch: order {} on {:?} vs order {} on {:?}",
                self.order, self.grid, other.order, other.grid
            ));
        }
        Ok(())
    }

    pub fn flags(&self) -> KernelFlags {
        *self.flags.get_or_init(|| KernelFlags {
            is_symmetric: self.compute_symmetric(),
            vanishes_off_delta: self.compute_off_delta_zero(),
            satisfies_int0: self.compute_int0(),
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.flags().is_symmetric
    }

    pub fn vanishes_off_delta(&self) -> bool {
        self.flags().vanishes_off_delta
    }

    /// Every block average of every coordinate section vanishes.
    pub fn check_int0(&self) -> bool {
        self.flags().satisfies_int0
    }

    fn tolerance(&self) -> f64 {
        FLAG_TOLERANCE * self.max_abs()
    }

    fn compute_symmetric(&self) -> bool {
        let n = self.grid.num_cells();
        let tol = self.tolerance();
        let mut cells = vec![0; self.order];
        (0..self.values.len()).all(|idx| {
            unflatten(idx, n, &mut cells);
            (0..self.order.saturating_sub(1)).all(|j| {
                cells.swap(j, j + 1);
                let other = self.values[flat_index(&cells, n)];
                cells.swap(j, j + 1);
                (other - self.values[idx]).abs() <= tol
            })
        })
    }

    fn compute_off_delta_zero(&self) -> bool {
        let n = self.grid.num_cells();
        let mut cells = vec![0; self.order];
        (0..self.values.len()).all(|idx| {
            unflatten(idx, n, &mut cells);
            self.grid.in_delta(&cells) || self.values[idx] == 0.0
        })
    }

    fn compute_int0(&self) -> bool {
        let tol = self.tolerance();
        let m = self.grid.cells_per_block() as f64;
        let mut ok = true;
        for j in 0..self.order {
            for_each_block_segment(&self.grid, self.order, j, |start, stride| {
                let sum: f64 = (0..self.grid.cells_per_block())
                    .map(|c| self.values[start + c * stride])
                    .sum();
                ok &= (sum / m).abs() <= tol;
            });
        }
        ok
    }

    /// Section `f(t, ·)` with the first coordinate fixed at global cell `t`.
    pub fn slice_first(&self, t: usize) -> Self {
        debug_assert!(self.order >= 1);
        let len = self.values.len() / self.grid.num_cells();
        Self::from_values(self.grid, self.order - 1, self.values[t * len..(t + 1) * len].to_vec())
            .expect("length matches")
    }
}

pub(crate) fn flat_index(cells: &[usize], n: usize) -> usize {
    cells.iter().fold(0, |acc, &c| acc * n + c)
}

pub(crate) fn unflatten(mut idx: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
}

/// Calls `visit(start, stride)` for every run of one block's cells along
/// coordinate `j`, all other coordinates fixed.
fn for_each_block_segment(grid: &GridSpec, order: usize, j: usize, mut visit: impl FnMut(usize, usize)) {
    let n = grid.num_cells();
    let stride = n.pow((order - 1 - j) as u32);
    let outer = n.pow(j as u32);
    for o in 0..outer {
        for b in 0..grid.blocks() {
            for inner in 0..stride {
                visit(o * n * stride + b * grid.cells_per_block() * stride + inner, stride);
            }
        }
    }
}

/// Averages over all coordinate permutations, then zeroes entries with two
/// coordinates in one block.
pub fn symmetrize(grid: GridSpec, order: usize, values: &[f64]) -> Result<Kernel> {
    let n = grid.num_cells();
    if values.len() != n.pow(order as u32) {
        return domain("raw array length does not match order and grid");
    }
    let perms: Vec<Vec<usize>> = (0..order).permutations(order).collect();
    let scale = 1.0 / perms.len() as f64;
    let mut out = vec![0.0; values.len()];
    let mut cells = vec![0; order];
    let mut permuted = vec![0; order];
    for (idx, slot) in out.iter_mut().enumerate() {
        unflatten(idx, n, &mut cells);
        if !grid.in_delta(&cells) {
            continue;
        }
        let mut acc = 0.0;
        for perm in &perms {
            for (dst, &src) in permuted.iter_mut().zip(perm) {
                *dst = cells[src];
            }
            acc += values[flat_index(&permuted, n)];
        }
        *slot = acc * scale;
    }
    Kernel::from_values(grid, order, out)
}

/// `Ψ_{t_1} ⋯ Ψ_{t_n} f`: subtracts the block average in every coordinate.
pub fn psi_bar(f: &Kernel) -> Kernel {
    let grid = f.grid;
    let m = grid.cells_per_block();
    let mut values = f.values.clone();
    for j in 0..f.order {
        for_each_block_segment(&grid, f.order, j, |start, stride| {
            let mean = (0..m).map(|c| values[start + c * stride]).sum::<f64>() / m as f64;
            for c in 0..m {
                values[start + c * stride] -= mean;
            }
        });
    }
    Kernel::from_values(grid, f.order, values).expect("length matches")
}

/// `⟨f, g⟩` with respect to `(dx/2)^{⊗n}`: each cell carries mass `1/M`.
pub fn inner_hat(f: &Kernel, g: &Kernel) -> Result<f64> {
    f.check_compatible(g)?;
    let mass = f.grid.hat_cell_mass().powi(f.order as i32);
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() * mass)
}

pub fn l2_hat_norm(f: &Kernel) -> f64 {
    inner_hat(f, f).expect("same kernel").sqrt()
}

/// Squared norm with respect to Lebesgue measure: each cell carries mass `2/M`.
pub fn l2_lebesgue_sq(f: &Kernel) -> f64 {
    let mass = f.grid.cell_width().powi(f.order as i32);
    f.values.iter().map(|v| v * v).sum::<f64>() * mass
}

/// Contracts the last coordinate of a row-major array against `v`.
pub(crate) fn contract_last(values: &[f64], v: &[f64]) -> Vec<f64> {
    values
        .chunks_exact(v.len())
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `⟨f, v^{⊗order}⟩` contracting coordinates from the last.
pub(crate) fn contract_power(values: &[f64], order: usize, v: &[f64]) -> f64 {
    if order == 0 {
        return values[0];
    }
    let mut cur = contract_last(values, v);
    for _ in 1..order {
        cur = contract_last(&cur, v);
    }
    cur[0]
}

/// Serialised form: header fields plus the flat row-major value array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDump {
    pub format_version: u32,
    pub order: usize,
    pub blocks: usize,
    pub cells_per_block: usize,
    pub flags: KernelFlags,
    pub values: Vec<f64>,
}

pub const KERNEL_FORMAT_VERSION: u32 = 1;

impl Kernel {
    pub fn to_dump(&self) -> KernelDump {
        KernelDump {
            format_version: KERNEL_FORMAT_VERSION,
            order: self.order,
            blocks: self.grid.blocks(),
            cells_per_block: self.grid.cells_per_block(),
            flags: self.flags(),
            values: self.values.clone(),
        }
    }

    /// Rebuilds a kernel; stored flags are recomputed, not trusted.
    pub fn from_dump(dump: &KernelDump) -> Result<Self> {
        if dump.format_version != KERNEL_FORMAT_VERSION {
            return domain(format!("unsupported kernel format version {}", dump.format_version));
        }
        let grid = GridSpec::new(dump.blocks, dump.cells_per_block)?;
        Self::from_values(grid, dump.order, dump.values.clone())
    }
}
