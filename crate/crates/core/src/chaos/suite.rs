//! Identity suite: every algebraic identity of the chaos calculus checked on
//! random kernels and paths, with the largest deviation observed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::monte_carlo_second_moment;
use super::{
    contraction_inequalities_check, eval_in, eval_in_alternating, eval_ustat, grad_direct, grad_slice, graph_kernels,
    host_from_path, inner_hat, norm_identity_check, psi_bar, symmetrize, ustat_decompose, GridSpec, Kernel, KernelDump,
    KernelFamily, MultiplicationExpansion, PathRealization,
};
use crate::error::Result;
use crate::graph_stats::{combined_weight, combined_weight_edge_centric, sample_host};
use crate::pattern::PatternGraph;
use crate::rng::{Domain, Substream};
use crate::util::factorial;
use crate::weights::WeightModel;

pub const PATHWISE_TOLERANCE: f64 = 1e-9;
pub const EXACT_TOLERANCE: f64 = 1e-12;
pub const SUITE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub cases: u64,
}

impl CheckResult {
    fn deviation(name: &str, max_deviation: f64, tolerance: f64, cases: u64) -> Self {
        Self {
            name: name.to_string(),
            passed: max_deviation <= tolerance,
            max_deviation,
            tolerance,
            cases,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub format_version: u32,
    pub seed: u64,
    pub blocks: usize,
    pub cells_per_block: usize,
    pub paths: u64,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub grid: GridSpec,
    pub paths: u64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(4, 4).expect("valid grid"),
            paths: 1000,
            seed: 1,
        }
    }
}

/// Relative pathwise deviation `|a - b| / (1 + |a|)`.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs())
}

/// Symmetric Δ-supported kernel with standard normal raw entries.
pub fn random_kernel(grid: GridSpec, order: usize, seed: u64, index: u64) -> Kernel {
    let mut s = Substream::new(seed, Domain::Kernel, index);
    let raw: Vec<f64> = (0..grid.num_cells().pow(order as u32)).map(|_| s.normal()).collect();
    symmetrize(grid, order, &raw).expect("length matches")
}

/// [`random_kernel`] projected onto kernels with vanishing block averages.
pub fn random_int0_kernel(grid: GridSpec, order: usize, seed: u64, index: u64) -> Kernel {
    psi_bar(&random_kernel(grid, order, seed, index))
}

fn max_over_paths(
    grid: GridSpec,
    paths: u64,
    seed: u64,
    f: impl Fn(&PathRealization) -> Result<f64> + Sync,
) -> Result<f64> {
    let devs: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| f(&PathRealization::random(grid.blocks(), seed, i)))
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Product formula for order pairs (1,1), (1,2), (2,2).
pub fn check_multiplication(cfg: &SuiteConfig) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let pairs = [(1, 1), (1, 2), (2, 2)];
    for (i, &(n, m)) in pairs.iter().enumerate() {
        let f = random_int0_kernel(cfg.grid, n, cfg.seed, 100 + 2 * i as u64);
        let g = random_int0_kernel(cfg.grid, m, cfg.seed, 101 + 2 * i as u64);
        let expansion = MultiplicationExpansion::new(&f, &g)?;
        worst = worst.max(max_over_paths(cfg.grid, cfg.paths, cfg.seed ^ 0x11, |p| {
            let lhs = eval_in(&f, p)? * eval_in(&g, p)?;
            Ok(relative_deviation(lhs, expansion.eval(p)?))
        })?);
    }
    Ok(CheckResult::deviation(
        "multiplication_formula",
        worst,
        PATHWISE_TOLERANCE,
        cfg.paths * pairs.len() as u64,
    ))
}

/// Raw U-statistic equals the constant plus the integrals of its decomposition.
pub fn check_ustat_decomposition(cfg: &SuiteConfig) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let orders = [1, 2, 3];
    for &n in &orders {
        let f = random_kernel(cfg.grid, n, cfg.seed, 200 + n as u64);
        let fam = ustat_decompose(&f)?;
        worst = worst.max(max_over_paths(cfg.grid, cfg.paths, cfg.seed ^ 0x22, |p| {
            Ok(relative_deviation(eval_ustat(&f, p)?, fam.eval(p)?))
        })?);
    }
    Ok(CheckResult::deviation(
        "ustat_decomposition",
        worst,
        PATHWISE_TOLERANCE,
        cfg.paths * orders.len() as u64,
    ))
}

/// `I_n(f) = I_n(Ψ^{⊗n} f)`, and the fast evaluation matches the defining sum.
pub fn check_psi_invariance(cfg: &SuiteConfig) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let orders = [1, 2, 3];
    for &n in &orders {
        let f = random_kernel(cfg.grid, n, cfg.seed, 300 + n as u64);
        let projected = psi_bar(&f);
        worst = worst.max(max_over_paths(cfg.grid, cfg.paths, cfg.seed ^ 0x33, |p| {
            let a = eval_in(&f, p)?;
            Ok(relative_deviation(a, eval_in(&projected, p)?).max(relative_deviation(a, eval_in_alternating(&f, p)?)))
        })?);
    }
    Ok(CheckResult::deviation(
        "psi_projection_invariance",
        worst,
        PATHWISE_TOLERANCE,
        cfg.paths * orders.len() as u64,
    ))
}

/// Gradient from the chaos expansion against the finite-difference definition.
pub fn check_gradient(cfg: &SuiteConfig) -> Result<CheckResult> {
    let grid = cfg.grid;
    let fam = KernelFamily::new(
        grid,
        0.0,
        vec![
            random_int0_kernel(grid, 1, cfg.seed, 400),
            random_int0_kernel(grid, 2, cfg.seed, 401),
        ],
    )?;
    let paths = cfg.paths.min(200);
    let worst = max_over_paths(grid, paths, cfg.seed ^ 0x44, |p| {
        let mut worst = 0.0f64;
        for t in 0..grid.num_cells() {
            let (b, c) = (t / grid.cells_per_block(), t % grid.cells_per_block());
            worst = worst.max(relative_deviation(
                grad_slice(&fam, b, c, p)?,
                grad_direct(&fam, b, c, p)?,
            ));
        }
        Ok(worst)
    })?;
    Ok(CheckResult::deviation(
        "gradient_expansion",
        worst,
        PATHWISE_TOLERANCE,
        paths,
    ))
}

/// `E∫(∇F)² dt/2 = E[((-L)^{1/2}F)²] ≤ E[(LF)²]`.
pub fn check_norm_identity(cfg: &SuiteConfig) -> Result<CheckResult> {
    let grid = cfg.grid;
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let fam = KernelFamily::new(
            grid,
            0.0,
            (1..=3)
                .map(|n| random_int0_kernel(grid, n, cfg.seed, 500 + 3 * i + n as u64))
                .collect(),
        )?;
        let r = norm_identity_check(&fam);
        let mut dev = (r.lhs - r.rhs).abs() / r.rhs.abs().max(1.0);
        if r.rhs > r.inequality_rhs * (1.0 + EXACT_TOLERANCE) {
            dev = f64::INFINITY;
        }
        worst = worst.max(dev);
    }
    Ok(CheckResult::deviation("norm_identity", worst, EXACT_TOLERANCE, 10))
}

/// Monte Carlo `E[I_n(f) I_m(g)]` against `1{n=m} n! ⟨f, g⟩`, in standard errors.
pub fn check_isometry(cfg: &SuiteConfig) -> Result<CheckResult> {
    let grid = cfg.grid;
    let kernels: Vec<Kernel> = (1..=2)
        .map(|n| random_int0_kernel(grid, n, cfg.seed, 600 + n as u64))
        .collect();
    let alt = random_int0_kernel(grid, 2, cfg.seed, 610);
    let mut worst = 0.0f64;
    let pairs: Vec<(&Kernel, &Kernel)> = vec![
        (&kernels[0], &kernels[0]),
        (&kernels[1], &kernels[1]),
        (&kernels[0], &kernels[1]),
        (&kernels[1], &alt),
    ];
    for (f, g) in pairs {
        let products: Vec<f64> = (0..cfg.paths)
            .into_par_iter()
            .map(|i| {
                let p = PathRealization::random(grid.blocks(), cfg.seed ^ 0x66, i);
                Ok(eval_in(f, &p)? * eval_in(g, &p)?)
            })
            .collect::<Result<_>>()?;
        let (mean, var) = crate::util::mean_var(&products);
        let expected = if f.order() == g.order() {
            factorial(f.order()) * inner_hat(f, g)?
        } else {
            0.0
        };
        let se = (var / cfg.paths as f64).sqrt().max(1e-300);
        worst = worst.max((mean - expected).abs() / se);
    }
    Ok(CheckResult::deviation(
        "isometry_standard_errors",
        worst,
        4.5,
        cfg.paths * 4,
    ))
}

/// Second moment of non-projected integrals never exceeds `n! ‖f‖²` beyond noise.
pub fn check_variance_domination(cfg: &SuiteConfig) -> Result<CheckResult> {
    let grid = cfg.grid;
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=2 {
        let f = random_kernel(grid, n, cfg.seed, 700 + n as u64);
        let fam = KernelFamily::single(f.clone());
        let (m2, se) = monte_carlo_second_moment(&fam, cfg.paths, cfg.seed ^ 0x77)?;
        let bound = factorial(n) * inner_hat(&f, &f)?;
        worst = worst.max((m2 - bound) / se.max(1e-300));
    }
    Ok(CheckResult::deviation(
        "variance_domination_standard_errors",
        worst.max(0.0),
        4.0,
        cfg.paths * 2,
    ))
}

/// Both contraction-norm inequalities on random kernel pairs of orders ≤ 3.
pub fn check_contraction_inequalities(cfg: &SuiteConfig, pairs_per_config: u64) -> Result<CheckResult> {
    // Order-3 pairs need the small grid.
    let grid = GridSpec::new(4, 2)?;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=3usize {
        for m in 1..=3usize {
            for i in 0..pairs_per_config {
                let idx = 10_000 + 1000 * (3 * n + m) as u64 + 2 * i;
                let f = random_kernel(grid, n, cfg.seed, idx);
                let g = random_kernel(grid, m, cfg.seed, idx + 1);
                for k in 0..=n.min(m) {
                    for l in 0..=k {
                        let c = contraction_inequalities_check(&f, &g, k, l)?;
                        cases += 1;
                        let excess = (c.lhs - c.rhs) / c.rhs.abs().max(1e-300);
                        worst = worst.max(excess);
                    }
                }
            }
        }
    }
    Ok(CheckResult::deviation(
        "contraction_inequalities_relative_excess",
        worst.max(0.0),
        EXACT_TOLERANCE,
        cases,
    ))
}

/// Graph-kernel family against the combined weight of the coupled host.
pub fn check_graph_kernels(cfg: &SuiteConfig) -> Result<CheckResult> {
    let tri = PatternGraph::named("triangle")?;
    let configs = [
        (3usize, 0.5, WeightModel::constant(1.0)?, 2usize),
        (4, 0.5, WeightModel::constant(1.0)?, 4),
        (4, 0.5, WeightModel::two_point(1.0, 3.0, 0.5)?, 4),
        (4, 0.25, WeightModel::two_point(0.5, 2.0, 0.5)?, 8),
    ];
    let mut worst = 0.0f64;
    for (n, p, model, m) in configs {
        let fam = graph_kernels(&tri, n, p, &model, m)?;
        let grid = fam.grid();
        worst = worst.max(max_over_paths(grid, cfg.paths, cfg.seed ^ 0x88, |path| {
            let w = combined_weight(&tri, &host_from_path(n, p, &model, path)?)?;
            Ok(relative_deviation(w, fam.eval(path)?))
        })?);
    }
    Ok(CheckResult::deviation(
        "graph_kernel_identity",
        worst,
        PATHWISE_TOLERANCE,
        cfg.paths * configs.len() as u64,
    ))
}

/// Copy enumeration against the edge-centric rewrite of `W`.
pub fn check_dual_weight(cfg: &SuiteConfig) -> Result<CheckResult> {
    let patterns = [
        PatternGraph::named("triangle")?,
        PatternGraph::named("path:3")?,
        PatternGraph::named("cycle:4")?,
    ];
    let model = WeightModel::exponential(1.0)?;
    let worst = (0..cfg.paths)
        .into_par_iter()
        .map(|r| {
            let mut s = Substream::new(cfg.seed, Domain::Misc, r);
            let n = 4 + s.below(7) as usize;
            let p = 0.1 + 0.8 * s.uniform();
            let host = sample_host(n, p, model, cfg.seed ^ 0x99, r)?;
            let g = &patterns[(r % 3) as usize];
            Ok(relative_deviation(
                combined_weight(g, &host)?,
                combined_weight_edge_centric(g, &host)?,
            ))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CheckResult::deviation(
        "dual_weight_agreement",
        worst,
        PATHWISE_TOLERANCE,
        cfg.paths,
    ))
}

/// Checks on a user-supplied kernel: structure, recorded flags, and the
/// U-statistic and projection identities.
pub fn check_supplied_kernel(dump: &KernelDump, cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let f = Kernel::from_dump(dump)?;
    let grid = f.grid();
    let sym = symmetrize(grid, f.order(), f.values())?;
    let scale = f.max_abs().max(1e-300);
    let structural = f
        .values()
        .iter()
        .zip(sym.values())
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max);
    let flags = f.flags();
    let flags_dev = if flags == dump.flags { 0.0 } else { 1.0 };
    let decomposed = ustat_decompose(&f)?;
    let ustat = max_over_paths(grid, cfg.paths, cfg.seed ^ 0xaa, |p| {
        Ok(relative_deviation(eval_ustat(&f, p)?, decomposed.eval(p)?))
    })?;
    let projected = psi_bar(&f);
    let psi = max_over_paths(grid, cfg.paths, cfg.seed ^ 0xbb, |p| {
        Ok(relative_deviation(eval_in(&f, p)?, eval_in(&projected, p)?))
    })?;
    Ok(vec![
        CheckResult::deviation("supplied_kernel_symmetric_delta", structural, EXACT_TOLERANCE, 1),
        CheckResult::deviation("supplied_kernel_flags", flags_dev, 0.0, 1),
        CheckResult::deviation("supplied_kernel_ustat_identity", ustat, PATHWISE_TOLERANCE, cfg.paths),
        CheckResult::deviation("supplied_kernel_psi_invariance", psi, PATHWISE_TOLERANCE, cfg.paths),
    ])
}

/// Runs every check with the given configuration.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let checks = vec![
        check_multiplication(cfg)?,
        check_ustat_decomposition(cfg)?,
        check_psi_invariance(cfg)?,
        check_gradient(cfg)?,
        check_norm_identity(cfg)?,
        check_isometry(cfg)?,
        check_variance_domination(cfg)?,
        check_contraction_inequalities(cfg, 10)?,
        check_graph_kernels(cfg)?,
        check_dual_weight(cfg)?,
    ];
    Ok(report(cfg, checks))
}

pub fn report(cfg: &SuiteConfig, checks: Vec<CheckResult>) -> SuiteReport {
    SuiteReport {
        format_version: SUITE_FORMAT_VERSION,
        seed: cfg.seed,
        blocks: cfg.grid.blocks(),
        cells_per_block: cfg.grid.cells_per_block(),
        paths: cfg.paths,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
