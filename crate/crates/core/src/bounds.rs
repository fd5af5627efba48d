//! Rate factors of the Wasserstein bounds for `W_n^G`, without their unknown
//! constants.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pattern::PatternGraph;
use crate::weights::WeightModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "r", rename_all = "snake_case")]
pub enum Family {
    /// Cycle on `r` vertices.
    Cycle(usize),
    /// Complete graph on `r` vertices.
    Complete(usize),
    /// Tree with `r` edges.
    Tree(usize),
    GeneralB,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Dense,
    SparseMid,
    SparseLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub regime: Regime,
    /// `p` above which the dense formula applies.
    pub cutoff: f64,
    /// `p` at or below which the sparse-low formula applies.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rate_term: f64,
    pub moment_ratio: f64,
    pub bound_value: f64,
    pub regime: Option<RegimeInfo>,
    pub family: Family,
    pub count_bound: Option<f64>,
    /// The reported value omits a pattern-dependent constant.
    pub rate_only: bool,
}

fn check_np(g: &PatternGraph, n: usize, p: f64) -> Result<()> {
    if p >= 1.0 {
        return domain(format!("p = {p}: the rate bound is vacuous when p = 1"));
    }
    if !(p > 0.0) {
        return domain(format!("p = {p} must lie in (0, 1)"));
    }
    if n < g.num_vertices() {
        return domain(format!("n = {n} is smaller than v_G = {}", g.num_vertices()));
    }
    Ok(())
}

fn require_no_isolated(g: &PatternGraph) -> Result<()> {
    if g.has_isolated_vertices() {
        Err(Error::Unsupported("patterns with isolated vertices".into()))
    } else {
        Ok(())
    }
}

/// `((1 - p) min_H n^{v_H} p^{e_H})^{-1/2}`, evaluated in log scale.
pub fn rate_term(g: &PatternGraph, n: usize, p: f64) -> Result<f64> {
    check_np(g, n, p)?;
    let log_min = g.log_min_subgraph_term(n, p)?;
    Ok((-0.5 * ((-p).ln_1p() + log_min)).exp())
}

/// Product of the weight-law factor and [`rate_term`].
pub fn wasserstein_bound(g: &PatternGraph, n: usize, p: f64, model: &WeightModel) -> Result<BoundReport> {
    require_no_isolated(g)?;
    let rate = rate_term(g, n, p)?;
    let ratio = model.moment_ratio(p)?;
    Ok(BoundReport {
        rate_term: rate,
        moment_ratio: ratio,
        bound_value: rate * ratio,
        regime: None,
        family: classify_family(g),
        count_bound: Some(rate),
        rate_only: true,
    })
}

/// Cycle, complete, tree, balanced or general; checked in that order.
pub fn classify_family(g: &PatternGraph) -> Family {
    let v = g.num_vertices();
    let e = g.num_edges();
    let degrees = g.degrees();
    let connected = g.is_connected() && !g.has_isolated_vertices();
    if connected && v >= 3 && degrees.iter().all(|&d| d == 2) {
        Family::Cycle(v)
    } else if v >= 3 && e == v * (v - 1) / 2 {
        Family::Complete(v)
    } else if connected && e + 1 == v {
        Family::Tree(e)
    } else if v >= 3 && g.is_balanced().unwrap_or(false) {
        Family::GeneralB
    } else {
        Family::General
    }
}

/// Regime-specialised bound for balanced patterns and the cycle, complete
/// and tree families.
pub fn regime_bound(g: &PatternGraph, n: usize, p: f64, model: &WeightModel, c: f64) -> Result<BoundReport> {
    require_no_isolated(g)?;
    if !(c > 0.0 && c < 1.0) {
        return domain(format!("cutoff c = {c} must lie in (0, 1)"));
    }
    check_np(g, n, p)?;
    let family = classify_family(g);
    let nf = n as f64;
    let threshold = match family {
        Family::Cycle(r) => nf.powf(-((r - 2) as f64) / ((r - 1) as f64)),
        Family::Complete(r) => nf.powf(-2.0 / (r + 1) as f64),
        Family::Tree(_) => 1.0 / nf,
        Family::GeneralB => {
            let (v, e) = (g.num_vertices() as f64, g.num_edges() as f64);
            nf.powf(-(v - 2.0) / (e - 1.0))
        }
        Family::General => {
            return Err(Error::Unsupported(
                "pattern is neither balanced nor a cycle, complete graph or tree; use the general bound".into(),
            ))
        }
    };
    let m = model.moments();
    let fourth = m.raw4.sqrt();
    let (regime, value) = if p > c {
        if m.variance <= 0.0 {
            return Err(Error::Degenerate(format!("Var X = 0 for {model} in the dense regime")));
        }
        (Regime::Dense, fourth / (nf * (1.0 - p).sqrt() * m.variance))
    } else if p > threshold {
        (Regime::SparseMid, fourth / (nf * p.sqrt() * m.raw2))
    } else {
        let (v, e) = (g.num_vertices() as f64, g.num_edges() as f64);
        let log_scale = 0.5 * v * nf.ln() + 0.5 * e * p.ln();
        (Regime::SparseLow, fourth / (log_scale.exp() * m.raw2))
    };
    Ok(BoundReport {
        rate_term: rate_term(g, n, p)?,
        moment_ratio: value / rate_term(g, n, p)?,
        bound_value: value,
        regime: Some(RegimeInfo {
            regime,
            cutoff: c,
            threshold,
        }),
        family,
        count_bound: None,
        rate_only: true,
    })
}
