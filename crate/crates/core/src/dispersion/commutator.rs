//! Normalized sizes of the commutator symbol `N` and the phase defect `U`
//! on the near-diagonal high-frequency region
//! `xi, eta, sigma >= 1`, `|xi - eta| + |eta - sigma| <= xi / 10`.

use super::verify::BoundReport;
use super::SymbolSpec;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorSample {
    pub xi: f64,
    pub eta: f64,
    pub sigma: f64,
}

impl CommutatorSample {
    pub fn new(xi: f64, eta: f64, sigma: f64) -> Self {
        CommutatorSample { xi, eta, sigma }
    }

    pub fn in_region(&self) -> bool {
        let CommutatorSample { xi, eta, sigma } = *self;
        xi >= 1.0 && eta >= 1.0 && sigma >= 1.0 && (xi - eta).abs() + (eta - sigma).abs() <= xi / 10.0
    }
}

/// `m(xi-eta, eta)/xi - m(xi-eta, sigma)/(xi-eta+sigma)`.
pub fn commutator_n(sym: &SymbolSpec, xi: f64, eta: f64, sigma: f64) -> f64 {
    let a = xi - eta;
    sym.m(a, eta) / xi - sym.m(a, sigma) / (a + sigma)
}

/// `[p(sigma) sigma - p(xi-eta+sigma)(xi-eta+sigma)] - [p(eta) eta - p(xi) xi]`.
pub fn commutator_u(sym: &SymbolSpec, xi: f64, eta: f64, sigma: f64) -> f64 {
    let a = xi - eta;
    (sym.psi(sigma) - sym.psi(a + sigma)) - (sym.psi(eta) - sym.psi(xi))
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorReport {
    /// Constants for `|N| xi |xi-eta| / |sigma-eta|`.
    pub n_bound: BoundReport,
    /// Constants for `|U| / (|xi-eta| |sigma-eta| eta^(alpha-1))`.
    pub u_bound: BoundReport,
    /// Samples with `sigma = eta` or `xi = eta`, where the normalizations are 0/0.
    pub skipped: usize,
}

/// Structured sample set: `n_xi` log-spaced values of `xi` in `[1, xi_max]`
/// times an `n_offsets x n_offsets` cell-centred grid of
/// `((xi-eta)/xi, (sigma-eta)/xi)` over the diamond of radius 1/10. Points
/// with `eta < 1` or `sigma < 1` are dropped. Cell centres never hit
/// `xi = eta` or `sigma = eta`.
pub fn commutator_region_grid(xi_max: f64, n_xi: usize, n_offsets: usize) -> Vec<CommutatorSample> {
    let mut out = Vec::new();
    let span = xi_max.log10();
    let h = 0.2 / n_offsets as f64;
    for i in 0..n_xi {
        let t = if n_xi > 1 { i as f64 / (n_xi - 1) as f64 } else { 0.0 };
        let xi = 10f64.powf(span * t);
        for iu in 0..n_offsets {
            let u = -0.1 + (iu as f64 + 0.5) * h;
            for iv in 0..n_offsets {
                let v = -0.1 + (iv as f64 + 0.5) * h;
                if u.abs() + v.abs() > 0.1 {
                    continue;
                }
                let eta = xi * (1.0 - u);
                let sigma = eta + v * xi;
                let s = CommutatorSample::new(xi, eta, sigma);
                if s.in_region() {
                    out.push(s);
                }
            }
        }
    }
    out
}

pub fn commutator_scan(sym: &SymbolSpec, samples: &[CommutatorSample]) -> Result<CommutatorReport> {
    if let Some(s) = samples.iter().find(|s| !s.in_region()) {
        return Err(Error::OutsideRegion { xi: s.xi, eta: s.eta, sigma: s.sigma });
    }
    let usable: Vec<&CommutatorSample> = samples.iter().filter(|s| s.sigma != s.eta && s.xi != s.eta).collect();
    let skipped = samples.len() - usable.len();
    let alpha = sym.alpha;
    let rows: Vec<((Vec<f64>, f64), (Vec<f64>, f64))> = usable
        .par_iter()
        .map(|s| {
            let CommutatorSample { xi, eta, sigma } = **s;
            let pt = vec![xi, eta, sigma];
            let d1 = (xi - eta).abs();
            let d2 = (sigma - eta).abs();
            let n = commutator_n(sym, xi, eta, sigma).abs() * xi * d1 / d2;
            let u = commutator_u(sym, xi, eta, sigma).abs() / (d1 * d2 * eta.powf(alpha - 1.0));
            ((pt.clone(), n), (pt, u))
        })
        .collect();
    let (n_rows, u_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(CommutatorReport {
        n_bound: BoundReport::from_ratios("commutator_N", &n_rows)?,
        u_bound: BoundReport::from_ratios("commutator_U", &u_rows)?,
        skipped,
    })
}
