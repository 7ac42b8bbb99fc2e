//! Amplitude scans: norm equivalence, quartic growth and lifespan.

use crate::dispersion::SymbolSpec;
use crate::energy::{cubic_constant, first_order, modified_energy, quartic_rhs, total_modified_energy};
use crate::error::{Error, Result};
use crate::evolve::{check_advective_limit, Evolver, SolverConfig, Stepper};
use crate::spectral::Field;
use rayon::prelude::*;
use serde::Serialize;

/// Least-squares slope of `ln y` against `ln x` over pairs with both
/// positive and finite. `None` with fewer than two such pairs.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Amplitudes must be positive, finite and strictly decreasing.
pub fn validate_amplitudes(amplitudes: &[f64]) -> Result<()> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidConfig("amplitudes must not be empty".into()));
    }
    if amplitudes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidConfig("amplitudes must be positive".into()));
    }
    if amplitudes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("amplitudes must be strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyScanRow {
    pub epsilon: f64,
    pub ratio: f64,
    /// `|ratio - 1|`.
    pub deviation: f64,
    pub h_n_sq: f64,
    /// Largest `|E^(k) - ||d^k u||^2| / (||u||_{H^2} ||u||^2_{H^k})` over the
    /// orders in the sum.
    pub cubic_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyScan {
    pub rows: Vec<EnergyScanRow>,
    /// Slope of `ln |ratio - 1|` against `ln epsilon` over rows above
    /// [`DEVIATION_FLOOR`].
    pub slope: Option<f64>,
}

/// Deviations at or below this are rounding error and stay out of the fit.
/// A single Fourier mode has no cubic correction at all, for instance.
pub const DEVIATION_FLOOR: f64 = 1e-12;

/// Evaluates the energy ratio at `epsilon * profile` for each amplitude.
pub fn energy_scan(sym: &SymbolSpec, profile: &Field, amplitudes: &[f64], n_max: u32) -> Result<EnergyScan> {
    validate_amplitudes(amplitudes)?;
    let rows = amplitudes
        .par_iter()
        .map(|&eps| {
            let u = profile.scaled(eps);
            let r = total_modified_energy(sym, &u, n_max)?;
            let mut c = 0.0f64;
            for k in first_order(sym)..=n_max {
                c = c.max(cubic_constant(sym, &u, k)?);
            }
            Ok(EnergyScanRow { epsilon: eps, ratio: r.ratio, deviation: (r.ratio - 1.0).abs(), h_n_sq: r.h_n_sq, cubic_constant: c })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| if r.deviation > DEVIATION_FLOOR { r.deviation } else { 0.0 }).collect();
    Ok(EnergyScan { slope: fit_loglog_slope(&xs, &ys), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSample {
    pub time: f64,
    pub order: u32,
    /// `(E(t + dt) - E(t - dt)) / (2 dt)` along the discrete trajectory.
    pub fd_rate: f64,
    pub rhs: f64,
}

/// Steps `u0` with fixed `dt` for `round(t_end / dt)` steps and, at every
/// `checkpoint_every`-th interior step, compares the centred difference of
/// `E^(k)` with [`quartic_rhs`] for each order in `orders`.
pub fn quartic_rates(sym: &SymbolSpec, u0: &Field, cfg: &SolverConfig, orders: &[u32]) -> Result<Vec<RateSample>> {
    cfg.validate()?;
    check_advective_limit(u0, cfg.dt)?;
    let stepper = Stepper::new(sym, u0.grid(), cfg.dt, true);
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut prev = u0.dealias().with_removed_mean(0.0);
    let mut cur = stepper.step(&prev)?;
    let mut out = Vec::new();
    for s in 1..n_steps {
        let next = stepper.step(&cur)?;
        if s % cfg.checkpoint_every == 0 {
            for &k in orders {
                let e_minus = modified_energy(sym, &prev, k)?;
                let e_plus = modified_energy(sym, &next, k)?;
                out.push(RateSample {
                    time: s as f64 * cfg.dt,
                    order: k,
                    fd_rate: (e_plus - e_minus) / (2.0 * cfg.dt),
                    rhs: quartic_rhs(sym, &cur, k)?,
                });
            }
        }
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// `max |fd - rhs| / max |rhs|` over a set of samples.
pub fn rate_mismatch(samples: &[RateSample]) -> f64 {
    let scale = samples.iter().map(|s| s.rhs.abs()).fold(0.0, f64::max);
    let err = samples.iter().map(|s| (s.fd_rate - s.rhs).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuarticScanRow {
    pub epsilon: f64,
    /// Largest `|dE^(k)/dt|` from [`quartic_rhs`] over the sampled times.
    pub max_rate: f64,
    pub max_fd_rate: f64,
    pub fd_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuarticScan {
    pub order: u32,
    pub rows: Vec<QuarticScanRow>,
    /// Slope of `ln max_rate` against `ln epsilon`.
    pub exponent: Option<f64>,
}

pub fn quartic_scan(
    sym: &SymbolSpec,
    profile: &Field,
    amplitudes: &[f64],
    cfg: &SolverConfig,
    order: u32,
) -> Result<QuarticScan> {
    validate_amplitudes(amplitudes)?;
    let rows = amplitudes
        .par_iter()
        .map(|&eps| {
            let samples = quartic_rates(sym, &profile.scaled(eps), cfg, &[order])?;
            if samples.is_empty() {
                return Err(Error::InvalidConfig("quartic scan needs at least one interior checkpoint".into()));
            }
            Ok(QuarticScanRow {
                epsilon: eps,
                max_rate: samples.iter().map(|s| s.rhs.abs()).fold(0.0, f64::max),
                max_fd_rate: samples.iter().map(|s| s.fd_rate.abs()).fold(0.0, f64::max),
                fd_mismatch: rate_mismatch(&samples),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_rate).collect();
    Ok(QuarticScan { order, exponent: fit_loglog_slope(&xs, &ys), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanRow {
    pub epsilon: f64,
    /// Breakdown time, or `t_end` when censored.
    pub time: f64,
    pub censored: bool,
    /// Breakdown reason, empty when censored.
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanScan {
    pub rows: Vec<LifespanRow>,
    /// Slope of `ln time` against `ln epsilon` over uncensored rows.
    pub exponent: Option<f64>,
}

/// Runs each amplitude to breakdown or `t_end`.
pub fn lifespan_scan(
    sym: &SymbolSpec,
    profile: &Field,
    amplitudes: &[f64],
    cfg: &SolverConfig,
    n_max: u32,
) -> Result<LifespanScan> {
    validate_amplitudes(amplitudes)?;
    let rows = amplitudes
        .par_iter()
        .map(|&eps| {
            let u0 = profile.scaled(eps);
            let tr = Evolver::new(sym, cfg, n_max)?.run(&u0)?;
            Ok(match tr.breakdown {
                Some(b) => LifespanRow { epsilon: eps, time: b.time, censored: false, reason: b.reason.as_str().into() },
                None => LifespanRow { epsilon: eps, time: cfg.t_end, censored: true, reason: String::new() },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| !r.censored).map(|r| (r.epsilon, r.time)).unzip();
    Ok(LifespanScan { exponent: fit_loglog_slope(&xs, &ys), rows })
}
