//! Time integration of `u_t = L u_x - u u_x` with an integrating-factor
//! RK4 scheme.
//!
//! The linear part is propagated exactly by `exp(i p(xi) xi t)` and RK4 is
//! applied to the nonlinear term in the rotated variables. With
//! `E = exp(i p xi dt / 2)` and `N(v) = -(1/2) d(v^2)/dx`:
//!
//! ```text
//! a = dt N(u)
//! b = dt N(E (u + a/2))
//! c = dt N(E u + b/2)
//! d = dt N(E^2 u + E c)
//! u+ = E^2 u + (E^2 a + 2 E (b + c) + d) / 6
//! ```

use crate::dispersion::SymbolSpec;
use crate::energy::{min_order, total_modified_energy, EnergyReport};
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between diagnostic checkpoints.
    pub checkpoint_every: usize,
    pub dealias: bool,
    /// Breakdown once `sup |u_x|` exceeds this multiple of its initial value.
    pub breakdown_gradient_factor: f64,
    /// Breakdown once the spectral tail holds more than this energy fraction.
    pub tail_fraction_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 1.0,
            checkpoint_every: 100,
            dealias: true,
            breakdown_gradient_factor: 10.0,
            tail_fraction_limit: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be at least 1".into());
        }
        if !(self.breakdown_gradient_factor > 1.0) {
            return bad(format!("breakdown_gradient_factor must exceed 1, got {}", self.breakdown_gradient_factor));
        }
        if !(self.tail_fraction_limit > 0.0 && self.tail_fraction_limit <= 1.0) {
            return bad(format!("tail_fraction_limit must lie in (0, 1], got {}", self.tail_fraction_limit));
        }
        Ok(())
    }
}

/// Errors unless `dt <= 0.5 / (max |u| xi_max)`.
pub fn check_advective_limit(u: &Field, dt: f64) -> Result<()> {
    let speed = u.sup_norm() * u.grid().max_wavenumber();
    if speed > 0.0 && dt > 0.5 / speed {
        return Err(Error::InvalidConfig(format!(
            "dt = {dt} exceeds the advective limit {:.6e}",
            0.5 / speed
        )));
    }
    Ok(())
}

/// One IFRK4 step of fixed size on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    dt: f64,
    dealias: bool,
    nonlinear: bool,
}

impl Stepper {
    pub fn new(sym: &SymbolSpec, grid: Grid, dt: f64, dealias: bool) -> Self {
        let half: Vec<Complex64> = (0..grid.n_points())
            .map(|i| {
                let k = grid.mode(i);
                if k == 0 {
                    return Complex64::new(1.0, 0.0);
                }
                let xi = grid.wavenumber(k);
                Complex64::from_polar(1.0, 0.5 * sym.p(xi) * xi * dt)
            })
            .collect();
        let full = half.iter().map(|e| e * e).collect();
        Stepper { grid, half, full, dt, dealias, nonlinear: true }
    }

    /// Test hook: drops the nonlinear term, leaving the exact linear flow.
    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rhs(&self, v: &[Complex64]) -> Vec<Complex64> {
        let f = Field::from_raw(self.grid, v.to_vec()).convective_with(self.dealias);
        f.coeffs().iter().map(|c| -c * self.dt).collect()
    }

    pub fn step(&self, u: &Field) -> Result<Field> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let u = u.coeffs();
        let (e, e2) = (&self.half, &self.full);
        let n = u.len();
        let out: Vec<Complex64> = if self.nonlinear {
            let a = self.rhs(u);
            let v: Vec<_> = (0..n).map(|i| e[i] * (u[i] + 0.5 * a[i])).collect();
            let b = self.rhs(&v);
            let v: Vec<_> = (0..n).map(|i| e[i] * u[i] + 0.5 * b[i]).collect();
            let c = self.rhs(&v);
            let v: Vec<_> = (0..n).map(|i| e2[i] * u[i] + e[i] * c[i]).collect();
            let d = self.rhs(&v);
            (0..n)
                .map(|i| e2[i] * u[i] + (e2[i] * a[i] + 2.0 * e[i] * (b[i] + c[i]) + d[i]) / 6.0)
                .collect()
        } else {
            (0..n).map(|i| e2[i] * u[i]).collect()
        };
        let mut out = out;
        // the rotation keeps c_0 = 0; the Nyquist factor need not be real
        out[0] = Complex64::new(0.0, 0.0);
        out[n / 2].im = 0.0;
        let f = Field::from_raw(self.grid, out);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFinite("state after time step".into()))
        }
    }
}

/// One step of size `dt` with dealiasing, after checking the advective limit.
pub fn step(sym: &SymbolSpec, u: &Field, dt: f64) -> Result<Field> {
    check_advective_limit(u, dt)?;
    Stepper::new(sym, u.grid(), dt, true).step(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakdownReason {
    Gradient,
    Tail,
    NonFinite,
}

impl BreakdownReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            BreakdownReason::Gradient => "gradient",
            BreakdownReason::Tail => "tail",
            BreakdownReason::NonFinite => "nonfinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakdown {
    pub time: f64,
    pub reason: BreakdownReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub time: f64,
    pub energy: EnergyReport,
    pub mean_removed: f64,
    pub l2: f64,
    pub sup_grad: f64,
    pub tail_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub breakdown: Option<Breakdown>,
    /// Last finite state.
    pub final_state: Field,
    pub steps: usize,
}

/// Driver for [`evolve`] with optional test hooks.
#[derive(Debug, Clone)]
pub struct Evolver {
    sym: SymbolSpec,
    cfg: SolverConfig,
    n_max: u32,
    linear_only: bool,
}

impl Evolver {
    pub fn new(sym: &SymbolSpec, cfg: &SolverConfig, n_max: u32) -> Result<Self> {
        cfg.validate()?;
        let lo = min_order(sym);
        if n_max < lo {
            return Err(Error::InvalidConfig(format!("n_max must be at least {lo} for {}, got {n_max}", sym.name)));
        }
        Ok(Evolver { sym: sym.clone(), cfg: cfg.clone(), n_max, linear_only: false })
    }

    pub fn linear_only(mut self) -> Self {
        self.linear_only = true;
        self
    }

    fn stepper(&self, grid: Grid, dt: f64) -> Stepper {
        let s = Stepper::new(&self.sym, grid, dt, self.cfg.dealias);
        if self.linear_only {
            s.linear_only()
        } else {
            s
        }
    }

    fn checkpoint(&self, time: f64, u: &Field, mean: f64) -> Result<Checkpoint> {
        Ok(Checkpoint {
            time,
            energy: total_modified_energy(&self.sym, u, self.n_max)?,
            mean_removed: mean,
            l2: u.l2_norm(),
            sup_grad: u.derivative(1).sup_norm(),
            tail_fraction: u.tail_fraction(self.cfg.dealias),
        })
    }

    /// Integrates from `u0` (dealiased first when the config asks for it) to
    /// `t_end`, stopping early at breakdown. The last step is shortened so
    /// the run ends exactly at `t_end`.
    pub fn run(&self, u0: &Field) -> Result<Trajectory> {
        let cfg = &self.cfg;
        check_advective_limit(u0, cfg.dt)?;
        let mean = u0.removed_mean();
        let grid = u0.grid();
        let mut u = if cfg.dealias { u0.dealias() } else { u0.clone() }.with_removed_mean(0.0);
        let grad0 = u.derivative(1).sup_norm();
        let mut checkpoints = vec![self.checkpoint(0.0, &u, mean)?];
        let n_steps = if cfg.t_end == 0.0 { 0 } else { (cfg.t_end / cfg.dt - 1e-9).ceil().max(1.0) as usize };
        let main = self.stepper(grid, cfg.dt);
        let last_dt = cfg.t_end - (n_steps.saturating_sub(1)) as f64 * cfg.dt;
        let last = if (last_dt - cfg.dt).abs() > 1e-12 * cfg.dt { Some(self.stepper(grid, last_dt)) } else { None };
        let mut breakdown = None;
        let mut steps = 0;
        for s in 1..=n_steps {
            let is_last = s == n_steps;
            let stepper = match (&last, is_last) {
                (Some(l), true) => l,
                _ => &main,
            };
            let t = if is_last { cfg.t_end } else { s as f64 * cfg.dt };
            let next = match stepper.step(&u) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    breakdown = Some(Breakdown { time: t, reason: BreakdownReason::NonFinite });
                    break;
                }
                Err(e) => return Err(e),
            };
            u = next;
            steps = s;
            let reason = if grad0 > 0.0 && u.derivative(1).sup_norm() > cfg.breakdown_gradient_factor * grad0 {
                Some(BreakdownReason::Gradient)
            } else if u.tail_fraction(cfg.dealias) > cfg.tail_fraction_limit {
                Some(BreakdownReason::Tail)
            } else {
                None
            };
            if let Some(reason) = reason {
                log::debug!("breakdown ({}) at t = {t}", reason.as_str());
                breakdown = Some(Breakdown { time: t, reason });
                checkpoints.push(self.checkpoint(t, &u, mean)?);
                break;
            }
            if s % cfg.checkpoint_every == 0 || is_last {
                checkpoints.push(self.checkpoint(t, &u, mean)?);
            }
        }
        Ok(Trajectory { checkpoints, breakdown, final_state: u.with_removed_mean(mean), steps })
    }
}

pub fn evolve(sym: &SymbolSpec, u0: &Field, cfg: &SolverConfig, n_max: u32) -> Result<Trajectory> {
    Evolver::new(sym, cfg, n_max)?.run(u0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::make_builtin;

    fn cos_field(n: usize, eps: f64) -> Field {
        let grid = Grid::new(n, 1.0).unwrap();
        Field::from_modes(grid, &[(1, Complex64::new(0.5 * eps, 0.0))]).unwrap()
    }

    #[test]
    fn linear_flow_is_exact() {
        let s = make_builtin("fkdv", &[1.0]).unwrap();
        let u0 = cos_field(32, 1.0);
        let st = Stepper::new(&s, u0.grid(), 0.01, true).linear_only();
        let mut u = u0.clone();
        for _ in 0..1000 {
            u = st.step(&u).unwrap();
        }
        let t: f64 = 10.0;
        let err = u
            .grid()
            .points()
            .iter()
            .zip(u.sample())
            .map(|(x, v)| (v - (x + t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err:e}");
    }

    #[test]
    fn zero_stays_zero() {
        let s = make_builtin("whitham", &[]).unwrap();
        let z = Field::zeros(Grid::new(32, 1.0).unwrap());
        assert_eq!(step(&s, &z, 0.1).unwrap(), z);
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SolverConfig { dt: 0.0, ..ok.clone() },
            SolverConfig { t_end: -1.0, ..ok.clone() },
            SolverConfig { checkpoint_every: 0, ..ok.clone() },
            SolverConfig { tail_fraction_limit: 0.0, ..ok.clone() },
            SolverConfig { breakdown_gradient_factor: 0.5, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn advective_guard() {
        let s = make_builtin("whitham", &[]).unwrap();
        // max |u| = 1, xi_max = 64: limit 1/128
        let u = cos_field(128, 1.0);
        assert!(step(&s, &u, 0.01).is_err());
        assert!(step(&s, &u, 0.007).is_ok());
    }

    #[test]
    fn zero_duration_run() {
        let s = make_builtin("whitham", &[]).unwrap();
        let cfg = SolverConfig { t_end: 0.0, ..Default::default() };
        let tr = evolve(&s, &cos_field(32, 0.1), &cfg, 3).unwrap();
        assert_eq!(tr.checkpoints.len(), 1);
        assert_eq!(tr.checkpoints[0].time, 0.0);
        assert!(tr.breakdown.is_none());
        assert_eq!(tr.steps, 0);
    }

    #[test]
    fn checkpoints_and_final_time() {
        let s = make_builtin("whitham", &[]).unwrap();
        let cfg = SolverConfig { dt: 0.03, t_end: 0.1, checkpoint_every: 2, ..Default::default() };
        let tr = evolve(&s, &cos_field(32, 0.1), &cfg, 3).unwrap();
        let times: Vec<f64> = tr.checkpoints.iter().map(|c| c.time).collect();
        assert_eq!(tr.steps, 4);
        assert_eq!(times.len(), 3);
        assert!((times[1] - 0.06).abs() < 1e-15);
        assert_eq!(times[2], 0.1);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn mean_is_carried_not_evolved() {
        let s = make_builtin("whitham", &[]).unwrap();
        let grid = Grid::new(32, 1.0).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| 2.0 + 0.1 * x.cos()).collect();
        let u0 = Field::synthesize(grid, &v).unwrap();
        let cfg = SolverConfig { dt: 0.01, t_end: 0.1, ..Default::default() };
        let tr = evolve(&s, &u0, &cfg, 3).unwrap();
        assert_eq!(tr.final_state.removed_mean(), u0.removed_mean());
        assert_eq!(tr.final_state.coeff(0), Complex64::new(0.0, 0.0));
        assert!(tr.checkpoints.iter().all(|c| c.mean_removed == u0.removed_mean()));
    }
}
