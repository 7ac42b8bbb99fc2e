//! Periodic grid and real fields stored as Fourier-series coefficients.
//!
//! The domain is `[0, 2 pi L)` with `n` equispaced points. A field is
//! `u(x) = sum_k c_k exp(i k x / L)` over `k in [-n/2, n/2)`, so mode `k`
//! has physical wavenumber `xi_k = k / L`. Coefficients are stored in FFT
//! order: slot `i` holds `k = i` for `i < n/2` and `k = i - n` otherwise.
//!
//! Every field has zero mean (`c_0 = 0`); `synthesize` records the mean it
//! removes.

use crate::dispersion::SymbolSpec;
use crate::error::{Error, Result};
use crate::expr::Expr;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    scale: f64,
}

impl Grid {
    /// `n` must be a power of two no smaller than 16; `scale` is `L > 0`.
    pub fn new(n: usize, scale: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n_points must be a power of two >= 16, got {n}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidGrid(format!("scale must be positive, got {scale}")));
        }
        Ok(Grid { n, scale })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.scale
    }

    /// Integer mode number stored in `slot`.
    pub fn mode(&self, slot: usize) -> i64 {
        if slot < self.n / 2 {
            slot as i64
        } else {
            slot as i64 - self.n as i64
        }
    }

    /// Storage slot of mode `k`, if resolved.
    pub fn slot(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if (-half..half).contains(&k) {
            Some(k.rem_euclid(self.n as i64) as usize)
        } else {
            None
        }
    }

    pub fn wavenumber(&self, k: i64) -> f64 {
        k as f64 / self.scale
    }

    /// Largest `|k|` kept by the two-thirds rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Largest resolved `|xi|`.
    pub fn max_wavenumber(&self) -> f64 {
        (self.n / 2) as f64 / self.scale
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.length() / self.n as f64;
        (0..self.n).map(|j| j as f64 * h).collect()
    }

    /// Wavenumbers in ascending mode order `k = -n/2 .. n/2 - 1`.
    pub fn wavenumbers_sorted(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|k| self.wavenumber(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    coeffs: Vec<Complex64>,
    removed_mean: f64,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n], removed_mean: 0.0 }
    }

    /// Builds a field from FFT-ordered coefficients. The mean slot is cleared
    /// and the Nyquist coefficient made real.
    pub fn from_coeffs(grid: Grid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n {
            return Err(Error::LengthMismatch { expected: grid.n, got: coeffs.len() });
        }
        if let Some(c) = coeffs.iter().find(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {c}")));
        }
        coeffs[0] = Complex64::new(0.0, 0.0);
        coeffs[grid.n / 2].im = 0.0;
        Ok(Field { grid, coeffs, removed_mean: 0.0 })
    }

    /// Field with `c_k = value` and `c_{-k} = conj(value)` for each `(k, value)`.
    pub fn from_modes(grid: Grid, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut f = Field::zeros(grid);
        for &(k, c) in modes {
            if k == 0 {
                continue;
            }
            let nyquist = (grid.n / 2) as i64;
            if k.abs() == nyquist {
                // its own partner, so it must be real
                f.coeffs[grid.n / 2] = Complex64::new(c.re, 0.0);
                continue;
            }
            let (Some(i), Some(j)) = (grid.slot(k), grid.slot(-k)) else {
                return Err(Error::InvalidParameter(format!("mode {k} is not resolved on n = {}", grid.n)));
            };
            f.coeffs[i] = c;
            f.coeffs[j] = c.conj();
        }
        f.coeffs[grid.n / 2].im = 0.0;
        Ok(f)
    }

    /// Random real field on modes `1 <= |k| <= band`: `c_k = (x + i y)
    /// (1 + k^2)^(-decay/2)` with `x, y` uniform on `[-1, 1)`.
    pub fn random(grid: Grid, band: usize, decay: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let band = band.min(grid.n / 2 - 1) as i64;
        let modes: Vec<(i64, Complex64)> = (1..=band)
            .map(|k| {
                let w = (1.0 + (k * k) as f64).powf(-0.5 * decay);
                (k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w)
            })
            .collect();
        Field::from_modes(grid, &modes).unwrap_or_else(|_| Field::zeros(grid))
    }

    /// Forward transform of point values on `grid.points()`.
    pub fn synthesize(grid: Grid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::LengthMismatch { expected: grid.n, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("point value {v}")));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(&mut buf, false);
        let inv_n = 1.0 / grid.n as f64;
        for c in buf.iter_mut() {
            *c *= inv_n;
        }
        // the inputs are real; drop the rounding-level imaginary parts where reality forces them
        let half = grid.n / 2;
        for i in 1..half {
            let avg = 0.5 * (buf[i] + buf[grid.n - i].conj());
            buf[i] = avg;
            buf[grid.n - i] = avg.conj();
        }
        buf[half].im = 0.0;
        let removed_mean = buf[0].re;
        buf[0] = Complex64::new(0.0, 0.0);
        Ok(Field { grid, coeffs: buf, removed_mean })
    }

    /// Samples `expr` (in the variable `x`) on the grid and synthesizes.
    pub fn from_expression(grid: Grid, expr: &Expr) -> Result<Self> {
        let values: Vec<f64> = grid.points().iter().map(|&x| expr.eval(x)).collect();
        Field::synthesize(grid, &values)
    }

    /// Unchecked constructor for coefficients that already satisfy the
    /// field invariants.
    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.n);
        Field { grid, coeffs, removed_mean: 0.0 }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mean subtracted by [`Field::synthesize`]; zero for derived fields.
    pub fn removed_mean(&self) -> f64 {
        self.removed_mean
    }

    pub fn with_removed_mean(mut self, mean: f64) -> Self {
        self.removed_mean = mean;
        self
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid.slot(k).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Point values of the zero-mean part on `grid.points()`.
    pub fn sample(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft_in_place(&mut buf, true);
        buf.iter().map(|c| c.re).collect()
    }

    fn map_modes(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Field {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == 0 { c } else { f(self.grid.mode(i), c) })
            .collect();
        Field { grid: self.grid, coeffs, removed_mean: 0.0 }
    }

    /// `d^order/dx^order`: multiplies mode `k` by `(i xi_k)^order`. Odd
    /// orders clear the Nyquist mode.
    pub fn derivative(&self, order: u32) -> Field {
        if order == 0 {
            return Field { removed_mean: 0.0, ..self.clone() };
        }
        let nyq = -((self.grid.n / 2) as i64);
        self.map_modes(|k, c| {
            if k == nyq && order % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let ixi = Complex64::new(0.0, self.grid.wavenumber(k));
            c * ixi.powu(order)
        })
    }

    /// Applies the multiplier `p(xi_k)` of the dispersion operator.
    pub fn apply_symbol(&self, sym: &SymbolSpec) -> Field {
        self.map_modes(|k, c| c * sym.p(self.grid.wavenumber(k)))
    }

    /// `(2 pi L sum_k (1 + xi_k^2)^s |c_k|^2)^(1/2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let xi = self.grid.wavenumber(self.grid.mode(i));
                (1.0 + xi * xi).powf(s) * c.norm_sqr()
            })
            .sum();
        (self.grid.length() * sum).sqrt()
    }

    /// `||d^k u / dx^k||^2_{L^2}`.
    pub fn seminorm_sq(&self, k: u32) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let xi = self.grid.wavenumber(self.grid.mode(i));
                xi.abs().powi(2 * k as i32) * c.norm_sqr()
            })
            .sum();
        self.grid.length() * sum
    }

    /// Zeroes every mode with `|k| > n/3`.
    pub fn dealias(&self) -> Field {
        let cut = self.grid.dealias_cutoff() as i64;
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if self.grid.mode(i).abs() > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `int_0^{2 pi L} f g dx`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_grid(other)?;
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a * b.conj()).re).sum();
        Ok(self.grid.length() * s)
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            removed_mean: self.removed_mean * factor,
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.check_grid(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid, coeffs, removed_mean: 0.0 })
    }

    pub(crate) fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Dealiased `u du/dx`, computed as `(1/2) d(u^2)/dx` by the two-thirds
    /// rule. Exact on `|k| <= n/3` when `u` is band-limited to `n/3`.
    pub fn convective(&self) -> Field {
        self.convective_with(true)
    }

    /// `u du/dx` as `(1/2) d(u^2)/dx`, optionally without truncation (the
    /// Nyquist mode is cleared either way).
    pub fn convective_with(&self, dealias: bool) -> Field {
        let mut buf = self.coeffs.clone();
        fft_in_place(&mut buf, true);
        for c in buf.iter_mut() {
            *c = Complex64::new(c.re * c.re, 0.0);
        }
        fft_in_place(&mut buf, false);
        let inv_n = 1.0 / self.grid.n as f64;
        let cut = if dealias { self.grid.dealias_cutoff() as i64 } else { (self.grid.n / 2 - 1) as i64 };
        for (i, c) in buf.iter_mut().enumerate() {
            let k = self.grid.mode(i);
            *c = if k == 0 || k.abs() > cut {
                Complex64::new(0.0, 0.0)
            } else {
                *c * Complex64::new(0.0, 0.5 * self.grid.wavenumber(k) * inv_n)
            };
        }
        Field { grid: self.grid, coeffs: buf, removed_mean: 0.0 }
    }

    /// Mirror image `x -> -x`.
    pub fn reflect(&self) -> Field {
        let n = self.grid.n;
        let coeffs = (0..n).map(|i| self.coeffs[(n - i) % n]).collect();
        Field { grid: self.grid, coeffs, removed_mean: self.removed_mean }
    }

    /// Largest `|k|` whose coefficient exceeds `rel_tol * max |c|`.
    pub fn band_limit(&self, rel_tol: f64) -> usize {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > rel_tol * max)
            .map(|(i, _)| self.grid.mode(i).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Errors unless the field is band-limited to the dealiasing cutoff.
    pub fn require_dealiased(&self) -> Result<()> {
        let limit = self.grid.dealias_cutoff();
        let found = self.band_limit(BAND_TOLERANCE);
        if found > limit {
            Err(Error::BandLimit { limit, found })
        } else {
            Ok(())
        }
    }

    /// Max `|c_{-k} - conj(c_k)|` over all modes.
    pub fn reality_defect(&self) -> f64 {
        let n = self.grid.n;
        (1..n)
            .map(|i| (self.coeffs[n - i] - self.coeffs[i].conj()).norm())
            .fold(self.coeffs[n / 2].im.abs(), f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Max of `|u|` over grid points.
    pub fn sup_norm(&self) -> f64 {
        self.sample().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fraction of `sum |c_k|^2` held by modes with `|k| > (2/3) k_max`,
    /// where `k_max` is `n/3` (the retained band) or `n/2` without dealiasing.
    pub fn tail_fraction(&self, dealiased: bool) -> f64 {
        let k_max = if dealiased { self.grid.dealias_cutoff() } else { self.grid.n / 2 } as f64;
        let threshold = 2.0 * k_max / 3.0;
        let (mut tail, mut total) = (0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.mode(i).abs() as f64 > threshold {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// `(x, u(x))` pairs including the removed mean.
    pub fn snapshot(&self) -> Vec<(f64, f64)> {
        self.grid
            .points()
            .into_iter()
            .zip(self.sample())
            .map(|(x, u)| (x, u + self.removed_mean))
            .collect()
    }

    /// `(k, re c_k, im c_k)` in ascending `k`.
    pub fn spectrum(&self) -> Vec<(i64, f64, f64)> {
        let half = (self.grid.n / 2) as i64;
        (-half..half)
            .map(|k| {
                let c = self.coeff(k);
                (k, c.re, c.im)
            })
            .collect()
    }
}

/// Relative coefficient size below which a mode counts as empty.
pub const BAND_TOLERANCE: f64 = 1e-13;
