//! Bilinear pseudoproducts of the normal form.
//!
//! ```text
//! B(f, g)_k = sum_j m(xi_{k-j}, xi_j) f_{k-j} g_j
//! Q(f, g)_k = sum_j n(xi_{k-j}, xi_j) f_{k-j} g_j
//! ```
//!
//! The sums run over every pair of resolved modes (no periodic wrap), and
//! the output is truncated to the dealiased band `|k| <= n/3`. For inputs
//! band-limited to `n/3` this makes every algebraic identity of the symbol
//! hold exactly mode by mode.
//!
//! Both products share `S_k = sum_j f_{k-j} g_j / (2 phi)`: `B_k = xi_k S_k`
//! and `Q_k = -i S_k`, so `d/dx Q = B`. Terms `j` and `k - j` are added in
//! pairs, which makes `B(f, g) = B(g, f)` bit for bit, and negative modes
//! are filled by conjugation so outputs are exactly real.

use crate::dispersion::SymbolSpec;
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

static BLOCK_SIZE: AtomicUsize = AtomicUsize::new(0);

const BLOCK_CANDIDATES: [usize; 5] = [1, 4, 16, 64, 256];

/// Output modes handed to one rayon task at a time. Tuned on first use by
/// a short benchmark unless set explicitly. Results do not depend on it.
pub fn block_size() -> usize {
    match BLOCK_SIZE.load(Ordering::Relaxed) {
        0 => {
            let b = autotune_block_size();
            BLOCK_SIZE.store(b, Ordering::Relaxed);
            log::info!("pseudoproduct block size {b}");
            b
        }
        b => b,
    }
}

pub fn set_block_size(block: usize) {
    BLOCK_SIZE.store(block.max(1), Ordering::Relaxed);
}

fn autotune_block_size() -> usize {
    let Ok(grid) = Grid::new(512, 1.0) else { return 16 };
    let Ok(sym) = crate::dispersion::make_builtin("whitham", &[]) else { return 16 };
    let f = Field::random(grid, grid.dealias_cutoff(), 1.0, 0);
    let kernel = BilinearKernel::new(&sym, grid);
    let mut best = (f64::INFINITY, 16);
    for &b in &BLOCK_CANDIDATES {
        let t0 = Instant::now();
        for _ in 0..3 {
            let _ = kernel.sums(&f, &f, b);
        }
        let dt = t0.elapsed().as_secs_f64();
        if dt < best.0 {
            best = (dt, b);
        }
    }
    best.1
}

/// Neumaier compensated sum of complex terms.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: Complex64,
    carry: Complex64,
}

fn neumaier(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *carry += (*sum - t) + x;
    } else {
        *carry += (x - t) + *sum;
    }
    *sum = t;
}

impl Compensated {
    fn add(&mut self, x: Complex64) {
        neumaier(&mut self.sum.re, &mut self.carry.re, x.re);
        neumaier(&mut self.sum.im, &mut self.carry.im, x.im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Perturbation {
    a: i64,
    b: i64,
    delta: f64,
}

/// Pseudoproduct evaluator for one symbol on one grid, with `psi` cached
/// at every resolved mode.
#[derive(Debug, Clone)]
pub struct BilinearKernel {
    sym: SymbolSpec,
    grid: Grid,
    psi: Vec<f64>,
    perturbation: Option<Perturbation>,
}

impl BilinearKernel {
    pub fn new(sym: &SymbolSpec, grid: Grid) -> Self {
        let half = (grid.n_points() / 2) as i64;
        let psi = (-half..half).map(|k| sym.psi(grid.wavenumber(k))).collect();
        BilinearKernel { sym: sym.clone(), grid, psi, perturbation: None }
    }

    /// Test hook: adds `delta` to `m(xi_a, xi_b)` for the ordered pair
    /// `(a, b)` (and its mirror `(-a, -b)`) in [`BilinearKernel::b`].
    pub fn with_perturbation(mut self, a: i64, b: i64, delta: f64) -> Self {
        self.perturbation = Some(Perturbation { a, b, delta });
        self
    }

    pub fn symbol(&self) -> &SymbolSpec {
        &self.sym
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn psi_at(&self, k: i64) -> f64 {
        self.psi[(k + (self.grid.n_points() / 2) as i64) as usize]
    }

    /// `S_k` for `k = 1 ..= n/3`.
    fn sums(&self, f: &Field, g: &Field, block: usize) -> Result<Vec<Complex64>> {
        let half = (self.grid.n_points() / 2) as i64;
        (1..self.grid.dealias_cutoff() + 1)
            .into_par_iter()
            .with_min_len(block)
            .map(|k| {
                let k = k as i64;
                let psi_k = self.psi_at(k);
                let mut acc = Compensated::default();
                let mut j = (-half).max(k - (half - 1));
                while 2 * j <= k {
                    let a = k - j;
                    if j != 0 && a != 0 {
                        let phi = self.psi_at(a) + self.psi_at(j) - psi_k;
                        if phi == 0.0 {
                            return Err(Error::ZeroSet(self.grid.wavenumber(a), self.grid.wavenumber(j)));
                        }
                        let term = if a == j {
                            f.coeff(a) * g.coeff(j)
                        } else {
                            f.coeff(a) * g.coeff(j) + f.coeff(j) * g.coeff(a)
                        };
                        acc.add(term * (0.5 / phi));
                    }
                    j += 1;
                }
                Ok(acc.value())
            })
            .collect()
    }

    fn assemble(&self, positive: Vec<Complex64>) -> Field {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.grid.n_points()];
        for (i, c) in positive.into_iter().enumerate() {
            let k = i as i64 + 1;
            if let (Some(p), Some(q)) = (self.grid.slot(k), self.grid.slot(-k)) {
                coeffs[p] = c;
                coeffs[q] = c.conj();
            }
        }
        // finite by construction
        Field::from_coeffs(self.grid, coeffs).unwrap_or_else(|_| Field::zeros(self.grid))
    }

    fn check_inputs(&self, f: &Field, g: &Field) -> Result<()> {
        if f.grid() != self.grid || g.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `B(f, g)` truncated to `|k| <= n/3`.
    pub fn b(&self, f: &Field, g: &Field) -> Result<Field> {
        self.check_inputs(f, g)?;
        let mut s = self.sums(f, g, block_size())?;
        for (i, c) in s.iter_mut().enumerate() {
            *c *= self.grid.wavenumber(i as i64 + 1);
        }
        if let Some(Perturbation { a, b, delta }) = self.perturbation {
            let k = a + b;
            if (1..=s.len() as i64).contains(&k) {
                s[(k - 1) as usize] += delta * f.coeff(a) * g.coeff(b);
            } else if (1..=s.len() as i64).contains(&-k) {
                s[(-k - 1) as usize] += delta * (f.coeff(a) * g.coeff(b)).conj();
            }
        }
        Ok(self.assemble(s))
    }

    /// `Q(f, g)` truncated to `|k| <= n/3`.
    pub fn q(&self, f: &Field, g: &Field) -> Result<Field> {
        self.check_inputs(f, g)?;
        let s = self.sums(f, g, block_size())?;
        Ok(self.assemble(s.into_iter().map(|c| Complex64::new(c.im, -c.re)).collect()))
    }

    /// Residual of the normal-form identity
    /// `-u u_x - L d/dx B(u,u) + B(L u_x, u) + B(u, L u_x) = 0`,
    /// as an `L^2` norm divided by `||u||_{H^1}^2`.
    pub fn identity_residual(&self, u: &Field) -> Result<f64> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        u.require_dealiased()?;
        let scale = u.sobolev_norm(1.0).powi(2);
        if scale == 0.0 {
            return Ok(0.0);
        }
        let lu = u.derivative(1).apply_symbol(&self.sym);
        let buu = self.b(u, u)?;
        let r = u
            .convective()
            .scaled(-1.0)
            .sub(&buu.derivative(1).apply_symbol(&self.sym))?
            .add(&self.b(&lu, u)?)?
            .add(&self.b(u, &lu)?)?;
        Ok(r.l2_norm() / scale)
    }

    /// Cancellation of the two highest-order quartic terms at derivative
    /// order `k`:
    /// `F = <Q(u, d^{k+1} u), -d^k (u u_x)>`, `G = <Q(u, d^k (u u_x)), d^{k+1} u>`.
    pub fn highest_order_cancellation(&self, u: &Field, k: u32) -> Result<Cancellation> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        u.require_dealiased()?;
        let v = u.derivative(k + 1);
        let w = u.convective().derivative(k);
        let f = self.q(u, &v)?.inner(&w.scaled(-1.0))?;
        let g = self.q(u, &w)?.inner(&v)?;
        let size = f.abs().max(g.abs());
        let relative = if size == 0.0 { 0.0 } else { (f + g).abs() / size };
        Ok(Cancellation { f, g, relative })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Cancellation {
    pub f: f64,
    pub g: f64,
    /// `|F + G| / max(|F|, |G|)`.
    pub relative: f64,
}

pub fn bilinear_b(sym: &SymbolSpec, f: &Field, g: &Field) -> Result<Field> {
    BilinearKernel::new(sym, f.grid()).b(f, g)
}

pub fn bilinear_q(sym: &SymbolSpec, f: &Field, g: &Field) -> Result<Field> {
    BilinearKernel::new(sym, f.grid()).q(f, g)
}

/// See [`BilinearKernel::identity_residual`].
pub fn check_bilinear_identity(sym: &SymbolSpec, u: &Field) -> Result<f64> {
    BilinearKernel::new(sym, u.grid()).identity_residual(u)
}
