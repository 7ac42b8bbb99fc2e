//! Sampled checks of symbol structure, algebraic identities of the
//! resonance function, and empirical constants for its two-sided bounds.

use super::{on_zero_set, SymbolSpec};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Relative residual allowed for identities that hold exactly in real arithmetic.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Pseudo-random wavenumber with log-uniform magnitude in [1e-2, 1e2] and a random sign.
fn random_wavenumber(rng: &mut ChaCha8Rng) -> f64 {
    let mag = 10f64.powf(rng.gen_range(-2.0..2.0));
    if rng.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub samples: usize,
    /// Max residual of `phi(a,b) = phi(b,a)`.
    pub swap: f64,
    /// Max residual of `phi(-a,-b) = -phi(a,b)`.
    pub reflect: f64,
    /// Max residual of `phi(a,b) = phi(-(a+b), b)`.
    pub shear: f64,
    pub max_residual: f64,
    pub passed: bool,
}

/// Checks the three symmetries of `phi` on `samples` random pairs.
///
/// Residuals are relative to `|psi(a)| + |psi(b)| + |psi(a+b)|`, the size
/// of the terms that cancel inside `phi`.
pub fn verify_phi_symmetries(sym: &SymbolSpec, samples: usize, seed: u64) -> Result<SymmetryReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut swap, mut reflect, mut shear) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = random_wavenumber(&mut rng);
        let b = random_wavenumber(&mut rng);
        let scale = sym.psi(a).abs() + sym.psi(b).abs() + sym.psi(a + b).abs();
        if scale == 0.0 {
            continue;
        }
        let f = sym.phi(a, b);
        let rel = |x: f64| (x / scale).abs();
        swap = swap.max(rel(f - sym.phi(b, a)));
        reflect = reflect.max(rel(f + sym.phi(-a, -b)));
        shear = shear.max(rel(f - sym.phi(-(a + b), b)));
    }
    let max_residual = swap.max(reflect).max(shear);
    Ok(SymmetryReport {
        samples,
        swap,
        reflect,
        shear,
        max_residual,
        passed: max_residual <= IDENTITY_TOLERANCE && max_residual.is_finite(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    /// Max relative residual of `m(xi-eta, eta) eta + m(eta-xi, xi) xi = 0`.
    pub m_exchange: f64,
    /// Max relative residual of `n(xi-eta, eta) = conj(n(eta-xi, xi))`.
    pub n_conjugation: f64,
    /// Max relative residual of `m(a,b) phi(a,b) = (a+b)/2`.
    pub m_phi: f64,
    pub passed: bool,
}

/// Checks the pointwise identities of the multipliers on random frequency pairs.
pub fn verify_multiplier_identities(sym: &SymbolSpec, samples: usize, seed: u64) -> Result<IdentityReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut exch, mut conj, mut mphi) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let xi = random_wavenumber(&mut rng);
        let eta = random_wavenumber(&mut rng);
        if on_zero_set(xi - eta, eta) {
            continue;
        }
        let lhs = sym.m(xi - eta, eta) * eta;
        let rhs = sym.m(eta - xi, xi) * xi;
        exch = exch.max(((lhs + rhs) / (lhs.abs() + rhs.abs())).abs());

        let n1 = sym.n(xi - eta, eta);
        let n2 = sym.n(eta - xi, xi).conj();
        conj = conj.max((n1 - n2).norm() / n1.norm());

        let (a, b) = (xi - eta, eta);
        let half = (a + b) / 2.0;
        mphi = mphi.max(((sym.m(a, b) * sym.phi(a, b) - half) / half).abs());
    }
    let worst = exch.max(conj).max(mphi);
    Ok(IdentityReport {
        samples,
        m_exchange: exch,
        n_conjugation: conj,
        m_phi: mphi,
        passed: worst <= IDENTITY_TOLERANCE && worst.is_finite(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub symbol: String,
    /// Max `|p(xi) - p(-xi)| / |p(xi)|` over random samples.
    pub evenness_residual: f64,
    /// Strictly monotone on a log grid of [0, 1e4].
    pub monotone: bool,
    /// `[min, max]` of `|p^(i)(xi)| / |xi|^(alpha - i)` on [10, 1e4], for i = 0, 1, 2.
    pub far_field: [(f64, f64); 3],
    /// `[min, max]` of `(p(xi) - p(0)) / (xi^(2 j*) p_tilde(0))` on [1e-4, 1e-1].
    pub local_ratio: Option<(f64, f64)>,
    pub passed: bool,
}

/// Spread allowed between the far-field bounds `c` and `C`.
const FAR_FIELD_SPREAD: f64 = 1e3;

/// Sampled checks that the symbol is even, monotone, has the stated
/// far-field order and the stated local expansion.
pub fn check_assumptions(sym: &SymbolSpec, seed: u64) -> AssumptionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evenness_residual = 0.0f64;
    for _ in 0..1000 {
        let xi = 10f64.powf(rng.gen_range(-3.0..4.0));
        let (pp, pm) = (sym.p(xi), sym.p(-xi));
        evenness_residual = evenness_residual.max((pp - pm).abs() / pp.abs().max(f64::MIN_POSITIVE));
    }

    // deviation keeps relative precision where p itself rounds to p(0)
    let mut values = vec![0.0];
    values.extend(log_space(1e-4, 1e4, 80).into_iter().map(|x| sym.deviation(x)));
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let monotone = increasing || decreasing;

    let far = log_space(10.0, 1e4, 60);
    let mut far_field = [(f64::INFINITY, 0.0f64); 3];
    for &xi in &far {
        let vals = [sym.p(xi), sym.dp(xi), sym.d2p(xi)];
        for (i, v) in vals.iter().enumerate() {
            let r = v.abs() / xi.powf(sym.alpha - i as f64);
            far_field[i].0 = far_field[i].0.min(r);
            far_field[i].1 = far_field[i].1.max(r);
        }
    }
    let far_ok = far_field
        .iter()
        .all(|&(lo, hi)| lo > 0.0 && hi.is_finite() && hi / lo <= FAR_FIELD_SPREAD);

    let local_ratio = if sym.admissible {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for xi in log_space(1e-4, 1e-1, 30) {
            let r = sym.deviation(xi) / xi.powi(2 * sym.j_star as i32) / sym.p_tilde_at_zero;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Some((lo, hi))
    } else {
        None
    };
    let local_ok = match local_ratio {
        Some((lo, hi)) => lo >= 0.5 && hi <= 1.5,
        None => true,
    };

    AssumptionReport {
        symbol: sym.name.clone(),
        evenness_residual,
        monotone,
        far_field,
        local_ratio,
        passed: evenness_residual <= IDENTITY_TOLERANCE && monotone && far_ok && local_ok,
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// A set of `(a, b)` wavenumber pairs for bound scans.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleGrid {
    /// `|a|, |b|` on a shared logarithmic grid over `[lo, hi]` with
    /// `per_decade` intervals per decade, all four sign combinations. The
    /// antidiagonal `a = -b` is left out.
    Log { lo: f64, hi: f64, per_decade: usize },
    /// Polar samples `r (cos t, sin t)`: radii log-spaced over `[r_lo, r_hi]`
    /// with `per_decade` intervals per decade; angles graded geometrically
    /// toward the six zero-set directions (the axes and the antidiagonal),
    /// `n_angles` offsets on each side of each direction, from `1e-6` of the
    /// half-gap up to the half-gap. Resolves the limits of the bound ratios
    /// along the zero set.
    Polar { r_lo: f64, r_hi: f64, per_decade: usize, n_angles: usize },
    /// Explicit pairs; none may lie on the zero set.
    Points(Vec<(f64, f64)>),
}

/// Smallest angular offset from a zero-set direction, relative to the half-gap.
const POLAR_MIN_OFFSET: f64 = 1e-6;

impl SampleGrid {
    pub fn log(lo: f64, hi: f64, per_decade: usize) -> Self {
        SampleGrid::Log { lo, hi, per_decade }
    }

    pub fn polar(r_lo: f64, r_hi: f64, per_decade: usize, n_angles: usize) -> Self {
        SampleGrid::Polar { r_lo, r_hi, per_decade, n_angles }
    }

    /// Same extent at twice the density.
    pub fn refined(&self) -> Self {
        match self {
            SampleGrid::Log { lo, hi, per_decade } => SampleGrid::Log { lo: *lo, hi: *hi, per_decade: 2 * per_decade },
            SampleGrid::Polar { r_lo, r_hi, per_decade, n_angles } => SampleGrid::Polar {
                r_lo: *r_lo,
                r_hi: *r_hi,
                per_decade: 2 * per_decade,
                n_angles: 2 * n_angles,
            },
            SampleGrid::Points(p) => {
                let mut out = p.clone();
                for w in p.windows(2) {
                    out.push(((w[0].0 + w[1].0) / 2.0, (w[0].1 + w[1].1) / 2.0));
                }
                SampleGrid::Points(out)
            }
        }
    }

    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            SampleGrid::Log { lo, hi, per_decade } => {
                if !(*lo > 0.0 && hi > lo && *per_decade > 0) {
                    return Err(Error::InvalidParameter(format!(
                        "log grid needs 0 < lo < hi and per_decade > 0, got [{lo}, {hi}] x {per_decade}"
                    )));
                }
                let decades = (hi / lo).log10();
                let n = (decades * *per_decade as f64).round().max(1.0) as usize;
                let mags = log_space(*lo, *hi, n + 1);
                let mut pts = Vec::with_capacity(4 * mags.len() * mags.len());
                for (i, &ma) in mags.iter().enumerate() {
                    for (j, &mb) in mags.iter().enumerate() {
                        for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                            if i == j && sa != sb {
                                continue;
                            }
                            pts.push((sa * ma, sb * mb));
                        }
                    }
                }
                Ok(pts)
            }
            SampleGrid::Polar { r_lo, r_hi, per_decade, n_angles } => {
                if !(*r_lo > 0.0 && r_hi > r_lo && *per_decade > 0 && *n_angles > 1) {
                    return Err(Error::InvalidParameter(format!(
                        "polar grid needs 0 < r_lo < r_hi, per_decade > 0 and n_angles > 1, got [{r_lo}, {r_hi}] x {per_decade} x {n_angles}"
                    )));
                }
                let n = ((r_hi / r_lo).log10() * *per_decade as f64).round().max(1.0) as usize;
                let radii = log_space(*r_lo, *r_hi, n + 1);
                let q = std::f64::consts::FRAC_PI_4;
                let dirs = [0.0, 2.0 * q, 3.0 * q, 4.0 * q, 6.0 * q, 7.0 * q, 8.0 * q];
                let offsets = log_space(POLAR_MIN_OFFSET, 1.0, *n_angles);
                let mut angles = Vec::new();
                for w in dirs.windows(2) {
                    let half = 0.5 * (w[1] - w[0]);
                    for &o in &offsets {
                        angles.push(w[0] + half * o);
                    }
                    // the midpoint is already present once
                    for &o in offsets.iter().rev().skip(1) {
                        angles.push(w[1] - half * o);
                    }
                }
                let mut pts = Vec::with_capacity(radii.len() * angles.len());
                for &r in &radii {
                    for &t in &angles {
                        let (sn, cs) = t.sin_cos();
                        let (a, b) = (r * cs, r * sn);
                        if !on_zero_set(a, b) {
                            pts.push((a, b));
                        }
                    }
                }
                Ok(pts)
            }
            SampleGrid::Points(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidParameter("empty sample set".into()));
                }
                if let Some(&(a, b)) = p.iter().find(|&&(a, b)| on_zero_set(a, b)) {
                    return Err(Error::ZeroSet(a, b));
                }
                Ok(p.clone())
            }
        }
    }
}

/// Empirical constants `c_min <= ratio <= c_max` for a two-sided estimate.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BoundReport {
    pub model_name: String,
    pub c_min: f64,
    pub c_max: f64,
    pub sample_count: usize,
    /// Location of `c_max`.
    pub worst_point: Vec<f64>,
    /// Location of `c_min`.
    pub best_point: Vec<f64>,
}

impl BoundReport {
    /// Reduces `(point, ratio)` pairs in order; ties keep the earliest sample.
    pub(crate) fn from_ratios(model_name: &str, samples: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut c_min = f64::INFINITY;
        let mut c_max = f64::NEG_INFINITY;
        let (mut imin, mut imax) = (0, 0);
        for (i, (pt, r)) in samples.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("{model_name} ratio at {pt:?}")));
            }
            if *r < c_min {
                c_min = *r;
                imin = i;
            }
            if *r > c_max {
                c_max = *r;
                imax = i;
            }
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter(format!("{model_name}: no usable samples")));
        }
        Ok(BoundReport {
            model_name: model_name.to_string(),
            c_min,
            c_max,
            sample_count: samples.len(),
            worst_point: samples[imax].0.clone(),
            best_point: samples[imin].0.clone(),
        })
    }

    /// `0 < c_min <= c_max < inf`.
    pub fn is_two_sided(&self) -> bool {
        self.c_min > 0.0 && self.c_min <= self.c_max && self.c_max.is_finite()
    }

    /// Relative change of `c_max` (and of `c_min` when `check_min`) between
    /// this report and one on a finer sample set.
    pub fn drift(&self, finer: &BoundReport, check_min: bool) -> f64 {
        let dmax = (finer.c_max / self.c_max - 1.0).abs();
        if check_min {
            dmax.max((finer.c_min / self.c_min - 1.0).abs())
        } else {
            dmax
        }
    }
}

/// `|phi(a,b)|` against `|ab(a+b)|/r^2 * min(r^(2 j*), 1 + r^alpha)`.
pub fn verify_phi_bound(sym: &SymbolSpec, grid: &SampleGrid) -> Result<BoundReport> {
    sym.require_admissible()?;
    let pts = grid.points()?;
    let two_j = 2 * sym.j_star as i32;
    let ratios: Vec<(Vec<f64>, f64)> = pts
        .par_iter()
        .map(|&(a, b)| {
            let r2 = a * a + b * b;
            let r = r2.sqrt();
            let model = (a * b * (a + b)).abs() / r2 * r.powi(two_j).min(1.0 + r.powf(sym.alpha));
            (vec![a, b], sym.phi(a, b).abs() / model)
        })
        .collect();
    BoundReport::from_ratios("phi", &ratios)
}

/// `|m(xi-eta, eta)|` against `m1 + m2` with
/// `m1 = 1/|eta (xi-eta) xi^(2j*-2)|` and `m2 = 1 + |xi|(1 + 1/|eta| + 1/|xi-eta|)`.
///
/// Grid pairs are read as `(a, b) = (xi - eta, eta)`.
pub fn verify_m_bound(sym: &SymbolSpec, grid: &SampleGrid) -> Result<BoundReport> {
    sym.require_admissible()?;
    let pts = grid.points()?;
    let ratios: Vec<(Vec<f64>, f64)> = pts
        .par_iter()
        .map(|&(a, b)| {
            let (m1, m2) = m_bound_terms(sym, a, b);
            (vec![a, b], sym.m(a, b).abs() / (m1 + m2))
        })
        .collect();
    BoundReport::from_ratios("m", &ratios)
}

/// The two model terms `(m1, m2)` at `(xi - eta, eta) = (a, b)`.
pub(crate) fn m_bound_terms(sym: &SymbolSpec, a: f64, b: f64) -> (f64, f64) {
    let xi = a + b;
    let m1 = 1.0 / (b * a * xi.powi(2 * sym.j_star as i32 - 2)).abs();
    let m2 = 1.0 + xi.abs() * (1.0 + 1.0 / b.abs() + 1.0 / a.abs());
    (m1, m2)
}
