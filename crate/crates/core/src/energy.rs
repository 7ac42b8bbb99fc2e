//! Modified energies built from the normal-form pseudoproduct.
//!
//! ```text
//! E^(k)(u) = ||d^k u||^2 + 2 <d^k u, d^k B(u, u)>
//! ```
//!
//! The cubic correction removes the cubic part of `dE^(k)/dt`, leaving a
//! quartic expression ([`quartic_rhs`]).

use crate::dispersion::SymbolSpec;
use crate::error::{Error, Result};
use crate::pseudoproduct::BilinearKernel;
use crate::spectral::Field;
use serde::Serialize;
use std::collections::BTreeMap;

/// `||d^k u||^2 + 2 <d^k u, d^k B(u,u)>`.
pub fn modified_energy(sym: &SymbolSpec, u: &Field, k: u32) -> Result<f64> {
    let b = BilinearKernel::new(sym, u.grid()).b(u, u)?;
    energy_with(u, &b, k)
}

fn energy_with(u: &Field, buu: &Field, k: u32) -> Result<f64> {
    let du = u.derivative(k);
    Ok(du.inner(&du)? + 2.0 * du.inner(&buu.derivative(k))?)
}

/// Smallest admissible `N` for a symbol: `max(3, 2 j* - 1)`.
pub fn min_order(sym: &SymbolSpec) -> u32 {
    3.max(2 * sym.j_star - 1)
}

/// Lowest derivative order entering the energy sum, `2 j* - 1`.
pub fn first_order(sym: &SymbolSpec) -> u32 {
    2 * sym.j_star - 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub n_max: u32,
    /// `E^(k)` for `k = 2 j* - 1 ..= N`.
    pub modified: BTreeMap<u32, f64>,
    /// `||d^k u||^2` for the same orders.
    pub seminorms: BTreeMap<u32, f64>,
    /// `sum_k E^(k) + ||u||^2`.
    pub total_modified: f64,
    /// `sum_k ||d^k u||^2 + ||u||^2`, the quadratic part of `total_modified`.
    pub quadratic: f64,
    /// `||u||^2_{H^N}` with weights `(1 + xi^2)^N`.
    pub h_n_sq: f64,
    /// `total_modified / quadratic`; 1 for the zero field.
    pub ratio: f64,
}

/// Sum of modified energies over `k = 2 j* - 1 ..= n_max` plus `||u||^2`,
/// compared with its own quadratic part. The deviation of `ratio` from 1 is
/// the relative size of the cubic corrections.
pub fn total_modified_energy(sym: &SymbolSpec, u: &Field, n_max: u32) -> Result<EnergyReport> {
    let lo = min_order(sym);
    if n_max < lo {
        return Err(Error::InvalidParameter(format!("n_max must be at least {lo} for {}, got {n_max}", sym.name)));
    }
    let buu = BilinearKernel::new(sym, u.grid()).b(u, u)?;
    let l2 = u.seminorm_sq(0);
    let mut modified = BTreeMap::new();
    let mut seminorms = BTreeMap::new();
    for k in first_order(sym)..=n_max {
        modified.insert(k, energy_with(u, &buu, k)?);
        seminorms.insert(k, u.seminorm_sq(k));
    }
    let total_modified = l2 + modified.values().sum::<f64>();
    let quadratic = l2 + seminorms.values().sum::<f64>();
    let ratio = if quadratic == 0.0 { 1.0 } else { total_modified / quadratic };
    if !ratio.is_finite() || !total_modified.is_finite() {
        return Err(Error::NonFinite(format!("modified energy for {}", sym.name)));
    }
    Ok(EnergyReport {
        n_max,
        modified,
        seminorms,
        total_modified,
        quadratic,
        h_n_sq: u.sobolev_norm(n_max as f64).powi(2),
        ratio,
    })
}

/// `dE^(k)/dt` for the dealiased flow `u_t = L u_x - u u_x`:
/// `2 <d^k(-u u_x), d^k B(u,u)> + 4 <d^k u, d^k B(-u u_x, u)>`.
pub fn quartic_rhs(sym: &SymbolSpec, u: &Field, k: u32) -> Result<f64> {
    u.require_dealiased()?;
    let kernel = BilinearKernel::new(sym, u.grid());
    let minus_n = u.convective().scaled(-1.0);
    let buu = kernel.b(u, u)?;
    let bnu = kernel.b(&minus_n, u)?;
    let t1 = minus_n.derivative(k).inner(&buu.derivative(k))?;
    let t2 = u.derivative(k).inner(&bnu.derivative(k))?;
    Ok(2.0 * t1 + 4.0 * t2)
}

/// Empirical constant of the cubic estimate:
/// `|E^(k) - ||d^k u||^2| / (||u||_{H^2} ||u||^2_{H^k})`.
pub fn cubic_constant(sym: &SymbolSpec, u: &Field, k: u32) -> Result<f64> {
    let denom = u.sobolev_norm(2.0) * u.sobolev_norm(k as f64).powi(2);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((modified_energy(sym, u, k)? - u.seminorm_sq(k)).abs() / denom)
}

/// Centred difference `(e_plus - e_minus) / (2 dt)`.
pub fn centred_rate(e_minus: f64, e_plus: f64, dt: f64) -> f64 {
    (e_plus - e_minus) / (2.0 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::make_builtin;
    use crate::spectral::Grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn cos_field(eps: f64) -> Field {
        let grid = Grid::new(32, 1.0).unwrap();
        Field::from_modes(grid, &[(1, Complex64::new(0.5 * eps, 0.0))]).unwrap()
    }

    #[test]
    fn single_mode_correction_is_orthogonal() {
        let s = make_builtin("fkdv", &[1.0]).unwrap();
        let eps = 0.3;
        let e = modified_energy(&s, &cos_field(eps), 1).unwrap();
        assert!((e - PI * eps * eps).abs() < 1e-15);
        let r = total_modified_energy(&s, &cos_field(eps), 3).unwrap();
        // every derivative of cos x has the same L^2 norm
        assert!((r.total_modified - 4.0 * PI * eps * eps).abs() < 1e-14);
        assert!((r.ratio - 1.0).abs() < 1e-15);
        assert!((r.h_n_sq - 8.0 * PI * eps * eps).abs() < 1e-14);
    }

    #[test]
    fn zero_field_conventions() {
        let s = make_builtin("whitham", &[]).unwrap();
        let z = Field::zeros(Grid::new(32, 1.0).unwrap());
        assert_eq!(modified_energy(&s, &z, 2).unwrap(), 0.0);
        assert_eq!(total_modified_energy(&s, &z, 3).unwrap().ratio, 1.0);
        assert_eq!(quartic_rhs(&s, &z, 2).unwrap(), 0.0);
    }

    #[test]
    fn order_range_is_enforced() {
        let w = make_builtin("whitham", &[]).unwrap();
        let b = make_builtin("bessel", &[]).unwrap();
        let u = cos_field(0.1);
        assert!(total_modified_energy(&w, &u, 2).is_err());
        assert!(total_modified_energy(&b, &u, 3).is_ok());
        let r = total_modified_energy(&b, &u, 4).unwrap();
        assert_eq!(r.modified.keys().copied().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn quartic_rhs_scales_with_fourth_power() {
        let s = make_builtin("whitham", &[]).unwrap();
        let grid = Grid::new(64, 1.0).unwrap();
        let u = Field::random(grid, 21, 2.0, 7);
        let a = quartic_rhs(&s, &u, 2).unwrap();
        let b = quartic_rhs(&s, &u.scaled(0.5), 2).unwrap();
        assert!(a != 0.0);
        assert!((b * 16.0 - a).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn quartic_rhs_rejects_wide_band() {
        let s = make_builtin("whitham", &[]).unwrap();
        let u = Field::random(Grid::new(64, 1.0).unwrap(), 31, 0.0, 1);
        assert!(matches!(quartic_rhs(&s, &u, 1), Err(Error::BandLimit { .. })));
    }
}
