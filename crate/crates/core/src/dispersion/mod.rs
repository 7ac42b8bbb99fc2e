//! Dispersion symbols and the resonance function built from them.
//!
//! A symbol `p` is an even real function; the linear operator of the
//! equation multiplies Fourier mode `xi` by `p(xi)`. Three-wave interactions
//! are governed by
//!
//! ```text
//! phi(a, b) = p(a) a + p(b) b - p(a + b)(a + b)
//! ```
//!
//! whose zero set is `{a = 0} ∪ {b = 0} ∪ {a + b = 0}` for admissible
//! symbols. The normal-form multipliers are `m = (a + b) / (2 phi)` and
//! `n = -i / (2 phi)`; both are set to zero on that zero set.

mod builtin;
mod commutator;
mod verify;

use crate::error::{Error, Result};
use crate::expr::Expr;
use num_complex::Complex64;
use std::sync::Arc;

pub use commutator::{
    commutator_n, commutator_region_grid, commutator_scan, commutator_u, CommutatorReport,
    CommutatorSample,
};
pub use verify::{
    check_assumptions, verify_m_bound, verify_multiplier_identities, verify_phi_bound,
    verify_phi_symmetries, AssumptionReport, BoundReport, IdentityReport, SampleGrid,
    SymmetryReport, IDENTITY_TOLERANCE,
};

/// Closed-form family a symbol belongs to.
#[derive(Debug, Clone)]
pub enum SymbolKind {
    /// `sqrt((1 + beta xi^2) tanh(xi) / xi)`; `beta = 0` is the gravity case.
    Whitham { beta: f64 },
    /// `(1 + xi^4)^(-1/8)`
    Bessel,
    /// `(1 + xi^2)^(alpha/2)`
    SmoothFkdv { alpha: f64 },
    /// `|xi|^alpha`
    Fkdv { alpha: f64 },
    /// User expression in `xi`, differentiated in forward mode.
    Custom(Arc<Expr>),
}

/// A dispersion symbol with the metadata the analysis needs.
#[derive(Debug, Clone)]
pub struct SymbolSpec {
    pub name: String,
    /// Far-field order: `|p^(i)(xi)| ~ |xi|^(alpha - i)`.
    pub alpha: f64,
    /// Order of the extremum at the origin: `p(xi) - p(0) ~ xi^(2 j_star)`.
    pub j_star: u32,
    /// Leading Taylor coefficient of `(p(xi) - p(0)) / xi^(2 j_star)` at 0.
    pub p_tilde_at_zero: f64,
    /// Whether the bound verifiers accept the symbol. False for the raw
    /// homogeneous symbol (no smooth expansion at the origin) and for
    /// capillary parameters that break monotonicity.
    pub admissible: bool,
    pub kind: SymbolKind,
}

pub use builtin::make_builtin;

impl SymbolSpec {
    /// A user-supplied symbol `p(xi)` given as an expression string.
    ///
    /// When `p_tilde` is absent it is estimated from the expression: exactly
    /// from the second derivative for `j_star = 1`, otherwise from the
    /// quotient `(p(h) - p(0)) / h^(2 j_star)` at `h = 1e-2`.
    pub fn custom(name: &str, alpha: f64, j_star: u32, p: &str, p_tilde: Option<f64>) -> Result<Self> {
        builtin::check_alpha(alpha)?;
        if j_star == 0 {
            return Err(Error::InvalidParameter("j_star must be a positive integer".into()));
        }
        let expr = Expr::parse(p, "xi")?;
        let p0 = expr.eval(0.0);
        if !p0.is_finite() {
            return Err(Error::InvalidParameter(format!("p(0) is not finite for `{p}`")));
        }
        let p_tilde = match p_tilde {
            Some(v) => v,
            None if j_star == 1 => expr.eval_dual(0.0).d2 / 2.0,
            None => {
                let h: f64 = 1e-2;
                (expr.eval(h) - p0) / h.powi(2 * j_star as i32)
            }
        };
        if !p_tilde.is_finite() || p_tilde == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "leading Taylor coefficient must be finite and nonzero, got {p_tilde}"
            )));
        }
        Ok(SymbolSpec {
            name: name.to_string(),
            alpha,
            j_star,
            p_tilde_at_zero: p_tilde,
            admissible: true,
            kind: SymbolKind::Custom(Arc::new(expr)),
        })
    }

    pub fn p(&self, xi: f64) -> f64 {
        match &self.kind {
            SymbolKind::Whitham { beta } => builtin::whitham(*beta, xi.abs()).0,
            SymbolKind::Bessel => builtin::bessel(xi.abs()).0,
            SymbolKind::SmoothFkdv { alpha } => builtin::smooth_fkdv(*alpha, xi.abs()).0,
            SymbolKind::Fkdv { alpha } => xi.abs().powf(*alpha),
            SymbolKind::Custom(e) => e.eval(xi),
        }
    }

    pub fn dp(&self, xi: f64) -> f64 {
        let sign = if xi < 0.0 { -1.0 } else { 1.0 };
        match &self.kind {
            SymbolKind::Whitham { beta } => sign * builtin::whitham(*beta, xi.abs()).2,
            SymbolKind::Bessel => sign * builtin::bessel(xi.abs()).2,
            SymbolKind::SmoothFkdv { alpha } => sign * builtin::smooth_fkdv(*alpha, xi.abs()).2,
            SymbolKind::Fkdv { alpha } => sign * alpha * xi.abs().powf(alpha - 1.0),
            SymbolKind::Custom(e) => e.eval_dual(xi).d1,
        }
    }

    pub fn d2p(&self, xi: f64) -> f64 {
        match &self.kind {
            SymbolKind::Whitham { beta } => builtin::whitham(*beta, xi.abs()).3,
            SymbolKind::Bessel => builtin::bessel(xi.abs()).3,
            SymbolKind::SmoothFkdv { alpha } => builtin::smooth_fkdv(*alpha, xi.abs()).3,
            SymbolKind::Fkdv { alpha } => alpha * (alpha - 1.0) * xi.abs().powf(alpha - 2.0),
            SymbolKind::Custom(e) => e.eval_dual(xi).d2,
        }
    }

    /// `p(xi) - p(0)`, evaluated without cancellation for the builtins.
    ///
    /// For `|xi|^alpha` with negative `alpha`, `p(0)` is infinite and the
    /// offset is taken as zero instead; see [`SymbolSpec::shift`].
    pub fn deviation(&self, xi: f64) -> f64 {
        match &self.kind {
            SymbolKind::Whitham { beta } => builtin::whitham(*beta, xi.abs()).1,
            SymbolKind::Bessel => builtin::bessel(xi.abs()).1,
            SymbolKind::SmoothFkdv { alpha } => builtin::smooth_fkdv(*alpha, xi.abs()).1,
            SymbolKind::Fkdv { .. } => self.p(xi) - self.shift(),
            SymbolKind::Custom(e) => e.eval(xi) - e.eval(0.0),
        }
    }

    /// The constant subtracted by [`SymbolSpec::deviation`]: `p(0)` when
    /// finite, else zero. It drops out of `phi` identically.
    pub fn shift(&self) -> f64 {
        let p0 = self.p(0.0);
        if p0.is_finite() {
            p0
        } else {
            0.0
        }
    }

    /// `(p(xi) - shift) xi`, the odd part of the dispersion relation that
    /// enters `phi`.
    pub fn psi(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            0.0
        } else {
            self.deviation(xi) * xi
        }
    }

    /// `p(a) a + p(b) b - p(a + b)(a + b)`.
    pub fn phi(&self, a: f64, b: f64) -> f64 {
        self.psi(a) + self.psi(b) - self.psi(a + b)
    }

    /// `(a + b) / (2 phi(a, b))`, zero when `a`, `b` or `a + b` vanishes.
    pub fn m(&self, a: f64, b: f64) -> f64 {
        if on_zero_set(a, b) {
            return 0.0;
        }
        (a + b) / (2.0 * self.phi(a, b))
    }

    /// `-i / (2 phi(a, b))`, zero on the same set as [`SymbolSpec::m`].
    pub fn n(&self, a: f64, b: f64) -> Complex64 {
        if on_zero_set(a, b) {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, -1.0 / (2.0 * self.phi(a, b)))
    }

    pub(crate) fn require_admissible(&self) -> Result<()> {
        if self.admissible {
            Ok(())
        } else {
            Err(Error::Inadmissible(self.name.clone()))
        }
    }
}

pub(crate) fn on_zero_set(a: f64, b: f64) -> bool {
    a == 0.0 || b == 0.0 || a + b == 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_of_linear_symbol() {
        let s = make_builtin("fkdv", &[1.0]).unwrap();
        assert_eq!(s.phi(1.0, 1.0), -2.0);
        assert_eq!(s.m(1.0, 1.0), -0.5);
        assert_eq!(s.n(1.0, 1.0), Complex64::new(0.0, 0.25));
    }

    #[test]
    fn zero_set_convention() {
        for name in ["whitham", "bessel"] {
            let s = make_builtin(name, &[]).unwrap();
            assert_eq!(s.phi(2.5, -2.5), 0.0);
            assert_eq!(s.m(3.0, -3.0), 0.0);
            assert_eq!(s.m(0.0, 1.0), 0.0);
            assert_eq!(s.m(1.0, 0.0), 0.0);
            assert_eq!(s.n(1.5, -1.5), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn smooth_fkdv_phi_matches_closed_form() {
        // 2 sqrt(2) - 2 sqrt(5), 40-digit reference
        let s = make_builtin("smooth_fkdv", &[1.0]).unwrap();
        let expect = -1.643_708_830_253_389_3;
        assert!((s.phi(1.0, 1.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn m_identity_at_sample_point() {
        let s = make_builtin("whitham", &[]).unwrap();
        let v = s.m(2.0, 1.0);
        let w = s.m(-2.0, 3.0);
        assert!((v * 1.0 + w * 3.0).abs() <= 1e-14 * v.abs());
        assert!((s.n(2.0, 1.0) - s.n(-2.0, 3.0).conj()).norm() <= 1e-15 * s.n(2.0, 1.0).norm());
    }

    #[test]
    fn custom_symbol_from_expression() {
        let s = SymbolSpec::custom("w", -0.5, 1, "sqrt(tanh(xi)/xi)", None).unwrap_err();
        // tanh(0)/0 is NaN, so p(0) must be supplied through a regular expression
        assert!(matches!(s, Error::InvalidParameter(_)));

        let s = SymbolSpec::custom("sf", 0.5, 1, "(1 + xi^2)^(0.25)", None).unwrap();
        assert!((s.p_tilde_at_zero - 0.25).abs() < 1e-15);
        let b = make_builtin("smooth_fkdv", &[0.5]).unwrap();
        for xi in [0.3, 1.0, 7.0] {
            assert!((s.p(xi) - b.p(xi)).abs() < 1e-15);
            assert!((s.dp(xi) - b.dp(xi)).abs() < 1e-14);
            assert!((s.d2p(xi) - b.d2p(xi)).abs() < 1e-14);
        }
    }

    #[test]
    fn custom_rejects_bad_metadata() {
        assert!(SymbolSpec::custom("c", 0.0, 1, "1+xi^2", None).is_err());
        assert!(SymbolSpec::custom("c", 0.5, 0, "1+xi^2", None).is_err());
        assert!(SymbolSpec::custom("c", 0.5, 1, "1", None).is_err());
    }
}
