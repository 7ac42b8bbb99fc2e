use super::{SymbolKind, SymbolSpec};
use crate::error::{Error, Result};

/// Taylor coefficients of `tanh(x)/x` in powers of `x^2`.
const TANH_OVER_X: [f64; 7] = [
    1.0,
    -1.0 / 3.0,
    2.0 / 15.0,
    -17.0 / 315.0,
    62.0 / 2835.0,
    -1382.0 / 155_925.0,
    21844.0 / 6_081_075.0,
];

/// Below this `|xi|` the closed forms of `tanh(xi)/xi` and its derivatives
/// lose digits to cancellation; the truncated series is exact to rounding.
const SERIES_CUTOFF: f64 = 0.05;

/// Builds one of the named symbols.
///
/// | name               | params  | symbol                                | alpha | j* |
/// |--------------------|---------|---------------------------------------|-------|----|
/// | `whitham`          |         | `sqrt(tanh(xi)/xi)`                   | -1/2  | 1  |
/// | `capillary_whitham`| `beta`  | `sqrt((1+beta xi^2) tanh(xi)/xi)`     | 1/2   | 1 (2 at beta = 1/3) |
/// | `bessel`           |         | `(1+xi^4)^(-1/8)`                     | -1/2  | 2  |
/// | `smooth_fkdv`      | `alpha` | `(1+xi^2)^(alpha/2)`                  | alpha | 1  |
/// | `fkdv`             | `alpha` | `|xi|^alpha`                          | alpha | -  |
pub fn make_builtin(name: &str, params: &[f64]) -> Result<SymbolSpec> {
    let want = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "`{name}` takes {n} parameter(s), got {}",
                params.len()
            )))
        }
    };
    let spec = match name {
        "whitham" => {
            want(0)?;
            SymbolSpec {
                name: "whitham".into(),
                alpha: -0.5,
                j_star: 1,
                p_tilde_at_zero: -1.0 / 6.0,
                admissible: true,
                kind: SymbolKind::Whitham { beta: 0.0 },
            }
        }
        "capillary_whitham" => {
            want(1)?;
            let beta = params[0];
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
            }
            // p^2 = 1 + (beta - 1/3) xi^2 + (2/15 - beta/3) xi^4 + ...
            let c2 = beta - 1.0 / 3.0;
            let (j_star, p_tilde) = if c2.abs() < 1e-12 { (2, 1.0 / 90.0) } else { (1, c2 / 2.0) };
            SymbolSpec {
                name: format!("capillary_whitham({beta})"),
                alpha: 0.5,
                j_star,
                p_tilde_at_zero: p_tilde,
                // below 1/3 the symbol dips before it grows
                admissible: c2 >= -1e-12,
                kind: SymbolKind::Whitham { beta },
            }
        }
        "bessel" => {
            want(0)?;
            SymbolSpec {
                name: "bessel".into(),
                alpha: -0.5,
                j_star: 2,
                p_tilde_at_zero: -0.125,
                admissible: true,
                kind: SymbolKind::Bessel,
            }
        }
        "smooth_fkdv" => {
            want(1)?;
            let alpha = params[0];
            check_alpha(alpha)?;
            SymbolSpec {
                name: format!("smooth_fkdv({alpha})"),
                alpha,
                j_star: 1,
                p_tilde_at_zero: alpha / 2.0,
                admissible: true,
                kind: SymbolKind::SmoothFkdv { alpha },
            }
        }
        "fkdv" => {
            want(1)?;
            let alpha = params[0];
            check_alpha(alpha)?;
            SymbolSpec {
                name: format!("fkdv({alpha})"),
                alpha,
                j_star: 1,
                p_tilde_at_zero: f64::NAN,
                admissible: false,
                kind: SymbolKind::Fkdv { alpha },
            }
        }
        other => return Err(Error::UnknownSymbol(other.to_string())),
    };
    Ok(spec)
}

pub(super) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && (-1.0..=1.0).contains(&alpha) && alpha != 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in [-1, 1] without 0, got {alpha}")))
    }
}

/// `tanh(x)/x - 1` and the first two derivatives of `tanh(x)/x`, for `x >= 0`.
fn tanh_over_x(x: f64) -> (f64, f64, f64) {
    if x < SERIES_CUTOFF {
        tanh_over_x_series(x)
    } else {
        tanh_over_x_closed(x)
    }
}

fn tanh_over_x_series(x: f64) -> (f64, f64, f64) {
    {
        let x2 = x * x;
        let mut dev = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        // Horner in x^2, highest order first
        for (i, &c) in TANH_OVER_X.iter().enumerate().skip(1).rev() {
            let n = 2.0 * i as f64;
            dev = dev * x2 + c;
            d1 = d1 * x2 + n * c;
            d2 = d2 * x2 + n * (n - 1.0) * c;
        }
        (dev * x2, d1 * x, d2)
    }
}

fn tanh_over_x_closed(x: f64) -> (f64, f64, f64) {
    {
        let t = x.tanh();
        let c = x.cosh();
        let s = 1.0 / (c * c);
        let dev = t / x - 1.0;
        let d1 = s / x - t / (x * x);
        let d2 = -2.0 * t * s / x - 2.0 * s / (x * x) + 2.0 * t / (x * x * x);
        (dev, d1, d2)
    }
}

/// `(p, p - p(0), p', p'')` for the capillary-gravity family at `x >= 0`.
pub(super) fn whitham(beta: f64, x: f64) -> (f64, f64, f64, f64) {
    let (t_dev, t1, t2) = tanh_over_x(x);
    let t = 1.0 + t_dev;
    let w = 1.0 + beta * x * x;
    let g = w * t;
    let g_dev = t_dev + beta * x * x * t;
    let g1 = 2.0 * beta * x * t + w * t1;
    let g2 = 2.0 * beta * t + 4.0 * beta * x * t1 + w * t2;
    let p = g.sqrt();
    let dev = g_dev / (p + 1.0);
    let p1 = g1 / (2.0 * p);
    let p2 = g2 / (2.0 * p) - g1 * g1 / (4.0 * p * p * p);
    (p, dev, p1, p2)
}

/// `(1 + x^4)^(-1/8)` family at `x >= 0`.
pub(super) fn bessel(x: f64) -> (f64, f64, f64, f64) {
    let x2 = x * x;
    let x4 = x2 * x2;
    let l = x4.ln_1p();
    let p = (-l / 8.0).exp();
    let dev = (-l / 8.0).exp_m1();
    let p1 = -0.5 * x2 * x * (-9.0 * l / 8.0).exp();
    let p2 = -1.5 * x2 * (-17.0 * l / 8.0).exp() * (1.0 - 0.5 * x4);
    (p, dev, p1, p2)
}

/// `(1 + x^2)^(alpha/2)` family at `x >= 0`.
pub(super) fn smooth_fkdv(alpha: f64, x: f64) -> (f64, f64, f64, f64) {
    let x2 = x * x;
    let l = x2.ln_1p();
    let p = (0.5 * alpha * l).exp();
    let dev = (0.5 * alpha * l).exp_m1();
    let p1 = alpha * x * ((0.5 * alpha - 1.0) * l).exp();
    let p2 = alpha * ((0.5 * alpha - 2.0) * l).exp() * (1.0 + (alpha - 1.0) * x2);
    (p, dev, p1, p2)
}
