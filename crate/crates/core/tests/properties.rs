use proptest::prelude::*;
use whitham_core::dispersion::{make_builtin, SymbolSpec};
use whitham_core::energy::{modified_energy, quartic_rhs};
use whitham_core::pseudoproduct::{bilinear_b, bilinear_q};
use whitham_core::spectral::{Field, Grid};

fn symbols() -> Vec<SymbolSpec> {
    vec![
        make_builtin("whitham", &[]).unwrap(),
        make_builtin("capillary_whitham", &[1.0]).unwrap(),
        make_builtin("bessel", &[]).unwrap(),
        make_builtin("smooth_fkdv", &[0.5]).unwrap(),
        make_builtin("smooth_fkdv", &[-0.5]).unwrap(),
    ]
}

fn wavenumber() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0, any::<bool>()).prop_map(|(e, neg)| if neg { -(10f64.powf(e)) } else { 10f64.powf(e) })
}

fn field(n: usize) -> impl Strategy<Value = Field> {
    (any::<u64>(), 0.0f64..2.0).prop_map(move |(seed, decay)| {
        let grid = Grid::new(n, 1.0).unwrap();
        Field::random(grid, grid.dealias_cutoff(), decay, seed)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_symmetric_and_odd(a in wavenumber(), b in wavenumber(), i in 0usize..5) {
        let s = &symbols()[i];
        prop_assume!(a + b != 0.0);
        prop_assert_eq!(s.phi(a, b), s.phi(b, a));
        prop_assert_eq!(s.phi(-a, -b), -s.phi(a, b));
        prop_assert_eq!(s.m(a, b), s.m(b, a));
    }

    #[test]
    fn m_times_phi_is_half_sum(a in wavenumber(), b in wavenumber(), i in 0usize..5) {
        let s = &symbols()[i];
        prop_assume!((a + b).abs() > 1e-9 * (a.abs() + b.abs()));
        prop_assert!(rel(s.m(a, b) * s.phi(a, b), 0.5 * (a + b)) < 1e-14);
        let n = s.n(a, b);
        prop_assert_eq!(n.re, 0.0);
        prop_assert!(rel(n.im, -s.m(a, b) / (a + b)) < 1e-14);
    }

    #[test]
    fn synthesize_inverts_sample(f in field(64)) {
        let g = Field::synthesize(f.grid(), &f.sample()).unwrap();
        let err = f.sub(&g).unwrap().l2_norm();
        prop_assert!(err <= 1e-14 * f.l2_norm().max(1e-300));
        prop_assert_eq!(g.removed_mean().abs() < 1e-15, true);
    }

    #[test]
    fn parseval_matches_quadrature(f in field(64), g in field(64)) {
        let h = f.grid().length() / 64.0;
        let quad: f64 = f.sample().iter().zip(g.sample()).map(|(a, b)| a * b * h).sum();
        let spec = f.inner(&g).unwrap();
        prop_assert!((quad - spec).abs() <= 1e-12 * (f.l2_norm() * g.l2_norm()));
    }

    #[test]
    fn dealias_is_idempotent(f in field(64)) {
        let once = f.dealias();
        prop_assert_eq!(once.dealias(), once);
    }

    #[test]
    fn pseudoproduct_is_symmetric_real_bilinear(f in field(64), g in field(64), lambda in -3.0f64..3.0) {
        let s = make_builtin("whitham", &[]).unwrap();
        let b = bilinear_b(&s, &f, &g).unwrap();
        prop_assert_eq!(&b, &bilinear_b(&s, &g, &f).unwrap());
        prop_assert_eq!(b.reality_defect(), 0.0);
        let scaled = bilinear_b(&s, &f.scaled(lambda), &g).unwrap();
        prop_assert!(scaled.sub(&b.scaled(lambda)).unwrap().l2_norm() <= 1e-14 * b.l2_norm().max(1e-300) * lambda.abs().max(1.0));
        let dq = bilinear_q(&s, &f, &g).unwrap().derivative(1);
        prop_assert!(dq.sub(&b).unwrap().l2_norm() <= 1e-13 * b.l2_norm().max(1e-300));
    }

    #[test]
    fn energy_correction_matches_direct_pairing(f in field(32), k in 0u32..4) {
        let s = make_builtin("bessel", &[]).unwrap();
        let e = modified_energy(&s, &f, k).unwrap();
        let dk = f.derivative(k);
        let direct = 2.0 * dk.inner(&bilinear_b(&s, &f, &f).unwrap().derivative(k)).unwrap();
        prop_assert!(((e - f.seminorm_sq(k)) - direct).abs() <= 1e-12 * (e.abs() + direct.abs()));
    }

    #[test]
    fn energy_is_quadratic_plus_cubic(f in field(32), k in 1u32..4) {
        let s = make_builtin("whitham", &[]).unwrap();
        let e = |l: f64| modified_energy(&s, &f.scaled(l), k).unwrap();
        // solve for Q2, Q3 from lambda = 1, 2 and predict lambda = 3
        let (e1, e2) = (e(1.0), e(2.0));
        let q3 = (e2 - 4.0 * e1) / 4.0;
        let q2 = e1 - q3;
        let predicted = 9.0 * q2 + 27.0 * q3;
        prop_assert!(rel(e(3.0), predicted) < 1e-12);
    }

    #[test]
    fn quartic_rhs_is_homogeneous(f in field(32), lambda in 0.1f64..3.0, k in 0u32..4) {
        let s = make_builtin("whitham", &[]).unwrap();
        let base = quartic_rhs(&s, &f, k).unwrap();
        let scaled = quartic_rhs(&s, &f.scaled(lambda), k).unwrap();
        // the k = 0 rate cancels to rounding, so measure against a quartic norm
        let scale = lambda.powi(4) * (base.abs() + f.sobolev_norm(k as f64 + 2.0).powi(4));
        prop_assert!((scaled - lambda.powi(4) * base).abs() <= 1e-12 * scale);
    }
}
