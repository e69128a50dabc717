//! Property tests of invariants that hold for every input.

use num_complex::Complex64;
use nvism::evolution::{compose_evolution, evolve, EvolutionParams};
use nvism::nvf::{read_nvf, write_nvf, FieldKind};
use nvism::spectral::{apply_multiplier, lp_norm, spectral_derivative, DiffOp};
use nvism::symmetry::CheckReport;
use nvism::{ComplexField, Grid2D, Plane, ScatteringData, Variant};
use proptest::prelude::*;

fn grid_strategy(plane: Plane) -> impl Strategy<Value = Grid2D> {
    (prop::sample::select(vec![8usize, 16, 32]), 0.5f64..20.0).prop_map(move |(n, s)| Grid2D::new(n, s, plane).unwrap())
}

fn field_strategy(plane: Plane) -> impl Strategy<Value = ComplexField> {
    grid_strategy(plane).prop_flat_map(|g| {
        prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), g.len())
            .prop_map(move |v| ComplexField::from_values(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
    })
}

/// Scattering data on a 16 x 16 k-grid from random complex samples.
fn scattering_strategy() -> impl Strategy<Value = ScatteringData> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256).prop_map(|v| {
        let g = Grid2D::new(16, 8.0, Plane::K).unwrap();
        let f = ComplexField::from_values(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap();
        ScatteringData::new(f, Variant::Plus, 8.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nvf_round_trip_is_bit_exact(f in field_strategy(Plane::Z)) {
        let mut buf = Vec::new();
        write_nvf(&mut buf, &f, FieldKind::Complex).unwrap();
        let (back, header) = read_nvf(buf.as_slice()).unwrap();
        prop_assert_eq!(header.grid().unwrap(), *f.grid());
        prop_assert_eq!(back, f);
    }

    #[test]
    fn real_nvf_keeps_real_parts(f in field_strategy(Plane::K)) {
        let real = f.map(|v| Complex64::new(v.re, 0.0));
        let mut buf = Vec::new();
        write_nvf(&mut buf, &real, FieldKind::Real).unwrap();
        prop_assert_eq!(read_nvf(buf.as_slice()).unwrap().0, real);
    }

    #[test]
    fn lp_norm_is_absolutely_homogeneous(f in field_strategy(Plane::Z), c in -50.0f64..50.0, p in 1.0f64..4.0) {
        let base = lp_norm(&f, p).unwrap();
        let scaled = lp_norm(&f.scale(Complex64::new(c, 0.0)), p).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + c.abs() * base));
    }

    #[test]
    fn evolution_multipliers_are_unimodular(
        tau in 0.0f64..1e-1,
        n in prop::sample::select(vec![3u32, 5, 7]),
        r in 0.0f64..8.0,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let m = EvolutionParams::new(tau, n).unwrap().multiplier(Complex64::from_polar(r, angle));
        prop_assert!((m.norm() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn evolution_is_a_semigroup(t in scattering_strategy(), a in 0.0f64..1e-2, b in 0.0f64..1e-2) {
        let two_steps = compose_evolution(&evolve(&t, EvolutionParams::nv(a).unwrap()).unwrap(), b).unwrap();
        let one_step = evolve(&t, EvolutionParams::nv(a + b).unwrap()).unwrap();
        let gap = two_steps.field().sub(one_step.field()).unwrap().max_abs();
        prop_assert!(gap <= 1e-12 * t.field().max_abs().max(1.0));
        prop_assert_eq!(two_steps.tau(), one_step.tau());
    }

    #[test]
    fn evolution_preserves_the_l2_norm(t in scattering_strategy(), tau in 0.0f64..1e-1) {
        let evolved = evolve(&t, EvolutionParams::nv(tau).unwrap()).unwrap();
        prop_assert!((evolved.field().l2_norm() - t.field().l2_norm()).abs() <= 1e-12 * t.field().l2_norm().max(1.0));
    }

    #[test]
    fn d_dbar_is_a_quarter_laplacian(f in field_strategy(Plane::Z)) {
        // Band-limit first: the odd derivatives drop the Nyquist bins, so the
        // identity only holds for fields without Nyquist content.
        let smooth = apply_multiplier(&f, |(_, nyq1), (_, nyq2)| {
            if nyq1 || nyq2 { Complex64::default() } else { Complex64::new(1.0, 0.0) }
        });
        let lhs = spectral_derivative(&spectral_derivative(&smooth, DiffOp::Dzbar), DiffOp::Dz);
        let rhs = spectral_derivative(&smooth, DiffOp::Laplacian).scale(Complex64::new(0.25, 0.0));
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn check_report_passes_exactly_within_tolerance(
        violation in 0.0f64..10.0,
        scale in 1e-3f64..10.0,
        tol in 1e-6f64..10.0,
    ) {
        let r = CheckReport::new("property", violation, scale, tol);
        prop_assert_eq!(r.pass, r.relative_violation <= tol);
        prop_assert!((r.relative_violation - violation / scale).abs() <= 1e-15 * (1.0 + violation / scale));
    }
}
