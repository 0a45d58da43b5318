use nlfp_core::bernstein::{Atom, BernsteinSpec, MeasureDescriptor};
use nlfp_core::solver::{BPreset, BetaPreset, CoefficientSet, DriftPreset, ResolventSolver, SolverParams};
use nlfp_core::spectral::{apply_psi_laplacian, divergence_drift, resolvent_phi, Field, Grid, PsiOperator};
use proptest::prelude::*;

fn atomic(atoms: &[(f64, f64)]) -> BernsteinSpec {
    BernsteinSpec::new(
        MeasureDescriptor::AtomicMix {
            atoms: atoms.iter().map(|&(t, w)| Atom { t, w }).collect(),
        },
        0.75,
        0.01,
    )
    .unwrap()
}

fn spec_strategy() -> impl Strategy<Value = BernsteinSpec> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|s| BernsteinSpec::fractional(s).unwrap()),
        prop::collection::vec((0.01f64..20.0, 0.01f64..5.0), 1..5).prop_map(|a| atomic(&a)),
    ]
}

/// Sum of a few Gaussian bumps, nonnegative and smooth.
fn bumps(grid: Grid, params: &[(f64, f64, f64)]) -> Field {
    Field::from_fn(grid, |x| {
        params
            .iter()
            .map(|(a, c, w)| a * (-x.iter().map(|v| (v - c).powi(2)).sum::<f64>() / (2.0 * w * w)).exp())
            .sum()
    })
}

fn bump_params() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.05f64..1.0, -4.0f64..4.0, 0.4f64..2.0), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi_is_increasing_concave_and_sublinear(spec in spec_strategy(), r1 in 1e-4f64..1e3, r2 in 1e-4f64..1e3) {
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        let psi = |r: f64| spec.eval_psi(r).unwrap();
        prop_assert!(psi(lo) <= psi(hi) * (1.0 + 1e-12));
        prop_assert!(psi(0.5 * (lo + hi)) >= 0.5 * (psi(lo) + psi(hi)) * (1.0 - 1e-12));
        let m = spec.small_jump_mass();
        prop_assert!(psi(hi) <= m * (1.0 + hi) * (1.0 + 1e-12));
    }

    #[test]
    fn operator_is_linear_and_self_adjoint(
        s in 0.55f64..0.95,
        p in bump_params(),
        q in bump_params(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let op = PsiOperator::new(grid, &BernsteinSpec::fractional(s).unwrap());
        let (f, g) = (bumps(grid, &p), bumps(grid, &q));
        let combo = f.combine(a, &g, b);
        let lhs = Field::new(grid, op.apply(combo.values())).unwrap();
        let rhs = Field::new(grid, op.apply(f.values()))
            .unwrap()
            .combine(a, &Field::new(grid, op.apply(g.values())).unwrap(), b);
        let scale = 1.0 + lhs.l1_norm();
        prop_assert!(lhs.l1_distance(&rhs) <= 1e-11 * scale);
        let fg = Field::new(grid, op.apply(f.values())).unwrap().inner(&g);
        let gf = Field::new(grid, op.apply(g.values())).unwrap().inner(&f);
        prop_assert!((fg - gf).abs() <= 1e-11 * (1.0 + fg.abs()));
    }

    #[test]
    fn resolvent_phi_keeps_nonnegative_data_nonnegative(spec in spec_strategy(), p in bump_params(), eps in 0.05f64..5.0) {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let f = bumps(grid, &p);
        let g = resolvent_phi(&f, &spec, eps).unwrap();
        prop_assert!(g.min() >= -1e-10 * f.sup_norm());
        // Φ_ε = (ε + Ψ(-Δ))^{-1} scales the mass by 1/ε
        prop_assert!((eps * g.mass() - f.mass()).abs() <= 1e-10 * f.mass());
    }

    #[test]
    fn upwind_drift_has_zero_mass(p in bump_params(), strength in -2.0f64..2.0, speed in 0.0f64..3.0) {
        let grid = Grid::new(2, 32, 10.0).unwrap();
        let coeffs = CoefficientSet::new(
            BetaPreset::Linear,
            BPreset::Constant { value: speed },
            DriftPreset::ConfiningTanh { strength },
            grid,
        )
        .unwrap();
        let u = bumps(grid, &p);
        let div = divergence_drift(&u, &coeffs).unwrap();
        prop_assert!(div.mass().abs() <= 1e-12 * (1.0 + div.l1_norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nonlinear_resolvent_conserves_mass(p in bump_params(), lambda in 1e-3f64..0.5) {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let coeffs = CoefficientSet::new(
            BetaPreset::ArctanPlus,
            BPreset::Constant { value: 1.0 },
            DriftPreset::ConfiningTanh { strength: 1.0 },
            grid,
        )
        .unwrap();
        let solver = ResolventSolver::new(&BernsteinSpec::fractional(0.75).unwrap(), &coeffs, &SolverParams::default()).unwrap();
        let f = bumps(grid, &p);
        let (y, rep) = solver.solve(&f, lambda).unwrap();
        prop_assert!((y.mass() - f.mass()).abs() <= 1e-8 * f.mass());
        prop_assert!(y.min() >= -1e-10);
        prop_assert!(rep.residual <= rep.tol);
    }

    /// `Ψ(-Δ)f(0) = ∫ (f(0) - f(y)) ν(y) dy` for a Gaussian `f` on the line.
    #[test]
    fn jump_kernel_reproduces_the_operator(atoms in prop::collection::vec((0.05f64..3.0, 0.1f64..2.0), 1..4), width in 0.6f64..1.5) {
        let spec = atomic(&atoms);
        let grid = Grid::new(1, 2048, 80.0).unwrap();
        let f = Field::from_fn(grid, |x| (-x[0] * x[0] / (2.0 * width * width)).exp());
        let spectral = apply_psi_laplacian(&f, &spec).unwrap().values()[grid.origin_index()];
        let h = 1e-3;
        let direct: f64 = 2.0 * (1..40_000)
            .map(|i| {
                let y = i as f64 * h;
                (1.0 - (-y * y / (2.0 * width * width)).exp()) * spec.levy_jump_density(y, 1).unwrap() * h
            })
            .sum::<f64>();
        prop_assert!((spectral - direct).abs() <= 1e-6 * (1.0 + spectral.abs()), "{} vs {}", spectral, direct);
    }
}

#[test]
fn fractional_jump_kernel_reproduces_the_operator() {
    for s in [0.6, 0.75, 0.9] {
        let spec = BernsteinSpec::fractional(s).unwrap();
        let grid = Grid::new(1, 4096, 160.0).unwrap();
        let f = Field::from_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
        let spectral = apply_psi_laplacian(&f, &spec).unwrap().values()[grid.origin_index()];
        // log-spaced trapezoid over (1e-8, 1e4), with the analytic near-zero piece
        let (a, b, n) = (1e-8f64.ln(), 1e4f64.ln(), 200_000);
        let dx = (b - a) / n as f64;
        let mut direct: f64 = (0..=n)
            .map(|i| {
                let y = (a + i as f64 * dx).exp();
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (-(-y * y / 2.0).exp_m1()) * spec.levy_jump_density(y, 1).unwrap() * y * dx
            })
            .sum();
        let c = nlfp_core::bernstein::fractional_kernel_constant(1, s);
        let y0 = 1e-8f64;
        direct += c * 0.5 * y0.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        direct *= 2.0;
        assert!((spectral - direct).abs() <= 1e-4 * spectral, "s={s}: {spectral} vs {direct}");
    }
}
