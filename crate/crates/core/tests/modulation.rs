use std::sync::OnceLock;

use gkdv_core::grid::{Grid, GridFunction};
use gkdv_core::modulation::{
    decompose_with, f0_diagnostic, orthogonality_pairings, pairing_jacobian, reconstruct, DecomposeOptions,
    ModulationState,
};
use gkdv_core::profiles::{build_profiles, localized_profile_on, ProfileSet};
use gkdv_core::soliton;
use proptest::prelude::*;

const GAMMA: f64 = 0.9;

fn ps() -> &'static ProfileSet {
    static PS: OnceLock<ProfileSet> = OnceLock::new();
    PS.get_or_init(|| build_profiles(3, &Grid::line_with_spacing(-80.0, 32.0, 1.0 / 32.0).unwrap()).unwrap())
}

fn xgrid() -> Grid {
    Grid::line_with_spacing(-120.0, 60.0, 1.0 / 64.0).unwrap()
}

fn opts() -> DecomposeOptions {
    DecomposeOptions {
        gamma: Some(GAMMA),
        reference_grid: Grid::line_with_spacing(-80.0, 40.0, 1.0 / 32.0).unwrap(),
        ..DecomposeOptions::default()
    }
}

fn plant(lambda: f64, x: f64, b: f64) -> (ModulationState, GridFunction) {
    let s = ModulationState::exact(lambda, x, b, GAMMA, 0.0, &opts().reference_grid);
    let u = reconstruct(&s, ps(), &xgrid()).unwrap();
    (s, u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn recovers_planted_parameters(
        lambda in 0.7f64..1.4,
        x in -3.0f64..3.0,
        b in prop_oneof![-0.03f64..-0.005, 0.005f64..0.03],
    ) {
        let (_, u) = plant(lambda, x, b);
        let guess = ModulationState::exact(1.02 * lambda, x + 0.03, 0.9 * b, GAMMA, 0.0, &opts().reference_grid);
        let s = decompose_with(&u, ps(), &guess, &opts()).unwrap();
        prop_assert!((s.lambda - lambda).abs() < 1e-8, "{} vs {}", s.lambda, lambda);
        prop_assert!((s.x_center - x).abs() < 1e-8);
        prop_assert!((s.b - b).abs() < 1e-8);
        prop_assert!(s.epsilon.max_abs() < 1e-7);
    }

    #[test]
    fn decomposition_is_idempotent(amp in 2e-4f64..2e-3, c in -2.0f64..2.0) {
        let o = DecomposeOptions { delta0: f64::INFINITY, ..opts() };
        let (s0, u) = plant(1.1, 0.5, -0.02);
        let u = u.map_with_point(|x, v| v + amp * (-(x - c) * (x - c)).exp());
        let s1 = decompose_with(&u, ps(), &s0, &o).unwrap();
        let again = decompose_with(&u, ps(), &s1, &o).unwrap();
        prop_assert!((again.lambda - s1.lambda).abs() < 1e-12);
        prop_assert!((again.x_center - s1.x_center).abs() < 1e-12);
        prop_assert!((again.b - s1.b).abs() < 1e-12);
        for p in orthogonality_pairings(&s1) {
            prop_assert!(p.abs() < 1e-9, "{}", p);
        }
        // rebuilding from (λ, x̄, b, ε) and decomposing again returns the same state
        let rebuilt = reconstruct(&s1, ps(), &xgrid()).unwrap();
        let s2 = decompose_with(&rebuilt, ps(), &s0, &o).unwrap();
        prop_assert!((s2.lambda - s1.lambda).abs() < 1e-7);
        prop_assert!((s2.x_center - s1.x_center).abs() < 1e-7);
        prop_assert!((s2.b - s1.b).abs() < 1e-7);
    }

    #[test]
    fn f0_scales_like_inverse_lambda_squared(lambda in 0.3f64..2.0, amp in 1e-3f64..1e-2) {
        let g = opts().reference_grid;
        let mut s = ModulationState::exact(1.0, 0.0, -0.02, GAMMA, 0.0, &g);
        s.epsilon = g.sample(|y| amp * y * (-y * y / 4.0).exp());
        let unit = f0_diagnostic(&s, ps(), 100.0).unwrap();
        s.lambda = lambda;
        let scaled = f0_diagnostic(&s, ps(), 100.0).unwrap();
        prop_assert!((scaled.value * lambda * lambda - unit.value).abs() <= 1e-12 * unit.value.abs().max(1e-300));
        prop_assert!((scaled.weighted_norm * lambda * lambda - unit.weighted_norm).abs() <= 1e-12 * unit.weighted_norm);
    }
}

// F₀(cε)/c² tends to its quadratic part linearly in c.
#[test]
fn f0_is_quadratic_for_small_perturbations() {
    let g = opts().reference_grid;
    // even, so the cubic term does not cancel against the nearly even Q_b
    let shape = |y: f64| (-y * y / 4.0).exp();
    let value = |c: f64| {
        let mut s = ModulationState::exact(1.0, 0.0, -0.02, GAMMA, 0.0, &g);
        s.epsilon = g.sample(|y| c * shape(y));
        f0_diagnostic(&s, ps(), 100.0).unwrap().value / (c * c)
    };
    let (a, b, c) = (value(4e-2), value(2e-2), value(1e-2));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}

// Finite differences of the pairings of ε(y) = λ^{1/2}u(λy + x̄) - Q_b(y) for a closed-form u.
#[test]
fn jacobian_matches_finite_differences() {
    let (mu, xi) = (0.95, 0.4);
    let u_exact = |x: f64| soliton::q((x - xi) / mu) / mu.sqrt();
    let u = xgrid().sample(u_exact);
    let o = opts();
    let grid = o.newton_grid;
    let pairings = |p: [f64; 3]| -> [f64; 3] {
        let qb = localized_profile_on(ps(), p[2], GAMMA, &grid).unwrap().values;
        let h = grid.spacing();
        let mut out = [0.0; 3];
        for i in 0..grid.len() {
            let y = grid.point(i);
            let w = if i == 0 || i == grid.len() - 1 { 0.5 * h } else { h };
            let e = p[0].sqrt() * u_exact(p[0] * y + p[1]) - qb.values()[i];
            let lq = soliton::lambda_q(y);
            out[0] += w * e * y * lq;
            out[1] += w * e * lq;
            out[2] += w * e * soliton::q(y);
        }
        out
    };
    let p = [1.0, 0.3, -0.015];
    let state = ModulationState::exact(p[0], p[1], p[2], GAMMA, 0.0, &o.reference_grid);
    let jac = pairing_jacobian(&u, ps(), &state, &o).unwrap();
    let step = 1e-5;
    let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..3 {
        let (mut plus, mut minus) = (p, p);
        plus[j] += step;
        minus[j] -= step;
        let (fp, fm) = (pairings(plus), pairings(minus));
        for i in 0..3 {
            let fd = (fp[i] - fm[i]) / (2.0 * step);
            assert!(
                (jac[i][j] - fd).abs() < 1e-5 * scale,
                "J[{i}][{j}] = {} vs {fd}",
                jac[i][j]
            );
        }
    }
}
