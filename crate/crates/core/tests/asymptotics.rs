use gkdv_core::asymptotics::{fit_states, FitOptions};
use gkdv_core::grid::Grid;
use gkdv_core::modulation::ModulationState;
use proptest::prelude::*;

// λ = t + λ₀t³, b = -t² + b₀t⁴, x = x₀ - 1/t - c₀t, sampled on t ∈ [0.1, 0.4].
fn normalized(x0: f64) -> Vec<ModulationState> {
    let g = Grid::line(-1.0, 1.0, 16).unwrap();
    (0..61)
        .map(|i| {
            let t = 0.1 + 0.3 * i as f64 / 60.0;
            ModulationState::exact(
                t + 1.07 * t.powi(3),
                x0 - 1.0 / t - 2.14 * t,
                -t * t + 0.5 * t.powi(4),
                0.9,
                t,
                &g,
            )
        })
        .collect()
}

// u ↦ λ₁^{-1/2}u(t/λ₁³, x/λ₁) acts on the parameters as (t, λ, x̄, b) ↦ (λ₁³t, λ₁λ, λ₁x̄, b).
fn rescaled(states: &[ModulationState], l1: f64) -> Vec<ModulationState> {
    states
        .iter()
        .map(|s| {
            let mut r = s.clone();
            r.time_label *= l1.powi(3);
            r.lambda *= l1;
            r.x_center *= l1;
            r
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ell0_is_covariant_under_scaling(l1 in 0.7f64..1.4, x0 in -1.0f64..1.0) {
        let base = normalized(x0);
        let f = fit_states(&base, &FitOptions::default()).unwrap();
        let g = fit_states(&rescaled(&base, l1), &FitOptions::default()).unwrap();
        prop_assert!((g.ell0 * l1 * l1 / f.ell0 - 1.0).abs() < 1e-6, "{} vs {}", g.ell0 * l1 * l1, f.ell0);
        prop_assert!((g.t_star - l1.powi(3) * f.t_star).abs() < 1e-6);
        prop_assert!((g.x0 - l1 * f.x0).abs() < 1e-5 * (1.0 + f.x0.abs()));
    }
}
