use gkdv_core::grid::Grid;
use gkdv_core::linearized::{apply_l, LinearizedOperator};
use gkdv_core::soliton::{self, gn_ratio, mass};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn line() -> Grid {
    Grid::line_with_spacing(-40.0, 40.0, 1.0 / 64.0).unwrap()
}

// L = -∂² + 1 - 5Q⁴ with 5Q⁴ = 15 sech²(2y): a Pöschl-Teller well with bound states at -8 and 0.
#[test]
fn dense_operator_has_exact_bound_states() {
    let h = 1.0 / 16.0;
    let half = 12.0;
    let n = (2.0 * half / h) as usize + 1;
    let y = |i: usize| -half + i as f64 * h;
    // fourth-order centered second difference, Dirichlet outside
    let w = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = j as isize - i as isize;
        let mut v = if d.abs() <= 2 {
            -w[(d + 2) as usize] / (h * h)
        } else {
            0.0
        };
        if i == j {
            v += 1.0 - 5.0 * soliton::q(y(i)).powi(4);
        }
        v
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert!((ev[0] + 8.0).abs() < 1e-3, "{}", ev[0]);
    assert!(ev[1].abs() < 1e-3, "{}", ev[1]);
    assert!(ev[2] > 0.99, "{}", ev[2]);
}

#[test]
fn operator_matches_pointwise_formula() {
    let g = Grid::line_with_spacing(-20.0, 20.0, 1.0 / 128.0).unwrap();
    let op = LinearizedOperator::new(&g).unwrap();
    // f = e^{-y²}: Lf = (-4y² + 2)e^{-y²} + (1 - 5Q⁴)e^{-y²}
    let f = g.sample(|y| (-y * y).exp());
    let lf = apply_l(&op, &f).unwrap();
    for (i, v) in lf.values().iter().enumerate().step_by(97) {
        let y = g.point(i);
        let exact = (-4.0 * y * y + 2.0 + 1.0 - 5.0 * soliton::q(y).powi(4)) * (-y * y).exp();
        assert!((v - exact).abs() < 1e-7, "y = {y}: {v} vs {exact}");
    }
}

fn rescaled(lambda: f64, x0: f64, g: &Grid) -> gkdv_core::grid::GridFunction {
    g.sample(|x| soliton::q((x - x0) / lambda) / lambda.sqrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gn_equality_on_rescaled_solitons(lambda in 0.6f64..2.0, x0 in -5.0f64..5.0) {
        let r = gn_ratio(&rescaled(lambda, x0, &line())).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-6, "{}", r);
    }

    #[test]
    fn gn_ratio_at_most_one(
        a in prop::collection::vec(-2.0f64..2.0, 3),
        c in prop::collection::vec(-6.0f64..6.0, 3),
        w in prop::collection::vec(0.4f64..3.0, 3),
    ) {
        let g = line();
        let v = g.sample(|x| (0..3).map(|k| a[k] * (-((x - c[k]) / w[k]).powi(2)).exp()).sum());
        prop_assume!(mass(&v) > 1e-3);
        let r = gn_ratio(&v).unwrap();
        prop_assert!(r <= 1.0 + 1e-8, "{}", r);
    }

    #[test]
    fn mass_is_scale_invariant(lambda in 0.6f64..2.0, x0 in -5.0f64..5.0) {
        let m = mass(&rescaled(lambda, x0, &line()));
        prop_assert!((m - soliton::mass_closed_form()).abs() < 1e-9);
    }
}
