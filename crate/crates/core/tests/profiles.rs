use gkdv_core::grid::Grid;
use gkdv_core::profiles::{build_profiles, mass_gap};
use gkdv_core::soliton;
use nalgebra::{DMatrix, DVector};

// LP₁ = -∫_y^∞ ΛQ with P₁(-∞) = ½‖Q‖_{L¹}, P₁(+∞) = 0 and (P₁, Q') = 0, solved densely.
#[test]
fn first_profile_matches_dense_solve() {
    let (left, right, h) = (-30.0, 16.0, 1.0 / 16.0);
    let n = ((right - left) / h) as usize + 1;
    let y = |i: usize| left + i as f64 * h;
    let l1 = soliton::l1_closed_form();

    // ∫_y^∞ ΛQ by Simpson on a fine sub-grid, accumulated from the right
    let sub = 8;
    let mut tail = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let (a, b) = (y(i), y(i + 1));
        let hh = (b - a) / sub as f64;
        let mut s = 0.0;
        for j in 0..sub {
            let x0 = a + j as f64 * hh;
            s += hh / 6.0
                * (soliton::lambda_q(x0) + 4.0 * soliton::lambda_q(x0 + hh / 2.0) + soliton::lambda_q(x0 + hh));
        }
        tail[i] = tail[i + 1] + s;
    }

    let w = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    let boundary = |k: isize| if k < 0 { 0.5 * l1 } else { 0.0 };
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        rhs[i] = -tail[i];
        for (k, wk) in w.iter().enumerate() {
            let j = i as isize + k as isize - 2;
            let c = -wk / (h * h);
            if (0..n as isize).contains(&j) {
                a[(i, j as usize)] += c;
            } else {
                rhs[i] -= c * boundary(j);
            }
        }
        a[(i, i)] += 1.0 - 5.0 * soliton::q(y(i)).powi(4);
    }
    let p = a.lu().solve(&rhs).unwrap();
    // remove the kernel component picked up through the boundary data
    let qp: DVector<f64> = DVector::from_fn(n, |i, _| soliton::q_prime(y(i)));
    let p = &p - &qp * (p.dot(&qp) / qp.dot(&qp));

    let ps = build_profiles(2, &Grid::line_with_spacing(-80.0, 32.0, 1.0 / 32.0).unwrap()).unwrap();
    for i in (0..n).step_by(23) {
        if y(i) < -20.0 {
            continue;
        }
        assert!(
            (ps.eval(1, y(i)) - p[i]).abs() < 2e-4,
            "y = {}: {} vs {}",
            y(i),
            ps.eval(1, y(i)),
            p[i]
        );
    }
}

// ∫Q_b² - ∫Q² - 2b(P, Q) shrinks with |b|.
#[test]
fn mass_gap_decreases_with_b() {
    let grid = Grid::line_with_spacing(-120.0, 40.0, 1.0 / 32.0).unwrap();
    let ps = build_profiles(3, &grid).unwrap();
    let mut last = f64::INFINITY;
    for b in [-0.08, -0.05, -0.03, -0.02] {
        let gap = mass_gap(&ps, b, 0.9, &grid).unwrap();
        assert!(gap.is_finite() && gap.abs() < last, "b = {b}: {gap}");
        last = gap.abs();
    }
}
