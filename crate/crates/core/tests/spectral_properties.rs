use approx::assert_abs_diff_eq;
use fracback_core::spectral::{
    aliasing_tail, basis, discrete_coefficient, frac_laplacian_apply, node, norm, project_samples, synthesize,
    GridSamples, NormSpec, SpectralField,
};
use proptest::prelude::*;

fn field_strategy(max_cap: usize) -> impl Strategy<Value = SpectralField> {
    (1..=max_cap).prop_flat_map(|cap| {
        prop::collection::vec(-2.0..2.0f64, cap + 1).prop_map(|c| SpectralField::new(c).unwrap())
    })
}

#[test]
fn discrete_orthonormality() {
    for n in [2usize, 5, 8, 17, 32] {
        for p in 1..n {
            for q in 1..n {
                let s: f64 = (1..=n).map(|k| basis(p, node(k, n)) * basis(q, node(k, n))).sum::<f64>()
                    * std::f64::consts::PI
                    / n as f64;
                let expected = if p == q { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s, expected, epsilon = 1e-12);
            }
        }
        let ones = GridSamples::new(vec![1.0; n]).unwrap();
        assert_abs_diff_eq!(discrete_coefficient(&ones, 0).unwrap(), 1.0, epsilon = 1e-15);
    }
}

proptest! {
    #[test]
    fn aliasing_recovers_coefficients(n in 2usize..20, field in field_strategy(60)) {
        let field = field.resized(field.cap().min(3 * n));
        let samples = synthesize(&field, n).unwrap();
        for p in 0..n {
            let recovered = discrete_coefficient(&samples, p).unwrap() - aliasing_tail(&field, n, p).unwrap();
            let exact = if p == 0 { field.get(0) / std::f64::consts::PI.sqrt() } else { field.get(p) };
            prop_assert!((recovered - exact).abs() <= 1e-9, "p = {p}: {recovered} vs {exact}");
        }
    }

    #[test]
    fn bandlimited_exactness(n in 3usize..24, coeffs in prop::collection::vec(-3.0..3.0f64, 1..24)) {
        let cap = (coeffs.len() - 1).min(n - 1);
        let field = SpectralField::new(coeffs[..=cap].to_vec()).unwrap();
        let samples = synthesize(&field, n).unwrap();
        for p in 1..n {
            prop_assert_eq!(aliasing_tail(&field, n, p).unwrap(), 0.0);
            prop_assert!((discrete_coefficient(&samples, p).unwrap() - field.get(p)).abs() <= 1e-12);
        }
    }

    #[test]
    fn parseval_round_trip(n in 4usize..40, coeffs in prop::collection::vec(-3.0..3.0f64, 1..40)) {
        let cap = (coeffs.len() - 1).min(n - 1);
        let field = SpectralField::new(coeffs[..=cap].to_vec()).unwrap();
        let back = project_samples(&synthesize(&field, n).unwrap(), cap).unwrap();
        let a = norm(&field, NormSpec::L2).unwrap();
        let b = norm(&back, NormSpec::L2).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn fractional_powers_compose(field in field_strategy(30), b1 in 0.1..2.0f64, b2 in 0.1..2.0f64, s in -3.0..3.0f64) {
        let lhs = frac_laplacian_apply(&frac_laplacian_apply(&field, b1).unwrap(), b2).unwrap();
        let rhs = frac_laplacian_apply(&field, b1 + b2).unwrap();
        for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
        let scaled = frac_laplacian_apply(&field.scaled(s), b1).unwrap();
        let expected = frac_laplacian_apply(&field, b1).unwrap().scaled(s);
        for (x, y) in scaled.coeffs().iter().zip(expected.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn sobolev_dominates_l2(field in field_strategy(30), gamma in 0.0..3.0f64) {
        let mut coeffs = field.into_coeffs();
        coeffs[0] = 0.0;
        let field = SpectralField::new(coeffs).unwrap();
        let l2 = norm(&field, NormSpec::L2).unwrap();
        let h = norm(&field, NormSpec::Sobolev { gamma }).unwrap();
        prop_assert!(l2 <= h * (1.0 + 1e-14));
    }
}
