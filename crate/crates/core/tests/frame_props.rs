use ndarray::Array2;
use proptest::prelude::*;

use scalesteer::frame::{analyze, synthesize, FilterBank, MeyerProfile, RadialNorm};
use scalesteer::multipliers::{
    MultiplierBank, RadialMultipliers, SteeringOperator, TrigMultiplierSpec,
};

fn image(values: &[f64], n: usize) -> Array2<f64> {
    Array2::from_shape_vec((n, n), values.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extended_frame_is_tight(
        values in prop::collection::vec(-10.0f64..10.0, 32 * 32),
        eps in 0.05f64..0.9,
        dilation in 0.5f64..3.0,
        sup in any::<bool>(),
    ) {
        let n = 32;
        let f = image(&values, n);
        let profile = MeyerProfile::new(eps).unwrap();
        let j = FilterBank::max_scales(n, n, &profile);
        let norm = if sup { RadialNorm::Max } else { RadialNorm::Euclidean };
        let bank = FilterBank::new(n, j, profile, norm).unwrap();
        let m = MultiplierBank::evaluate(&TrigMultiplierSpec::bspline_nine(), bank.grid(), dilation);
        let pyr = analyze(&f, &bank, Some(&m)).unwrap();
        let back = synthesize(&pyr, &bank, Some(&m)).unwrap();
        let e: f64 = f.iter().map(|v| v * v).sum::<f64>() / (n * n) as f64;
        let err: f64 = back.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (n * n) as f64;
        prop_assert!(err.sqrt() <= 1e-10 * e.sqrt().max(1e-300));
        prop_assert!((pyr.energy() - e).abs() <= 1e-10 * e.max(1e-300));
    }

    #[test]
    fn multipliers_square_sum_to_one(log_rho in -12.0f64..2.0, dilation in 0.1f64..10.0) {
        let v = TrigMultiplierSpec::bspline_nine().eval(dilation * log_rho.exp2());
        let s: f64 = v.iter().map(|m| m * m).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steering_composes(la in -4.0f64..4.0, lb in -4.0f64..4.0, lc in -4.0f64..4.0) {
        let op = SteeringOperator::new(&TrigMultiplierSpec::bspline_nine());
        let (a, b, c) = (la.exp2(), lb.exp2(), lc.exp2());
        let lhs = op.transform(b, c).unwrap().dot(&op.transform(a, b).unwrap());
        let rhs = op.transform(a, c).unwrap();
        let d = (&lhs - &rhs).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(d < 1e-10);
    }

    #[test]
    fn steering_maps_family_onto_dilate(la in -3.0f64..3.0, lb in -3.0f64..3.0, log_rho in -10.0f64..1.5) {
        let spec = TrigMultiplierSpec::bspline_nine();
        let op = SteeringOperator::new(&spec);
        let (a, b, rho) = (la.exp2(), lb.exp2(), log_rho.exp2());
        let t = op.transform(a, b).unwrap();
        let src = spec.eval(a * rho);
        let want = spec.eval(b * rho);
        for (row, w) in t.rows().into_iter().zip(&want) {
            let z: num_complex::Complex64 = row.iter().zip(&src).map(|(t, &v)| t * v).sum();
            prop_assert!((z.re - w).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
    }
}
