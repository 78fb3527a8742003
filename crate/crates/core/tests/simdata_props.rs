use proptest::prelude::*;

use scalesteer::simdata::{
    derive_seed, gen_fbm, gen_scene, overlap_violations, FbmParams, SceneParams,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scenes_respect_layout(seed in any::<u64>(), disks in 0usize..25, overlap in 0.0f64..12.0) {
        let p = SceneParams { rows: 192, cols: 192, disks, radius_min: 4.0, radius_max: 16.0, max_overlap: overlap, ..SceneParams::default() };
        let Ok((scene, image)) = gen_scene(seed, &p, &FbmParams::default()) else {
            return Ok(());
        };
        prop_assert_eq!(scene.disks.len(), disks);
        prop_assert!(overlap_violations(&scene.disks, overlap).is_empty());
        for d in &scene.disks {
            prop_assert!((4.0..=16.0).contains(&d.radius));
            prop_assert!(d.x >= d.radius && d.x <= 191.0 - d.radius);
            prop_assert!(d.y >= d.radius && d.y <= 191.0 - d.radius);
        }
        prop_assert!(image.iter().all(|v| (0.0..=1.0).contains(v)));
        let (again, image2) = gen_scene(seed, &p, &FbmParams::default()).unwrap();
        prop_assert_eq!(scene, again);
        prop_assert_eq!(image, image2);
    }

    #[test]
    fn fbm_hits_target_moments(seed in any::<u64>(), std in 0.1f64..10.0, exponent in 1.0f64..4.0) {
        let f = gen_fbm(&FbmParams { exponent, std, seed }, 64, 64).unwrap();
        let n = f.len() as f64;
        let mean = f.sum() / n;
        let sd = (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(mean.abs() < 1e-12 * std.max(1.0));
        prop_assert!((sd - std).abs() < 0.01 * std);
    }

    #[test]
    fn derived_seeds_differ(base in any::<u64>(), i in 0u64..1000, k in 1u64..1000) {
        prop_assert_ne!(derive_seed(base, i), derive_seed(base, i + k));
    }
}
