//! Library-level runs of the detector and the baseline on synthetic data.

use scalesteer::detector::{
    calibrate_multichannel, calibration_radii, default_calibration, detect, DetectorConfig,
    Polarity, CALIBRATION_SIZE,
};
use scalesteer::evalkit::{default_log_sigmas, jaccard, log_baseline, match_detections};
use scalesteer::io::{read_image, write_image_u16, IntensityScaling};
use scalesteer::simdata::{gen_scene, render_disks, Disk, FbmParams, SceneParams};

fn scene(seed: u64) -> (scalesteer::simdata::GroundTruthScene, ndarray::Array2<f64>) {
    let p = SceneParams {
        rows: 256,
        cols: 256,
        disks: 8,
        radius_min: 8.0,
        radius_max: 24.0,
        ..SceneParams::default()
    };
    gen_scene(seed, &p, &FbmParams::default()).unwrap()
}

#[test]
fn shipped_calibration_matches_a_fresh_fit() {
    let fresh = calibrate_multichannel(
        &DetectorConfig::default(),
        CALIBRATION_SIZE,
        &calibration_radii(),
    )
    .unwrap();
    assert_eq!(fresh.to_csv(), default_calibration().to_csv());
}

#[test]
fn isolated_disks_are_found_with_accurate_radii() {
    let disks = [
        Disk {
            x: 60.0,
            y: 64.0,
            radius: 10.0,
            amplitude: 1.0,
        },
        Disk {
            x: 180.0,
            y: 70.0,
            radius: 18.0,
            amplitude: 1.0,
        },
        Disk {
            x: 120.0,
            y: 180.0,
            radius: 28.0,
            amplitude: 1.0,
        },
    ];
    let image = render_disks(256, 256, &disks);
    let dets = detect(&image, &DetectorConfig::default()).unwrap();
    let m = match_detections(&dets, &disks, 5.0);
    // Precision is not pinned here: a large detection spanning the gap
    // between two spots can survive; the robustness check in
    // tests/acceptance.rs reports the corpus-level effect.
    assert_eq!(m.true_positives(), 3, "{dets:?}");
    assert!(
        m.false_positives.iter().all(|&i| dets[i].radius > 40.0),
        "{dets:?}"
    );
    for p in &m.pairs {
        let (d, t) = (&dets[p.detection], &disks[p.truth]);
        assert!(
            (d.radius - t.radius).abs() < 0.1 * t.radius,
            "{d:?} vs {t:?}"
        );
        assert!(p.distance < 1.0);
    }
}

#[test]
fn dark_polarity_finds_inverted_disks() {
    let disks = [Disk {
        x: 128.0,
        y: 128.0,
        radius: 14.0,
        amplitude: 1.0,
    }];
    let image = render_disks(256, 256, &disks).mapv(|v| 1.0 - v);
    let bright = detect(&image, &DetectorConfig::default()).unwrap();
    let dark = detect(
        &image,
        &DetectorConfig {
            polarity: Polarity::Dark,
            ..DetectorConfig::default()
        },
    )
    .unwrap();
    assert_eq!(
        jaccard(&match_detections(&dark, &disks, 5.0)),
        1.0,
        "{dark:?}"
    );
    assert!(match_detections(&bright, &disks, 5.0).true_positives() == 0 || bright.len() > 1);
}

#[test]
fn detector_and_baseline_handle_noiseless_scenes() {
    let config = DetectorConfig::default();
    let (mut ours, mut log) = (0.0, 0.0);
    for seed in 0..4 {
        let (s, image) = scene(seed);
        ours += jaccard(&match_detections(
            &detect(&image, &config).unwrap(),
            &s.disks,
            5.0,
        ));
        let base = log_baseline(&image, &default_log_sigmas(), &config).unwrap();
        log += jaccard(&match_detections(&base, &s.disks, 5.0));
    }
    assert!(ours / 4.0 > 0.7, "multichannel mean J {}", ours / 4.0);
    assert!(log / 4.0 > 0.7, "LoG mean J {}", log / 4.0);
}

#[test]
fn detections_survive_a_16_bit_round_trip() {
    let (_, image) = scene(9);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.png");
    write_image_u16(&path, &image, &IntensityScaling::fit(&image)).unwrap();
    let loaded = read_image(&path).unwrap();
    let config = DetectorConfig::default();
    let a = detect(&image, &config).unwrap();
    let b = detect(&loaded, &config).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!(
            (x.x - y.x).abs() < 0.05 && (x.y - y.y).abs() < 0.05,
            "{x:?} vs {y:?}"
        );
        assert!((x.radius - y.radius).abs() < 0.05);
    }
}
