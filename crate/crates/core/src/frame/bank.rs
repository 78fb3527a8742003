use std::hash::{Hash, Hasher};

use ndarray::Array2;

use super::grid::{FrequencyGrid, RadialNorm};
use super::profile::MeyerProfile;
use crate::error::{Error, Result};
use crate::fft::Fft2;

/// Radial dyadic filter bank on a periodic `rows x cols` grid.
///
/// Scale `s` (0-based, finest first) uses the mask `h(2^s rho)`. A lowpass
/// residual collects every coarser octave and a highpass residual whatever
/// the finer octaves would have covered, so the squared masks sum to one
/// at every DFT bin.
#[derive(Debug, Clone)]
pub struct FilterBank {
    rows: usize,
    cols: usize,
    scales: usize,
    profile: MeyerProfile,
    grid: FrequencyGrid,
    masks: Vec<Array2<f64>>,
    lowpass: Array2<f64>,
    highpass: Array2<f64>,
    fft: Fft2,
    id: u64,
}

impl FilterBank {
    /// Square `n x n` bank.
    pub fn new(n: usize, scales: usize, profile: MeyerProfile, norm: RadialNorm) -> Result<Self> {
        Self::with_shape(n, n, scales, profile, norm)
    }

    pub fn with_shape(
        rows: usize,
        cols: usize,
        scales: usize,
        profile: MeyerProfile,
        norm: RadialNorm,
    ) -> Result<Self> {
        for (name, n) in [("rows", rows), ("cols", cols)] {
            if n < 32 || n % 2 != 0 {
                return Err(Error::invalid(format!(
                    "grid {name} must be even and at least 32, got {n}"
                )));
            }
        }
        if scales == 0 {
            return Err(Error::invalid("a filter bank needs at least one scale"));
        }
        let max = Self::max_scales(rows, cols, &profile);
        if scales > max {
            let lower_edge = profile.support().0 / 2f64.powi(scales as i32 - 1);
            return Err(Error::TooManyScales {
                scales,
                rows,
                cols,
                lower_edge,
                resolution: 2.0 * std::f64::consts::PI / rows.min(cols) as f64,
            });
        }

        let grid = FrequencyGrid::new(rows, cols, norm);
        let radius = grid.radius();
        let masks: Vec<Array2<f64>> = (0..scales)
            .map(|s| {
                let dil = 2f64.powi(s as i32);
                radius.mapv(|rho| profile.eval(dil * rho))
            })
            .collect();
        let lowpass = radius.mapv(|rho| {
            if rho == 0.0 {
                1.0
            } else {
                profile
                    .dyadic_energy_range(rho, scales as i32, i32::MAX)
                    .sqrt()
            }
        });
        let mut highpass = Array2::zeros((rows, cols));
        for ((idx, h), low) in highpass.indexed_iter_mut().zip(lowpass.iter()) {
            let mut used = low * low;
            for m in &masks {
                used += m[idx] * m[idx];
            }
            *h = (1.0 - used).max(0.0).sqrt();
        }

        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        (rows, cols, scales).hash(&mut hasher);
        profile.epsilon().to_bits().hash(&mut hasher);
        norm.hash(&mut hasher);
        let id = hasher.finish();

        Ok(FilterBank {
            rows,
            cols,
            scales,
            profile,
            grid,
            masks,
            lowpass,
            highpass,
            fft: Fft2::new(rows, cols),
            id,
        })
    }

    /// Largest scale count whose coarsest band still starts at or above the
    /// DFT frequency resolution.
    pub fn max_scales(rows: usize, cols: usize, profile: &MeyerProfile) -> usize {
        let resolution = 2.0 * std::f64::consts::PI / rows.min(cols) as f64;
        let lo = profile.support().0;
        let mut j = 0;
        while lo / 2f64.powi(j as i32) >= resolution {
            j += 1;
        }
        j
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn profile(&self) -> &MeyerProfile {
        &self.profile
    }

    pub fn norm(&self) -> RadialNorm {
        self.grid.norm()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn mask(&self, scale: usize) -> &Array2<f64> {
        &self.masks[scale]
    }

    pub fn masks(&self) -> &[Array2<f64>] {
        &self.masks
    }

    pub fn lowpass(&self) -> &Array2<f64> {
        &self.lowpass
    }

    pub fn highpass(&self) -> &Array2<f64> {
        &self.highpass
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Identity used to tie pyramids to the bank that produced them.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Largest deviation of the squared-mask sum from one.
    pub fn partition_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (idx, low) in self.lowpass.indexed_iter() {
            let mut acc = low * low + self.highpass[idx] * self.highpass[idx];
            for m in &self.masks {
                acc += m[idx] * m[idx];
            }
            worst = worst.max((acc - 1.0).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank(n: usize, j: usize, norm: RadialNorm) -> FilterBank {
        FilterBank::new(n, j, MeyerProfile::default(), norm).unwrap()
    }

    #[test]
    fn partition_of_unity_128() {
        let b = bank(128, 3, RadialNorm::Euclidean);
        assert!(b.partition_defect() < 1e-10);
    }

    #[test]
    fn single_scale_bank() {
        let b = bank(64, 1, RadialNorm::Euclidean);
        assert_eq!(b.masks().len(), 1);
        assert!(b.partition_defect() < 1e-10);
    }

    #[test]
    fn max_norm_partition() {
        let b = bank(64, 3, RadialNorm::Max);
        assert!(b.partition_defect() < 1e-10);
    }

    #[test]
    fn too_many_scales_rejected() {
        let err = FilterBank::new(32, 8, MeyerProfile::default(), RadialNorm::Euclidean);
        assert!(matches!(err, Err(Error::TooManyScales { .. })));
        assert_eq!(FilterBank::max_scales(32, 32, &MeyerProfile::default()), 2);
        assert_eq!(
            FilterBank::max_scales(512, 512, &MeyerProfile::default()),
            6
        );
    }

    #[test]
    fn rejects_odd_or_small_grid() {
        let p = MeyerProfile::default();
        assert!(FilterBank::new(31, 1, p, RadialNorm::Euclidean).is_err());
        assert!(FilterBank::new(16, 1, p, RadialNorm::Euclidean).is_err());
        assert!(FilterBank::new(64, 0, p, RadialNorm::Euclidean).is_err());
    }

    #[test]
    fn masks_nonnegative_and_quarter_turn_invariant() {
        let b = bank(64, 3, RadialNorm::Euclidean);
        let n = 64;
        let all = b.masks().iter().chain([b.lowpass(), b.highpass()]);
        for m in all {
            for y in 0..n {
                for x in 0..n {
                    assert!(m[[y, x]] >= 0.0);
                    assert_eq!(m[[y, x]], m[[x, (n - y) % n]]);
                }
            }
        }
    }

    #[test]
    fn lowpass_owns_dc() {
        let b = bank(64, 2, RadialNorm::Euclidean);
        assert_eq!(b.lowpass()[[0, 0]], 1.0);
        assert_eq!(b.highpass()[[0, 0]], 0.0);
        for m in b.masks() {
            assert_eq!(m[[0, 0]], 0.0);
        }
    }
}
