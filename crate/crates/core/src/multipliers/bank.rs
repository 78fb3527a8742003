use std::hash::{DefaultHasher, Hash, Hasher};

use ndarray::Array2;
use num_complex::Complex64;

use super::family::RadialMultipliers;
use crate::error::{Error, Result};
use crate::frame::FrequencyGrid;
use crate::par;

/// A multiplier family evaluated on a DFT grid, optionally dilated:
/// channel `n` holds `M_n(a w)` at every bin. The value at `w = 0` is zero.
#[derive(Debug, Clone)]
pub struct MultiplierBank {
    values: Vec<Array2<Complex64>>,
    real: bool,
    id: u64,
}

impl MultiplierBank {
    pub fn evaluate<F>(family: &F, grid: &FrequencyGrid, dilation: f64) -> Self
    where
        F: RadialMultipliers + ?Sized,
    {
        assert!(dilation > 0.0, "dilation must be positive");
        let (rows, cols) = grid.shape();
        let n = family.channels();
        let radius = grid.radius();
        // Evaluate row by row, then scatter into per-channel rasters.
        let per_row: Vec<Vec<f64>> = par::map_range(rows, |r| {
            let mut buf = vec![0.0; n];
            let mut row = vec![0.0; n * cols];
            for c in 0..cols {
                let rho = radius[[r, c]];
                if rho > 0.0 {
                    family.eval_into(dilation * rho, &mut buf);
                    row[c * n..(c + 1) * n].copy_from_slice(&buf);
                }
            }
            row
        });
        let values = (0..n)
            .map(|k| {
                Array2::from_shape_fn((rows, cols), |(r, c)| {
                    Complex64::new(per_row[r][c * n + k], 0.0)
                })
            })
            .collect();

        let mut h = DefaultHasher::new();
        family.id().hash(&mut h);
        dilation.to_bits().hash(&mut h);
        MultiplierBank {
            values,
            real: true,
            id: h.finish(),
        }
    }

    /// Values of a dilated family at scalar radial frequencies
    /// (`result[i][n] = M_n(a rho_i)`, zero at `rho = 0`).
    pub fn at_frequencies<F>(family: &F, rhos: &[f64], dilation: f64) -> Vec<Vec<f64>>
    where
        F: RadialMultipliers + ?Sized,
    {
        rhos.iter()
            .map(|&rho| {
                if rho > 0.0 {
                    family.eval(dilation * rho)
                } else {
                    vec![0.0; family.channels()]
                }
            })
            .collect()
    }

    /// Applies a matrix `V` (`n' x n`) across channels, producing `V M`.
    /// With `V* V = I` the result is again admissible.
    pub fn shaped(&self, v: &Array2<Complex64>) -> Result<Self> {
        let n = self.channels();
        if v.ncols() != n {
            return Err(Error::invalid(format!(
                "shaping matrix has {} columns, bank has {} channels",
                v.ncols(),
                n
            )));
        }
        let shape = self.shape();
        let values: Vec<Array2<Complex64>> = (0..v.nrows())
            .map(|i| {
                let mut out = Array2::zeros(shape);
                for (j, src) in self.values.iter().enumerate() {
                    let w = v[[i, j]];
                    if w != Complex64::new(0.0, 0.0) {
                        out.zip_mut_with(src, |o, s| *o += w * s);
                    }
                }
                out
            })
            .collect();
        let real = values.iter().all(|m| m.iter().all(|z| z.im == 0.0));
        let mut h = DefaultHasher::new();
        self.id.hash(&mut h);
        for z in v.iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        Ok(MultiplierBank {
            values,
            real,
            id: h.finish(),
        })
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.first().map(|v| v.dim()).unwrap_or((0, 0))
    }

    pub fn channel(&self, n: usize) -> &Array2<Complex64> {
        &self.values[n]
    }

    /// True when every multiplier value is real.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// `sup_w |sum_n |M_n(w)|^2 - 1|` over all bins except the origin.
    pub fn admissibility_defect(&self) -> f64 {
        let (rows, cols) = self.shape();
        let mut worst: f64 = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                if r == 0 && c == 0 {
                    continue;
                }
                let s: f64 = self.values.iter().map(|m| m[[r, c]].norm_sqr()).sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }
}

/// Admissibility defect of a family on a grid.
pub fn admissibility_defect<F>(family: &F, grid: &FrequencyGrid) -> f64
where
    F: RadialMultipliers + ?Sized,
{
    MultiplierBank::evaluate(family, grid, 1.0).admissibility_defect()
}
