//! Two-dimensional DFT on row-major rasters.
//!
//! Forward transforms are unnormalized; inverse transforms divide by the
//! number of pixels, so `inverse(forward(x)) == x`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn forward_real(&self, image: &Array2<f64>) -> Array2<Complex64> {
        let mut data = image.mapv(|v| Complex64::new(v, 0.0));
        self.forward(&mut data);
        data
    }

    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.transform(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.transform(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.rows * self.cols) as f64;
        data.mapv_inplace(|v| v * scale);
    }

    fn transform(
        &self,
        data: &mut Array2<Complex64>,
        row_fft: &Arc<dyn Fft<f64>>,
        col_fft: &Arc<dyn Fft<f64>>,
    ) {
        assert_eq!(data.dim(), (self.rows, self.cols), "raster shape");
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().into_owned();
        }
        let rows = self.rows;
        let cols = self.cols;
        let slice = data.as_slice_mut().expect("standard layout");
        par::for_each_chunk_mut(slice, cols, |_, row| row_fft.process(row));

        // Columns go through a transposed scratch buffer.
        let mut t = vec![Complex64::new(0.0, 0.0); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = slice[r * cols + c];
            }
        }
        par::for_each_chunk_mut(&mut t, rows, |_, col| col_fft.process(col));
        for c in 0..cols {
            for r in 0..rows {
                slice[r * cols + c] = t[c * rows + r];
            }
        }
    }
}
