//! Exact scale steering of a shifted trigonometric family.
//!
//! The family factors as `M_a(rho) = U D_a B(rho)` with
//! `[U]_{n,l} = N^{-1/2} exp(i k l log2 rho_n)`, `[D_a]_{l,l} = exp(i k l log2 a)`
//! and `k = 2 pi / sigma`, for harmonics `l = -L..=L`. Since `U* U = I`,
//! `T_{a,a'} = U D_{a'/a} U*` maps `M_a` onto `M_{a'}`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use super::spec::TrigMultiplierSpec;
use crate::error::{Error, Result};

/// Largest imaginary residue tolerated when steering real vectors.
pub const IMAG_RESIDUE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SteeringOperator {
    spec: TrigMultiplierSpec,
    u: Array2<Complex64>,
    u_adj: Array2<Complex64>,
}

impl SteeringOperator {
    pub fn new(spec: &TrigMultiplierSpec) -> Self {
        let n = spec.n_max();
        let l_max = spec.l_max() as i64;
        let k = 2.0 * PI / spec.sigma();
        let scale = 1.0 / (n as f64).sqrt();
        let u = Array2::from_shape_fn((n, 2 * l_max as usize + 1), |(row, col)| {
            let l = col as i64 - l_max;
            Complex64::from_polar(scale, k * l as f64 * spec.log_shift(row))
        });
        let u_adj = u.t().mapv(|z| z.conj());
        SteeringOperator {
            spec: spec.clone(),
            u,
            u_adj,
        }
    }

    pub fn spec(&self) -> &TrigMultiplierSpec {
        &self.spec
    }

    pub fn u(&self) -> &Array2<Complex64> {
        &self.u
    }

    /// Diagonal of `D_a`.
    pub fn d(&self, a: f64) -> Array1<Complex64> {
        self.phase_diagonal(a.log2())
    }

    fn phase_diagonal(&self, log_a: f64) -> Array1<Complex64> {
        let l_max = self.spec.l_max() as i64;
        let k = 2.0 * PI / self.spec.sigma();
        Array1::from_shape_fn(2 * l_max as usize + 1, |col| {
            let l = (col as i64 - l_max) as f64;
            Complex64::from_polar(1.0, k * l * log_a)
        })
    }

    /// The vector `B(rho)`.
    pub fn b(&self, rho: f64) -> Array1<Complex64> {
        let l_max = self.spec.l_max() as i64;
        let k = 2.0 * PI / self.spec.sigma();
        let x = rho.log2();
        let alpha = self.spec.alpha();
        Array1::from_shape_fn(2 * l_max as usize + 1, |col| {
            let l = col as i64 - l_max;
            if l == 0 {
                Complex64::new(alpha[0], 0.0)
            } else {
                Complex64::from_polar(
                    alpha[l.unsigned_abs() as usize] / 2f64.sqrt(),
                    k * l as f64 * x,
                )
            }
        })
    }

    /// `U D_a B(rho)`, i.e. the dilated multiplier vector `M_n(a rho)`.
    pub fn factored(&self, a: f64, rho: f64) -> Array1<Complex64> {
        let db = &self.d(a) * &self.b(rho);
        self.u.dot(&db)
    }

    /// `T_{a,a'} = U D_{a'/a} U*`.
    pub fn transform(&self, a: f64, a_prime: f64) -> Result<Array2<Complex64>> {
        if !(a > 0.0 && a_prime > 0.0) {
            return Err(Error::invalid(format!(
                "steering dilations must be positive, got {a} and {a_prime}"
            )));
        }
        Ok(self.transform_log(a_prime.log2() - a.log2()))
    }

    /// Steering matrix for a shift of `log_ratio` octaves.
    pub fn transform_log(&self, log_ratio: f64) -> Array2<Complex64> {
        let d = self.phase_diagonal(log_ratio);
        let mut ud = self.u.clone();
        for mut row in ud.rows_mut() {
            row *= &d;
        }
        ud.dot(&self.u_adj)
    }

    /// `U* w`: harmonic coefficients of a channel vector.
    pub fn harmonics(&self, w: ArrayView1<'_, f64>) -> Array1<Complex64> {
        let wc = w.mapv(|v| Complex64::new(v, 0.0));
        self.u_adj.dot(&wc)
    }
}

/// Free-function form of [`SteeringOperator::transform`].
pub fn steering_matrix(
    spec: &TrigMultiplierSpec,
    a: f64,
    a_prime: f64,
) -> Result<Array2<Complex64>> {
    SteeringOperator::new(spec).transform(a, a_prime)
}

/// Applies `t` to a real vector, checking the imaginary residue.
pub fn steer_real(t: &Array2<Complex64>, w: &[f64]) -> Result<Vec<f64>> {
    if t.ncols() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: (t.ncols(), 1),
            got: (w.len(), 1),
        });
    }
    let mut out = Vec::with_capacity(t.nrows());
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for row in t.rows() {
        let z: Complex64 = row.iter().zip(w).map(|(t, &v)| t * v).sum();
        if z.im.abs() > IMAG_RESIDUE_TOLERANCE * scale {
            return Err(Error::invalid(format!(
                "steered vector left the real span (imaginary part {:e})",
                z.im
            )));
        }
        out.push(z.re);
    }
    Ok(out)
}

/// Steers real coefficient rasters of one scale, pixel by pixel.
pub fn steer_coefficients(
    t: &Array2<Complex64>,
    channels: &[Array2<f64>],
) -> Result<Vec<Array2<f64>>> {
    if t.ncols() != channels.len() || t.nrows() != channels.len() {
        return Err(Error::invalid(format!(
            "steering matrix is {}x{} but {} channels were given",
            t.nrows(),
            t.ncols(),
            channels.len()
        )));
    }
    let shape = channels[0].dim();
    if let Some(bad) = channels.iter().find(|c| c.dim() != shape) {
        return Err(Error::DimensionMismatch {
            expected: shape,
            got: bad.dim(),
        });
    }
    let t_re = t.mapv(|z| z.re);
    let mut out: Vec<Array2<f64>> = (0..channels.len()).map(|_| Array2::zeros(shape)).collect();
    for (i, dst) in out.iter_mut().enumerate() {
        for (j, src) in channels.iter().enumerate() {
            let w = t_re[[i, j]];
            dst.zip_mut_with(src, |d, s| *d += w * s);
        }
    }
    Ok(out)
}

/// Steers complex coefficient rasters of one scale.
pub fn steer_complex_coefficients(
    t: &Array2<Complex64>,
    channels: &[Array2<Complex64>],
) -> Result<Vec<Array2<Complex64>>> {
    if t.ncols() != channels.len() {
        return Err(Error::invalid(format!(
            "steering matrix has {} columns but {} channels were given",
            t.ncols(),
            channels.len()
        )));
    }
    let shape = channels[0].dim();
    let mut out: Vec<Array2<Complex64>> = (0..t.nrows()).map(|_| Array2::zeros(shape)).collect();
    for (i, dst) in out.iter_mut().enumerate() {
        for (j, src) in channels.iter().enumerate() {
            let w = t[[i, j]];
            dst.zip_mut_with(src, |d, s| *d += w * s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::RadialMultipliers;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn u_is_an_isometry() {
        let op = SteeringOperator::new(&TrigMultiplierSpec::bspline_nine());
        let g = op.u().t().mapv(|z| z.conj()).dot(op.u());
        for ((i, j), z) in g.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn factorization_reproduces_family() {
        let spec = TrigMultiplierSpec::bspline_nine();
        let op = SteeringOperator::new(&spec);
        for &(a, rho) in &[(1.0, 0.3), (1.7, 2.2), (0.4, 1.1)] {
            let f = op.factored(a, rho);
            let direct = spec.eval(a * rho);
            for (z, d) in f.iter().zip(&direct) {
                assert!((z.re - d).abs() < 1e-12 && z.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_when_a_equals_a_prime() {
        let spec = TrigMultiplierSpec::bspline_nine();
        let t = steering_matrix(&spec, 1.4, 1.4).unwrap();
        let m = spec.eval(1.4 * 0.9);
        let s = steer_real(&t, &m).unwrap();
        assert!(max_abs_diff(&s, &m) < 1e-12);
    }

    #[test]
    fn full_period_is_cyclic() {
        let spec = TrigMultiplierSpec::bspline_nine();
        let t = steering_matrix(&spec, 1.0, 4.0).unwrap();
        let m = spec.eval(0.77);
        assert!(max_abs_diff(&steer_real(&t, &m).unwrap(), &m) < 1e-12);
    }

    #[test]
    fn steering_moves_multipliers() {
        let spec = TrigMultiplierSpec::bspline_nine();
        let (a, a2, rho) = (0.8, 2.9, 0.61);
        let t = steering_matrix(&spec, a, a2).unwrap();
        let s = steer_real(&t, &spec.eval(a * rho)).unwrap();
        assert!(max_abs_diff(&s, &spec.eval(a2 * rho)) < 1e-10);
    }

    #[test]
    fn non_positive_dilation_rejected() {
        let spec = TrigMultiplierSpec::bspline_nine();
        assert!(steering_matrix(&spec, 0.0, 1.0).is_err());
        assert!(steering_matrix(&spec, 1.0, -2.0).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let spec = TrigMultiplierSpec::bspline_nine();
        let t = steering_matrix(&spec, 1.0, 1.2).unwrap();
        assert!(steer_real(&t, &[1.0, 2.0]).is_err());
        let chans = vec![Array2::<f64>::zeros((4, 4)); 3];
        assert!(steer_coefficients(&t, &chans).is_err());
    }
}
