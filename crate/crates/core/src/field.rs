//! Uniform Dirichlet grids on an interval or a rectangle.
//!
//! Only interior values are stored; the boundary is implicitly zero. The
//! Laplacian and the gradient form below satisfy summation by parts exactly:
//! `grad_inner(f, g) = -inner(laplacian(f), g)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    Line {
        length: f64,
        n: usize,
    },
    Rect {
        lx: f64,
        ly: f64,
        nx: usize,
        ny: usize,
    },
}

/// Interior values of a field. 2D layout is row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    shape: (usize, usize),
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(shape: (usize, usize)) -> Self {
        GridFunction {
            shape,
            values: vec![0.0; shape.0 * shape.1],
        }
    }

    pub fn from_values(shape: (usize, usize), values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.0 * shape.1 {
            return Err(Error::InvalidGrid(format!(
                "{} values for shape {:?}",
                values.len(),
                shape
            )));
        }
        Ok(GridFunction { shape, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        GridFunction {
            shape: self.shape,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Grid {
    pub fn line(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length {length} must be > 0")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid(
                "need at least one interior point".into(),
            ));
        }
        Ok(Grid::Line { length, n })
    }

    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "extents ({lx}, {ly}) must be > 0"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid(
                "need at least one interior point per axis".into(),
            ));
        }
        let hx = lx / (nx + 1) as f64;
        let hy = ly / (ny + 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(Error::InvalidGrid(format!(
                "cells must be square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Grid::Rect { lx, ly, nx, ny })
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::Line { .. } => 1,
            Grid::Rect { .. } => 2,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Grid::Line { n, .. } => (n, 1),
            Grid::Rect { nx, ny, .. } => (nx, ny),
        }
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extents(&self) -> (f64, f64) {
        match *self {
            Grid::Line { length, .. } => (length, 0.0),
            Grid::Rect { lx, ly, .. } => (lx, ly),
        }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            Grid::Line { length, n } => length / (n + 1) as f64,
            Grid::Rect { lx, nx, .. } => lx / (nx + 1) as f64,
        }
    }

    /// Cell measure `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction::zeros(self.shape())
    }

    /// Samples `f` at the interior nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let h = self.spacing();
        let (nx, ny) = self.shape();
        let mut out = self.zeros();
        for j in 0..ny {
            for i in 0..nx {
                let x = (i + 1) as f64 * h;
                let y = if self.dim() == 2 {
                    (j + 1) as f64 * h
                } else {
                    0.0
                };
                out.values[j * nx + i] = f(x, y);
            }
        }
        out
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.shape != self.shape() {
            return Err(Error::ShapeMismatch {
                left: f.shape,
                right: self.shape(),
            });
        }
        Ok(())
    }

    pub fn laplacian(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check(f)?;
        let mut out = self.zeros();
        self.laplacian_into(&f.values, &mut out.values);
        Ok(out)
    }

    /// Five-point (or three-point) Laplacian with zero ghost values.
    pub(crate) fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        let h = self.spacing();
        let inv_h2 = 1.0 / (h * h);
        let (nx, ny) = self.shape();
        match self {
            Grid::Line { .. } => {
                for i in 0..nx {
                    let left = if i > 0 { f[i - 1] } else { 0.0 };
                    let right = if i + 1 < nx { f[i + 1] } else { 0.0 };
                    out[i] = (left - 2.0 * f[i] + right) * inv_h2;
                }
            }
            Grid::Rect { .. } => {
                for j in 0..ny {
                    for i in 0..nx {
                        let k = j * nx + i;
                        let w = if i > 0 { f[k - 1] } else { 0.0 };
                        let e = if i + 1 < nx { f[k + 1] } else { 0.0 };
                        let s = if j > 0 { f[k - nx] } else { 0.0 };
                        let n = if j + 1 < ny { f[k + nx] } else { 0.0 };
                        out[k] = (w + e + s + n - 4.0 * f[k]) * inv_h2;
                    }
                }
            }
        }
    }

    /// Discrete `∫_Ω f g dx`.
    pub fn inner(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.inner_slices(&f.values, &g.values))
    }

    pub(crate) fn inner_slices(&self, f: &[f64], g: &[f64]) -> f64 {
        self.cell_volume() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub(crate) fn norm_sq_slice(&self, f: &[f64]) -> f64 {
        self.cell_volume() * f.iter().map(|a| a * a).sum::<f64>()
    }

    /// Discrete `∫_Ω |∇f|² dx` from forward differences over every cell
    /// edge, boundary edges included.
    pub fn grad_sq(&self, f: &GridFunction) -> Result<f64> {
        self.check(f)?;
        Ok(self.grad_inner_slices(&f.values, &f.values))
    }

    /// Discrete `∫_Ω ∇f · ∇g dx`.
    pub fn grad_inner(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.grad_inner_slices(&f.values, &g.values))
    }

    pub(crate) fn grad_inner_slices(&self, f: &[f64], g: &[f64]) -> f64 {
        let h = self.spacing();
        let (nx, ny) = self.shape();
        let at = |v: &[f64], i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                0.0
            } else {
                v[j as usize * nx + i as usize]
            }
        };
        let mut sum = 0.0;
        match self {
            Grid::Line { .. } => {
                for i in -1..nx as isize {
                    sum += (at(f, i + 1, 0) - at(f, i, 0)) * (at(g, i + 1, 0) - at(g, i, 0));
                }
                sum / h
            }
            Grid::Rect { .. } => {
                for j in 0..ny as isize {
                    for i in -1..nx as isize {
                        sum += (at(f, i + 1, j) - at(f, i, j)) * (at(g, i + 1, j) - at(g, i, j));
                    }
                }
                for j in -1..ny as isize {
                    for i in 0..nx as isize {
                        sum += (at(f, i, j + 1) - at(f, i, j)) * (at(g, i, j + 1) - at(g, i, j));
                    }
                }
                sum
            }
        }
    }

    /// Smallest eigenvalue of `-laplacian` on this grid.
    pub fn smallest_eigenvalue(&self) -> f64 {
        let h = self.spacing();
        let axis = |len: f64| 4.0 / (h * h) * (PI * h / (2.0 * len)).sin().powi(2);
        match *self {
            Grid::Line { length, .. } => axis(length),
            Grid::Rect { lx, ly, .. } => axis(lx) + axis(ly),
        }
    }
}

/// Spatial profiles used for initial data and the pre-history.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// Product of `sin(k π x / L)` factors, one mode number per axis.
    Sine {
        modes: Vec<u32>,
        amplitude: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
}

impl Profile {
    pub fn validate(&self, grid: &Grid) -> std::result::Result<(), String> {
        match self {
            Profile::Zero => Ok(()),
            Profile::Sine { modes, amplitude } => {
                if modes.len() != grid.dim() {
                    return Err(format!(
                        "sine profile needs {} mode numbers, got {}",
                        grid.dim(),
                        modes.len()
                    ));
                }
                if modes.contains(&0) {
                    return Err("sine mode numbers must be >= 1".into());
                }
                if !amplitude.is_finite() {
                    return Err("amplitude must be finite".into());
                }
                Ok(())
            }
            Profile::Gaussian {
                center,
                width,
                amplitude,
            } => {
                if center.len() != grid.dim() {
                    return Err(format!(
                        "gaussian center needs {} coordinates, got {}",
                        grid.dim(),
                        center.len()
                    ));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(format!("gaussian width {width} must be > 0"));
                }
                if !amplitude.is_finite() {
                    return Err("amplitude must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        let (lx, ly) = grid.extents();
        match self {
            Profile::Zero => grid.zeros(),
            Profile::Sine { modes, amplitude } => grid.sample(|x, y| {
                let mut v = amplitude * (modes[0] as f64 * PI * x / lx).sin();
                if let Some(&ky) = modes.get(1) {
                    v *= (ky as f64 * PI * y / ly).sin();
                }
                v
            }),
            Profile::Gaussian {
                center,
                width,
                amplitude,
            } => grid.sample(|x, y| {
                let mut r2 = (x - center[0]).powi(2);
                if let Some(&cy) = center.get(1) {
                    r2 += (y - cy).powi(2);
                }
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_1d(grid: &Grid) -> GridFunction {
        grid.sample(|x, _| (PI * x).sin())
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let g = Grid::line(1.0, 31).unwrap();
        let lap = g.laplacian(&g.zeros()).unwrap();
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_eigenfunction_1d_second_order() {
        let mut errs = Vec::new();
        for n in [15usize, 31, 63] {
            let g = Grid::line(1.0, n).unwrap();
            let f = sine_1d(&g);
            let lap = g.laplacian(&f).unwrap();
            let err = lap
                .values()
                .iter()
                .zip(f.values())
                .map(|(l, v)| (l + PI * PI * v).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.9..2.1).contains(&order), "order {order}");
        }
    }

    #[test]
    fn laplacian_eigenfunction_2d() {
        let g = Grid::rect(1.0, 2.0, 31, 63).unwrap();
        let f = g.sample(|x, y| (PI * x).sin() * (PI * y / 2.0).sin());
        let lap = g.laplacian(&f).unwrap();
        let lam = PI * PI + (PI / 2.0).powi(2);
        let h = g.spacing();
        for (l, v) in lap.values().iter().zip(f.values()) {
            assert!((l + lam * v).abs() < 2.0 * h * h * lam * lam);
        }
    }

    #[test]
    fn rect_requires_square_cells() {
        assert!(Grid::rect(1.0, 1.0, 10, 20).is_err());
        assert!(Grid::rect(1.0, 2.0, 9, 19).is_ok());
    }

    #[test]
    fn inner_examples() {
        let g = Grid::line(1.0, 999).unwrap();
        let one = g.sample(|_, _| 1.0);
        assert_eq!(g.inner(&one, &g.zeros()).unwrap(), 0.0);
        assert!((g.inner(&one, &one).unwrap() - 1.0).abs() < 2e-3);
        let other = g.sample(|x, _| x * x - 0.3);
        assert_eq!(
            g.inner(&one, &other).unwrap(),
            g.inner(&other, &one).unwrap()
        );
        let wrong = GridFunction::zeros((5, 1));
        assert!(matches!(
            g.inner(&one, &wrong),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn grad_sq_of_sine_converges() {
        let g = Grid::line(1.0, 1023).unwrap();
        let f = sine_1d(&g);
        let gs = g.grad_sq(&f).unwrap();
        assert!((gs - PI * PI / 2.0).abs() < 1e-4);
        assert_eq!(g.grad_sq(&g.zeros()).unwrap(), 0.0);
        let scaled = g.grad_sq(&f.scaled(3.0)).unwrap();
        assert!((scaled - 9.0 * gs).abs() < 1e-12 * scaled);
    }

    #[test]
    fn smallest_eigenvalue_matches_sine_mode() {
        let g = Grid::line(1.0, 40).unwrap();
        let f = sine_1d(&g);
        let rayleigh = g.grad_sq(&f).unwrap() / g.inner(&f, &f).unwrap();
        assert!((rayleigh - g.smallest_eigenvalue()).abs() < 1e-9 * rayleigh);
    }

    #[test]
    fn profiles_validate_against_grid() {
        let g1 = Grid::line(1.0, 8).unwrap();
        let bad = Profile::Sine {
            modes: vec![1, 1],
            amplitude: 1.0,
        };
        assert!(bad.validate(&g1).is_err());
        let ok = Profile::Gaussian {
            center: vec![0.5],
            width: 0.1,
            amplitude: 1.0,
        };
        assert!(ok.validate(&g1).is_ok());
        let s = ok.sample(&g1);
        assert_eq!(s.shape(), (8, 1));
    }
}
