//! Uniform periodic 3D grids and the complex fields living on them.
//!
//! All fields use x-fastest (row-major in z,y,x reversed) node ordering:
//! `idx = ix + n*(iy + n*iz)`. Physical space is the periodic box
//! `[origin, origin + n*h)^3`; the dual grid carries frequencies in
//! `[-pi/h, pi/h)` per axis.

pub mod calculus;
pub mod fft;
pub mod io;

use crate::error::{Error, Result};
use crate::math::Vec3;
use num_complex::Complex64;

/// Uniform periodic computational box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: usize,
    h: f64,
    origin: Vec3,
}

impl Grid3 {
    /// A cube grid with `n` points per axis (power of two, at least 8) and
    /// spacing `h`, anchored at `origin`.
    pub fn new(n: usize, h: f64, origin: Vec3) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::config(format!(
                "grid points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::config(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Grid3 { n, h, origin })
    }

    /// Cube of side `box_len` centered at the coordinate origin.
    pub fn centered(n: usize, box_len: f64) -> Result<Self> {
        let h = box_len / n as f64;
        Grid3::new(n, h, [-box_len / 2.0; 3])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    /// Total number of nodes `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side length of the box.
    pub fn box_len(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Geometric center of the box.
    pub fn center(&self) -> Vec3 {
        let half = 0.5 * (self.n as f64 - 0.0) * self.h;
        [
            self.origin[0] + half,
            self.origin[1] + half,
            self.origin[2] + half,
        ]
    }

    /// Volume element `h^3`.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n * (iy + self.n * iz)
    }

    /// Physical position of the node with linear index `idx`.
    #[inline]
    pub fn node(&self, idx: usize) -> Vec3 {
        let ix = idx % self.n;
        let iy = (idx / self.n) % self.n;
        let iz = idx / (self.n * self.n);
        [
            self.origin[0] + ix as f64 * self.h,
            self.origin[1] + iy as f64 * self.h,
            self.origin[2] + iz as f64 * self.h,
        ]
    }

    /// Signed dual frequency of DFT mode index `k` along one axis, in
    /// `[-pi/h, pi/h)`.
    #[inline]
    pub fn freq(&self, k: usize) -> f64 {
        let ks = if k < self.n / 2 {
            k as isize
        } else {
            k as isize - self.n as isize
        };
        2.0 * std::f64::consts::PI * ks as f64 / (self.n as f64 * self.h)
    }

    /// Per-axis frequency table in DFT mode order.
    pub fn freq_table(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.freq(k)).collect()
    }

    /// Largest representable frequency magnitude `pi/h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.h
    }

    /// The dual (momentum) grid: same point count, spacing `2 pi/(n h)`,
    /// anchored at `-pi/h`.
    pub fn dual(&self) -> Grid3 {
        let dp = 2.0 * std::f64::consts::PI / (self.n as f64 * self.h);
        Grid3 {
            n: self.n,
            h: dp,
            origin: [-self.nyquist(); 3],
        }
    }
}

/// Complex scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid3,
    pub values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        ScalarField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(Vec3) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        ScalarField { grid, values }
    }

    pub fn from_real_fn(grid: Grid3, f: impl Fn(Vec3) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// L2 norm with the grid measure `h^3`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Grid inner product `<f, g> = h^3 sum conj(f) g`.
    pub fn inner(&self, other: &ScalarField) -> Complex64 {
        assert_eq!(self.grid, other.grid, "inner product needs matching grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Complex 3-vector field on a grid (one array per component).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid3,
    pub comps: [Vec<Complex64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid3) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); grid.len()];
        VectorField {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(Vec3) -> [Complex64; 3]) -> Self {
        let mut out = VectorField::zeros(grid);
        for i in 0..grid.len() {
            let v = f(grid.node(i));
            out.comps[0][i] = v[0];
            out.comps[1][i] = v[1];
            out.comps[2][i] = v[2];
        }
        out
    }

    pub fn from_real_fn(grid: Grid3, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self::from_fn(grid, |x| {
            let v = f(x);
            [
                Complex64::new(v[0], 0.0),
                Complex64::new(v[1], 0.0),
                Complex64::new(v[2], 0.0),
            ]
        })
    }

    pub fn component(&self, j: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.comps[j].clone(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }
}

/// Which first-order representation a two-component state is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    /// Energy-diagonal representation: components are the positive- and
    /// negative-energy amplitudes.
    Diagonal,
    /// Field representation: components are the wave field and its time
    /// derivative.
    Wave,
}

/// Two-component state on a grid.
///
/// `shift` is a symbolic momentum-frame offset: the physical state is
/// `e^{i x . shift}` times the stored envelope, and every spectral symbol
/// acting on the state is evaluated at `p + shift`. A zero shift is the
/// plain representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorState {
    pub grid: Grid3,
    pub comps: [Vec<Complex64>; 2],
    pub rep: Rep,
    pub shift: Vec3,
}

impl SpinorState {
    pub fn zeros(grid: Grid3, rep: Rep) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); grid.len()];
        SpinorState {
            grid,
            comps: [z.clone(), z],
            rep,
            shift: [0.0; 3],
        }
    }

    pub fn from_fns(
        grid: Grid3,
        rep: Rep,
        f0: impl Fn(Vec3) -> Complex64,
        f1: impl Fn(Vec3) -> Complex64,
    ) -> Self {
        let c0 = (0..grid.len()).map(|i| f0(grid.node(i))).collect();
        let c1 = (0..grid.len()).map(|i| f1(grid.node(i))).collect();
        SpinorState {
            grid,
            comps: [c0, c1],
            rep,
            shift: [0.0; 3],
        }
    }

    /// L2 norm over both components with the grid measure.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Componentwise grid inner product (sum over both components).
    pub fn inner(&self, other: &SpinorState) -> Complex64 {
        assert_eq!(self.grid, other.grid);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..2 {
            acc += self.comps[c]
                .iter()
                .zip(&other.comps[c])
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>();
        }
        acc * self.grid.cell_volume()
    }

    pub fn component(&self, j: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.comps[j].clone(),
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for c in self.comps.iter_mut() {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_grid_invariants() {
        assert!(Grid3::new(7, 0.1, [0.0; 3]).is_err());
        assert!(Grid3::new(12, 0.1, [0.0; 3]).is_err());
        assert!(Grid3::new(8, -1.0, [0.0; 3]).is_err());
        let g = Grid3::centered(16, 8.0).unwrap();
        assert_eq!(g.len(), 4096);
        assert!((g.box_len() - 8.0).abs() < 1e-15);
        // frequencies span [-pi/h, pi/h)
        let fmax = (0..16).map(|k| g.freq(k)).fold(f64::MIN, f64::max);
        let fmin = (0..16).map(|k| g.freq(k)).fold(f64::MAX, f64::min);
        assert!((fmin + g.nyquist()).abs() < 1e-12);
        assert!(fmax < g.nyquist());
    }

    #[test]
    fn test_node_roundtrip() {
        let g = Grid3::centered(8, 4.0).unwrap();
        let idx = g.index(3, 5, 7);
        let x = g.node(idx);
        assert!((x[0] - (-2.0 + 3.0 * 0.5)).abs() < 1e-14);
        assert!((x[1] - (-2.0 + 5.0 * 0.5)).abs() < 1e-14);
        assert!((x[2] - (-2.0 + 7.0 * 0.5)).abs() < 1e-14);
    }

    #[test]
    fn test_center() {
        let g = Grid3::centered(8, 4.0).unwrap();
        let c = g.center();
        assert!(c.iter().all(|v| v.abs() < 1e-14));
    }
}
