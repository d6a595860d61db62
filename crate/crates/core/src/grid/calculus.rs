//! Spectral derivatives, weighted Sobolev norms, and decay validation.

use super::fft::{apply_table, fft3, symbol_table};
use super::{Grid3, ScalarField, SpinorState, VectorField};
use crate::math::{sub, Vec3};
use num_complex::Complex64;
use serde::Serialize;

/// Spectral gradient of a scalar field.
pub fn grad(f: &ScalarField) -> VectorField {
    let n = f.grid.n();
    let mut spec = f.values.clone();
    fft3(&mut spec, n, false);
    let mut out = VectorField::zeros(f.grid);
    for j in 0..3 {
        let table = symbol_table(&f.grid, [0.0; 3], |p| Complex64::new(0.0, p[j]));
        let mut comp = spec.clone();
        apply_table(&mut comp, &table);
        fft3(&mut comp, n, true);
        out.comps[j] = comp;
    }
    out
}

/// Spectral divergence of a vector field.
pub fn div(v: &VectorField) -> ScalarField {
    let n = v.grid.n();
    let mut acc = vec![Complex64::new(0.0, 0.0); v.grid.len()];
    for j in 0..3 {
        let mut spec = v.comps[j].clone();
        fft3(&mut spec, n, false);
        let table = symbol_table(&v.grid, [0.0; 3], |p| Complex64::new(0.0, p[j]));
        apply_table(&mut spec, &table);
        for (a, s) in acc.iter_mut().zip(&spec) {
            *a += s;
        }
    }
    fft3(&mut acc, n, true);
    ScalarField {
        grid: v.grid,
        values: acc,
    }
}

/// Spectral curl of a vector field.
pub fn curl(v: &VectorField) -> VectorField {
    let n = v.grid.n();
    let mut specs: Vec<Vec<Complex64>> = v.comps.iter().cloned().collect();
    for s in specs.iter_mut() {
        fft3(s, n, false);
    }
    let freqs = v.grid.freq_table();
    let mut out = VectorField::zeros(v.grid);
    let nn = v.grid.n();
    for iz in 0..nn {
        for iy in 0..nn {
            for ix in 0..nn {
                let idx = ix + nn * (iy + nn * iz);
                let p = [freqs[ix], freqs[iy], freqs[iz]];
                let i = Complex64::new(0.0, 1.0);
                out.comps[0][idx] = i * (p[1] * specs[2][idx] - p[2] * specs[1][idx]);
                out.comps[1][idx] = i * (p[2] * specs[0][idx] - p[0] * specs[2][idx]);
                out.comps[2][idx] = i * (p[0] * specs[1][idx] - p[1] * specs[0][idx]);
            }
        }
    }
    for c in out.comps.iter_mut() {
        fft3(c, n, true);
    }
    out
}

/// Weighted Sobolev norm specification: derivative order `n <= 2` and weight
/// exponent `l >= 0`, weight `w = <x>^{4l}` (so the square-root weight
/// `<x>^{2l}` multiplies each derivative inside the L2 norm).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightedNormSpec {
    pub n: u32,
    pub l: u32,
}

impl WeightedNormSpec {
    pub fn new(n: u32, l: u32) -> crate::error::Result<Self> {
        if n > 2 {
            return Err(crate::error::Error::config(
                "weighted norm derivative order must be 0, 1 or 2",
            ));
        }
        Ok(WeightedNormSpec { n, l })
    }
}

/// Multi-indices with |alpha| <= n over three axes.
fn multi_indices(order: u32) -> Vec<[u32; 3]> {
    let mut out = vec![[0, 0, 0]];
    if order >= 1 {
        out.extend_from_slice(&[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    }
    if order >= 2 {
        out.extend_from_slice(&[
            [2, 0, 0],
            [0, 2, 0],
            [0, 0, 2],
            [1, 1, 0],
            [1, 0, 1],
            [0, 1, 1],
        ]);
    }
    out
}

/// Radius from the box center, saturated at half the box length so the
/// periodic wrap cannot inflate the weight.
fn capped_radius_sq(grid: &Grid3, x: Vec3) -> f64 {
    let c = grid.center();
    let d = sub(x, c);
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let cap = 0.5 * grid.box_len();
    r2.min(cap * cap)
}

fn weighted_deriv_l2(
    grid: &Grid3,
    spec: &[Complex64],
    alpha: [u32; 3],
    l: u32,
    shift: Vec3,
) -> f64 {
    let n = grid.n();
    // derivative in Fourier space: multiply by (i p)^alpha
    let table = symbol_table(grid, shift, |p| {
        let mut m = Complex64::new(1.0, 0.0);
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                m *= Complex64::new(0.0, p[j]);
            }
        }
        m
    });
    let mut d = spec.to_vec();
    apply_table(&mut d, &table);
    fft3(&mut d, n, true);
    let mut acc = 0.0;
    for (idx, v) in d.iter().enumerate() {
        let r2 = capped_radius_sq(grid, grid.node(idx));
        let w = (1.0 + r2).powi(2 * l as i32); // <x>^{4l}
        acc += w * v.norm_sqr();
    }
    acc * grid.cell_volume()
}

/// Weighted Sobolev norm of a scalar field:
/// sum over |alpha| <= n of || <x>^{2l} d^alpha f ||_2.
pub fn weighted_sobolev_norm(f: &ScalarField, spec: WeightedNormSpec) -> f64 {
    let n = f.grid.n();
    let mut sp = f.values.clone();
    fft3(&mut sp, n, false);
    multi_indices(spec.n)
        .into_iter()
        .map(|alpha| weighted_deriv_l2(&f.grid, &sp, alpha, spec.l, [0.0; 3]).sqrt())
        .sum()
}

/// Weighted Sobolev norm of a two-component state; each term combines both
/// components in quadrature before the sum over multi-indices. Derivatives
/// act on the physical state, so the momentum shift participates.
pub fn weighted_sobolev_norm_spinor(s: &SpinorState, spec: WeightedNormSpec) -> f64 {
    let n = s.grid.n();
    let mut specs: Vec<Vec<Complex64>> = s.comps.iter().cloned().collect();
    for sp in specs.iter_mut() {
        fft3(sp, n, false);
    }
    multi_indices(spec.n)
        .into_iter()
        .map(|alpha| {
            let a0 = weighted_deriv_l2(&s.grid, &specs[0], alpha, spec.l, s.shift);
            let a1 = weighted_deriv_l2(&s.grid, &specs[1], alpha, spec.l, s.shift);
            (a0 + a1).sqrt()
        })
        .sum()
}

/// Report from [`validate_decay`].
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// max over nodes of |f(x)| (1+|x|)^exponent
    pub sup: f64,
    /// node position attaining the max
    pub argmax: Vec3,
    pub exponent: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Diagnostic check of the pointwise decay `|f(x)| <= C (1+|x|)^{-exponent}`,
/// with |x| measured from the box center.
pub fn validate_decay(f: &ScalarField, exponent: f64, constant: f64) -> DecayReport {
    let mut sup = 0.0;
    let mut argmax = [0.0; 3];
    let c = f.grid.center();
    for (idx, v) in f.values.iter().enumerate() {
        let x = f.grid.node(idx);
        let r = crate::math::norm(sub(x, c));
        let t = v.norm() * (1.0 + r).powf(exponent);
        if t > sup {
            sup = t;
            argmax = x;
        }
    }
    DecayReport {
        sup,
        argmax,
        exponent,
        bound: constant,
        pass: sup <= constant,
    }
}

/// Decay check for a vector field (componentwise magnitude).
pub fn validate_decay_vector(v: &VectorField, exponent: f64, constant: f64) -> DecayReport {
    let mut sup = 0.0;
    let mut argmax = [0.0; 3];
    let c = v.grid.center();
    for idx in 0..v.grid.len() {
        let x = v.grid.node(idx);
        let r = crate::math::norm(sub(x, c));
        let mag = (v.comps[0][idx].norm_sqr()
            + v.comps[1][idx].norm_sqr()
            + v.comps[2][idx].norm_sqr())
        .sqrt();
        let t = mag * (1.0 + r).powf(exponent);
        if t > sup {
            sup = t;
            argmax = x;
        }
    }
    DecayReport {
        sup,
        argmax,
        exponent,
        bound: constant,
        pass: sup <= constant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rep;
    use crate::math::dot;

    #[test]
    fn test_curl_grad_zero() {
        let grid = Grid3::centered(32, 12.0).unwrap();
        let lambda = ScalarField::from_real_fn(grid, |x| (-0.4 * dot(x, x)).exp());
        let g = grad(&lambda);
        let cg = curl(&g);
        let rel = cg.l2_norm() / g.l2_norm().max(1e-300);
        assert!(rel < 1e-10, "curl grad relative norm {rel}");
    }

    #[test]
    fn test_div_curl_zero() {
        let grid = Grid3::centered(32, 12.0).unwrap();
        let a = VectorField::from_real_fn(grid, |x| {
            let g = (-0.3 * dot(x, x)).exp();
            [g * x[1], -g * x[0], g]
        });
        let c = curl(&a);
        let dc = div(&c);
        let rel = dc.l2_norm() / c.l2_norm().max(1e-300);
        assert!(rel < 1e-10, "div curl relative norm {rel}");
    }

    #[test]
    fn test_plane_wave_derivative_exact() {
        let grid = Grid3::centered(16, 8.0).unwrap();
        let k = 2.0 * std::f64::consts::PI * 3.0 / grid.box_len();
        let f = ScalarField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x[1]));
        let g = grad(&f);
        for (idx, v) in f.values.iter().enumerate() {
            let expected = Complex64::new(0.0, k) * v;
            assert!((g.comps[1][idx] - expected).norm() < 1e-11);
            assert!(g.comps[0][idx].norm() < 1e-11);
            assert!(g.comps[2][idx].norm() < 1e-11);
        }
    }

    #[test]
    fn test_weighted_norm_zero_and_l2() {
        let grid = Grid3::centered(16, 10.0).unwrap();
        let z = ScalarField::zeros(grid);
        assert_eq!(
            weighted_sobolev_norm(&z, WeightedNormSpec::new(2, 1).unwrap()),
            0.0
        );
        let f = ScalarField::from_real_fn(grid, |x| (-0.7 * dot(x, x)).exp());
        let w = weighted_sobolev_norm(&f, WeightedNormSpec::new(0, 0).unwrap());
        assert!((w - f.l2_norm()).abs() < 1e-12 * w);
    }

    #[test]
    fn test_weighted_norm_gaussian_quadrature_oracle() {
        // || <x>^2 e^{-|x|^2/2} ||_2 via separable Gaussian moments:
        // integral (1+r^2)^2 e^{-r^2} = (1 + 3 + 15/4) pi^{3/2}
        let grid = Grid3::centered(64, 20.0).unwrap();
        let f = ScalarField::from_real_fn(grid, |x| (-0.5 * dot(x, x)).exp());
        let w = weighted_sobolev_norm(&f, WeightedNormSpec::new(0, 1).unwrap());
        let expected = (31.0 / 4.0 * std::f64::consts::PI.powf(1.5)).sqrt();
        assert!(
            (w - expected).abs() < 1e-6,
            "weighted norm {w} vs oracle {expected}"
        );
    }

    #[test]
    fn test_weighted_norm_monotonicity() {
        let grid = Grid3::centered(16, 10.0).unwrap();
        let f = ScalarField::from_real_fn(grid, |x| (-0.7 * dot(x, x)).exp());
        let w00 = weighted_sobolev_norm(&f, WeightedNormSpec::new(0, 0).unwrap());
        let w01 = weighted_sobolev_norm(&f, WeightedNormSpec::new(0, 1).unwrap());
        let w21 = weighted_sobolev_norm(&f, WeightedNormSpec::new(2, 1).unwrap());
        assert!(w01 > w00);
        assert!(w21 > w01);
    }

    #[test]
    fn test_validate_decay() {
        let grid = Grid3::centered(32, 16.0).unwrap();
        let z = ScalarField::zeros(grid);
        let r = validate_decay(&z, 5.0, 0.1);
        assert!(r.pass && r.sup == 0.0);

        let f = ScalarField::from_real_fn(grid, |x| {
            (1.0 + crate::math::norm(x)).powi(-3)
        });
        let r = validate_decay(&f, 3.0, 1.0 + 1e-3);
        assert!(r.pass);
        assert!((r.sup - 1.0).abs() < 1e-3);

        // exponent mismatch: sup grows past any fixed bound with box size
        let slow = ScalarField::from_real_fn(grid, |x| {
            (1.0 + crate::math::norm(x)).powi(-1)
        });
        let r16 = validate_decay(&slow, 2.0, 3.0);
        assert!(!r16.pass);
        let big = Grid3::centered(32, 64.0).unwrap();
        let slow_big = ScalarField::from_real_fn(big, |x| {
            (1.0 + crate::math::norm(x)).powi(-1)
        });
        let r64 = validate_decay(&slow_big, 2.0, 3.0);
        assert!(r64.sup > r16.sup);
    }

    #[test]
    fn test_spinor_weighted_norm_uses_shift() {
        let grid = Grid3::centered(16, 10.0).unwrap();
        let mut s = SpinorState::from_fns(
            grid,
            Rep::Diagonal,
            |x| Complex64::new((-0.7 * dot(x, x)).exp(), 0.0),
            |_| Complex64::new(0.0, 0.0),
        );
        let spec = WeightedNormSpec::new(1, 0).unwrap();
        let base = weighted_sobolev_norm_spinor(&s, spec);
        s.shift = [4.0, 0.0, 0.0];
        let shifted = weighted_sobolev_norm_spinor(&s, spec);
        // physical derivative picks up the shift, so the norm must grow
        assert!(shifted > base + 1.0);
    }
}
