//! FFTs on cube grids, the unitary continuum-convention spectral transform,
//! and Fourier-multiplier application.
//!
//! The raw transforms are plain DFTs (forward unnormalized, inverse carrying
//! `1/n^3`); the continuum convention adds the `(2 pi)^{-3/2} h^3` scaling and
//! the origin phase so that grid results match the integral transform
//! `(2 pi)^{-3/2} \int e^{-i x . p} f(x) dx` on resolved fields.

use super::{Grid3, Rep, ScalarField, SpinorState};
use crate::error::{Error, Result};
use crate::math::Vec3;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// In-place 3D DFT over an x-fastest cube of side `n`.
/// Forward is unnormalized; inverse divides by `n^3`.
pub fn fft3(values: &mut [Complex64], n: usize, inverse: bool) {
    assert_eq!(values.len(), n * n * n);
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    // axis 0: contiguous lanes
    for lane in values.chunks_exact_mut(n) {
        plan.process_with_scratch(lane, &mut scratch);
    }
    // axis 1: stride n within each n^2 slab
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for slab in values.chunks_exact_mut(n * n) {
        for ix in 0..n {
            for iy in 0..n {
                buf[iy] = slab[ix + n * iy];
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for iy in 0..n {
                slab[ix + n * iy] = buf[iy];
            }
        }
    }
    // axis 2: stride n^2
    let n2 = n * n;
    for iy in 0..n {
        for ix in 0..n {
            let base = ix + n * iy;
            for iz in 0..n {
                buf[iz] = values[base + n2 * iz];
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for iz in 0..n {
                values[base + n2 * iz] = buf[iz];
            }
        }
    }
    if inverse {
        let scale = 1.0 / (n * n * n) as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }
}

/// Transform direction for [`spectral_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary continuum-convention Fourier transform between a position-space
/// field and its dual-grid counterpart (both stored in monotone-frequency
/// order on the dual side). The inverse direction assumes a centered
/// position box, which is how every grid in this crate is built.
pub fn spectral_transform(f: &ScalarField, direction: Direction) -> Result<ScalarField> {
    let n = f.grid.n();
    let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
    match direction {
        Direction::Forward => {
            let mut values = f.values.clone();
            fft3(&mut values, n, false);
            let scale = norm * f.grid.cell_volume();
            let origin = f.grid.origin();
            let freqs = f.grid.freq_table();
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let p = [freqs[ix], freqs[iy], freqs[iz]];
                        let phase = -(origin[0] * p[0] + origin[1] * p[1] + origin[2] * p[2]);
                        values[ix + n * (iy + n * iz)] *=
                            Complex64::from_polar(scale, phase);
                    }
                }
            }
            let shifted = fft_shift(&values, n);
            Ok(ScalarField {
                grid: f.grid.dual(),
                values: shifted,
            })
        }
        Direction::Inverse => {
            // reconstruct the centered position grid from the dual spacing
            let dp = f.grid.h();
            let h = 2.0 * std::f64::consts::PI / (n as f64 * dp);
            let grid = Grid3::centered(n, n as f64 * h)?;
            let mut values = fft_unshift(&f.values, n);
            let scale = 1.0 / (norm * grid.cell_volume());
            let origin = grid.origin();
            let freqs = grid.freq_table();
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let p = [freqs[ix], freqs[iy], freqs[iz]];
                        let phase = origin[0] * p[0] + origin[1] * p[1] + origin[2] * p[2];
                        values[ix + n * (iy + n * iz)] *=
                            Complex64::from_polar(scale, phase);
                    }
                }
            }
            fft3(&mut values, n, true);
            Ok(ScalarField { grid, values })
        }
    }
}

/// Reorder DFT-layout data to monotone frequency order.
fn fft_shift(values: &[Complex64], n: usize) -> Vec<Complex64> {
    let half = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let sx = (ix + half) % n;
                let sy = (iy + half) % n;
                let sz = (iz + half) % n;
                out[sx + n * (sy + n * sz)] = values[ix + n * (iy + n * iz)];
            }
        }
    }
    out
}

fn fft_unshift(values: &[Complex64], n: usize) -> Vec<Complex64> {
    let half = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let sx = (ix + half) % n;
                let sy = (iy + half) % n;
                let sz = (iz + half) % n;
                out[ix + n * (iy + n * iz)] = values[sx + n * (sy + n * sz)];
            }
        }
    }
    out
}

/// Evaluate a spectral symbol over the full mode cube into a table usable
/// with [`apply_table`]. The symbol sees the state's physical momentum
/// `p + shift`.
pub fn symbol_table(
    grid: &Grid3,
    shift: Vec3,
    f: impl Fn(Vec3) -> Complex64,
) -> Vec<Complex64> {
    let n = grid.n();
    let freqs = grid.freq_table();
    let mut table = Vec::with_capacity(grid.len());
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let p = [
                    freqs[ix] + shift[0],
                    freqs[iy] + shift[1],
                    freqs[iz] + shift[2],
                ];
                table.push(f(p));
            }
        }
    }
    table
}

/// Real-valued symbol table.
pub fn symbol_table_real(grid: &Grid3, shift: Vec3, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
    let n = grid.n();
    let freqs = grid.freq_table();
    let mut table = Vec::with_capacity(grid.len());
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let p = [
                    freqs[ix] + shift[0],
                    freqs[iy] + shift[1],
                    freqs[iz] + shift[2],
                ];
                table.push(f(p));
            }
        }
    }
    table
}

#[inline]
pub fn apply_table(values: &mut [Complex64], table: &[Complex64]) {
    for (v, t) in values.iter_mut().zip(table) {
        *v *= t;
    }
}

/// Apply a per-component Fourier multiplier to a diagonal-representation
/// state: each component is multiplied in Fourier space by `m(comp, p)`,
/// where `p` is the physical momentum (grid frequency plus the state's
/// momentum shift).
pub fn apply_multiplier<F>(s: &SpinorState, m: F) -> Result<SpinorState>
where
    F: Fn(usize, Vec3) -> Complex64,
{
    if s.rep != Rep::Diagonal {
        return Err(Error::config(
            "apply_multiplier expects a diagonal-representation state",
        ));
    }
    let n = s.grid.n();
    let mut out = s.clone();
    for (c, comp) in out.comps.iter_mut().enumerate() {
        fft3(comp, n, false);
        let table = symbol_table(&s.grid, s.shift, |p| m(c, p));
        apply_table(comp, &table);
        fft3(comp, n, true);
    }
    Ok(out)
}

/// Apply a Fourier multiplier to a scalar field (no momentum shift).
pub fn apply_scalar_multiplier<F>(f: &ScalarField, m: F) -> ScalarField
where
    F: Fn(Vec3) -> Complex64,
{
    let n = f.grid.n();
    let mut values = f.values.clone();
    fft3(&mut values, n, false);
    let table = symbol_table(&f.grid, [0.0; 3], m);
    apply_table(&mut values, &table);
    fft3(&mut values, n, true);
    ScalarField {
        grid: f.grid,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::dot;

    fn gaussian_field(n: usize, box_len: f64) -> ScalarField {
        let grid = Grid3::centered(n, box_len).unwrap();
        ScalarField::from_real_fn(grid, |x| (-0.5 * dot(x, x)).exp())
    }

    #[test]
    fn test_constant_to_delta() {
        let grid = Grid3::centered(16, 8.0).unwrap();
        let f = ScalarField::from_real_fn(grid, |_| 1.0);
        let fhat = spectral_transform(&f, Direction::Forward).unwrap();
        let l = grid.box_len();
        let expected = (2.0 * std::f64::consts::PI).powf(-1.5) * l * l * l;
        // zero frequency sits at index n/2 in monotone order
        let n = grid.n();
        let zero_idx = n / 2 + n * (n / 2 + n * (n / 2));
        assert!((fhat.values[zero_idx].re - expected).abs() < 1e-9 * expected);
        let off = fhat.values[zero_idx + 1].norm();
        assert!(off < 1e-9 * expected);
    }

    #[test]
    fn test_gaussian_self_dual() {
        // e^{-|x|^2/2} is its own transform in this convention.
        let f = gaussian_field(64, 20.0);
        let fhat = spectral_transform(&f, Direction::Forward).unwrap();
        let dual = fhat.grid;
        for idx in [0, 17, 100_000, 200_000, dual.len() - 1] {
            let p = dual.node(idx);
            let expected = (-0.5 * dot(p, p)).exp();
            let got = fhat.values[idx];
            assert!(
                (got.re - expected).abs() < 1e-10 && got.im.abs() < 1e-10,
                "self-dual mismatch at {p:?}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn test_gaussian_against_quadrature() {
        // direct Riemann quadrature of the transform integral at 5 frequencies
        let f = gaussian_field(64, 20.0);
        let fhat = spectral_transform(&f, Direction::Forward).unwrap();
        let grid = f.grid;
        let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
        for &(i, j, k) in &[(32, 32, 32), (34, 32, 32), (32, 37, 30), (40, 40, 40), (28, 33, 35)] {
            let idx = i + grid.n() * (j + grid.n() * k);
            let p = fhat.grid.node(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for ii in 0..grid.len() {
                let x = grid.node(ii);
                acc += Complex64::from_polar((-0.5 * dot(x, x)).exp(), -dot(x, p));
            }
            acc *= norm * grid.cell_volume();
            assert!(
                (acc - fhat.values[idx]).norm() < 1e-10,
                "quadrature mismatch at {p:?}"
            );
        }
    }

    #[test]
    fn test_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = Grid3::centered(16, 6.0).unwrap();
        let f = ScalarField {
            grid,
            values: (0..grid.len())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        };
        let fhat = spectral_transform(&f, Direction::Forward).unwrap();
        let back = spectral_transform(&fhat, Direction::Inverse).unwrap();
        let err: f64 = f
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = f.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12 * norm, "roundtrip rel err {}", err / norm);
    }

    #[test]
    fn test_parseval() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let grid = Grid3::centered(16, 6.0).unwrap();
        let f = ScalarField {
            grid,
            values: (0..grid.len())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        };
        let fhat = spectral_transform(&f, Direction::Forward).unwrap();
        assert!((f.l2_norm() - fhat.l2_norm()).abs() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn test_multiplier_identity_and_eigenvalue() {
        let grid = Grid3::centered(16, 8.0).unwrap();
        // plane wave at an exactly representable frequency
        let k = 2.0 * std::f64::consts::PI * 2.0 / grid.box_len();
        let mut s = SpinorState::from_fns(
            grid,
            Rep::Diagonal,
            |x| Complex64::from_polar(1.0, k * x[0]),
            |_| Complex64::new(0.0, 0.0),
        );
        s.shift = [0.0; 3];
        // identity multiplier
        let id = apply_multiplier(&s, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let diff: f64 = s.comps[0]
            .iter()
            .zip(&id.comps[0])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        // relativistic energy multiplier: plane wave is an exact eigenvector
        let m = 1.0;
        let out = apply_multiplier(&s, |_, p| {
            Complex64::new((dot(p, p) + m * m).sqrt(), 0.0)
        })
        .unwrap();
        let ev = (k * k + 1.0).sqrt();
        for (a, b) in s.comps[0].iter().zip(&out.comps[0]) {
            assert!((b - a * ev).norm() < 1e-10);
        }
        // unimodular multiplier preserves the norm
        let t = 0.7;
        let u = apply_multiplier(&s, |_, p| {
            Complex64::from_polar(1.0, -t * (dot(p, p) + 1.0).sqrt())
        })
        .unwrap();
        assert!((u.l2_norm() - s.l2_norm()).abs() < 1e-12 * s.l2_norm());
    }

    #[test]
    fn test_multiplier_respects_shift() {
        let grid = Grid3::centered(16, 8.0).unwrap();
        let mut s = SpinorState::from_fns(
            grid,
            Rep::Diagonal,
            |x| Complex64::from_polar(1.0, 0.0 * x[0]),
            |_| Complex64::new(0.0, 0.0),
        );
        s.shift = [5.0, 0.0, 0.0];
        // constant envelope with shift k0 is the plane wave e^{i k0 x}:
        // multiplying by p_x should give k0 * state
        let out = apply_multiplier(&s, |_, p| Complex64::new(p[0], 0.0)).unwrap();
        for (a, b) in s.comps[0].iter().zip(&out.comps[0]) {
            assert!((b - a * 5.0).norm() < 1e-10);
        }
    }

    #[test]
    fn test_non_power_of_two_rejected() {
        assert!(Grid3::new(24, 0.5, [0.0; 3]).is_err());
    }
}
