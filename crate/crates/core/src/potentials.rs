//! Electromagnetic data: magnetic fields, potential classes with prescribed
//! circulations, electric potentials, gauge transforms, circulations and
//! hole fluxes, and the energy-form positivity check.
//!
//! The confined-flux carrier for a torus handle is the rescaled field of a
//! fictitious unit current loop along the handle core: closed form through
//! complete elliptic integrals, curl-free away from the core, circulation
//! equal to the prescribed flux over once-linking loops, |x|^-3 decay.

use crate::error::{Error, Result};
use crate::geometry::{classify_line, CutoffKappa, ObstacleModel, OrientedPolyline};
use crate::grid::calculus::{curl, div, validate_decay_vector};
use crate::grid::fft::{apply_table, fft3, symbol_table};
use crate::grid::{Grid3, VectorField};
use crate::math::{
    add, adaptive_simpson, cross, dot, ellipe, ellipk, norm, normalize, scale, sub, Vec3,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// electric potentials

/// Smooth electric potential families.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ElectricPotential {
    Zero,
    Gaussian {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: Vec3,
    },
    /// amp * (1 + |x-center|^2)^(-zeta/2)
    InversePower {
        amp: f64,
        zeta: f64,
        #[serde(default)]
        center: Vec3,
    },
    Sum {
        terms: Vec<ElectricPotential>,
    },
}

impl ElectricPotential {
    pub fn eval(&self, x: Vec3) -> f64 {
        match self {
            ElectricPotential::Zero => 0.0,
            ElectricPotential::Gaussian { amp, width, center } => {
                let d = sub(x, *center);
                amp * (-dot(d, d) / (width * width)).exp()
            }
            ElectricPotential::InversePower { amp, zeta, center } => {
                let d = sub(x, *center);
                amp * (1.0 + dot(d, d)).powf(-zeta / 2.0)
            }
            ElectricPotential::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ElectricPotential::Zero => true,
            ElectricPotential::Gaussian { amp, .. } => *amp == 0.0,
            ElectricPotential::InversePower { amp, .. } => *amp == 0.0,
            ElectricPotential::Sum { terms } => terms.iter().all(|t| t.is_zero()),
        }
    }

    pub fn sup_estimate(&self) -> f64 {
        match self {
            ElectricPotential::Zero => 0.0,
            ElectricPotential::Gaussian { amp, .. } => amp.abs(),
            ElectricPotential::InversePower { amp, .. } => amp.abs(),
            ElectricPotential::Sum { terms } => terms.iter().map(|t| t.sup_estimate()).sum(),
        }
    }

    /// Full-line integral along `x + tau nu` by adaptive quadrature with a
    /// decay-bounded truncation.
    pub fn line_integral(&self, x: Vec3, nu: Vec3, tol: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let nu = normalize(nu);
        let reach = self.reach(1e-12) + dot(x, nu).abs();
        let t0 = -dot(x, nu);
        let f = |t: f64| self.eval(add(x, scale(nu, t)));
        adaptive_simpson(&f, t0 - reach, t0 + reach, tol)
    }

    /// Half-line integral from `x` towards `sign * infinity` along `nu`.
    pub fn half_line_integral(&self, x: Vec3, nu: Vec3, sign: f64, tol: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let nu = normalize(nu);
        let reach = self.reach(1e-12) + norm(x);
        let f = |t: f64| self.eval(add(x, scale(nu, t * sign)));
        adaptive_simpson(&f, 0.0, reach, tol)
    }

    /// Radius beyond which the potential contributes less than `tail` to a
    /// line integral.
    fn reach(&self, tail: f64) -> f64 {
        match self {
            ElectricPotential::Zero => 1.0,
            ElectricPotential::Gaussian { width, center, .. } => {
                norm(*center) + width * 10.0 + 5.0
            }
            ElectricPotential::InversePower { amp, zeta, center } => {
                let c = amp.abs().max(1e-300);
                let z = zeta.max(1.01);
                norm(*center) + (c / ((z - 1.0) * tail)).powf(1.0 / (z - 1.0)).min(1e7) + 5.0
            }
            ElectricPotential::Sum { terms } => {
                terms.iter().map(|t| t.reach(tail)).fold(1.0, f64::max)
            }
        }
    }

    pub fn sample(&self, grid: Grid3) -> Vec<f64> {
        (0..grid.len()).map(|i| self.eval(grid.node(i))).collect()
    }
}

// ---------------------------------------------------------------------------
// magnetic fields

/// Analytic solenoidal magnetic fields compactly concentrated in space.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BField {
    Zero,
    /// curl of the azimuthal 1-form `amp * rho * exp(-(rho^2+z^2)/width^2)`:
    /// a near-uniform axial field in a small ball, smoothly cut to zero,
    /// divergence-free by construction.
    SolenoidBump {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: Vec3,
        #[serde(default = "default_axis")]
        axis: Vec3,
    },
    Sum {
        terms: Vec<BField>,
    },
}

fn default_axis() -> Vec3 {
    [0.0, 0.0, 1.0]
}

impl BField {
    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self {
            BField::Zero => [0.0; 3],
            BField::SolenoidBump {
                amp,
                width,
                center,
                axis,
            } => {
                let a = normalize(*axis);
                let d = sub(x, *center);
                let z = dot(d, a);
                let radial = sub(d, scale(a, z));
                let rho = norm(radial);
                let w2 = width * width;
                let g = (-(rho * rho + z * z) / w2).exp();
                // B_rho = -d/dz (amp rho g);  B_z = (1/rho) d/drho (amp rho^2 g)
                let b_rho = amp * rho * (2.0 * z / w2) * g;
                let b_z = amp * (2.0 - 2.0 * rho * rho / w2) * g;
                let rho_hat = if rho > 1e-14 {
                    scale(radial, 1.0 / rho)
                } else {
                    [0.0; 3]
                };
                add(scale(rho_hat, b_rho), scale(a, b_z))
            }
            BField::Sum { terms } => {
                let mut acc = [0.0; 3];
                for t in terms {
                    acc = add(acc, t.eval(x));
                }
                acc
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BField::Zero => true,
            BField::SolenoidBump { amp, .. } => *amp == 0.0,
            BField::Sum { terms } => terms.iter().all(|t| t.is_zero()),
        }
    }

    /// Support radius estimate (field negligible beyond it).
    pub fn support_radius(&self) -> f64 {
        match self {
            BField::Zero => 0.0,
            BField::SolenoidBump { width, center, .. } => norm(*center) + 6.0 * width,
            BField::Sum { terms } => terms
                .iter()
                .map(|t| t.support_radius())
                .fold(0.0, f64::max),
        }
    }

    pub fn sample(&self, grid: Grid3) -> VectorField {
        VectorField::from_real_fn(grid, |x| self.eval(x))
    }
}

// ---------------------------------------------------------------------------
// magnetic potentials

/// Magnetic potentials with known decay and flux data.
#[derive(Debug, Clone)]
pub enum MagneticPotential {
    Zero,
    /// Rescaled unit-current loop field along a torus core circle.
    AbLoop {
        center: Vec3,
        axis: Vec3,
        major: f64,
        flux: f64,
    },
    /// Transverse-gauge potential of an analytic solenoidal field, evaluated
    /// pointwise by Biot-Savart quadrature over the field support.
    CoulombAnalytic { b: BField, quad_points: usize },
    /// Gradient of the compactly concentrated bump
    /// `mu = amp * exp(-|x-center|^2/width^2)`; a pure gauge direction.
    GradBump { center: Vec3, amp: f64, width: f64 },
    Sum(Vec<MagneticPotential>),
}

impl MagneticPotential {
    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self {
            MagneticPotential::Zero => [0.0; 3],
            MagneticPotential::AbLoop {
                center,
                axis,
                major,
                flux,
            } => ab_loop_eval(*center, *axis, *major, *flux, x),
            MagneticPotential::CoulombAnalytic { b, quad_points } => {
                biot_savart(b, x, *quad_points)
            }
            MagneticPotential::GradBump { center, amp, width } => {
                let d = sub(x, *center);
                let w2 = width * width;
                let mu = amp * (-dot(d, d) / w2).exp();
                scale(d, -2.0 * mu / w2)
            }
            MagneticPotential::Sum(terms) => {
                let mut acc = [0.0; 3];
                for t in terms {
                    acc = add(acc, t.eval(x));
                }
                acc
            }
        }
    }

    /// The bump value itself for the pure-gauge variant (zero otherwise);
    /// used by oracles that need the gauge 0-form.
    pub fn gauge_scalar(&self, x: Vec3) -> f64 {
        match self {
            MagneticPotential::GradBump { center, amp, width } => {
                let d = sub(x, *center);
                amp * (-dot(d, d) / (width * width)).exp()
            }
            MagneticPotential::Sum(terms) => terms.iter().map(|t| t.gauge_scalar(x)).sum(),
            _ => 0.0,
        }
    }

    /// The magnetic field this potential realizes in the exterior domain.
    pub fn b_eval(&self, x: Vec3) -> Vec3 {
        match self {
            MagneticPotential::Zero
            | MagneticPotential::AbLoop { .. }
            | MagneticPotential::GradBump { .. } => [0.0; 3],
            MagneticPotential::CoulombAnalytic { b, .. } => b.eval(x),
            MagneticPotential::Sum(terms) => {
                let mut acc = [0.0; 3];
                for t in terms {
                    acc = add(acc, t.b_eval(x));
                }
                acc
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MagneticPotential::Zero => true,
            MagneticPotential::AbLoop { flux, .. } => *flux == 0.0,
            MagneticPotential::CoulombAnalytic { b, .. } => b.is_zero(),
            MagneticPotential::GradBump { amp, .. } => *amp == 0.0,
            MagneticPotential::Sum(terms) => terms.iter().all(|t| t.is_zero()),
        }
    }

    /// Declared decay exponent.
    pub fn zeta(&self) -> f64 {
        match self {
            MagneticPotential::Zero => f64::INFINITY,
            MagneticPotential::AbLoop { .. } => 3.0,
            // transverse-gauge potential of a compact field decays like |x|^-2
            MagneticPotential::CoulombAnalytic { .. } => 2.0,
            MagneticPotential::GradBump { .. } => f64::INFINITY,
            MagneticPotential::Sum(terms) => terms
                .iter()
                .map(|t| t.zeta())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance from the evaluation singular set (loop cores) to the given
    /// points; infinite for regular potentials.
    pub fn singular_distance(&self, pts: &[Vec3]) -> f64 {
        match self {
            MagneticPotential::AbLoop {
                center,
                axis,
                major,
                ..
            } => {
                let a = normalize(*axis);
                pts.iter()
                    .map(|&p| {
                        let d = sub(p, *center);
                        let z = dot(d, a);
                        let radial = sub(d, scale(a, z));
                        let rho = norm(radial);
                        ((rho - major).powi(2) + z * z).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            MagneticPotential::Sum(terms) => terms
                .iter()
                .map(|t| t.singular_distance(pts))
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    /// Full-line integral of `A . nu` along `x + tau nu`.
    pub fn line_integral(&self, x: Vec3, nu: Vec3, tol: f64) -> Result<f64> {
        let nu = normalize(nu);
        match self {
            MagneticPotential::Zero => Ok(0.0),
            // full-line integral of an exact form vanishes
            MagneticPotential::GradBump { .. } => Ok(0.0),
            MagneticPotential::CoulombAnalytic { b, quad_points } => {
                Ok(coulomb_line_integral(b, x, nu, *quad_points))
            }
            MagneticPotential::AbLoop {
                center,
                axis,
                major,
                flux,
            } => {
                // singularity guard: the line must keep clear of the core
                let line_pts: Vec<Vec3> = (-200..=200)
                    .map(|i| add(x, scale(nu, i as f64 * 0.05 * (1.0 + major))))
                    .collect();
                if self.singular_distance(&line_pts) < 1e-3 {
                    return Err(Error::geometry(
                        "line passes too close to a flux-carrying core",
                    ));
                }
                let c = flux.abs() * (1.0 + major * major) * 8.0;
                let t0 = -dot(sub(x, *center), nu);
                let reach = (c / 2e-12).powf(0.5).clamp(100.0, 1e6);
                let f = |t: f64| {
                    dot(
                        ab_loop_eval(*center, *axis, *major, *flux, add(x, scale(nu, t))),
                        nu,
                    )
                };
                Ok(adaptive_simpson(&f, t0 - reach, t0 + reach, tol))
            }
            MagneticPotential::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.line_integral(x, nu, tol)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn sample(&self, grid: Grid3) -> VectorField {
        match self {
            // the gridded transverse-gauge potential comes from spectral
            // inversion on the box rather than pointwise quadrature
            MagneticPotential::CoulombAnalytic { b, .. } => {
                coulomb_potential_spectral(&b.sample(grid)).expect("solenoidal by construction")
            }
            MagneticPotential::Sum(terms) => {
                let mut out = VectorField::zeros(grid);
                for t in terms {
                    let s = t.sample(grid);
                    for c in 0..3 {
                        for (o, v) in out.comps[c].iter_mut().zip(&s.comps[c]) {
                            *o += v;
                        }
                    }
                }
                out
            }
            _ => VectorField::from_real_fn(grid, |x| self.eval(x)),
        }
    }

    /// Sample on a grid, zeroing values strictly inside the obstacle (the
    /// evolution is Dirichlet-masked there anyway); keeps core-circle
    /// singularities out of the discretized fields.
    pub fn sample_clamped(&self, grid: Grid3, obstacle: &ObstacleModel) -> VectorField {
        let mut f = self.sample(grid);
        if !obstacle.parts().is_empty() {
            for i in 0..grid.len() {
                if obstacle.distance(grid.node(i)) <= 0.0 {
                    for c in 0..3 {
                        f.comps[c][i] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        f
    }
}

/// Field of a unit current loop of radius `major` around `axis` at `center`,
/// scaled by `flux / 4 pi`; circulation over a once-linking loop equals
/// `flux` exactly (closed form via complete elliptic integrals).
fn ab_loop_eval(center: Vec3, axis: Vec3, major: f64, flux: f64, x: Vec3) -> Vec3 {
    if flux == 0.0 {
        return [0.0; 3];
    }
    let a = normalize(axis);
    let d = sub(x, center);
    let z = dot(d, a);
    let radial = sub(d, scale(a, z));
    let rho = norm(radial);
    let q = (major + rho) * (major + rho) + z * z;
    let k2 = (4.0 * major * rho / q).min(1.0 - 1e-14);
    let f = ellipk(k2);
    let s = ellipe(k2) / (1.0 - k2);
    let a0 = 2.0 / q.sqrt();
    let s_over_q = s / q;
    let b_z = a0 * (s_over_q * (major * major - rho * rho - z * z) + f);
    let b_rho = if rho > 1e-9 {
        (z / rho) * a0 * (s_over_q * (major * major + rho * rho + z * z) - f)
    } else {
        0.0
    };
    let rho_hat = if rho > 1e-9 {
        scale(radial, 1.0 / rho)
    } else {
        [0.0; 3]
    };
    let pref = flux / (4.0 * std::f64::consts::PI);
    scale(add(scale(rho_hat, b_rho), scale(a, b_z)), pref)
}

/// Direct Biot-Savart quadrature
/// `A(x) = (1/4pi) int B(y) x (x-y)/|x-y|^3 dy` over the field support
/// (midpoint rule on an offset cube).
fn biot_savart(b: &BField, x: Vec3, quad_points: usize) -> Vec3 {
    let r = b.support_radius();
    if r == 0.0 {
        return [0.0; 3];
    }
    let n = quad_points.max(16);
    let h = 2.0 * r / n as f64;
    let mut acc = [0.0; 3];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let y = [
                    -r + (ix as f64 + 0.5) * h,
                    -r + (iy as f64 + 0.5) * h,
                    -r + (iz as f64 + 0.5) * h,
                ];
                let by = b.eval(y);
                if by == [0.0; 3] {
                    continue;
                }
                let d = sub(x, y);
                let dist = norm(d);
                if dist < 0.5 * h {
                    continue;
                }
                acc = add(acc, scale(cross(by, d), 1.0 / (dist * dist * dist)));
            }
        }
    }
    scale(acc, h * h * h / (4.0 * std::f64::consts::PI))
}

/// Full-line integral of the transverse-gauge potential; the inner
/// parameter integral has the closed form
/// `int A.nu dtau = (1/2pi) int B(y) . ((x-y) x nu) / |(x-y)_perp|^2 dy`.
fn coulomb_line_integral(b: &BField, x: Vec3, nu: Vec3, quad_points: usize) -> f64 {
    let r = b.support_radius();
    if r == 0.0 {
        return 0.0;
    }
    let n = quad_points.max(96);
    let h = 2.0 * r / n as f64;
    // cells within this tube of the line are skipped: the 1/|c_perp|
    // singularity cancels to leading order under the angular average, so
    // the omission is O(h^2 |grad B|)
    let skip2 = (0.75 * h) * (0.75 * h);
    let mut acc = 0.0;
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let y = [
                    -r + (ix as f64 + 0.5) * h,
                    -r + (iy as f64 + 0.5) * h,
                    -r + (iz as f64 + 0.5) * h,
                ];
                let by = b.eval(y);
                if by == [0.0; 3] {
                    continue;
                }
                let c = sub(x, y);
                let along = dot(c, nu);
                let perp2 = dot(c, c) - along * along;
                if perp2 < skip2 {
                    continue;
                }
                acc += dot(by, cross(c, nu)) / perp2;
            }
        }
    }
    acc * h * h * h / (2.0 * std::f64::consts::PI)
}

/// Transverse-gauge potential on the periodic box by spectral inversion:
/// `A = curl (-Lap)^-1 B`; requires a solenoidal input.
pub fn coulomb_potential_spectral(b: &VectorField) -> Result<VectorField> {
    let grid = b.grid;
    let n = grid.n();
    let b_norm = b.l2_norm();
    let divergence = div(b);
    let rel = divergence.l2_norm() / b_norm.max(1e-300);
    // tolerance sized for grid-sampling error of analytic solenoidal fields
    if b_norm > 1e-300 && rel > 1e-3 {
        return Err(Error::validation(format!(
            "magnetic field is not solenoidal (relative divergence {rel:.2e})"
        )));
    }
    let mut specs: Vec<Vec<Complex64>> = b.comps.iter().cloned().collect();
    for s in specs.iter_mut() {
        fft3(s, n, false);
    }
    let freqs = grid.freq_table();
    let mut out = VectorField::zeros(grid);
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let idx = ix + n * (iy + n * iz);
                let p = [freqs[ix], freqs[iy], freqs[iz]];
                let p2 = dot(p, p);
                if p2 < 1e-30 {
                    continue;
                }
                // A_hat = i k x B_hat / |k|^2
                let bx = specs[0][idx];
                let by = specs[1][idx];
                let bz = specs[2][idx];
                let i = Complex64::new(0.0, 1.0);
                out.comps[0][idx] = i * (p[1] * bz - p[2] * by) / p2;
                out.comps[1][idx] = i * (p[2] * bx - p[0] * bz) / p2;
                out.comps[2][idx] = i * (p[0] * by - p[1] * bx) / p2;
            }
        }
    }
    for c in out.comps.iter_mut() {
        fft3(c, n, true);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// flux records and potential pairs

/// Prescribed circulations over the dual basis circles, one per handle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub values: Vec<f64>,
}

impl FluxSpec {
    pub fn zero(handles: usize) -> Self {
        FluxSpec {
            values: vec![0.0; handles],
        }
    }
}

/// Electric potential, magnetic potential, declared decay, and flux record.
#[derive(Debug, Clone)]
pub struct PotentialPair {
    pub a0: ElectricPotential,
    pub a: MagneticPotential,
    pub zeta: f64,
    pub flux: FluxSpec,
    pub regular: bool,
}

impl PotentialPair {
    pub fn free() -> Self {
        PotentialPair {
            a0: ElectricPotential::Zero,
            a: MagneticPotential::Zero,
            zeta: f64::INFINITY,
            flux: FluxSpec::zero(0),
            regular: true,
        }
    }

    pub fn is_free(&self) -> bool {
        self.a0.is_zero() && self.a.is_zero()
    }
}

/// Validation outcome for a constructed potential pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairValidation {
    pub decay_sup: f64,
    pub decay_pass: bool,
    pub curl_rel_error: f64,
    pub curl_pass: bool,
    pub circulation_errors: Vec<f64>,
    pub circulation_pass: bool,
}

/// Check the pair invariants on a grid: finite decay-weighted sup,
/// `curl A = B` on the region where the cutoff is one, and circulations
/// matching the flux record.
pub fn validate_pair(
    pair: &PotentialPair,
    grid: Grid3,
    kappa: &CutoffKappa,
    obstacle: &ObstacleModel,
) -> Result<PairValidation> {
    let a_grid = pair.a.sample_clamped(grid, obstacle);
    let decay = validate_decay_vector(&a_grid, pair.zeta.min(6.0), f64::INFINITY);
    let decay_pass = decay.sup.is_finite();

    // curl A = B on kappa = 1 nodes
    let curl_a = curl(&a_grid);
    let b_grid = VectorField::from_real_fn(grid, |x| pair.a.b_eval(x));
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.len() {
        if kappa.eval(grid.node(i)) >= 0.999 {
            for c in 0..3 {
                num += (curl_a.comps[c][i] - b_grid.comps[c][i]).norm_sqr();
                den += b_grid.comps[c][i].norm_sqr();
            }
        }
    }
    let curl_rel = if den > 1e-30 {
        (num / den).sqrt()
    } else {
        // zero reference field: compare the curl residual against the
        // potential's own scale
        (num * grid.cell_volume()).sqrt() / a_grid.l2_norm().max(1e-300)
    };
    let curl_pass = curl_rel < 1e-3 || (den <= 1e-30 && curl_rel < 1e-2);

    let mut circ_errors = Vec::new();
    for (j, dual) in obstacle.dual_circles().iter().enumerate() {
        let want = pair.flux.values.get(j).copied().unwrap_or(0.0);
        let got = circulation(&pair.a, dual, 1e-8)?;
        circ_errors.push((got - want).abs());
    }
    let circulation_pass = circ_errors.iter().all(|e| *e < 1e-3);
    Ok(PairValidation {
        decay_sup: decay.sup,
        decay_pass,
        curl_rel_error: curl_rel,
        curl_pass,
        circulation_errors: circ_errors,
        circulation_pass,
    })
}

// ---------------------------------------------------------------------------
// circulations and fluxes

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn circulation_once(a: &MagneticPotential, curve: &OrientedPolyline) -> f64 {
    let mut acc = 0.0;
    for (p, q) in curve.segments() {
        let d = sub(q, p);
        let half = scale(d, 0.5);
        let mid = add(p, half);
        for (node, w) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS.iter()) {
            let pt = add(mid, scale(half, *node));
            acc += w * dot(a.eval(pt), d) * 0.5;
        }
    }
    acc
}

/// Line integral of a magnetic potential along an oriented polyline by
/// per-segment Gauss quadrature, refined until converged.
pub fn circulation(a: &MagneticPotential, curve: &OrientedPolyline, tol: f64) -> Result<f64> {
    let sing = a.singular_distance(curve.nodes());
    if sing < 1e-3 {
        return Err(Error::geometry(format!(
            "curve passes within {sing:.2e} of a potential singularity"
        )));
    }
    let mut c = curve.clone();
    let mut prev = circulation_once(a, &c);
    for _ in 0..10 {
        c = c.refined();
        let next = circulation_once(a, &c);
        if (next - prev).abs() < tol.max(1e-13) {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Hole flux: the circulation over the closed completion of an admissible
/// line through a hole (chord truncated at the bounding radius plus the
/// return arc).
pub fn hole_flux(
    a: &MagneticPotential,
    x: Vec3,
    v_hat: Vec3,
    obstacle: &ObstacleModel,
) -> Result<f64> {
    let class = classify_line(x, v_hat, obstacle)?;
    if class.is_zero() {
        return Err(Error::geometry(
            "hole flux needs a line that goes through holes",
        ));
    }
    let completion =
        crate::geometry::closed_line_completion(x, v_hat, obstacle.bounding_radius())
            .ok_or_else(|| Error::geometry("line misses the bounding ball"))?;
    circulation(a, &completion, 1e-8)
}

// ---------------------------------------------------------------------------
// gauge functions

/// A gauge function connecting two potentials with equal fluxes:
/// `lambda(x) = int_{x0 -> x} (A_tilde - A)`, together with its constant
/// value at infinity.
#[derive(Debug, Clone)]
pub struct GaugeFunction {
    a: MagneticPotential,
    a_tilde: MagneticPotential,
    obstacle: ObstacleModel,
    pub x0: Vec3,
    pub lambda_inf: f64,
}

impl GaugeFunction {
    /// Exact gradient of the gauge function.
    pub fn grad(&self, x: Vec3) -> Vec3 {
        sub(self.a_tilde.eval(x), self.a.eval(x))
    }

    /// Path-integral evaluation (path auto-routed around the obstacle).
    pub fn eval(&self, x: Vec3) -> Result<f64> {
        let path = path_avoiding(self.x0, x, &self.obstacle)?;
        let diff = MagneticPotential::Sum(vec![self.a_tilde.clone(), negated(&self.a)]);
        circulation(&diff, &path, 1e-9)
    }
}

fn negated(a: &MagneticPotential) -> MagneticPotential {
    match a {
        MagneticPotential::Zero => MagneticPotential::Zero,
        MagneticPotential::AbLoop {
            center,
            axis,
            major,
            flux,
        } => MagneticPotential::AbLoop {
            center: *center,
            axis: *axis,
            major: *major,
            flux: -flux,
        },
        MagneticPotential::CoulombAnalytic { b, quad_points } => {
            MagneticPotential::CoulombAnalytic {
                b: negate_b(b),
                quad_points: *quad_points,
            }
        }
        MagneticPotential::GradBump { center, amp, width } => MagneticPotential::GradBump {
            center: *center,
            amp: -amp,
            width: *width,
        },
        MagneticPotential::Sum(terms) => {
            MagneticPotential::Sum(terms.iter().map(negated).collect())
        }
    }
}

fn negate_b(b: &BField) -> BField {
    match b {
        BField::Zero => BField::Zero,
        BField::SolenoidBump {
            amp,
            width,
            center,
            axis,
        } => BField::SolenoidBump {
            amp: -amp,
            width: *width,
            center: *center,
            axis: *axis,
        },
        BField::Sum { terms } => BField::Sum {
            terms: terms.iter().map(negate_b).collect(),
        },
    }
}

/// Simple differentiable path from `x0` to `x` staying clear of the
/// obstacle: the straight segment when admissible, otherwise a radial
/// detour over the bounding sphere.
pub fn path_avoiding(x0: Vec3, x: Vec3, obstacle: &ObstacleModel) -> Result<OrientedPolyline> {
    let clear = |a: Vec3, b: Vec3| -> bool {
        if obstacle.parts().is_empty() {
            return true;
        }
        let steps = 200;
        (0..=steps).all(|i| {
            let t = i as f64 / steps as f64;
            obstacle.distance(add(scale(a, 1.0 - t), scale(b, t))) > 1e-3
        })
    };
    if norm(sub(x, x0)) < 1e-12 {
        return Err(Error::geometry("gauge path endpoints coincide"));
    }
    if clear(x0, x) {
        return OrientedPolyline::open(vec![x0, x]);
    }
    let lift = |p: Vec3| -> Vec3 {
        let r = norm(p);
        let target = 1.5 * obstacle.bounding_radius() + 1.0;
        if r < 1e-9 {
            [0.0, 0.0, target]
        } else {
            scale(p, target / r)
        }
    };
    let w0 = lift(x0);
    let w1 = lift(x);
    if clear(x0, w0) && clear(w0, w1) && clear(w1, x) {
        return OrientedPolyline::open(vec![x0, w0, w1, x]);
    }
    let pole = [0.0, 0.0, 1.5 * obstacle.bounding_radius() + 1.0];
    if clear(x0, w0) && clear(w0, pole) && clear(pole, w1) && clear(w1, x) {
        return OrientedPolyline::open(vec![x0, w0, pole, w1, x]);
    }
    Err(Error::geometry("could not route a path around the obstacle"))
}

/// Build the gauge function between two potentials in the same flux class.
/// Path independence is verified on probe points; a mismatch signals
/// differing circulations.
pub fn gauge_lambda(
    a: &MagneticPotential,
    a_tilde: &MagneticPotential,
    x0: Vec3,
    obstacle: &ObstacleModel,
    tol: f64,
) -> Result<GaugeFunction> {
    let diff = MagneticPotential::Sum(vec![a_tilde.clone(), negated(a)]);
    // two paths to the same endpoint that differ by a hole-linking loop
    // disagree by exactly the circulation of the difference over that loop
    for dual in obstacle.dual_circles() {
        let loop_val = circulation(&diff, dual, 1e-9)?;
        if loop_val.abs() > tol {
            return Err(Error::validation(format!(
                "gauge path dependence {loop_val:.3e} exceeds {tol:.1e}: potentials differ in flux",
            )));
        }
    }
    let r_far = (2.5 * obstacle.bounding_radius()).max(12.0);
    // homotopic-route sanity probe
    {
        let probe = [r_far, 0.3, 0.2];
        let direct = path_avoiding(x0, probe, obstacle)?;
        let val1 = circulation(&diff, &direct, 1e-9)?;
        let way = [probe[1] + r_far, probe[2] - r_far, probe[0] + r_far];
        let leg1 = path_avoiding(x0, way, obstacle)?;
        let leg2 = path_avoiding(way, probe, obstacle)?;
        let val2 = circulation(&diff, &leg1, 1e-9)? + circulation(&diff, &leg2, 1e-9)?;
        if (val1 - val2).abs() > tol {
            return Err(Error::validation(format!(
                "gauge path dependence {:.3e} exceeds {tol:.1e} on homotopic routes",
                (val1 - val2).abs()
            )));
        }
    }
    // lambda at infinity: mean over far directions
    let mut acc = 0.0;
    let dirs = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    for d in dirs {
        let path = path_avoiding(x0, scale(d, r_far * 2.0), obstacle)?;
        acc += circulation(&diff, &path, 1e-9)?;
    }
    let lambda_inf = acc / dirs.len() as f64;
    Ok(GaugeFunction {
        a: a.clone(),
        a_tilde: a_tilde.clone(),
        obstacle: obstacle.clone(),
        x0,
        lambda_inf,
    })
}

/// Gauge transform of a potential pair: `(A0, A + grad lambda)`, leaving
/// curl and circulations unchanged.
pub fn apply_gauge(pair: &PotentialPair, grad_lambda: &MagneticPotential) -> PotentialPair {
    PotentialPair {
        a0: pair.a0.clone(),
        a: MagneticPotential::Sum(vec![pair.a.clone(), grad_lambda.clone()]),
        zeta: pair.zeta.min(grad_lambda.zeta()),
        flux: pair.flux.clone(),
        regular: pair.regular,
    }
}

// ---------------------------------------------------------------------------
// energy-form positivity

/// Report from the discretized energy-form positivity check.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub required: f64,
    pub margin: f64,
    pub pass: bool,
    pub iterations: usize,
}

/// Estimate the smallest eigenvalue of the discretized
/// `(p - A)^2 + m^2 - A0^2` with a Dirichlet mask on the obstacle interior,
/// by preconditioned Rayleigh-quotient minimization. The margin is measured
/// against the admissibility floor `0.1 m^2`.
pub fn verify_energy_positivity(
    pair: &PotentialPair,
    grid: Grid3,
    mass: f64,
    obstacle: &ObstacleModel,
) -> Result<PositivityReport> {
    let n = grid.n();
    let a = pair.a.sample_clamped(grid, obstacle);
    let a_re: [Vec<f64>; 3] = [
        a.comps[0].iter().map(|v| v.re).collect(),
        a.comps[1].iter().map(|v| v.re).collect(),
        a.comps[2].iter().map(|v| v.re).collect(),
    ];
    let a0: Vec<f64> = pair.a0.sample(grid);
    let mask: Vec<bool> = (0..grid.len())
        .map(|i| obstacle.distance(grid.node(i)) <= 0.0)
        .collect();
    let p2 = symbol_table(&grid, [0.0; 3], |p| Complex64::new(dot(p, p), 0.0));
    let grad_tables: Vec<Vec<Complex64>> = (0..3)
        .map(|j| symbol_table(&grid, [0.0; 3], |p| Complex64::new(0.0, p[j])))
        .collect();
    let precond = symbol_table(&grid, [0.0; 3], |p| {
        Complex64::new(1.0 / (dot(p, p) + mass * mass), 0.0)
    });

    let project = |v: &mut [Complex64]| {
        for (vi, &m) in v.iter_mut().zip(&mask) {
            if m {
                *vi = Complex64::new(0.0, 0.0);
            }
        }
    };

    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut w = v.to_vec();
        project(&mut w);
        let mut spec = w.clone();
        fft3(&mut spec, n, false);
        let mut kin = spec.clone();
        apply_table(&mut kin, &p2);
        fft3(&mut kin, n, true);
        let mut grads: Vec<Vec<Complex64>> = Vec::with_capacity(3);
        for t in grad_tables.iter() {
            let mut g = spec.clone();
            apply_table(&mut g, t);
            fft3(&mut g, n, true);
            grads.push(g);
        }
        // p.(A w) via spectral divergence of A w
        let mut divaw = vec![Complex64::new(0.0, 0.0); w.len()];
        for c in 0..3 {
            let mut aw: Vec<Complex64> = w
                .iter()
                .zip(&a_re[c])
                .map(|(wi, ai)| wi * ai)
                .collect();
            fft3(&mut aw, n, false);
            apply_table(&mut aw, &grad_tables[c]);
            for (d, v) in divaw.iter_mut().zip(&aw) {
                *d += v;
            }
        }
        fft3(&mut divaw, n, true);
        let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
        for i in 0..out.len() {
            // p.(A w) = -i div(A w); A.(p w) with p w = -i (grad w)
            let p_dot_aw = Complex64::new(0.0, -1.0) * divaw[i];
            let mut a_dot_pw = Complex64::new(0.0, 0.0);
            for c in 0..3 {
                a_dot_pw += a_re[c][i] * Complex64::new(0.0, -1.0) * grads[c][i];
            }
            let a2 =
                a_re[0][i] * a_re[0][i] + a_re[1][i] * a_re[1][i] + a_re[2][i] * a_re[2][i];
            out[i] =
                kin[i] - p_dot_aw - a_dot_pw + (a2 + mass * mass - a0[i] * a0[i]) * w[i];
        }
        project(&mut out);
        out
    };

    // deterministic start: broad bump away from the obstacle interior
    let mut x: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let p = grid.node(i);
            Complex64::new((-0.05 * dot(p, p)).exp(), 0.0)
        })
        .collect();
    project(&mut x);
    let inner_re =
        |u: &[Complex64], v: &[Complex64]| -> f64 { u.iter().zip(v).map(|(a, b)| (a.conj() * b).re).sum() };
    let inner_c = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
    };
    let normalize_vec = |u: &mut [Complex64]| {
        let s = inner_re(u, u).sqrt().max(1e-300);
        for v in u.iter_mut() {
            *v /= s;
        }
    };
    normalize_vec(&mut x);
    let mut rho = 0.0;
    let mut iterations = 0;
    for it in 0..160 {
        iterations = it + 1;
        let ax = apply(&x);
        rho = inner_re(&x, &ax);
        let mut r: Vec<Complex64> = ax.iter().zip(&x).map(|(a, b)| a - rho * b).collect();
        let rnorm = inner_re(&r, &r).sqrt();
        if rnorm < 1e-9 * rho.abs().max(1.0) {
            break;
        }
        fft3(&mut r, n, false);
        apply_table(&mut r, &precond);
        fft3(&mut r, n, true);
        project(&mut r);
        // Rayleigh-Ritz on span{x, r}
        let xr = inner_c(&x, &r);
        for i in 0..r.len() {
            r[i] -= xr * x[i];
        }
        let rn = inner_re(&r, &r).sqrt();
        if rn < 1e-14 {
            break;
        }
        for v in r.iter_mut() {
            *v /= rn;
        }
        let ar = apply(&r);
        let h11 = rho;
        let h22 = inner_re(&r, &ar);
        let h12 = inner_c(&x, &ar);
        let tr = h11 + h22;
        let det = h11 * h22 - h12.norm_sqr();
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let lam = tr / 2.0 - disc;
        let beta = lam - h11;
        let alpha = h12;
        let scale_c = (alpha.norm_sqr() + beta * beta).sqrt().max(1e-300);
        let ca = alpha / scale_c;
        let cb = beta / scale_c;
        for i in 0..x.len() {
            x[i] = ca * x[i] + cb * r[i];
        }
        normalize_vec(&mut x);
        rho = lam;
    }
    let required = 0.1 * mass * mass;
    Ok(PositivityReport {
        min_eigenvalue: rho,
        required,
        margin: rho - required,
        pass: rho >= required,
        iterations,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_kappa, Handlebody};

    fn torus_obstacle() -> ObstacleModel {
        ObstacleModel::new(vec![Handlebody::Torus {
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
            major: 2.0,
            minor: 0.5,
        }])
        .unwrap()
    }

    fn ab_potential(flux: f64) -> MagneticPotential {
        MagneticPotential::AbLoop {
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
            major: 2.0,
            flux,
        }
    }

    #[test]
    fn test_ab_zero_flux() {
        let a = ab_potential(0.0);
        assert_eq!(a.eval([1.0, 1.0, 1.0]), [0.0; 3]);
    }

    #[test]
    fn test_ab_circulation_linked_and_unlinked() {
        let obs = torus_obstacle();
        let flux = 1.7;
        let a = ab_potential(flux);
        let c = circulation(&a, &obs.dual_circles()[0], 1e-10).unwrap();
        assert!((c - flux).abs() < 1e-4, "circulation {c} vs flux {flux}");
        let far: Vec<Vec3> = (0..64)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                [8.0 + 0.7 * t.cos(), 0.7 * t.sin(), 5.0]
            })
            .collect();
        let far_loop = OrientedPolyline::closed(far).unwrap();
        let c0 = circulation(&a, &far_loop, 1e-10).unwrap();
        assert!(c0.abs() < 1e-6, "unlinked circulation {c0}");
    }

    #[test]
    fn test_ab_curl_free_off_core() {
        // analytic curl-free property probed by finite differences at points
        // at least four grid spacings from the core
        let a = ab_potential(2.0);
        let h_grid: f64 = 0.1;
        let eps = 2e-3;
        for pt in [
            [0.0, 0.0, 0.0],
            [0.9, 0.4, 0.8],
            [3.2, -1.0, 0.5],
            [0.0, 0.0, 2.0],
        ] {
            assert!(a.singular_distance(&[pt]) >= 4.0 * h_grid);
            let e = [[eps, 0.0, 0.0], [0.0, eps, 0.0], [0.0, 0.0, eps]];
            let dv = |j: usize, k: usize| {
                (a.eval(add(pt, e[k]))[j] - a.eval(sub(pt, e[k]))[j]) / (2.0 * eps)
            };
            let curl_fd = [
                dv(2, 1) - dv(1, 2),
                dv(0, 2) - dv(2, 0),
                dv(1, 0) - dv(0, 1),
            ];
            assert!(norm(curl_fd) < 1e-6, "curl at {pt:?} = {curl_fd:?}");
        }
    }

    #[test]
    fn test_ab_additivity_and_decay() {
        let a1 = ab_potential(0.8);
        let a2 = ab_potential(1.4);
        let a_sum = ab_potential(2.2);
        for pt in [[0.3, 0.1, 0.2], [4.0, 1.0, -2.0]] {
            let s = add(a1.eval(pt), a2.eval(pt));
            let d = sub(s, a_sum.eval(pt));
            assert!(norm(d) < 1e-10);
        }
        let a = ab_potential(1.0);
        for r in [20.0, 40.0, 80.0] {
            let v = norm(a.eval([r, 0.3, 0.4]));
            assert!(v * r.powi(3) < 10.0, "decay violated at r={r}");
        }
    }

    #[test]
    fn test_coulomb_spectral_roundtrip() {
        let grid = Grid3::centered(32, 16.0).unwrap();
        let b = BField::SolenoidBump {
            amp: 0.5,
            width: 1.2,
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
        };
        let b_grid = b.sample(grid);
        let a = coulomb_potential_spectral(&b_grid).unwrap();
        let back = curl(&a);
        let mut num = 0.0;
        let mut den = 0.0;
        for c in 0..3 {
            for (x, y) in back.comps[c].iter().zip(&b_grid.comps[c]) {
                num += (x - y).norm_sqr();
                den += y.norm_sqr();
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-3, "curl roundtrip rel error {rel}");
        let d = div(&a);
        assert!(d.l2_norm() / a.l2_norm() < 1e-8);
        let z = coulomb_potential_spectral(&BField::Zero.sample(grid)).unwrap();
        assert!(z.l2_norm() < 1e-14);
    }

    #[test]
    fn test_coulomb_dual_routes_agree() {
        let grid = Grid3::centered(64, 32.0).unwrap();
        let b = BField::SolenoidBump {
            amp: 0.5,
            width: 1.0,
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
        };
        let a_spec = coulomb_potential_spectral(&b.sample(grid)).unwrap();
        let pot = MagneticPotential::CoulombAnalytic {
            b: b.clone(),
            quad_points: 48,
        };
        // bulk points where the potential is well above quadrature noise
        for (ix, iy, iz) in [(34, 32, 32), (32, 34, 33), (33, 31, 32)] {
            let idx = grid.index(ix, iy, iz);
            let x = grid.node(idx);
            let direct = pot.eval(x);
            let spectral = [
                a_spec.comps[0][idx].re,
                a_spec.comps[1][idx].re,
                a_spec.comps[2][idx].re,
            ];
            let scale_ref = norm(direct).max(1e-6);
            assert!(
                norm(sub(direct, spectral)) / scale_ref < 0.08,
                "routes disagree at {x:?}: {direct:?} vs {spectral:?}"
            );
        }
    }

    #[test]
    fn test_coulomb_line_integral_closed_form() {
        let b = BField::SolenoidBump {
            amp: 0.4,
            width: 1.0,
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
        };
        let pot = MagneticPotential::CoulombAnalytic {
            b: b.clone(),
            quad_points: 48,
        };
        let x = [1.3, 0.4, 0.0];
        let nu = normalize([1.0, 0.2, 0.1]);
        let closed = pot.line_integral(x, nu, 1e-9).unwrap();
        let f = |t: f64| dot(biot_savart(&b, add(x, scale(nu, t)), 32), nu);
        let direct = adaptive_simpson(&f, -60.0, 60.0, 1e-7);
        assert!(
            (closed - direct).abs() < (0.02 * direct.abs()).max(2e-3),
            "closed {closed} vs direct {direct}"
        );
    }

    #[test]
    fn test_gauge_exact_form() {
        // A_tilde = A + grad mu with compact-ish mu: the gauge function
        // recovers mu up to the constant -mu(x0)
        let obs = torus_obstacle();
        let a = ab_potential(1.0);
        let mu_bump = MagneticPotential::GradBump {
            center: [1.0, 0.5, 2.5],
            amp: 0.7,
            width: 1.1,
        };
        let a_tilde = MagneticPotential::Sum(vec![a.clone(), mu_bump.clone()]);
        let gauge = gauge_lambda(&a, &a_tilde, [9.0, 0.0, 0.0], &obs, 1e-5).unwrap();
        let mu = |x: Vec3| {
            let d = sub(x, [1.0, 0.5, 2.5]);
            0.7 * (-dot(d, d) / (1.1 * 1.1)).exp()
        };
        let x0 = [9.0, 0.0, 0.0];
        for x in [[3.0, 0.0, 2.0], [0.0, 4.0, 1.0], [-4.0, 0.2, -1.0]] {
            let lam = gauge.eval(x).unwrap();
            let expected = mu(x) - mu(x0);
            assert!(
                (lam - expected).abs() < 1e-6,
                "gauge value {lam} vs mu difference {expected}"
            );
        }
        assert!((gauge.lambda_inf - (-mu(x0))).abs() < 1e-6);
    }

    #[test]
    fn test_gauge_flux_mismatch_detected() {
        let obs = torus_obstacle();
        let a = ab_potential(1.0);
        let a_other = ab_potential(1.6);
        let res = gauge_lambda(&a, &a_other, [9.0, 0.0, 0.0], &obs, 1e-4);
        assert!(res.is_err(), "differing fluxes must be detected");
    }

    #[test]
    fn test_apply_gauge_invariants() {
        let obs = torus_obstacle();
        let pair = PotentialPair {
            a0: ElectricPotential::Zero,
            a: ab_potential(1.0),
            zeta: 3.0,
            flux: FluxSpec { values: vec![1.0] },
            regular: true,
        };
        let grad_mu = MagneticPotential::GradBump {
            center: [0.0, 0.0, 3.0],
            amp: 0.5,
            width: 1.0,
        };
        let shifted = apply_gauge(&pair, &grad_mu);
        let c0 = circulation(&pair.a, &obs.dual_circles()[0], 1e-9).unwrap();
        let c1 = circulation(&shifted.a, &obs.dual_circles()[0], 1e-9).unwrap();
        assert!((c0 - c1).abs() < 1e-6);
        let same = apply_gauge(&pair, &MagneticPotential::Zero);
        let c2 = circulation(&same.a, &obs.dual_circles()[0], 1e-9).unwrap();
        assert!((c0 - c2).abs() < 1e-12);
    }

    #[test]
    fn test_hole_flux_values() {
        let obs = torus_obstacle();
        let flux = 1.3;
        let a = ab_potential(flux);
        let f = hole_flux(&a, [0.0, 0.2, 0.0], [0.0, 0.0, 1.0], &obs).unwrap();
        assert!((f.abs() - flux).abs() < 1e-3, "hole flux {f} vs {flux}");
        let f2 = hole_flux(&a, [0.4, -0.3, 1.0], [0.0, 0.0, 1.0], &obs).unwrap();
        assert!((f - f2).abs() < 1e-3);
        let fr = hole_flux(&a, [0.0, 0.2, 0.0], [0.0, 0.0, -1.0], &obs).unwrap();
        assert!((f + fr).abs() < 1e-3);
        let z =
            hole_flux(&MagneticPotential::Zero, [0.0, 0.2, 0.0], [0.0, 0.0, 1.0], &obs).unwrap();
        assert_eq!(z, 0.0);
        assert!(hole_flux(&a, [8.0, 0.0, 0.0], [0.0, 0.0, 1.0], &obs).is_err());
    }

    #[test]
    fn test_validate_pair_ab() {
        let obs = torus_obstacle();
        let kappa = build_kappa(&obs, 0.4, 0.2).unwrap();
        let grid = Grid3::centered(32, 16.0).unwrap();
        let pair = PotentialPair {
            a0: ElectricPotential::Zero,
            a: ab_potential(1.0),
            zeta: 3.0,
            flux: FluxSpec { values: vec![1.0] },
            regular: true,
        };
        let report = validate_pair(&pair, grid, &kappa, &obs).unwrap();
        assert!(report.circulation_pass, "{report:?}");
        assert!(report.decay_pass);
    }

    #[test]
    fn test_positivity_free_and_bounded() {
        let grid = Grid3::centered(16, 12.0).unwrap();
        let obs = ObstacleModel::empty();
        let m = 1.0;
        let free = PotentialPair::free();
        let rep = verify_energy_positivity(&free, grid, m, &obs).unwrap();
        assert!(
            (rep.min_eigenvalue - m * m).abs() < 1e-6,
            "free bottom {rep:?}"
        );
        assert!(rep.pass);
        let pair = PotentialPair {
            a0: ElectricPotential::Gaussian {
                amp: 0.5 * m,
                width: 2.0,
                center: [0.0; 3],
            },
            a: MagneticPotential::Zero,
            zeta: 2.0,
            flux: FluxSpec::zero(0),
            regular: true,
        };
        let rep = verify_energy_positivity(&pair, grid, m, &obs).unwrap();
        assert!(rep.min_eigenvalue >= m * m - 0.25 * m * m - 1e-6);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn test_positivity_violation_detected() {
        let grid = Grid3::centered(16, 12.0).unwrap();
        let obs = ObstacleModel::empty();
        let m = 1.0;
        let pair = PotentialPair {
            a0: ElectricPotential::Gaussian {
                amp: 2.0 * m,
                width: 4.0,
                center: [0.0; 3],
            },
            a: MagneticPotential::Zero,
            zeta: 2.0,
            flux: FluxSpec::zero(0),
            regular: true,
        };
        let rep = verify_energy_positivity(&pair, grid, m, &obs).unwrap();
        assert!(!rep.pass, "{rep:?}");
        assert!(rep.min_eigenvalue < 0.1 * m * m);
    }
}
