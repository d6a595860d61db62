//! Obstacle geometry: handlebody models (balls and unknotted solid tori),
//! the smooth cutoff vanishing near the obstacle, admissible line sets,
//! classification of lines through holes by Gauss linking numbers with the
//! handle core circles, partition of line supports into hole classes, and
//! the closed comparison curves built from pairs of lines.

use crate::error::{Error, Result};
use crate::grid::{Grid3, ScalarField};
use crate::math::{add, cross, cubic_roots, dot, norm, normalize, scale, sub, Vec3};
use serde::{Deserialize, Serialize};

/// One connected obstacle component.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Handlebody {
    Ball {
        center: Vec3,
        radius: f64,
    },
    /// Unknotted solid torus with circular core of radius `major` around
    /// `axis`, tube radius `minor`.
    Torus {
        center: Vec3,
        axis: Vec3,
        #[serde(rename = "R")]
        major: f64,
        #[serde(rename = "r")]
        minor: f64,
    },
}

impl Handlebody {
    /// Signed distance to the body surface (negative inside).
    pub fn signed_distance(&self, x: Vec3) -> f64 {
        match self {
            Handlebody::Ball { center, radius } => norm(sub(x, *center)) - radius,
            Handlebody::Torus {
                center,
                axis,
                major,
                minor,
            } => {
                let a = normalize(*axis);
                let d = sub(x, *center);
                let z = dot(d, a);
                let radial = sub(d, scale(a, z));
                let rho = norm(radial);
                ((rho - major).powi(2) + z * z).sqrt() - minor
            }
        }
    }

    /// Farthest surface point distance from the coordinate origin.
    pub fn extent_from_origin(&self) -> f64 {
        match self {
            Handlebody::Ball { center, radius } => norm(*center) + radius,
            Handlebody::Torus {
                center,
                major,
                minor,
                ..
            } => norm(*center) + major + minor,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Handlebody::Ball { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::geometry("ball radius must be positive"));
                }
            }
            Handlebody::Torus { major, minor, axis, .. } => {
                if *minor <= 0.0 || *major <= 0.0 {
                    return Err(Error::geometry("torus radii must be positive"));
                }
                if minor >= major {
                    return Err(Error::geometry(
                        "torus tube radius must be smaller than the core radius",
                    ));
                }
                if norm(*axis) == 0.0 {
                    return Err(Error::geometry("torus axis must be nonzero"));
                }
            }
        }
        Ok(())
    }

    /// Sample points on the body surface (used for clearance estimates).
    fn surface_samples(&self, count: usize) -> Vec<Vec3> {
        let mut out = Vec::new();
        match self {
            Handlebody::Ball { center, radius } => {
                let m = (count as f64).sqrt().ceil() as usize;
                for i in 0..m {
                    let theta = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                    for j in 0..m {
                        let phi = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                        out.push(add(
                            *center,
                            [
                                radius * theta.sin() * phi.cos(),
                                radius * theta.sin() * phi.sin(),
                                radius * theta.cos(),
                            ],
                        ));
                    }
                }
            }
            Handlebody::Torus {
                center,
                axis,
                major,
                minor,
            } => {
                let a = normalize(*axis);
                let (e1, e2) = crate::math::orthonormal_basis(a);
                let m = (count as f64).sqrt().ceil() as usize;
                for i in 0..m {
                    let u = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    let ring = add(
                        *center,
                        add(scale(e1, major * u.cos()), scale(e2, major * u.sin())),
                    );
                    let outward = normalize(sub(ring, *center));
                    for j in 0..m {
                        let v = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                        out.push(add(
                            ring,
                            add(scale(outward, minor * v.cos()), scale(a, minor * v.sin())),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Compound obstacle: a finite union of handlebodies inside a bounding ball
/// centered at the coordinate origin, plus the homology basis data (one
/// oriented core circle per torus handle).
#[derive(Debug, Clone)]
pub struct ObstacleModel {
    parts: Vec<Handlebody>,
    bounding_radius: f64,
    cores: Vec<OrientedPolyline>,
    duals: Vec<OrientedPolyline>,
}

impl ObstacleModel {
    pub fn new(parts: Vec<Handlebody>) -> Result<Self> {
        for p in &parts {
            p.validate()?;
        }
        let bounding_radius = parts
            .iter()
            .map(|p| p.extent_from_origin())
            .fold(0.0, f64::max)
            + 0.5;
        let mut cores = Vec::new();
        let mut duals = Vec::new();
        for p in &parts {
            if let Handlebody::Torus {
                center,
                axis,
                major,
                minor,
            } = p
            {
                let core = core_circle(*center, *axis, *major, 128);
                let dual = dual_circle(*center, *axis, *major, *minor);
                cores.push(core);
                duals.push(dual);
            }
        }
        // orient duals so each links its own core positively
        for (core, dual) in cores.iter().zip(duals.iter_mut()) {
            let (lk, _) = linking_number(dual, core)?;
            if lk == 0 {
                return Err(Error::geometry("dual basis circle fails to link its core"));
            }
            if lk < 0 {
                *dual = dual.reversed();
            }
        }
        Ok(ObstacleModel {
            parts,
            bounding_radius,
            cores,
            duals,
        })
    }

    /// Empty obstacle (free space).
    pub fn empty() -> Self {
        ObstacleModel {
            parts: Vec::new(),
            bounding_radius: 0.0,
            cores: Vec::new(),
            duals: Vec::new(),
        }
    }

    pub fn parts(&self) -> &[Handlebody] {
        &self.parts
    }

    /// Number of torus handles (length of the winding vectors).
    pub fn handle_count(&self) -> usize {
        self.cores.len()
    }

    /// Oriented core circles, indexed by handle.
    pub fn cores(&self) -> &[OrientedPolyline] {
        &self.cores
    }

    /// Dual basis circles: one small circle threading each hole, oriented to
    /// link its core positively. Circulations over these realize the flux
    /// record.
    pub fn dual_circles(&self) -> &[OrientedPolyline] {
        &self.duals
    }

    /// Radius of the origin-centered bounding ball.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// Distance from a point to the obstacle (infinite when empty).
    pub fn distance(&self, x: Vec3) -> f64 {
        self.parts
            .iter()
            .map(|p| p.signed_distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: Vec3) -> bool {
        self.distance(x) <= 0.0
    }

    /// Minimal surface-to-surface clearance between distinct parts,
    /// estimated by dense surface sampling.
    pub fn min_pair_clearance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.parts.len() {
            let samples = self.parts[i].surface_samples(1024);
            for (j, other) in self.parts.iter().enumerate() {
                if i == j {
                    continue;
                }
                for s in &samples {
                    best = best.min(other.signed_distance(*s));
                }
            }
        }
        best
    }
}

fn core_circle(center: Vec3, axis: Vec3, major: f64, nodes: usize) -> OrientedPolyline {
    let a = normalize(axis);
    let (e1, e2) = crate::math::orthonormal_basis(a);
    let pts = (0..nodes)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            add(
                center,
                add(scale(e1, major * t.cos()), scale(e2, major * t.sin())),
            )
        })
        .collect();
    OrientedPolyline::closed(pts).expect("core circle is non-degenerate")
}

/// Small circle around the tube of a torus handle, threading its hole once.
fn dual_circle(center: Vec3, axis: Vec3, major: f64, minor: f64) -> OrientedPolyline {
    let a = normalize(axis);
    let (e1, _) = crate::math::orthonormal_basis(a);
    let rho = minor + 0.5 * (major - minor).min(minor * 2.0);
    let nodes = 96;
    let pts = (0..nodes)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            add(
                center,
                add(scale(e1, major + rho * t.cos()), scale(a, rho * t.sin())),
            )
        })
        .collect();
    OrientedPolyline::closed(pts).expect("dual circle is non-degenerate")
}

/// Smooth cutoff vanishing near the obstacle: zero where
/// `dist(x,K) <= delta_in - width`, one where `dist(x,K) >= delta_in`, with a
/// quintic smoothstep ramp (two continuous bounded derivatives) in between.
#[derive(Debug, Clone)]
pub struct CutoffKappa {
    obstacle: ObstacleModel,
    delta_in: f64,
    width: f64,
    r_out: f64,
}

impl CutoffKappa {
    pub fn delta_in(&self) -> f64 {
        self.delta_in
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Radius such that `1 - kappa` is supported in the origin ball of this
    /// radius.
    pub fn r_out(&self) -> f64 {
        self.r_out
    }

    pub fn obstacle(&self) -> &ObstacleModel {
        &self.obstacle
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        if self.obstacle.parts().is_empty() {
            return 1.0;
        }
        let d = self.obstacle.distance(x);
        let t = (d - (self.delta_in - self.width)) / self.width;
        smoothstep(t)
    }

    pub fn sample(&self, grid: Grid3) -> ScalarField {
        ScalarField::from_real_fn(grid, |x| self.eval(x))
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Build the cutoff for an obstacle. `delta_in` is the distance at which the
/// cutoff reaches one; the ramp occupies `[delta_in - width, delta_in]`.
pub fn build_kappa(obstacle: &ObstacleModel, delta_in: f64, width: f64) -> Result<CutoffKappa> {
    if delta_in <= 0.0 || width <= 0.0 {
        return Err(Error::config("cutoff needs positive delta_in and width"));
    }
    if width > 0.5 * delta_in {
        return Err(Error::config(
            "cutoff ramp width must not exceed half of delta_in (zero zone must cover dist <= delta_in/2)",
        ));
    }
    // transition shells of distinct parts must not overlap
    if obstacle.parts().len() > 1 {
        let clearance = obstacle.min_pair_clearance();
        if clearance <= 2.0 * delta_in {
            return Err(Error::config(format!(
                "delta_in {delta_in} too large: obstacle parts are only {clearance:.3} apart"
            )));
        }
    }
    // the cutoff must be able to reach one inside torus holes
    for p in obstacle.parts() {
        if let Handlebody::Torus { major, minor, .. } = p {
            if delta_in >= major - minor {
                return Err(Error::config(
                    "delta_in too large for the torus hole (no admissible lines would remain)",
                ));
            }
        }
    }
    let r_out = obstacle.bounding_radius() + delta_in + 1.0;
    Ok(CutoffKappa {
        obstacle: obstacle.clone(),
        delta_in,
        width,
        r_out,
    })
}

// ---------------------------------------------------------------------------
// line primitives

/// Minimal distance from the full line `x + R nu` to a ball surface.
fn line_ball_clearance(x: Vec3, nu: Vec3, center: Vec3, radius: f64) -> f64 {
    let d = sub(center, x);
    let along = dot(d, nu);
    let perp2 = dot(d, d) - along * along;
    perp2.max(0.0).sqrt() - radius
}

/// True when the full line keeps distance greater than `margin` from the
/// torus obtained by inflating the tube radius by `margin`. Decided through
/// the quartic `F(t) = (u^2 + z^2 + R^2 - r^2)^2 - 4 R^2 u^2` whose sign
/// matches the signed distance off the core circle; the minimum over `t` is
/// located at the real roots of the cubic `F'`.
fn line_clears_torus(x: Vec3, nu: Vec3, center: Vec3, axis: Vec3, major: f64, minor: f64) -> bool {
    let a = normalize(axis);
    let p0 = sub(x, center);
    // decompose the line into axial and radial parts
    let z0 = dot(p0, a);
    let zv = dot(nu, a);
    let q0 = sub(p0, scale(a, z0));
    let qv = sub(nu, scale(a, zv));
    // u^2(t) = |q0 + t qv|^2, z(t) = z0 + t zv
    let ua = dot(qv, qv);
    let ub = 2.0 * dot(q0, qv);
    let uc = dot(q0, q0);
    let r2 = major * major;
    let s2 = minor * minor;
    // g(t) = u^2 + z^2 + R^2 - r^2  (quadratic)
    let ga = ua + zv * zv;
    let gb = ub + 2.0 * z0 * zv;
    let gc = uc + z0 * z0 + r2 - s2;
    // F(t) = g(t)^2 - 4 R^2 u^2(t)   (quartic)
    let f = |t: f64| {
        let g = (ga * t + gb) * t + gc;
        let u2 = (ua * t + ub) * t + uc;
        g * g - 4.0 * r2 * u2
    };
    // F' coefficients: 4 ga^2 t^3 + 6 ga gb t^2 + (2 gb^2 + 4 ga gc - 4R^2 ua) t
    //                  + (2 gb gc - 4 R^2 ub) ... derived from d/dt [g^2 - 4R^2 u^2]
    let c3 = 4.0 * ga * ga;
    let c2 = 6.0 * ga * gb;
    let c1 = 2.0 * gb * gb + 4.0 * ga * gc - 4.0 * r2 * ua;
    let c0 = 2.0 * gb * gc - 4.0 * r2 * ub;
    let mut min_f = f64::INFINITY;
    for t in cubic_roots(c3, c2, c1, c0) {
        min_f = min_f.min(f(t));
    }
    if !min_f.is_finite() {
        // derivative degenerate (line parallel setups); sample coarsely
        for i in -400..=400 {
            min_f = min_f.min(f(i as f64 * 0.05 * (major + minor)));
        }
    }
    min_f > 0.0
}

/// Does the full line `x + R nu` stay outside the obstacle inflated by
/// `margin`?
pub fn line_clears_obstacle(x: Vec3, nu: Vec3, obstacle: &ObstacleModel, margin: f64) -> bool {
    let nu = normalize(nu);
    obstacle.parts().iter().all(|p| match p {
        Handlebody::Ball { center, radius } => {
            line_ball_clearance(x, nu, *center, *radius) > margin
        }
        Handlebody::Torus {
            center,
            axis,
            major,
            minor,
        } => line_clears_torus(x, nu, *center, *axis, *major, minor + margin),
    })
}

/// Membership in the set of points whose full line misses the obstacle.
pub fn in_lambda_nu(x: Vec3, nu: Vec3, obstacle: &ObstacleModel) -> bool {
    line_clears_obstacle(x, nu, obstacle, 1e-9)
}

/// Membership in the admissible set where the cutoff is identically one
/// along the full line.
pub fn in_lambda_kappa_nu(x: Vec3, nu: Vec3, kappa: &CutoffKappa) -> bool {
    line_clears_obstacle(x, nu, kappa.obstacle(), kappa.delta_in() + 1e-9)
}

// ---------------------------------------------------------------------------
// oriented polylines and linking numbers

/// Ordered node list, optionally closed (the last node connects back to the
/// first).
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPolyline {
    nodes: Vec<Vec3>,
    closed: bool,
}

impl OrientedPolyline {
    pub fn open(nodes: Vec<Vec3>) -> Result<Self> {
        Self::build(nodes, false)
    }

    pub fn closed(nodes: Vec<Vec3>) -> Result<Self> {
        Self::build(nodes, true)
    }

    fn build(nodes: Vec<Vec3>, closed: bool) -> Result<Self> {
        if nodes.len() < 2 || (closed && nodes.len() < 3) {
            return Err(Error::geometry("polyline needs enough nodes"));
        }
        for w in nodes.windows(2) {
            if norm(sub(w[1], w[0])) < 1e-12 {
                return Err(Error::geometry("consecutive polyline nodes must be distinct"));
            }
        }
        if closed && norm(sub(nodes[0], *nodes.last().unwrap())) < 1e-12 {
            return Err(Error::geometry(
                "closed polyline must not repeat the start node at the end",
            ));
        }
        Ok(OrientedPolyline { nodes, closed })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segment endpoints in traversal order.
    pub fn segments(&self) -> Vec<(Vec3, Vec3)> {
        let mut segs: Vec<(Vec3, Vec3)> = self.nodes.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            segs.push((*self.nodes.last().unwrap(), self.nodes[0]));
        }
        segs
    }

    pub fn length(&self) -> f64 {
        self.segments()
            .iter()
            .map(|(a, b)| norm(sub(*b, *a)))
            .sum()
    }

    /// Split every segment in half.
    pub fn refined(&self) -> OrientedPolyline {
        let mut nodes = Vec::with_capacity(self.nodes.len() * 2);
        for (a, b) in self.segments() {
            nodes.push(a);
            nodes.push(scale(add(a, b), 0.5));
        }
        if !self.closed {
            nodes.push(*self.nodes.last().unwrap());
        }
        OrientedPolyline {
            nodes,
            closed: self.closed,
        }
    }

    pub fn reversed(&self) -> OrientedPolyline {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        OrientedPolyline {
            nodes,
            closed: self.closed,
        }
    }

    /// Minimal distance between the two polylines (segment-pair distances).
    pub fn separation(&self, other: &OrientedPolyline) -> f64 {
        let mut best = f64::INFINITY;
        for (a0, a1) in self.segments() {
            for (b0, b1) in other.segments() {
                best = best.min(segment_segment_distance(a0, a1, b0, b1));
            }
        }
        best
    }
}

fn segment_segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    // standard clamped closest-point computation
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(d1, d1);
    let e = dot(d2, d2);
    let f = dot(d2, r);
    let (mut s, mut t);
    if a <= 1e-30 && e <= 1e-30 {
        return norm(r);
    }
    if a <= 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(d1, r);
        if e <= 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(d1, d2);
            let denom = a * e - b * b;
            s = if denom.abs() > 1e-30 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let c1 = add(p1, scale(d1, s));
    let c2 = add(p2, scale(d2, t));
    norm(sub(c1, c2))
}

fn gauss_linking_sum(a: &OrientedPolyline, b: &OrientedPolyline) -> f64 {
    let mut acc = 0.0;
    let segs_a = a.segments();
    let segs_b = b.segments();
    for (a0, a1) in &segs_a {
        let da = sub(*a1, *a0);
        let ma = scale(add(*a0, *a1), 0.5);
        for (b0, b1) in &segs_b {
            let db = sub(*b1, *b0);
            let mb = scale(add(*b0, *b1), 0.5);
            let r = sub(ma, mb);
            let r3 = norm(r).powi(3);
            acc += dot(r, cross(da, db)) / r3;
        }
    }
    acc / (4.0 * std::f64::consts::PI)
}

/// Gauss linking number of two disjoint closed polylines: the double
/// midpoint sum, refined until stable, rounded to the nearest integer.
/// Errors when the rounding residual stays at or above 0.1 or when the
/// curves come within the separation tolerance.
pub fn linking_number(a: &OrientedPolyline, b: &OrientedPolyline) -> Result<(i64, f64)> {
    if !a.is_closed() || !b.is_closed() {
        return Err(Error::geometry("linking number needs closed curves"));
    }
    let sep = a.separation(b);
    if sep < 1e-6 {
        return Err(Error::geometry(format!(
            "curves too close for a stable linking number (separation {sep:.2e})"
        )));
    }
    let mut ca = a.clone();
    let mut cb = b.clone();
    let mut prev = gauss_linking_sum(&ca, &cb);
    for _ in 0..8 {
        // refine until segment length is well below the curve separation
        let max_seg = ca
            .segments()
            .iter()
            .chain(cb.segments().iter())
            .map(|(p, q)| norm(sub(*q, *p)))
            .fold(0.0, f64::max);
        let value = if max_seg > 0.5 * sep || (prev - prev.round()).abs() >= 0.05 {
            ca = ca.refined();
            cb = cb.refined();
            gauss_linking_sum(&ca, &cb)
        } else {
            prev
        };
        if (value - prev).abs() < 0.02 && (value - value.round()).abs() < 0.1 {
            let rounded = value.round() as i64;
            return Ok((rounded, value - value.round()));
        }
        prev = value;
    }
    let residual = prev - prev.round();
    if residual.abs() < 0.1 {
        Ok((prev.round() as i64, residual))
    } else {
        Err(Error::numerics(format!(
            "linking number failed to stabilize (value {prev:.4})"
        )))
    }
}

// ---------------------------------------------------------------------------
// line classes and partitions

/// Winding vector of a line's closed completion against each handle core:
/// the zero vector means the line does not go through holes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineClass {
    pub winding: Vec<i64>,
}

impl LineClass {
    pub fn zero(handles: usize) -> Self {
        LineClass {
            winding: vec![0; handles],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.winding.iter().all(|&w| w == 0)
    }

    pub fn negated(&self) -> Self {
        LineClass {
            winding: self.winding.iter().map(|w| -w).collect(),
        }
    }
}

/// The closed completion of a line: the chord it cuts in the origin ball of
/// radius `r`, plus a great-circle return arc on the sphere, oriented along
/// the line direction. Returns `None` when the line misses the ball.
pub fn closed_line_completion(x: Vec3, nu: Vec3, r: f64) -> Option<OrientedPolyline> {
    let nu = normalize(nu);
    let along = -dot(x, nu);
    let closest = add(x, scale(nu, along));
    let d2 = dot(closest, closest);
    if d2 >= r * r {
        return None;
    }
    let half = (r * r - d2).sqrt();
    let a = add(closest, scale(nu, -half)); // entry point
    let b = add(closest, scale(nu, half)); // exit point
    let mut nodes = Vec::new();
    // chord a -> b, oriented along nu
    let chord_steps = 32;
    for i in 0..=chord_steps {
        let t = i as f64 / chord_steps as f64;
        nodes.push(add(scale(a, 1.0 - t), scale(b, t)));
    }
    // great-circle arc b -> a on the sphere
    let ua = normalize(a);
    let ub = normalize(b);
    let cosang = dot(ua, ub).clamp(-1.0, 1.0);
    let ang = cosang.acos();
    let arc_steps = 64;
    if ang < std::f64::consts::PI - 1e-6 {
        // slerp from ub to ua (shorter arc)
        let s = ang.sin();
        for i in 1..arc_steps {
            let t = i as f64 / arc_steps as f64;
            let w1 = ((1.0 - t) * ang).sin() / s;
            let w2 = (t * ang).sin() / s;
            nodes.push(scale(add(scale(ub, w1), scale(ua, w2)), r));
        }
    } else {
        // nearly antipodal: route through a perpendicular waypoint
        let (e1, _) = crate::math::orthonormal_basis(ub);
        for i in 1..arc_steps {
            let t = std::f64::consts::PI * i as f64 / arc_steps as f64;
            nodes.push(scale(add(scale(ub, t.cos()), scale(e1, t.sin())), r));
        }
    }
    OrientedPolyline::closed(nodes).ok()
}

/// Classify a line through the obstacle complement by its winding vector
/// against each handle core.
pub fn classify_line(x: Vec3, nu: Vec3, obstacle: &ObstacleModel) -> Result<LineClass> {
    if !in_lambda_nu(x, nu, obstacle) {
        return Err(Error::geometry("line intersects the obstacle"));
    }
    let r = obstacle.bounding_radius();
    let completion = match closed_line_completion(x, nu, r) {
        Some(c) => c,
        None => return Ok(LineClass::zero(obstacle.handle_count())),
    };
    let mut winding = Vec::with_capacity(obstacle.handle_count());
    for core in obstacle.cores() {
        let (lk, _res) = linking_number(&completion, core)?;
        winding.push(lk);
    }
    Ok(LineClass { winding })
}

/// Per-sample label from [`partition_support`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportLabel {
    Out,
    Hole(usize),
}

/// Partition admissible samples into the region without holes and hole
/// classes of equal winding vector. Class indices are assigned by
/// lexicographic order of the winding vectors, so labels do not depend on
/// sample ordering or refinement.
pub fn partition_support(
    samples: &[Vec3],
    nu: Vec3,
    obstacle: &ObstacleModel,
) -> Result<(Vec<SupportLabel>, Vec<LineClass>)> {
    let mut classes: Vec<LineClass> = Vec::new();
    let mut raw = Vec::with_capacity(samples.len());
    for &s in samples {
        let class = classify_line(s, nu, obstacle)?;
        raw.push(class.clone());
        if !class.is_zero() && !classes.contains(&class) {
            classes.push(class);
        }
    }
    classes.sort();
    let labels = raw
        .into_iter()
        .map(|c| {
            if c.is_zero() {
                SupportLabel::Out
            } else {
                SupportLabel::Hole(classes.iter().position(|k| *k == c).unwrap())
            }
        })
        .collect();
    Ok((labels, classes))
}

// ---------------------------------------------------------------------------
// comparison curves

/// Closed oriented comparison curve built from two admissible lines: the
/// first line's segment traversed forward, a straight join, the second
/// line's segment traversed backward, and the closing join. The truncation
/// radius rho is grown by doubling until both far caps provably avoid the
/// obstacle bounding ball.
pub fn gamma_curve(
    x: Vec3,
    y: Vec3,
    v_hat: Vec3,
    w_hat: Vec3,
    rho0: f64,
    obstacle: &ObstacleModel,
) -> Result<(OrientedPolyline, f64)> {
    let v = normalize(v_hat);
    let w = normalize(w_hat);
    if dot(v, w) < 0.0 {
        return Err(Error::geometry(
            "gamma curve needs directions with non-negative inner product",
        ));
    }
    if !in_lambda_nu(x, v, obstacle) || !in_lambda_nu(y, w, obstacle) {
        return Err(Error::geometry("gamma curve lines must avoid the obstacle"));
    }
    let r_k = obstacle.bounding_radius().max(1.0);
    let mut rho = rho0.max(r_k + 1.0);
    let mut ok = false;
    for _ in 0..24 {
        if caps_clear(x, y, v, w, rho, r_k) {
            ok = true;
            break;
        }
        rho *= 2.0;
    }
    if !ok {
        return Err(Error::geometry(
            "could not find a truncation radius whose caps avoid the obstacle ball",
        ));
    }
    let xa = sub(x, scale(v, rho));
    let xb = add(x, scale(v, rho));
    let yb = add(y, scale(w, rho));
    let ya = sub(y, scale(w, rho));
    let nodes = vec![xa, xb, yb, ya];
    let curve = OrientedPolyline::closed(nodes)
        .map_err(|_| Error::geometry("gamma curve degenerate (coincident sides)"))?;
    // simplicity within tolerance: non-adjacent segments must stay apart
    let segs = curve.segments();
    for i in 0..segs.len() {
        for j in (i + 2)..segs.len() {
            if i == 0 && j == segs.len() - 1 {
                continue; // adjacent through closure
            }
            let d = segment_segment_distance(segs[i].0, segs[i].1, segs[j].0, segs[j].1);
            if d < 1e-9 {
                return Err(Error::geometry(
                    "gamma curve is not simple (sides intersect)",
                ));
            }
        }
    }
    Ok((curve, rho))
}

/// Conservative check that both convex caps of the truncated curve stay
/// outside the origin ball of radius `r_k`: every point q of the joining
/// segment must satisfy |q| > r_k and recede along both directions.
fn caps_clear(x: Vec3, y: Vec3, v: Vec3, w: Vec3, rho: f64, r_k: f64) -> bool {
    let margin = 1e-9;
    let far = [
        (add(x, scale(v, rho)), add(y, scale(w, rho)), v, w),
        (sub(x, scale(v, rho)), sub(y, scale(w, rho)), scale(v, -1.0), scale(w, -1.0)),
    ];
    for (a, b, dv, dw) in far {
        // min |q| over the segment [a, b]
        let d = sub(b, a);
        let t = if dot(d, d) > 0.0 {
            (-dot(a, d) / dot(d, d)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = add(a, scale(d, t));
        if norm(q) <= r_k + margin {
            return false;
        }
        // receding condition at the endpoints (affine in the segment param)
        for e in [a, b] {
            if dot(e, dv) < 0.0 || dot(e, dw) < 0.0 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_torus() -> ObstacleModel {
        ObstacleModel::new(vec![Handlebody::Torus {
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
            major: 2.0,
            minor: 0.5,
        }])
        .unwrap()
    }

    #[test]
    fn test_kappa_ball() {
        let obs = ObstacleModel::new(vec![Handlebody::Ball {
            center: [0.0; 3],
            radius: 1.0,
        }])
        .unwrap();
        let kappa = build_kappa(&obs, 0.5, 0.25).unwrap();
        assert_eq!(kappa.eval([0.0; 3]), 0.0);
        assert_eq!(kappa.eval([1.5, 0.0, 0.0]), 1.0);
        assert_eq!(kappa.eval([0.0, 0.0, 10.0]), 1.0);
        // zero on dist <= delta_in/2
        assert_eq!(kappa.eval([1.25, 0.0, 0.0]), 0.0);
        // 1 - kappa compactly supported
        assert!(kappa.r_out() < 5.0);
    }

    #[test]
    fn test_kappa_torus_hole_and_gradient_bound() {
        let obs = unit_torus();
        let kappa = build_kappa(&obs, 0.5, 0.25).unwrap();
        // axis point: analytic distance = sqrt(R^2 + 0) - r = 1.5 > delta_in
        let d = obs.distance([0.0, 0.0, 0.0]);
        assert!((d - 1.5).abs() < 1e-12);
        assert_eq!(kappa.eval([0.0, 0.0, 0.0]), 1.0);
        // gradient sup bounded by C/width, C = sup|smoothstep'| = 15/8
        let width = 0.25;
        let bound = 1.875 / width * 1.05;
        let mut sup = 0.0f64;
        let eps = 1e-5;
        for i in 0..2000 {
            let t = i as f64 / 2000.0;
            let x = [2.0 + t * 1.5, 0.3 * t, 0.2];
            let k0 = kappa.eval(x);
            let kx = kappa.eval([x[0] + eps, x[1], x[2]]);
            let ky = kappa.eval([x[0], x[1] + eps, x[2]]);
            let kz = kappa.eval([x[0], x[1], x[2] + eps]);
            let g = (((kx - k0) / eps).powi(2)
                + ((ky - k0) / eps).powi(2)
                + ((kz - k0) / eps).powi(2))
            .sqrt();
            sup = sup.max(g);
        }
        assert!(sup <= bound, "gradient sup {sup} exceeds {bound}");
    }

    #[test]
    fn test_kappa_overlapping_shells_rejected() {
        let obs = ObstacleModel::new(vec![
            Handlebody::Ball {
                center: [0.0; 3],
                radius: 1.0,
            },
            Handlebody::Ball {
                center: [2.5, 0.0, 0.0],
                radius: 1.0,
            },
        ])
        .unwrap();
        assert!(build_kappa(&obs, 0.5, 0.2).is_err());
        assert!(build_kappa(&obs, 0.2, 0.1).is_ok());
    }

    #[test]
    fn test_line_ball_membership() {
        let obs = ObstacleModel::new(vec![Handlebody::Ball {
            center: [0.0; 3],
            radius: 1.0,
        }])
        .unwrap();
        assert!(in_lambda_nu([0.0, 3.0, 0.0], [1.0, 0.0, 0.0], &obs));
        assert!(!in_lambda_nu([0.0, 0.5, 0.0], [1.0, 0.0, 0.0], &obs));
    }

    #[test]
    fn test_line_through_torus_hole() {
        let obs = unit_torus();
        // axis line threads the hole without touching the body
        assert!(in_lambda_nu([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], &obs));
        // dense sampling of the distance along the line confirms clearance
        let min_d = (-400..400)
            .map(|i| obs.distance([0.0, 0.0, i as f64 * 0.05]))
            .fold(f64::INFINITY, f64::min)
            as f64;
        assert!(min_d > 0.0);
        // a line hitting the tube is rejected
        assert!(!in_lambda_nu([2.0, 0.0, 0.0], [0.0, 0.0, 1.0], &obs));
        // kappa-admissibility needs the larger clearance
        let kappa = build_kappa(&obs, 0.5, 0.25).unwrap();
        assert!(in_lambda_kappa_nu([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], &kappa));
        assert!(!in_lambda_kappa_nu([1.2, 0.0, 0.0], [0.0, 0.0, 1.0], &kappa));
    }

    #[test]
    fn test_linking_distant_circles_zero() {
        let c1 = core_circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 64);
        let c2 = core_circle([5.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, 64);
        let (lk, res) = linking_number(&c1, &c2).unwrap();
        assert_eq!(lk, 0);
        assert!(res.abs() < 0.01);
    }

    #[test]
    fn test_linking_hopf_pair() {
        // unit circle in xy plane and a unit circle through its center in xz
        let c1 = core_circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 128);
        let c2 = core_circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 128);
        let (lk, res) = linking_number(&c1, &c2).unwrap();
        assert_eq!(lk.abs(), 1);
        assert!(res.abs() < 1e-3, "residual {res}");
        // orientation flip negates
        let (lk2, _) = linking_number(&c1, &c2.reversed()).unwrap();
        assert_eq!(lk2, -lk);
    }

    #[test]
    fn test_linking_doubly_wound() {
        // a loop winding twice around the core circle of the unit torus
        let core = core_circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 128);
        let mut nodes = Vec::new();
        let m = 256;
        for i in 0..m {
            let t = 4.0 * std::f64::consts::PI * i as f64 / m as f64;
            // small loop in the x-z plane around the core point (1,0,0)
            nodes.push([1.0 + 0.3 * t.cos(), 0.0, 0.3 * t.sin()]);
        }
        // nudge the repeated pass so consecutive nodes stay distinct
        for (i, p) in nodes.iter_mut().enumerate() {
            p[1] += 1e-4 * (i as f64);
        }
        let curve = OrientedPolyline::closed(nodes).unwrap();
        let (lk, _) = linking_number(&curve, &core).unwrap();
        assert_eq!(lk.abs(), 2);
    }

    #[test]
    fn test_linking_refinement_invariance() {
        let c1 = core_circle([0.0; 3], [0.0, 0.0, 1.0], 1.0, 32);
        let c2 = core_circle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 32);
        let coarse = gauss_linking_sum(&c1, &c2);
        let fine = gauss_linking_sum(&c1.refined().refined(), &c2.refined().refined());
        assert!((coarse - fine).abs() < 0.1);
    }

    #[test]
    fn test_classify_far_line_zero() {
        let obs = unit_torus();
        let class = classify_line([0.0, 50.0, 0.0], [1.0, 0.0, 0.0], &obs).unwrap();
        assert!(class.is_zero());
    }

    #[test]
    fn test_classify_axis_line_and_antisymmetry() {
        let obs = unit_torus();
        let up = classify_line([0.0, 0.3, 0.0], [0.0, 0.0, 1.0], &obs).unwrap();
        assert_eq!(up.winding.len(), 1);
        assert_eq!(up.winding[0].abs(), 1);
        let down = classify_line([0.0, 0.3, 0.0], [0.0, 0.0, -1.0], &obs).unwrap();
        assert_eq!(down, up.negated());
        // signed-crossing oracle on the projection confirms |winding| = 1
        let completion = closed_line_completion([0.0, 0.3, 0.0], [0.0, 0.0, 1.0], obs.bounding_radius()).unwrap();
        let crossings = signed_crossings(&completion, &obs.cores()[0]);
        assert_eq!(crossings.abs(), 1);
    }

    /// Signed crossing count of projections onto the plane normal to a
    /// generic direction; an independent oracle for linking numbers.
    fn signed_crossings(a: &OrientedPolyline, b: &OrientedPolyline) -> i64 {
        let dir = normalize([0.123, 0.456, 0.789]);
        let (e1, e2) = crate::math::orthonormal_basis(dir);
        let proj = |p: Vec3| -> (f64, f64, f64) { (dot(p, e1), dot(p, e2), dot(p, dir)) };
        let mut total = 0i64;
        for (a0, a1) in a.segments() {
            let (ax0, ay0, az0) = proj(a0);
            let (ax1, ay1, az1) = proj(a1);
            for (b0, b1) in b.segments() {
                let (bx0, by0, bz0) = proj(b0);
                let (bx1, by1, bz1) = proj(b1);
                // 2D segment intersection
                let d1 = (ax1 - ax0, ay1 - ay0);
                let d2 = (bx1 - bx0, by1 - by0);
                let denom = d1.0 * d2.1 - d1.1 * d2.0;
                if denom.abs() < 1e-15 {
                    continue;
                }
                let rx = bx0 - ax0;
                let ry = by0 - ay0;
                let t = (rx * d2.1 - ry * d2.0) / denom;
                let u = (rx * d1.1 - ry * d1.0) / denom;
                if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
                    let za = az0 + t * (az1 - az0);
                    let zb = bz0 + u * (bz1 - bz0);
                    let over = if za > zb { 1.0 } else { -1.0 };
                    let sign = if denom > 0.0 { 1.0 } else { -1.0 };
                    total += (over * sign) as i64;
                }
            }
        }
        total / 2
    }

    #[test]
    fn test_partition_support() {
        let obs = unit_torus();
        let nu = [0.0, 0.0, 1.0];
        // far samples -> all out
        let far: Vec<Vec3> = (0..5).map(|i| [20.0 + i as f64, 0.0, 0.0]).collect();
        let (labels, classes) = partition_support(&far, nu, &obs).unwrap();
        assert!(labels.iter().all(|l| *l == SupportLabel::Out));
        assert!(classes.is_empty());
        // hole samples -> one class, outside -> out
        let mixed = vec![
            [0.0, 0.0, 0.0],
            [0.5, 0.0, -3.0],
            [4.0, 0.0, 0.0],
            [0.0, -0.5, 2.0],
        ];
        let (labels, classes) = partition_support(&mixed, nu, &obs).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(labels[0], SupportLabel::Hole(0));
        assert_eq!(labels[1], SupportLabel::Hole(0));
        assert_eq!(labels[2], SupportLabel::Out);
        assert_eq!(labels[3], SupportLabel::Hole(0));
        // translation along nu does not change labels
        let shifted: Vec<Vec3> = mixed.iter().map(|p| add(*p, scale(nu, 7.3))).collect();
        let (labels2, _) = partition_support(&shifted, nu, &obs).unwrap();
        assert_eq!(labels, labels2);
    }

    #[test]
    fn test_two_stacked_tori_distinct_classes() {
        let obs = ObstacleModel::new(vec![
            Handlebody::Torus {
                center: [0.0, 0.0, -4.0],
                axis: [0.0, 0.0, 1.0],
                major: 2.0,
                minor: 0.4,
            },
            Handlebody::Torus {
                center: [0.0, 0.0, 4.0],
                axis: [0.0, 0.0, 1.0],
                major: 3.2,
                minor: 0.4,
            },
        ])
        .unwrap();
        let nu = [0.0, 0.0, 1.0];
        // a line through both holes vs a line threading only the bigger torus
        let both = classify_line([0.5, 0.0, 0.0], nu, &obs).unwrap();
        let outer_only = classify_line([2.6, 0.0, 0.0], nu, &obs).unwrap();
        assert!(!both.is_zero() && !outer_only.is_zero());
        assert_ne!(both, outer_only);
        let (_, classes) =
            partition_support(&[[0.5, 0.0, 0.0], [2.6, 0.0, 0.0]], nu, &obs).unwrap();
        assert_eq!(classes.len(), 2);
    }

    #[test]
    fn test_gamma_curve_cases() {
        let obs = unit_torus();
        // coincident sides rejected
        assert!(gamma_curve(
            [0.0, 0.3, 0.0],
            [0.0, 0.3, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
            4.0,
            &obs
        )
        .is_err());
        // parallel lines missing all holes: zero linking with the core
        let (curve, _rho) = gamma_curve(
            [4.0, 0.0, 0.0],
            [5.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
            4.0,
            &obs,
        )
        .unwrap();
        let (lk, _) = linking_number(&curve, &obs.cores()[0]).unwrap();
        assert_eq!(lk, 0);
        // one line through the hole, one outside: linking +-1
        let (curve, _rho) = gamma_curve(
            [0.0, 0.3, 0.0],
            [5.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
            4.0,
            &obs,
        )
        .unwrap();
        let (lk, _) = linking_number(&curve, &obs.cores()[0]).unwrap();
        assert_eq!(lk.abs(), 1);
    }

    #[test]
    fn test_obstacle_json_schema() {
        let json = r#"{"type":"torus","center":[0,0,0],"axis":[0,0,1],"R":2.0,"r":0.5}"#;
        let part: Handlebody = serde_json::from_str(json).unwrap();
        match part {
            Handlebody::Torus { major, minor, .. } => {
                assert_eq!(major, 2.0);
                assert_eq!(minor, 0.5);
            }
            _ => panic!("expected torus"),
        }
        let json = r#"{"type":"ball","center":[1,0,0],"radius":0.7}"#;
        let part: Handlebody = serde_json::from_str(json).unwrap();
        matches!(part, Handlebody::Ball { .. });
    }
}
