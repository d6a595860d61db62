//! Small numerical utilities shared across the crate: 3-vector helpers,
//! adaptive quadrature, complete elliptic integrals, least-squares line fits,
//! cubic root finding, and a conjugate-gradient solver for positive operators.

/// 3-vector alias. Fields live on grids; geometry works on plain arrays.
pub type Vec3 = [f64; 3];

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    assert!(n > 0.0, "cannot normalize zero vector");
    scale(a, 1.0 / n)
}

/// Two unit vectors completing `axis` to an orthonormal right-handed frame.
pub fn orthonormal_basis(axis: Vec3) -> (Vec3, Vec3) {
    let a = normalize(axis);
    let helper = if a[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = normalize(cross(helper, a));
    let e2 = cross(a, e1);
    (e1, e2)
}

/// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Complete elliptic integral of the first kind K(k²), AGM iteration.
pub fn ellipk(k2: f64) -> f64 {
    assert!((0.0..1.0).contains(&k2), "ellipk domain: 0 <= k2 < 1");
    let mut a = 1.0_f64;
    let mut b = (1.0 - k2).sqrt();
    for _ in 0..64 {
        if (a - b).abs() < 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::FRAC_PI_2 / a
}

/// Complete elliptic integral of the second kind E(k²), AGM iteration.
pub fn ellipe(k2: f64) -> f64 {
    assert!((0.0..1.0).contains(&k2), "ellipe domain: 0 <= k2 < 1");
    let mut a = 1.0_f64;
    let mut b = (1.0 - k2).sqrt();
    let mut c2_sum = 0.5 * k2;
    let mut pow2 = 0.5_f64;
    for _ in 0..64 {
        if (a - b).abs() < 1e-16 * a {
            break;
        }
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow2 *= 2.0;
        c2_sum += pow2 * c * c;
    }
    std::f64::consts::FRAC_PI_2 / a * (1.0 - c2_sum)
}

/// Least-squares fit y = slope * x + intercept; returns (slope, intercept, rms residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points for a line fit");
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Real roots of a*t^3 + b*t^2 + c*t + d = 0 (trigonometric/Cardano method).
/// Degenerate leading coefficients fall back to the quadratic/linear case.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a.abs() < 1e-14 * (b.abs() + c.abs() + d.abs() + 1.0) {
        // quadratic
        if b.abs() < 1e-300 {
            if c.abs() < 1e-300 {
                return vec![];
            }
            return vec![-d / c];
        }
        let disc = c * c - 4.0 * b * d;
        if disc < 0.0 {
            return vec![];
        }
        let s = disc.sqrt();
        return vec![(-c + s) / (2.0 * b), (-c - s) / (2.0 * b)];
    }
    let b = b / a;
    let c = c / a;
    let d = d / a;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        vec![u + v + shift]
    } else if p.abs() < 1e-14 {
        vec![shift]
    } else {
        // three real roots
        let r = (-p / 3.0).sqrt();
        let phi = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0).acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + shift)
            .collect()
    };
    // one Newton polish per root
    for t in roots.iter_mut() {
        for _ in 0..2 {
            let f = ((*t + b) * *t + c) * *t + d;
            let df = (3.0 * *t + 2.0 * b) * *t + c;
            if df.abs() > 1e-30 {
                *t -= f / df;
            }
        }
    }
    roots
}

/// Conjugate gradient solve for a positive self-adjoint operator given as a
/// closure over complex vectors. Returns the iterate count.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[num_complex::Complex64],
    x: &mut [num_complex::Complex64],
    tol: f64,
    max_iter: usize,
) -> usize
where
    F: Fn(&[num_complex::Complex64]) -> Vec<num_complex::Complex64>,
{
    use num_complex::Complex64;
    let inner = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        u.iter().zip(v).map(|(a, c)| a.conj() * c).sum()
    };
    let ax = apply(x);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs = inner(&r, &r).re;
    let b_norm = inner(b, b).re.sqrt().max(1e-300);
    for it in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            return it;
        }
        let ap = apply(&p);
        let alpha = rs / inner(&p, &ap).re;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = inner(&r, &r).re;
        let beta = rs_new / rs;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    max_iter
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Reduce to [0, 2*pi).
pub fn mod_two_pi(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w < 0.0 {
        w += two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_adaptive_simpson_gaussian() {
        let v = adaptive_simpson(&|t: f64| (-t * t).exp(), -20.0, 20.0, 1e-12);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn test_elliptic_special_values() {
        // K(0) = E(0) = pi/2
        assert!((ellipk(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!((ellipe(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        // K(0.5) and E(0.5) against quadrature
        let k_quad = adaptive_simpson(
            &|t: f64| 1.0 / (1.0 - 0.5 * t.sin() * t.sin()).sqrt(),
            0.0,
            std::f64::consts::FRAC_PI_2,
            1e-13,
        );
        let e_quad = adaptive_simpson(
            &|t: f64| (1.0 - 0.5 * t.sin() * t.sin()).sqrt(),
            0.0,
            std::f64::consts::FRAC_PI_2,
            1e-13,
        );
        assert!((ellipk(0.5) - k_quad).abs() < 1e-10);
        assert!((ellipe(0.5) - e_quad).abs() < 1e-10);
    }

    #[test]
    fn test_cubic_roots() {
        // (t-1)(t-2)(t-3) = t^3 -6t^2 +11t -6
        let mut r = cubic_roots(1.0, -6.0, 11.0, -6.0);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r.len(), 3);
        assert!((r[0] - 1.0).abs() < 1e-9);
        assert!((r[1] - 2.0).abs() < 1e-9);
        assert!((r[2] - 3.0).abs() < 1e-9);
        // single real root
        let r = cubic_roots(1.0, 0.0, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-9_f64.max(1e-9));
    }

    #[test]
    fn test_linear_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.1, 4.1, 6.1, 8.1];
        let (s, i, res) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-12);
        assert!((i - 0.1).abs() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn test_wrap_angle() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!(wrap_angle(-std::f64::consts::PI) > 0.0);
        assert!((mod_two_pi(-0.5) - (2.0 * std::f64::consts::PI - 0.5)).abs() < 1e-12);
    }
}
