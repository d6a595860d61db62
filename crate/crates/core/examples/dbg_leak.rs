use kgscatter_core::dynamics::{propagation_leakage, velocity};
use kgscatter_core::grid::{Grid3, ScalarField};
use kgscatter_core::math::{dot, norm, sub, Vec3};
use num_complex::Complex64;

fn bump(r2: f64) -> f64 { if r2 >= 1.0 { 0.0 } else { (-r2 / (1.0 - r2)).exp() } }

fn main() {
    let mass = 3.5;
    let grid = Grid3::centered(256, 76.8).unwrap();
    let phi = ScalarField::from_fn(grid, |x| {
        Complex64::from_polar((-dot(x, x) / 8.0).exp(), 7.3 * x[0])
    });
    let x0 = [0.9, 0.0, 0.0];
    let r0 = 0.44;
    let f = move |p: Vec3| -> Complex64 {
        let v = velocity(p, mass);
        let a = bump(((v[0] - 0.9) / 0.045).powi(2));
        let b = bump((v[1] * v[1] + v[2] * v[2]) / (0.22 * 0.22));
        Complex64::new(a * b, 0.0)
    };
    for t in [5.0, 10.0, 20.0] {
        let leak = propagation_leakage(&phi, f, t, x0, r0, mass, false).unwrap();
        println!("t={t} leak={leak:.4e}");
    }
}
