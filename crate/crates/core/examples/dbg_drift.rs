use kgscatter_core::dynamics::*;
use kgscatter_core::geometry::{build_kappa, ObstacleModel};
use kgscatter_core::grid::Grid3;
use kgscatter_core::potentials::*;
use num_complex::Complex64;

fn main() {
    let grid = Grid3::centered(32, 16.0).unwrap();
    let mass = 1.0;
    let obstacle = ObstacleModel::empty();
    let kappa = build_kappa(&obstacle, 0.5, 0.25).unwrap();
    let pair = PotentialPair {
        a0: ElectricPotential::Gaussian { amp: 0.25, width: 2.0, center: [0.0; 3] },
        a: MagneticPotential::CoulombAnalytic {
            b: BField::SolenoidBump { amp: 0.3, width: 1.0, center: [0.0; 3], axis: [0.0, 0.0, 1.0] },
            quad_points: 32,
        },
        zeta: 2.0,
        flux: FluxSpec::zero(0),
        regular: true,
    };
    let setup = InteractionSetup::new(&pair, &kappa, &obstacle, grid, mass);
    let phi = gaussian_packet(grid, [-4.0, 0.0, 0.0], [1.3, 1.3, 1.3], [1.0, 0.0, 0.0],
        Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let wave = u_transform_inverse(&phi, mass).unwrap();
    for dt in [0.01, 0.005, 0.0025] {
        let (_out, rep) = interacting_evolve(&wave, &setup, 0.0, 6.0, dt).unwrap();
        println!("dt={dt} drift={:.4e} steps={}", rep.energy_drift, rep.steps);
    }
}
