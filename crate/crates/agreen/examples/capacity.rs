//! Capacity of polygonal approximations of disks against the radial
//! closed forms: C_A = √2·r for the isotropic p = 2 operator and
//! 27 r²/(16π) for p = 4.

use agreen::green::{capacity, GreenConfig};
use agreen::operators::{OperatorSpec, Vec2};
use agreen::polytope::regular_polygon;

fn main() {
    let cfg = GreenConfig { h_factor: 48.0, ..Default::default() };
    let exact_p2 = |r: f64| 2.0f64.sqrt() * r;
    let exact_p4 = |r: f64| 27.0 * r * r / (16.0 * std::f64::consts::PI);
    let cases: [(OperatorSpec, &dyn Fn(f64) -> f64); 2] = [
        (OperatorSpec::isotropic(2.0), &exact_p2),
        (OperatorSpec::isotropic(4.0), &exact_p4),
    ];
    for (op, exact) in cases {
        println!("p = {}", op.p);
        for r in [0.5, 1.0, 2.0] {
            let disk = regular_polygon(64, r, Vec2::zeros());
            let res = capacity(&op, &disk, &cfg).unwrap();
            let want = exact(r);
            println!(
                "  r = {r}: C_A = {:.6} (exact {:.6}, rel err {:+.2e}, k-spread {:.1e})",
                res.capacity,
                want,
                res.capacity / want - 1.0,
                res.diagnostics.k_spread
            );
        }
    }
}
