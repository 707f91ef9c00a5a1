//! Hadamard variational formula: the derivative of t ↦ C_A(E₁ + tE₂)
//! computed by finite differences against the boundary integral
//! ∮ h₂(𝐠) f(∇u) dH¹ with its capacity-dependent prefactor.

use agreen::green::GreenConfig;
use agreen::operators::{OperatorSpec, Vec2};
use agreen::polytope::box_body;
use agreen::verify::hadamard_check;

fn main() {
    let square = box_body(1.0, 1.0, Vec2::zeros());
    let diamond = {
        let s = 0.5f64.sqrt();
        let normals = vec![
            Vec2::new(s, s),
            Vec2::new(-s, s),
            Vec2::new(-s, -s),
            Vec2::new(s, -s),
        ];
        agreen::polytope::build_polytope(&normals, &[s; 4]).unwrap()
    };
    let cfg = GreenConfig { h_factor: 48.0, ..Default::default() };
    for op in [OperatorSpec::isotropic(2.0), OperatorSpec::isotropic(3.0)] {
        let rep = hadamard_check(&op, &square, &diamond, &[0.0, 0.25, 0.5], &cfg).unwrap();
        println!("square + t·diamond, p = {}:", op.p);
        for i in 0..rep.ts.len() {
            println!(
                "  t = {:.2}: d/dt FD {:.6} vs integral {:.6} (rel err {:.2e})",
                rep.ts[i],
                rep.fd_derivative[i],
                rep.surface_integral[i],
                rep.relative_errors[i]
            );
        }
    }
}
