//! Brunn–Minkowski inequality for the capacity: C_A(λE₁ + (1−λ)E₂) is
//! at least the combination of the endpoint capacities (on the
//! 1/(p−n)-power scale when p > n), with equality for homothets.

use agreen::green::GreenConfig;
use agreen::operators::{OperatorSpec, Vec2};
use agreen::polytope::{box_body, regular_polygon};
use agreen::verify::bm_check;

fn main() {
    let cfg = GreenConfig { h_factor: 48.0, ..Default::default() };
    let lambdas = [0.25, 0.5, 0.75];

    let square = box_body(1.0, 1.0, Vec2::zeros());
    let disk = regular_polygon(48, 1.0, Vec2::zeros());
    for (name, op) in [("p = 2", OperatorSpec::isotropic(2.0)), ("p = 3", OperatorSpec::isotropic(3.0))] {
        let rep = bm_check(&op, &square, &disk, &lambdas, &cfg).unwrap();
        println!("square vs disk, {name}:");
        for i in 0..rep.lambdas.len() {
            println!(
                "  λ = {:.2}: lhs {:.6} >= rhs {:.6} (margin {:+.4e})",
                rep.lambdas[i],
                rep.lhs[i],
                rep.rhs[i],
                rep.lhs[i] - rep.rhs[i]
            );
        }
        println!("  worst violation {:+.4e}, tol {:.4e} -> {}", rep.worst_violation, rep.tol_abs, if rep.passed() { "ok" } else { "VIOLATED" });
    }

    // homothets attain equality
    let op = OperatorSpec::isotropic(2.0);
    let small = square.scale(0.5).translate(Vec2::new(0.3, 0.1));
    let rep = bm_check(&op, &square, &small, &lambdas, &cfg).unwrap();
    println!("square vs half-scale translate (homothetic: {}):", rep.homothetic);
    for i in 0..rep.lambdas.len() {
        println!("  λ = {:.2}: equality defect {:+.4e}", rep.lambdas[i], rep.lhs[i] - rep.rhs[i]);
    }
}
