//! Green's function with pole at infinity for a pentagon: the Robin-type
//! constant k(∞), values along a ray, and convexity of the level sets.

use agreen::green::{check_level_convexity, greens_function, GreenConfig};
use agreen::operators::{OperatorSpec, Vec2};
use agreen::polytope::regular_polygon;

fn main() {
    let op = OperatorSpec::isotropic(3.0);
    let body = regular_polygon(5, 1.0, Vec2::new(0.2, -0.1));
    let cfg = GreenConfig { h_factor: 48.0, ..Default::default() };
    let g = greens_function(&op, &body, &cfg).unwrap();
    println!("capacity = {:.6}, k(inf) = {:.6}", g.capacity, g.k_infinity);
    println!("mesh: {} nodes, min angle {:.1} deg", g.diagnostics.nodes, g.diagnostics.mesh_min_angle_deg);

    // G grows from 0 on the boundary towards F + k(inf)
    println!("values along the +x ray (body frame):");
    for r in [1.1, 1.5, 2.0, 4.0, 8.0] {
        let x = Vec2::new(r, 0.0);
        if let Some(v) = g.field.eval(x) {
            println!("  G({r:>4}, 0) = {:.6}", v);
        }
    }

    // Lemma-style check: sublevel sets of G are convex
    for rep in check_level_convexity(&g, &[0.2, 0.4, 0.6, 0.8], 256).unwrap() {
        println!(
            "level {:.4}: min turn {:+.4e} -> {}",
            rep.level,
            rep.min_turn,
            if rep.convex { "convex" } else { "NOT convex" }
        );
    }
}
