//! Fundamental solutions F for three operators: evaluate, check the
//! vanishing A-mass defect on circles and the gauge duality identity.

use agreen::fundamental::FundamentalSolution;
use agreen::operators::{Mat2, OperatorSpec, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let ops = [
        ("isotropic p=2", OperatorSpec::isotropic(2.0)),
        ("isotropic p=4", OperatorSpec::isotropic(4.0)),
        (
            "ellipsoidal p=3, W=diag(1,4)",
            OperatorSpec::ellipsoidal(3.0, Mat2::new(1.0, 0.0, 0.0, 4.0)).unwrap(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, op) in &ops {
        let fund = FundamentalSolution::new(op).unwrap();
        println!("{name}: C = {:.10}, gamma = {:.10}", fund.c, fund.gamma);
        for r in [0.5, 1.0, 2.0, 10.0] {
            println!("  A-mass at |x| = {r:>4}: {:+.3e}", fund.check_mass(r, 4096) - 1.0);
        }
        println!(
            "  F(e1) = {:.6}, F(2 e2) = {:.6}",
            fund.eval(Vec2::new(1.0, 0.0)),
            fund.eval(Vec2::new(0.0, 2.0))
        );
        // (h ∇h) ∘ (k ∇k) = id: the dual gauge inverts the gauge map
        let dg = op.dual_gauge();
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let eta = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if eta.norm() < 1e-3 {
                continue;
            }
            let x = op.k(eta) * op.grad_k(eta);
            let back = dg.eval_h(x) * dg.eval_grad_h(x);
            worst = worst.max((back - eta).norm() / eta.norm());
        }
        println!("  duality defect over 1000 samples: {worst:.3e}");
    }
}
