//! End-to-end acceptance suite. Each criterion prints one pass/fail line;
//! the test fails if any criterion fails. Run with `--nocapture` to see
//! the lines as they complete.

use agreen::fundamental::FundamentalSolution;
use agreen::green::{capacity, check_level_convexity, greens_function, GreenConfig, GreenResult};
use agreen::measure::{face_measures, MeasureOptions};
use agreen::minkowski::{project_closure, solve, MinkowskiProblem};
use agreen::operators::{Mat2, OperatorSpec, Vec2};
use agreen::polytope::{box_body, build_polytope, hausdorff, minkowski_combine, regular_polygon, ConvexPolytope};
use agreen::verify::{bm_check, hadamard_check, random_body};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn crit(name: &'static str, passed: bool, detail: String) -> Criterion {
    println!("[{}] {name}: {detail}", if passed { "pass" } else { "FAIL" });
    Criterion { name, passed, detail }
}

fn ops_suite() -> Vec<(&'static str, OperatorSpec)> {
    vec![
        ("iso_p2", OperatorSpec::isotropic(2.0)),
        ("iso_p4", OperatorSpec::isotropic(4.0)),
        ("ell_p3", OperatorSpec::ellipsoidal(3.0, Mat2::new(1.0, 0.0, 0.0, 4.0)).unwrap()),
    ]
}

fn diamond() -> ConvexPolytope {
    let s = 0.5f64.sqrt();
    let normals =
        vec![Vec2::new(s, s), Vec2::new(-s, s), Vec2::new(-s, -s), Vec2::new(s, -s)];
    build_polytope(&normals, &[s; 4]).unwrap()
}

/// 1: fundamental-solution mass defect at four radii, three operators.
fn c1() -> Criterion {
    let mut worst = 0.0f64;
    for (_, op) in ops_suite() {
        let fund = FundamentalSolution::new(&op).unwrap();
        for r in [0.5, 1.0, 2.0, 10.0] {
            worst = worst.max((fund.check_mass(r, 4096) - 1.0).abs());
        }
    }
    crit("fundamental mass", worst <= 1e-8, format!("max defect {worst:.2e} (tol 1e-8)"))
}

/// 2: duality identity on 1000 random vectors per operator.
fn c2() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for (_, op) in ops_suite() {
        let dg = op.dual_gauge();
        let mut done = 0;
        while done < 1000 {
            let eta = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if eta.norm() < 1e-3 {
                continue;
            }
            done += 1;
            let x = op.k(eta) * op.grad_k(eta);
            let back = dg.eval_h(x) * dg.eval_grad_h(x);
            worst = worst.max((back - eta).norm() / eta.norm());
        }
    }
    crit("gauge duality", worst <= 1e-8, format!("max defect {worst:.2e} (tol 1e-8)"))
}

/// 3: closed-form normalization constants.
fn c3() -> Criterion {
    let c2 = FundamentalSolution::new(&OperatorSpec::isotropic(2.0)).unwrap().c;
    let c4 = FundamentalSolution::new(&OperatorSpec::isotropic(4.0)).unwrap().c;
    let e2 = (c2 - std::f64::consts::TAU).abs() / std::f64::consts::TAU;
    let want4 = 32.0 * std::f64::consts::PI / 27.0;
    let e4 = (c4 - want4).abs() / want4;
    let worst = e2.max(e4);
    crit("normalization constants", worst <= 1e-10, format!("max rel err {worst:.2e} (tol 1e-10)"))
}

/// 4: disk capacity oracles with refinement halving.
fn c4() -> Criterion {
    let cfg = GreenConfig::default();
    let fine = GreenConfig { h_factor: 128.0, ..Default::default() };
    let cases: [(OperatorSpec, fn(f64) -> f64); 2] = [
        (OperatorSpec::isotropic(2.0), |r| 2.0f64.sqrt() * r),
        (OperatorSpec::isotropic(4.0), |r| 27.0 * r * r / (16.0 * std::f64::consts::PI)),
    ];
    let mut worst = 0.0f64;
    let mut halving = String::new();
    let mut ok = true;
    for (op, exact) in cases {
        for r in [0.5, 1.0, 2.0] {
            let disk = regular_polygon(64, r, Vec2::zeros());
            let err = (capacity(&op, &disk, &cfg).unwrap().capacity / exact(r) - 1.0).abs();
            worst = worst.max(err);
            ok &= err <= 0.015;
            if (r - 1.0).abs() < 1e-12 {
                let err_fine =
                    (capacity(&op, &disk, &fine).unwrap().capacity / exact(r) - 1.0).abs();
                // the error is contraction-limited below ~0.2%: beyond
                // that floor a refinement must at least halve it
                let halves = err_fine <= (0.5 * err).max(0.002);
                ok &= halves;
                halving.push_str(&format!(" p={}: {err:.2e}->{err_fine:.2e}", op.p));
            }
        }
    }
    crit("disk capacity oracles", ok, format!("max rel err {worst:.2e} (tol 1.5e-2), refinement{halving}"))
}

/// 5: scaling and translation laws of the capacity.
fn c5() -> Criterion {
    let cfg = GreenConfig::default();
    let square = box_body(1.0, 1.0, Vec2::zeros());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pentagon = loop {
        let b = random_body(&mut rng);
        if b.normals.len() == 5 {
            break b;
        }
    };
    let mut worst = 0.0f64;
    for (op, body) in [
        (OperatorSpec::isotropic(2.0), &square),
        (OperatorSpec::isotropic(3.0), &pentagon),
    ] {
        let m = if (op.p - 2.0).abs() < 1e-12 { 1.0 } else { op.p - 2.0 };
        let base = capacity(&op, body, &cfg).unwrap().capacity;
        for r in [0.5, 2.0] {
            let scaled = capacity(&op, &body.scale(r), &cfg).unwrap().capacity;
            worst = worst.max((scaled / (r.powf(m) * base) - 1.0).abs());
        }
        let y = Vec2::new(body.diameter(), 0.0);
        let moved = capacity(&op, &body.translate(y), &cfg).unwrap().capacity;
        worst = worst.max((moved / base - 1.0).abs());
    }
    crit("scaling and translation laws", worst <= 0.02, format!("max rel defect {worst:.2e} (tol 2e-2)"))
}

/// Shared solves for criteria 6, 7 and 11.
fn measure_suite() -> Vec<(String, GreenResult)> {
    let cfg = GreenConfig::default();
    let bodies = [
        ("square", box_body(1.0, 1.0, Vec2::zeros())),
        ("rectangle", box_body(1.0, 0.5, Vec2::zeros())),
        ("hexagon", regular_polygon(6, 1.0, Vec2::zeros())),
    ];
    let mut out = Vec::new();
    for p in [2.0, 3.0] {
        let op = OperatorSpec::isotropic(p);
        for (name, body) in &bodies {
            let g = greens_function(&op, body, &cfg).unwrap();
            out.push((format!("{name} p={p}"), g));
        }
    }
    out
}

/// 6: unit total mass of p f(∇u)/|∇u| dH¹.
fn c6(suite: &[(String, GreenResult)]) -> Criterion {
    let mut worst = 0.0f64;
    for (_, g) in suite {
        let rep = face_measures(g, &MeasureOptions::default()).unwrap();
        worst = worst.max((rep.mass_identity - 1.0).abs());
    }
    crit("green-measure unit mass", worst <= 0.02, format!("max defect {worst:.2e} (tol 2e-2)"))
}

/// 7: support identity p Σ h(ξ_i) c_i against its closed form.
fn c7(suite: &[(String, GreenResult)]) -> Criterion {
    let mut worst = 0.0f64;
    for (_, g) in suite {
        let rep = face_measures(g, &MeasureOptions::default()).unwrap();
        worst = worst.max((rep.support_lhs - rep.support_rhs).abs() / rep.support_rhs);
    }
    crit("support identity", worst <= 0.03, format!("max rel defect {worst:.2e} (tol 3e-2)"))
}

/// 8: Brunn–Minkowski over 50 seeded random pairs plus homothets.
fn c8() -> Criterion {
    let cfg = GreenConfig { h_factor: 40.0, ..Default::default() };
    let lambdas = [0.25, 0.5, 0.75];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pairs: Vec<_> = (0..50).map(|_| (random_body(&mut rng), random_body(&mut rng))).collect();
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for p in [2.0, 3.0] {
        let op = OperatorSpec::isotropic(p);
        for (e1, e2) in &pairs {
            let rep = bm_check(&op, e1, e2, &lambdas, &cfg).unwrap();
            worst = worst.max(rep.worst_violation - rep.tol_abs);
            if !rep.passed() {
                violations += 1;
            }
        }
    }
    // equality case: homothetic pairs
    let mut eq_worst = 0.0f64;
    for seed in [80u64, 81, 82] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e1 = random_body(&mut rng);
        let e2 = e1.scale(rng.gen_range(0.4..0.8)).translate(Vec2::new(0.1 * e1.diameter(), 0.0));
        let rep = bm_check(&OperatorSpec::isotropic(2.0), &e1, &e2, &lambdas, &cfg).unwrap();
        assert!(rep.homothetic);
        let defect = rep
            .lhs
            .iter()
            .zip(&rep.rhs)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max);
        eq_worst = eq_worst.max(defect / rep.tol_abs);
        if !rep.passed() {
            violations += 1;
        }
    }
    crit(
        "brunn-minkowski suite",
        violations == 0,
        format!("{violations} violations over 103 pairs, worst margin beyond tol {worst:+.2e}, homothet defect {eq_worst:.2}·tol"),
    )
}

/// 9: Hadamard variational formula, plus the p = n, t = 0 identity.
fn c9() -> Criterion {
    let cfg = GreenConfig { h_factor: 48.0, ..Default::default() };
    let ts = [0.0, 0.25, 0.5];
    let square = box_body(1.0, 1.0, Vec2::zeros());
    let disk = regular_polygon(48, 1.0, Vec2::zeros());
    let mut worst = 0.0f64;
    for p in [2.0, 3.0] {
        let op = OperatorSpec::isotropic(p);
        for (e1, e2) in [(&square, &diamond()), (&disk, &disk.clone())] {
            let rep = hadamard_check(&op, e1, e2, &ts, &cfg).unwrap();
            worst = worst.max(rep.max_relative_error());
        }
    }
    // E1 = E2 at t = 0 with p = n reduces to γ = n ∮ h f(∇u) dH¹
    let op = OperatorSpec::isotropic(2.0);
    let g = greens_function(&op, &disk, &cfg).unwrap();
    let rep = face_measures(&g, &MeasureOptions::default()).unwrap();
    let gamma = FundamentalSolution::new(&op).unwrap().gamma;
    let id_defect = (rep.support_lhs - gamma).abs() / gamma;
    let ok = worst <= 0.05 && id_defect <= 0.03;
    crit(
        "hadamard formula",
        ok,
        format!("max rel err {worst:.2e} (tol 5e-2), t=0 identity defect {id_defect:.2e} (tol 3e-2)"),
    )
}

/// 10: Minkowski round trips with agreement across initializations.
fn c10() -> Criterion {
    let op = OperatorSpec::isotropic(2.0);
    let cfg = GreenConfig::default();
    let mut worst_h = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut ok = true;
    let mut recovered = Vec::new();
    for body in [box_body(1.0, 1.0, Vec2::zeros()), box_body(1.0, 0.5, Vec2::zeros())] {
        let g = greens_function(&op, &body, &cfg).unwrap();
        let raw = face_measures(&g, &MeasureOptions::default()).unwrap().measure;
        let data = project_closure(&raw).unwrap();
        let mut problem = MinkowskiProblem::new(data, op.clone());
        problem.coarse_h_factor = 32.0;
        problem.fine_h_factor = 64.0;
        let sol = solve(&problem).unwrap();
        let e = sol.polytope.translate(-sol.polytope.centroid());
        worst_h = worst_h.max(hausdorff(&e, &body) / body.diameter());
        worst_res = worst_res.max(sol.max_residual());
        ok &= sol.alignment_defect <= 1e-3;
        recovered.push((problem, e));
    }
    // a second, random initialization of the rectangle problem
    let (mut problem, first) = recovered.pop().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    problem.init = Some((0..4).map(|_| rng.gen_range(0.5..2.0)).collect());
    let sol = solve(&problem).unwrap();
    let second = sol.polytope.translate(-sol.polytope.centroid());
    let agree = hausdorff(&first, &second) / first.diameter();
    ok &= worst_h <= 0.03 && worst_res <= 0.02 && agree <= 0.03;
    crit(
        "minkowski round trip",
        ok,
        format!("hausdorff {worst_h:.2e}·diam (tol 3e-2), residual {worst_res:.2e} (tol 2e-2), init agreement {agree:.2e}·diam (tol 3e-2)"),
    )
}

/// 11: convexity of sampled sublevel sets across the suite.
fn c11(suite: &[(String, GreenResult)]) -> Criterion {
    let mut checked = 0usize;
    let mut ok = true;
    let mut worst = 0.0f64;
    for (_, g) in suite {
        for rep in check_level_convexity(g, &[0.2, 0.4, 0.6, 0.8], 256).unwrap() {
            checked += 1;
            ok &= rep.convex;
            worst = worst.min(rep.min_turn);
        }
    }
    // a couple of combined random bodies as well
    let cfg = GreenConfig { h_factor: 48.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2 {
        let e = minkowski_combine(0.5, &random_body(&mut rng), &random_body(&mut rng)).unwrap();
        let g = greens_function(&OperatorSpec::isotropic(3.0), &e, &cfg).unwrap();
        for rep in check_level_convexity(&g, &[0.2, 0.4, 0.6, 0.8], 256).unwrap() {
            checked += 1;
            ok &= rep.convex;
        }
    }
    crit("level-set convexity", ok, format!("{checked} level curves, min turn {worst:+.2e}"))
}

#[test]
fn acceptance() {
    let mut results = vec![c1(), c2(), c3(), c4(), c5()];
    let suite = measure_suite();
    results.push(c6(&suite));
    results.push(c7(&suite));
    results.push(c8());
    results.push(c9());
    results.push(c10());
    results.push(c11(&suite));
    println!("\n== acceptance summary ==");
    for r in &results {
        println!("[{}] {}: {}", if r.passed { "pass" } else { "FAIL" }, r.name, r.detail);
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
