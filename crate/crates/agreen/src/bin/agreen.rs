use std::path::PathBuf;
use std::process::ExitCode;

use agreen::config::{load_body, load_data, load_operator};
use agreen::fundamental::FundamentalSolution;
use agreen::green::{capacity, check_level_convexity, greens_function, GreenConfig};
use agreen::measure::{face_measures, MeasureOptions};
use agreen::minkowski::{solve, validate_data, MinkowskiProblem};
use agreen::operators::{OperatorSpec, Vec2};
use agreen::polytope::regular_polygon;
use agreen::report::Report;
use agreen::verify::{bm_check, hadamard_check};
use agreen::{Error, Result};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "agreen", version, about = "Green's functions, capacities and Minkowski problems for planar convex bodies under operators A = ∇f")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Numerics {
    /// truncation radius as a multiple of the body diameter
    #[arg(long = "R0-factor", default_value_t = 32.0)]
    r0_factor: f64,
    /// boundary spacing is diameter / h-factor
    #[arg(long = "h-factor", default_value_t = 64.0)]
    h_factor: f64,
    /// worker cap for internal parallelism (this build computes
    /// sequentially; accepted for interface stability)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Numerics {
    fn green_config(&self) -> GreenConfig {
        GreenConfig { r0_factor: self.r0_factor, h_factor: self.h_factor, ..Default::default() }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the fundamental solution: vanishing A-mass defect and the
    /// gauge duality identity
    FundamentalCheck {
        /// operator config file (JSON)
        #[arg(long)]
        operator: PathBuf,
        /// seed for the duality sample
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        num: Numerics,
    },
    /// Capacity C_A of a body
    Capacity {
        #[arg(long)]
        operator: PathBuf,
        /// body config file (JSON)
        #[arg(long)]
        body: PathBuf,
        #[command(flatten)]
        num: Numerics,
    },
    /// Green's function with pole at infinity: capacity, k(∞) and
    /// level-set convexity samples
    Green {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        body: PathBuf,
        #[command(flatten)]
        num: Numerics,
    },
    /// Boundary Minkowski-type measure of a body
    Measure {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        body: PathBuf,
        #[command(flatten)]
        num: Numerics,
    },
    /// Brunn–Minkowski inequality check for a pair of bodies
    BmCheck {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        body1: PathBuf,
        #[arg(long)]
        body2: PathBuf,
        #[command(flatten)]
        num: Numerics,
    },
    /// Hadamard variational formula check for a pair of bodies
    HadamardCheck {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        body1: PathBuf,
        #[arg(long)]
        body2: PathBuf,
        #[command(flatten)]
        num: Numerics,
    },
    /// Solve the discrete Minkowski problem from a data file of
    /// `ξ_x ξ_y c` rows
    Minkowski {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// KKT residual tolerance
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// outer iteration cap
        #[arg(long = "max-iter", default_value_t = 40)]
        max_iter: usize,
        /// solve even when the data validation fails
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        num: Numerics,
    },
    /// Run the analytic-oracle suite and print pass/fail per check
    Selftest {
        #[command(flatten)]
        num: Numerics,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("AGREEN_LOG")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Data(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::FundamentalCheck { operator, seed, num } => {
            let op = load_operator(&operator)?;
            let fund = FundamentalSolution::new(&op)?;
            let mut r = Report::new("fundamental-check");
            r.kv_num("normalization_c", fund.c);
            r.kv_num("gamma", fund.gamma);
            r.table("mass", &["radius", "defect"]);
            let mut worst_mass = 0.0f64;
            for radius in [0.5, 1.0, 2.0, 10.0] {
                let defect = (fund.check_mass(radius, 4096) - 1.0).abs();
                worst_mass = worst_mass.max(defect);
                r.row(&[radius, defect]);
            }
            let dg = op.dual_gauge();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst_dual = 0.0f64;
            for _ in 0..1000 {
                let eta = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if eta.norm() < 1e-3 {
                    continue;
                }
                let x = op.k(eta) * op.grad_k(eta);
                let back = dg.eval_h(x) * dg.eval_grad_h(x);
                worst_dual = worst_dual.max((back - eta).norm() / eta.norm());
            }
            r.kv_num("mass_defect_max", worst_mass);
            r.kv_num("duality_defect_max", worst_dual);
            let ok = worst_mass <= 1e-8 && worst_dual <= 1e-8;
            r.kv("passed", ok);
            r.emit(num.out.as_deref())?;
            Ok(ok)
        }
        Cmd::Capacity { operator, body, num } => {
            let op = load_operator(&operator)?;
            let e = load_body(&body)?;
            let res = capacity(&op, &e, &num.green_config())?;
            let mut r = Report::new("capacity");
            r.kv_num("capacity", res.capacity);
            r.kv_num("k_infinity", res.k_infinity);
            r.kv_num("k_spread", res.diagnostics.k_spread);
            if let Some(beta) = res.diagnostics.decay_beta {
                r.kv_num("decay_beta", beta);
            }
            r.kv_num("truncation_gap", res.diagnostics.truncation_gap);
            r.kv_num("mesh_min_angle_deg", res.diagnostics.mesh_min_angle_deg);
            r.kv("nodes", res.diagnostics.nodes);
            r.emit(num.out.as_deref())?;
            Ok(true)
        }
        Cmd::Green { operator, body, num } => {
            let op = load_operator(&operator)?;
            let e = load_body(&body)?;
            let g = greens_function(&op, &e, &num.green_config())?;
            let levels = check_level_convexity(&g, &[0.2, 0.4, 0.6, 0.8], 256)?;
            let mut r = Report::new("green");
            r.kv_num("capacity", g.capacity);
            r.kv_num("k_infinity", g.k_infinity);
            r.kv_num("k_spread", g.diagnostics.k_spread);
            r.kv_num("mesh_min_angle_deg", g.diagnostics.mesh_min_angle_deg);
            r.kv("nodes", g.diagnostics.nodes);
            r.table("levels", &["level", "min_turn", "convex"]);
            let mut ok = true;
            for l in &levels {
                ok &= l.convex;
                r.row(&[l.level, l.min_turn, if l.convex { 1.0 } else { 0.0 }]);
            }
            r.kv("levels_convex", ok);
            r.emit(num.out.as_deref())?;
            Ok(true)
        }
        Cmd::Measure { operator, body, num } => {
            let op = load_operator(&operator)?;
            let e = load_body(&body)?;
            let g = greens_function(&op, &e, &num.green_config())?;
            let rep = face_measures(&g, &MeasureOptions::default())?;
            let mut r = Report::new("measure");
            r.table("faces", &["xi_x", "xi_y", "weight", "length", "flagged"]);
            for (i, (xi, &w)) in rep
                .measure
                .directions
                .iter()
                .zip(&rep.measure.weights)
                .enumerate()
            {
                r.row(&[xi[0], xi[1], w, rep.face_lengths[i], if rep.flagged[i] { 1.0 } else { 0.0 }]);
            }
            r.kv_num("total_mass", rep.measure.total_mass());
            r.kv_num("mass_identity", rep.mass_identity);
            r.kv_num("support_lhs", rep.support_lhs);
            r.kv_num("support_rhs", rep.support_rhs);
            r.kv_num("closure_defect", rep.measure.closure_defect());
            r.kv_num("corner_fraction", rep.corner_fraction);
            r.emit(num.out.as_deref())?;
            Ok(true)
        }
        Cmd::BmCheck { operator, body1, body2, num } => {
            let op = load_operator(&operator)?;
            let e1 = load_body(&body1)?;
            let e2 = load_body(&body2)?;
            let rep = bm_check(&op, &e1, &e2, &[0.25, 0.5, 0.75], &num.green_config())?;
            let mut r = Report::new("bm-check");
            r.table("combinations", &["lambda", "lhs", "rhs"]);
            for i in 0..rep.lambdas.len() {
                r.row(&[rep.lambdas[i], rep.lhs[i], rep.rhs[i]]);
            }
            r.kv_num("worst_violation", rep.worst_violation);
            r.kv_num("tol_abs", rep.tol_abs);
            r.kv("homothetic", rep.homothetic);
            r.kv("passed", rep.passed());
            r.emit(num.out.as_deref())?;
            Ok(true)
        }
        Cmd::HadamardCheck { operator, body1, body2, num } => {
            let op = load_operator(&operator)?;
            let e1 = load_body(&body1)?;
            let e2 = load_body(&body2)?;
            let rep = hadamard_check(&op, &e1, &e2, &[0.0, 0.25, 0.5], &num.green_config())?;
            let mut r = Report::new("hadamard-check");
            r.table("derivative", &["t", "fd", "surface_integral", "rel_error"]);
            for i in 0..rep.ts.len() {
                r.row(&[rep.ts[i], rep.fd_derivative[i], rep.surface_integral[i], rep.relative_errors[i]]);
            }
            r.kv_num("max_rel_error", rep.max_relative_error());
            r.emit(num.out.as_deref())?;
            Ok(true)
        }
        Cmd::Minkowski { operator, data, tol, max_iter, force, num } => {
            let op = load_operator(&operator)?;
            let data = load_data(&data)?;
            let validation = validate_data(&data)?;
            let mut problem = MinkowskiProblem::new(data, op);
            problem.tol = tol;
            problem.max_iter = max_iter;
            problem.force = force;
            problem.r0_factor = num.r0_factor;
            problem.fine_h_factor = num.h_factor;
            problem.coarse_h_factor = (num.h_factor / 2.0).max(16.0);
            let sol = solve(&problem)?;
            let mut r = Report::new("minkowski");
            r.kv_num("data_min_spread", validation.min_spread);
            r.kv_num("data_closure_defect", validation.closure_defect);
            r.kv("data_antipodal_pairs", validation.antipodal_pairs.len());
            r.kv_num("lambda", sol.lambda);
            r.kv_num("delta", sol.delta);
            r.kv_num("b_kkt", sol.b_kkt);
            r.kv_num("b_lambda", sol.b_lambda);
            r.kv_num("kkt_residual", sol.kkt_residual);
            r.kv_num("alignment_defect", sol.alignment_defect);
            r.kv("converged", sol.converged);
            r.kv_num("max_face_residual", sol.max_residual());
            // recovered body as a ready-to-use config block
            let normals: Vec<[f64; 2]> =
                sol.polytope.normals.iter().map(|n| [n[0], n[1]]).collect();
            r.kv(
                "polytope",
                serde_json::json!({ "normals": normals, "offsets": sol.polytope.offsets }),
            );
            r.table("faces", &["xi_x", "xi_y", "offset", "rel_residual"]);
            for i in 0..sol.polytope.normals.len() {
                let xi = sol.polytope.normals[i];
                r.row(&[xi[0], xi[1], sol.polytope.offsets[i], sol.residuals[i]]);
            }
            r.table("trace", &["iter", "theta", "capacity", "kkt_residual", "step"]);
            for t in &sol.trace {
                r.row(&[t.iter as f64, t.theta, t.capacity, t.kkt_residual, t.step]);
            }
            r.emit(num.out.as_deref())?;
            Ok(true)
        }
        Cmd::Selftest { num } => selftest(&num),
    }
}

fn selftest(num: &Numerics) -> Result<bool> {
    let mut r = Report::new("selftest");
    let mut all_ok = true;
    let mut check = |r: &mut Report, name: &str, value: f64, tol: f64| {
        let ok = value <= tol;
        all_ok &= ok;
        r.kv(name, format!("{}\t{value:.3e}\ttol\t{tol:.1e}", if ok { "pass" } else { "FAIL" }));
        println!("{name}: {} ({value:.3e}, tol {tol:.1e})", if ok { "pass" } else { "FAIL" });
    };

    // fundamental solutions: A-mass and normalization oracles
    let iso2 = OperatorSpec::isotropic(2.0);
    let iso4 = OperatorSpec::isotropic(4.0);
    let ell3 = OperatorSpec::ellipsoidal(3.0, agreen::operators::Mat2::new(1.0, 0.0, 0.0, 4.0))?;
    for (name, op) in [("iso_p2", &iso2), ("iso_p4", &iso4), ("ell_p3", &ell3)] {
        let fund = FundamentalSolution::new(op)?;
        let defect = [0.5, 1.0, 2.0, 10.0]
            .iter()
            .map(|&rad| (fund.check_mass(rad, 4096) - 1.0).abs())
            .fold(0.0, f64::max);
        check(&mut r, &format!("fundamental_mass_{name}"), defect, 1e-8);
    }
    let c2 = FundamentalSolution::new(&iso2)?.c;
    let c4 = FundamentalSolution::new(&iso4)?.c;
    check(&mut r, "normalization_iso_p2", (c2 - std::f64::consts::TAU).abs() / std::f64::consts::TAU, 1e-10);
    let c4_exact = 32.0 * std::f64::consts::PI / 27.0;
    check(&mut r, "normalization_iso_p4", (c4 - c4_exact).abs() / c4_exact, 1e-10);

    // disk capacity oracles on a 64-gon
    let disk = regular_polygon(64, 1.0, Vec2::zeros());
    let cfg = GreenConfig { r0_factor: num.r0_factor, h_factor: num.h_factor.min(48.0), ..Default::default() };
    let cap2 = capacity(&iso2, &disk, &cfg)?.capacity;
    check(&mut r, "disk_capacity_p2", (cap2 - 2.0f64.sqrt()).abs() / 2.0f64.sqrt(), 0.02);
    let cap4 = capacity(&iso4, &disk, &cfg)?.capacity;
    let cap4_exact = 27.0 / (16.0 * std::f64::consts::PI);
    check(&mut r, "disk_capacity_p4", (cap4 - cap4_exact).abs() / cap4_exact, 0.02);

    // boundary-measure identities on the unit square
    let square = agreen::polytope::box_body(1.0, 1.0, Vec2::zeros());
    let g = greens_function(&iso2, &square, &cfg)?;
    let rep = face_measures(&g, &MeasureOptions::default())?;
    check(&mut r, "square_mass_identity", (rep.mass_identity - 1.0).abs(), 0.02);
    check(
        &mut r,
        "square_support_identity",
        (rep.support_lhs - rep.support_rhs).abs() / rep.support_rhs,
        0.03,
    );

    r.kv("passed", all_ok);
    r.emit(num.out.as_deref())?;
    Ok(all_ok)
}
