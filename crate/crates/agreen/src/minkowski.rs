//! Discrete Minkowski problem: given directions `ξ_i` and weights `c_i`,
//! find the convex polytope whose face measures `∫_{F_i} f(∇u) dH¹`
//! equal the `c_i`.
//!
//! The solver minimizes `θ(q) = Σ c_i q_i` over the offset vectors `q`
//! with `C_A(E(q)) ≥ 1` by projected gradient descent. The constraint
//! projection is exact: scaling offsets scales the body, and the
//! homogeneity `C_A(sE) = s^m C_A(E)` (m = 1 for p = n, m = p − n for
//! p > n) turns projection into division by `C_A^{1/m}`. At a minimizer
//! the data is proportional to the face measures, `c_i = b·μ_i`, and the
//! δ-rescale `E = δ·E(q̆)` with `δ^{-1} = b` (p = n) or `δ^{n-p-1} = b`
//! (p > n) makes the proportionality an equality.

use crate::green::{capacity, greens_function, GreenConfig};
use crate::measure::{face_measures, MeasureOptions, SphericalMeasure};
use crate::operators::{OperatorSpec, Vec2};
use crate::polytope::{build_polytope, ConvexPolytope};
use crate::{Error, Result};

/// Problem data plus solver knobs.
#[derive(Clone, Debug)]
pub struct MinkowskiProblem {
    pub data: SphericalMeasure,
    pub op: OperatorSpec,
    /// KKT residual tolerance, relative to `max c_i`
    pub tol: f64,
    pub max_iter: usize,
    /// truncation radius factor passed to the capacity solves
    pub r0_factor: f64,
    /// mesh resolution during iterations
    pub coarse_h_factor: f64,
    /// mesh resolution for the final residuals
    pub fine_h_factor: f64,
    /// starting offsets (defaults to all ones); scaled onto the
    /// constraint before the first step
    pub init: Option<Vec<f64>>,
    /// proceed despite a failed data validation
    pub force: bool,
}

impl MinkowskiProblem {
    pub fn new(data: SphericalMeasure, op: OperatorSpec) -> Self {
        MinkowskiProblem {
            data,
            op,
            tol: 1e-3,
            max_iter: 40,
            r0_factor: 32.0,
            coarse_h_factor: 32.0,
            fine_h_factor: 64.0,
            init: None,
            force: false,
        }
    }
}

/// Checks of the data conditions for existence.
#[derive(Clone, Debug)]
pub struct DataReport {
    /// smallest value of `Σ c_i |⟨θ, ξ_i⟩|` over the direction grid,
    /// relative to `Σ c_i`; must be positive
    pub min_spread: f64,
    /// `‖Σ c_i ξ_i‖` relative to `Σ c_i`; must vanish
    pub closure_defect: f64,
    /// index pairs of antipodal directions both carrying mass; reported
    /// but not rejected (the technical condition is not needed by the
    /// solver, only by one proof route)
    pub antipodal_pairs: Vec<(usize, usize)>,
}

impl DataReport {
    pub fn spread_ok(&self) -> bool {
        self.min_spread > 1e-10
    }

    pub fn closure_ok(&self) -> bool {
        self.closure_defect <= 1e-10
    }

    pub fn passed(&self) -> bool {
        self.spread_ok() && self.closure_ok()
    }
}

/// Validate the positivity and closure conditions on the data; antipodal
/// pairs are reported but allowed.
pub fn validate_data(data: &SphericalMeasure) -> Result<DataReport> {
    let m = data.directions.len();
    if m < 3 {
        return Err(Error::Data("need at least 3 directions".into()));
    }
    if data.weights.len() != m {
        return Err(Error::Data("directions and weights differ in length".into()));
    }
    if data.weights.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::Data("weights must be positive".into()));
    }
    for (i, d) in data.directions.iter().enumerate() {
        if (d.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!("direction {i} is not unit length")));
        }
        for (j, e) in data.directions.iter().enumerate().skip(i + 1) {
            if (d - e).norm() < 1e-9 {
                return Err(Error::Data(format!("directions {i} and {j} coincide")));
            }
        }
    }
    let total: f64 = data.total_mass();
    let mut min_spread = f64::INFINITY;
    for k in 0..720 {
        let t = std::f64::consts::TAU * k as f64 / 720.0;
        let theta = Vec2::new(t.cos(), t.sin());
        let s: f64 = data
            .directions
            .iter()
            .zip(&data.weights)
            .map(|(xi, &c)| c * theta.dot(xi).abs())
            .sum();
        min_spread = min_spread.min(s / total);
    }
    let mut antipodal_pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if (data.directions[i] + data.directions[j]).norm() < 1e-9 {
                antipodal_pairs.push((i, j));
            }
        }
    }
    Ok(DataReport {
        min_spread,
        closure_defect: data.closure_defect() / total,
        antipodal_pairs,
    })
}

/// Minimal-norm correction of the weights enforcing the closure
/// condition `Σ c_i ξ_i = 0` exactly. Measured data carries the
/// discretization error of the forward computation; this removes it
/// without touching the directions.
pub fn project_closure(data: &SphericalMeasure) -> Result<SphericalMeasure> {
    let r: Vec2 = data
        .directions
        .iter()
        .zip(&data.weights)
        .map(|(xi, &c)| c * xi)
        .sum();
    let m: crate::operators::Mat2 =
        data.directions.iter().map(|xi| xi * xi.transpose()).sum();
    let nu = m
        .try_inverse()
        .ok_or_else(|| Error::Data("directions span only one line".into()))?
        * -r;
    let weights: Vec<f64> = data
        .directions
        .iter()
        .zip(&data.weights)
        .map(|(xi, &c)| c + xi.dot(&nu))
        .collect();
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Data("closure projection drove a weight negative".into()));
    }
    Ok(SphericalMeasure { directions: data.directions.clone(), weights })
}

/// One accepted outer iteration.
#[derive(Clone, Copy, Debug)]
pub struct IterRecord {
    pub iter: usize,
    pub theta: f64,
    pub capacity: f64,
    pub kkt_residual: f64,
    pub step: f64,
}

/// Recovered polytope with the multipliers and diagnostics of the
/// optimality system.
#[derive(Clone, Debug)]
pub struct MinkowskiSolution {
    pub polytope: ConvexPolytope,
    /// minimizer offsets, normalised to `C_A(E(q̆)) = 1`
    pub q_breve: Vec<f64>,
    /// minimum value `θ(q̆) = Σ c_i q̆_i`
    pub lambda: f64,
    /// rescale factor applied to `E(q̆)`
    pub delta: f64,
    /// proportionality constant fitted from the KKT ratio `c_i/μ_i`
    pub b_kkt: f64,
    /// the same constant predicted from λ; the gap between the two is a
    /// consistency diagnostic
    pub b_lambda: f64,
    /// measured capacity of `E(q̆)`, contract: 1
    pub capacity: f64,
    /// final KKT residual `max_i |c_i − b μ_i| / max_i c_i`
    pub kkt_residual: f64,
    /// `1 − cos∠(c, μ)`: the proportionality measure of the optimality
    /// system; unlike the max-normalised residual it is insensitive to
    /// the per-face noise floor of the coarse-mesh measures
    pub alignment_defect: f64,
    pub converged: bool,
    /// per-face `|μ_i − c_i| / c_i` of the rescaled body, at the fine
    /// resolution
    pub residuals: Vec<f64>,
    pub trace: Vec<IterRecord>,
}

impl MinkowskiSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Face measures of `E(q)` aligned with `dirs`; faces cut off by the
/// other constraints (or pruned as sub-cell) carry measure zero.
fn measures_at(
    op: &OperatorSpec,
    dirs: &[Vec2],
    q: &[f64],
    cfg: &GreenConfig,
) -> Result<(f64, Vec<f64>)> {
    let body = build_polytope(dirs, q)?;
    let gs = greens_function(op, &body, cfg)?;
    let rep = face_measures(&gs, &MeasureOptions::default())?;
    let mut mu = vec![0.0f64; dirs.len()];
    for (d, &w) in rep.measure.directions.iter().zip(&rep.measure.weights) {
        if let Some(i) = dirs.iter().position(|xi| (xi - d).norm() < 1e-9) {
            mu[i] = w;
        }
    }
    Ok((gs.capacity, mu))
}

fn capacity_at(op: &OperatorSpec, dirs: &[Vec2], q: &[f64], cfg: &GreenConfig) -> Result<f64> {
    let body = build_polytope(dirs, q)?;
    Ok(capacity(op, &body, cfg)?.capacity)
}

/// Solve the discrete Minkowski problem by projected gradient descent on
/// the offsets.
pub fn solve(problem: &MinkowskiProblem) -> Result<MinkowskiSolution> {
    let report = validate_data(&problem.data)?;
    if !report.passed() && !problem.force {
        return Err(Error::Data(format!(
            "data validation failed (min spread {:.3e}, closure defect {:.3e})",
            report.min_spread, report.closure_defect
        )));
    }
    let op = &problem.op;
    let n = op.n as f64;
    let p = op.p;
    let p_eq_n = (p - n).abs() < 1e-12;
    // C_A(sE) = s^m C_A(E)
    let m_exp = if p_eq_n { 1.0 } else { p - n };
    let dirs = &problem.data.directions;
    let c = &problem.data.weights;
    let c_max = c.iter().cloned().fold(0.0, f64::max);
    let nf = dirs.len();

    let coarse = GreenConfig { r0_factor: problem.r0_factor, h_factor: problem.coarse_h_factor, ..Default::default() };
    let fine = GreenConfig { r0_factor: problem.r0_factor, h_factor: problem.fine_h_factor, ..Default::default() };

    let mut q = match &problem.init {
        Some(q0) => {
            if q0.len() != nf {
                return Err(Error::Config("init length does not match data".into()));
            }
            q0.clone()
        }
        None => vec![1.0; nf],
    };
    let cap0 = capacity_at(op, dirs, &q, &coarse)?;
    let s = cap0.powf(-1.0 / m_exp);
    q.iter_mut().for_each(|qi| *qi *= s);

    let (mut cap, mut mu) = measures_at(op, dirs, &q, &coarse)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut theta = dot(c, &q);
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut alpha = f64::NAN;
    let mut converged = false;
    let mut kkt = f64::INFINITY;

    for iter in 0..problem.max_iter {
        let b = dot(c, &mu) / dot(&mu, &mu);
        kkt = c
            .iter()
            .zip(&mu)
            .map(|(&ci, &mi)| (ci - b * mi).abs())
            .fold(0.0, f64::max)
            / c_max;
        trace.push(IterRecord { iter, theta, capacity: cap, kkt_residual: kkt, step: alpha });
        if kkt <= problem.tol {
            converged = true;
            break;
        }

        // steepest descent on θ projected tangent to the constraint: the
        // constraint gradient is a positive multiple of μ, so only the
        // direction of μ matters
        let gg = dot(&mu, &mu);
        let cg = dot(c, &mu);
        let d: Vec<f64> = c.iter().zip(&mu).map(|(&ci, &mi)| ci - cg / gg * mi).collect();
        let cd = dot(c, &d);
        if !(cd > 0.0) {
            break;
        }
        if alpha.is_nan() {
            let dn = dot(&d, &d).sqrt();
            let qn = dot(&q, &q).sqrt();
            alpha = 0.25 * qn / dn;
        }
        let q_floor = 1e-6 * q.iter().cloned().fold(0.0, f64::max);

        let mut accepted = false;
        for _ in 0..25 {
            let qt: Vec<f64> = q.iter().zip(&d).map(|(&qi, &di)| qi - alpha * di).collect();
            if qt.iter().any(|&qi| qi <= q_floor) {
                alpha *= 0.5;
                continue;
            }
            let cap_t = match capacity_at(op, dirs, &qt, &coarse) {
                Ok(v) => v,
                Err(_) => {
                    alpha *= 0.5;
                    continue;
                }
            };
            let s = cap_t.powf(-1.0 / m_exp);
            let qp: Vec<f64> = qt.iter().map(|&qi| qi * s).collect();
            let theta_t = dot(c, &qp);
            if theta_t <= theta - 1e-4 * alpha * cd {
                q = qp;
                theta = theta_t;
                accepted = true;
                alpha *= 1.5;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        (cap, mu) = measures_at(op, dirs, &q, &coarse)?;
    }

    if (cap - 1.0).abs() > 1e-3 {
        return Err(Error::Solver(format!(
            "constraint drift: C_A(E(q̆)) = {cap:.6}, expected 1"
        )));
    }

    let lambda = theta;
    let b_kkt = dot(c, &mu) / dot(&mu, &mu);
    let alignment_defect =
        1.0 - dot(c, &mu) / (dot(c, c).sqrt() * dot(&mu, &mu).sqrt());
    let b_lambda = if p_eq_n {
        n * lambda / crate::fundamental::FundamentalSolution::new(op)?.gamma
    } else {
        p * (p - 1.0) / (p - n) * lambda
    };
    let delta = if p_eq_n { 1.0 / b_kkt } else { b_kkt.powf(1.0 / (n - p - 1.0)) };

    let q_final: Vec<f64> = q.iter().map(|&qi| delta * qi).collect();
    let polytope = build_polytope(dirs, &q_final)?;
    let (_, mu_fine) = measures_at(op, dirs, &q_final, &fine)?;
    let residuals: Vec<f64> =
        c.iter().zip(&mu_fine).map(|(&ci, &mi)| (mi - ci).abs() / ci).collect();

    Ok(MinkowskiSolution {
        polytope,
        q_breve: q,
        lambda,
        delta,
        b_kkt,
        b_lambda,
        capacity: cap,
        kkt_residual: kkt,
        alignment_defect,
        converged,
        residuals,
        trace,
    })
}
