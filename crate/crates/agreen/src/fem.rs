//! P1 finite elements for the energy `E(u) = Σ_T |T| f(∇u|_T)` with
//! Dirichlet data on both boundary rings of an annulus mesh.
//!
//! The minimizer satisfies the discrete `∇f`-harmonic equation. It is found
//! by damped Newton iteration on the energy: the Hessian blocks are
//! `|T| gᵢᵀ Df(∇u) gⱼ`, which is sparse and positive definite for gauges in
//! the admissible class, and each step is globalized by Armijo
//! backtracking. The iteration is warm started from the harmonic (`p = 2`
//! isotropic) solution, which is a single linear solve.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::prelude::Reborrow;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::mesh::AnnulusMesh;
use crate::operators::{GaugeKind, OperatorSpec, Vec2};
use crate::{Error, Result};

/// Newton solve controls.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// relative gradient-norm reduction target
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_iter: 200 }
    }
}

/// Convergence summary of a nonlinear solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub grad_norm: f64,
    pub energy: f64,
}

/// Per-triangle P1 geometry: area and the three shape-function gradients.
struct TriGeom {
    area: f64,
    g: [Vec2; 3],
}

fn tri_geometry(mesh: &AnnulusMesh) -> Result<Vec<TriGeom>> {
    let mut out = Vec::with_capacity(mesh.triangles.len());
    for t in &mesh.triangles {
        let (a, b, c) = (mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
        let area2 = (b - a).perp(&(c - a));
        if area2 <= 0.0 {
            return Err(Error::Mesh("non-positive triangle area".into()));
        }
        let rot = |v: Vec2| Vec2::new(-v[1], v[0]);
        out.push(TriGeom {
            area: 0.5 * area2,
            g: [rot(c - b) / area2, rot(a - c) / area2, rot(b - a) / area2],
        });
    }
    Ok(out)
}

/// Solve the discrete Dirichlet problem. `inner_values` / `outer_values`
/// are aligned with `mesh.inner` / `mesh.outer`. Returns the nodal values
/// and a convergence report.
pub fn solve_dirichlet(
    mesh: &AnnulusMesh,
    op: &OperatorSpec,
    inner_values: &[f64],
    outer_values: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    if inner_values.len() != mesh.inner.len() || outer_values.len() != mesh.outer.len() {
        return Err(Error::Solver("boundary value length mismatch".into()));
    }
    let nn = mesh.nodes.len();
    let geom = tri_geometry(mesh)?;

    // dof numbering: free nodes only
    let mut dof = vec![usize::MAX; nn];
    let mut fixed = vec![false; nn];
    let mut u = vec![0.0f64; nn];
    for (&i, &v) in mesh.inner.iter().zip(inner_values) {
        fixed[i] = true;
        u[i] = v;
    }
    for (&i, &v) in mesh.outer.iter().zip(outer_values) {
        fixed[i] = true;
        u[i] = v;
    }
    let mut ndof = 0usize;
    for i in 0..nn {
        if !fixed[i] {
            dof[i] = ndof;
            ndof += 1;
        }
    }
    if ndof == 0 {
        return Err(Error::Solver("no interior degrees of freedom".into()));
    }

    let grad_on = |u: &[f64], ti: usize| -> Vec2 {
        let t = mesh.triangles[ti];
        u[t[0]] * geom[ti].g[0] + u[t[1]] * geom[ti].g[1] + u[t[2]] * geom[ti].g[2]
    };
    let energy = |u: &[f64]| -> f64 {
        (0..mesh.triangles.len()).map(|ti| geom[ti].area * op.eval_f(grad_on(u, ti))).sum()
    };
    let gradient = |u: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; ndof];
        for ti in 0..mesh.triangles.len() {
            let a = op.eval_a(grad_on(u, ti));
            for (k, &node) in mesh.triangles[ti].iter().enumerate() {
                if dof[node] != usize::MAX {
                    g[dof[node]] += geom[ti].area * a.dot(&geom[ti].g[k]);
                }
            }
        }
        g
    };

    // warm start: harmonic interpolant of the boundary data (exact Newton
    // step for the quadratic p = 2 isotropic energy, a good initial guess
    // for every admissible gauge)
    let harmonic = OperatorSpec { n: op.n, p: 2.0, kind: GaugeKind::Isotropic };
    newton(mesh, &harmonic, &geom, &dof, ndof, &mut u, &SolveOptions { tol: 1e-12, max_iter: 3 })?;

    let is_harmonic =
        (op.p - 2.0).abs() < 1e-14 && matches!(op.kind, GaugeKind::Isotropic);
    let report = if is_harmonic {
        let g = gradient(&u);
        SolveReport {
            iterations: 1,
            grad_norm: g.iter().map(|x| x * x).sum::<f64>().sqrt(),
            energy: energy(&u),
        }
    } else {
        newton(mesh, op, &geom, &dof, ndof, &mut u, opts)?
    };
    Ok((u, report))
}

/// Damped Newton iteration on the energy, in place on `u`.
fn newton(
    mesh: &AnnulusMesh,
    op: &OperatorSpec,
    geom: &[TriGeom],
    dof: &[usize],
    ndof: usize,
    u: &mut Vec<f64>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let ntri = mesh.triangles.len();
    let grad_on = |u: &[f64], ti: usize| -> Vec2 {
        let t = mesh.triangles[ti];
        u[t[0]] * geom[ti].g[0] + u[t[1]] * geom[ti].g[1] + u[t[2]] * geom[ti].g[2]
    };
    let energy = |u: &[f64]| -> f64 { (0..ntri).map(|ti| geom[ti].area * op.eval_f(grad_on(u, ti))).sum() };
    let gradient = |u: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; ndof];
        for ti in 0..ntri {
            let a = op.eval_a(grad_on(u, ti));
            for (k, &node) in mesh.triangles[ti].iter().enumerate() {
                if dof[node] != usize::MAX {
                    g[dof[node]] += geom[ti].area * a.dot(&geom[ti].g[k]);
                }
            }
        }
        g
    };

    let mut symbolic: Option<SymbolicLlt<usize>> = None;
    let mut e = energy(u);
    let mut g = gradient(u);
    let g0_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut g_norm = g0_norm;

    for it in 0..opts.max_iter {
        if g_norm <= opts.tol * (1.0 + g0_norm) {
            return Ok(SolveReport { iterations: it, grad_norm: g_norm, energy: e });
        }

        // degenerate-gradient clamp scale: for p ≠ 2 the Hessian density
        // Df(η) vanishes or blows up at η = 0, so triangles with tiny
        // gradients are evaluated at a small surrogate gradient instead
        let gbar = {
            let s: f64 = (0..ntri).map(|ti| grad_on(u, ti).norm()).sum();
            (s / ntri as f64).max(1e-300)
        };
        let eps = 1e-8 * gbar;

        let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(9 * ntri);
        let mut diag_scale = 0.0f64;
        for ti in 0..ntri {
            let mut eta = grad_on(u, ti);
            if eta.norm() < eps {
                eta = Vec2::new(eps, 0.0);
            }
            let da = op.eval_da(eta)?;
            for (a, &na) in mesh.triangles[ti].iter().enumerate() {
                let ia = dof[na];
                if ia == usize::MAX {
                    continue;
                }
                for (b, &nb) in mesh.triangles[ti].iter().enumerate() {
                    let ib = dof[nb];
                    if ib == usize::MAX {
                        continue;
                    }
                    let val = geom[ti].area * (da * geom[ti].g[b]).dot(&geom[ti].g[a]);
                    if ia == ib {
                        diag_scale = diag_scale.max(val.abs());
                    }
                    trips.push(Triplet::new(ia, ib, val));
                }
            }
        }

        // factor, with a diagonal shift fallback if near-singular
        let mut shift = 0.0f64;
        let llt = loop {
            let mut t = trips.clone();
            if shift > 0.0 {
                for i in 0..ndof {
                    t.push(Triplet::new(i, i, shift));
                }
            }
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(ndof, ndof, &t)
                .map_err(|err| Error::Solver(format!("hessian assembly: {err:?}")))?;
            let sym = match &symbolic {
                Some(s) => s.clone(),
                None => {
                    let s = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
                        .map_err(|err| Error::Solver(format!("symbolic factorization: {err:?}")))?;
                    symbolic = Some(s.clone());
                    s
                }
            };
            match Llt::try_new_with_symbolic(sym, mat.rb(), Side::Lower) {
                Ok(f) => break f,
                Err(_) if shift < 1e-2 * diag_scale => {
                    shift = if shift == 0.0 { 1e-12 * diag_scale.max(1e-300) } else { shift * 100.0 };
                }
                Err(err) => {
                    return Err(Error::Solver(format!("hessian factorization failed: {err:?}")));
                }
            }
        };

        let mut rhs = faer::Mat::<f64>::zeros(ndof, 1);
        for i in 0..ndof {
            rhs[(i, 0)] = -g[i];
        }
        let delta = llt.solve(&rhs);
        let slope: f64 = (0..ndof).map(|i| g[i] * delta[(i, 0)]).sum();
        if slope >= 0.0 {
            return Err(Error::Solver("newton direction is not a descent direction".into()));
        }

        // Armijo backtracking
        let mut step = 1.0f64;
        let mut trial = u.clone();
        loop {
            for (node, d) in dof.iter().enumerate() {
                if *d != usize::MAX {
                    trial[node] = u[node] + step * delta[(*d, 0)];
                }
            }
            if energy(&trial) <= e + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::Solver(format!(
                    "line search failed at iteration {it} (grad norm {g_norm:.3e})"
                )));
            }
        }
        *u = trial;
        let e_new = energy(u);
        let stagnated = (e - e_new).abs() <= 1e-14 * (1.0 + e.abs());
        e = e_new;
        g = gradient(u);
        g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        // at machine-precision energy stagnation the iterate is a minimizer
        // to floating-point accuracy even if the gradient test is stricter
        if stagnated {
            return Ok(SolveReport { iterations: it + 1, grad_norm: g_norm, energy: e });
        }
    }

    if g_norm <= opts.tol * (1.0 + g0_norm) {
        Ok(SolveReport { iterations: opts.max_iter, grad_norm: g_norm, energy: e })
    } else {
        Err(Error::Solver(format!(
            "newton did not converge in {} iterations (grad norm {g_norm:.3e})",
            opts.max_iter
        )))
    }
}

/// A P1 field on an annulus mesh with point location for evaluation and
/// gradient queries at arbitrary points.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub mesh: AnnulusMesh,
    pub values: Vec<f64>,
    // uniform grid over the bounding box: cell -> triangle indices
    cells: Vec<Vec<u32>>,
    nx: usize,
    ny: usize,
    origin: Vec2,
    cell: f64,
}

impl DiscreteField {
    pub fn new(mesh: AnnulusMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes.len() {
            return Err(Error::Solver("field length does not match mesh".into()));
        }
        let r = mesh.r_outer;
        let origin = Vec2::new(-r, -r);
        let side = (mesh.triangles.len() as f64).sqrt().ceil().max(4.0) as usize;
        let cell = 2.0 * r / side as f64;
        let (nx, ny) = (side, side);
        let mut cells = vec![Vec::new(); nx * ny];
        let clampi = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        for (ti, t) in mesh.triangles.iter().enumerate() {
            let (a, b, c) = (mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
            let lo = Vec2::new(a[0].min(b[0]).min(c[0]), a[1].min(b[1]).min(c[1]));
            let hi = Vec2::new(a[0].max(b[0]).max(c[0]), a[1].max(b[1]).max(c[1]));
            let (i0, i1) = (clampi((lo[0] - origin[0]) / cell, nx), clampi((hi[0] - origin[0]) / cell, nx));
            let (j0, j1) = (clampi((lo[1] - origin[1]) / cell, ny), clampi((hi[1] - origin[1]) / cell, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(ti as u32);
                }
            }
        }
        Ok(DiscreteField { mesh, values, cells, nx, ny, origin, cell })
    }

    fn barycentric(&self, ti: usize, x: Vec2) -> (f64, f64, f64) {
        let t = self.mesh.triangles[ti];
        let (a, b, c) = (self.mesh.nodes[t[0]], self.mesh.nodes[t[1]], self.mesh.nodes[t[2]]);
        let area2 = (b - a).perp(&(c - a));
        let l0 = (b - x).perp(&(c - x)) / area2;
        let l1 = (c - x).perp(&(a - x)) / area2;
        (l0, l1, 1.0 - l0 - l1)
    }

    /// Find the triangle containing `x` (barycentric tolerance 1e-9).
    pub fn locate(&self, x: Vec2) -> Option<usize> {
        let i = ((x[0] - self.origin[0]) / self.cell).floor() as i64;
        let j = ((x[1] - self.origin[1]) / self.cell).floor() as i64;
        let mut best: Option<(usize, f64)> = None;
        for dj in -1..=1i64 {
            for di in -1..=1i64 {
                let (ci, cj) = (i + di, j + dj);
                if ci < 0 || cj < 0 || ci >= self.nx as i64 || cj >= self.ny as i64 {
                    continue;
                }
                for &ti in &self.cells[cj as usize * self.nx + ci as usize] {
                    let (l0, l1, l2) = self.barycentric(ti as usize, x);
                    let min_l = l0.min(l1).min(l2);
                    if best.map_or(true, |(_, m)| min_l > m) {
                        best = Some((ti as usize, min_l));
                    }
                }
            }
        }
        match best {
            Some((ti, m)) if m >= -1e-9 => Some(ti),
            _ => None,
        }
    }

    /// Interpolated value at `x`, `None` outside the mesh.
    pub fn eval(&self, x: Vec2) -> Option<f64> {
        let ti = self.locate(x)?;
        let (l0, l1, l2) = self.barycentric(ti, x);
        let t = self.mesh.triangles[ti];
        Some(l0 * self.values[t[0]] + l1 * self.values[t[1]] + l2 * self.values[t[2]])
    }

    /// Piecewise-constant gradient at `x`, `None` outside the mesh.
    pub fn gradient(&self, x: Vec2) -> Option<Vec2> {
        let ti = self.locate(x)?;
        let t = self.mesh.triangles[ti];
        let (a, b, c) = (self.mesh.nodes[t[0]], self.mesh.nodes[t[1]], self.mesh.nodes[t[2]]);
        let area2 = (b - a).perp(&(c - a));
        let rot = |v: Vec2| Vec2::new(-v[1], v[0]);
        Some(
            self.values[t[0]] * rot(c - b) / area2
                + self.values[t[1]] * rot(a - c) / area2
                + self.values[t[2]] * rot(b - a) / area2,
        )
    }

    /// Average of the field over the circle `|x| = rho` (trapezoid rule).
    /// Fails if any sample point falls outside the mesh.
    pub fn circle_average(&self, rho: f64, samples: usize) -> Result<f64> {
        let m = samples.max(16);
        let mut s = 0.0;
        for i in 0..m {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let x = rho * Vec2::new(t.cos(), t.sin());
            s += self.eval(x).ok_or_else(|| {
                Error::Solver(format!("circle average sample at radius {rho} left the mesh"))
            })?;
        }
        Ok(s / m as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::polytope::{box_body, regular_polygon};
    use approx::assert_relative_eq;

    fn linear(x: Vec2) -> f64 {
        0.7 * x[0] - 0.3 * x[1] + 0.2
    }

    #[test]
    fn linear_functions_are_reproduced_exactly() {
        let body = box_body(1.0, 1.0, Vec2::zeros());
        let mesh = build_mesh(&body, 8.0, 0.3).unwrap();
        let inner: Vec<f64> = mesh.inner.iter().map(|&i| linear(mesh.nodes[i])).collect();
        let outer: Vec<f64> = mesh.outer.iter().map(|&i| linear(mesh.nodes[i])).collect();
        let op = OperatorSpec { n: 2, p: 2.0, kind: GaugeKind::Isotropic };
        let (u, rep) = solve_dirichlet(&mesh, &op, &inner, &outer, &SolveOptions::default()).unwrap();
        assert!(rep.grad_norm < 1e-9);
        for (i, x) in mesh.nodes.iter().enumerate() {
            assert_relative_eq!(u[i], linear(*x), epsilon = 1e-9);
        }
        // field evaluation and gradient are exact for linear data
        let field = DiscreteField::new(mesh, u).unwrap();
        for pt in [Vec2::new(2.0, 1.0), Vec2::new(-3.0, 0.5), Vec2::new(0.0, -1.7)] {
            assert_relative_eq!(field.eval(pt).unwrap(), linear(pt), epsilon = 1e-9);
            let g = field.gradient(pt).unwrap();
            assert_relative_eq!(g[0], 0.7, epsilon = 1e-9);
            assert_relative_eq!(g[1], -0.3, epsilon = 1e-9);
        }
        assert!(field.eval(Vec2::new(0.0, 0.0)).is_none()); // inside the hole
        assert!(field.eval(Vec2::new(9.0, 0.0)).is_none()); // outside
    }

    #[test]
    fn harmonic_log_between_circles() {
        let body = regular_polygon(64, 1.0, Vec2::zeros());
        let mesh = build_mesh(&body, 8.0, 0.1).unwrap();
        let data = |x: Vec2| x.norm().ln();
        let inner: Vec<f64> = mesh.inner.iter().map(|&i| data(mesh.nodes[i])).collect();
        let outer: Vec<f64> = mesh.outer.iter().map(|&i| data(mesh.nodes[i])).collect();
        let op = OperatorSpec { n: 2, p: 2.0, kind: GaugeKind::Isotropic };
        let (u, _) = solve_dirichlet(&mesh, &op, &inner, &outer, &SolveOptions::default()).unwrap();
        let field = DiscreteField::new(mesh, u).unwrap();
        for rho in [1.8, 3.0, 5.5] {
            let v = field.eval(Vec2::new(rho, 0.4)).unwrap();
            let exact = data(Vec2::new(rho, 0.4));
            assert!((v - exact).abs() < 4e-3, "rho {rho}: {v} vs {exact}");
        }
    }

    #[test]
    fn p_harmonic_radial_profile() {
        // for p = 4, n = 2 the radial p-harmonic profile is |x|^{(p-n)/(p-1)}
        let body = regular_polygon(64, 1.0, Vec2::zeros());
        let mesh = build_mesh(&body, 8.0, 0.1).unwrap();
        let data = |x: Vec2| x.norm().powf(2.0 / 3.0);
        let inner: Vec<f64> = mesh.inner.iter().map(|&i| data(mesh.nodes[i])).collect();
        let outer: Vec<f64> = mesh.outer.iter().map(|&i| data(mesh.nodes[i])).collect();
        let op = OperatorSpec { n: 2, p: 4.0, kind: GaugeKind::Isotropic };
        let (u, rep) = solve_dirichlet(&mesh, &op, &inner, &outer, &SolveOptions::default()).unwrap();
        assert!(rep.iterations < 60, "too many newton iterations: {}", rep.iterations);
        let field = DiscreteField::new(mesh, u).unwrap();
        for rho in [1.7, 2.9, 5.1] {
            let v = field.eval(Vec2::new(0.3, rho)).unwrap();
            let exact = data(Vec2::new(0.3, rho));
            assert!((v - exact).abs() < 8e-3, "rho {rho}: {v} vs {exact}");
        }
    }

    #[test]
    fn circle_average_of_radial_field_matches_value() {
        let body = regular_polygon(32, 1.0, Vec2::zeros());
        let mesh = build_mesh(&body, 8.0, 0.2).unwrap();
        let vals: Vec<f64> = mesh.nodes.iter().map(|x| x.norm()).collect();
        let field = DiscreteField::new(mesh, vals).unwrap();
        let avg = field.circle_average(4.0, 256).unwrap();
        assert!((avg - 4.0).abs() < 2e-2);
    }
}
