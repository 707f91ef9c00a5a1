//! Triangulation of the annulus `B(0, R) \ E` for a convex polytope `E`
//! with the origin in its interior.
//!
//! The mesh is built from nested rings of nodes. Ring 0 samples `∂E`
//! (every vertex, plus per-face subdivision at spacing `≤ h`); the next
//! rings sample the Minkowski offsets `∂(E + tB)` with geometrically
//! growing `t`, so near-boundary triangles stay small and well shaped
//! where the solution gradient matters. Once an offset ring is nearly
//! circular the rings become circles with uniform angles, coarsening as
//! the radius grows. Rings are stitched by a merge walk in the boundary
//! foot parameter (arclength along `∂E` plus vertex-fan angle): offset
//! points lie on non-crossing normal rays of their foot points, which
//! keeps the merge free of inverted triangles even for very eccentric
//! bodies, where sorting by polar angle about the origin would fail.

use crate::operators::Vec2;
use crate::polytope::ConvexPolytope;
use crate::{Error, Result};

use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Triangulated annulus between `∂E` and the circle `|x| = r_outer`.
#[derive(Clone, Debug)]
pub struct AnnulusMesh {
    pub nodes: Vec<Vec2>,
    /// counterclockwise-oriented triangles (node indices)
    pub triangles: Vec<[usize; 3]>,
    /// node indices on `∂E`
    pub inner: Vec<usize>,
    /// node indices on the outer circle
    pub outer: Vec<usize>,
    /// radii of the uniform circular rings (outermost included)
    pub ring_radii: Vec<f64>,
    pub r_outer: f64,
    /// boundary target spacing the mesh was built with
    pub h_boundary: f64,
    /// smallest triangle angle, for quality diagnostics
    pub min_angle_deg: f64,
}

/// One ring of node indices with their foot parameters (normalised to
/// `[0, 2π)`), in counterclockwise walk order.
type Ring = Vec<(usize, f64)>;

/// Grading slope of the corner boundary layers: the local node spacing
/// near a vertex is `≈ GRADE · distance to the vertex`, floored at
/// `h / GRADE_DEPTH` and capped at the ring's base spacing. The gradient
/// of the solution is singular at the vertices, and the boundary measure
/// integrates a power of it, so uniform spacing converges too slowly
/// there; grading buys a `GRADE_DEPTH`-fold finer corner resolution for a
/// modest node surcharge.
const GRADE: f64 = 0.7;
const GRADE_DEPTH: f64 = 6.0;

/// CCW walk along `∂E` with the cumulative foot parameter: each face
/// contributes its length, each vertex its exterior turn angle. Points of
/// every offset ring `∂(E + tB)` inherit the parameter of their foot point
/// on `∂E`, giving a common coordinate to stitch rings in.
struct BoundaryWalk {
    faces: Vec<WalkFace>,
    /// total parameter length: perimeter + 2π
    total: f64,
}

struct WalkFace {
    start: Vec2,
    end: Vec2,
    xi: Vec2,
    /// exterior turn to the next face's normal, in `(0, π)`
    phi: f64,
    /// parameter at `start`
    base: f64,
    /// parameter at `end` (start of this vertex's fan)
    fan_base: f64,
}

impl BoundaryWalk {
    fn new(body: &ConvexPolytope) -> Result<Self> {
        let scale = body.diameter();
        let nv = body.vertices.len();
        let mut raw = Vec::with_capacity(nv);
        for i in 0..nv {
            let v = body.vertices[i];
            let f = body
                .faces
                .iter()
                .flatten()
                .find(|f| (f.start - v).norm() <= 1e-7 * scale)
                .ok_or_else(|| Error::Mesh("boundary walk: vertex without a starting face".into()))?;
            raw.push(f);
        }
        let mut faces = Vec::with_capacity(nv);
        let mut base = 0.0;
        for i in 0..nv {
            let f = raw[i];
            let xi = body.normals[f.normal_index];
            let xj = body.normals[raw[(i + 1) % nv].normal_index];
            let phi = xi.perp(&xj).atan2(xi.dot(&xj));
            if phi <= 0.0 {
                return Err(Error::Mesh("boundary walk: faces not in CCW order".into()));
            }
            let len = (f.end - f.start).norm();
            faces.push(WalkFace {
                start: f.start,
                end: f.end,
                xi,
                phi,
                base,
                fan_base: base + len,
            });
            base += len + phi;
        }
        Ok(BoundaryWalk { faces, total: base })
    }

    /// Sample `∂(E + tB)` counterclockwise: each face shifted by `t` along
    /// its normal (subdivided at graded spacing ≤ `s`), joined by circular
    /// arcs of radius `t` around the vertices. Returns points with their
    /// foot parameters and the local target spacing. At `t = 0` this is
    /// `∂E` itself with every vertex included; a vertex carries the
    /// midpoint parameter of its fan, so that the arc nodes of outer rings
    /// fan into it from both sides.
    fn offset_ring(&self, t: f64, s: f64, s_min: f64) -> Vec<(Vec2, f64, f64)> {
        let mut pts: Vec<(Vec2, f64, f64)> = Vec::new();
        let nf = self.faces.len();
        for i in 0..nf {
            let f = &self.faces[i];
            let a = f.start + t * f.xi;
            let b = f.end + t * f.xi;
            let len = (b - a).norm();
            let dir = (b - a) / len;
            for u in Self::graded_positions(len, t, s, s_min) {
                let sigma = if u == 0.0 && t <= 0.0 {
                    // the vertex shared with the previous face
                    let g = &self.faces[(i + nf - 1) % nf];
                    (g.fan_base + 0.5 * g.phi).rem_euclid(self.total)
                } else {
                    f.base + u
                };
                let rho = (GRADE * u.min(len - u).hypot(t)).clamp(s_min, s);
                pts.push((a + u * dir, sigma, rho));
            }
            if t <= 0.0 {
                // no arc to bridge: the segment endpoint coincides with
                // the next face's start vertex
                continue;
            }
            let rho_arc = (GRADE * t).clamp(s_min, s);
            let narc = ((t * f.phi / rho_arc).ceil() as usize).max(1);
            for k in 0..narc {
                let a_k = f.phi * k as f64 / narc as f64;
                let (c, sn) = (a_k.cos(), a_k.sin());
                let d = Vec2::new(c * f.xi[0] - sn * f.xi[1], sn * f.xi[0] + c * f.xi[1]);
                pts.push((f.end + t * d, f.fan_base + a_k, rho_arc));
            }
        }
        pts
    }

    /// Node positions on a face of length `len` at offset `t`, graded from
    /// both endpoints: spacing `≈ clamp(GRADE·dist_to_vertex, s_min, s)`,
    /// where the distance accounts for the offset. Marches to the midpoint
    /// from each side and rescales so the halves meet exactly, keeping
    /// every gap at or below its local target. Returns `[0, len)` in
    /// increasing order (the endpoint `len` belongs to the next segment).
    fn graded_positions(len: f64, t: f64, s: f64, s_min: f64) -> Vec<f64> {
        let rho = |u: f64| (GRADE * u.hypot(t)).clamp(s_min, s);
        let half = 0.5 * len;
        let mut left = vec![0.0];
        loop {
            let u = *left.last().unwrap();
            let next = u + rho(u);
            left.push(next);
            if next >= half {
                break;
            }
        }
        let f = half / *left.last().unwrap();
        let m = left.len();
        let mut out: Vec<f64> = left.iter().map(|&u| f * u).collect();
        for k in (1..m - 1).rev() {
            out.push(len - f * left[k]);
        }
        out
    }
}

/// Piecewise-linear map from polar angle to ring parameter, built from an
/// existing ring. Circular rings take their parameters from the previous
/// ring this way, so parameter density follows the geometry: a direction
/// between two ring nodes gets a parameter between theirs.
struct ParamInterp {
    ang0: f64,
    par0: f64,
    /// (unwrapped angle, unwrapped parameter) pairs, both starting at 0
    /// and ending at 2π
    table: Vec<(f64, f64)>,
}

impl ParamInterp {
    fn new(ring: &Ring, nodes: &[Vec2]) -> Self {
        let polar = |i: usize| nodes[i][1].atan2(nodes[i][0]);
        let ang0 = polar(ring[0].0);
        let par0 = ring[0].1;
        let mut table = Vec::with_capacity(ring.len() + 1);
        table.push((0.0, 0.0));
        let (mut a_acc, mut p_acc) = (0.0, 0.0);
        let (mut last_a, mut last_p) = (ang0, par0);
        let wrap = |d: f64| {
            let r = d.rem_euclid(TAU);
            // a convex ring walked CCW has increasing angle; treat a
            // near-2π increment as rounding of a degenerate step
            if r > PI { 0.0 } else { r }
        };
        for &(idx, par) in ring.iter().skip(1) {
            let a = polar(idx);
            a_acc += wrap(a - last_a);
            p_acc += wrap(par - last_p);
            table.push((a_acc, p_acc));
            (last_a, last_p) = (a, par);
        }
        table.push((TAU, TAU));
        ParamInterp { ang0, par0, table }
    }

    fn param(&self, theta: f64) -> f64 {
        let rel = (theta - self.ang0).rem_euclid(TAU);
        let k = self.table.partition_point(|&(a, _)| a <= rel);
        let (a0, p0) = self.table[k - 1];
        let (a1, p1) = self.table[k.min(self.table.len() - 1)];
        let frac = if a1 > a0 { (rel - a0) / (a1 - a0) } else { 0.0 };
        (self.par0 + p0 + frac * (p1 - p0)).rem_euclid(TAU)
    }
}

/// Build the annulus mesh. Requires the origin strictly inside `body` and
/// `r_outer` at least twice the largest vertex radius.
pub fn build_mesh(body: &ConvexPolytope, r_outer: f64, h: f64) -> Result<AnnulusMesh> {
    let scale = body.diameter();
    if !(h > 0.0) || !(r_outer > 0.0) {
        return Err(Error::Mesh("r_outer and h must be positive".into()));
    }
    if body.offsets.iter().any(|&q| q < 1e-9 * scale) {
        return Err(Error::Mesh("origin must lie strictly inside the body".into()));
    }
    let r_max = body.vertices.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if r_outer < 2.0 * r_max {
        return Err(Error::Mesh(format!(
            "outer radius {r_outer:.3} too close to the body (max vertex radius {r_max:.3})"
        )));
    }

    let mut nodes: Vec<Vec2> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();

    let walk = BoundaryWalk::new(body)?;
    // foot parameters scaled to [0, 2π) so the stitch can wrap them
    let norm = TAU / walk.total;
    // corner boundary-layer floor; see the grading constants above
    let s_min = h / GRADE_DEPTH;

    // ring 0: ∂E with every vertex plus graded per-face subdivision
    let pts = walk.offset_ring(0.0, h, s_min);
    let mut ring0: Ring = Vec::with_capacity(pts.len());
    for &(p, sigma, _) in &pts {
        ring0.push((nodes.len(), sigma * norm));
        nodes.push(p);
    }
    let inner: Vec<usize> = ring0.iter().map(|&(i, _)| i).collect();
    let rbar = pts.iter().map(|(p, _, _)| p.norm()).sum::<f64>() / pts.len() as f64;

    // keep a ring's nodes at least a fraction of the local target spacing
    // apart; the arc subdivision can leave short edges next to segment
    // nodes
    let commit_ring = |cand: Vec<(Vec2, f64, f64)>, nodes: &mut Vec<Vec2>| -> Ring {
        let mut kept: Vec<(Vec2, f64, f64)> = Vec::with_capacity(cand.len());
        for (x, sigma, rho) in cand {
            if kept.last().is_none_or(|&(l, _, rl)| (x - l).norm() >= 0.5 * rho.min(rl)) {
                kept.push((x, sigma, rho));
            }
        }
        while kept.len() > 3
            && (kept[kept.len() - 1].0 - kept[0].0).norm()
                < 0.5 * kept[kept.len() - 1].2.min(kept[0].2)
        {
            kept.pop();
        }
        let mut ring: Ring = Vec::with_capacity(kept.len());
        for (x, sigma, _) in kept {
            ring.push((nodes.len(), sigma * norm));
            nodes.push(x);
        }
        ring
    };

    // the relative ring gap α = far_growth − 1 sets a resolution floor for
    // the whole far field; tying it to the boundary spacing keeps the
    // far-field bias shrinking under h-refinement
    let far_growth = (1.0 + 6.4 * h / scale).clamp(1.02, 1.2);

    // offset regime: rings sample ∂(E + tB), the true Minkowski offset
    // (faces shifted along their normals plus vertex arcs). Offsets of a
    // convex body are convex and tend to a circle, so every ring is
    // star-shaped about the origin and the radial variation shrinks
    // relative to the ring gap; the regime ends once circles can take
    // over without opening large gaps anywhere.
    // the first rings are a geometric warm-up from the corner floor to h,
    // so the graded boundary layer stays isotropic in the radial direction
    let mut prev = ring0;
    let mut delta = s_min;
    let mut t = 0.0;
    let mut ring_rmax = r_max;
    let mut ring_rmin = pts.iter().map(|(p, _, _)| p.norm()).fold(f64::INFINITY, f64::min);
    while ring_rmax - ring_rmin > 1.5 * delta.max(h) && ring_rmax + delta < 0.7 * r_outer {
        t += delta;
        let spacing = (0.75 * delta).max(h);
        let cand = walk.offset_ring(t, spacing, s_min);
        let ring = commit_ring(cand, &mut nodes);
        ring_rmax = ring.iter().map(|&(i, _)| nodes[i].norm()).fold(0.0f64, f64::max);
        ring_rmin = ring.iter().map(|&(i, _)| nodes[i].norm()).fold(f64::INFINITY, f64::min);
        stitch(&prev, &ring, &nodes, &mut tris);
        prev = ring;
        let grown = delta * 1.2;
        delta = if grown < h {
            grown
        } else {
            grown.min((far_growth - 1.0) * (t + rbar)).max(h)
        };
    }

    // circular regime: uniform-angle rings, coarsening with radius; the
    // ring spacing becomes self-similar (δ ≈ α·r)
    let mut r = ring_rmax;
    let mut r_prev_ring_max = r;
    let mut prev_n = prev.len();
    let mut ring_radii: Vec<f64> = Vec::new();
    loop {
        delta = delta.min((far_growth - 1.0) * r_prev_ring_max).max(h);
        let mut next = r_prev_ring_max + delta;
        let last = next >= r_outer - 0.5 * delta;
        if last {
            next = r_outer;
        }
        r = next;
        let target = (TAU * r / delta).ceil() as usize;
        let n = target.clamp((prev_n / 2).max(16), prev_n.max(16));
        let interp = ParamInterp::new(&prev, &nodes);
        let mut ring: Ring = Vec::with_capacity(n);
        for j in 0..n {
            let t = TAU * j as f64 / n as f64;
            ring.push((nodes.len(), interp.param(t)));
            nodes.push(r * Vec2::new(t.cos(), t.sin()));
        }
        stitch(&prev, &ring, &nodes, &mut tris);
        ring_radii.push(r);
        prev = ring;
        prev_n = n;
        r_prev_ring_max = r;
        delta *= far_growth;
        if last {
            break;
        }
    }
    let outer: Vec<usize> = prev.iter().map(|&(i, _)| i).collect();

    // quality: orientation must be CCW everywhere, and the smallest angle
    // is reported; below 5° the solve accuracy degrades enough to refuse
    let mut min_angle = f64::INFINITY;
    let mut worst = [Vec2::zeros(); 3];
    let mut worst_idx = [0usize; 3];
    for t in &tris {
        let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        let area2 = (b - a).perp(&(c - a));
        if area2 <= 0.0 {
            return Err(Error::Mesh(format!(
                "inverted triangle in ring stitch: {a:?} {b:?} {c:?} (area2 {area2:.3e})"
            )));
        }
        for (u, v, w) in [(a, b, c), (b, c, a), (c, a, b)] {
            let e1 = v - u;
            let e2 = w - u;
            let angle = (e1.dot(&e2) / (e1.norm() * e2.norm())).clamp(-1.0, 1.0).acos();
            if angle < min_angle {
                min_angle = angle;
                worst = [a, b, c];
            }
        }
    }
    let min_angle_deg = min_angle.to_degrees();
    if min_angle_deg < 5.0 {
        return Err(Error::Mesh(format!(
            "mesh quality too poor (min angle {min_angle_deg:.2}° at {:?} {:?} {:?})",
            worst[0], worst[1], worst[2]
        )));
    }

    Ok(AnnulusMesh {
        nodes,
        triangles: tris,
        inner,
        outer,
        ring_radii,
        r_outer,
        h_boundary: h,
        min_angle_deg,
    })
}

/// Triangulate the strip between two rings by a monotone merge walk in
/// the (unwrapped) foot parameter, advancing whichever ring's next node
/// comes first and emitting one triangle per step. Handles differing
/// node counts.
fn stitch(inner: &Ring, outer: &Ring, nodes: &[Vec2], tris: &mut Vec<[usize; 3]>) {
    let m = inner.len();
    let n = outer.len();
    // align the outer ring start to the inner ring start parameter
    let a0 = inner[0].1;
    let circ = |t: f64| {
        let d = (t - a0).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let j0 = (0..n).min_by(|&i, &j| circ(outer[i].1).partial_cmp(&circ(outer[j].1)).unwrap()).unwrap();

    let ia = |i: usize| inner[i % m].0;
    let ib = |j: usize| outer[(j0 + j) % n].0;
    // unwrapped parameters from a0; the merge stays monotone, and points
    // of both rings sit on non-crossing normal rays ordered the same way,
    // which rules out crossed (inverted) triangles
    let unwrap = |first: f64, angles: &mut dyn Iterator<Item = f64>| -> Vec<f64> {
        let mut out = vec![first];
        let mut last_raw = f64::NAN;
        for t in angles {
            if last_raw.is_nan() {
                last_raw = t;
                continue;
            }
            let inc = (t - last_raw).rem_euclid(TAU);
            let prev = *out.last().unwrap();
            out.push(prev + inc);
            last_raw = t;
        }
        out
    };
    let ua_v = unwrap(0.0, &mut inner.iter().map(|&(_, t)| t));
    // signed start of the outer ring relative to a0, in [−π, π)
    let b_start = (outer[j0].1 - a0 + PI).rem_euclid(TAU) - PI;
    let ub_v = unwrap(b_start, &mut (0..n).map(|j| outer[(j0 + j) % n].1));
    let ua = |i: usize| if i >= m { ua_v[i - m] + TAU } else { ua_v[i] };
    let ub = |j: usize| if j >= n { ub_v[j - n] + TAU } else { ub_v[j] };
    let (mut i, mut j) = (0usize, 0usize);
    while i < m || j < n {
        let adv_inner = if i == m {
            false
        } else if j == n {
            true
        } else {
            let (na, nb) = (ua(i + 1), ub(j + 1));
            if (na - nb).abs() > 1e-12 {
                na < nb
            } else {
                // tie: pick the shorter new diagonal
                let d_inner = (nodes[ia(i + 1)] - nodes[ib(j)]).norm();
                let d_outer = (nodes[ia(i)] - nodes[ib(j + 1)]).norm();
                d_inner <= d_outer
            }
        };
        if adv_inner {
            tris.push([ia(i), ib(j), ia(i + 1)]);
            i += 1;
        } else {
            tris.push([ia(i), ib(j), ib(j + 1)]);
            j += 1;
        }
    }
}
