//! Planar convex polytopes from half-space data `⟨x, ξ_i⟩ ≤ q_i`.

use nalgebra::Vector2;

use crate::operators::Vec2;
use crate::{Error, Result};

const COLLINEAR_TOL: f64 = 1e-12;

/// A planar convex body given by half-space data, with derived vertices
/// and faces. Redundant half-spaces are kept in the data model with face
/// length 0 so inverse-problem consumers can report zero-measure faces.
#[derive(Clone, Debug)]
pub struct ConvexPolytope {
    /// outer unit normals ξ_i
    pub normals: Vec<Vec2>,
    /// offsets q_i
    pub offsets: Vec<f64>,
    /// vertices in counterclockwise order
    pub vertices: Vec<Vec2>,
    /// per-constraint face data (None for redundant constraints)
    pub faces: Vec<Option<Face>>,
}

/// A positive-length boundary face.
#[derive(Clone, Debug)]
pub struct Face {
    /// index into `normals`
    pub normal_index: usize,
    /// endpoints in counterclockwise boundary order
    pub start: Vec2,
    pub end: Vec2,
}

impl Face {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn midpoint(&self) -> Vec2 {
        0.5 * (self.start + self.end)
    }
}

/// Build a polytope from half-space data. Normals are auto-normalized
/// (unit-length tolerance 1e-9); the intersection must be bounded with
/// nonempty interior.
pub fn build_polytope(normals: &[Vec2], offsets: &[f64]) -> Result<ConvexPolytope> {
    if normals.len() != offsets.len() {
        return Err(Error::Polytope("normals and offsets length mismatch".into()));
    }
    if normals.len() < 3 {
        return Err(Error::Polytope("need at least 3 half-spaces".into()));
    }
    let mut xi = Vec::with_capacity(normals.len());
    for v in normals {
        let r = v.norm();
        if r < 1e-9 {
            return Err(Error::Polytope("zero normal vector".into()));
        }
        xi.push(v / r);
    }

    // boundedness: normal directions must not fit in an open half-circle
    let mut angles: Vec<f64> = xi.iter().map(|u| u[1].atan2(u[0])).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = angles.len();
    for i in 0..m {
        let next = if i + 1 < m { angles[i + 1] } else { angles[0] + 2.0 * std::f64::consts::PI };
        if next - angles[i] >= std::f64::consts::PI - 1e-12 {
            return Err(Error::Polytope("unbounded intersection (normal gap >= 180°)".into()));
        }
    }

    let scale = offsets.iter().fold(1.0f64, |s, q| s.max(q.abs()));
    let tol = 1e-10 * scale;

    // candidate vertices: pairwise supporting-line intersections that satisfy
    // every constraint
    let mut verts: Vec<Vec2> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let (a, b) = (xi[i], xi[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < COLLINEAR_TOL {
                continue;
            }
            let x = Vector2::new(
                (offsets[i] * b[1] - offsets[j] * a[1]) / det,
                (offsets[j] * a[0] - offsets[i] * b[0]) / det,
            );
            if xi.iter().zip(offsets).all(|(u, &q)| u.dot(&x) <= q + tol) {
                verts.push(x);
            }
        }
    }
    if verts.is_empty() {
        return Err(Error::Polytope("empty intersection".into()));
    }

    // order counterclockwise around the centroid and deduplicate
    let c = verts.iter().sum::<Vec2>() / verts.len() as f64;
    verts.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.partial_cmp(&tb).unwrap()
    });
    let mut unique: Vec<Vec2> = Vec::new();
    for v in verts {
        if unique.iter().all(|u| (u - v).norm() > 10.0 * tol) {
            unique.push(v);
        }
    }
    if unique.len() < 3 {
        return Err(Error::Polytope("empty interior (fewer than 3 distinct vertices)".into()));
    }
    // nonempty interior: shoelace area
    let area: f64 = unique
        .iter()
        .zip(unique.iter().cycle().skip(1))
        .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
        .sum::<f64>()
        / 2.0;
    if area <= 100.0 * tol * tol {
        return Err(Error::Polytope(format!("degenerate interior (area {area:.3e})")));
    }

    // faces: consecutive vertex pairs lying on constraint i
    let nv = unique.len();
    let face_tol = 1e-8 * scale;
    let mut faces: Vec<Option<Face>> = vec![None; m];
    for i in 0..m {
        let on: Vec<usize> =
            (0..nv).filter(|&v| (xi[i].dot(&unique[v]) - offsets[i]).abs() <= face_tol).collect();
        if on.len() < 2 {
            continue;
        }
        // find the consecutive pair (in CCW order) on this line
        for &v in &on {
            let w = (v + 1) % nv;
            if on.contains(&w) && (unique[w] - unique[v]).norm() > face_tol {
                faces[i] = Some(Face { normal_index: i, start: unique[v], end: unique[w] });
                break;
            }
        }
    }

    Ok(ConvexPolytope { normals: xi, offsets: offsets.to_vec(), vertices: unique, faces })
}

impl ConvexPolytope {
    /// Support function `h_E(X) = max_v ⟨v, X⟩`, `X ≠ 0`.
    pub fn support(&self, x: Vec2) -> f64 {
        self.vertices.iter().map(|v| v.dot(&x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn centroid(&self) -> Vec2 {
        self.vertices.iter().sum::<Vec2>() / self.vertices.len() as f64
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn perimeter(&self) -> f64 {
        self.gauss_faces().iter().map(|f| f.length()).sum()
    }

    pub fn area(&self) -> f64 {
        self.vertices
            .iter()
            .zip(self.vertices.iter().cycle().skip(1))
            .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
            .sum::<f64>()
            / 2.0
    }

    /// Translate by `y`.
    pub fn translate(&self, y: Vec2) -> ConvexPolytope {
        let offsets: Vec<f64> =
            self.normals.iter().zip(&self.offsets).map(|(xi, q)| q + xi.dot(&y)).collect();
        build_polytope(&self.normals, &offsets).expect("translation preserves validity")
    }

    /// Scale about the origin by `r > 0`.
    pub fn scale(&self, r: f64) -> ConvexPolytope {
        let offsets: Vec<f64> = self.offsets.iter().map(|q| q * r).collect();
        build_polytope(&self.normals, &offsets).expect("scaling preserves validity")
    }

    /// Does the body contain `x` (within tolerance)?
    pub fn contains(&self, x: Vec2, tol: f64) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(xi, q)| xi.dot(&x) <= q + tol)
    }

    /// Positive-length faces paired with their outer normals.
    pub fn gauss_faces(&self) -> Vec<Face> {
        self.faces.iter().flatten().cloned().collect()
    }

    /// Boundary radius in direction `u` (unit): the positive `ρ` with
    /// `ρ·u ∈ ∂E`. Requires 0 in the interior.
    pub fn radial(&self, u: Vec2) -> f64 {
        let mut rho = f64::INFINITY;
        for (xi, &q) in self.normals.iter().zip(&self.offsets) {
            let d = xi.dot(&u);
            if d > 1e-14 {
                rho = rho.min(q / d);
            }
        }
        rho
    }
}

/// Body with support function `λ h₁ + (1-λ) h₂`, realized on the merged
/// normal set of `e1` and `e2`.
pub fn minkowski_combine(
    lambda: f64,
    e1: &ConvexPolytope,
    e2: &ConvexPolytope,
) -> Result<ConvexPolytope> {
    let merged = merge_normals(&e1.normals, &e2.normals);
    let offsets: Vec<f64> = merged
        .iter()
        .map(|u| lambda * e1.support(*u) + (1.0 - lambda) * e2.support(*u))
        .collect();
    build_polytope(&merged, &offsets)
}

/// Remove faces shorter than `min_len` by dropping their half-spaces (the
/// neighbors take over). The result is within `min_len` of the input in
/// Hausdorff distance; meshing needs this because boundary edges well
/// below the target spacing force degenerate triangles.
pub fn drop_short_faces(body: &ConvexPolytope, min_len: f64) -> Result<ConvexPolytope> {
    let mut current = body.clone();
    loop {
        let active: Vec<&Face> = current.faces.iter().flatten().collect();
        if active.len() <= 3 {
            return Ok(current);
        }
        let shortest = active
            .iter()
            .min_by(|a, b| a.length().partial_cmp(&b.length()).unwrap())
            .unwrap();
        if shortest.length() >= min_len {
            return Ok(current);
        }
        let skip = shortest.normal_index;
        let normals: Vec<Vec2> = current
            .faces
            .iter()
            .flatten()
            .filter(|f| f.normal_index != skip)
            .map(|f| current.normals[f.normal_index])
            .collect();
        let offsets: Vec<f64> = current
            .faces
            .iter()
            .flatten()
            .filter(|f| f.normal_index != skip)
            .map(|f| current.offsets[f.normal_index])
            .collect();
        current = build_polytope(&normals, &offsets)?;
    }
}

/// Minkowski sum `e1 + t·e2` for `t ≥ 0`.
pub fn minkowski_sum(e1: &ConvexPolytope, t: f64, e2: &ConvexPolytope) -> Result<ConvexPolytope> {
    let merged = merge_normals(&e1.normals, &e2.normals);
    let offsets: Vec<f64> = merged.iter().map(|u| e1.support(*u) + t * e2.support(*u)).collect();
    build_polytope(&merged, &offsets)
}

fn merge_normals(a: &[Vec2], b: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = a.to_vec();
    for u in b {
        if out.iter().all(|v| (v - u).norm() > 1e-12) {
            out.push(*u);
        }
    }
    out
}

/// Hausdorff distance between convex bodies: the maximal support-function
/// gap, evaluated on the merged normals, vertex directions and a uniform
/// angular grid.
pub fn hausdorff(e1: &ConvexPolytope, e2: &ConvexPolytope) -> f64 {
    let mut dirs = merge_normals(&e1.normals, &e2.normals);
    for v in e1.vertices.iter().chain(&e2.vertices) {
        let r = v.norm();
        if r > 1e-14 {
            dirs.push(v / r);
        }
    }
    for i in 0..720 {
        let t = 2.0 * std::f64::consts::PI * i as f64 / 720.0;
        dirs.push(Vec2::new(t.cos(), t.sin()));
    }
    dirs.iter().map(|u| (e1.support(*u) - e2.support(*u)).abs()).fold(0.0, f64::max)
}

/// Regular `m`-gon circumscribed about the circle of radius `r` at `center`
/// (each face is tangent to the circle). For large `m` this is the standard
/// polygonal approximation of `B(center, r)` from outside.
pub fn regular_polygon(m: usize, r: f64, center: Vec2) -> ConvexPolytope {
    let normals: Vec<Vec2> = (0..m)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let offsets: Vec<f64> = normals.iter().map(|u| r + u.dot(&center)).collect();
    build_polytope(&normals, &offsets).expect("regular polygon is valid")
}

/// Axis-aligned box `[-a, a] × [-b, b]` shifted by `center`.
pub fn box_body(a: f64, b: f64, center: Vec2) -> ConvexPolytope {
    let normals =
        [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, -1.0)];
    let offsets: Vec<f64> =
        normals.iter().zip([a, b, a, b]).map(|(u, q)| q + u.dot(&center)).collect();
    build_polytope(&normals, &offsets).expect("box is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> ConvexPolytope {
        box_body(1.0, 1.0, Vec2::zeros())
    }

    #[test]
    fn square_vertices() {
        let sq = unit_square();
        assert_eq!(sq.vertices.len(), 4);
        for v in &sq.vertices {
            assert_relative_eq!(v[0].abs(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(v[1].abs(), 1.0, max_relative = 1e-12);
        }
        // CCW order
        assert!(sq.area() > 0.0);
        assert_relative_eq!(sq.area(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn strip_is_unbounded() {
        let normals = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(1.0, 1e-13)];
        let offsets = [1.0, 1.0, 1.0];
        assert!(build_polytope(&normals, &offsets).is_err());
    }

    #[test]
    fn hexagon_is_regular() {
        let hex = regular_polygon(6, 1.0, Vec2::zeros());
        assert_eq!(hex.vertices.len(), 6);
        let faces = hex.gauss_faces();
        assert_eq!(faces.len(), 6);
        let side = 2.0 / 3f64.sqrt(); // apothem 1
        for f in &faces {
            assert_relative_eq!(f.length(), side, max_relative = 1e-10);
        }
    }

    #[test]
    fn support_values() {
        let sq = unit_square();
        assert_relative_eq!(sq.support(Vec2::new(1.0, 0.0)), 1.0, max_relative = 1e-12);
        let d = Vec2::new(1.0, 1.0) / 2f64.sqrt();
        assert_relative_eq!(sq.support(d), 2f64.sqrt(), max_relative = 1e-12);
        // h_E(ξ_i) = q_i on nonempty faces
        for f in sq.gauss_faces() {
            let i = f.normal_index;
            assert_relative_eq!(sq.support(sq.normals[i]), sq.offsets[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn combine_identity_and_idempotence() {
        let sq = unit_square();
        let same = minkowski_combine(1.0, &sq, &regular_polygon(3, 0.5, Vec2::zeros())).unwrap();
        assert!(hausdorff(&same, &sq) < 1e-12);
        let half = minkowski_combine(0.5, &sq, &sq).unwrap();
        assert!(hausdorff(&half, &sq) < 1e-12);
    }

    #[test]
    fn square_plus_rotated_square_is_octagon() {
        let sq = unit_square();
        let c = std::f64::consts::FRAC_PI_4;
        let rot: Vec<Vec2> = sq.normals.iter().map(|u| {
            Vec2::new(u[0] * c.cos() - u[1] * c.sin(), u[0] * c.sin() + u[1] * c.cos())
        }).collect();
        let sq45 = build_polytope(&rot, &sq.offsets).unwrap();
        let oct = minkowski_combine(0.5, &sq, &sq45).unwrap();
        assert_eq!(oct.gauss_faces().len(), 8);
        for u in oct.normals.iter() {
            let expect = 0.5 * (sq.support(*u) + sq45.support(*u));
            assert_relative_eq!(oct.support(*u), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn hausdorff_basics() {
        let sq = unit_square();
        assert_eq!(hausdorff(&sq, &sq), 0.0);
        // polygons inscribed in circles of radius 1 and 2: the support gap
        // is (2 - 1)·cos(angle to nearest vertex), maximized (= 1) at the
        // shared vertex directions
        let a = (std::f64::consts::PI / 32.0).cos();
        let b1 = regular_polygon(32, a, Vec2::zeros());
        let b2 = regular_polygon(32, 2.0 * a, Vec2::zeros());
        assert_relative_eq!(hausdorff(&b1, &b2), 1.0, max_relative = 1e-12);
        let shifted = sq.translate(Vec2::new(0.3, 0.0));
        assert_relative_eq!(hausdorff(&sq, &shifted), 0.3, max_relative = 1e-9);
    }

    #[test]
    fn gauss_faces_square() {
        let sq = unit_square();
        let faces = sq.gauss_faces();
        assert_eq!(faces.len(), 4);
        for f in &faces {
            assert_relative_eq!(f.length(), 2.0, max_relative = 1e-12);
        }
        assert_relative_eq!(sq.perimeter(), 8.0, max_relative = 1e-12);
    }

    #[test]
    fn redundant_halfspace_has_no_face() {
        // far-away constraint is redundant
        let normals = [
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(1.0, 0.0),
        ];
        let offsets = [1.0, 1.0, 1.0, 1.0, 5.0];
        let p = build_polytope(&normals, &offsets).unwrap();
        assert!(p.faces[4].is_none());
        assert_eq!(p.gauss_faces().len(), 4);
    }

    #[test]
    fn closure_condition_of_face_normals() {
        // Σ length_i ξ_i = 0 (discrete closure)
        for body in [
            unit_square(),
            regular_polygon(7, 1.3, Vec2::new(0.2, -0.1)),
            box_body(2.0, 1.0, Vec2::zeros()),
        ] {
            let s: Vec2 = body.gauss_faces().iter().map(|f| f.length() * body.normals[f.normal_index]).sum();
            assert!(s.norm() < 1e-9, "closure defect {}", s.norm());
        }
    }

    #[test]
    fn support_linearity_under_combination() {
        let e1 = unit_square();
        let e2 = regular_polygon(5, 0.8, Vec2::new(0.1, 0.2));
        let lam = 0.3;
        let comb = minkowski_combine(lam, &e1, &e2).unwrap();
        for i in 0..64 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
            let u = Vec2::new(t.cos(), t.sin());
            let expect = lam * e1.support(u) + (1.0 - lam) * e2.support(u);
            // the merged-normal realization can only shrink below the support sum
            assert!(comb.support(u) <= expect + 1e-10);
            // equality in sampled normal directions
        }
        for u in &comb.normals {
            let expect = lam * e1.support(*u) + (1.0 - lam) * e2.support(*u);
            assert_relative_eq!(comb.support(*u), expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn scaling_translation_of_support() {
        let e = regular_polygon(5, 1.0, Vec2::zeros());
        let r = 2.5;
        let y = Vec2::new(0.4, -0.7);
        let moved = e.scale(r).translate(y);
        for i in 0..32 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
            let u = Vec2::new(t.cos(), t.sin());
            assert_relative_eq!(
                moved.support(u),
                r * e.support(u) + y.dot(&u),
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
    }
}
