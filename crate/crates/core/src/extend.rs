//! Extension of a cap to an unbounded convex polyhedron.
//!
//! The half-spaces below the boundary-face planes are intersected through
//! the point-plane duality `z = ax + by + c ↦ (a, b, −c)`: a point lies below
//! every plane exactly when every dual point lies below the point's dual
//! plane, so the vertices of the intersection are the duals of the upward
//! faces of the hull of the dual points. Those vertices are joined with the
//! cap vertices, the upward faces of that hull form the bounded part, and
//! rays are grown where neighbouring border faces meet.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::cap::Cap;
use crate::geom::{plane_through, GeomError, Plane, Point3, Tolerances, Vec3, Vector3};
use crate::hull::{convex_hull_with, upward_faces, HullError};
use crate::mesh::{Face, Surface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtendError {
    #[error("boundary face {0} is vertical")]
    VerticalBoundaryFace(usize),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("extension is inconsistent: {0}")]
    Invariant(String),
}

/// Maps the plane `z = ax + by + c` to the dual point `(a, b, −c)`.
pub fn dualize_plane(p: &Plane) -> Point3 {
    Vec3::new(p.a, p.b, -p.c)
}

/// Inverse of [`dualize_plane`]: `(u, v, w) ↦ z = ux + vy − w`.
pub fn dualize_point(q: &Point3) -> Plane {
    Plane::new(q.x, q.y, -q.z)
}

/// Planes of the cap faces that share an edge with the cap border, in
/// border order.
pub fn boundary_face_planes(c: &Cap, tol: &Tolerances) -> Result<Vec<Plane>, ExtendError> {
    c.boundary_faces()
        .iter()
        .map(|&f| {
            c.parent().faces()[f].plane(tol).map_err(|e| match e {
                GeomError::VerticalPlane => ExtendError::VerticalBoundaryFace(f),
                e => e.into(),
            })
        })
        .collect()
}

/// Tolerances for a dual point set. Nearly vertical planes dualize to
/// points far from the rest, so the scale is the median spread rather than
/// the bounding box, which such outliers would inflate.
fn dual_tolerances(duals: &[Point3]) -> Tolerances {
    let median = |mut xs: Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        xs[xs.len() / 2]
    };
    let centre = Vec3::new(
        median(duals.iter().map(|d| d.x).collect()),
        median(duals.iter().map(|d| d.y).collect()),
        median(duals.iter().map(|d| d.z).collect()),
    );
    Tolerances::with_scale(2.0 * median(duals.iter().map(|d| d.distance(&centre)).collect()))
}

/// Dual points of `planes` with coincident ones merged.
fn distinct_duals(planes: &[Plane]) -> Vec<Point3> {
    let duals: Vec<Point3> = planes.iter().map(dualize_plane).collect();
    if duals.is_empty() {
        return duals;
    }
    let tol = dual_tolerances(&duals);
    let mut out: Vec<Point3> = Vec::with_capacity(duals.len());
    for d in duals {
        if !out.iter().any(|q| q.distance(&d) <= tol.eps_geom) {
            out.push(d);
        }
    }
    out
}

/// True when the slopes `(a, b)` of all dual points lie on one line: the
/// planes then share a horizontal direction and bound a prism.
fn slopes_collinear(duals: &[Point3]) -> bool {
    let flat: Vec<Point3> = duals.iter().map(|d| Vec3::new(d.x, d.y, 0.0)).collect();
    let tol = dual_tolerances(&flat);
    let p0 = flat[0];
    let Some(p1) = flat.iter().copied().max_by(|a, b| a.distance(&p0).total_cmp(&b.distance(&p0))) else {
        return true;
    };
    let Some(axis) = (p1 - p0).normalized() else {
        return true;
    };
    flat.iter().all(|p| axis.cross(&(*p - p0)).norm() <= tol.eps_geom)
}

/// Common point of the planes dual to `duals`, which are assumed to meet
/// in one point.
///
/// Solved directly from the best-conditioned triple of planes rather than by
/// dualizing the plane through `duals`: a nearly vertical plane puts its
/// dual point far away and ruins the fitted plane.
fn common_point(duals: &[Point3]) -> Option<Point3> {
    // Unit normal n and offset d with n·p = d for z = u·x + v·y − w.
    let unit: Vec<(Vec3, f64)> = duals
        .iter()
        .map(|q| {
            let raw = Vec3::new(q.x, q.y, -1.0);
            let len = raw.norm();
            (raw / len, q.z / len)
        })
        .collect();
    let k = unit.len();
    let mut best: Option<(f64, [usize; 3])> = None;
    for i in 0..k {
        for j in (i + 1)..k {
            for l in (j + 1)..k {
                let det = unit[i].0.dot(&unit[j].0.cross(&unit[l].0)).abs();
                if best.is_none_or(|(b, _)| det > b) {
                    best = Some((det, [i, j, l]));
                }
            }
        }
    }
    let (det, [i, j, l]) = best?;
    if det <= 1e-14 {
        return None;
    }
    let ((n0, d0), (n1, d1), (n2, d2)) = (unit[i], unit[j], unit[l]);
    let det = n0.dot(&n1.cross(&n2));
    let p = (n1.cross(&n2) * d0 + n2.cross(&n0) * d1 + n0.cross(&n1) * d2) / det;
    p.is_finite().then_some(p)
}

/// Vertices of the region below every plane (their lower envelope).
///
/// Fewer than three distinct planes, or planes sharing a line or a
/// horizontal direction, have no vertices. Planes through one common point
/// give that point.
pub fn lower_envelope_vertices(planes: &[Plane]) -> Result<Vec<Point3>, ExtendError> {
    let duals = distinct_duals(planes);
    if duals.len() < 3 {
        return Ok(Vec::new());
    }
    let tol = dual_tolerances(&duals);
    match convex_hull_with(&duals, &tol) {
        Ok(hull) => {
            let p = hull.polyhedron;
            let min_nz = tol.eps_angle.sin();
            p.faces()
                .iter()
                .filter(|f| f.normal.z > min_nz)
                .map(|f| {
                    let pts: Vec<Point3> = f.vertices.iter().map(|&v| p.vertices()[v]).collect();
                    common_point(&pts).ok_or(ExtendError::Invariant("dual face planes share no point".into()))
                })
                .collect()
        }
        Err(HullError::DegenerateHull) | Err(HullError::TooFewPoints(_)) => match plane_through(&duals, &tol) {
            Ok(_) => Ok(common_point(&duals).into_iter().collect()),
            Err(GeomError::VerticalPlane) | Err(GeomError::Degenerate(_)) => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        },
        Err(e) => Err(e.into()),
    }
}

/// Half-line of the extension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ray {
    /// Vertex of the bounded part the ray starts from.
    pub origin_vertex: usize,
    pub origin: Point3,
    /// Unit recession direction. Not necessarily downward: rays of narrow
    /// caps can climb.
    pub direction: Vector3,
}

/// Unbounded face: the part of a border face's plane beyond the bounded
/// part, between two rays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnboundedFace {
    pub plane: Plane,
    /// Face of the bounded part lying in the same plane.
    pub bounded_face: usize,
    /// Border vertices from the left ray's origin to the right ray's origin.
    pub chain: Vec<usize>,
    pub left_ray: usize,
    pub right_ray: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexOrigin {
    /// Vertex of the cap, by parent polyhedron index.
    Cap(usize),
    /// Vertex created by the extension.
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegenerateKind {
    /// One plane: the extension is a half-space.
    HalfSpace,
    /// Two planes: a wedge along one line.
    Wedge,
    /// Planes sharing a horizontal direction: an unbounded prism.
    Prism,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateExtension {
    pub kind: DegenerateKind,
    pub planes: Vec<Plane>,
}

/// Result of [`build_extension`].
#[derive(Debug, Clone)]
pub enum Extension {
    Unbounded(UnboundedPolyhedron),
    Degenerate(DegenerateExtension),
}

/// Rays and unbounded faces grown from the border of a bounded part.
#[derive(Debug, Clone, PartialEq)]
pub struct RayFan {
    /// Border of the bounded part, counterclockwise seen from +z.
    pub boundary: Vec<usize>,
    pub rays: Vec<Ray>,
    pub unbounded_faces: Vec<UnboundedFace>,
}

#[derive(Debug, Clone)]
pub struct UnboundedPolyhedron {
    bounded: Surface,
    origins: Vec<VertexOrigin>,
    boundary: Vec<usize>,
    rays: Vec<Ray>,
    unbounded_faces: Vec<UnboundedFace>,
    boundary_planes: Vec<Plane>,
    envelope: Vec<Point3>,
    tolerances: Tolerances,
    slack: Slack,
}

/// Distance tolerance that grows with distance from the cap, for points
/// computed from nearly parallel planes far away.
#[derive(Debug, Clone, Copy)]
struct Slack {
    centre: Point3,
    scale: f64,
    eps: f64,
}

impl Slack {
    fn around(points: &[Point3], tol: &Tolerances) -> Self {
        let centre = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p) / points.len().max(1) as f64;
        Slack { centre, scale: tol.eps_geom / Tolerances::REL_GEOM, eps: tol.eps_geom }
    }

    fn at(&self, p: &Point3) -> f64 {
        self.eps * (1.0 + p.distance(&self.centre) / self.scale)
    }
}

impl UnboundedPolyhedron {
    /// Bounded part: vertices and bounded faces.
    pub fn bounded(&self) -> &Surface {
        &self.bounded
    }

    pub fn vertex_origins(&self) -> &[VertexOrigin] {
        &self.origins
    }

    /// Vertices of the bounded part that are not cap vertices.
    pub fn new_vertices(&self) -> Vec<usize> {
        (0..self.origins.len()).filter(|&v| self.origins[v] == VertexOrigin::New).collect()
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn unbounded_faces(&self) -> &[UnboundedFace] {
        &self.unbounded_faces
    }

    /// Planes of the cap's boundary faces, one per face, in border order.
    pub fn boundary_planes(&self) -> &[Plane] {
        &self.boundary_planes
    }

    /// Raw vertices of the boundary-plane envelope, before any were
    /// discarded for lying above the cap.
    pub fn envelope_points(&self) -> &[Point3] {
        &self.envelope
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// Index of the ray starting at bounded vertex `v`, if any.
    pub fn ray_at(&self, v: usize) -> Option<usize> {
        self.rays.iter().position(|r| r.origin_vertex == v)
    }

    /// True when `p` lies in the closed convex region bounded by the
    /// extension.
    pub fn contains(&self, p: &Point3) -> bool {
        let eps = self.slack.at(p);
        self.bounded.faces().iter().all(|f| f.signed_distance(p) <= eps)
    }

    /// Invariant checks against the cap the extension was built from. Each
    /// failure is described in the returned list.
    pub fn check(&self, cap: &Cap) -> Vec<String> {
        let mut out = Vec::new();
        let eps = self.tolerances.eps_geom;
        let parent = cap.parent();
        let pts = self.bounded.vertices();

        for &v in &cap.vertex_ids() {
            let p = parent.vertices()[v];
            for (i, pl) in self.boundary_planes.iter().enumerate() {
                if pl.signed_distance(&p) > eps {
                    out.push(format!("cap vertex {v} lies above boundary plane {i}"));
                }
            }
        }

        let cap_faces: Vec<&Face> = cap.face_ids().iter().map(|&f| &parent.faces()[f]).collect();
        let on_plane = |f: &Face, ids: &[usize], verts: &[Point3]| {
            ids.iter().all(|&v| f.signed_distance(&verts[v]).abs() <= self.slack.at(&verts[v]))
        };
        for (fi, f) in self.bounded.faces().iter().enumerate() {
            if !cap_faces.iter().any(|cf| cf.normal.dot(&f.normal) > 0.0 && on_plane(cf, &f.vertices, pts)) {
                out.push(format!("bounded face {fi} does not lie in any cap face plane"));
            }
        }
        let faces = self.bounded.faces();
        for i in 0..faces.len() {
            for j in (i + 1)..faces.len() {
                if faces[i].normal == faces[j].normal && faces[i].offset == faces[j].offset {
                    out.push(format!("bounded faces {i} and {j} share a plane"));
                }
            }
        }
        for (ci, cf) in cap_faces.iter().enumerate() {
            let found = self
                .bounded
                .faces()
                .iter()
                .any(|f| f.normal.dot(&cf.normal) > 0.0 && on_plane(f, &cf.vertices, parent.vertices()));
            if !found {
                out.push(format!("cap face {} is not part of the bounded surface", cap.face_ids()[ci]));
            }
        }

        if self.rays.len() < 3 {
            out.push(format!("only {} rays", self.rays.len()));
        }
        if self.rays.len() != self.unbounded_faces.len() {
            out.push("ray and unbounded face counts differ".into());
        }
        let normals: Vec<Vec3> = self.unbounded_faces.iter().map(|u| u.plane.upward_normal()).collect();
        let m = self.unbounded_faces.len();
        for (ri, r) in self.rays.iter().enumerate() {
            let left = &self.unbounded_faces[(ri + m - 1) % m];
            let right = &self.unbounded_faces[ri];
            if left.right_ray != ri || right.left_ray != ri {
                out.push(format!("ray {ri} is not shared by consecutive unbounded faces"));
            }
            for u in [left, right] {
                if u.plane.upward_normal().dot(&r.direction).abs() > RAY_PLANE_TOL {
                    out.push(format!("ray {ri} leaves the plane {}", u.plane));
                }
            }
            if normals.iter().any(|n| n.dot(&r.direction) > RAY_PLANE_TOL) {
                out.push(format!("ray {ri} is not a recession direction"));
            }
        }

        let distinct = distinct_duals(&self.boundary_planes).len();
        if self.unbounded_faces.len() > distinct {
            out.push(format!("{} unbounded faces from {distinct} boundary planes", self.unbounded_faces.len()));
        }
        for (ui, u) in self.unbounded_faces.iter().enumerate() {
            let n = u.plane.upward_normal();
            if !self.boundary_planes.iter().any(|p| (p.upward_normal() - n).norm() <= RAY_PLANE_TOL) {
                out.push(format!("unbounded face {ui} is not in a boundary plane"));
            }
        }
        out
    }
}

/// Tolerance on unit-vector dot products for ray membership in planes.
pub const RAY_PLANE_TOL: f64 = 1e-9;

/// Grows rays from every border vertex where the owning face changes and
/// one unbounded face per run of border edges on the same face.
pub fn build_rays(bounded: &Surface, tol: &Tolerances) -> Result<RayFan, ExtendError> {
    let boundary = bounded
        .border_cycle()
        .map_err(|e| ExtendError::Invariant(format!("bounded part: {e}")))?;
    let k = boundary.len();
    let edge_face: Vec<usize> = (0..k)
        .map(|i| bounded.half_edge_face(boundary[i], boundary[(i + 1) % k]).expect("border edge"))
        .collect();
    let corners: Vec<usize> = (0..k).filter(|&i| edge_face[(i + k - 1) % k] != edge_face[i]).collect();
    let m = corners.len();
    if m < 3 {
        return Err(ExtendError::Invariant(format!("border meets only {m} distinct face changes")));
    }

    let faces = bounded.faces();
    let outward: Vec3 = corners.iter().fold(Vec3::ZERO, |acc, &i| acc + faces[edge_face[i]].normal);
    let mut rays = Vec::with_capacity(m);
    for &i in &corners {
        let (fa, fb) = (&faces[edge_face[(i + k - 1) % k]], &faces[edge_face[i]]);
        let mut d = fa
            .normal
            .cross(&fb.normal)
            .normalized()
            .ok_or_else(|| ExtendError::Invariant(format!("parallel faces meet at vertex {}", boundary[i])))?;
        // A recession direction has non-positive dot product with every
        // upward normal, hence with their sum.
        if d.dot(&outward) > 0.0 {
            d = -d;
        }
        let v = boundary[i];
        rays.push(Ray { origin_vertex: v, origin: bounded.vertices()[v], direction: d });
    }

    let mut unbounded_faces = Vec::with_capacity(m);
    for r in 0..m {
        let (from, to) = (corners[r], corners[(r + 1) % m]);
        let len = (to + k - from) % k;
        let len = if len == 0 { k } else { len };
        let chain: Vec<usize> = (0..=len).map(|j| boundary[(from + j) % k]).collect();
        let face = edge_face[from];
        unbounded_faces.push(UnboundedFace {
            plane: faces[face].plane(tol)?,
            bounded_face: face,
            chain,
            left_ray: r,
            right_ray: (r + 1) % m,
        });
    }
    Ok(RayFan { boundary, rays, unbounded_faces })
}

/// Extends `c` to an unbounded convex polyhedron.
///
/// Caps with fewer than three distinct boundary planes, or whose planes
/// share a horizontal direction, have no rays and are returned as
/// [`Extension::Degenerate`].
/// Outer cycle of edge-adjacent polygons with consistent orientation.
fn merge_outlines<'a>(outlines: impl Iterator<Item = &'a [usize]>) -> Result<Vec<usize>, ExtendError> {
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for o in outlines {
        for i in 0..o.len() {
            edges.insert((o[i], o[(i + 1) % o.len()]));
        }
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in &edges {
        if !edges.contains(&(b, a)) && next.insert(a, b).is_some() {
            return Err(ExtendError::Invariant(format!("split face: vertex {a} starts two outer edges")));
        }
    }
    let Some(&start) = next.keys().next() else {
        return Err(ExtendError::Invariant("split face has no outer edges".into()));
    };
    let mut cycle = vec![start];
    let mut v = next[&start];
    while v != start {
        if cycle.len() > next.len() {
            return Err(ExtendError::Invariant("split face outline does not close".into()));
        }
        cycle.push(v);
        v = *next
            .get(&v)
            .ok_or_else(|| ExtendError::Invariant(format!("split face outline breaks at vertex {v}")))?;
    }
    if cycle.len() != next.len() {
        return Err(ExtendError::Invariant("split face outline has several loops".into()));
    }
    Ok(cycle)
}

pub fn build_extension(c: &Cap, tol: &Tolerances) -> Result<Extension, ExtendError> {
    let planes = boundary_face_planes(c, tol)?;
    let duals = distinct_duals(&planes);
    let distinct: Vec<Plane> = duals.iter().map(dualize_point).collect();
    let kind = match distinct.len() {
        1 => Some(DegenerateKind::HalfSpace),
        2 => Some(DegenerateKind::Wedge),
        _ if slopes_collinear(&duals) => Some(DegenerateKind::Prism),
        _ => None,
    };
    if let Some(kind) = kind {
        return Ok(Extension::Degenerate(DegenerateExtension { kind, planes: distinct }));
    }

    let envelope = lower_envelope_vertices(&planes)?;
    let parent = c.parent();
    let cap_ids = c.vertex_ids();
    let cap_pts: Vec<Point3> = cap_ids.iter().map(|&v| parent.vertices()[v]).collect();
    let slack = Slack::around(&cap_pts, tol);

    // Envelope vertices above some cap face come from boundary planes that
    // meet over the cap's interior; they are not vertices of the extension.
    let cap_faces: Vec<&Face> = c.face_ids().iter().map(|&f| &parent.faces()[f]).collect();
    let mut new_pts: Vec<Point3> = Vec::new();
    for q in &envelope {
        let eps = slack.at(q);
        let below_cap = cap_faces.iter().all(|f| f.signed_distance(q) <= eps);
        let known = cap_pts.iter().chain(new_pts.iter()).any(|p| p.distance(q) <= eps);
        if below_cap && !known {
            new_pts.push(*q);
        }
    }

    let points = [cap_pts.as_slice(), new_pts.as_slice()].concat();
    let hull = convex_hull_with(&points, tol)?;
    // The upper hull also spans gaps between the bounded faces where the
    // extension drops away along unbounded faces. Those hull faces lie in
    // no cap plane and are dropped. The others take the exact plane of
    // their cap face, since far-away new vertices make recomputed normals
    // inaccurate.
    let hull_faces = hull.polyhedron.faces();
    let hull_pts = hull.polyhedron.vertices();
    let up: Vec<(usize, usize)> = upward_faces(&hull.polyhedron)
        .into_iter()
        .filter_map(|f| {
            let face = &hull_faces[f];
            // Worst distance to the plane, relative to each vertex's slack.
            let gap = |cf: &Face| {
                face.vertices
                    .iter()
                    .map(|&v| cf.signed_distance(&hull_pts[v]).abs() / slack.at(&hull_pts[v]))
                    .fold(0.0, f64::max)
            };
            cap_faces
                .iter()
                .enumerate()
                .filter(|(_, cf)| cf.normal.dot(&face.normal) > 0.0)
                .map(|(ci, cf)| (gap(cf), ci))
                .filter(|(g, _)| *g <= 1.0)
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, ci)| (f, ci))
        })
        .collect();
    // Nearly coplanar points can split one cap plane over several hull
    // faces; those are glued back into one polygon.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(f, ci) in &up {
        groups.entry(ci).or_default().push(f);
    }
    let mut merged: Vec<(Vec<usize>, &Face)> = Vec::new();
    for (ci, fs) in groups {
        let cf = cap_faces[ci];
        let outline = if fs.len() == 1 {
            hull_faces[fs[0]].vertices.clone()
        } else {
            merge_outlines(fs.iter().map(|&f| hull_faces[f].vertices.as_slice()))?
        };
        merged.push((outline, cf));
    }
    merged.sort_by_key(|(o, _)| o.iter().copied().min());
    let mut used: Vec<usize> = merged.iter().flat_map(|(o, _)| o.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    let remap: BTreeMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let vertices: Vec<Point3> = used.iter().map(|&h| hull.polyhedron.vertices()[h]).collect();
    let origins: Vec<VertexOrigin> = used
        .iter()
        .map(|&h| {
            let src = hull.source[h];
            if src < cap_ids.len() {
                VertexOrigin::Cap(cap_ids[src])
            } else {
                VertexOrigin::New
            }
        })
        .collect();
    let faces: Vec<Face> = merged
        .iter()
        .map(|(o, cf)| Face {
            vertices: o.iter().map(|v| remap[v]).collect(),
            normal: cf.normal,
            offset: cf.offset,
        })
        .collect();
    let bounded = Surface::new(vertices, faces).map_err(|e| ExtendError::Invariant(e.to_string()))?;
    let fan = build_rays(&bounded, tol)?;

    Ok(Extension::Unbounded(UnboundedPolyhedron {
        bounded,
        origins,
        boundary: fan.boundary,
        rays: fan.rays,
        unbounded_faces: fan.unbounded_faces,
        boundary_planes: planes,
        envelope,
        tolerances: *tol,
        slack,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cap::{extract_cap, tests::pyramid, CapSpec};
    use crate::hull::{convex_hull, tests::cube, tests::random_ball};

    /// Every plane triple meeting in one point that lies below all other
    /// planes, deduplicated.
    pub(crate) fn brute_force_envelope(planes: &[Plane], eps: f64) -> Vec<Point3> {
        let mut out: Vec<Point3> = Vec::new();
        let n = planes.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    // Rows a·x + b·y − z = −c.
                    let rows = [planes[i], planes[j], planes[k]];
                    let m = |r: &Plane| [r.a, r.b, -1.0];
                    let det3 = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
                        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                            + a[2] * (b[0] * c[1] - b[1] * c[0])
                    };
                    let (r0, r1, r2) = (m(&rows[0]), m(&rows[1]), m(&rows[2]));
                    let det = det3(r0, r1, r2);
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let rhs = [-rows[0].c, -rows[1].c, -rows[2].c];
                    let col = |c: usize| {
                        let mut a = [r0, r1, r2];
                        for (r, row) in a.iter_mut().enumerate() {
                            row[c] = rhs[r];
                        }
                        det3(a[0], a[1], a[2]) / det
                    };
                    let p = Vec3::new(col(0), col(1), col(2));
                    if planes.iter().all(|pl| pl.height_above(&p) <= eps * (1.0 + p.norm()))
                        && !out.iter().any(|q| q.distance(&p) <= eps * (1.0 + p.norm()))
                    {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    fn extension(c: &Cap) -> UnboundedPolyhedron {
        match build_extension(c, &Tolerances::for_points(c.parent().vertices())).unwrap() {
            Extension::Unbounded(u) => u,
            Extension::Degenerate(d) => panic!("degenerate: {d:?}"),
        }
    }

    #[test]
    fn dual_maps() {
        let p = Plane::new(2.0, 3.0, 5.0);
        assert_eq!(dualize_plane(&p), Vec3::new(2.0, 3.0, -5.0));
        assert_eq!(dualize_point(&Vec3::new(2.0, 3.0, -5.0)), p);
        assert_eq!(dualize_plane(&Plane::new(0.0, 0.0, 1.0)), Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(dualize_point(&Vec3::new(0.0, 0.0, -1.0)), Plane::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn pyramid_planes_and_envelope() {
        let p = pyramid();
        let tol = Tolerances::default();
        let c = extract_cap(&p, CapSpec::from_degrees(90.0).unwrap(), &tol).unwrap();
        let planes = boundary_face_planes(&c, &tol).unwrap();
        assert_eq!(planes.len(), 4);
        for expected in [
            Plane::new(-1.0, 0.0, 1.0),
            Plane::new(1.0, 0.0, 1.0),
            Plane::new(0.0, -1.0, 1.0),
            Plane::new(0.0, 1.0, 1.0),
        ] {
            assert!(planes.iter().any(|q| q.approx_eq(&expected, 1e-12, 1e-12)), "missing {expected}");
        }
        let env = lower_envelope_vertices(&planes).unwrap();
        assert_eq!(env.len(), 1);
        assert!(env[0].distance(&Vec3::new(0.0, 0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn three_generic_planes_meet_once() {
        let planes = [Plane::new(-1.0, 0.0, 0.0), Plane::new(1.0, 0.0, -2.0), Plane::new(0.0, -1.0, 0.0)];
        let env = lower_envelope_vertices(&planes).unwrap();
        let oracle = brute_force_envelope(&planes, 1e-12);
        assert_eq!(oracle.len(), 1);
        assert!(oracle[0].distance(&Vec3::new(1.0, 1.0, -1.0)) < 1e-12);
        assert_eq!(env.len(), 1);
        assert!(env[0].distance(&oracle[0]) < 1e-12);
    }

    #[test]
    fn small_plane_sets_have_no_vertices() {
        assert!(lower_envelope_vertices(&[Plane::new(0.3, 0.1, 1.0)]).unwrap().is_empty());
        let two = [Plane::new(1.0, 0.0, 0.0), Plane::new(-1.0, 0.0, 0.0)];
        assert!(lower_envelope_vertices(&two).unwrap().is_empty());
        // Shared horizontal direction (0, 1, 0): slopes on the line b = 0.
        let prism = [Plane::new(1.0, 0.0, 0.0), Plane::new(-1.0, 0.0, 0.0), Plane::new(3.0, 0.0, -4.0)];
        assert!(lower_envelope_vertices(&prism).unwrap().is_empty());
    }

    #[test]
    fn envelope_matches_brute_force_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(3..=8);
            let planes: Vec<Plane> = (0..n)
                .map(|_| Plane::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let env = lower_envelope_vertices(&planes).unwrap();
            let oracle = brute_force_envelope(&planes, 1e-9);
            assert_eq!(env.len(), oracle.len(), "{planes:?}");
            for p in &env {
                assert!(oracle.iter().any(|q| q.distance(p) <= 1e-9 * (1.0 + p.norm())));
            }
        }
    }

    #[test]
    fn pyramid_extension() {
        let c = extract_cap(&pyramid(), CapSpec::from_degrees(90.0).unwrap(), &Tolerances::default()).unwrap();
        let u = extension(&c);
        assert!(u.check(&c).is_empty(), "{:?}", u.check(&c));
        assert!(u.new_vertices().is_empty());
        assert_eq!(u.bounded().faces().len(), 4);
        assert_eq!(u.rays().len(), 4);
        assert_eq!(u.unbounded_faces().len(), 4);
        let s = 1.0 / 3f64.sqrt();
        for r in u.rays() {
            let o = r.origin;
            let expected = Vec3::new(o.x.signum() * s, o.y.signum() * s, -s);
            assert!((r.direction - expected).norm() < 1e-12, "{} from {}", r.direction, o);
        }
        assert_eq!(u.rays().len(), u.boundary().len());
    }

    #[test]
    fn frustum_envelope_apex_above_cap_is_discarded() {
        // Top square at z = 1, slanted sides down to a wider base at z = 0,
        // vertical walls below. The four side planes meet at (0, 0, 2).
        let mut pts = Vec::new();
        for &(x, y) in &[(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            pts.push(Vec3::new(0.5 * x, 0.5 * y, 1.0));
            pts.push(Vec3::new(x, y, 0.0));
            pts.push(Vec3::new(x, y, -1.0));
        }
        let p = convex_hull(&pts).unwrap();
        let tol = Tolerances::for_points(p.vertices());
        let c = extract_cap(&p, CapSpec::from_degrees(90.0).unwrap(), &tol).unwrap();
        assert_eq!(c.face_ids().len(), 5);
        assert_eq!(c.boundary_faces().len(), 4);
        let u = extension(&c);
        assert_eq!(u.envelope_points().len(), 1);
        assert!(u.envelope_points()[0].distance(&Vec3::new(0.0, 0.0, 2.0)) < 1e-12);
        assert!(u.new_vertices().is_empty());
        assert_eq!(u.bounded().faces().len(), 5);
        assert_eq!(u.rays().len(), 4);
        assert!(u.check(&c).is_empty(), "{:?}", u.check(&c));
        let d = Vec3::new(1.0, 1.0, -2.0) / 6f64.sqrt();
        let r = u.rays().iter().find(|r| r.origin.x > 0.0 && r.origin.y > 0.0).unwrap();
        assert!((r.direction - d).norm() < 1e-12);
    }

    #[test]
    fn cube_top_is_a_half_space() {
        let p = convex_hull(&cube()).unwrap();
        let tol = Tolerances::default();
        let c = extract_cap(&p, CapSpec::from_degrees(90.0).unwrap(), &tol).unwrap();
        match build_extension(&c, &tol).unwrap() {
            Extension::Degenerate(d) => {
                assert_eq!(d.kind, DegenerateKind::HalfSpace);
                assert!(d.planes[0].approx_eq(&Plane::new(0.0, 0.0, 1.0), 1e-15, 1e-15));
            }
            Extension::Unbounded(_) => panic!("cube top cap has no rays"),
        }
    }

    #[test]
    fn random_extensions_satisfy_invariants() {
        let mut strict = 0;
        let mut total = 0;
        for seed in 0..60 {
            let p = convex_hull(&random_ball(50, seed)).unwrap();
            let tol = Tolerances::for_points(p.vertices());
            for d in [60.0, 90.0] {
                let Ok(c) = extract_cap(&p, CapSpec::from_degrees(d).unwrap(), &tol) else { continue };
                let Extension::Unbounded(u) = build_extension(&c, &tol).unwrap() else { continue };
                let problems = u.check(&c);
                assert!(problems.is_empty(), "seed {seed} φ {d}: {problems:?}");
                total += 1;
                if u.unbounded_faces().len() < c.boundary_faces().len() {
                    strict += 1;
                }
                // Every new vertex sits on at least three boundary planes.
                for v in u.new_vertices() {
                    let q = u.bounded().vertices()[v];
                    let touching = u
                        .boundary_planes()
                        .iter()
                        .filter(|pl| pl.signed_distance(&q).abs() <= 1e-7)
                        .count();
                    assert!(touching >= 3, "seed {seed}: new vertex on {touching} planes");
                }
            }
        }
        assert!(total > 60);
        assert!(strict > 0);
    }

    #[test]
    fn re_extension_reproduces_rays() {
        // Truncate the extension far down its rays; whenever the cap of the
        // truncated body is the extension's faces again, extending it must
        // give the same rays.
        let mut compared = 0;
        for seed in 0..30 {
            let p = convex_hull(&random_ball(40, 100 + seed)).unwrap();
            let tol = Tolerances::for_points(p.vertices());
            let spec = CapSpec::from_degrees(80.0).unwrap();
            let Ok(c) = extract_cap(&p, spec, &tol) else { continue };
            let Extension::Unbounded(u) = build_extension(&c, &tol).unwrap() else { continue };
            let mut pts = u.bounded().vertices().to_vec();
            pts.extend(u.rays().iter().map(|r| r.origin + r.direction * 10.0));
            let closed = convex_hull(&pts).unwrap();
            let tol2 = Tolerances::for_points(closed.vertices());
            let Ok(c2) = extract_cap(&closed, spec, &tol2) else { continue };
            if c2.face_ids().len() != u.bounded().faces().len() {
                continue;
            }
            let Extension::Unbounded(u2) = build_extension(&c2, &tol2).unwrap() else { panic!("degenerate") };
            assert!(u2.check(&c2).is_empty());
            assert_eq!(u.rays().len(), u2.rays().len());
            for r in u.rays() {
                assert!(u2.rays().iter().any(|r2| (r2.direction - r.direction).norm() < 1e-9));
            }
            compared += 1;
        }
        assert!(compared >= 5, "only {compared} comparable instances");
    }
}
