//! Three-dimensional convex hulls with merged polygonal faces.
//!
//! Randomized incremental insertion: each new point removes the triangles it
//! can see and is joined to the horizon. Coplanar triangles are merged at the
//! end so that every face of the result lies in its own plane.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{GeomError, Point3, Tolerances, Vec3};
use crate::mesh::{Edge, Face, MeshError, Surface};

/// Seed for the insertion order. Fixed so hulls are reproducible.
pub const INSERTION_SEED: u64 = 0x6875_6c6c_3364;

/// Faces with an outward normal z-component above this count as upward.
pub const UPWARD_NZ: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("need at least four points, got {0}")]
    TooFewPoints(usize),
    #[error("points are coplanar or collinear; the hull is not three-dimensional")]
    DegenerateHull,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("hull construction lost consistency: {0}")]
    Inconsistent(String),
    #[error("not a closed convex polyhedron: {0}")]
    Invalid(String),
}

/// Closed convex polyhedron with planar, convex, pairwise non-coplanar
/// neighbouring faces.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    surface: Surface,
}

impl PartialEq for Polyhedron {
    /// Structural equality: same vertex coordinates and face index lists.
    fn eq(&self, other: &Self) -> bool {
        self.vertices() == other.vertices()
            && self.faces().len() == other.faces().len()
            && self.faces().iter().zip(other.faces()).all(|(a, b)| a.vertices == b.vertices)
    }
}

impl Polyhedron {
    /// Validates an explicit vertex/face description.
    pub fn from_faces(vertices: Vec<Point3>, outlines: Vec<Vec<usize>>, tol: &Tolerances) -> Result<Self, HullError> {
        if !vertices.iter().all(Vec3::is_finite) {
            return Err(GeomError::NonFinite.into());
        }
        let surface = Surface::from_outlines(vertices, outlines)?;
        let p = Polyhedron { surface };
        p.validate(tol)?;
        Ok(p)
    }

    fn validate(&self, tol: &Tolerances) -> Result<(), HullError> {
        let s = &self.surface;
        if let Some(&(a, b)) = s.boundary_half_edges().first() {
            return Err(HullError::Invalid(format!("edge ({a}, {b}) has only one incident face")));
        }
        if s.used_vertices().len() != s.vertices().len() {
            return Err(HullError::Invalid("unreferenced vertex".into()));
        }
        let chi = s.euler_characteristic();
        if chi != 2 {
            return Err(HullError::Invalid(format!("Euler characteristic {chi}, expected 2")));
        }
        let pts = s.vertices();
        for (fi, f) in s.faces().iter().enumerate() {
            for &v in &f.vertices {
                if f.signed_distance(&pts[v]).abs() > tol.eps_geom {
                    return Err(HullError::Invalid(format!("face {fi} is not planar")));
                }
            }
            let k = f.len();
            for i in 0..k {
                let a = pts[f.vertices[i]];
                let b = pts[f.vertices[(i + 1) % k]];
                let c = pts[f.vertices[(i + 2) % k]];
                let turn = (b - a).cross(&(c - b)).dot(&f.normal);
                if turn <= 0.0 && point_line_distance(&b, &a, &c) > tol.eps_geom {
                    return Err(HullError::Invalid(format!("face {fi} is not convex")));
                }
            }
            for (vi, p) in pts.iter().enumerate() {
                if f.signed_distance(p) > tol.eps_geom {
                    return Err(HullError::Invalid(format!("vertex {vi} lies outside face {fi}")));
                }
            }
        }
        for (&(a, b), faces) in &s.edges() {
            let (f, g) = (&s.faces()[faces[0]], &s.faces()[faces[1]]);
            let coplanar = g.vertices.iter().all(|&v| f.signed_distance(&pts[v]).abs() <= tol.eps_geom)
                && f.vertices.iter().all(|&v| g.signed_distance(&pts[v]).abs() <= tol.eps_geom);
            if coplanar {
                return Err(HullError::Invalid(format!("faces across edge ({a}, {b}) are coplanar")));
            }
        }
        Ok(())
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn vertices(&self) -> &[Point3] {
        self.surface.vertices()
    }

    pub fn faces(&self) -> &[Face] {
        self.surface.faces()
    }

    pub fn edge_count(&self) -> usize {
        self.surface.half_edges().len() / 2
    }

    /// Undirected edge → its two incident faces.
    pub fn edge_faces(&self) -> std::collections::BTreeMap<Edge, [usize; 2]> {
        self.surface
            .edges()
            .into_iter()
            .map(|(e, f)| (e, [f[0], f[1]]))
            .collect()
    }

    /// Enclosed volume by the divergence theorem.
    pub fn volume(&self) -> f64 {
        let pts = self.vertices();
        self.faces()
            .iter()
            .map(|f| {
                let o = pts[f.vertices[0]];
                let area2: f64 = (1..f.len() - 1)
                    .map(|i| (pts[f.vertices[i]] - o).cross(&(pts[f.vertices[i + 1]] - o)).dot(&f.normal))
                    .sum();
                area2 * 0.5 * f.offset / 3.0
            })
            .sum()
    }

    /// Applies a map to every vertex and rebuilds face planes. The map must
    /// be a similarity that preserves orientation.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Polyhedron {
        let pts: Vec<Point3> = self.vertices().iter().map(|p| f(*p)).collect();
        let outlines = self.faces().iter().map(|f| f.vertices.clone()).collect();
        let surface = Surface::from_outlines(pts, outlines).expect("similarity keeps faces valid");
        Polyhedron { surface }
    }
}

/// Hull plus the input index of every hull vertex.
#[derive(Debug, Clone)]
pub struct Hull {
    pub polyhedron: Polyhedron,
    /// `source[i]` is the index into the input slice of hull vertex `i`.
    /// Increasing, so hull vertices keep their input order.
    pub source: Vec<usize>,
}

/// Convex hull with tolerances scaled to the input's bounding box.
pub fn convex_hull(points: &[Point3]) -> Result<Polyhedron, HullError> {
    Ok(convex_hull_with(points, &Tolerances::for_points(points))?.polyhedron)
}

/// Faces whose outward normal points up (positive z).
pub fn upward_faces(p: &Polyhedron) -> Vec<usize> {
    (0..p.faces().len()).filter(|&f| p.faces()[f].normal.z > UPWARD_NZ).collect()
}

/// Faces whose outward normal points down (negative z).
pub fn downward_faces(p: &Polyhedron) -> Vec<usize> {
    (0..p.faces().len()).filter(|&f| p.faces()[f].normal.z < -UPWARD_NZ).collect()
}

fn point_line_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let d = *b - *a;
    match d.normalized() {
        Some(u) => u.cross(&(*p - *a)).norm(),
        None => p.distance(a),
    }
}

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    n: Vec3,
    d: f64,
    alive: bool,
}

impl Tri {
    fn new(pts: &[Point3], a: usize, b: usize, c: usize) -> Tri {
        let n = (pts[b] - pts[a]).cross(&(pts[c] - pts[a])).normalized().unwrap_or(Vec3::ZERO);
        Tri { v: [a, b, c], d: n.dot(&pts[a]), n, alive: true }
    }

    fn dist(&self, p: &Point3) -> f64 {
        self.n.dot(p) - self.d
    }

    fn edges(&self) -> [Edge; 3] {
        [(self.v[0], self.v[1]), (self.v[1], self.v[2]), (self.v[2], self.v[0])]
    }
}

struct Builder<'a> {
    pts: &'a [Point3],
    tris: Vec<Tri>,
    edge_tri: HashMap<Edge, usize>,
    eps: f64,
}

impl<'a> Builder<'a> {
    fn add_tri(&mut self, a: usize, b: usize, c: usize) -> Result<(), HullError> {
        let t = Tri::new(self.pts, a, b, c);
        let id = self.tris.len();
        for e in t.edges() {
            if self.edge_tri.insert(e, id).is_some() {
                return Err(HullError::Inconsistent(format!("directed edge {e:?} inserted twice")));
            }
        }
        self.tris.push(t);
        Ok(())
    }

    fn insert(&mut self, p: usize) -> Result<(), HullError> {
        let q = self.pts[p];
        // Visible faces connected to the one farthest below `q`, so that
        // rounding cannot split the region into pieces.
        let dist: Vec<f64> = self.tris.iter().map(|t| if t.alive { t.dist(&q) } else { f64::NEG_INFINITY }).collect();
        let Some(seed) = (0..dist.len()).filter(|&i| dist[i] > self.eps).max_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            return Ok(());
        };
        let mut visible = vec![false; self.tris.len()];
        visible[seed] = true;
        let mut stack = vec![seed];
        while let Some(ti) = stack.pop() {
            for (a, b) in self.tris[ti].edges() {
                if let Some(&twin) = self.edge_tri.get(&(b, a)) {
                    if !visible[twin] && dist[twin] > self.eps {
                        visible[twin] = true;
                        stack.push(twin);
                    }
                }
            }
        }
        let mut horizon = Vec::new();
        for (ti, t) in self.tris.iter().enumerate() {
            if !visible[ti] {
                continue;
            }
            for (a, b) in t.edges() {
                let twin = *self
                    .edge_tri
                    .get(&(b, a))
                    .ok_or_else(|| HullError::Inconsistent(format!("edge ({b}, {a}) has no twin")))?;
                if !visible[twin] {
                    horizon.push((a, b));
                }
            }
        }
        for ti in 0..self.tris.len() {
            if visible[ti] {
                self.tris[ti].alive = false;
                for e in self.tris[ti].edges() {
                    self.edge_tri.remove(&e);
                }
            }
        }
        for (a, b) in horizon {
            self.add_tri(a, b, p)?;
        }
        Ok(())
    }
}

/// Initial tetrahedron: extreme point in x, farthest from it, farthest from
/// that line, farthest from that plane.
fn initial_simplex(pts: &[Point3], eps: f64) -> Result<[usize; 4], HullError> {
    let argmax = |f: &dyn Fn(&Point3) -> f64| -> usize {
        let mut best = 0;
        for i in 1..pts.len() {
            if f(&pts[i]) > f(&pts[best]) {
                best = i;
            }
        }
        best
    };
    let i0 = argmax(&|p: &Point3| -p.x);
    let i1 = argmax(&|p: &Point3| p.distance(&pts[i0]));
    if pts[i1].distance(&pts[i0]) <= eps {
        return Err(HullError::DegenerateHull);
    }
    let i2 = argmax(&|p: &Point3| point_line_distance(p, &pts[i0], &pts[i1]));
    if point_line_distance(&pts[i2], &pts[i0], &pts[i1]) <= eps {
        return Err(HullError::DegenerateHull);
    }
    let n = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0])).normalized().ok_or(HullError::DegenerateHull)?;
    let i3 = argmax(&|p: &Point3| n.dot(&(*p - pts[i0])).abs());
    if n.dot(&(pts[i3] - pts[i0])).abs() <= eps {
        return Err(HullError::DegenerateHull);
    }
    Ok([i0, i1, i2, i3])
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Convex hull with explicit tolerances, reporting where each vertex came
/// from.
pub fn convex_hull_with(points: &[Point3], tol: &Tolerances) -> Result<Hull, HullError> {
    if points.len() < 4 {
        return Err(HullError::TooFewPoints(points.len()));
    }
    if !points.iter().all(Vec3::is_finite) {
        return Err(GeomError::NonFinite.into());
    }
    let eps = tol.eps_geom;
    let simplex = initial_simplex(points, eps)?;
    let mut b = Builder { pts: points, tris: Vec::new(), edge_tri: HashMap::new(), eps };

    let [i0, i1, i2, i3] = simplex;
    let above = (points[i1] - points[i0]).cross(&(points[i2] - points[i0])).dot(&(points[i3] - points[i0])) > 0.0;
    let (i1, i2) = if above { (i2, i1) } else { (i1, i2) };
    // Base (i0, i1, i2) now faces away from i3.
    b.add_tri(i0, i1, i2)?;
    b.add_tri(i0, i3, i1)?;
    b.add_tri(i1, i3, i2)?;
    b.add_tri(i2, i3, i0)?;

    let mut order: Vec<usize> = (0..points.len()).filter(|i| !simplex.contains(i)).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(INSERTION_SEED));
    for p in order {
        b.insert(p)?;
    }
    merge_faces(points, &b.tris, &b.edge_tri, tol)
}

fn merge_faces(points: &[Point3], tris: &[Tri], edge_tri: &HashMap<Edge, usize>, tol: &Tolerances) -> Result<Hull, HullError> {
    let eps = tol.eps_geom;
    let mut uf = UnionFind((0..tris.len()).collect());
    for (ti, t) in tris.iter().enumerate() {
        if !t.alive {
            continue;
        }
        for (a, bv) in t.edges() {
            let ui = edge_tri[&(bv, a)];
            let u = &tris[ui];
            let t_far = t.v.iter().find(|&&v| v != a && v != bv).copied().expect("triangle");
            let u_far = u.v.iter().find(|&&v| v != a && v != bv).copied().expect("triangle");
            if t.dist(&points[u_far]).abs() <= eps && u.dist(&points[t_far]).abs() <= eps {
                uf.union(ti, ui);
            }
        }
    }

    // Border of each group: directed edges whose twin lies in another group.
    let mut groups: std::collections::BTreeMap<usize, HashMap<usize, usize>> = Default::default();
    for (ti, t) in tris.iter().enumerate() {
        if !t.alive {
            continue;
        }
        let g = uf.find(ti);
        let next = groups.entry(g).or_default();
        for (a, bv) in t.edges() {
            let ui = edge_tri[&(bv, a)];
            if uf.find(ui) != g && next.insert(a, bv).is_some() {
                return Err(HullError::Inconsistent(format!("face group {g} is not a disk at vertex {a}")));
            }
        }
    }

    let mut groups_at: HashMap<usize, std::collections::BTreeSet<usize>> = HashMap::new();
    for (ti, t) in tris.iter().enumerate() {
        if t.alive {
            let g = uf.find(ti);
            for &v in &t.v {
                groups_at.entry(v).or_default().insert(g);
            }
        }
    }

    let mut outlines = Vec::with_capacity(groups.len());
    for (g, next) in groups {
        let start = *next.keys().min().expect("group has a border");
        let mut outline = vec![start];
        let mut cur = next[&start];
        while cur != start {
            if outline.len() > next.len() {
                return Err(HullError::Inconsistent(format!("face group {g} border does not close")));
            }
            outline.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| HullError::Inconsistent(format!("face group {g} border is open")))?;
        }
        if outline.len() != next.len() {
            return Err(HullError::Inconsistent(format!("face group {g} has several border loops")));
        }
        drop_collinear(points, &mut outline, eps, |v| groups_at[&v].len() == 2);
        if outline.len() < 3 {
            return Err(HullError::Inconsistent(format!("face group {g} collapsed")));
        }
        outlines.push(outline);
    }

    let mut used: Vec<usize> = outlines.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut remap = vec![usize::MAX; points.len()];
    for (new, &old) in used.iter().enumerate() {
        remap[old] = new;
    }
    let vertices: Vec<Point3> = used.iter().map(|&i| points[i]).collect();
    let mut faces = Vec::with_capacity(outlines.len());
    for outline in outlines {
        let local: Vec<usize> = outline.iter().map(|&v| remap[v]).collect();
        let mut f = Face::from_outline(local, &vertices)
            .ok_or_else(|| HullError::Inconsistent("zero-area merged face".into()))?;
        f.canonicalize();
        faces.push(f);
    }
    faces.sort_by(|a, b| a.vertices.cmp(&b.vertices));

    let surface = Surface::new(vertices, faces).map_err(|e| HullError::Inconsistent(e.to_string()))?;
    if !surface.boundary_half_edges().is_empty() {
        return Err(HullError::Inconsistent("hull surface is not closed".into()));
    }
    if surface.euler_characteristic() != 2 {
        return Err(HullError::Inconsistent("hull surface is not a sphere".into()));
    }
    Ok(Hull { polyhedron: Polyhedron { surface }, source: used })
}

/// Removes outline vertices lying within `eps` of the segment joining their
/// neighbours. Only vertices accepted by `droppable` (those on a single
/// edge between two faces) are removed, so both faces drop them alike.
fn drop_collinear(points: &[Point3], outline: &mut Vec<usize>, eps: f64, droppable: impl Fn(usize) -> bool) {
    let mut i = 0;
    let mut stable = 0;
    while outline.len() > 3 && stable < outline.len() {
        let k = outline.len();
        let (a, p, c) = (outline[(i + k - 1) % k], outline[i % k], outline[(i + 1) % k]);
        if droppable(p) && point_line_distance(&points[p], &points[a], &points[c]) <= eps {
            outline.remove(i % k);
            stable = 0;
        } else {
            stable += 1;
            i += 1;
        }
        if !outline.is_empty() {
            i %= outline.len();
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;

    pub(crate) fn cube() -> Vec<Point3> {
        let mut pts = Vec::new();
        for &x in &[-1.0, 1.0] {
            for &y in &[-1.0, 1.0] {
                for &z in &[-1.0, 1.0] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        pts
    }

    pub(crate) fn random_ball(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        while pts.len() < n {
            let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p.norm() <= 1.0 {
                pts.push(p);
            }
        }
        pts
    }

    /// Supporting planes found by trying every point triple: a triple is a
    /// facet candidate when every point lies on one side of its plane.
    /// Returned as (unit outward normal, offset), deduplicated.
    pub(crate) fn brute_force_facets(pts: &[Point3], eps: f64) -> Vec<(Vec3, f64)> {
        let mut out: Vec<(Vec3, f64)> = Vec::new();
        let n = pts.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let Some(nrm) = (pts[j] - pts[i]).cross(&(pts[k] - pts[i])).normalized() else {
                        continue;
                    };
                    let d = nrm.dot(&pts[i]);
                    let (mut above, mut below) = (false, false);
                    for p in pts {
                        let s = nrm.dot(p) - d;
                        above |= s > eps;
                        below |= s < -eps;
                    }
                    let cand = match (above, below) {
                        (false, true) => (nrm, d),
                        (true, false) => (-nrm, -d),
                        _ => continue,
                    };
                    if !out.iter().any(|(m, e)| (*m - cand.0).norm() < 1e-7 && (e - cand.1).abs() < 1e-7) {
                        out.push(cand);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn cube_hull() {
        let p = convex_hull(&cube()).unwrap();
        assert_eq!(p.vertices().len(), 8);
        assert_eq!(p.faces().len(), 6);
        assert_eq!(p.edge_count(), 12);
        assert!(p.faces().iter().all(|f| f.len() == 4));
        assert!((p.volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn interior_point_is_absorbed() {
        let mut pts = cube();
        pts.push(Vec3::ZERO);
        pts.push(Vec3::new(1.0, 0.0, 0.0)); // centre of a face
        pts.push(Vec3::new(1.0, 1.0, 0.0)); // midpoint of an edge
        let hull = convex_hull_with(&pts, &Tolerances::for_points(&pts)).unwrap();
        assert_eq!(hull.polyhedron, convex_hull(&cube()).unwrap());
        assert_eq!(hull.source, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn coplanar_and_collinear_inputs_fail() {
        let flat: Vec<Point3> = (0..6).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert_eq!(convex_hull(&flat).unwrap_err(), HullError::DegenerateHull);
        let line: Vec<Point3> = (0..6).map(|i| Vec3::new(i as f64, i as f64, i as f64)).collect();
        assert_eq!(convex_hull(&line).unwrap_err(), HullError::DegenerateHull);
        assert_eq!(convex_hull(&line[..3]).unwrap_err(), HullError::TooFewPoints(3));
    }

    #[test]
    fn random_hull_matches_brute_force() {
        for seed in 0..20 {
            let pts = random_ball(20, seed);
            let tol = Tolerances::for_points(&pts);
            let p = convex_hull(&pts).unwrap();
            let oracle = brute_force_facets(&pts, tol.eps_geom);
            assert_eq!(p.faces().len(), oracle.len(), "seed {seed}");
            for f in p.faces() {
                assert!(
                    oracle.iter().any(|(n, d)| (*n - f.normal).norm() < 1e-7 && (d - f.offset).abs() < 1e-7),
                    "seed {seed}: face not in oracle"
                );
            }
        }
    }

    #[test]
    fn upward_faces_of_cube_and_tetrahedron() {
        let p = convex_hull(&cube()).unwrap();
        let up = upward_faces(&p);
        assert_eq!(up.len(), 1);
        assert_eq!(p.faces()[up[0]].normal, Vec3::Z);
        assert_eq!(downward_faces(&p).len(), 1);

        // Regular tetrahedron resting on a horizontal face.
        let h = (2.0f64 / 3.0).sqrt();
        let r = 1.0 / 3f64.sqrt();
        let tet = vec![
            Vec3::new(r, 0.0, 0.0),
            Vec3::new(-r / 2.0, 0.5, 0.0),
            Vec3::new(-r / 2.0, -0.5, 0.0),
            Vec3::new(0.0, 0.0, h),
        ];
        let p = convex_hull(&tet).unwrap();
        assert_eq!(upward_faces(&p).len(), 3);
        let down = downward_faces(&p);
        assert_eq!(down.len(), 1);
        assert!((p.faces()[down[0]].normal.z + 1.0).abs() < 1e-15);
    }

    #[test]
    fn from_faces_validation() {
        let tol = Tolerances::default();
        let p = convex_hull(&cube()).unwrap();
        let outlines: Vec<Vec<usize>> = p.faces().iter().map(|f| f.vertices.clone()).collect();
        let q = Polyhedron::from_faces(p.vertices().to_vec(), outlines.clone(), &tol).unwrap();
        assert_eq!(p, q);

        let mut open = outlines.clone();
        open.pop();
        assert!(matches!(Polyhedron::from_faces(p.vertices().to_vec(), open, &tol), Err(HullError::Invalid(_))));

        // Push one corner inwards: the faces through it stop being planar.
        let mut dented = p.vertices().to_vec();
        dented[0] = dented[0] * 0.5;
        assert!(matches!(Polyhedron::from_faces(dented, outlines, &tol), Err(HullError::Invalid(_))));
    }
}
