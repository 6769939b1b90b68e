//! Indexed polygon surfaces with half-edge lookup.
//!
//! [`Surface`] is shared by the closed hulls, the extracted cap complex and
//! the bounded part of an extension. Faces are counterclockwise when seen
//! from outside, so every directed edge belongs to at most one face.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{angle_between, Plane, Point3, Tolerances, Vec3, GeomError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {face} references vertex {vertex} out of range")]
    IndexOutOfRange { face: usize, vertex: usize },
    #[error("face {0} has fewer than three distinct vertices")]
    DegenerateFace(usize),
    #[error("directed edge ({0}, {1}) is used by more than one face")]
    DuplicateHalfEdge(usize, usize),
    #[error("vertex {0} is a boundary vertex; its face fan is incomplete")]
    BoundaryVertex(usize),
    #[error("vertex {0} has a non-manifold neighbourhood")]
    NonManifoldVertex(usize),
    #[error("face {0} has a zero-area outline")]
    ZeroAreaFace(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BorderError {
    #[error("surface has no border")]
    NoBorder,
    #[error("vertex {0} starts two border edges")]
    Branching(usize),
    #[error("border is open at vertex {0}")]
    Open(usize),
    #[error("border splits into several cycles ({reached} of {total} edges reached)")]
    SeveralCycles { reached: usize, total: usize },
}

pub type Edge = (usize, usize);

/// Undirected edge key with the smaller index first.
#[inline]
pub fn edge_key(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    /// Vertex indices, counterclockwise seen from outside.
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec3,
    /// Plane offset: `normal · p = offset` for points on the face.
    pub offset: f64,
}

impl Face {
    /// Builds a face with its Newell normal; `None` for a zero-area outline.
    pub fn from_outline(vertices: Vec<usize>, points: &[Point3]) -> Option<Face> {
        let k = vertices.len();
        let mut n = Vec3::ZERO;
        let mut centroid = Vec3::ZERO;
        for i in 0..k {
            let p = points[vertices[i]];
            let q = points[vertices[(i + 1) % k]];
            n += Vec3::new(
                (p.y - q.y) * (p.z + q.z),
                (p.z - q.z) * (p.x + q.x),
                (p.x - q.x) * (p.y + q.y),
            );
            centroid += p;
        }
        let normal = n.normalized()?;
        let centroid = centroid / k as f64;
        Some(Face { offset: normal.dot(&centroid), normal, vertices })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }

    fn position(&self, v: usize) -> Option<usize> {
        self.vertices.iter().position(|&x| x == v)
    }

    pub fn next(&self, v: usize) -> Option<usize> {
        self.position(v).map(|i| self.vertices[(i + 1) % self.len()])
    }

    pub fn prev(&self, v: usize) -> Option<usize> {
        self.position(v).map(|i| self.vertices[(i + self.len() - 1) % self.len()])
    }

    /// Directed edges in face order.
    pub fn half_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let k = self.len();
        (0..k).map(move |i| (self.vertices[i], self.vertices[(i + 1) % k]))
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn plane(&self, tol: &Tolerances) -> Result<Plane, GeomError> {
        Plane::from_normal_offset(self.normal, self.offset, tol)
    }

    /// Interior angle of the face at vertex `v`.
    pub fn corner_angle(&self, points: &[Point3], v: usize) -> Option<f64> {
        let prev = points[self.prev(v)?];
        let next = points[self.next(v)?];
        let p = points[v];
        Some(angle_between(&(prev - p), &(next - p)))
    }

    /// Rotates the index list so that the smallest index comes first.
    pub fn canonicalize(&mut self) {
        if let Some(pos) = self.vertices.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i) {
            self.vertices.rotate_left(pos);
        }
    }
}

/// Faces incident to one vertex, ordered by rotation about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Fan {
    pub faces: Vec<usize>,
    /// True when the faces close up around the vertex.
    pub closed: bool,
}

/// Polygonal surface, closed or with boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    vertices: Vec<Point3>,
    faces: Vec<Face>,
    half_edges: BTreeMap<Edge, usize>,
}

impl Surface {
    pub fn new(vertices: Vec<Point3>, faces: Vec<Face>) -> Result<Self, MeshError> {
        let mut half_edges = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&v) = f.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange { face: fi, vertex: v });
            }
            let mut distinct = f.vertices.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 3 || distinct.len() != f.len() {
                return Err(MeshError::DegenerateFace(fi));
            }
            for e in f.half_edges() {
                if half_edges.insert(e, fi).is_some() {
                    return Err(MeshError::DuplicateHalfEdge(e.0, e.1));
                }
            }
        }
        Ok(Self { vertices, faces, half_edges })
    }

    /// Builds faces from bare outlines, computing normals from geometry.
    pub fn from_outlines(vertices: Vec<Point3>, outlines: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        let mut faces = Vec::with_capacity(outlines.len());
        for (fi, o) in outlines.into_iter().enumerate() {
            if let Some(&v) = o.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange { face: fi, vertex: v });
            }
            if o.len() < 3 {
                return Err(MeshError::DegenerateFace(fi));
            }
            faces.push(Face::from_outline(o, &vertices).ok_or(MeshError::ZeroAreaFace(fi))?);
        }
        Self::new(vertices, faces)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face owning the directed edge `a → b`.
    pub fn half_edge_face(&self, a: usize, b: usize) -> Option<usize> {
        self.half_edges.get(&(a, b)).copied()
    }

    pub fn half_edges(&self) -> &BTreeMap<Edge, usize> {
        &self.half_edges
    }

    /// Undirected edges with their one or two incident faces.
    pub fn edges(&self) -> BTreeMap<Edge, Vec<usize>> {
        let mut out: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        for (&(a, b), &f) in &self.half_edges {
            out.entry(edge_key(a, b)).or_default().push(f);
        }
        out
    }

    /// Directed edges whose reverse is not present, i.e. the surface border
    /// traversed with the faces on the left.
    pub fn boundary_half_edges(&self) -> Vec<Edge> {
        self.half_edges
            .keys()
            .filter(|&&(a, b)| !self.half_edges.contains_key(&(b, a)))
            .copied()
            .collect()
    }

    /// The border as one cycle of vertices, faces on the left, starting at
    /// the lowest vertex index.
    pub fn border_cycle(&self) -> Result<Vec<usize>, BorderError> {
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for (a, b) in self.boundary_half_edges() {
            if next.insert(a, b).is_some() {
                return Err(BorderError::Branching(a));
            }
        }
        let Some(&start) = next.keys().next() else {
            return Err(BorderError::NoBorder);
        };
        let mut cycle = vec![start];
        let mut cur = next[&start];
        while cur != start {
            if cycle.len() > next.len() {
                return Err(BorderError::SeveralCycles { reached: cycle.len(), total: next.len() });
            }
            cycle.push(cur);
            cur = *next.get(&cur).ok_or(BorderError::Open(cur))?;
        }
        if cycle.len() != next.len() {
            return Err(BorderError::SeveralCycles { reached: cycle.len(), total: next.len() });
        }
        Ok(cycle)
    }

    /// Vertices referenced by at least one face, ascending.
    pub fn used_vertices(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.faces.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub fn faces_around(&self, v: usize) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].contains(v)).collect()
    }

    /// Faces around `v` in rotational order. For an open fan the first face
    /// is the one whose incoming edge at `v` lies on the border.
    pub fn fan(&self, v: usize) -> Result<Fan, MeshError> {
        let incident = self.faces_around(v);
        let Some(&first) = incident.first() else {
            return Ok(Fan { faces: Vec::new(), closed: false });
        };
        // Walk backwards to the border (or all the way round).
        let mut start = first;
        let mut closed = false;
        for _ in 0..=incident.len() {
            let prev = self.faces[start].prev(v).expect("incident");
            match self.half_edge_face(v, prev) {
                Some(g) if g == first => {
                    closed = true;
                    start = first;
                    break;
                }
                Some(g) => start = g,
                None => break,
            }
        }
        let mut faces = vec![start];
        let mut cur = start;
        loop {
            let next = self.faces[cur].next(v).expect("incident");
            match self.half_edge_face(next, v) {
                Some(g) if g == start => break,
                Some(g) => {
                    if faces.len() > incident.len() {
                        return Err(MeshError::NonManifoldVertex(v));
                    }
                    faces.push(g);
                    cur = g;
                }
                None => break,
            }
        }
        if faces.len() != incident.len() {
            return Err(MeshError::NonManifoldVertex(v));
        }
        Ok(Fan { faces, closed })
    }

    pub fn corner_angle(&self, face: usize, v: usize) -> Option<f64> {
        self.faces[face].corner_angle(&self.vertices, v)
    }

    /// Angle defect `2π − Σ corner angles` at an interior vertex.
    pub fn vertex_curvature(&self, v: usize) -> Result<f64, MeshError> {
        let fan = self.fan(v)?;
        if !fan.closed {
            return Err(MeshError::BoundaryVertex(v));
        }
        let sum: f64 = fan.faces.iter().map(|&f| self.corner_angle(f, v).expect("fan face")).sum();
        Ok(TAU - sum)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.used_vertices().len() as i64;
        let e = self.edges().len() as i64;
        v - e + self.faces.len() as i64
    }
}
