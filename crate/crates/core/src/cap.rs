//! Jagged convex caps.
//!
//! A cap of angle φ is the set of faces whose outward normal makes an angle
//! strictly below φ with +z. Its border is expected to be one simple cycle;
//! that is checked on every extraction rather than assumed.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use thiserror::Error;

use crate::geom::{normal_angle_to_z, Tolerances};
use crate::hull::Polyhedron;
use crate::mesh::{edge_key, BorderError, Surface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapError {
    #[error("cap angle {0} rad is outside (0, π/2]")]
    InvalidPhi(f64),
    #[error("no face has a normal strictly within the cap angle")]
    EmptyCap,
    #[error("every face is in the cap, so it has no boundary")]
    NoBoundary,
    #[error("cap boundary is not a single simple cycle: {0}")]
    LemmaViolation(String),
}

/// Cap angle φ in radians, `0 < φ ≤ π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapSpec {
    phi: f64,
}

impl CapSpec {
    pub fn new(phi: f64) -> Result<Self, CapError> {
        // Accept π/2 given in degrees and converted back.
        if phi.is_finite() && phi > 0.0 && phi <= FRAC_PI_2 + 1e-15 {
            Ok(Self { phi: phi.min(FRAC_PI_2) })
        } else {
            Err(CapError::InvalidPhi(phi))
        }
    }

    pub fn from_degrees(deg: f64) -> Result<Self, CapError> {
        Self::new(deg.to_radians())
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn phi_degrees(&self) -> f64 {
        self.phi.to_degrees()
    }

    /// Strict test `angle < φ`, with faces within `eps_angle` of φ left out.
    pub fn admits(&self, angle: f64, tol: &Tolerances) -> bool {
        angle < self.phi - tol.eps_angle
    }
}

#[derive(Debug, Clone)]
pub struct Cap {
    parent: Polyhedron,
    spec: CapSpec,
    face_ids: Vec<usize>,
    boundary: Vec<usize>,
    boundary_faces: Vec<usize>,
}

impl Cap {
    pub fn parent(&self) -> &Polyhedron {
        &self.parent
    }

    pub fn spec(&self) -> CapSpec {
        self.spec
    }

    /// Parent face indices in the cap, ascending.
    pub fn face_ids(&self) -> &[usize] {
        &self.face_ids
    }

    /// Border cycle, counterclockwise seen from +z, starting at the lowest
    /// parent vertex index.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Cap faces sharing an edge with the border, in order of first contact
    /// along [`Cap::boundary`].
    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    /// Parent vertex indices used by cap faces, ascending.
    pub fn vertex_ids(&self) -> Vec<usize> {
        self.complex().used_vertices()
    }

    /// The cap faces as a surface over the parent's vertex list.
    pub fn complex(&self) -> Surface {
        let faces = self.face_ids.iter().map(|&f| self.parent.faces()[f].clone()).collect();
        Surface::new(self.parent.vertices().to_vec(), faces).expect("subset of a valid surface")
    }

    /// Border edges as ordered pairs following the cycle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let k = self.boundary.len();
        (0..k).map(|i| (self.boundary[i], self.boundary[(i + 1) % k])).collect()
    }

    /// Relative gap between the summed xy-areas of the cap faces and the
    /// xy-area enclosed by the border. Zero when the vertical projection is
    /// one-to-one.
    pub fn projection_gap(&self) -> f64 {
        let pts = self.parent.vertices();
        let shoelace = |ids: &[usize]| -> f64 {
            let k = ids.len();
            0.5 * (0..k)
                .map(|i| {
                    let (p, q) = (pts[ids[i]], pts[ids[(i + 1) % k]]);
                    p.x * q.y - q.x * p.y
                })
                .sum::<f64>()
        };
        let faces: f64 = self.face_ids.iter().map(|&f| shoelace(&self.parent.faces()[f].vertices)).sum();
        let border = shoelace(&self.boundary);
        (faces - border).abs() / border.abs().max(f64::MIN_POSITIVE)
    }
}

/// Extracts the cap of angle `spec.phi()` from `p`.
pub fn extract_cap(p: &Polyhedron, spec: CapSpec, tol: &Tolerances) -> Result<Cap, CapError> {
    let face_ids: Vec<usize> = p
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| normal_angle_to_z(&f.normal).map(|a| spec.admits(a, tol)).unwrap_or(false))
        .map(|(i, _)| i)
        .collect();
    if face_ids.is_empty() {
        return Err(CapError::EmptyCap);
    }
    if face_ids.len() == p.faces().len() {
        return Err(CapError::NoBoundary);
    }

    let cap = Cap { parent: p.clone(), spec, face_ids, boundary: Vec::new(), boundary_faces: Vec::new() };
    let complex = cap.complex();
    let boundary = complex.border_cycle().map_err(|e| match e {
        BorderError::NoBorder => CapError::NoBoundary,
        e => CapError::LemmaViolation(e.to_string()),
    })?;
    let mut boundary_faces = Vec::new();
    for i in 0..boundary.len() {
        let f = complex
            .half_edge_face(boundary[i], boundary[(i + 1) % boundary.len()])
            .expect("border edge");
        if !boundary_faces.contains(&f) {
            boundary_faces.push(f);
        }
    }
    // Complex faces are listed in `face_ids` order.
    let boundary_faces = boundary_faces.into_iter().map(|i| cap.face_ids[i]).collect();
    Ok(Cap { boundary, boundary_faces, ..cap })
}

/// Outcome of the disk check on a cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskReport {
    pub pass: bool,
    /// Euler characteristic `V − E + F` of the cap complex.
    pub chi: i64,
    pub simple_cycle: bool,
    pub connected: bool,
    pub projection_gap: f64,
    pub diagnostics: Vec<String>,
}

/// Relative tolerance on [`Cap::projection_gap`].
pub const PROJECTION_REL_TOL: f64 = 1e-9;

/// Checks that the cap is a topological disk: one simple border cycle, an
/// edge-connected face set, `χ = 1`, and a one-to-one vertical projection.
pub fn check_disk_topology(c: &Cap) -> DiskReport {
    let mut diagnostics = Vec::new();
    let complex = c.complex();

    let border = complex.boundary_half_edges();
    let mut seen = BTreeSet::new();
    let repeated = c.boundary.iter().any(|v| !seen.insert(*v));
    let cycle_edges: BTreeSet<(usize, usize)> = c.boundary_edges().into_iter().collect();
    let border_set: BTreeSet<(usize, usize)> = border.iter().copied().collect();
    let simple_cycle = !repeated && c.boundary.len() >= 3 && cycle_edges == border_set;
    if !simple_cycle {
        diagnostics.push(format!(
            "border has {} half-edges, cycle lists {} vertices{}",
            border.len(),
            c.boundary.len(),
            if repeated { " with repeats" } else { "" }
        ));
    }
    let edges = complex.edges();
    for (a, b) in c.boundary_edges() {
        let owners = edges.get(&edge_key(a, b)).map_or(0, Vec::len);
        if owners != 1 {
            diagnostics.push(format!("border edge ({a}, {b}) has {owners} cap faces"));
        }
    }

    let faces = complex.faces();
    let mut visited = vec![false; faces.len()];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    let mut reached = 1;
    while let Some(f) = queue.pop_front() {
        for (a, b) in faces[f].half_edges() {
            if let Some(g) = complex.half_edge_face(b, a) {
                if !visited[g] {
                    visited[g] = true;
                    reached += 1;
                    queue.push_back(g);
                }
            }
        }
    }
    let connected = reached == faces.len();
    if !connected {
        diagnostics.push(format!("only {reached} of {} cap faces are edge-connected", faces.len()));
    }

    let chi = complex.euler_characteristic();
    if chi != 1 {
        diagnostics.push(format!("Euler characteristic is {chi}, expected 1"));
    }
    let projection_gap = c.projection_gap();
    if !(projection_gap <= PROJECTION_REL_TOL) {
        diagnostics.push(format!("projected areas disagree by {projection_gap:e}"));
    }
    DiskReport {
        pass: diagnostics.is_empty(),
        chi,
        simple_cycle,
        connected,
        projection_gap,
        diagnostics,
    }
}
