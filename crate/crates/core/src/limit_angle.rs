//! The limit angle of an extension and the curvature bookkeeping around it.
//!
//! Translating every ray to a common apex gives a convex polyhedral angle.
//! Its curvature `2π − Σ` (angles between consecutive edges) equals the
//! total angle defect of the extension's vertices, since both measure the
//! area of the same set of outward normals.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::Serialize;
use thiserror::Error;

use crate::extend::{DegenerateKind, Extension, UnboundedPolyhedron, VertexOrigin, RAY_PLANE_TOL};
use crate::geom::{angle_between, spherical_polygon_area, GeomError, Point3, Tolerances, Vec3, Vector3};
use crate::hull::Polyhedron;
use crate::mesh::{MeshError, Surface};

/// Default bound on `|Σω − limit-apex curvature|`, in radians.
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("extension has no rays ({0:?})")]
    DegenerateLimitAngle(DegenerateKind),
    #[error("limit angle needs three directions, got {0}")]
    TooFewDirections(usize),
    #[error("degenerate cone: {0}")]
    DegenerateCone(&'static str),
    #[error("vertex {0} is not on the border of the bounded part")]
    NotOnBorder(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Polyhedral angle formed by the ray directions placed at one apex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitAngle {
    pub apex: Point3,
    /// Unit edge directions in the cyclic order of the rays.
    pub directions: Vec<Vector3>,
}

pub fn build_limit_angle(ext: &Extension, apex: Point3) -> Result<LimitAngle, LimitError> {
    match ext {
        Extension::Degenerate(d) => Err(LimitError::DegenerateLimitAngle(d.kind)),
        Extension::Unbounded(u) => Ok(limit_angle_of(u, apex)),
    }
}

pub fn limit_angle_of(u: &UnboundedPolyhedron, apex: Point3) -> LimitAngle {
    LimitAngle { apex, directions: u.rays().iter().map(|r| r.direction).collect() }
}

/// Curvature of the polyhedral angle at its apex.
pub fn limit_apex_curvature(v: &LimitAngle) -> Result<f64, LimitError> {
    let d = &v.directions;
    let k = d.len();
    if k < 3 {
        return Err(LimitError::TooFewDirections(k));
    }
    let dirs: Vec<Vec3> = d
        .iter()
        .map(|x| x.normalized().ok_or(LimitError::DegenerateCone("zero direction")))
        .collect::<Result<_, _>>()?;
    let eps = Tolerances::EPS_ANGLE;
    let mut sum = 0.0;
    for i in 0..k {
        let a = angle_between(&dirs[i], &dirs[(i + 1) % k]);
        if a <= eps || std::f64::consts::PI - a <= eps {
            return Err(LimitError::DegenerateCone("consecutive edges are parallel"));
        }
        sum += a;
    }
    // Edges in one plane through the apex bound no solid angle.
    let flat = (0..k).all(|i| {
        let n = dirs[i].cross(&dirs[(i + 1) % k]);
        dirs.iter().all(|x| n.dot(x).abs() <= eps)
    });
    if flat {
        return Err(LimitError::DegenerateCone("edges are coplanar"));
    }
    Ok(TAU - sum)
}

/// Angle defect `2π − Σ` of face angles at a vertex, with the convention
/// suited to each kind of surface.
pub trait VertexCurvature {
    fn vertex_curvature(&self, v: usize) -> Result<f64, LimitError>;

    /// Area of the spherical polygon spanned by the outward normals of the
    /// faces at `v`; zero when they span no area.
    fn spherical_image_curvature(&self, v: usize) -> Result<f64, LimitError>;
}

/// Area of the spherical polygon of `normals` (in fan order), or zero for a
/// flat or creased vertex.
fn normal_polygon_area(normals: &[Vec3]) -> Result<f64, LimitError> {
    let eps = Tolerances::EPS_ANGLE;
    let mut dirs: Vec<Vec3> = Vec::with_capacity(normals.len());
    for n in normals {
        if dirs.last().is_none_or(|d| angle_between(d, n) > eps) {
            dirs.push(*n);
        }
    }
    while dirs.len() > 1 && angle_between(&dirs[0], dirs.last().expect("nonempty")) <= eps {
        dirs.pop();
    }
    if dirs.len() < 3 {
        return Ok(0.0);
    }
    match spherical_polygon_area(&dirs, &Tolerances::default()) {
        Ok(a) => Ok(a),
        Err(GeomError::Degenerate(_)) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

impl VertexCurvature for Surface {
    fn vertex_curvature(&self, v: usize) -> Result<f64, LimitError> {
        Ok(Surface::vertex_curvature(self, v)?)
    }

    fn spherical_image_curvature(&self, v: usize) -> Result<f64, LimitError> {
        let fan = self.fan(v)?;
        if !fan.closed {
            return Err(MeshError::BoundaryVertex(v).into());
        }
        let normals: Vec<Vec3> = fan.faces.iter().map(|&f| self.faces()[f].normal).collect();
        normal_polygon_area(&normals)
    }
}

impl VertexCurvature for Polyhedron {
    fn vertex_curvature(&self, v: usize) -> Result<f64, LimitError> {
        VertexCurvature::vertex_curvature(self.surface(), v)
    }

    fn spherical_image_curvature(&self, v: usize) -> Result<f64, LimitError> {
        self.surface().spherical_image_curvature(v)
    }
}

impl VertexCurvature for UnboundedPolyhedron {
    /// Border vertices of the bounded part get their fans completed by the
    /// unbounded faces: next to a ray these contribute the angles from the
    /// two border edges to the ray direction; elsewhere the unbounded face
    /// covers the rest of the plane of the single face at the vertex.
    fn vertex_curvature(&self, v: usize) -> Result<f64, LimitError> {
        let s = self.bounded();
        let fan = s.fan(v)?;
        let bounded: f64 = fan.faces.iter().map(|&f| s.corner_angle(f, v).expect("fan face")).sum();
        if fan.closed {
            return Ok(TAU - bounded);
        }
        let b = self.boundary();
        let k = b.len();
        let i = b.iter().position(|&x| x == v).ok_or(LimitError::NotOnBorder(v))?;
        let pts = s.vertices();
        let e_in = pts[b[(i + k - 1) % k]] - pts[v];
        let e_out = pts[b[(i + 1) % k]] - pts[v];
        let extra = match self.ray_at(v) {
            Some(r) => {
                let d = self.rays()[r].direction;
                angle_between(&e_in, &d) + angle_between(&d, &e_out)
            }
            None => TAU - angle_between(&e_in, &e_out),
        };
        Ok(TAU - bounded - extra)
    }

    /// The unbounded faces at a border vertex share planes with the first
    /// and last faces of its fan, so the open fan's normals, closed up,
    /// already span the whole image.
    fn spherical_image_curvature(&self, v: usize) -> Result<f64, LimitError> {
        let s = self.bounded();
        let fan = s.fan(v)?;
        let normals: Vec<Vec3> = fan.faces.iter().map(|&f| s.faces()[f].normal).collect();
        normal_polygon_area(&normals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    /// Angle defect of every vertex of the extension.
    pub per_vertex: BTreeMap<usize, f64>,
    /// Sum over cap vertices surrounded by cap faces.
    pub total_cap: f64,
    /// Sum over all vertices of the extension.
    pub total_extension: f64,
    pub limit_apex: f64,
    pub identity_gap: f64,
    /// `2π − total_extension`.
    pub bound_margin: f64,
    /// Largest `|normal-image area − defect|` over strictly convex vertices.
    pub spherical_gap: f64,
    pub tolerance: f64,
    /// Whether the angle at the apex stays inside the extension; only
    /// evaluated when the apex lies inside it.
    pub containment: Option<bool>,
    pub failures: Vec<String>,
}

impl CurvatureReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Sum of angle defects over the cap vertices whose fan lies entirely in
/// the cap.
fn cap_interior_curvature(u: &UnboundedPolyhedron) -> Result<f64, LimitError> {
    let s = u.bounded();
    let border: Vec<usize> = u.boundary().to_vec();
    let mut total = 0.0;
    for v in s.used_vertices() {
        if matches!(u.vertex_origins()[v], VertexOrigin::Cap(_)) && !border.contains(&v) {
            let fan = s.fan(v)?;
            if fan.closed {
                total += Surface::vertex_curvature(s, v)?;
            }
        }
    }
    Ok(total)
}

/// Compares the total curvature of `u` with the curvature of its limit
/// angle `v`. Problems are recorded in the report rather than returned.
pub fn verify_curvature_identity(u: &UnboundedPolyhedron, v: &LimitAngle, tol: f64) -> CurvatureReport {
    let mut failures = Vec::new();
    let mut per_vertex = BTreeMap::new();
    let mut spherical_gap: f64 = 0.0;
    for x in u.bounded().used_vertices() {
        match u.vertex_curvature(x) {
            Ok(w) => {
                per_vertex.insert(x, w);
                if w > Tolerances::EPS_ANGLE {
                    match u.spherical_image_curvature(x) {
                        Ok(a) => spherical_gap = spherical_gap.max((a - w).abs()),
                        Err(e) => failures.push(format!("normal image at vertex {x}: {e}")),
                    }
                }
            }
            Err(e) => failures.push(format!("curvature at vertex {x}: {e}")),
        }
    }
    let total_extension: f64 = per_vertex.values().sum();
    let total_cap = cap_interior_curvature(u).unwrap_or_else(|e| {
        failures.push(format!("cap curvature: {e}"));
        f64::NAN
    });
    let limit_apex = limit_apex_curvature(v).unwrap_or_else(|e| {
        failures.push(format!("limit angle: {e}"));
        f64::NAN
    });
    let identity_gap = (total_extension - limit_apex).abs();
    let bound_margin = TAU - total_extension;
    if !(identity_gap < tol) {
        failures.push(format!("curvature identity off by {identity_gap:e}"));
    }
    if !(bound_margin > 0.0) {
        failures.push(format!("total curvature {total_extension} reaches 2π"));
    }
    if !(spherical_gap < tol) {
        failures.push(format!("normal image differs from defect by {spherical_gap:e}"));
    }
    let containment = u.contains(&v.apex).then(|| {
        let normals: Vec<Vec3> = u.bounded().faces().iter().map(|f| f.normal).collect();
        v.directions.iter().all(|d| normals.iter().all(|n| n.dot(d) <= RAY_PLANE_TOL))
    });
    if containment == Some(false) {
        failures.push("limit angle leaves the extension from an interior apex".into());
    }
    CurvatureReport {
        per_vertex,
        total_cap,
        total_extension,
        limit_apex,
        identity_gap,
        bound_margin,
        spherical_gap,
        tolerance: tol,
        containment,
        failures,
    }
}
