//! JSON scene documents: any mix of polyhedron, cap, extension and limit
//! angle, plus run metadata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cap::Cap;
use crate::extend::{UnboundedPolyhedron, VertexOrigin};
use crate::geom::{Tolerances, Vec3};
use crate::hull::{HullError, Polyhedron};
use crate::limit_angle::LimitAngle;

pub const SCENE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDoc {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

impl MeshDoc {
    pub fn from_polyhedron(p: &Polyhedron) -> Self {
        MeshDoc {
            vertices: p.vertices().iter().map(|v| v.to_array()).collect(),
            faces: p.faces().iter().map(|f| f.vertices.clone()).collect(),
        }
    }

    /// Rebuilds and validates the polyhedron.
    pub fn to_polyhedron(&self) -> Result<Polyhedron, HullError> {
        let vertices: Vec<Vec3> = self.vertices.iter().map(|&c| Vec3::from(c)).collect();
        let tol = Tolerances::for_points(&vertices);
        Polyhedron::from_faces(vertices, self.faces.clone(), &tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapDoc {
    pub phi_degrees: f64,
    /// Parent face indices.
    pub faces: Vec<usize>,
    /// Border vertex cycle, parent vertex indices.
    pub boundary: Vec<usize>,
    pub boundary_faces: Vec<usize>,
}

impl CapDoc {
    pub fn from_cap(c: &Cap) -> Self {
        CapDoc {
            phi_degrees: c.spec().phi_degrees(),
            faces: c.face_ids().to_vec(),
            boundary: c.boundary().to_vec(),
            boundary_faces: c.boundary_faces().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayDoc {
    pub origin_vertex: usize,
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnboundedFaceDoc {
    /// `[a, b, c]` of `z = ax + by + c`.
    pub plane: [f64; 3],
    pub bounded_face: usize,
    pub chain: Vec<usize>,
    pub left_ray: usize,
    pub right_ray: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionDoc {
    pub bounded: MeshDoc,
    /// Parent vertex index for cap vertices, null for new ones.
    pub origins: Vec<Option<usize>>,
    pub boundary: Vec<usize>,
    pub rays: Vec<RayDoc>,
    pub unbounded_faces: Vec<UnboundedFaceDoc>,
}

impl ExtensionDoc {
    pub fn from_extension(u: &UnboundedPolyhedron) -> Self {
        let s = u.bounded();
        ExtensionDoc {
            bounded: MeshDoc {
                vertices: s.vertices().iter().map(|v| v.to_array()).collect(),
                faces: s.faces().iter().map(|f| f.vertices.clone()).collect(),
            },
            origins: u
                .vertex_origins()
                .iter()
                .map(|o| match o {
                    VertexOrigin::Cap(v) => Some(*v),
                    VertexOrigin::New => None,
                })
                .collect(),
            boundary: u.boundary().to_vec(),
            rays: u
                .rays()
                .iter()
                .map(|r| RayDoc { origin_vertex: r.origin_vertex, direction: r.direction.to_array() })
                .collect(),
            unbounded_faces: u
                .unbounded_faces()
                .iter()
                .map(|f| UnboundedFaceDoc {
                    plane: [f.plane.a, f.plane.b, f.plane.c],
                    bounded_face: f.bounded_face,
                    chain: f.chain.clone(),
                    left_ray: f.left_ray,
                    right_ray: f.right_ray,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitAngleDoc {
    pub apex: [f64; 3],
    pub directions: Vec<[f64; 3]>,
}

impl LimitAngleDoc {
    pub fn from_limit_angle(v: &LimitAngle) -> Self {
        LimitAngleDoc { apex: v.apex.to_array(), directions: v.directions.iter().map(|d| d.to_array()).collect() }
    }

    pub fn to_limit_angle(&self) -> LimitAngle {
        LimitAngle { apex: Vec3::from(self.apex), directions: self.directions.iter().map(|&d| Vec3::from(d)).collect() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneMetadata {
    pub phi_degrees: Option<f64>,
    pub seed: Option<u64>,
    pub tolerances: Option<Tolerances>,
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub schema: u32,
    pub metadata: SceneMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polyhedron: Option<MeshDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<CapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_angle: Option<LimitAngleDoc>,
}

impl SceneDocument {
    pub fn new(metadata: SceneMetadata) -> Self {
        SceneDocument { schema: SCENE_SCHEMA, metadata, polyhedron: None, cap: None, extension: None, limit_angle: None }
    }

    /// Fills `metadata.counts` from the parts present.
    pub fn count_parts(&mut self) {
        let c = &mut self.metadata.counts;
        if let Some(p) = &self.polyhedron {
            c.insert("polyhedron_vertices".into(), p.vertices.len());
            c.insert("polyhedron_faces".into(), p.faces.len());
        }
        if let Some(cap) = &self.cap {
            c.insert("cap_faces".into(), cap.faces.len());
            c.insert("cap_boundary_vertices".into(), cap.boundary.len());
        }
        if let Some(e) = &self.extension {
            c.insert("extension_vertices".into(), e.bounded.vertices.len());
            c.insert("extension_faces".into(), e.bounded.faces.len());
            c.insert("rays".into(), e.rays.len());
            c.insert("unbounded_faces".into(), e.unbounded_faces.len());
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
