//! OBJ export. Rays and the limit angle are cut off at a fixed length.

use std::fmt::Write;

use thiserror::Error;

use crate::cap::Cap;
use crate::extend::UnboundedPolyhedron;
use crate::geom::Point3;
use crate::limit_angle::LimitAngle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("ray length must be positive and finite, got {0}")]
    RayLength(f64),
}

fn vertex(out: &mut String, p: &Point3) {
    writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
}

fn polygon(out: &mut String, ids: impl IntoIterator<Item = usize>) {
    out.push('f');
    for i in ids {
        write!(out, " {}", i + 1).unwrap();
    }
    out.push('\n');
}

/// Bounded faces as polygons, each ray as a segment of length
/// `ray_length` and each unbounded face cut off at the segment ends. The
/// limit angle, when given, becomes a separate object with the same edge
/// length.
pub fn emit_obj(u: &UnboundedPolyhedron, ray_length: f64, limit: Option<&LimitAngle>) -> Result<String, ExportError> {
    if !(ray_length > 0.0 && ray_length.is_finite()) {
        return Err(ExportError::RayLength(ray_length));
    }
    let s = u.bounded();
    let nv = s.vertices().len();
    let mut out = String::new();
    writeln!(out, "o extension").unwrap();
    for p in s.vertices() {
        vertex(&mut out, p);
    }
    for r in u.rays() {
        vertex(&mut out, &(r.origin + r.direction * ray_length));
    }
    writeln!(out, "g bounded").unwrap();
    for f in s.faces() {
        polygon(&mut out, f.vertices.iter().copied());
    }
    writeln!(out, "g rays").unwrap();
    for (i, r) in u.rays().iter().enumerate() {
        writeln!(out, "l {} {}", r.origin_vertex + 1, nv + i + 1).unwrap();
    }
    writeln!(out, "g unbounded").unwrap();
    for uf in u.unbounded_faces() {
        // The bounded face runs along the chain forwards; this face runs
        // back along it.
        let ids = std::iter::once(nv + uf.right_ray)
            .chain(uf.chain.iter().rev().copied())
            .chain(std::iter::once(nv + uf.left_ray));
        polygon(&mut out, ids);
    }

    if let Some(v) = limit {
        let base = nv + u.rays().len();
        let k = v.directions.len();
        writeln!(out, "o limit_angle").unwrap();
        vertex(&mut out, &v.apex);
        for d in &v.directions {
            vertex(&mut out, &(v.apex + *d * ray_length));
        }
        for i in 0..k {
            writeln!(out, "l {} {}", base + 1, base + i + 2).unwrap();
        }
        for i in 0..k {
            polygon(&mut out, [base, base + 1 + (i + 1) % k, base + 1 + i]);
        }
    }
    Ok(out)
}

/// The cap's faces over the vertices of its parent polyhedron.
pub fn emit_cap_obj(c: &Cap) -> String {
    let p = c.parent();
    let mut out = String::new();
    writeln!(out, "o cap").unwrap();
    for v in p.vertices() {
        vertex(&mut out, v);
    }
    for &f in c.face_ids() {
        polygon(&mut out, p.faces()[f].vertices.iter().copied());
    }
    out
}
