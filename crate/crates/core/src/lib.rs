//! Jagged convex caps of convex polyhedra, their extension to unbounded
//! polyhedra through point-plane duality, and the limit angle of the result.

pub mod cap;
pub mod extend;
pub mod geom;
pub mod hull;
pub mod io;
pub mod limit_angle;
pub mod mesh;
pub mod pipeline;

pub use geom::{Plane, Point3, Tolerances, Vec3, Vector3};
pub use hull::{convex_hull, Polyhedron};
