//! Geometric primitives shared by every stage of the pipeline.
//!
//! Everything here is a plain value type. Predicates take an explicit
//! [`Tolerances`] so that callers decide the length scale once (usually from
//! the bounding box of the input) and every later classification agrees with
//! it.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("zero-length vector")]
    ZeroVector,
    #[error("plane is vertical and has no z = ax + by + c form")]
    VerticalPlane,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("point lies {distance:e} off the fitted plane (limit {limit:e})")]
    NotCoplanar { distance: f64, limit: f64 },
}

/// A 3-vector used both for positions and directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vec3;
pub type Vector3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Checked constructor for data coming from outside the crate.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        let v = Self::new(x, y, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GeomError::NonFinite)
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn dot(&self, o: &Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(&self, o: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(&self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(*self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn distance(&self, o: &Vec3) -> f64 {
        (*self - *o).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Unsigned angle between two vectors, in `[0, π]`.
///
/// Uses `atan2(|a×b|, a·b)`, which stays accurate near 0 and π where
/// `acos` of a normalized dot product does not.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Non-vertical plane `z = a·x + b·y + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Builds the plane `n·p = offset`. Fails when the plane is vertical
    /// within `tol.eps_angle`.
    pub fn from_normal_offset(normal: Vec3, offset: f64, tol: &Tolerances) -> Result<Self, GeomError> {
        let n = normal.normalized().ok_or(GeomError::ZeroVector)?;
        if n.z.abs() <= tol.eps_angle.sin() {
            return Err(GeomError::VerticalPlane);
        }
        let offset = offset / normal.norm();
        Ok(Plane::new(-n.x / n.z, -n.y / n.z, offset / n.z))
    }

    #[inline]
    pub fn z_at(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }

    /// Upward unit normal `(-a, -b, 1) / |(-a, -b, 1)|`.
    pub fn upward_normal(&self) -> Vec3 {
        let n = Vec3::new(-self.a, -self.b, 1.0);
        n / n.norm()
    }

    /// Signed height of `p` above the plane, measured along z.
    #[inline]
    pub fn height_above(&self, p: &Point3) -> f64 {
        p.z - self.z_at(p.x, p.y)
    }

    /// Signed orthogonal distance of `p` above the plane.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.height_above(p) / (1.0 + self.a * self.a + self.b * self.b).sqrt()
    }

    /// Slopes agree within `eps_slope` and intercepts within `eps_offset`.
    pub fn approx_eq(&self, o: &Plane, eps_slope: f64, eps_offset: f64) -> bool {
        (self.a - o.a).abs() <= eps_slope
            && (self.b - o.b).abs() <= eps_slope
            && (self.c - o.c).abs() <= eps_offset
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z = {}x + {}y + {}", self.a, self.b, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Coplanarity/coincidence threshold in length units.
    pub eps_geom: f64,
    /// Margin for strict angle comparisons, radians.
    pub eps_angle: f64,
    /// Degenerate-area threshold.
    pub eps_area: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::with_scale(1.0)
    }
}

impl Tolerances {
    pub const REL_GEOM: f64 = 1e-9;
    pub const EPS_ANGLE: f64 = 1e-9;

    /// Tolerances for a model whose bounding-box diameter is `diameter`.
    pub fn with_scale(diameter: f64) -> Self {
        Self::with_relative(diameter, Self::REL_GEOM)
    }

    /// Like [`Tolerances::with_scale`] with `eps_geom = rel · diameter`.
    pub fn with_relative(diameter: f64, rel: f64) -> Self {
        let d = if diameter.is_finite() && diameter > 0.0 { diameter } else { 1.0 };
        let eps_geom = rel * d;
        Self {
            eps_geom,
            eps_angle: Self::EPS_ANGLE,
            eps_area: eps_geom * eps_geom,
        }
    }

    pub fn for_points(points: &[Point3]) -> Self {
        Self::with_scale(bbox_diameter(points))
    }
}

/// Diagonal length of the axis-aligned bounding box; 0 for empty input.
pub fn bbox_diameter(points: &[Point3]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let (mut lo, mut hi) = (*first, *first);
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    (hi - lo).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

/// Orientation of `q` relative to the oriented plane through `p0, p1, p2`.
///
/// `Pos` when `q` lies on the side the right-handed normal
/// `(p1 - p0) × (p2 - p0)` points to. The zero band is the larger of an
/// `eps_geom`-thick slab around the plane and a floating-point error bound
/// proportional to the operand magnitudes.
pub fn orient3d(p0: &Point3, p1: &Point3, p2: &Point3, q: &Point3, tol: &Tolerances) -> Result<Sign, GeomError> {
    if ![p0, p1, p2, q].iter().all(|p| p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let u = *p1 - *p0;
    let v = *p2 - *p0;
    let w = *q - *p0;
    let n = u.cross(&v);
    let det = n.dot(&w);
    let band = (tol.eps_geom * n.norm()).max(8.0 * f64::EPSILON * u.norm() * v.norm() * w.norm());
    Ok(if det > band {
        Sign::Pos
    } else if det < -band {
        Sign::Neg
    } else {
        Sign::Zero
    })
}

/// Angle in `[0, π]` between `n` and the +z axis.
pub fn normal_angle_to_z(n: &Vector3) -> Result<f64, GeomError> {
    if !n.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if n.norm_squared() == 0.0 {
        return Err(GeomError::ZeroVector);
    }
    Ok(angle_between(n, &Vec3::Z))
}

/// Fits `z = ax + by + c` through a planar point set.
///
/// The normal is taken from the best-conditioned triple (first point,
/// farthest point, farthest from that line); every point must then lie
/// within `eps_geom` of the plane.
pub fn plane_through(points: &[Point3], tol: &Tolerances) -> Result<Plane, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::Degenerate("fewer than three points"));
    }
    if !points.iter().all(Vec3::is_finite) {
        return Err(GeomError::NonFinite);
    }
    let p0 = points[0];
    let p1 = *points
        .iter()
        .max_by(|a, b| a.distance(&p0).total_cmp(&b.distance(&p0)))
        .expect("nonempty");
    let axis = p1 - p0;
    if axis.norm() <= tol.eps_geom {
        return Err(GeomError::Degenerate("coincident points"));
    }
    let line_dist = |p: &Point3| axis.cross(&(*p - p0)).norm() / axis.norm();
    let p2 = *points
        .iter()
        .max_by(|a, b| line_dist(a).total_cmp(&line_dist(b)))
        .expect("nonempty");
    if line_dist(&p2) <= tol.eps_geom {
        return Err(GeomError::Degenerate("collinear points"));
    }
    let n = axis.cross(&(p2 - p0)).normalized().ok_or(GeomError::ZeroVector)?;
    for p in points {
        let d = n.dot(&(*p - p0)).abs();
        if d > tol.eps_geom {
            return Err(GeomError::NotCoplanar { distance: d, limit: tol.eps_geom });
        }
    }
    let centroid = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p) / points.len() as f64;
    Plane::from_normal_offset(n, n.dot(&centroid), tol)
}

/// Area of a convex spherical polygon from its spherical excess.
///
/// `dirs` are unit vectors in cyclic order (either orientation). The
/// interior angle at each corner is the angle between the great-circle
/// tangents towards its two neighbours.
pub fn spherical_polygon_area(dirs: &[Vector3], tol: &Tolerances) -> Result<f64, GeomError> {
    let k = dirs.len();
    if k < 3 {
        return Err(GeomError::Degenerate("spherical polygon needs three corners"));
    }
    if !dirs.iter().all(Vec3::is_finite) {
        return Err(GeomError::NonFinite);
    }
    let dirs: Vec<Vec3> = dirs
        .iter()
        .map(|d| d.normalized().ok_or(GeomError::ZeroVector))
        .collect::<Result<_, _>>()?;
    for i in 0..k {
        for j in (i + 1)..k {
            let ang = angle_between(&dirs[i], &dirs[j]);
            if ang <= tol.eps_angle {
                return Err(GeomError::Degenerate("repeated direction"));
            }
            if PI - ang <= tol.eps_angle {
                return Err(GeomError::Degenerate("antipodal directions"));
            }
        }
    }
    // All corners on one great circle: the polygon has no interior.
    let on_circle = (0..k).any(|i| {
        let n = dirs[i].cross(&dirs[(i + 1) % k]);
        n.normalized()
            .map(|n| dirs.iter().all(|d| n.dot(d).abs() <= tol.eps_angle))
            .unwrap_or(false)
    });
    if on_circle {
        return Err(GeomError::Degenerate("directions lie on a great circle"));
    }
    let mut angle_sum = 0.0;
    for i in 0..k {
        let prev = dirs[(i + k - 1) % k];
        let cur = dirs[i];
        let next = dirs[(i + 1) % k];
        let t_prev = prev - cur * cur.dot(&prev);
        let t_next = next - cur * cur.dot(&next);
        angle_sum += angle_between(&t_prev, &t_next);
    }
    Ok(angle_sum - (k as f64 - 2.0) * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn orient3d_examples() {
        let t = Tolerances::default();
        let o = v(0.0, 0.0, 0.0);
        let (a, b) = (v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0));
        assert_eq!(orient3d(&o, &a, &b, &v(0.0, 0.0, 1.0), &t), Ok(Sign::Pos));
        assert_eq!(orient3d(&o, &a, &b, &v(5.0, 7.0, 0.0), &t), Ok(Sign::Zero));
        assert_eq!(orient3d(&o, &a, &b, &v(0.0, 0.0, -1.0), &t), Ok(Sign::Neg));
        assert_eq!(orient3d(&o, &a, &b, &v(f64::NAN, 0.0, 0.0), &t), Err(GeomError::NonFinite));
    }

    #[test]
    fn orient3d_zero_band_tracks_eps_geom() {
        let t = Tolerances::with_scale(1.0);
        let o = v(0.0, 0.0, 0.0);
        let (a, b) = (v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0));
        assert_eq!(orient3d(&o, &a, &b, &v(0.3, 0.3, 5e-10), &t), Ok(Sign::Zero));
        assert_eq!(orient3d(&o, &a, &b, &v(0.3, 0.3, 5e-9), &t), Ok(Sign::Pos));
    }

    #[test]
    fn normal_angle_examples() {
        assert_eq!(normal_angle_to_z(&v(0.0, 0.0, 1.0)).unwrap(), 0.0);
        assert!((normal_angle_to_z(&v(1.0, 0.0, 0.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        // acos((1,0,1)·z / √2) = acos(1/√2)
        let expected = (1.0 / 2f64.sqrt()).acos();
        assert!((normal_angle_to_z(&v(1.0, 0.0, 1.0)).unwrap() - expected).abs() < 1e-15);
        assert!((expected - PI / 4.0).abs() < 1e-15);
        assert_eq!(normal_angle_to_z(&Vec3::ZERO), Err(GeomError::ZeroVector));
    }

    #[test]
    fn plane_through_examples() {
        let t = Tolerances::default();
        let p = plane_through(&[v(0.0, 0.0, 1.0), v(1.0, 0.0, 1.0), v(0.0, 1.0, 1.0)], &t).unwrap();
        assert!(p.approx_eq(&Plane::new(0.0, 0.0, 1.0), 1e-15, 1e-15));
        let p = plane_through(&[v(0.0, 0.0, 0.0), v(1.0, 0.0, 1.0), v(0.0, 1.0, 0.0)], &t).unwrap();
        assert!(p.approx_eq(&Plane::new(1.0, 0.0, 0.0), 1e-15, 1e-15), "{p}");
        let err = plane_through(&[v(0.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0)], &t);
        assert_eq!(err, Err(GeomError::VerticalPlane));
        let err = plane_through(&[v(0.0, 0.0, 0.0), v(1.0, 1.0, 1.0), v(2.0, 2.0, 2.0)], &t);
        assert!(matches!(err, Err(GeomError::Degenerate(_))));
        let err = plane_through(
            &[v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(1.0, 1.0, 0.1)],
            &t,
        );
        assert!(matches!(err, Err(GeomError::NotCoplanar { .. })));
    }

    #[test]
    fn spherical_area_octant() {
        let t = Tolerances::default();
        let a = spherical_polygon_area(&[v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0)], &t).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn spherical_area_pyramid_normals() {
        let t = Tolerances::default();
        let s = 1.0 / 2f64.sqrt();
        let normals = [v(s, 0.0, s), v(0.0, s, s), v(-s, 0.0, s), v(0.0, -s, s)];
        let a = spherical_polygon_area(&normals, &t).unwrap();
        let expected = 2.0 * PI - 4.0 * (1.0f64 / 3.0).acos();
        assert!((a - expected).abs() < 1e-12, "{a} vs {expected}");
        assert!((expected - 1.359_347_637_8).abs() < 1e-9);
    }

    #[test]
    fn spherical_area_rejects_antipodes_and_great_circles() {
        let t = Tolerances::default();
        let jitter = [v(1.0, 0.0, 0.01), v(0.0, 1.0, 0.0), v(-1.0, 0.0, -0.01), v(0.0, -1.0, 0.0)];
        assert!(matches!(spherical_polygon_area(&jitter, &t), Err(GeomError::Degenerate(_))));
        let s = 1.0 / 2f64.sqrt();
        let circle = [v(1.0, 0.0, 0.0), v(s, s, 0.0), v(0.0, 1.0, 0.0)];
        assert!(matches!(spherical_polygon_area(&circle, &t), Err(GeomError::Degenerate(_))));
        let repeated = [v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 0.0, 1.0)];
        assert!(matches!(spherical_polygon_area(&repeated, &t), Err(GeomError::Degenerate(_))));
    }

    #[test]
    fn plane_normal_offset_roundtrip() {
        let t = Tolerances::default();
        let p = Plane::new(0.3, -1.2, 2.5);
        let n = p.upward_normal();
        let q = Plane::from_normal_offset(n, n.dot(&Vec3::new(0.0, 0.0, p.c)), &t).unwrap();
        assert!(p.approx_eq(&q, 1e-14, 1e-14));
        assert_eq!(
            Plane::from_normal_offset(Vec3::new(1.0, 0.0, 0.0), 0.0, &t),
            Err(GeomError::VerticalPlane)
        );
    }
}
