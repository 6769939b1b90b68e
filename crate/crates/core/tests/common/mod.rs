//! Brute-force oracles shared by the integration tests. None of them call
//! into the code they check beyond plain accessors.

#![allow(dead_code)]

use std::f64::consts::TAU;

use unbounded_cap::extend::UnboundedPolyhedron;
use unbounded_cap::{Plane, Point3, Vec3};

pub const PYRAMID_OFF: &str = "OFF
5 5 8
1 1 0
-1 1 0
-1 -1 0
1 -1 0
0 0 1
4 3 2 1 0
3 0 1 4
3 1 2 4
3 2 3 4
3 3 0 4
";

pub const CUBE_OFF: &str = "OFF
8 6 12
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 1 2 6 5
4 2 3 7 6
4 3 0 4 7
";

/// 2π − 4·arccos(1/3).
pub fn pyramid_curvature() -> f64 {
    TAU - 4.0 * (1.0f64 / 3.0).acos()
}

pub fn angle(a: Vec3, b: Vec3) -> f64 {
    a.cross(&b).norm().atan2(a.dot(&b))
}

fn det3(r: [[f64; 3]; 3]) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

/// Every point where three of the planes meet that lies on or below all of
/// them, deduplicated.
pub fn envelope_by_triples(planes: &[Plane], eps: f64) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::new();
    let n = planes.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let t = [planes[i], planes[j], planes[k]];
                // a·x + b·y − z = −c
                let m = t.map(|p| [p.a, p.b, -1.0]);
                let det = det3(m);
                if det.abs() < 1e-12 {
                    continue;
                }
                let col = |c: usize| {
                    let mut r = m;
                    for (row, p) in r.iter_mut().zip(&t) {
                        row[c] = -p.c;
                    }
                    det3(r) / det
                };
                let p = Vec3::new(col(0), col(1), col(2));
                let e = eps * (1.0 + p.norm());
                if planes.iter().all(|pl| p.z - (pl.a * p.x + pl.b * p.y + pl.c) <= e)
                    && !out.iter().any(|q| q.distance(&p) <= e)
                {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Supporting planes `(unit normal, offset)` of the hull, found by testing
/// every point triple against every point.
pub fn facets_by_triples(pts: &[Point3], eps: f64) -> Vec<(Vec3, f64)> {
    let mut out: Vec<(Vec3, f64)> = Vec::new();
    let n = pts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let Some(nrm) = (pts[j] - pts[i]).cross(&(pts[k] - pts[i])).normalized() else {
                    continue;
                };
                let d = nrm.dot(&pts[i]);
                let above = pts.iter().any(|p| nrm.dot(p) - d > eps);
                let below = pts.iter().any(|p| nrm.dot(p) - d < -eps);
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

/// Solid angle of the spherical triangle `a b c` (unit vectors).
pub fn triangle_solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = a.dot(&b.cross(&c));
    let den = 1.0 + a.dot(&b) + b.dot(&c) + c.dot(&a);
    2.0 * num.atan2(den)
}

/// Area of a convex spherical polygon given in either orientation, as a fan
/// of triangles from the first vertex.
pub fn spherical_area(dirs: &[Vec3]) -> f64 {
    let mut s = 0.0;
    for i in 1..dirs.len() - 1 {
        s += triangle_solid_angle(dirs[0], dirs[i], dirs[i + 1]);
    }
    s.abs()
}

/// Angle defects of an extension recomputed from coordinates, ray
/// directions and face lists.
pub fn defects(u: &UnboundedPolyhedron) -> Vec<(usize, f64)> {
    let s = u.bounded();
    let pts = s.vertices();
    let border = u.boundary();
    let mut used: Vec<usize> = s.faces().iter().flat_map(|f| f.vertices.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    used.into_iter()
        .map(|v| {
            let mut sum = 0.0;
            for f in s.faces() {
                if let Some(i) = f.vertices.iter().position(|&x| x == v) {
                    let k = f.vertices.len();
                    let prev = pts[f.vertices[(i + k - 1) % k]];
                    let next = pts[f.vertices[(i + 1) % k]];
                    sum += angle(prev - pts[v], next - pts[v]);
                }
            }
            if let Some(i) = border.iter().position(|&x| x == v) {
                let k = border.len();
                let e_in = pts[border[(i + k - 1) % k]] - pts[v];
                let e_out = pts[border[(i + 1) % k]] - pts[v];
                sum += match u.rays().iter().find(|r| r.origin_vertex == v) {
                    Some(r) => angle(e_in, r.direction) + angle(r.direction, e_out),
                    None => TAU - angle(e_in, e_out),
                };
            }
            (v, TAU - sum)
        })
        .collect()
}

/// `2π − Σ` angles between consecutive ray directions.
pub fn cone_curvature(u: &UnboundedPolyhedron) -> f64 {
    let d: Vec<Vec3> = u.rays().iter().map(|r| r.direction).collect();
    let k = d.len();
    TAU - (0..k).map(|i| angle(d[i], d[(i + 1) % k])).sum::<f64>()
}

/// Face normals around `v` in fan order, with repeats of the same plane
/// dropped.
pub fn normal_cycle(u: &UnboundedPolyhedron, v: usize) -> Vec<Vec3> {
    let s = u.bounded();
    let fan = s.fan(v).expect("vertex has a fan");
    let mut out: Vec<Vec3> = Vec::new();
    for &f in &fan.faces {
        let n = s.faces()[f].normal;
        if out.last().is_none_or(|m| (*m - n).norm() > 1e-12) {
            out.push(n);
        }
    }
    while out.len() > 1 && (out[0] - *out.last().unwrap()).norm() <= 1e-12 {
        out.pop();
    }
    out
}
