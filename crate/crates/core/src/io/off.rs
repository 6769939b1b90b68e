//! OFF reading and writing.
//!
//! Input must describe a closed convex polyhedron with outward (counter-
//! clockwise seen from outside) faces. The parsed result is the canonical
//! hull of the vertices, so coplanar pieces of one facet come back merged.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::geom::{Point3, Tolerances, Vec3};
use crate::hull::{convex_hull_with, HullError, Polyhedron};
use crate::mesh::Face;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OffError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: face refers to vertex {index}, but there are {count} vertices")]
    IndexOutOfRange { line: usize, index: usize, count: usize },
    #[error("line {line}: {msg}")]
    NonManifold { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    NonConvex { line: usize, msg: String },
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, OffError> {
    tok.parse().map_err(|_| OffError::Syntax { line, msg: format!("expected {what}, found {tok:?}") })
}

struct RawOff {
    vertices: Vec<Point3>,
    faces: Vec<(usize, Vec<usize>)>,
}

fn parse_raw(text: &str) -> Result<RawOff, OffError> {
    let mut lines = content_lines(text);
    let (line, mut toks) = lines.next().ok_or(OffError::Syntax { line: 1, msg: "empty file".into() })?;
    if toks[0] != "OFF" {
        return Err(OffError::Syntax { line, msg: format!("expected OFF header, found {:?}", toks[0]) });
    }
    toks.remove(0);
    let (line, toks) = if toks.is_empty() {
        lines.next().ok_or(OffError::Syntax { line, msg: "missing counts line".into() })?
    } else {
        (line, toks)
    };
    if toks.len() < 2 || toks.len() > 3 {
        return Err(OffError::Syntax { line, msg: "counts line must be \"V F E\"".into() });
    }
    let nv: usize = number(toks[0], line, "vertex count")?;
    let nf: usize = number(toks[1], line, "face count")?;
    if let Some(e) = toks.get(2) {
        number::<usize>(e, line, "edge count")?;
    }

    let mut last = line;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, toks) = lines
            .next()
            .ok_or(OffError::Syntax { line: last, msg: format!("expected {nv} vertices, found {}", vertices.len()) })?;
        if toks.len() < 3 {
            return Err(OffError::Syntax { line, msg: "vertex needs three coordinates".into() });
        }
        let c: Vec<f64> = toks[..3].iter().map(|t| number(t, line, "coordinate")).collect::<Result<_, _>>()?;
        let p = Vec3::try_new(c[0], c[1], c[2]).map_err(|e| OffError::Syntax { line, msg: e.to_string() })?;
        vertices.push(p);
        last = line;
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, toks) = lines
            .next()
            .ok_or(OffError::Syntax { line: last, msg: format!("expected {nf} faces, found {}", faces.len()) })?;
        let k: usize = number(toks[0], line, "face size")?;
        if k < 3 {
            return Err(OffError::Syntax { line, msg: format!("face has {k} vertices") });
        }
        if toks.len() < k + 1 {
            return Err(OffError::Syntax { line, msg: format!("face lists {} of {k} vertices", toks.len() - 1) });
        }
        // Anything after the indices is a colour and is ignored.
        let ids: Vec<usize> = toks[1..=k].iter().map(|t| number(t, line, "vertex index")).collect::<Result<_, _>>()?;
        if let Some(&index) = ids.iter().find(|&&i| i >= nv) {
            return Err(OffError::IndexOutOfRange { line, index, count: nv });
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k {
            return Err(OffError::Syntax { line, msg: "face repeats a vertex".into() });
        }
        faces.push((line, ids));
        last = line;
    }
    if let Some((line, _)) = lines.next() {
        return Err(OffError::Syntax { line, msg: "unexpected content after the last face".into() });
    }
    Ok(RawOff { vertices, faces })
}

pub fn parse_off(text: &str) -> Result<Polyhedron, OffError> {
    let raw = parse_raw(text)?;
    let tol = Tolerances::for_points(&raw.vertices);
    let hull = convex_hull_with(&raw.vertices, &tol)?;

    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (line, ids) in &raw.faces {
        let k = ids.len();
        for i in 0..k {
            if owner.insert((ids[i], ids[(i + 1) % k]), *line).is_some() {
                return Err(OffError::NonManifold {
                    line: *line,
                    msg: format!("edge {}-{} is used twice in the same direction", ids[i], ids[(i + 1) % k]),
                });
            }
        }
    }
    if let Some((&(a, b), &line)) = owner.iter().find(|(&(a, b), _)| !owner.contains_key(&(b, a))) {
        return Err(OffError::NonManifold { line, msg: format!("edge {a}-{b} has no opposite face") });
    }

    for (line, ids) in &raw.faces {
        let face = Face::from_outline(ids.clone(), &raw.vertices)
            .ok_or(OffError::NonConvex { line: *line, msg: "face has zero area".into() })?;
        if let Some(v) = (0..raw.vertices.len()).find(|&v| face.signed_distance(&raw.vertices[v]) > tol.eps_geom) {
            return Err(OffError::NonConvex {
                line: *line,
                msg: format!("vertex {v} lies outside this face's plane (non-convex shape or inward face)"),
            });
        }
    }
    Ok(hull.polyhedron)
}

/// Writes `p` as OFF with shortest round-trip float formatting.
pub fn emit_off(p: &Polyhedron) -> String {
    let mut out = String::new();
    writeln!(out, "OFF").unwrap();
    writeln!(out, "{} {} {}", p.vertices().len(), p.faces().len(), p.edge_count()).unwrap();
    for v in p.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
    }
    for f in p.faces() {
        write!(out, "{}", f.vertices.len()).unwrap();
        for i in &f.vertices {
            write!(out, " {i}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CUBE: &str = "OFF
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

    #[test]
    fn cube() {
        let p = parse_off(CUBE).unwrap();
        assert_eq!((p.vertices().len(), p.faces().len(), p.edge_count()), (8, 6, 12));
        assert_eq!(parse_off(&emit_off(&p)).unwrap(), p);
    }

    #[test]
    fn header_with_counts_and_comments() {
        let text = CUBE.replacen("OFF\n8 6 12", "# a cube\nOFF 8 6 12", 1);
        assert_eq!(parse_off(&text).unwrap(), parse_off(CUBE).unwrap());
    }

    #[test]
    fn coplanar_points() {
        let text = "OFF\n4 2 5\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n";
        assert_eq!(parse_off(text), Err(OffError::Hull(HullError::DegenerateHull)));
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_off(""), Err(OffError::Syntax { .. })));
        assert!(matches!(parse_off("PLY\n"), Err(OffError::Syntax { line: 1, .. })));
        let short = CUBE.replace("8 6 12", "9 6 12");
        assert!(matches!(parse_off(&short), Err(OffError::Syntax { .. })));
        let bad_num = CUBE.replace("1 1 0\n", "1 x 0\n");
        assert!(matches!(parse_off(&bad_num), Err(OffError::Syntax { line: 5, .. })));
        let bad_index = CUBE.replace("4 4 5 6 7", "4 4 5 6 8");
        assert_eq!(parse_off(&bad_index), Err(OffError::IndexOutOfRange { line: 12, index: 8, count: 8 }));
    }

    #[test]
    fn open_or_flipped_faces() {
        let open = CUBE.replace("8 6 12", "8 5 12").replace("4 3 0 4 7\n", "");
        assert!(matches!(parse_off(&open), Err(OffError::NonManifold { .. })));
        let flipped = CUBE.replace("4 4 5 6 7", "4 7 6 5 4");
        assert!(matches!(parse_off(&flipped), Err(OffError::NonManifold { .. })));
        let all_inward = CUBE
            .replace("4 0 3 2 1", "4 1 2 3 0")
            .replace("4 4 5 6 7", "4 7 6 5 4")
            .replace("4 0 1 5 4", "4 4 5 1 0")
            .replace("4 1 2 6 5", "4 5 6 2 1")
            .replace("4 2 3 7 6", "4 6 7 3 2")
            .replace("4 3 0 4 7", "4 7 4 0 3");
        assert!(matches!(parse_off(&all_inward), Err(OffError::NonConvex { line: 11, .. })));
    }

    #[test]
    fn dented_cube_is_rejected() {
        let dented = CUBE.replace("1 1 1\n", "0.9 0.9 0.5\n");
        assert!(matches!(parse_off(&dented), Err(OffError::NonConvex { .. })));
    }
}
