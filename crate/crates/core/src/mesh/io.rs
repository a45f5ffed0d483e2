//! Plain-text mesh format.
//!
//! ```text
//! dec-mesh 1
//! dim 2
//! period 1 1          (optional, periodic meshes only)
//! vertices 3
//! 0 0
//! 1 0
//! 0 1
//! simplices 1
//! 1 0 1 2             (orientation sign, then vertex indices)
//! ```
//!
//! Only top simplices are listed; lower-dimensional ones are derived.
//! Blank lines and text after `#` are ignored.

use std::fmt::Write as _;

use super::{Point, SimplicialMesh};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &SimplicialMesh) -> String {
    let n = mesh.dim();
    let mut out = String::new();
    writeln!(out, "dec-mesh 1").unwrap();
    writeln!(out, "dim {n}").unwrap();
    if let Some(p) = mesh.period() {
        let vals: Vec<String> = p[..n].iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "period {}", vals.join(" ")).unwrap();
    }
    writeln!(out, "vertices {}", mesh.n_vertices()).unwrap();
    for v in mesh.vertices() {
        let vals: Vec<String> = v[..n].iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", vals.join(" ")).unwrap();
    }
    writeln!(out, "simplices {}", mesh.n_simplices(n)).unwrap();
    for t in 0..mesh.n_simplices(n) {
        let idx: Vec<String> = mesh.simplex(n, t).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", mesh.top_orientation(t), idx.join(" ")).unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, raw) in self.inner.by_ref() {
            self.line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok(content.split_whitespace().collect());
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::MeshParse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let toks = self.next_tokens()?;
        if toks.first() != Some(&key) {
            return Err(self.err(format!("expected `{key}`, found `{}`", toks.join(" "))));
        }
        Ok(toks[1..].to_vec())
    }

    fn parse<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }
}

pub fn read_mesh(text: &str) -> Result<SimplicialMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.keyword("dec-mesh")?;
    if header != ["1"] {
        return Err(lines.err("unsupported format version"));
    }
    let dim_tok = lines.keyword("dim")?;
    if dim_tok.len() != 1 {
        return Err(lines.err("`dim` takes one value"));
    }
    let dim: usize = lines.parse(dim_tok[0])?;
    if !(2..=3).contains(&dim) {
        return Err(lines.err(format!("dimension {dim} unsupported")));
    }

    let mut toks = lines.next_tokens()?;
    let mut period = None;
    if toks[0] == "period" {
        if toks.len() != dim + 1 {
            return Err(lines.err(format!("`period` takes {dim} values")));
        }
        let mut p = [0.0; 3];
        for ax in 0..dim {
            p[ax] = lines.parse(toks[ax + 1])?;
        }
        period = Some(p);
        toks = lines.next_tokens()?;
    }
    if toks[0] != "vertices" || toks.len() != 2 {
        return Err(lines.err("expected `vertices <count>`"));
    }
    let nv: usize = lines.parse(toks[1])?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t = lines.next_tokens()?;
        if t.len() != dim {
            return Err(lines.err(format!("vertex needs {dim} coordinates")));
        }
        let mut p = [0.0; 3];
        for ax in 0..dim {
            p[ax] = lines.parse(t[ax])?;
        }
        vertices.push(p);
    }
    let st = lines.keyword("simplices")?;
    if st.len() != 1 {
        return Err(lines.err("expected `simplices <count>`"));
    }
    let ns: usize = lines.parse(st[0])?;
    let mut tops = Vec::with_capacity(ns);
    for _ in 0..ns {
        let t = lines.next_tokens()?;
        if t.len() != dim + 2 {
            return Err(lines.err(format!("simplex line needs a sign and {} indices", dim + 1)));
        }
        let sign: i8 = lines.parse(t[0])?;
        let verts = t[1..].iter().map(|x| lines.parse(x)).collect::<Result<Vec<usize>>>()?;
        tops.push((verts, sign));
    }
    SimplicialMesh::from_top_simplices(dim, vertices, period, &tops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshShape};

    #[test]
    fn round_trip_preserves_structure() {
        for shape in [MeshShape::Disk { radius: 1.0 }, MeshShape::Torus2d { side: 2.0 }, MeshShape::Box3d { side: 1.0 }] {
            let m = generate_mesh(&shape, 3).unwrap();
            let text = write_mesh(&m);
            let back = read_mesh(&text).unwrap();
            assert_eq!(write_mesh(&back), text);
            for k in 0..=m.dim() {
                assert_eq!(back.n_simplices(k), m.n_simplices(k));
            }
            assert_eq!(back.period(), m.period());
        }
    }

    #[test]
    fn reports_line_of_error() {
        let text = "dec-mesh 1\ndim 2\nvertices 3\n0 0\n1 0\n0 x\nsimplices 1\n1 0 1 2\n";
        match read_mesh(text) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn accepts_comments_and_minimal_mesh() {
        let text = "# triangle\ndec-mesh 1\ndim 2\n\nvertices 3\n0 0\n1 0\n0 1 # apex\nsimplices 1\n1 0 1 2\n";
        let m = read_mesh(text).unwrap();
        assert_eq!(m.n_simplices(1), 3);
    }
}
