use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Point, SimplicialMesh};
use crate::error::{Error, Result};

/// Largest aspect ratio (longest edge over smallest altitude) a generator may produce.
pub const MAX_ASPECT_RATIO: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshShape {
    /// Disk centered at the origin.
    Disk { radius: f64 },
    /// Annulus centered at the origin.
    Annulus { r_in: f64, r_out: f64 },
    /// Cube `[-side/2, side/2]^3`.
    Box3d { side: f64 },
    /// Flat periodic square `[0, side)^2`.
    Torus2d { side: f64 },
}

impl MeshShape {
    /// Exact volume of the continuum shape.
    pub fn volume(&self) -> f64 {
        match *self {
            MeshShape::Disk { radius } => PI * radius * radius,
            MeshShape::Annulus { r_in, r_out } => PI * (r_out * r_out - r_in * r_in),
            MeshShape::Box3d { side } => side.powi(3),
            MeshShape::Torus2d { side } => side * side,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeshShape::Box3d { .. } => 3,
            _ => 2,
        }
    }
}

/// Generates a mesh of `shape`. Edge lengths scale like `1 / resolution`.
pub fn generate_mesh(shape: &MeshShape, resolution: usize) -> Result<SimplicialMesh> {
    if resolution < 2 {
        return Err(Error::InvalidParams(format!("resolution {resolution} < 2")));
    }
    let mesh = match *shape {
        MeshShape::Disk { radius } => {
            positive("radius", radius)?;
            disk(radius, resolution)?
        }
        MeshShape::Annulus { r_in, r_out } => {
            positive("r_in", r_in)?;
            positive("r_out", r_out)?;
            if r_in >= r_out {
                return Err(Error::InvalidParams(format!("annulus needs r_in < r_out, got {r_in} >= {r_out}")));
            }
            annulus(r_in, r_out, resolution)?
        }
        MeshShape::Box3d { side } => {
            positive("side", side)?;
            box3d(side, resolution)?
        }
        MeshShape::Torus2d { side } => {
            positive("side", side)?;
            if resolution < 3 {
                return Err(Error::InvalidParams("torus2d needs resolution >= 3".into()));
            }
            torus2d(side, resolution)?
        }
    };
    let aspect = mesh.max_aspect_ratio();
    assert!(
        aspect <= MAX_ASPECT_RATIO,
        "generator produced aspect ratio {aspect:.3} > {MAX_ASPECT_RATIO}"
    );
    Ok(mesh)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
    }
}

fn from_triangles(points: &[[f64; 2]], tris: Vec<[usize; 3]>, period: Option<Point>) -> Result<SimplicialMesh> {
    let vertices: Vec<Point> = points.iter().map(|p| [p[0], p[1], 0.0]).collect();
    let tops: Vec<(Vec<usize>, i8)> = tris
        .into_iter()
        .map(|t| {
            let o = orient2d(&points[t[0]], &points[t[1]], &points[t[2]]);
            (t.to_vec(), if o > 0.0 { 1 } else { -1 })
        })
        .collect();
    SimplicialMesh::from_top_simplices(2, vertices, period, &tops)
}

fn orient2d(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn ring(radius: f64, count: usize, offset: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|i| {
            let t = 2.0 * PI * (i as f64 + offset) / count as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

/// Triangulates the band between two concentric rings by walking both in angle order.
/// `a` and `b` are global index lists; `ta`/`tb` the fractional angle offsets of each ring.
fn zipper(a: &[usize], ta: f64, b: &[usize], tb: f64, tris: &mut Vec<[usize; 3]>) {
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let next_a = (i as f64 + 1.0 + ta) / na as f64;
        let next_b = (j as f64 + 1.0 + tb) / nb as f64;
        if i < na && (j == nb || next_a <= next_b) {
            tris.push([a[i], a[(i + 1) % na], b[j % nb]]);
            i += 1;
        } else {
            tris.push([a[i % na], b[j], b[(j + 1) % nb]]);
            j += 1;
        }
    }
}

fn disk(radius: f64, n: usize) -> Result<SimplicialMesh> {
    let mut points = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..=n {
        let r = radius * i as f64 / n as f64;
        let start = points.len();
        points.extend(ring(r, 6 * i, 0.0));
        rings.push((start..points.len()).collect());
    }
    let mut tris = Vec::new();
    let first = &rings[1];
    for j in 0..first.len() {
        tris.push([0, first[j], first[(j + 1) % first.len()]]);
    }
    for i in 1..n {
        zipper(&rings[i], 0.0, &rings[i + 1], 0.0, &mut tris);
    }
    lawson_flips(&points, &mut tris);
    from_triangles(&points, tris, None)
}

fn annulus(r_in: f64, r_out: f64, res: usize) -> Result<SimplicialMesh> {
    let h = r_out / res as f64;
    let layers = (((r_out - r_in) / h).round() as usize).max(1);
    let mut points = Vec::new();
    let mut rings: Vec<(Vec<usize>, f64)> = Vec::new();
    for j in 0..=layers {
        let r = r_in + (r_out - r_in) * j as f64 / layers as f64;
        let count = ((2.0 * PI * r / h).round() as usize).max(6);
        let offset = 0.5 * (j % 2) as f64;
        let start = points.len();
        points.extend(ring(r, count, offset));
        rings.push(((start..points.len()).collect(), offset));
    }
    let mut tris = Vec::new();
    for j in 0..layers {
        zipper(&rings[j].0, rings[j].1, &rings[j + 1].0, rings[j + 1].1, &mut tris);
    }
    lawson_flips(&points, &mut tris);
    from_triangles(&points, tris, None)
}

fn torus2d(side: f64, n: usize) -> Result<SimplicialMesh> {
    let h = side / n as f64;
    let points: Vec<[f64; 2]> = (0..n * n).map(|k| [(k % n) as f64 * h, (k / n) as f64 * h]).collect();
    let id = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut tops = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tops.push((vec![a, b, c], 1));
            tops.push((vec![a, c, d], 1));
        }
    }
    let vertices = points.iter().map(|p| [p[0], p[1], 0.0]).collect();
    SimplicialMesh::from_top_simplices(2, vertices, Some([side, side, 0.0]), &tops)
}

fn box3d(side: f64, n: usize) -> Result<SimplicialMesh> {
    let h = side / n as f64;
    let m = n + 1;
    let id = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push([
                    -0.5 * side + i as f64 * h,
                    -0.5 * side + j as f64 * h,
                    -0.5 * side + k as f64 * h,
                ]);
            }
        }
    }
    // Kuhn subdivision: one tetrahedron per axis permutation, all sharing the main diagonal.
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tops = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut verts = vec![id(c[0], c[1], c[2])];
                    for ax in perm {
                        c[ax] += 1;
                        verts.push(id(c[0], c[1], c[2]));
                    }
                    tops.push((verts, 0));
                }
            }
        }
    }
    let tops: Vec<(Vec<usize>, i8)> = tops
        .into_iter()
        .map(|(v, _)| {
            let p: Vec<&Point> = v.iter().map(|&x| &vertices[x]).collect();
            let e = |a: usize| super::sub3(p[a], p[0]);
            let det = super::det3(&e(1), &e(2), &e(3));
            (v, if det > 0.0 { 1 } else { -1 })
        })
        .collect();
    SimplicialMesh::from_top_simplices(3, vertices, None, &tops)
}

/// Flips interior edges until every edge is locally Delaunay (opposite angles sum to at most pi).
fn lawson_flips(points: &[[f64; 2]], tris: &mut [[usize; 3]]) {
    let angle = |a: usize, b: usize, c: usize| -> f64 {
        // angle at c in triangle (a, b, c)
        let u = [points[a][0] - points[c][0], points[a][1] - points[c][1]];
        let v = [points[b][0] - points[c][0], points[b][1] - points[c][1]];
        (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1])
    };
    for _pass in 0..1000 {
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut keys: Vec<(usize, usize)> = edges.keys().copied().collect();
        keys.sort_unstable();
        let mut touched = vec![false; tris.len()];
        let mut flipped = 0;
        for (a, b) in keys {
            let ts = &edges[&(a, b)];
            if ts.len() != 2 || touched[ts[0]] || touched[ts[1]] {
                continue;
            }
            let (t1, t2) = (ts[0], ts[1]);
            let c = opposite(&tris[t1], a, b);
            let d = opposite(&tris[t2], a, b);
            if angle(a, b, c) + angle(a, b, d) > PI + 1e-12 {
                tris[t1] = [c, d, a];
                tris[t2] = [c, d, b];
                touched[t1] = true;
                touched[t2] = true;
                flipped += 1;
            }
        }
        if flipped == 0 {
            return;
        }
    }
}

fn opposite(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_disk_area_and_boundary() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 2).unwrap();
        assert!(m.volumes(2).iter().all(|&v| v > 0.0));
        assert!(m.boundary_facets().count() > 0);
        assert!((m.total_volume() - PI).abs() < 0.2 * PI);
    }

    #[test]
    fn torus_is_closed_with_zero_euler_characteristic() {
        let m = generate_mesh(&MeshShape::Torus2d { side: 1.0 }, 4).unwrap();
        assert!((0..2).all(|k| m.boundary_marker(k).iter().all(|&b| !b)));
        assert_eq!(m.euler_characteristic(), 0);
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annulus_has_two_boundary_components() {
        let m = generate_mesh(&MeshShape::Annulus { r_in: 0.5, r_out: 1.0 }, 16).unwrap();
        assert_eq!(m.boundary_complex().connected_components(), 2);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn box_boundary_is_a_sphere() {
        let m = generate_mesh(&MeshShape::Box3d { side: 1.0 }, 3).unwrap();
        let b = m.boundary_complex();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.euler_characteristic(), 2);
        assert_eq!(m.euler_characteristic(), 1);
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
        assert_eq!(b.boundary_facets().count(), 0);
    }

    #[test]
    fn disk_boundary_is_one_closed_polygon() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 6).unwrap();
        let b = m.boundary_complex();
        assert_eq!(b.dim(), 1);
        assert_eq!(b.connected_components(), 1);
        assert_eq!(b.n_simplices(0), b.n_simplices(1));
        assert_eq!(b.boundary_facets().count(), 0);
        let t = generate_mesh(&MeshShape::Torus2d { side: 1.0 }, 4).unwrap();
        assert_eq!(t.boundary_complex().n_simplices(1), 0);
    }

    #[test]
    fn disk_is_delaunay() {
        // Delaunay triangulations have every interior edge's opposite angles summing to <= pi,
        // which makes the linear-element stiffness off-diagonals nonpositive.
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 8).unwrap();
        for e in 0..m.n_simplices(1) {
            if m.is_boundary(1, e) {
                continue;
            }
            let s = m.simplex(1, e).to_vec();
            let mut total = 0.0;
            for t in 0..m.n_simplices(2) {
                let tv = m.simplex(2, t);
                if tv.contains(&s[0]) && tv.contains(&s[1]) {
                    let c = *tv.iter().find(|&&v| v != s[0] && v != s[1]).unwrap();
                    let u = super::super::sub3(&m.vertex(s[0]), &m.vertex(c));
                    let v = super::super::sub3(&m.vertex(s[1]), &m.vertex(c));
                    total += (super::super::dot3(&u, &v) / (super::super::norm3(&u) * super::super::norm3(&v))).acos();
                }
            }
            assert!(total <= PI + 1e-9, "edge {e}: {total}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            generate_mesh(&MeshShape::Annulus { r_in: 1.0, r_out: 0.5 }, 8),
            Err(Error::InvalidParams(_))
        ));
        assert!(generate_mesh(&MeshShape::Disk { radius: -1.0 }, 8).is_err());
        assert!(generate_mesh(&MeshShape::Disk { radius: 1.0 }, 1).is_err());
    }

    #[test]
    fn width_scales_inversely_with_resolution() {
        for shape in [
            MeshShape::Disk { radius: 1.0 },
            MeshShape::Annulus { r_in: 0.4, r_out: 1.0 },
            MeshShape::Box3d { side: 1.0 },
            MeshShape::Torus2d { side: 1.0 },
        ] {
            let coarse = generate_mesh(&shape, 4).unwrap().mesh_width();
            let fine = generate_mesh(&shape, 8).unwrap().mesh_width();
            let ratio = coarse / fine;
            assert!((1.6..2.5).contains(&ratio), "{shape:?}: {ratio}");
        }
    }
}
