//! Oriented simplicial meshes with a flat metric.
//!
//! Every `k`-simplex is stored as its sorted vertex tuple; that order is
//! its reference orientation. Top simplices additionally carry a sign
//! relating the sorted order to the manifold orientation. Faces of a
//! `k`-simplex are indexed by the local vertex they omit, so face `j`
//! enters the boundary with sign `(-1)^j`.

mod distance;
mod generate;
mod io;

use std::collections::HashMap;

pub use distance::{distance_field, DistanceField};
pub use generate::{generate_mesh, MeshShape, MAX_ASPECT_RATIO};
pub use io::{read_mesh, write_mesh};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

type SimplexKey = [usize; 4];

fn key_of(verts: &[usize]) -> SimplexKey {
    let mut k = [usize::MAX; 4];
    k[..verts.len()].copy_from_slice(verts);
    k
}

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    ambient_dim: usize,
    vertices: Vec<Point>,
    /// Period per axis for periodic (torus) meshes; 0 marks a non-periodic axis.
    period: Option<Point>,
    /// `simplices[k]` is a flat list with stride `k + 1`.
    simplices: Vec<Vec<usize>>,
    top_orientation: Vec<i8>,
    /// `faces[k]` for `k >= 1`, stride `k + 1`; entry `j` omits local vertex `j`.
    faces: Vec<Vec<usize>>,
    /// Top simplices adjacent to each facet.
    facet_cofaces: Vec<Vec<usize>>,
    boundary: Vec<Vec<bool>>,
    volumes: Vec<Vec<f64>>,
    lookup: Vec<HashMap<SimplexKey, usize>>,
    /// For boundary complexes: the parent-mesh index of each vertex.
    parent_vertices: Option<Vec<usize>>,
}

impl SimplicialMesh {
    /// Builds a mesh from its top simplices. Each entry is an ordered vertex
    /// tuple and an orientation sign for that order.
    pub fn from_top_simplices(
        dim: usize,
        vertices: Vec<Point>,
        period: Option<Point>,
        tops: &[(Vec<usize>, i8)],
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dimension {dim} unsupported (expected 2 or 3)")));
        }
        let mesh = Self::build(dim, dim, vertices, period, tops)?;
        mesh.check_geometric_orientation()?;
        Ok(mesh)
    }

    fn build(
        dim: usize,
        ambient_dim: usize,
        vertices: Vec<Point>,
        period: Option<Point>,
        tops: &[(Vec<usize>, i8)],
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut top_flat = Vec::with_capacity(tops.len() * (dim + 1));
        let mut top_orientation = Vec::with_capacity(tops.len());
        for (t, (verts, sign)) in tops.iter().enumerate() {
            if verts.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!(
                    "simplex {t} has {} vertices, expected {}",
                    verts.len(),
                    dim + 1
                )));
            }
            if *sign != 1 && *sign != -1 {
                return Err(Error::InvalidMesh(format!("simplex {t} has orientation {sign}")));
            }
            if let Some(&v) = verts.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("simplex {t} references vertex {v} of {nv}")));
            }
            let (sorted, parity) = sort_with_parity(verts);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("simplex {t} repeats a vertex")));
            }
            top_flat.extend_from_slice(&sorted);
            top_orientation.push(sign * parity);
        }

        // Sub-simplices in lexicographic order.
        let mut simplices: Vec<Vec<usize>> = vec![Vec::new(); dim + 1];
        let mut used = vec![false; nv];
        for &v in &top_flat {
            used[v] = true;
        }
        if let Some(v) = used.iter().position(|u| !u) {
            if !tops.is_empty() {
                return Err(Error::InvalidMesh(format!("vertex {v} belongs to no simplex")));
            }
        }
        simplices[0] = (0..nv).collect();
        for k in 1..dim {
            let mut set: Vec<SimplexKey> = Vec::new();
            for top in top_flat.chunks_exact(dim + 1) {
                for_each_subset(top, k + 1, |s| set.push(key_of(s)));
            }
            set.sort_unstable();
            set.dedup();
            simplices[k] = set.iter().flat_map(|key| key[..=k].iter().copied()).collect();
        }
        {
            // Top simplices keep their input order but must be distinct.
            let mut keys: Vec<SimplexKey> = top_flat.chunks_exact(dim + 1).map(key_of).collect();
            keys.sort_unstable();
            if keys.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh("duplicate top simplex".into()));
            }
            simplices[dim] = top_flat;
        }

        let mut lookup: Vec<HashMap<SimplexKey, usize>> = vec![HashMap::new(); dim + 1];
        for k in 1..=dim {
            let map = &mut lookup[k];
            map.reserve(simplices[k].len() / (k + 1));
            for (i, s) in simplices[k].chunks_exact(k + 1).enumerate() {
                map.insert(key_of(s), i);
            }
        }

        let mut faces: Vec<Vec<usize>> = vec![Vec::new(); dim + 1];
        for k in 1..=dim {
            let mut fk = Vec::with_capacity(simplices[k].len());
            let mut buf = Vec::with_capacity(k);
            for s in simplices[k].chunks_exact(k + 1) {
                for j in 0..=k {
                    buf.clear();
                    buf.extend(s.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
                    let idx = if k == 1 { buf[0] } else { lookup[k - 1][&key_of(&buf)] };
                    fk.push(idx);
                }
            }
            faces[k] = fk;
        }

        let n_facets = simplices[dim - 1].len() / dim;
        let mut facet_cofaces: Vec<Vec<usize>> = vec![Vec::new(); n_facets];
        for (t, fs) in faces[dim].chunks_exact(dim + 1).enumerate() {
            for &f in fs {
                facet_cofaces[f].push(t);
            }
        }
        if let Some(f) = facet_cofaces.iter().position(|c| c.len() > 2) {
            return Err(Error::InvalidMesh(format!("facet {f} bounds more than two simplices")));
        }

        // Orientation consistency across interior facets.
        for (f, cof) in facet_cofaces.iter().enumerate() {
            if cof.len() == 2 {
                let induced: i32 = cof
                    .iter()
                    .map(|&t| {
                        let j = faces[dim][t * (dim + 1)..(t + 1) * (dim + 1)]
                            .iter()
                            .position(|&x| x == f)
                            .unwrap();
                        top_orientation[t] as i32 * if j % 2 == 0 { 1 } else { -1 }
                    })
                    .sum();
                if induced != 0 {
                    return Err(Error::InvalidMesh(format!(
                        "inconsistent orientation across facet {f}"
                    )));
                }
            }
        }

        let mut boundary: Vec<Vec<bool>> = (0..=dim).map(|k| vec![false; simplices[k].len() / (k + 1)]).collect();
        for (f, cof) in facet_cofaces.iter().enumerate() {
            if cof.len() == 1 {
                let verts: Vec<usize> = simplices[dim - 1][f * dim..(f + 1) * dim].to_vec();
                boundary[dim - 1][f] = true;
                for k in 0..dim - 1 {
                    for_each_subset(&verts, k + 1, |s| {
                        let idx = if k == 0 { s[0] } else { lookup[k][&key_of(s)] };
                        boundary[k][idx] = true;
                    });
                }
            }
        }

        let mut mesh = SimplicialMesh {
            dim,
            ambient_dim,
            vertices,
            period,
            simplices,
            top_orientation,
            faces,
            facet_cofaces,
            boundary,
            volumes: Vec::new(),
            lookup,
            parent_vertices: None,
        };
        mesh.volumes = (0..=dim)
            .map(|k| (0..mesh.n_simplices(k)).map(|i| mesh.unsigned_volume(k, i)).collect())
            .collect();
        Ok(mesh)
    }

    fn check_geometric_orientation(&self) -> Result<()> {
        for t in 0..self.n_simplices(self.dim) {
            let signed = self.top_orientation[t] as f64 * self.sorted_det(t);
            let vol = signed / factorial(self.dim);
            if vol <= 0.0 || !vol.is_finite() {
                return Err(Error::DegenerateSimplex {
                    dim: self.dim,
                    index: t,
                    volume: vol,
                });
            }
        }
        Ok(())
    }

    /// Determinant of the edge vectors of top simplex `t` in sorted vertex order.
    fn sorted_det(&self, t: usize) -> f64 {
        let pts = self.simplex_points(self.dim, t);
        let e: Vec<Point> = pts[1..].iter().map(|p| sub3(p, &pts[0])).collect();
        match self.dim {
            2 => e[0][0] * e[1][1] - e[0][1] * e[1][0],
            3 => det3(&e[0], &e[1], &e[2]),
            _ => f64::NAN,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_simplices(&self, k: usize) -> usize {
        if k > self.dim {
            return 0;
        }
        self.simplices[k].len() / (k + 1)
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn period(&self) -> Option<Point> {
        self.period
    }

    /// Sorted vertex tuple of simplex `i` of dimension `k`.
    pub fn simplex(&self, k: usize, i: usize) -> &[usize] {
        &self.simplices[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    /// Index of face `j` (local vertex `j` omitted) of simplex `i` of dimension `k >= 1`.
    pub fn face(&self, k: usize, i: usize, j: usize) -> usize {
        self.faces[k][i * (k + 1) + j]
    }

    pub fn faces_of(&self, k: usize, i: usize) -> &[usize] {
        &self.faces[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn top_orientation(&self, t: usize) -> i8 {
        self.top_orientation[t]
    }

    pub fn facet_cofaces(&self, f: usize) -> &[usize] {
        &self.facet_cofaces[f]
    }

    pub fn is_boundary(&self, k: usize, i: usize) -> bool {
        k < self.dim && self.boundary[k][i]
    }

    pub fn boundary_marker(&self, k: usize) -> &[bool] {
        &self.boundary[k]
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_simplices(self.dim - 1)).filter(move |&f| self.boundary[self.dim - 1][f])
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.boundary[0][v]).collect()
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary[self.dim - 1].iter().any(|&b| b)
    }

    /// Index of the simplex with the given sorted vertex tuple.
    pub fn simplex_index(&self, sorted: &[usize]) -> Option<usize> {
        let k = sorted.len().checked_sub(1)?;
        if k > self.dim {
            return None;
        }
        if k == 0 {
            return (sorted[0] < self.n_vertices()).then_some(sorted[0]);
        }
        self.lookup[k].get(&key_of(sorted)).copied()
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.simplex_index(&[lo, hi])
    }

    /// Displacement from vertex `a` to vertex `b`, using the minimum image on periodic axes.
    pub fn displacement(&self, a: usize, b: usize) -> Point {
        self.unwrap(sub3(&self.vertices[b], &self.vertices[a]))
    }

    fn unwrap(&self, mut d: Point) -> Point {
        if let Some(per) = self.period {
            for ax in 0..3 {
                if per[ax] > 0.0 {
                    d[ax] -= per[ax] * (d[ax] / per[ax]).round();
                }
            }
        }
        d
    }

    /// Vertex coordinates of a simplex, unwrapped relative to its first vertex.
    pub fn simplex_points(&self, k: usize, i: usize) -> Vec<Point> {
        let s = self.simplex(k, i);
        let p0 = self.vertices[s[0]];
        s.iter()
            .map(|&v| {
                let d = self.displacement(s[0], v);
                [p0[0] + d[0], p0[1] + d[1], p0[2] + d[2]]
            })
            .collect()
    }

    pub fn barycenter(&self, k: usize, i: usize) -> Point {
        let pts = self.simplex_points(k, i);
        let n = pts.len() as f64;
        let mut c = [0.0; 3];
        for p in &pts {
            for ax in 0..3 {
                c[ax] += p[ax] / n;
            }
        }
        c
    }

    fn unsigned_volume(&self, k: usize, i: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let pts = self.simplex_points(k, i);
        let e: Vec<Point> = pts[1..].iter().map(|p| sub3(p, &pts[0])).collect();
        let mut gram = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..k {
                gram[a][b] = dot3(&e[a], &e[b]);
            }
        }
        det_small(&gram).max(0.0).sqrt() / factorial(k)
    }

    /// k-dimensional volume of a simplex (1 for vertices).
    pub fn volume(&self, k: usize, i: usize) -> f64 {
        self.volumes[k][i]
    }

    pub fn volumes(&self, k: usize) -> &[f64] {
        &self.volumes[k]
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes[self.dim].iter().sum()
    }

    pub fn boundary_volume(&self) -> f64 {
        self.boundary_facets().map(|f| self.volumes[self.dim - 1][f]).sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.volumes[1][e]
    }

    pub fn max_edge_length(&self) -> f64 {
        self.volumes[1].iter().fold(0.0f64, |m, &v| m.max(v))
    }

    /// Largest cell size `(n! |T|)^{1/n}` over top simplices: the side of a cube
    /// split into `n!` simplices of that volume (the grid step of a Kuhn mesh).
    pub fn mesh_width(&self) -> f64 {
        let n = self.dim;
        let f = factorial(n);
        self.volumes[n]
            .iter()
            .fold(0.0f64, |m, &v| m.max((f * v).powf(1.0 / n as f64)))
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|k| {
                let n = self.n_simplices(k) as i64;
                if k % 2 == 0 {
                    n
                } else {
                    -n
                }
            })
            .sum()
    }

    /// Longest edge over smallest altitude, maximized over top simplices.
    pub fn max_aspect_ratio(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for t in 0..self.n_simplices(n) {
            let s = self.simplex(n, t);
            let mut longest = 0.0f64;
            for a in 0..=n {
                for b in a + 1..=n {
                    let e = self.edge_index(s[a], s[b]).unwrap();
                    longest = longest.max(self.edge_length(e));
                }
            }
            let max_facet = self
                .faces_of(n, t)
                .iter()
                .map(|&f| self.volume(n - 1, f))
                .fold(0.0f64, f64::max);
            let altitude = n as f64 * self.volume(n, t) / max_facet;
            worst = worst.max(longest / altitude);
        }
        worst
    }

    /// Number of connected components of the vertex-edge graph.
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_vertices()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in 0..self.n_simplices(1) {
            let s = self.simplex(1, e);
            let (a, b) = (find(&mut parent, s[0]), find(&mut parent, s[1]));
            if a != b {
                parent[a] = b;
            }
        }
        (0..self.n_vertices()).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// Parent-mesh vertex indices, for meshes produced by [`SimplicialMesh::boundary_complex`].
    pub fn parent_vertices(&self) -> Option<&[usize]> {
        self.parent_vertices.as_deref()
    }

    /// The closed `(dim - 1)`-complex of boundary facets with the induced
    /// (outward-normal-first) orientation. Empty for closed meshes.
    pub fn boundary_complex(&self) -> SimplicialMesh {
        let n = self.dim;
        let facets: Vec<usize> = self.boundary_facets().collect();
        let mut new_index = vec![usize::MAX; self.n_vertices()];
        let mut parent = Vec::new();
        for &f in &facets {
            for &v in self.simplex(n - 1, f) {
                if new_index[v] == usize::MAX {
                    new_index[v] = parent.len();
                    parent.push(v);
                }
            }
        }
        let tops: Vec<(Vec<usize>, i8)> = facets
            .iter()
            .map(|&f| {
                let t = self.facet_cofaces[f][0];
                let j = self.faces_of(n, t).iter().position(|&x| x == f).unwrap();
                let sign = self.top_orientation[t] * if j % 2 == 0 { 1 } else { -1 };
                let verts = self.simplex(n - 1, f).iter().map(|&v| new_index[v]).collect();
                (verts, sign)
            })
            .collect();
        let vertices = parent.iter().map(|&v| self.vertices[v]).collect();
        let mut out = if n - 1 == 0 {
            // boundary of a 1-complex; not produced by the supported dimensions
            unreachable!("boundary complex of a curve")
        } else {
            Self::build(n - 1, self.ambient_dim, vertices, self.period, &tops)
                .expect("boundary of a valid mesh is a valid closed complex")
        };
        out.parent_vertices = Some(parent);
        out
    }
}

fn sort_with_parity(verts: &[usize]) -> (Vec<usize>, i8) {
    let mut v = verts.to_vec();
    let mut parity = 1i8;
    // insertion sort, counting swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            parity = -parity;
            j -= 1;
        }
    }
    (v, parity)
}

/// Calls `f` on every `size`-subset of `verts`, preserving order.
pub(crate) fn for_each_subset(verts: &[usize], size: usize, mut f: impl FnMut(&[usize])) {
    let n = verts.len();
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let mut buf = vec![0usize; size];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = verts[i];
        }
        f(&buf);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 && idx[0] == n - size {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

pub(crate) fn sub3(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: &Point) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn det3(a: &Point, b: &Point, c: &Point) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Determinant of a small square matrix by Gaussian elimination with partial pivoting.
pub(crate) fn det_small(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> SimplicialMesh {
        SimplicialMesh::from_top_simplices(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            None,
            &[(vec![0, 1, 2], 1)],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_structure() {
        let m = unit_triangle();
        assert_eq!(m.n_simplices(0), 3);
        assert_eq!(m.n_simplices(1), 3);
        assert_eq!(m.n_simplices(2), 1);
        assert!((m.volume(2, 0) - 0.5).abs() < 1e-15);
        assert_eq!(m.euler_characteristic(), 1);
        // face j omits local vertex j
        assert_eq!(m.simplex(1, m.face(2, 0, 0)), &[1, 2]);
        assert_eq!(m.simplex(1, m.face(2, 0, 2)), &[0, 1]);
        assert!((0..3).all(|e| m.is_boundary(1, e)));
    }

    #[test]
    fn rejects_inverted_and_inconsistent_orientation() {
        let verts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let err = SimplicialMesh::from_top_simplices(2, verts[..3].to_vec(), None, &[(vec![0, 2, 1], 1)]);
        assert!(matches!(err, Err(Error::DegenerateSimplex { .. })));
        let ok = SimplicialMesh::from_top_simplices(2, verts.clone(), None, &[(vec![0, 1, 3], 1), (vec![0, 3, 2], 1)]);
        assert!(ok.is_ok());
        let bad = SimplicialMesh::from_top_simplices(2, verts, None, &[(vec![0, 1, 3], 1), (vec![0, 2, 3], 1)]);
        assert!(bad.is_err());
    }

    #[test]
    fn subsets_enumerate_in_order() {
        let mut out = Vec::new();
        for_each_subset(&[4, 5, 6, 7], 2, |s| out.push(s.to_vec()));
        assert_eq!(out, vec![vec![4, 5], vec![4, 6], vec![4, 7], vec![5, 6], vec![5, 7], vec![6, 7]]);
        let mut all = 0;
        for_each_subset(&[1, 2, 3], 3, |_| all += 1);
        assert_eq!(all, 1);
    }

    #[test]
    fn small_determinants() {
        assert!((det_small(&[vec![2.0, 1.0], vec![1.0, 3.0]]) - 5.0).abs() < 1e-14);
        assert_eq!(det_small(&[]), 1.0);
    }
}
