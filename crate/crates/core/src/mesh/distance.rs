use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimplicialMesh;
use crate::error::{Error, Result};

/// Shortest-path distance along mesh edges from a set of source vertices.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub sources: Vec<usize>,
    pub values: Vec<f64>,
}

impl DistanceField {
    pub fn get(&self, v: usize) -> f64 {
        self.values[v]
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the edge graph with Euclidean edge lengths.
pub fn distance_field(mesh: &SimplicialMesh, sources: &[usize]) -> Result<DistanceField> {
    if sources.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    let nv = mesh.n_vertices();
    if let Some(&s) = sources.iter().find(|&&s| s >= nv) {
        return Err(Error::InvalidParams(format!("source vertex {s} out of range")));
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    for e in 0..mesh.n_simplices(1) {
        let s = mesh.simplex(1, e);
        let len = mesh.edge_length(e);
        adj[s[0]].push((s[1], len));
        adj[s[1]].push((s[0], len));
    }
    let mut dist = vec![f64::INFINITY; nv];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry(0.0, s));
    }
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    let mut sources = sources.to_vec();
    sources.sort_unstable();
    sources.dedup();
    Ok(DistanceField { sources, values: dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshShape};

    fn unit_grid(n: usize) -> SimplicialMesh {
        let h = 1.0 / n as f64;
        let m = n + 1;
        let verts = (0..m * m).map(|k| [(k % m) as f64 * h, (k / m) as f64 * h, 0.0]).collect();
        let mut tops = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let a = j * m + i;
                tops.push((vec![a, a + 1, a + m + 1], 1));
                tops.push((vec![a, a + m + 1, a + m], 1));
            }
        }
        SimplicialMesh::from_top_simplices(2, verts, None, &tops).unwrap()
    }

    /// Floyd-Warshall on the edge graph.
    fn all_pairs(mesh: &SimplicialMesh) -> Vec<Vec<f64>> {
        let n = mesh.n_vertices();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in 0..mesh.n_simplices(1) {
            let s = mesh.simplex(1, e);
            d[s[0]][s[1]] = mesh.edge_length(e);
            d[s[1]][s[0]] = mesh.edge_length(e);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn grid_corner_to_corner() {
        let m = unit_grid(2);
        let f = distance_field(&m, &[0]).unwrap();
        let far = f.get(8);
        assert!((2f64.sqrt()..=2.0).contains(&far));
        let oracle = all_pairs(&m);
        for v in 0..m.n_vertices() {
            assert!((f.get(v) - oracle[0][v]).abs() < 1e-14);
        }
    }

    #[test]
    fn all_sources_give_zero() {
        let m = unit_grid(3);
        let all: Vec<usize> = (0..m.n_vertices()).collect();
        assert!(distance_field(&m, &all).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(matches!(distance_field(&m, &[]), Err(Error::EmptySourceSet)));
    }

    #[test]
    fn disk_center_to_boundary() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 16).unwrap();
        let f = distance_field(&m, &m.boundary_vertices()).unwrap();
        assert!(m.vertex(0) == [0.0, 0.0, 0.0]);
        assert!((1.0..=1.3).contains(&f.get(0)), "{}", f.get(0));
    }
}
