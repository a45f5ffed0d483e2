use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::rng::SeededRng;

/// How to build edge transports.
#[derive(Clone, Debug, PartialEq)]
pub enum BundleSpec {
    Trivial,
    /// Rotation of the first two fiber coordinates by the given angle per
    /// generator loop. Periodic meshes have one generator per periodic axis;
    /// other meshes a single generator winding around the coordinate origin.
    RotationAngle(Vec<f64>),
    /// Pure gauge `U(a -> b) = g_b g_a^T` with random orthogonal `g_v`.
    RandomFlat(u64),
}

/// Tolerance on `|Q^T Q - I|` for every transport.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Tolerance on triangle holonomy.
pub const FLATNESS_TOL: f64 = 1e-10;

/// Rank-`r` orthogonal parallel transport on the oriented edges of a mesh.
#[derive(Clone, Debug)]
pub struct FlatBundle {
    rank: usize,
    trivial: bool,
    /// Row-major `r x r` matrix per edge, mapping the fiber at the edge's first
    /// (smaller) vertex to the fiber at its second.
    transports: Vec<f64>,
}

/// Small dense row-major square matrix helpers.
pub(crate) mod small {
    pub fn identity(r: usize) -> Vec<f64> {
        let mut m = vec![0.0; r * r];
        for i in 0..r {
            m[i * r + i] = 1.0;
        }
        m
    }

    pub fn mul(a: &[f64], b: &[f64], r: usize) -> Vec<f64> {
        let mut c = vec![0.0; r * r];
        for i in 0..r {
            for k in 0..r {
                let aik = a[i * r + k];
                for j in 0..r {
                    c[i * r + j] += aik * b[k * r + j];
                }
            }
        }
        c
    }

    pub fn transpose(a: &[f64], r: usize) -> Vec<f64> {
        let mut t = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                t[j * r + i] = a[i * r + j];
            }
        }
        t
    }

    pub fn apply(a: &[f64], x: &[f64], r: usize) -> Vec<f64> {
        (0..r).map(|i| (0..r).map(|j| a[i * r + j] * x[j]).sum()).collect()
    }

    pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }
}

impl FlatBundle {
    pub fn trivial(mesh: &SimplicialMesh, rank: usize) -> Self {
        let id = small::identity(rank);
        FlatBundle {
            rank,
            trivial: true,
            transports: id.repeat(mesh.n_simplices(1)),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    /// Transport matrix on edge `e` in its reference direction.
    pub fn edge_transport(&self, e: usize) -> &[f64] {
        let rr = self.rank * self.rank;
        &self.transports[e * rr..(e + 1) * rr]
    }

    /// Matrix carrying the fiber at vertex `a` to the fiber at vertex `b`
    /// along the edge `{a, b}` (identity when `a == b`).
    pub fn transport(&self, mesh: &SimplicialMesh, a: usize, b: usize) -> Vec<f64> {
        if a == b || self.trivial {
            return small::identity(self.rank);
        }
        let e = mesh.edge_index(a, b).expect("transport along a non-edge");
        let q = self.edge_transport(e);
        if a < b {
            q.to_vec()
        } else {
            small::transpose(q, self.rank)
        }
    }

    /// Ordered product of transports along a vertex path.
    pub fn path_holonomy(&self, mesh: &SimplicialMesh, path: &[usize]) -> Vec<f64> {
        let mut h = small::identity(self.rank);
        for w in path.windows(2) {
            h = small::mul(&self.transport(mesh, w[0], w[1]), &h, self.rank);
        }
        h
    }

    /// Largest `|Q^T Q - I|` entry over all edges.
    pub fn orthogonality_defect(&self) -> f64 {
        let r = self.rank;
        let id = small::identity(r);
        self.transports
            .chunks_exact(r * r)
            .map(|q| small::max_diff(&small::mul(&small::transpose(q, r), q, r), &id))
            .fold(0.0, f64::max)
    }

    /// Largest holonomy defect around a triangle, with its index.
    pub fn flatness_defect(&self, mesh: &SimplicialMesh) -> (usize, f64) {
        let id = small::identity(self.rank);
        let mut worst = (0, 0.0);
        for t in 0..mesh.n_simplices(2) {
            let s = mesh.simplex(2, t);
            let h = self.path_holonomy(mesh, &[s[0], s[1], s[2], s[0]]);
            let defect = small::max_diff(&h, &id);
            if defect > worst.1 {
                worst = (t, defect);
            }
        }
        worst
    }
}

pub fn build_flat_bundle(mesh: &SimplicialMesh, rank: usize, spec: &BundleSpec) -> Result<FlatBundle> {
    if rank == 0 {
        return Err(Error::InvalidParams("bundle rank must be at least 1".into()));
    }
    let ne = mesh.n_simplices(1);
    let bundle = match spec {
        BundleSpec::Trivial => return Ok(FlatBundle::trivial(mesh, rank)),
        BundleSpec::RotationAngle(angles) => {
            if rank < 2 {
                return Err(Error::InvalidParams("rotation transports need rank >= 2".into()));
            }
            let windings = generator_windings(mesh);
            if angles.len() != windings.len() {
                return Err(Error::InvalidParams(format!(
                    "mesh has {} generator loops, {} angles given",
                    windings.len(),
                    angles.len()
                )));
            }
            let mut transports = Vec::with_capacity(ne * rank * rank);
            for e in 0..ne {
                let phase: f64 = windings.iter().zip(angles).map(|(w, a)| w[e] * a).sum();
                let mut q = small::identity(rank);
                let (c, s) = (phase.cos(), phase.sin());
                q[0] = c;
                q[1] = -s;
                q[rank] = s;
                q[rank + 1] = c;
                transports.extend(q);
            }
            FlatBundle {
                rank,
                trivial: false,
                transports,
            }
        }
        BundleSpec::RandomFlat(seed) => {
            let mut rng = SeededRng::stream(*seed, 0xB0D1E);
            let gauge: Vec<Vec<f64>> = (0..mesh.n_vertices()).map(|_| random_orthogonal(&mut rng, rank)).collect();
            let mut transports = Vec::with_capacity(ne * rank * rank);
            for e in 0..ne {
                let s = mesh.simplex(1, e);
                transports.extend(small::mul(&gauge[s[1]], &small::transpose(&gauge[s[0]], rank), rank));
            }
            FlatBundle {
                rank,
                trivial: false,
                transports,
            }
        }
    };
    let orth = bundle.orthogonality_defect();
    if orth > ORTHOGONALITY_TOL {
        return Err(Error::InvalidParams(format!("transport not orthogonal (defect {orth:.3e})")));
    }
    let (simplex, defect) = bundle.flatness_defect(mesh);
    if defect > FLATNESS_TOL {
        return Err(Error::FlatnessViolation { simplex, defect });
    }
    Ok(bundle)
}

/// Edge cochains counting how far each edge winds around the generator loops.
fn generator_windings(mesh: &SimplicialMesh) -> Vec<Vec<f64>> {
    let ne = mesh.n_simplices(1);
    if let Some(period) = mesh.period() {
        (0..3)
            .filter(|&ax| period[ax] > 0.0)
            .map(|ax| {
                (0..ne)
                    .map(|e| {
                        let s = mesh.simplex(1, e);
                        mesh.displacement(s[0], s[1])[ax] / period[ax]
                    })
                    .collect()
            })
            .collect()
    } else {
        let w = (0..ne)
            .map(|e| {
                let s = mesh.simplex(1, e);
                let (a, b) = (mesh.vertex(s[0]), mesh.vertex(s[1]));
                let mut d = b[1].atan2(b[0]) - a[1].atan2(a[0]);
                if d > PI {
                    d -= 2.0 * PI;
                } else if d < -PI {
                    d += 2.0 * PI;
                }
                d / (2.0 * PI)
            })
            .collect();
        vec![w]
    }
}

/// Haar-distributed orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
fn random_orthogonal(rng: &mut SeededRng, r: usize) -> Vec<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..r).map(|_| rng.normal_vec(r)).collect();
        let mut ok = true;
        for i in 0..r {
            for j in 0..i {
                let c: f64 = (0..r).map(|k| cols[i][k] * cols[j][k]).sum();
                for k in 0..r {
                    cols[i][k] -= c * cols[j][k];
                }
            }
            let n: f64 = cols[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            cols[i].iter_mut().for_each(|x| *x /= n);
        }
        if ok {
            let mut q = vec![0.0; r * r];
            for (j, col) in cols.iter().enumerate() {
                for i in 0..r {
                    q[i * r + j] = col[i];
                }
            }
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshShape};

    #[test]
    fn trivial_transports_are_identity() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 3).unwrap();
        let b = build_flat_bundle(&m, 1, &BundleSpec::Trivial).unwrap();
        assert!((0..m.n_simplices(1)).all(|e| b.edge_transport(e) == [1.0]));
    }

    #[test]
    fn random_gauge_is_flat() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 6).unwrap();
        let b = build_flat_bundle(&m, 2, &BundleSpec::RandomFlat(7)).unwrap();
        let id = small::identity(2);
        for t in 0..m.n_simplices(2) {
            let s = m.simplex(2, t);
            // brute force product of the three edge transports
            let q01 = b.transport(&m, s[0], s[1]);
            let q12 = b.transport(&m, s[1], s[2]);
            let q20 = b.transport(&m, s[2], s[0]);
            let h = small::mul(&q20, &small::mul(&q12, &q01, 2), 2);
            assert!(small::max_diff(&h, &id) < 1e-10);
        }
    }

    #[test]
    fn annulus_rotation_has_loop_holonomy() {
        let m = generate_mesh(&MeshShape::Annulus { r_in: 0.5, r_out: 1.0 }, 8).unwrap();
        let theta = PI / 3.0;
        let b = build_flat_bundle(&m, 2, &BundleSpec::RotationAngle(vec![theta])).unwrap();
        // inner boundary ring, walked counterclockwise
        let mut ring: Vec<usize> = m
            .boundary_vertices()
            .into_iter()
            .filter(|&v| (m.vertex(v)[0].hypot(m.vertex(v)[1]) - 0.5).abs() < 1e-9)
            .collect();
        ring.sort_by(|&a, &b| {
            let ta = m.vertex(a)[1].atan2(m.vertex(a)[0]);
            let tb = m.vertex(b)[1].atan2(m.vertex(b)[0]);
            ta.total_cmp(&tb)
        });
        ring.push(ring[0]);
        let h = b.path_holonomy(&m, &ring);
        let expected = [theta.cos(), -theta.sin(), theta.sin(), theta.cos()];
        assert!(small::max_diff(&h, &expected) < 1e-10, "{h:?}");
    }

    #[test]
    fn rotation_on_disk_is_not_flat() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 4).unwrap();
        let err = build_flat_bundle(&m, 2, &BundleSpec::RotationAngle(vec![1.0]));
        assert!(matches!(err, Err(Error::FlatnessViolation { .. })));
        assert!(build_flat_bundle(&m, 1, &BundleSpec::RotationAngle(vec![1.0])).is_err());
    }

    #[test]
    fn torus_rotation_per_axis() {
        let m = generate_mesh(&MeshShape::Torus2d { side: 1.0 }, 5).unwrap();
        let b = build_flat_bundle(&m, 3, &BundleSpec::RotationAngle(vec![0.4, -1.1])).unwrap();
        // walk once around the x direction along the bottom row
        let path: Vec<usize> = (0..=5).map(|i| i % 5).collect();
        let h = b.path_holonomy(&m, &path);
        assert!((h[0] - 0.4f64.cos()).abs() < 1e-12);
        assert!((h[8] - 1.0).abs() < 1e-12);
    }
}
