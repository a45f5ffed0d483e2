//! Discrete twisted exterior calculus on Whitney forms.
//!
//! A degree-`p` cochain with values in a rank-`r` bundle stores `r` numbers
//! per `p`-simplex, expressed in the fiber at the simplex's first (smallest)
//! vertex. Global DOF `i * r + a` is component `a` on simplex `i`.

mod bundle;
mod laplacian;
mod norms;
pub mod whitney;

pub use bundle::{build_flat_bundle, BundleSpec, FlatBundle, FLATNESS_TOL, ORTHOGONALITY_TOL};
pub(crate) use bundle::small;
pub use laplacian::{hodge_laplacian, HodgeLaplacian, LaplaceSolver};
pub use norms::{lq_norm, FormEvaluator, NormDomain};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SpdSolver};
use crate::mesh::SimplicialMesh;
use whitney::{local_faces, SimplexGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Tangential trace zero: DOFs on boundary simplices are removed.
    Dirichlet,
    /// Natural Galerkin condition: all DOFs kept.
    Neumann,
}

/// A bundle-valued `p`-cochain.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub rank: usize,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(mesh: &SimplicialMesh, degree: usize, rank: usize) -> Self {
        Cochain {
            degree,
            rank,
            values: vec![0.0; mesh.n_simplices(degree) * rank],
        }
    }

    pub fn from_values(mesh: &SimplicialMesh, degree: usize, rank: usize, values: Vec<f64>) -> Result<Self> {
        check_degree(mesh, degree)?;
        let expected = mesh.n_simplices(degree) * rank;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a degree-{degree} rank-{rank} cochain, expected {expected}",
                values.len()
            )));
        }
        Ok(Cochain { degree, rank, values })
    }

    /// Fiber vector on simplex `i`.
    pub fn get(&self, i: usize) -> &[f64] {
        &self.values[i * self.rank..(i + 1) * self.rank]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Row or column space of an assembled operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub degree: usize,
    pub rank: usize,
    pub bc: BoundaryCondition,
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub rows: Signature,
    pub cols: Signature,
    pub matrix: CsrMatrix,
}

impl OperatorMatrix {
    /// Restricts rows and columns to the DOFs kept by their boundary conditions.
    pub fn restrict(&self, mesh: &SimplicialMesh, row_bc: BoundaryCondition, col_bc: BoundaryCondition) -> OperatorMatrix {
        let rows = free_dofs(mesh, self.rows.degree, self.rows.rank, row_bc);
        let cols = free_dofs(mesh, self.cols.degree, self.cols.rank, col_bc);
        OperatorMatrix {
            rows: Signature { bc: row_bc, ..self.rows },
            cols: Signature { bc: col_bc, ..self.cols },
            matrix: self.matrix.select(&rows, &cols),
        }
    }
}

pub(crate) fn check_degree(mesh: &SimplicialMesh, p: usize) -> Result<()> {
    if p > mesh.dim() {
        Err(Error::DegreeOutOfRange { degree: p, dim: mesh.dim() })
    } else {
        Ok(())
    }
}

/// Global DOFs kept under a boundary condition, in increasing order.
pub fn free_dofs(mesh: &SimplicialMesh, p: usize, rank: usize, bc: BoundaryCondition) -> Vec<usize> {
    (0..mesh.n_simplices(p))
        .filter(|&i| bc == BoundaryCondition::Neumann || !mesh.is_boundary(p, i))
        .flat_map(|i| (0..rank).map(move |a| i * rank + a))
        .collect()
}

/// Twisted coboundary from degree `p` to `p + 1`.
pub fn exterior_derivative(mesh: &SimplicialMesh, p: usize, bundle: &FlatBundle) -> Result<OperatorMatrix> {
    if p >= mesh.dim() {
        return Err(Error::DegreeOutOfRange { degree: p, dim: mesh.dim() });
    }
    let r = bundle.rank();
    let q = p + 1;
    let mut trips = Vec::with_capacity(mesh.n_simplices(q) * (q + 1) * r * r);
    for t in 0..mesh.n_simplices(q) {
        let verts = mesh.simplex(q, t);
        for j in 0..=q {
            let f = mesh.face(q, t, j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 && !bundle.is_trivial() {
                // face 0 lives in the fiber at verts[1]; carry it to verts[0]
                let u = bundle.transport(mesh, verts[1], verts[0]);
                for a in 0..r {
                    for b in 0..r {
                        if u[a * r + b] != 0.0 {
                            trips.push((t * r + a, f * r + b, sign * u[a * r + b]));
                        }
                    }
                }
            } else {
                for a in 0..r {
                    trips.push((t * r + a, f * r + a, sign));
                }
            }
        }
    }
    let sig = |degree| Signature {
        degree,
        rank: r,
        bc: BoundaryCondition::Neumann,
    };
    Ok(OperatorMatrix {
        rows: sig(q),
        cols: sig(p),
        matrix: CsrMatrix::from_triplets(mesh.n_simplices(q) * r, mesh.n_simplices(p) * r, &trips),
    })
}

/// Whitney mass matrix on `p`-cochains. Off-diagonal blocks carry the fiber
/// transport between the base vertices of the two simplices.
pub fn mass_matrix(mesh: &SimplicialMesh, p: usize, bundle: &FlatBundle) -> Result<OperatorMatrix> {
    check_degree(mesh, p)?;
    let n = mesh.dim();
    let r = bundle.rank();
    let faces = local_faces(n, p);
    let nf = faces.len();
    let mut trips = Vec::with_capacity(mesh.n_simplices(n) * nf * nf * r * r);
    let mut global = vec![0usize; nf];
    let mut base = vec![0usize; nf];
    for t in 0..mesh.n_simplices(n) {
        let vol = mesh.volume(n, t);
        if vol <= 0.0 {
            return Err(Error::DegenerateSimplex { dim: n, index: t, volume: vol });
        }
        let geom = SimplexGeometry::new(&mesh.simplex_points(n, t), vol);
        let (_, local) = geom.local_mass(p);
        let verts = mesh.simplex(n, t);
        let mut buf = Vec::with_capacity(p + 1);
        for (i, f) in faces.iter().enumerate() {
            buf.clear();
            buf.extend(f.iter().map(|&l| verts[l]));
            global[i] = mesh.simplex_index(&buf).expect("face of a top simplex");
            base[i] = buf[0];
        }
        let transports: Option<Vec<Vec<f64>>> = (!bundle.is_trivial())
            .then(|| base.iter().map(|&v| bundle.transport(mesh, v, verts[0])).collect());
        for i in 0..nf {
            for j in 0..nf {
                let m = local[i * nf + j];
                match &transports {
                    None => {
                        for a in 0..r {
                            trips.push((global[i] * r + a, global[j] * r + a, m));
                        }
                    }
                    Some(tr) => {
                        let block = small::mul(&small::transpose(&tr[i], r), &tr[j], r);
                        for a in 0..r {
                            for b in 0..r {
                                trips.push((global[i] * r + a, global[j] * r + b, m * block[a * r + b]));
                            }
                        }
                    }
                }
            }
        }
    }
    let sig = Signature {
        degree: p,
        rank: r,
        bc: BoundaryCondition::Neumann,
    };
    let size = mesh.n_simplices(p) * r;
    Ok(OperatorMatrix {
        rows: sig,
        cols: sig,
        matrix: CsrMatrix::from_triplets(size, size, &trips),
    })
}

/// `d* = M_p^{-1} d^T M_{p+1}`, kept in factorized form.
pub struct Codifferential {
    dt_m: CsrMatrix,
    mass: SpdSolver,
}

impl Codifferential {
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.dt_m.mul_vec(b);
        self.mass.solve_in_place(&mut x);
        x
    }

    pub fn nrows(&self) -> usize {
        self.dt_m.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.dt_m.ncols()
    }
}

pub fn codifferential(d: &OperatorMatrix, m_p: &OperatorMatrix, m_p1: &OperatorMatrix) -> Result<Codifferential> {
    let dm = &d.matrix;
    if m_p.matrix.nrows() != dm.ncols() || m_p.matrix.ncols() != dm.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "M_p is {}x{} but d has {} columns",
            m_p.matrix.nrows(),
            m_p.matrix.ncols(),
            dm.ncols()
        )));
    }
    if m_p1.matrix.nrows() != dm.nrows() || m_p1.matrix.ncols() != dm.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "M_(p+1) is {}x{} but d has {} rows",
            m_p1.matrix.nrows(),
            m_p1.matrix.ncols(),
            dm.nrows()
        )));
    }
    let dt_m = dm.transpose().matmul(&m_p1.matrix);
    let mass = SpdSolver::new(&m_p.matrix)?;
    Ok(Codifferential { dt_m, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, generalized_eigen};
    use crate::mesh::{generate_mesh, MeshShape};

    fn triangle() -> SimplicialMesh {
        SimplicialMesh::from_top_simplices(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            None,
            &[(vec![0, 1, 2], 1)],
        )
        .unwrap()
    }

    #[test]
    fn coboundary_of_single_triangle() {
        let m = triangle();
        let b = FlatBundle::trivial(&m, 1);
        let d0 = exterior_derivative(&m, 0, &b).unwrap().matrix;
        // edges sorted: (0,1), (0,2), (1,2)
        assert_eq!((d0.get(0, 0), d0.get(0, 1), d0.get(0, 2)), (-1.0, 1.0, 0.0));
        assert_eq!((d0.get(2, 1), d0.get(2, 2)), (-1.0, 1.0));
        let d1 = exterior_derivative(&m, 1, &b).unwrap().matrix;
        assert_eq!(d1.matmul(&d0).max_abs(), 0.0);
        assert!(matches!(exterior_derivative(&m, 2, &b), Err(Error::DegreeOutOfRange { .. })));
    }

    #[test]
    fn mass_matrices_on_unit_triangle() {
        let m = triangle();
        let b = FlatBundle::trivial(&m, 1);
        let m0 = mass_matrix(&m, 0, &b).unwrap().matrix;
        assert!((m0.values().iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let m2 = mass_matrix(&m, 2, &b).unwrap().matrix;
        assert!((m2.get(0, 0) - 2.0).abs() < 1e-14);
        // smallest eigenvalue positive for every degree
        for p in 0..=2 {
            let mp = mass_matrix(&m, p, &b).unwrap().matrix.to_dense();
            let id = CsrMatrix::identity(mp.nrows()).to_dense();
            let (vals, _) = generalized_eigen(&mp, &id).unwrap();
            assert!(vals[0] > 0.0);
        }
    }

    #[test]
    fn scalar_mass_row_sums_are_vertex_volumes() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 4).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        let m0 = mass_matrix(&m, 0, &b).unwrap().matrix;
        let mut bary = vec![0.0; m.n_vertices()];
        for t in 0..m.n_simplices(2) {
            for &v in m.simplex(2, t) {
                bary[v] += m.volume(2, t) / 3.0;
            }
        }
        let sums = m0.mul_vec(&vec![1.0; m.n_vertices()]);
        for (a, b) in sums.iter().zip(&bary) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn twisted_derivative_squares_to_zero() {
        let m = generate_mesh(&MeshShape::Annulus { r_in: 0.5, r_out: 1.0 }, 6).unwrap();
        for spec in [BundleSpec::RotationAngle(vec![0.9]), BundleSpec::RandomFlat(3)] {
            let b = build_flat_bundle(&m, 2, &spec).unwrap();
            let d0 = exterior_derivative(&m, 0, &b).unwrap().matrix;
            let d1 = exterior_derivative(&m, 1, &b).unwrap().matrix;
            assert!(d1.matmul(&d0).max_abs() <= 1e-10);
        }
    }

    #[test]
    fn codifferential_is_adjoint() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 5).unwrap();
        let b = build_flat_bundle(&m, 2, &BundleSpec::RandomFlat(11)).unwrap();
        let mut rng = crate::rng::SeededRng::new(5);
        for p in 0..2 {
            let d = exterior_derivative(&m, p, &b).unwrap();
            let mp = mass_matrix(&m, p, &b).unwrap();
            let mp1 = mass_matrix(&m, p + 1, &b).unwrap();
            let ds = codifferential(&d, &mp, &mp1).unwrap();
            for _ in 0..10 {
                let a = rng.normal_vec(d.matrix.ncols());
                let c = rng.normal_vec(d.matrix.nrows());
                let lhs = dot(&d.matrix.mul_vec(&a), &mp1.matrix.mul_vec(&c));
                let rhs = dot(&a, &mp.matrix.mul_vec(&ds.apply(&c)));
                let scale = dot(&a, &mp.matrix.mul_vec(&a)).sqrt() * dot(&c, &mp1.matrix.mul_vec(&c)).sqrt();
                assert!((lhs - rhs).abs() <= 1e-10 * scale);
            }
        }
        let d = exterior_derivative(&m, 0, &b).unwrap();
        let m0 = mass_matrix(&m, 0, &b).unwrap();
        assert!(matches!(codifferential(&d, &m0, &m0), Err(Error::ShapeMismatch(_))));
    }
}
