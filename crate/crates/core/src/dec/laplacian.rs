//! Hodge Laplacian `Δ_p = d d* + d* d` in mixed form.
//!
//! With `K = d_p^T M_{p+1} d_p` and `B = M_p d_{p-1}`, the weak Laplacian is
//! `M Δ = K + B M_{p-1}^{-1} B^T`. Its inverse is never formed; solves go
//! through the symmetric indefinite system
//!
//! ```text
//! [ -M_{p-1}   B^T        0   ] [σ]   [0]
//! [  B         K + εM_p   M H ] [u] = [r]
//! [  0         H^T M      0   ] [μ]   [0]
//! ```
//!
//! where `H` is an `M`-orthonormal basis of the harmonic space, so that
//! `σ = d* u` and `u ⊥ H`.

use faer::Mat;

use super::{exterior_derivative, free_dofs, mass_matrix, BoundaryCondition, FlatBundle};
use crate::error::{Error, Result};
use crate::linalg::{dot, generalized_eigen, norm2, orthonormalize, CsrMatrix, LdltSolver, SpdSolver};
use crate::mesh::SimplicialMesh;
use crate::rng::SeededRng;

pub struct HodgeLaplacian {
    degree: usize,
    rank: usize,
    bc: BoundaryCondition,
    n_full: usize,
    n_full_prev: usize,
    n_full_next: usize,
    free: Vec<usize>,
    free_prev: Vec<usize>,
    free_next: Vec<usize>,
    length_scale: f64,
    /// `M_p` on free DOFs.
    pub mass: CsrMatrix,
    /// `M_{p-1}` on free DOFs (absent for `p = 0`).
    pub mass_prev: Option<CsrMatrix>,
    /// `d_{p-1}`: free `(p-1)`-DOFs to free `p`-DOFs.
    pub d_prev: Option<CsrMatrix>,
    /// `d_p`: free `p`-DOFs to free `(p+1)`-DOFs (absent for top degree).
    pub d: Option<CsrMatrix>,
    /// `M_{p+1}` on free DOFs.
    pub mass_next: Option<CsrMatrix>,
    /// `K = d^T M_{p+1} d`.
    pub curl: CsrMatrix,
    /// `B = M_p d_{p-1}`.
    pub grad: Option<CsrMatrix>,
    mass_solver: SpdSolver,
    mass_prev_solver: Option<SpdSolver>,
}

/// Assembles `Δ_p` with the given boundary condition.
pub fn hodge_laplacian(
    mesh: &SimplicialMesh,
    p: usize,
    bundle: &FlatBundle,
    bc: BoundaryCondition,
) -> Result<HodgeLaplacian> {
    super::check_degree(mesh, p)?;
    if bundle.rank() == 0 {
        return Err(Error::ShapeMismatch("bundle of rank 0".into()));
    }
    let r = bundle.rank();
    let n = mesh.dim();
    let free = free_dofs(mesh, p, r, bc);
    let mass = mass_matrix(mesh, p, bundle)?.matrix.select(&free, &free);

    let (free_prev, mass_prev, d_prev, grad) = if p > 0 {
        let fp = free_dofs(mesh, p - 1, r, bc);
        let mp = mass_matrix(mesh, p - 1, bundle)?.matrix.select(&fp, &fp);
        let dp = exterior_derivative(mesh, p - 1, bundle)?.matrix.select(&free, &fp);
        let b = mass.matmul(&dp);
        (fp, Some(mp), Some(dp), Some(b))
    } else {
        (Vec::new(), None, None, None)
    };

    let free_next = if p < n { free_dofs(mesh, p + 1, r, bc) } else { Vec::new() };
    let (d, mass_next, curl) = if p < n {
        let fnext = &free_next;
        let mn = mass_matrix(mesh, p + 1, bundle)?.matrix.select(fnext, fnext);
        let dd = exterior_derivative(mesh, p, bundle)?.matrix.select(fnext, &free);
        let k = dd.transpose().matmul(&mn.matmul(&dd));
        (Some(dd), Some(mn), k)
    } else {
        (None, None, CsrMatrix::zeros(free.len(), free.len()))
    };

    let mass_solver = SpdSolver::new(&mass)?;
    let mass_prev_solver = mass_prev.as_ref().map(SpdSolver::new).transpose()?;
    let length_scale = diameter(mesh);
    Ok(HodgeLaplacian {
        degree: p,
        rank: r,
        bc,
        n_full: mesh.n_simplices(p) * r,
        n_full_prev: if p > 0 { mesh.n_simplices(p - 1) * r } else { 0 },
        n_full_next: if p < n { mesh.n_simplices(p + 1) * r } else { 0 },
        free,
        free_prev,
        free_next,
        length_scale,
        mass,
        mass_prev,
        d_prev,
        d,
        mass_next,
        curl,
        grad,
        mass_solver,
        mass_prev_solver,
    })
}

fn diameter(mesh: &SimplicialMesh) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in mesh.vertices() {
        for ax in 0..3 {
            lo[ax] = lo[ax].min(v[ax]);
            hi[ax] = hi[ax].max(v[ax]);
        }
    }
    (0..3).map(|ax| (hi[ax] - lo[ax]).powi(2)).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}

impl HodgeLaplacian {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_free_prev(&self) -> usize {
        self.free_prev.len()
    }

    /// Free `p`-DOFs as global cochain indices.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn free_dofs_prev(&self) -> &[usize] {
        &self.free_prev
    }

    /// Extends a free-DOF vector by zeros to a full cochain vector.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        scatter(&self.free, x, self.n_full)
    }

    /// Same as [`HodgeLaplacian::expand`] for `(p-1)`-cochains.
    pub fn expand_prev(&self, x: &[f64]) -> Vec<f64> {
        scatter(&self.free_prev, x, self.n_full_prev)
    }

    /// Same as [`HodgeLaplacian::expand`] for `(p+1)`-cochains.
    pub fn expand_next(&self, x: &[f64]) -> Vec<f64> {
        scatter(&self.free_next, x, self.n_full_next)
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    pub fn restrict_prev(&self, full: &[f64]) -> Vec<f64> {
        self.free_prev.iter().map(|&i| full[i]).collect()
    }

    pub fn mass_solve(&self, b: &[f64]) -> Vec<f64> {
        self.mass_solver.solve(b)
    }

    /// `d* u = M_{p-1}^{-1} B^T u` on free DOFs (empty for `p = 0`).
    pub fn codiff(&self, u: &[f64]) -> Vec<f64> {
        match (&self.grad, &self.mass_prev_solver) {
            (Some(b), Some(s)) => {
                let mut x = b.transpose_mul_vec(u);
                s.solve_in_place(&mut x);
                x
            }
            _ => Vec::new(),
        }
    }

    /// `d u` on free DOFs (empty for top degree).
    pub fn diff(&self, u: &[f64]) -> Vec<f64> {
        self.d.as_ref().map(|d| d.mul_vec(u)).unwrap_or_default()
    }

    /// `M Δ u`.
    pub fn weak_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.curl.mul_vec(u);
        if let Some(b) = &self.grad {
            let s = self.codiff(u);
            let bs = b.mul_vec(&s);
            out.iter_mut().zip(&bs).for_each(|(o, x)| *o += x);
        }
        out
    }

    /// `Δ u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.mass_solve(&self.weak_apply(u))
    }

    /// `<u, v>` in the mass inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.mass.mul_vec(v))
    }

    pub fn mass_norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Dense `M Δ`, for coarse meshes only.
    pub fn weak_dense(&self) -> Mat<f64> {
        let n = self.n_free();
        let mut out = self.curl.to_dense();
        if let Some(b) = &self.grad {
            let np = self.n_free_prev();
            // columns of M_{p-1}^{-1} B^T
            let mut cols = Vec::with_capacity(n);
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                cols.push(self.codiff(&e));
            }
            let bd = b.to_dense();
            for j in 0..n {
                for i in 0..n {
                    let mut acc = 0.0;
                    for k in 0..np {
                        acc += bd[(i, k)] * cols[j][k];
                    }
                    out[(i, j)] += acc;
                }
            }
        }
        out
    }

    /// Mixed saddle-point matrix with shift `ε M_p` and harmonic constraints.
    pub fn mixed_matrix(&self, shift: f64, harmonic: &[Vec<f64>]) -> CsrMatrix {
        let np = self.n_free_prev();
        let n = self.n_free();
        let h = harmonic.len();
        let mut upper = self.curl.clone();
        if shift != 0.0 {
            upper = upper.add(&self.mass.scaled(shift));
        }
        let neg_mp = self.mass_prev.as_ref().map(|m| m.scaled(-1.0));
        let bt = self.grad.as_ref().map(|b| b.transpose());
        let mh = if h > 0 {
            let mut trips = Vec::new();
            for (c, v) in harmonic.iter().enumerate() {
                for (i, x) in self.mass.mul_vec(v).into_iter().enumerate() {
                    if x != 0.0 {
                        trips.push((i, c, x));
                    }
                }
            }
            Some(CsrMatrix::from_triplets(n, h, &trips))
        } else {
            None
        };
        let mht = mh.as_ref().map(|m| m.transpose());
        CsrMatrix::block(
            &[np, n, h],
            &[np, n, h],
            &[
                vec![neg_mp.as_ref(), bt.as_ref(), None],
                vec![self.grad.as_ref(), Some(&upper), mh.as_ref()],
                vec![None, mht.as_ref(), None],
            ],
        )
    }

    /// `M`-orthonormal basis of the discrete harmonic space `ker Δ_p`.
    ///
    /// Block inverse iteration on the slightly shifted operator followed by a
    /// Rayleigh-Ritz step; the block doubles until it is no longer saturated
    /// by kernel vectors.
    pub fn harmonic_basis(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.n_free();
        if n == 0 {
            return Ok(Vec::new());
        }
        let l2 = self.length_scale * self.length_scale;
        let tol = 1e-4 / l2;
        let shifted = self.shifted_factor(1e-3 / l2)?;
        let mut rng = SeededRng::new(0x4A52_4D4F);
        let mut block = 8.min(n);
        loop {
            let pairs = self.ritz_pairs(&shifted, block, 6, &mut rng)?;
            let m = pairs.len();
            let kernel: Vec<Vec<f64>> = pairs.into_iter().filter(|(l, _)| *l < tol).map(|(_, v)| v).collect();
            if kernel.len() < m || block >= n {
                return Ok(orthonormalize(kernel, &self.mass, 1e-8));
            }
            block = (2 * block).min(n);
        }
    }

    /// Approximate lowest `count` eigenpairs `(λ, v)` of `Δ_p`, ascending, with
    /// `M`-orthonormal vectors.
    pub fn low_modes(&self, count: usize, iterations: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.n_free();
        if n == 0 || count == 0 {
            return Ok(Vec::new());
        }
        let l2 = self.length_scale * self.length_scale;
        let shifted = self.shifted_factor(1e-3 / l2)?;
        let mut rng = SeededRng::new(0x4C4F_5745);
        let block = (count + count / 2 + 4).min(n);
        let mut pairs = self.ritz_pairs(&shifted, block, iterations, &mut rng)?;
        pairs.truncate(count);
        Ok(pairs)
    }

    fn shifted_factor(&self, shift: f64) -> Result<LdltSolver> {
        let np = self.n_free_prev();
        let signs: Vec<i8> = (0..np + self.n_free()).map(|i| if i < np { -1 } else { 1 }).collect();
        LdltSolver::new(self.mixed_matrix(shift, &[]), &signs)
    }

    /// Subspace iteration with `(Δ + ε)^{-1}` then Rayleigh-Ritz; pairs ascend.
    fn ritz_pairs(
        &self,
        shifted: &LdltSolver,
        block: usize,
        iterations: usize,
        rng: &mut SeededRng,
    ) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.n_free();
        let np = self.n_free_prev();
        let mut x: Vec<Vec<f64>> = (0..block).map(|_| rng.normal_vec(n)).collect();
        for _ in 0..iterations {
            x = x
                .iter()
                .map(|v| {
                    let mut rhs = vec![0.0; np];
                    rhs.extend(self.mass.mul_vec(v));
                    let (sol, _) = shifted.solve(&rhs);
                    sol[np..].to_vec()
                })
                .collect();
            x = orthonormalize(x, &self.mass, 1e-10);
        }
        let m = x.len();
        let ax: Vec<Vec<f64>> = x.iter().map(|v| self.weak_apply(v)).collect();
        let a = Mat::from_fn(m, m, |i, j| 0.5 * (dot(&x[i], &ax[j]) + dot(&x[j], &ax[i])));
        let id = Mat::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 });
        let (vals, vecs) = generalized_eigen(&a, &id)?;
        Ok((0..m)
            .map(|k| {
                let mut y = vec![0.0; n];
                for (i, xi) in x.iter().enumerate() {
                    crate::linalg::axpy(&mut y, vecs[(i, k)], xi);
                }
                (vals[k], y)
            })
            .collect())
    }
}

fn scatter(idx: &[usize], x: &[f64], len: usize) -> Vec<f64> {
    assert_eq!(idx.len(), x.len(), "vector does not match the free DOFs");
    let mut out = vec![0.0; len];
    for (&i, &v) in idx.iter().zip(x) {
        out[i] = v;
    }
    out
}

/// Result of one mixed solve.
#[derive(Clone, Debug)]
pub struct MixedSolution {
    /// Solution on free DOFs, `M`-orthogonal to the harmonic space.
    pub u: Vec<f64>,
    /// `d* u` on free `(p-1)`-DOFs.
    pub sigma: Vec<f64>,
    /// Harmonic coefficients removed from the right-hand side.
    pub harmonic: Vec<f64>,
    /// Relative residual of the saddle-point system.
    pub residual: f64,
}

/// Factorized solver for `M Δ u = r` on the orthogonal complement of the harmonic space.
pub struct LaplaceSolver {
    lap: HodgeLaplacian,
    harmonic: Vec<Vec<f64>>,
    factor: LdltSolver,
}

impl LaplaceSolver {
    /// `harmonic` must be an `M`-orthonormal basis of `ker Δ` (possibly empty).
    pub fn new(lap: HodgeLaplacian, harmonic: Vec<Vec<f64>>) -> Result<Self> {
        let np = lap.n_free_prev();
        let n = lap.n_free();
        let signs: Vec<i8> = (0..np + n + harmonic.len())
            .map(|i| if i >= np && i < np + n { 1 } else { -1 })
            .collect();
        let factor = LdltSolver::new(lap.mixed_matrix(0.0, &harmonic), &signs)?;
        Ok(LaplaceSolver { lap, harmonic, factor })
    }

    /// Assembles `Δ_p`, computes its harmonic basis and factorizes.
    pub fn assemble(mesh: &SimplicialMesh, p: usize, bundle: &FlatBundle, bc: BoundaryCondition) -> Result<Self> {
        let lap = hodge_laplacian(mesh, p, bundle, bc)?;
        let harmonic = lap.harmonic_basis()?;
        LaplaceSolver::new(lap, harmonic)
    }

    pub fn laplacian(&self) -> &HodgeLaplacian {
        &self.lap
    }

    pub fn harmonic(&self) -> &[Vec<f64>] {
        &self.harmonic
    }

    /// Solves `M Δ u = r - M H μ` with `u ⊥ H`.
    pub fn solve_weak(&self, r: &[f64]) -> Result<MixedSolution> {
        let np = self.lap.n_free_prev();
        let n = self.lap.n_free();
        if r.len() != n {
            return Err(Error::ShapeMismatch(format!("right-hand side has {} entries, expected {n}", r.len())));
        }
        let mut rhs = vec![0.0; np];
        rhs.extend_from_slice(r);
        rhs.extend(std::iter::repeat(0.0).take(self.harmonic.len()));
        let (sol, residual) = self.factor.solve(&rhs);
        if !(residual <= 1e-8) {
            return Err(Error::SingularOperator(format!("mixed solve residual {residual:.3e}")));
        }
        Ok(MixedSolution {
            sigma: sol[..np].to_vec(),
            u: sol[np..np + n].to_vec(),
            harmonic: sol[np + n..].to_vec(),
            residual,
        })
    }

    /// Solves `Δ u = f - P_H f` with `u ⊥ H`.
    pub fn solve(&self, f: &[f64]) -> Result<MixedSolution> {
        self.solve_weak(&self.lap.mass.mul_vec(f))
    }

    /// `f - P_H f`.
    pub fn project_out_harmonic(&self, f: &[f64]) -> Vec<f64> {
        let mut out = f.to_vec();
        let mf = self.lap.mass.mul_vec(f);
        for h in &self.harmonic {
            crate::linalg::axpy(&mut out, -dot(h, &mf), h);
        }
        out
    }

    /// Relative size `|P_H f| / |f|` in the mass norm.
    pub fn harmonic_fraction(&self, f: &[f64]) -> f64 {
        let total = self.lap.mass_norm(f);
        if total == 0.0 {
            return 0.0;
        }
        let mf = self.lap.mass.mul_vec(f);
        let h: f64 = self.harmonic.iter().map(|h| dot(h, &mf).powi(2)).sum();
        h.sqrt() / total
    }

    /// Relative residual `|M Δ u + M H μ - r| / |r|` recomputed from the operators.
    pub fn check_residual(&self, sol: &MixedSolution, r: &[f64]) -> f64 {
        let mut res = self.lap.weak_apply(&sol.u);
        for (h, mu) in self.harmonic.iter().zip(&sol.harmonic) {
            crate::linalg::axpy(&mut res, *mu, &self.lap.mass.mul_vec(h));
        }
        res.iter_mut().zip(r).for_each(|(x, y)| *x -= y);
        let rn = norm2(r);
        if rn == 0.0 {
            norm2(&res)
        } else {
            norm2(&res) / rn
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::{build_flat_bundle, BundleSpec};
    use crate::mesh::{generate_mesh, MeshShape};

    fn kernel_dim(shape: MeshShape, res: usize, p: usize, bc: BoundaryCondition) -> usize {
        let m = generate_mesh(&shape, res).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        hodge_laplacian(&m, p, &b, bc).unwrap().harmonic_basis().unwrap().len()
    }

    #[test]
    fn torus_first_cohomology() {
        assert_eq!(kernel_dim(MeshShape::Torus2d { side: 1.0 }, 5, 1, BoundaryCondition::Neumann), 2);
        assert_eq!(kernel_dim(MeshShape::Torus2d { side: 1.0 }, 5, 0, BoundaryCondition::Neumann), 1);
        assert_eq!(kernel_dim(MeshShape::Torus2d { side: 1.0 }, 5, 2, BoundaryCondition::Neumann), 1);
    }

    #[test]
    fn annulus_absolute_and_relative() {
        let a = MeshShape::Annulus { r_in: 0.5, r_out: 1.0 };
        assert_eq!(kernel_dim(a, 6, 1, BoundaryCondition::Neumann), 1);
        assert_eq!(kernel_dim(a, 6, 1, BoundaryCondition::Dirichlet), 1);
        assert_eq!(kernel_dim(a, 6, 0, BoundaryCondition::Dirichlet), 0);
        assert_eq!(kernel_dim(a, 6, 2, BoundaryCondition::Dirichlet), 1);
    }

    #[test]
    fn harmonic_basis_is_closed_and_coclosed() {
        let m = generate_mesh(&MeshShape::Annulus { r_in: 0.4, r_out: 1.0 }, 6).unwrap();
        let b = build_flat_bundle(&m, 2, &BundleSpec::RandomFlat(1)).unwrap();
        let lap = hodge_laplacian(&m, 1, &b, BoundaryCondition::Neumann).unwrap();
        let h = lap.harmonic_basis().unwrap();
        assert_eq!(h.len(), 2);
        for v in &h {
            let dv = lap.diff(v);
            let ddv = lap.codiff(v);
            let dn = dot(&dv, &lap.mass_next.as_ref().unwrap().mul_vec(&dv)).sqrt();
            let sn = dot(&ddv, &lap.mass_prev.as_ref().unwrap().mul_vec(&ddv)).sqrt();
            assert!(dn < 1e-8 && sn < 1e-8, "{dn} {sn}");
            assert!((lap.mass_norm(v) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gauge_twisted_top_degree_solve() {
        // zero curl block with full fiber blocks: the factorization alone stalls near 1e-9
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 16).unwrap();
        let b = build_flat_bundle(&m, 2, &BundleSpec::RandomFlat(5)).unwrap();
        let solver = LaplaceSolver::assemble(&m, 2, &b, BoundaryCondition::Neumann).unwrap();
        let mut rng = SeededRng::new(1);
        let r = rng.normal_vec(solver.laplacian().n_free());
        let sol = solver.solve_weak(&r).unwrap();
        assert!(sol.residual < 1e-12, "{}", sol.residual);
        assert!(solver.check_residual(&sol, &r) < 1e-10);
    }

    #[test]
    fn dirichlet_solve_roundtrip() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 6).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        for p in 0..=2 {
            let lap = hodge_laplacian(&m, p, &b, BoundaryCondition::Dirichlet).unwrap();
            let h = lap.harmonic_basis().unwrap();
            let solver = LaplaceSolver::new(lap, h).unwrap();
            let lap = solver.laplacian();
            let mut rng = SeededRng::new(p as u64);
            let f = solver.project_out_harmonic(&rng.normal_vec(lap.n_free()));
            let sol = solver.solve(&f).unwrap();
            let back = lap.apply(&sol.u);
            let err: f64 = back.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = f.iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert!(err < 1e-8 * scale, "p={p}: {err}");
        }
    }
}
