//! Harmonic spaces, Dirichlet/Neumann potentials and the potential-based
//! solver for `du = f`.

use crate::dec::{
    hodge_laplacian, BoundaryCondition, Cochain, FlatBundle, FormEvaluator, LaplaceSolver, NormDomain,
};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, max_abs, CsrMatrix};
use crate::mesh::SimplicialMesh;

/// Closedness tolerance on `max|df| / max|f|`.
pub const CLOSED_TOL: f64 = 1e-8;
/// Relative harmonic component tolerated by [`HodgeSolver::potential`] without projection.
pub const ORTHOGONAL_TOL: f64 = 1e-8;
/// Above this relative residual `f` is reported as not exact.
pub const EXACT_TOL: f64 = 1e-6;

/// Mass-orthonormal basis of `ker Δ_p` under a boundary condition.
#[derive(Clone, Debug)]
pub struct HarmonicSpace {
    pub degree: usize,
    pub rank: usize,
    pub bc: BoundaryCondition,
    /// Full cochain vectors (zero on removed boundary DOFs for Dirichlet).
    pub basis: Vec<Vec<f64>>,
}

impl HarmonicSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Coefficients `<h_i, f>` against the full mass matrix.
    pub fn coefficients(&self, mass: &CsrMatrix, f: &[f64]) -> Vec<f64> {
        let mf = mass.mul_vec(f);
        self.basis.iter().map(|h| dot(h, &mf)).collect()
    }

    pub fn project(&self, mass: &CsrMatrix, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for (h, c) in self.basis.iter().zip(self.coefficients(mass, f)) {
            axpy(&mut out, c, h);
        }
        out
    }
}

pub fn harmonic_space(
    mesh: &SimplicialMesh,
    p: usize,
    bundle: &FlatBundle,
    bc: BoundaryCondition,
) -> Result<HarmonicSpace> {
    let lap = hodge_laplacian(mesh, p, bundle, bc)?;
    let basis = lap.harmonic_basis()?.iter().map(|h| lap.expand(h)).collect();
    Ok(HarmonicSpace {
        degree: p,
        rank: bundle.rank(),
        bc,
        basis,
    })
}

fn space_of(solver: &LaplaceSolver) -> HarmonicSpace {
    let lap = solver.laplacian();
    HarmonicSpace {
        degree: lap.degree(),
        rank: lap.rank(),
        bc: lap.bc(),
        basis: solver.harmonic().iter().map(|h| lap.expand(h)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    /// `|du - f| / |f|` in the mass norm.
    pub residual: f64,
    pub q: f64,
    pub k: f64,
    /// `|u|_q / |f|_k`.
    pub norm_ratio: f64,
    /// Mass norm of the `H_N` component of `g = f - d d* φ`.
    pub obstruction_norm: f64,
}

/// `f = exact + coexact + harmonic` with Neumann (absolute) conditions.
#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub exact: Vec<f64>,
    pub coexact: Vec<f64>,
    pub harmonic: Vec<f64>,
    /// `|f - exact - coexact - harmonic| / |f|`.
    pub reconstruction_error: f64,
    /// Largest normalized pairwise inner product of the three parts.
    pub orthogonality_defect: f64,
}

/// Factorized Dirichlet and Neumann Laplacians in degree `p`, plus the
/// Neumann Laplacian in degree `p - 1` used to pick the minimal solution.
pub struct HodgeSolver {
    degree: usize,
    dirichlet: LaplaceSolver,
    neumann: LaplaceSolver,
    prev: Option<LaplaceSolver>,
    eval: FormEvaluator,
    eval_prev: Option<FormEvaluator>,
}

impl HodgeSolver {
    pub fn new(mesh: &SimplicialMesh, p: usize, bundle: &FlatBundle) -> Result<Self> {
        let dirichlet = LaplaceSolver::assemble(mesh, p, bundle, BoundaryCondition::Dirichlet)?;
        let neumann = LaplaceSolver::assemble(mesh, p, bundle, BoundaryCondition::Neumann)?;
        let (prev, eval_prev) = if p > 0 {
            (
                Some(LaplaceSolver::assemble(mesh, p - 1, bundle, BoundaryCondition::Neumann)?),
                Some(FormEvaluator::new(mesh, p - 1, bundle)?),
            )
        } else {
            (None, None)
        };
        Ok(HodgeSolver {
            degree: p,
            dirichlet,
            neumann,
            prev,
            eval: FormEvaluator::new(mesh, p, bundle)?,
            eval_prev,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn solver(&self, bc: BoundaryCondition) -> &LaplaceSolver {
        match bc {
            BoundaryCondition::Dirichlet => &self.dirichlet,
            BoundaryCondition::Neumann => &self.neumann,
        }
    }

    pub fn harmonic_space(&self, bc: BoundaryCondition) -> HarmonicSpace {
        space_of(self.solver(bc))
    }

    /// Full `M_p`.
    pub fn mass(&self) -> &CsrMatrix {
        &self.neumann.laplacian().mass
    }

    pub fn mass_norm(&self, f: &[f64]) -> f64 {
        self.neumann.laplacian().mass_norm(f)
    }

    fn check(&self, f: &Cochain) -> Result<()> {
        let lap = self.neumann.laplacian();
        let n = lap.n_free();
        if f.degree != self.degree || f.rank != lap.rank() || f.values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "degree-{} rank-{} cochain with {} values, solver expects degree {} rank {} with {n}",
                f.degree,
                f.rank,
                f.values.len(),
                self.degree,
                lap.rank()
            )));
        }
        Ok(())
    }

    /// Solves `Δ_p φ = f` with the given boundary condition and `φ` orthogonal
    /// to the harmonic space. With `project` the harmonic part of `f` is
    /// dropped, otherwise it must be below [`ORTHOGONAL_TOL`].
    pub fn potential(&self, f: &Cochain, bc: BoundaryCondition, project: bool) -> Result<Cochain> {
        self.check(f)?;
        let solver = self.solver(bc);
        let lap = solver.laplacian();
        let mf = self.mass().mul_vec(&f.values);
        let total = dot(&f.values, &mf).max(0.0).sqrt();
        if total > 0.0 && !project {
            let h: f64 = solver
                .harmonic()
                .iter()
                .map(|h| dot(&lap.expand(h), &mf).powi(2))
                .sum::<f64>()
                .sqrt();
            if h / total > ORTHOGONAL_TOL {
                return Err(Error::NotOrthogonal { relative: h / total });
            }
        }
        let sol = solver.solve_weak(&lap.restrict(&mf))?;
        Ok(Cochain {
            degree: f.degree,
            rank: f.rank,
            values: lap.expand(&sol.u),
        })
    }

    /// Solves `du = f` for a closed `p`-cochain `f`, `p >= 1`, via
    /// `u = d*(ψ_g + φ_{f₂})`, then removes the closed part of `u` so that
    /// `u` is the mass-minimal solution. Reports `|u|_q / |f|_k`.
    pub fn solve_d_equation(&self, f: &Cochain, q: f64, k: f64) -> Result<(Cochain, SolveReport)> {
        self.check(f)?;
        let (Some(prev), Some(eval_prev)) = (&self.prev, &self.eval_prev) else {
            return Err(Error::UnsupportedConfiguration("du = f needs degree p >= 1".into()));
        };
        let lap_n = self.neumann.laplacian();
        let d_prev = lap_n.d_prev.as_ref().expect("p >= 1");
        let fmax = max_abs(&f.values);
        if let Some(d) = &lap_n.d {
            let rel = if fmax == 0.0 { 0.0 } else { max_abs(&d.mul_vec(&f.values)) / fmax };
            if rel > CLOSED_TOL {
                return Err(Error::NotClosed { relative: rel });
            }
        }
        let rank = f.rank;
        if fmax == 0.0 {
            let u = Cochain {
                degree: self.degree - 1,
                rank,
                values: vec![0.0; prev.laplacian().n_free()],
            };
            let report = SolveReport {
                residual: 0.0,
                q,
                k,
                norm_ratio: 0.0,
                obstruction_norm: 0.0,
            };
            return Ok((u, report));
        }

        // f = f1 + f2 against H_D, then φ = Dirichlet potential of f2 and σ_D = d*φ
        let mass = self.mass();
        let h_d = self.harmonic_space(BoundaryCondition::Dirichlet);
        let f2 = crate::linalg::sub(&f.values, &h_d.project(mass, &f.values));
        let lap_d = self.dirichlet.laplacian();
        let phi = self.dirichlet.solve_weak(&lap_d.restrict(&mass.mul_vec(&f2)))?;
        let sigma_d = lap_d.expand_prev(&phi.sigma);

        // g = f - d σ_D, ψ = Neumann potential of g
        let g = crate::linalg::sub(&f.values, &d_prev.mul_vec(&sigma_d));
        let psi = self.neumann.solve(&g)?;
        let obstruction_norm = psi.harmonic.iter().map(|c| c * c).sum::<f64>().sqrt();

        let mut u = sigma_d;
        axpy(&mut u, 1.0, &psi.sigma);

        // drop the closed part of u: H_N^{p-1} component and d of the degree-(p-2) potential
        let closed = prev.solve(&u)?;
        let lap_p = prev.laplacian();
        for (h, c) in prev.harmonic().iter().zip(&closed.harmonic) {
            axpy(&mut u, -c, h);
        }
        if let Some(dp) = &lap_p.d_prev {
            axpy(&mut u, -1.0, &dp.mul_vec(&closed.sigma));
        }

        let mut res = d_prev.mul_vec(&u);
        axpy(&mut res, -1.0, &f.values);
        let residual = self.mass_norm(&res) / self.mass_norm(&f.values);
        if residual > EXACT_TOL {
            return Err(Error::ObstructionNonExact {
                residual,
                obstruction_norm,
            });
        }
        let fk = self.eval.norm(&f.values, k, NormDomain::Interior)?;
        let uq = eval_prev.norm(&u, q, NormDomain::Interior)?;
        let report = SolveReport {
            residual,
            q,
            k,
            norm_ratio: if fk > 0.0 { uq / fk } else { 0.0 },
            obstruction_norm,
        };
        let u = Cochain {
            degree: self.degree - 1,
            rank,
            values: u,
        };
        Ok((u, report))
    }

    /// `count` exact forms `f = dv`, with `v` a Gaussian combination of the
    /// lowest `modes` Neumann eigenmodes of `Δ_{p-1}`.
    pub fn random_exact_forms(&self, count: usize, modes: usize, seed: u64) -> Result<Vec<Cochain>> {
        let Some(prev) = &self.prev else {
            return Err(Error::UnsupportedConfiguration("exact forms need degree p >= 1".into()));
        };
        let lap_p = prev.laplacian();
        let basis: Vec<Vec<f64>> = lap_p.low_modes(modes, 8)?.into_iter().map(|(_, v)| v).collect();
        let d_prev = self.neumann.laplacian().d_prev.as_ref().expect("p >= 1");
        let rank = self.neumann.laplacian().rank();
        Ok((0..count)
            .map(|i| {
                let mut rng = crate::rng::SeededRng::stream(seed, i as u64);
                let mut v = vec![0.0; lap_p.n_free()];
                for b in &basis {
                    axpy(&mut v, rng.normal(), b);
                }
                Cochain {
                    degree: self.degree,
                    rank,
                    values: d_prev.mul_vec(&v),
                }
            })
            .collect())
    }

    /// Neumann Hodge decomposition `f = dα + d*β + h`.
    pub fn hodge_decomposition(&self, f: &Cochain) -> Result<HodgeDecomposition> {
        self.check(f)?;
        let lap = self.neumann.laplacian();
        let sol = self.neumann.solve(&f.values)?;
        let n = f.values.len();
        let exact = match &lap.d_prev {
            Some(d) => d.mul_vec(&sol.sigma),
            None => vec![0.0; n],
        };
        let coexact = lap.mass_solve(&lap.curl.mul_vec(&sol.u));
        let mut harmonic = vec![0.0; n];
        for (h, c) in self.neumann.harmonic().iter().zip(&sol.harmonic) {
            axpy(&mut harmonic, *c, h);
        }
        let mut rest = f.values.clone();
        for part in [&exact, &coexact, &harmonic] {
            axpy(&mut rest, -1.0, part);
        }
        let total = self.mass_norm(&f.values);
        let reconstruction_error = if total > 0.0 { self.mass_norm(&rest) / total } else { self.mass_norm(&rest) };
        let parts = [&exact, &coexact, &harmonic];
        let mut orthogonality_defect = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = (self.mass_norm(parts[i]), self.mass_norm(parts[j]));
                if a > 0.0 && b > 0.0 {
                    let c = lap.inner(parts[i], parts[j]).abs() / (a * b);
                    orthogonality_defect = orthogonality_defect.max(c);
                }
            }
        }
        Ok(HodgeDecomposition {
            exact,
            coexact,
            harmonic,
            reconstruction_error,
            orthogonality_defect,
        })
    }
}
