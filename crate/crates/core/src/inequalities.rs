//! Exponent admissibility and ensemble checks of the Sobolev-type
//! inequalities and maximum principles.

use crate::dec::{hodge_laplacian, BoundaryCondition, FlatBundle, FormEvaluator, HodgeLaplacian, LaplaceSolver, NormDomain};
use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::mesh::SimplicialMesh;
use crate::rng::SeededRng;

/// Exponents `q, k, r, s` in `[1, ∞]` on an `n`-manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentTuple {
    pub q: f64,
    pub k: f64,
    pub r: f64,
    pub s: f64,
    pub n: usize,
}

impl ExponentTuple {
    pub fn new(q: f64, k: f64, r: f64, s: f64, n: usize) -> Self {
        ExponentTuple { q, k, r, s, n }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("q", self.q), ("k", self.k), ("r", self.r), ("s", self.s)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::InadmissibleExponents(format!("{name} = {v} is below 1")));
            }
        }
        if !(2..=3).contains(&self.n) {
            return Err(Error::InadmissibleExponents(format!("dimension {} is not 2 or 3", self.n)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admissibility {
    /// `δ|f|_q ≤ |Δf|_k + |f|_{r,∂M}`.
    CorLaplace,
    /// `δ|f|_q ≤ |df|_k + |d*f|_r + |f|_{s,∂M}`.
    CorGradient,
    /// `1 < q, k < ∞` and `q(n - k) ≤ nk`.
    ThmLqp,
}

/// `q` against the pair `(k, nk/(n - c k))`: strict at `k = 1` and at `k = n/c`,
/// non-strict in between, unconstrained above `n/c`.
fn sobolev_branch(q: f64, k: f64, n: f64, c: f64) -> bool {
    let crit = n / c;
    if k > crit {
        return true;
    }
    if k == 1.0 || k == crit {
        let bound = if k == crit { f64::INFINITY } else { n * k / (n - c * k) };
        return q < bound;
    }
    q <= n * k / (n - c * k)
}

/// `q < n/(n-1)` for `t = 1`, `q ≤ nt/(n-1)` for `1 < t ≤ ∞`.
fn boundary_branch(q: f64, t: f64, n: f64) -> bool {
    if t == 1.0 {
        q < n / (n - 1.0)
    } else {
        q <= n * t / (n - 1.0)
    }
}

/// Case-by-case exponent conditions. Invalid tuples are not admissible.
pub fn admissible(t: &ExponentTuple, which: Admissibility) -> bool {
    if t.validate().is_err() {
        return false;
    }
    let n = t.n as f64;
    match which {
        Admissibility::CorLaplace => sobolev_branch(t.q, t.k, n, 2.0) && boundary_branch(t.q, t.r, n),
        Admissibility::CorGradient => {
            sobolev_branch(t.q, t.k, n, 1.0) && sobolev_branch(t.q, t.r, n, 1.0) && boundary_branch(t.q, t.s, n)
        }
        Admissibility::ThmLqp => {
            t.q > 1.0 && t.q.is_finite() && t.k > 1.0 && t.k.is_finite() && t.q * (n - t.k) <= n * t.k
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevMode {
    Laplace,
    Gradient,
    /// `|f|_∞ ≤ δ|Δf|_k + |f|_{∞,∂M}`, `k > n/2`.
    MaxLaplace,
    /// `|f|_∞ ≤ δ(|df|_k + |d*f|_r) + |f|_{∞,∂M}`, `k, r > n`.
    MaxGradient,
    /// `sup_M |h| ≤ sup_∂M |h|` for discrete harmonic `h`.
    HarmonicMax,
}

impl SobolevMode {
    pub fn name(self) -> &'static str {
        match self {
            SobolevMode::Laplace => "laplace",
            SobolevMode::Gradient => "gradient",
            SobolevMode::MaxLaplace => "max_laplace",
            SobolevMode::MaxGradient => "max_gradient",
            SobolevMode::HarmonicMax => "harmonic_max",
        }
    }

    /// Whether the reported δ̂ is a minimum of RHS/LHS (else a maximum of a required constant).
    pub fn is_lower_bound(self) -> bool {
        matches!(self, SobolevMode::Laplace | SobolevMode::Gradient)
    }
}

/// Standing curvature hypothesis of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureAssumption {
    /// Flat metric and flat bundle: the Weitzenböck curvature term vanishes.
    Flat,
    Unverified,
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub degree: usize,
    pub size: usize,
    pub seed: u64,
    /// Lowest Dirichlet modes spanning the interior part.
    pub interior_modes: usize,
    /// Lowest Neumann modes spanning the boundary part.
    pub boundary_modes: usize,
    pub curvature: CurvatureAssumption,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            degree: 0,
            size: 50,
            seed: 0,
            interior_modes: 20,
            boundary_modes: 10,
            curvature: CurvatureAssumption::Flat,
        }
    }
}

/// One ensemble member with its derived quantities, all as full cochain vectors.
#[derive(Clone, Debug)]
pub struct FormSample {
    pub f: Vec<f64>,
    pub laplacian: Vec<f64>,
    pub d: Vec<f64>,
    pub codiff: Vec<f64>,
    /// Discrete harmonic form with the boundary values of `f`.
    pub harmonic: Vec<f64>,
}

pub struct Ensemble {
    dim: usize,
    degree: usize,
    volume: f64,
    mesh_width: f64,
    pub samples: Vec<FormSample>,
    eval: FormEvaluator,
    eval_next: Option<FormEvaluator>,
    eval_prev: Option<FormEvaluator>,
}

struct ModeSet {
    lap: HodgeLaplacian,
    modes: Vec<Vec<f64>>,
}

impl ModeSet {
    fn new(lap: HodgeLaplacian, count: usize) -> Result<Self> {
        let modes = lap.low_modes(count, 8)?.into_iter().map(|(_, v)| v).collect();
        Ok(ModeSet { lap, modes })
    }

    /// Random unit-mass-norm combination on free DOFs.
    fn combination(&self, rng: &mut SeededRng) -> Vec<f64> {
        let mut x = vec![0.0; self.lap.n_free()];
        for m in &self.modes {
            axpy(&mut x, rng.normal(), m);
        }
        let norm = self.lap.mass_norm(&x);
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }
}

impl Ensemble {
    /// Random combinations `cos θ · a + sin θ · b` where `a` spans low Dirichlet
    /// modes and `b` low Neumann modes (nonzero boundary values), with `θ`
    /// uniform in `[0, π/2]`. Derived quantities use the operator of the
    /// boundary condition each part was drawn from.
    pub fn build(mesh: &SimplicialMesh, bundle: &FlatBundle, config: &EnsembleConfig) -> Result<Self> {
        if config.curvature != CurvatureAssumption::Flat {
            return Err(Error::UnsupportedConfiguration(
                "inequality checks require a flat metric and flat bundle".into(),
            ));
        }
        if !mesh.has_boundary() {
            return Err(Error::UnsupportedConfiguration("inequality checks need a boundary".into()));
        }
        let p = config.degree;
        let n = mesh.dim();
        let interior = ModeSet::new(hodge_laplacian(mesh, p, bundle, BoundaryCondition::Dirichlet)?, config.interior_modes)?;
        let boundary = ModeSet::new(hodge_laplacian(mesh, p, bundle, BoundaryCondition::Neumann)?, config.boundary_modes)?;
        let dirichlet = LaplaceSolver::assemble(mesh, p, bundle, BoundaryCondition::Dirichlet)?;
        let lap_d = &interior.lap;
        let lap_n = &boundary.lap;
        let mut samples = Vec::with_capacity(config.size);
        for i in 0..config.size {
            let mut rng = SeededRng::stream(config.seed, i as u64);
            let theta = rng.uniform_in(0.0, std::f64::consts::FRAC_PI_2);
            let (c, s) = (theta.cos(), theta.sin());
            let mut a = interior.combination(&mut rng);
            let mut b = boundary.combination(&mut rng);
            a.iter_mut().for_each(|v| *v *= c);
            b.iter_mut().for_each(|v| *v *= s);

            let mut f = lap_d.expand(&a);
            axpy(&mut f, 1.0, &b);
            let mut laplacian = lap_d.expand(&lap_d.apply(&a));
            axpy(&mut laplacian, 1.0, &lap_n.apply(&b));
            let (d, codiff) = if p < n {
                let mut d = lap_d.expand_next(&lap_d.diff(&a));
                axpy(&mut d, 1.0, &lap_n.diff(&b));
                let codiff = if p > 0 {
                    let mut c = lap_d.expand_prev(&lap_d.codiff(&a));
                    axpy(&mut c, 1.0, &lap_n.codiff(&b));
                    c
                } else {
                    Vec::new()
                };
                (d, codiff)
            } else {
                let mut c = lap_d.expand_prev(&lap_d.codiff(&a));
                axpy(&mut c, 1.0, &lap_n.codiff(&b));
                (Vec::new(), c)
            };

            // harmonic extension of the boundary values: f minus the Dirichlet
            // potential of its weak Laplacian tested on interior DOFs
            let r = lap_d.restrict(&lap_n.weak_apply(&f));
            let phi = dirichlet.solve_weak(&r)?;
            let mut harmonic = f.clone();
            axpy(&mut harmonic, -1.0, &lap_d.expand(&phi.u));

            samples.push(FormSample {
                f,
                laplacian,
                d,
                codiff,
                harmonic,
            });
        }
        Ok(Ensemble {
            dim: n,
            degree: p,
            volume: mesh.total_volume(),
            mesh_width: mesh.mesh_width(),
            samples,
            eval: FormEvaluator::new(mesh, p, bundle)?,
            eval_next: if p < n { Some(FormEvaluator::new(mesh, p + 1, bundle)?) } else { None },
            eval_prev: if p > 0 { Some(FormEvaluator::new(mesh, p - 1, bundle)?) } else { None },
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn norm_prev(&self, v: &[f64], q: f64) -> Result<f64> {
        match &self.eval_prev {
            Some(e) if !v.is_empty() => e.norm(v, q, NormDomain::Interior),
            _ => Ok(0.0),
        }
    }

    fn norm_next(&self, v: &[f64], q: f64) -> Result<f64> {
        match &self.eval_next {
            Some(e) if !v.is_empty() => e.norm(v, q, NormDomain::Interior),
            _ => Ok(0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SobolevReport {
    pub mode: SobolevMode,
    pub exponents: Option<ExponentTuple>,
    pub ensemble_size: usize,
    pub mesh_width: f64,
    /// `(lhs, rhs)` per sample.
    pub samples: Vec<(f64, f64)>,
    /// `min rhs/lhs` for lower-bound modes; the largest required constant
    /// (or `sup_M |h| / sup_∂M |h|` for harmonic_max) otherwise.
    pub delta_hat: f64,
}

/// Evaluates one inequality over the ensemble. With `normalize_volume` the
/// interior `L^q` norm of `f` is divided by `|M|^{1/q}`.
pub fn sobolev_check(
    ensemble: &Ensemble,
    mode: SobolevMode,
    exponents: Option<ExponentTuple>,
    normalize_volume: bool,
) -> Result<SobolevReport> {
    let n = ensemble.dim as f64;
    let need = |t: Option<ExponentTuple>| -> Result<ExponentTuple> {
        let t = t.ok_or_else(|| Error::InadmissibleExponents(format!("{} needs exponents", mode.name())))?;
        t.validate()?;
        if t.n != ensemble.dim {
            return Err(Error::InadmissibleExponents(format!(
                "exponents for n = {} on a {}-dimensional mesh",
                t.n, ensemble.dim
            )));
        }
        Ok(t)
    };
    let t = match mode {
        SobolevMode::Laplace | SobolevMode::Gradient => {
            let t = need(exponents)?;
            let which = if mode == SobolevMode::Laplace { Admissibility::CorLaplace } else { Admissibility::CorGradient };
            if !admissible(&t, which) {
                return Err(Error::InadmissibleExponents(format!("{t:?} for {}", mode.name())));
            }
            Some(t)
        }
        SobolevMode::MaxLaplace => {
            let t = need(exponents)?;
            if !(t.k > n / 2.0) {
                return Err(Error::InadmissibleExponents(format!("max_laplace needs k > n/2, got k = {}", t.k)));
            }
            Some(t)
        }
        SobolevMode::MaxGradient => {
            let t = need(exponents)?;
            if !(t.k > n && t.r > n) {
                return Err(Error::InadmissibleExponents(format!(
                    "max_gradient needs k, r > n, got k = {}, r = {}",
                    t.k, t.r
                )));
            }
            Some(t)
        }
        SobolevMode::HarmonicMax => None,
    };

    let inf = f64::INFINITY;
    let ev = &ensemble.eval;
    let mut pairs = Vec::with_capacity(ensemble.len());
    for s in &ensemble.samples {
        let pair = match (mode, t) {
            (SobolevMode::Laplace, Some(t)) => {
                let mut lhs = ev.norm(&s.f, t.q, NormDomain::Interior)?;
                if normalize_volume && t.q.is_finite() {
                    lhs /= ensemble.volume.powf(1.0 / t.q);
                }
                let rhs = ev.norm(&s.laplacian, t.k, NormDomain::Interior)? + ev.norm(&s.f, t.r, NormDomain::Boundary)?;
                (lhs, rhs)
            }
            (SobolevMode::Gradient, Some(t)) => {
                let mut lhs = ev.norm(&s.f, t.q, NormDomain::Interior)?;
                if normalize_volume && t.q.is_finite() {
                    lhs /= ensemble.volume.powf(1.0 / t.q);
                }
                let rhs = ensemble.norm_next(&s.d, t.k)?
                    + ensemble.norm_prev(&s.codiff, t.r)?
                    + ev.norm(&s.f, t.s, NormDomain::Boundary)?;
                (lhs, rhs)
            }
            (SobolevMode::MaxLaplace, Some(t)) => {
                let excess = ev.norm(&s.f, inf, NormDomain::Interior)? - ev.norm(&s.f, inf, NormDomain::Boundary)?;
                (excess.max(0.0), ev.norm(&s.laplacian, t.k, NormDomain::Interior)?)
            }
            (SobolevMode::MaxGradient, Some(t)) => {
                let excess = ev.norm(&s.f, inf, NormDomain::Interior)? - ev.norm(&s.f, inf, NormDomain::Boundary)?;
                let rhs = ensemble.norm_next(&s.d, t.k)? + ensemble.norm_prev(&s.codiff, t.r)?;
                (excess.max(0.0), rhs)
            }
            _ => (
                ev.norm(&s.harmonic, inf, NormDomain::Interior)?,
                ev.norm(&s.harmonic, inf, NormDomain::Boundary)?,
            ),
        };
        pairs.push(pair);
    }

    let delta_hat = match mode {
        SobolevMode::Laplace | SobolevMode::Gradient => {
            let ratios: Vec<f64> = pairs.iter().filter(|(l, _)| *l > 0.0).map(|(l, r)| r / l).collect();
            if ratios.is_empty() {
                return Err(Error::EnsembleDegenerate);
            }
            ratios.into_iter().fold(inf, f64::min)
        }
        _ => {
            if pairs.iter().all(|(l, r)| *l == 0.0 && *r == 0.0) {
                return Err(Error::EnsembleDegenerate);
            }
            pairs.iter().fold(0.0f64, |m, &(l, r)| {
                if l == 0.0 {
                    m
                } else if r == 0.0 {
                    inf
                } else {
                    m.max(l / r)
                }
            })
        }
    };
    Ok(SobolevReport {
        mode,
        exponents: t,
        ensemble_size: pairs.len(),
        mesh_width: ensemble.mesh_width,
        samples: pairs,
        delta_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshShape};
    use proptest::prelude::*;

    fn t(q: f64, k: f64, r: f64, s: f64, n: usize) -> ExponentTuple {
        ExponentTuple::new(q, k, r, s, n)
    }

    #[test]
    fn laplace_table() {
        let a = Admissibility::CorLaplace;
        assert!(admissible(&t(2.9, 1.0, 2.0, 1.0, 3), a));
        assert!(!admissible(&t(3.0, 1.0, 2.0, 1.0, 3), a));
        // 1 < k < n/2 is non-strict: n=3, k=1.25 gives 3.75/0.5 = 7.5
        assert!(admissible(&t(7.5, 1.25, 6.0, 1.0, 3), a));
        assert!(!admissible(&t(7.6, 1.25, 6.0, 1.0, 3), a));
        // k = n/2 excludes only q = ∞
        assert!(admissible(&t(1e6, 1.0, f64::INFINITY, 1.0, 2), a));
        assert!(!admissible(&t(f64::INFINITY, 1.0, f64::INFINITY, 1.0, 2), a));
        // boundary exponent r = 1 is strict at n/(n-1)
        assert!(!admissible(&t(2.0, 2.0, 1.0, 1.0, 2), a));
        assert!(admissible(&t(1.9, 2.0, 1.0, 1.0, 2), a));
        assert!(admissible(&t(f64::INFINITY, 3.0, f64::INFINITY, 1.0, 2), a));
    }

    #[test]
    fn gradient_and_lqp_tables() {
        let g = Admissibility::CorGradient;
        assert!(!admissible(&t(f64::INFINITY, 2.0, 2.0, 2.0, 2), g));
        assert!(admissible(&t(2.0, 2.0, 2.0, 2.0, 2), g));
        assert!(admissible(&t(3.0, 1.5, 1.5, 2.0, 3), g));
        assert!(!admissible(&t(1.5, 1.0, 2.0, 2.0, 3), g));
        let l = Admissibility::ThmLqp;
        assert!(admissible(&t(2.0, 2.0, 1.0, 1.0, 3), l));
        assert!(admissible(&t(6.0, 2.0, 1.0, 1.0, 3), l));
        assert!(!admissible(&t(6.1, 2.0, 1.0, 1.0, 3), l));
        assert!(!admissible(&t(2.0, 1.0, 1.0, 1.0, 3), l));
        assert!(!admissible(&t(0.5, 2.0, 1.0, 1.0, 3), l));
    }

    proptest! {
        #[test]
        fn strictness_flips_at_endpoints(eps in 1e-9f64..1e-3, n in 2usize..=3) {
            let nf = n as f64;
            // k = 1 in the laplace table: critical q = n/(n-2) (∞ for n = 2)
            if n == 3 {
                prop_assert!(admissible(&t(3.0 - eps, 1.0, 2.0, 1.0, 3), Admissibility::CorLaplace));
                prop_assert!(!admissible(&t(3.0, 1.0, 2.0, 1.0, 3), Admissibility::CorLaplace));
            }
            // k = 1 in the gradient table: critical q = n/(n-1)
            let crit = nf / (nf - 1.0);
            prop_assert!(admissible(&t(crit - eps, 1.0, 1.0, 1.0, n), Admissibility::CorGradient));
            prop_assert!(!admissible(&t(crit, 1.0, 1.0, 1.0, n), Admissibility::CorGradient));
            // interior branch is closed at its endpoint
            let k = 1.0 + 0.5 * (nf - 1.0);
            let crit = nf * k / (nf - k);
            prop_assert!(admissible(&t(crit, k, k, f64::INFINITY, n), Admissibility::CorGradient));
            prop_assert!(!admissible(&t(crit * (1.0 + eps), k, k, f64::INFINITY, n), Admissibility::CorGradient));
        }
    }

    #[test]
    fn constant_function_bounds_laplace_delta() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 8).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        let cfg = EnsembleConfig {
            size: 6,
            interior_modes: 4,
            boundary_modes: 3,
            ..EnsembleConfig::default()
        };
        let mut e = Ensemble::build(&m, &b, &cfg).unwrap();
        let one = vec![1.0; m.n_vertices()];
        e.samples[0] = FormSample {
            f: one.clone(),
            laplacian: vec![0.0; one.len()],
            d: vec![0.0; m.n_simplices(1)],
            codiff: Vec::new(),
            harmonic: one,
        };
        let rep = sobolev_check(&e, SobolevMode::Laplace, Some(t(2.0, 2.0, 2.0, 2.0, 2)), false).unwrap();
        let bound = (m.boundary_volume() / m.total_volume()).sqrt();
        assert!((rep.samples[0].1 / rep.samples[0].0 - bound).abs() < 1e-12);
        assert!(rep.delta_hat <= bound + 1e-12 && rep.delta_hat > 0.0);
        assert!(matches!(
            sobolev_check(&e, SobolevMode::Laplace, Some(t(f64::INFINITY, 1.0, 1.0, 1.0, 2)), false),
            Err(Error::InadmissibleExponents(_))
        ));
        let h = sobolev_check(&e, SobolevMode::HarmonicMax, None, false).unwrap();
        assert!(h.delta_hat <= 1.05, "{}", h.delta_hat);
    }
}
