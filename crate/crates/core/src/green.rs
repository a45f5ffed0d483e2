//! Dirichlet Green kernels of `Δ_p` and the checks run against them.
//!
//! A column is `G(·, s) = (M Δ)^{-1} e_s`, i.e. the solution for the
//! mass-normalized delta `δ_s = M^{-1} e_s`. Since DOFs are integrals over
//! simplices, the column approximates `|σ_s| · G(·, x_s)`; pointwise kernel
//! values divide by the source simplex volume.

use crate::dec::{
    exterior_derivative, hodge_laplacian, BoundaryCondition, Cochain, FlatBundle, FormEvaluator, HodgeLaplacian,
    LaplaceSolver,
};
use crate::error::{Error, Result};
use crate::fit::{density_weighted_loglog_fit, linear_fit};
use crate::linalg::{dot, max_abs};
use crate::mesh::{distance_field, norm3, sub3, DistanceField, SimplicialMesh};
use crate::rng::SeededRng;

pub const NORMALIZATION: &str = "mass-normalized delta: M Lap G(.,s) = e_s";

/// Columns of the discrete Green operator.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    pub degree: usize,
    pub rank: usize,
    /// Source DOFs as global cochain indices.
    pub sources: Vec<usize>,
    /// `G(·, s)` on the Laplacian's free DOFs.
    pub columns: Vec<Vec<f64>>,
    /// `d*_y G(·, s)` on free `(p-1)`-DOFs (empty for `p = 0`).
    pub codiff_columns: Vec<Vec<f64>>,
    /// Relative residual of each column solve.
    pub residuals: Vec<f64>,
    pub normalization: &'static str,
}

impl GreenKernel {
    /// Simplex carrying source `i`.
    pub fn source_simplex(&self, i: usize) -> usize {
        self.sources[i] / self.rank
    }
}

/// Solves for the Green columns at the given global source DOFs.
///
/// With a nontrivial harmonic space the columns belong to the pseudo-inverse
/// (the source is projected off the kernel); that is only done when
/// `orthogonalize` is set, otherwise the operator is reported singular.
pub fn green_columns(solver: &LaplaceSolver, sources: &[usize], orthogonalize: bool) -> Result<GreenKernel> {
    let lap = solver.laplacian();
    if !solver.harmonic().is_empty() && !orthogonalize {
        return Err(Error::SingularOperator(format!(
            "Laplacian has a {}-dimensional kernel",
            solver.harmonic().len()
        )));
    }
    let free = lap.free_dofs();
    let mut positions = Vec::with_capacity(sources.len());
    for &s in sources {
        match free.binary_search(&s) {
            Ok(pos) => positions.push(pos),
            Err(_) => return Err(Error::InvalidParams(format!("source DOF {s} is not a free DOF"))),
        }
    }
    let n = lap.n_free();
    let mut columns = Vec::with_capacity(sources.len());
    let mut codiff_columns = Vec::with_capacity(sources.len());
    let mut residuals = Vec::with_capacity(sources.len());
    for &pos in &positions {
        let mut e = vec![0.0; n];
        e[pos] = 1.0;
        let sol = solver.solve_weak(&e)?;
        let res = solver.check_residual(&sol, &e);
        if res > 1e-8 {
            return Err(Error::SingularOperator(format!("Green column residual {res:.3e}")));
        }
        residuals.push(res);
        columns.push(sol.u);
        codiff_columns.push(sol.sigma);
    }
    Ok(GreenKernel {
        degree: lap.degree(),
        rank: lap.rank(),
        sources: sources.to_vec(),
        columns,
        codiff_columns,
        residuals,
        normalization: NORMALIZATION,
    })
}

/// Picks `count` free `p`-simplices at least `min_distance` from the boundary,
/// stratified by boundary-distance quantiles. Returns global DOFs (fiber component 0).
pub fn select_sources(
    mesh: &SimplicialMesh,
    lap: &HodgeLaplacian,
    boundary: &DistanceField,
    count: usize,
    min_distance: f64,
) -> Vec<usize> {
    let p = lap.degree();
    let r = lap.rank();
    let mut cand: Vec<(f64, usize)> = lap
        .free_dofs()
        .iter()
        .filter(|&&g| g % r == 0)
        .map(|&g| {
            let s = mesh.simplex(p, g / r);
            let delta = s.iter().map(|&v| boundary.get(v)).sum::<f64>() / s.len() as f64;
            (delta, g)
        })
        .filter(|&(d, _)| d >= min_distance)
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if cand.len() <= count {
        return cand.into_iter().map(|(_, g)| g).collect();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|k| {
            let q = (k as f64 + 0.5) / count as f64;
            cand[((q * cand.len() as f64) as usize).min(cand.len() - 1)].1
        })
        .collect();
    out.dedup();
    out
}

/// Boundary distance plus per-vertex distance fields from every source vertex.
pub struct DistanceCache {
    pub boundary: Option<DistanceField>,
    source_vertices: Vec<Vec<usize>>,
    fields: Vec<Vec<DistanceField>>,
}

impl DistanceCache {
    pub fn new(mesh: &SimplicialMesh, kernel: &GreenKernel) -> Result<Self> {
        let bv = mesh.boundary_vertices();
        let boundary = if bv.is_empty() { None } else { Some(distance_field(mesh, &bv)?) };
        let mut source_vertices = Vec::new();
        let mut fields = Vec::new();
        for i in 0..kernel.sources.len() {
            let verts = mesh.simplex(kernel.degree, kernel.source_simplex(i)).to_vec();
            fields.push(verts.iter().map(|&v| distance_field(mesh, &[v])).collect::<Result<Vec<_>>>()?);
            source_vertices.push(verts);
        }
        Ok(DistanceCache {
            boundary,
            source_vertices,
            fields,
        })
    }

    /// Mean graph distance between the vertices of source `i` and the given vertices.
    pub fn distance(&self, i: usize, targets: &[usize]) -> f64 {
        let f = &self.fields[i];
        let total: f64 = f.iter().flat_map(|df| targets.iter().map(move |&t| df.get(t))).sum();
        total / (f.len() * targets.len()) as f64
    }

    /// Mean boundary distance over a vertex set (infinite without boundary).
    pub fn boundary_distance(&self, verts: &[usize]) -> f64 {
        match &self.boundary {
            Some(b) => verts.iter().map(|&v| b.get(v)).sum::<f64>() / verts.len() as f64,
            None => f64::INFINITY,
        }
    }

    pub fn source_delta(&self, i: usize) -> f64 {
        self.boundary_distance(&self.source_vertices[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayMode {
    Kernel,
    KernelBoundaryWeighted,
    Derivative,
}

impl DecayMode {
    pub fn name(&self) -> &'static str {
        match self {
            DecayMode::Kernel => "kernel",
            DecayMode::KernelBoundaryWeighted => "kernel_boundary_weighted",
            DecayMode::Derivative => "derivative",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecayOptions {
    /// Pairs closer than this many mesh widths are dropped.
    pub cutoff_widths: f64,
    /// When set, the slope fit only uses pairs with
    /// `d(x, y) <= fit_delta_ratio * min(δ(x), δ(y))`, where the boundary
    /// correction to the free-space kernel is still small.
    pub fit_delta_ratio: Option<f64>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            cutoff_widths: 2.0,
            fit_delta_ratio: Some(0.75),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecaySample {
    /// Index into the kernel's sources.
    pub source: usize,
    pub distance: f64,
    /// `δ(x)` at the source.
    pub delta_source: f64,
    /// `δ(y)` at the target.
    pub delta_target: f64,
    /// `|G|` (kernel modes) or `|d_y G|` (derivative mode).
    pub value: f64,
    /// `|d*_y G|` in derivative mode.
    pub codiff_value: f64,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub mode: DecayMode,
    pub dim: usize,
    pub degree: usize,
    pub mesh_width: f64,
    pub pairs_sampled: usize,
    pub pairs_fitted: usize,
    /// Slope of `log q` against `log d` over the fit window with weights `d^{-n}`
    /// (the inverse pair density); for `n = 2` kernel mode, the slope of `|G|`
    /// against `1 + |ln d|`.
    pub fitted_slope: f64,
    /// Max over pairs of the weighted quantity.
    pub empirical_constant: f64,
    /// Derivative mode: the `d_y G` and `d*_y G` constants separately (each only
    /// where it is not identically zero).
    pub d_constant: Option<f64>,
    pub codiff_constant: Option<f64>,
    /// Per log-spaced distance bin, `(distance, max fitted quantity)`, for plotting.
    pub envelope: Vec<(f64, f64)>,
}

fn log_weight(d: f64) -> f64 {
    1.0 + d.ln().abs()
}

/// Raw `(distance, value)` samples of the kernel (or its derivatives) at
/// target top-simplex barycenters, with near-diagonal pairs removed.
pub fn decay_samples(
    mesh: &SimplicialMesh,
    bundle: &FlatBundle,
    lap: &HodgeLaplacian,
    kernel: &GreenKernel,
    cache: &DistanceCache,
    mode: DecayMode,
    cutoff: f64,
) -> Result<Vec<DecaySample>> {
    let n = mesh.dim();
    let p = kernel.degree;
    let ev = FormEvaluator::new(mesh, p, bundle)?;
    let ev_next = if p < n && mode == DecayMode::Derivative {
        Some(FormEvaluator::new(mesh, p + 1, bundle)?)
    } else {
        None
    };
    let ev_prev = if p > 0 && mode == DecayMode::Derivative {
        Some(FormEvaluator::new(mesh, p - 1, bundle)?)
    } else {
        None
    };
    let nt = mesh.n_simplices(n);
    let target_delta: Vec<f64> = (0..nt).map(|t| cache.boundary_distance(mesh.simplex(n, t))).collect();

    let mut samples = Vec::new();
    for (i, col) in kernel.columns.iter().enumerate() {
        let vol = mesh.volume(p, kernel.source_simplex(i));
        let delta_source = cache.source_delta(i);
        let (vals, cvals) = match mode {
            DecayMode::Kernel | DecayMode::KernelBoundaryWeighted => (ev.barycenter_norms(&lap.expand(col)), None),
            DecayMode::Derivative => {
                let dv = match &ev_next {
                    Some(e) => e.barycenter_norms(&lap.expand_next(&lap.diff(col))),
                    None => vec![0.0; nt],
                };
                let cv = match &ev_prev {
                    Some(e) => e.barycenter_norms(&lap.expand_prev(&kernel.codiff_columns[i])),
                    None => vec![0.0; nt],
                };
                (dv, Some(cv))
            }
        };
        for t in 0..nt {
            let d = cache.distance(i, mesh.simplex(n, t));
            if d < cutoff {
                continue;
            }
            samples.push(DecaySample {
                source: i,
                distance: d,
                delta_source,
                delta_target: target_delta[t],
                value: vals[t] / vol,
                codiff_value: cvals.as_ref().map_or(0.0, |c| c[t] / vol),
            });
        }
    }
    Ok(samples)
}

/// Collects weighted kernel samples and fits the decay law.
pub fn decay_report(
    mesh: &SimplicialMesh,
    bundle: &FlatBundle,
    lap: &HodgeLaplacian,
    kernel: &GreenKernel,
    cache: &DistanceCache,
    mode: DecayMode,
    options: &DecayOptions,
) -> Result<DecayReport> {
    let n = mesh.dim();
    let p = kernel.degree;
    if kernel.sources.len() < 8 {
        return Err(Error::InsufficientSamples(format!(
            "{} sources, need at least 8",
            kernel.sources.len()
        )));
    }
    if mode == DecayMode::KernelBoundaryWeighted && cache.boundary.is_none() {
        return Err(Error::UnsupportedConfiguration("boundary-weighted decay needs a boundary".into()));
    }
    let h = mesh.mesh_width();
    let samples = decay_samples(mesh, bundle, lap, kernel, cache, mode, options.cutoff_widths * h)?;
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(format!("{} pairs beyond the cutoff", samples.len())));
    }

    let weight = |s: &DecaySample, v: f64| -> f64 {
        let d = s.distance;
        match (mode, n) {
            (DecayMode::Kernel, 2) => v / log_weight(d),
            (DecayMode::Kernel, _) => v * d.powi(n as i32 - 2),
            (DecayMode::KernelBoundaryWeighted, 2) => v * d / (log_weight(d) * s.delta_source),
            (DecayMode::KernelBoundaryWeighted, _) => v * d.powi(n as i32 - 1) / s.delta_source,
            (DecayMode::Derivative, 2) => v * d / log_weight(d),
            (DecayMode::Derivative, _) => v * d.powi(n as i32 - 1),
        }
    };
    let d_constant = samples.iter().map(|s| weight(s, s.value)).fold(0.0, f64::max);
    let c_constant = samples.iter().map(|s| weight(s, s.codiff_value)).fold(0.0, f64::max);
    let empirical_constant = d_constant.max(c_constant);

    let fitted: Vec<&DecaySample> = samples
        .iter()
        .filter(|s| match options.fit_delta_ratio {
            Some(ratio) => s.distance <= ratio * s.delta_source.min(s.delta_target),
            None => true,
        })
        .collect();
    let quantity = |s: &DecaySample| match mode {
        DecayMode::Kernel => s.value,
        DecayMode::KernelBoundaryWeighted => s.value / s.delta_source,
        DecayMode::Derivative => s.value.max(s.codiff_value),
    };
    let xs: Vec<f64> = fitted.iter().map(|s| s.distance).collect();
    let ys: Vec<f64> = fitted.iter().map(|s| quantity(s)).collect();
    let fit = if mode == DecayMode::Kernel && n == 2 {
        let lx: Vec<f64> = xs.iter().map(|&d| log_weight(d)).collect();
        linear_fit(&lx, &ys)?
    } else {
        density_weighted_loglog_fit(&xs, &ys, n as f64)?
    };

    Ok(DecayReport {
        mode,
        dim: n,
        degree: p,
        mesh_width: h,
        pairs_sampled: samples.len(),
        pairs_fitted: fit.samples,
        fitted_slope: fit.slope,
        empirical_constant,
        // d of an n-form and d* of a 0-form vanish identically
        d_constant: (mode == DecayMode::Derivative && p < n).then_some(d_constant),
        codiff_constant: (mode == DecayMode::Derivative && p > 0).then_some(c_constant),
        envelope: envelope(&xs, &ys, 24),
    })
}

/// Max of `y` in log-spaced bins of `x`.
fn envelope(x: &[f64], y: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    if x.is_empty() || lo <= 0.0 || hi <= lo {
        return x.iter().copied().zip(y.iter().copied()).take(1).collect();
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut best: Vec<Option<(f64, f64)>> = vec![None; bins];
    for (&d, &v) in x.iter().zip(y) {
        if v <= 0.0 {
            continue;
        }
        let b = (((d.ln() - llo) / (lhi - llo)) * bins as f64).min(bins as f64 - 1.0) as usize;
        if best[b].is_none_or(|(_, bv)| v > bv) {
            best[b] = Some((d, v));
        }
    }
    best.into_iter().flatten().collect()
}

/// Outcome of the integral-representation check.
#[derive(Clone, Debug)]
pub struct RepresentationReport {
    /// True when the boundary term was needed (`f` does not vanish on the boundary).
    pub full_boundary: bool,
    pub exact: Vec<f64>,
    pub volume_term: Vec<f64>,
    pub boundary_term: Vec<f64>,
    /// `|reconstruction - f|` over the kernel sources, relative to the largest `|f|` there
    /// (max norm for the compactly supported case, Euclidean norm for the full case).
    pub relative_error: f64,
}

impl RepresentationReport {
    pub fn reconstruction(&self) -> Vec<f64> {
        self.volume_term.iter().zip(&self.boundary_term).map(|(a, b)| a + b).collect()
    }
}

/// Reconstructs `f` at the kernel sources from `Δf` and, for functions that do
/// not vanish on the boundary, from boundary values through the discrete
/// normal derivative of the kernel.
///
/// `laplacian_f` holds nodal samples of `Δf` and is required in the full case.
pub fn integral_representation_check(
    mesh: &SimplicialMesh,
    bundle: &FlatBundle,
    lap: &HodgeLaplacian,
    kernel: &GreenKernel,
    f: &Cochain,
    laplacian_f: Option<&Cochain>,
) -> Result<RepresentationReport> {
    if lap.bc() != BoundaryCondition::Dirichlet {
        return Err(Error::UnsupportedConfiguration("representation needs the Dirichlet kernel".into()));
    }
    if f.degree != kernel.degree || f.rank != kernel.rank {
        return Err(Error::ShapeMismatch("cochain does not match the kernel".into()));
    }
    let exact: Vec<f64> = kernel.sources.iter().map(|&s| f.values[s]).collect();
    let scale = max_abs(&f.values);
    let restricted = lap.restrict(&f.values);
    let on_boundary = {
        let mut full = lap.expand(&restricted);
        full.iter_mut().zip(&f.values).for_each(|(a, b)| *a -= b);
        max_abs(&full)
    };
    if on_boundary <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        let weak = lap.weak_apply(&restricted);
        let volume_term: Vec<f64> = kernel.columns.iter().map(|c| dot(c, &weak)).collect();
        let err = volume_term
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        return Ok(RepresentationReport {
            full_boundary: false,
            boundary_term: vec![0.0; exact.len()],
            relative_error: if scale == 0.0 { err } else { err / scale },
            exact,
            volume_term,
        });
    }
    if kernel.degree != 0 {
        return Err(Error::UnsupportedConfiguration(
            "boundary terms are only implemented for functions".into(),
        ));
    }
    let lf = laplacian_f.ok_or_else(|| Error::InvalidParams("full representation needs samples of the Laplacian".into()))?;
    if lf.values.len() != f.values.len() {
        return Err(Error::ShapeMismatch("Laplacian samples do not match f".into()));
    }
    let full = hodge_laplacian(mesh, 0, bundle, BoundaryCondition::Neumann)?;
    let weak_full = full.mass.mul_vec(&lf.values);
    let weak = lap.restrict(&weak_full);
    // K f restricted to interior rows, using only the boundary values of f
    let boundary_only: Vec<f64> = f
        .values
        .iter()
        .zip(lap.expand(&restricted))
        .map(|(a, b)| a - b)
        .collect();
    let kb = lap.restrict(&full.curl.mul_vec(&boundary_only));
    let volume_term: Vec<f64> = kernel.columns.iter().map(|c| dot(c, &weak)).collect();
    let boundary_term: Vec<f64> = kernel.columns.iter().map(|c| -dot(c, &kb)).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for ((v, b), e) in volume_term.iter().zip(&boundary_term).zip(&exact) {
        num += (v + b - e).powi(2);
        den += e * e;
    }
    Ok(RepresentationReport {
        full_boundary: true,
        relative_error: if den == 0.0 { num.sqrt() } else { (num / den).sqrt() },
        exact,
        volume_term,
        boundary_term,
    })
}

/// Outcome of the interior gradient estimate on one ball.
#[derive(Clone, Debug)]
pub struct GradientReport {
    pub radius: f64,
    pub mesh_width: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

fn distance_to(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm3(&sub3(a, b))
}

/// Checks that `B(center, radius)` is interior and resolved by at least 8 mesh widths.
pub fn check_ball(mesh: &SimplicialMesh, center: [f64; 3], radius: f64) -> Result<()> {
    let min_radius = 8.0 * mesh.mesh_width();
    if radius < min_radius {
        return Err(Error::BallTooSmall { radius, min_radius });
    }
    let gap = mesh
        .boundary_vertices()
        .iter()
        .map(|&v| distance_to(&mesh.vertex(v), &center))
        .fold(f64::INFINITY, f64::min);
    if gap < radius {
        return Err(Error::InvalidParams(format!(
            "ball of radius {radius} around {center:?} reaches the boundary (gap {gap:.3})"
        )));
    }
    Ok(())
}

/// `r · max(sup_{B(r/2)} |df|, sup_{B(r/2)} |d*f|) / sup_{B(r)} |f|` with sups over
/// top-simplex barycenters; `f` is given on the Laplacian's free DOFs.
pub fn gradient_ratio(
    mesh: &SimplicialMesh,
    bundle: &FlatBundle,
    lap: &HodgeLaplacian,
    f: &[f64],
    center: [f64; 3],
    radius: f64,
) -> Result<f64> {
    let n = mesh.dim();
    let p = lap.degree();
    let nt = mesh.n_simplices(n);
    let dist: Vec<f64> = (0..nt).map(|t| distance_to(&mesh.barycenter(n, t), &center)).collect();
    let sup_in = |vals: &[f64], r: f64| {
        vals.iter()
            .zip(&dist)
            .filter(|(_, &d)| d < r)
            .map(|(v, _)| *v)
            .fold(0.0, f64::max)
    };
    let fv = FormEvaluator::new(mesh, p, bundle)?.barycenter_norms(&lap.expand(f));
    let sup_f = sup_in(&fv, radius);
    let mut sup_d = 0.0f64;
    if p < n {
        let dv = FormEvaluator::new(mesh, p + 1, bundle)?.barycenter_norms(&lap.expand_next(&lap.diff(f)));
        sup_d = sup_d.max(sup_in(&dv, radius / 2.0));
    }
    if p > 0 {
        let cv = FormEvaluator::new(mesh, p - 1, bundle)?.barycenter_norms(&lap.expand_prev(&lap.codiff(f)));
        sup_d = sup_d.max(sup_in(&cv, radius / 2.0));
    }
    if sup_f == 0.0 {
        return Ok(0.0);
    }
    Ok(radius * sup_d / sup_f)
}

/// Ensemble of discrete `Δ_p`-harmonic forms on `B(center, radius)`: each is
/// `G g` for a random weak source `g` supported outside `B(center, 1.25 radius)`.
pub fn gradient_estimate_check(
    mesh: &SimplicialMesh,
    bundle: &FlatBundle,
    p: usize,
    center: [f64; 3],
    radius: f64,
    ensemble: usize,
    seed: u64,
) -> Result<GradientReport> {
    check_ball(mesh, center, radius)?;
    let solver = LaplaceSolver::assemble(mesh, p, bundle, BoundaryCondition::Dirichlet)?;
    let lap = solver.laplacian();
    let r = lap.rank();
    let far: Vec<bool> = lap
        .free_dofs()
        .iter()
        .map(|&g| distance_to(&mesh.barycenter(p, g / r), &center) > 1.25 * radius)
        .collect();
    let mut rng = SeededRng::stream(seed, 0x6EAD);
    let mut ratios = Vec::with_capacity(ensemble);
    for _ in 0..ensemble {
        let g: Vec<f64> = far.iter().map(|&f| if f { rng.normal() } else { 0.0 }).collect();
        let sol = solver.solve_weak(&g)?;
        ratios.push(gradient_ratio(mesh, bundle, lap, &sol.u, center, radius)?);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(GradientReport {
        radius,
        mesh_width: mesh.mesh_width(),
        ratios,
        max_ratio,
    })
}

/// `d_y` applied to every column, for callers that want the raw derivative cochains.
pub fn kernel_derivatives(mesh: &SimplicialMesh, bundle: &FlatBundle, lap: &HodgeLaplacian, kernel: &GreenKernel) -> Result<Vec<Vec<f64>>> {
    if kernel.degree >= mesh.dim() {
        return Ok(vec![Vec::new(); kernel.columns.len()]);
    }
    let d = exterior_derivative(mesh, kernel.degree, bundle)?.matrix;
    Ok(kernel.columns.iter().map(|c| d.mul_vec(&lap.expand(c))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshShape};

    #[test]
    fn envelope_keeps_bin_maxima() {
        let x = [1.0, 1.1, 10.0, 9.0];
        let y = [1.0, 3.0, 0.5, 0.7];
        let env = envelope(&x, &y, 2);
        assert_eq!(env, vec![(1.1, 3.0), (9.0, 0.7)]);
    }

    #[test]
    fn linear_function_gradient_ratio() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 24).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        let lap = hodge_laplacian(&m, 0, &b, BoundaryCondition::Neumann).unwrap();
        let x: Vec<f64> = m.vertices().iter().map(|v| v[0]).collect();
        let ratio = gradient_ratio(&m, &b, &lap, &x, [0.0; 3], 0.5).unwrap();
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
        let c = vec![2.0; m.n_vertices()];
        assert_eq!(gradient_ratio(&m, &b, &lap, &c, [0.0; 3], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn ball_checks() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 8).unwrap();
        assert!(matches!(check_ball(&m, [0.0; 3], 0.1), Err(Error::BallTooSmall { .. })));
    }
}
