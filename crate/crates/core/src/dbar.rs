//! Finite-difference model of the weighted `∂̄` problem on a planar domain.
//!
//! Complex node values are stored as interleaved `[re, im]` pairs, so every
//! complex coefficient becomes a 2×2 real block. `∂̄ = (∂_x + i∂_y)/2` uses
//! forward differences: it maps values on the interior nodes and their `+x`,
//! `+y` neighbors (the solution nodes) to values on the interior nodes.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SpdSolver};
use crate::rng::SeededRng;

/// Grid, defining function and weight on a bounding box.
#[derive(Clone, Debug)]
pub struct PlanarDomain {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    /// `ρ < 0` per grid node.
    pub interior: Vec<bool>,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    /// Minimum of the 5-point `Δφ` over interior nodes.
    pub epsilon: f64,
}

impl PlanarDomain {
    /// Nodes of `[-half_width, half_width]²` with spacing `h`, padded by two
    /// cells so every interior node has its full stencil.
    pub fn new(
        h: f64,
        half_width: f64,
        rho: impl Fn(f64, f64) -> f64,
        phi: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if !(h > 0.0) || !(half_width > 0.0) || h >= half_width {
            return Err(Error::InvalidParams(format!("grid spacing {h} for half width {half_width}")));
        }
        let cells = (half_width / h).ceil() as usize + 2;
        let nx = 2 * cells + 1;
        let ny = nx;
        let origin = [-(cells as f64) * h, -(cells as f64) * h];
        let mut rv = Vec::with_capacity(nx * ny);
        let mut pv = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (origin[0] + i as f64 * h, origin[1] + j as f64 * h);
                rv.push(rho(x, y));
                pv.push(phi(x, y));
            }
        }
        let interior: Vec<bool> = rv.iter().map(|&r| r < 0.0).collect();
        let mut d = PlanarDomain {
            h,
            nx,
            ny,
            origin,
            interior,
            rho: rv,
            phi: pv,
            epsilon: f64::INFINITY,
        };
        let mut eps = f64::INFINITY;
        for n in 0..nx * ny {
            if d.interior[n] {
                eps = eps.min(d.laplacian_phi(n));
            }
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParams(format!("weight is not strictly subharmonic: min Δφ = {eps:.3e}")));
        }
        d.epsilon = eps;
        Ok(d)
    }

    /// Unit disk, `ρ = |z|² - 1`, weight `φ = c|z|²`.
    pub fn disk(h: f64, weight_scale: f64) -> Result<Self> {
        PlanarDomain::new(h, 1.0, |x, y| x * x + y * y - 1.0, |x, y| weight_scale * (x * x + y * y))
    }

    pub fn point(&self, n: usize) -> (f64, f64) {
        let (i, j) = (n % self.nx, n / self.nx);
        (self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h)
    }

    fn laplacian_phi(&self, n: usize) -> f64 {
        let nx = self.nx;
        (self.phi[n + 1] + self.phi[n - 1] + self.phi[n + nx] + self.phi[n - nx] - 4.0 * self.phi[n]) / (self.h * self.h)
    }

    fn neighbors(&self, n: usize) -> [usize; 4] {
        [n + 1, n - 1, n + self.nx, n - self.nx]
    }

    /// Connected components of the interior mask under 4-adjacency.
    pub fn interior_components(&self) -> usize {
        let mut seen = vec![false; self.interior.len()];
        let mut count = 0;
        for s in 0..self.interior.len() {
            if !self.interior[s] || seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for w in self.neighbors(v) {
                    if self.interior[w] && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }
}

/// Assembled forward-difference `∂̄` with weights and the curvature term `A = Δφ/4`.
pub struct DbarSystem {
    pub domain: PlanarDomain,
    /// Interior grid nodes (rows of `∂̄`).
    pub interior_nodes: Vec<usize>,
    /// Interior nodes plus their `+x`, `+y` neighbors (columns of `∂̄`).
    pub solution_nodes: Vec<usize>,
    /// `∂̄` as a `2 N_int × 2 N_sol` real matrix.
    pub dbar: CsrMatrix,
    /// `e^{-φ} h²` per solution node.
    pub weight_solution: Vec<f64>,
    /// `e^{-φ} h²` per interior node.
    pub weight_interior: Vec<f64>,
    /// `Δφ / 4` per interior node.
    pub a: Vec<f64>,
    interior_pos: Vec<Option<usize>>,
    boundary: Vec<usize>,
    normal: SpdSolver,
}

pub fn build_system(domain: PlanarDomain) -> Result<DbarSystem> {
    let components = domain.interior_components();
    if components != 1 {
        return Err(Error::DisconnectedInterior { components });
    }
    let total = domain.nx * domain.ny;
    let interior_nodes: Vec<usize> = (0..total).filter(|&n| domain.interior[n]).collect();
    let mut in_solution = vec![false; total];
    for &n in &interior_nodes {
        in_solution[n] = true;
        in_solution[n + 1] = true;
        in_solution[n + domain.nx] = true;
    }
    let solution_nodes: Vec<usize> = (0..total).filter(|&n| in_solution[n]).collect();
    let mut sol_pos = vec![usize::MAX; total];
    for (k, &n) in solution_nodes.iter().enumerate() {
        sol_pos[n] = k;
    }
    let mut interior_pos = vec![None; total];
    for (k, &n) in interior_nodes.iter().enumerate() {
        interior_pos[n] = Some(k);
    }

    // ∂̄(a + ib) = ((a_x - b_y) + i(b_x + a_y)) / 2
    let c = 0.5 / domain.h;
    let mut trips = Vec::with_capacity(interior_nodes.len() * 8);
    for (row, &n) in interior_nodes.iter().enumerate() {
        let (o, ex, ey) = (sol_pos[n], sol_pos[n + 1], sol_pos[n + domain.nx]);
        let (re, im) = (2 * row, 2 * row + 1);
        // a_x and b_x
        trips.push((re, 2 * ex, c));
        trips.push((re, 2 * o, -c));
        trips.push((im, 2 * ex + 1, c));
        trips.push((im, 2 * o + 1, -c));
        // -b_y and a_y
        trips.push((re, 2 * ey + 1, -c));
        trips.push((re, 2 * o + 1, c));
        trips.push((im, 2 * ey, c));
        trips.push((im, 2 * o, -c));
    }
    let dbar = CsrMatrix::from_triplets(2 * interior_nodes.len(), 2 * solution_nodes.len(), &trips);

    let h2 = domain.h * domain.h;
    let weight_solution: Vec<f64> = solution_nodes.iter().map(|&n| (-domain.phi[n]).exp() * h2).collect();
    let weight_interior: Vec<f64> = interior_nodes.iter().map(|&n| (-domain.phi[n]).exp() * h2).collect();
    let a: Vec<f64> = interior_nodes.iter().map(|&n| domain.laplacian_phi(n) / 4.0).collect();
    let boundary = interior_nodes
        .iter()
        .enumerate()
        .filter(|(_, &n)| domain.neighbors(n).iter().any(|&w| !domain.interior[w]))
        .map(|(k, _)| k)
        .collect();

    // S = D W^{-1} D^T
    let inv_w: Vec<f64> = weight_solution.iter().flat_map(|w| [1.0 / w, 1.0 / w]).collect();
    let s = dbar.matmul(&CsrMatrix::from_diagonal(&inv_w)).matmul(&dbar.transpose());
    let normal = SpdSolver::new(&s)?;
    Ok(DbarSystem {
        domain,
        interior_nodes,
        solution_nodes,
        dbar,
        weight_solution,
        weight_interior,
        a,
        interior_pos,
        boundary,
        normal,
    })
}

fn weighted_sq(v: &[f64], w: &[f64]) -> f64 {
    w.iter().enumerate().map(|(k, w)| w * (v[2 * k].powi(2) + v[2 * k + 1].powi(2))).sum()
}

impl DbarSystem {
    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn n_solution(&self) -> usize {
        self.solution_nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.domain.h
    }

    /// Samples `g(x, y) -> (re, im)` on interior nodes.
    pub fn sample_interior(&self, g: impl Fn(f64, f64) -> (f64, f64)) -> Vec<f64> {
        self.sample(&self.interior_nodes, g)
    }

    /// Samples `g(x, y) -> (re, im)` on solution nodes.
    pub fn sample_solution(&self, g: impl Fn(f64, f64) -> (f64, f64)) -> Vec<f64> {
        self.sample(&self.solution_nodes, g)
    }

    fn sample(&self, nodes: &[usize], g: impl Fn(f64, f64) -> (f64, f64)) -> Vec<f64> {
        nodes
            .iter()
            .flat_map(|&n| {
                let (x, y) = self.domain.point(n);
                let (re, im) = g(x, y);
                [re, im]
            })
            .collect()
    }

    pub fn apply_dbar(&self, u: &[f64]) -> Vec<f64> {
        self.dbar.mul_vec(u)
    }

    /// Hilbert adjoint of `∂̄` in the weighted inner products.
    pub fn dbar_adjoint(&self, v: &[f64]) -> Vec<f64> {
        let wv: Vec<f64> = v.iter().enumerate().map(|(i, x)| x * self.weight_interior[i / 2]).collect();
        let mut out = self.dbar.transpose_mul_vec(&wv);
        out.iter_mut().enumerate().for_each(|(i, x)| *x /= self.weight_solution[i / 2]);
        out
    }

    /// `Σ e^{-φ}|u|² h²` on solution nodes.
    pub fn norm_sq_solution(&self, u: &[f64]) -> f64 {
        weighted_sq(u, &self.weight_solution)
    }

    /// `Σ e^{-φ}|f|² h²` on interior nodes.
    pub fn norm_sq_interior(&self, f: &[f64]) -> f64 {
        weighted_sq(f, &self.weight_interior)
    }

    /// `N_f = Σ e^{-φ}|f|²/A h²`.
    pub fn n_f(&self, f: &[f64]) -> f64 {
        self.weight_interior
            .iter()
            .zip(&self.a)
            .enumerate()
            .map(|(k, (w, a))| w * (f[2 * k].powi(2) + f[2 * k + 1].powi(2)) / a)
            .sum()
    }

    /// `Σ e^{-φ}|f|² h` over interior nodes with a 4-neighbor outside.
    pub fn boundary_norm_sq(&self, f: &[f64]) -> f64 {
        self.boundary
            .iter()
            .map(|&k| {
                let n = self.interior_nodes[k];
                (-self.domain.phi[n]).exp() * self.domain.h * (f[2 * k].powi(2) + f[2 * k + 1].powi(2))
            })
            .sum()
    }

    /// Formal weighted adjoint of `∂ = (∂_x - i∂_y)/2`:
    /// `∂* g = -e^{φ} (∂_x + i∂_y)(e^{-φ} g) / 2` with backward differences,
    /// on interior nodes whose backward stencil is interior (zero elsewhere).
    pub fn partial_star(&self, g: &[f64]) -> Vec<f64> {
        let nx = self.domain.nx;
        let phi = &self.domain.phi;
        let c = 0.5 / self.domain.h;
        let mut out = vec![0.0; g.len()];
        for (k, &n) in self.interior_nodes.iter().enumerate() {
            let (Some(kx), Some(ky)) = (self.interior_pos[n - 1], self.interior_pos[n - nx]) else {
                continue;
            };
            let val = |j: usize, node: usize| -> (f64, f64) {
                let e = (-phi[node]).exp();
                (e * g[2 * j], e * g[2 * j + 1])
            };
            let (a0, b0) = val(k, n);
            let (ax, bx) = val(kx, n - 1);
            let (ay, by) = val(ky, n - nx);
            // (∂_x + i∂_y)(a + ib) = (a_x - b_y) + i(b_x + a_y)
            let re = c * ((a0 - ax) - (b0 - by));
            let im = c * ((b0 - bx) + (a0 - ay));
            let s = -phi[n].exp();
            out[2 * k] = s * re;
            out[2 * k + 1] = s * im;
        }
        out
    }

    /// Weighted minimal-norm solution of `∂̄u = f` via `u = W^{-1} D^T S^{-1} f`.
    pub fn minimal_solution(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != 2 * self.n_interior() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} interior nodes",
                f.len(),
                self.n_interior()
            )));
        }
        let fnorm = crate::linalg::norm2(f);
        if fnorm == 0.0 {
            return Ok(vec![0.0; 2 * self.n_solution()]);
        }
        let y = self.normal.solve(f);
        let mut u = self.dbar.transpose_mul_vec(&y);
        u.iter_mut().enumerate().for_each(|(i, x)| *x /= self.weight_solution[i / 2]);
        let res = crate::linalg::sub(&self.dbar.mul_vec(&u), f);
        let residual = crate::linalg::norm2(&res) / fnorm;
        if !(residual <= 1e-10) {
            return Err(Error::RankDeficient { residual });
        }
        Ok(u)
    }

    /// Random smooth data: complex Fourier modes `exp(iπ(k_x x + k_y y)/2)`
    /// with `|k_x|, |k_y| ≤ max_freq` and Gaussian coefficients damped by `1/(1 + |k|²)`.
    pub fn band_limited_ensemble(&self, count: usize, max_freq: i32, seed: u64) -> Vec<Vec<f64>> {
        let freqs: Vec<(i32, i32)> = (-max_freq..=max_freq)
            .flat_map(|a| (-max_freq..=max_freq).map(move |b| (a, b)))
            .collect();
        (0..count)
            .map(|i| {
                let mut rng = SeededRng::stream(seed, i as u64);
                let coeffs: Vec<(f64, f64)> = freqs
                    .iter()
                    .map(|&(a, b)| {
                        let damp = 1.0 / (1.0 + (a * a + b * b) as f64);
                        (damp * rng.normal(), damp * rng.normal())
                    })
                    .collect();
                self.sample_interior(|x, y| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (&(a, b), &(cr, ci)) in freqs.iter().zip(&coeffs) {
                        let t = std::f64::consts::FRAC_PI_2 * (a as f64 * x + b as f64 * y);
                        let (s, c) = t.sin_cos();
                        re += cr * c - ci * s;
                        im += cr * s + ci * c;
                    }
                    (re, im)
                })
            })
            .collect()
    }
}

/// Largest `|<∂̄u, v>_w - <u, ∂̄* v>_w| / (|∂̄u|_w |v|_w)` over random pairs.
pub fn adjoint_defect(system: &DbarSystem, pairs: usize, seed: u64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let mut rng = SeededRng::stream(seed, i as u64);
        let u = rng.normal_vec(2 * system.n_solution());
        let v = rng.normal_vec(2 * system.n_interior());
        let du = system.apply_dbar(&u);
        let lhs = weighted_dot(&du, &v, &system.weight_interior);
        let rhs = weighted_dot(&u, &system.dbar_adjoint(&v), &system.weight_solution);
        let scale = (system.norm_sq_interior(&du) * system.norm_sq_interior(&v)).sqrt();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).enumerate().map(|(i, (x, y))| x * y * w[i / 2]).sum()
}

/// 81 points, logarithmically spaced on `[1e-6, 1e2]`.
pub fn delta_grid() -> Vec<f64> {
    (0..81).map(|i| 10f64.powf(-6.0 + 0.1 * i as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DbarSample {
    pub f_norm_sq: f64,
    pub n_f: f64,
    pub u_norm_sq: f64,
    /// Largest grid `δ` with `|u|² ≤ |f| N_f / sqrt(|f|² + δ N_f)` (0 if none).
    pub delta_hat: f64,
}

#[derive(Clone, Debug)]
pub struct ImprovedReport {
    pub h: f64,
    pub epsilon: f64,
    pub samples: Vec<DbarSample>,
    pub min_delta_hat: f64,
}

/// Improved bound `|u|² ≤ |f| N_f / sqrt(|f|² + δ N_f)` for the minimal solution.
/// Errors if the classical bound `|u|² ≤ N_f` fails for any sample.
pub fn improved_estimate_check(system: &DbarSystem, ensemble: &[Vec<f64>], delta_grid: &[f64]) -> Result<ImprovedReport> {
    let mut samples = Vec::with_capacity(ensemble.len());
    for f in ensemble {
        let f_norm_sq = system.norm_sq_interior(f);
        if f_norm_sq == 0.0 {
            continue;
        }
        let u = system.minimal_solution(f)?;
        let u_norm_sq = system.norm_sq_solution(&u);
        let n_f = system.n_f(f);
        if u_norm_sq > n_f {
            return Err(Error::BaselineViolated { u_norm_sq, n_f });
        }
        let fnorm = f_norm_sq.sqrt();
        let delta_hat = delta_grid
            .iter()
            .copied()
            .filter(|&d| u_norm_sq <= fnorm * n_f / (f_norm_sq + d * n_f).sqrt())
            .fold(0.0, f64::max);
        samples.push(DbarSample {
            f_norm_sq,
            n_f,
            u_norm_sq,
            delta_hat,
        });
    }
    let min_delta_hat = samples.iter().map(|s| s.delta_hat).fold(f64::INFINITY, f64::min);
    Ok(ImprovedReport {
        h: system.h(),
        epsilon: system.domain.epsilon,
        samples,
        min_delta_hat,
    })
}

#[derive(Clone, Debug)]
pub struct L2SobolevReport {
    pub h: f64,
    /// `(|f|, |∂*f| + |f|_∂)` per nonzero sample.
    pub samples: Vec<(f64, f64)>,
    pub delta_hat: f64,
}

/// `δ |f| ≤ |∂*f| + |f|_{∂Ω}` over the ensemble; zero samples are skipped.
pub fn l2_sobolev_check(system: &DbarSystem, ensemble: &[Vec<f64>]) -> L2SobolevReport {
    let mut samples = Vec::new();
    for f in ensemble {
        let lhs = system.norm_sq_interior(f).sqrt();
        if lhs == 0.0 {
            continue;
        }
        let rhs = system.norm_sq_interior(&system.partial_star(f)).sqrt() + system.boundary_norm_sq(f).sqrt();
        samples.push((lhs, rhs));
    }
    let delta_hat = samples.iter().map(|(l, r)| r / l).fold(f64::INFINITY, f64::min);
    L2SobolevReport {
        h: system.h(),
        samples,
        delta_hat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn system(h: f64, c: f64) -> DbarSystem {
        build_system(PlanarDomain::disk(h, c).unwrap()).unwrap()
    }

    #[test]
    fn affine_and_quadratic_data() {
        let h = 1.0 / 32.0;
        let s = system(h, 1.0);
        let one = s.sample_solution(|_, _| (1.0, 0.0));
        assert_eq!(max_abs(&s.apply_dbar(&one)), 0.0);
        let zbar = s.sample_solution(|x, y| (x, -y));
        let d = s.apply_dbar(&zbar);
        for k in 0..s.n_interior() {
            assert!((d[2 * k] - 1.0).abs() < 1e-12 && d[2 * k + 1].abs() < 1e-12);
        }
        let z2 = s.sample_solution(|x, y| (x * x - y * y, 2.0 * x * y));
        assert!(max_abs(&s.apply_dbar(&z2)) <= 10.0 * h);
        assert!((s.a.iter().fold(0.0f64, |m, a| m.max((a - 1.0).abs()))) < 1e-9);
    }

    #[test]
    fn minimal_solution_beats_particular_solutions() {
        let s = system(1.0 / 16.0, 1.0);
        let zbar = s.sample_solution(|x, y| (x, -y));
        let f = s.apply_dbar(&zbar);
        let u = s.minimal_solution(&f).unwrap();
        assert!(s.norm_sq_solution(&u) <= s.norm_sq_solution(&zbar) + 1e-12);
        let zero = s.minimal_solution(&vec![0.0; f.len()]).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn adjoint_is_weighted_transpose() {
        let s = system(1.0 / 12.0, 1.0);
        let mut rng = SeededRng::new(4);
        for _ in 0..10 {
            let u = rng.normal_vec(2 * s.n_solution());
            let v = rng.normal_vec(2 * s.n_interior());
            let lhs: f64 = s.apply_dbar(&u).iter().zip(&v).enumerate().map(|(i, (a, b))| a * b * s.weight_interior[i / 2]).sum();
            let rhs: f64 = u.iter().zip(s.dbar_adjoint(&v)).enumerate().map(|(i, (a, b))| a * b * s.weight_solution[i / 2]).sum();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
        }
        assert!(adjoint_defect(&s, 20, 9) < 1e-12);
    }

    #[test]
    fn disconnected_interior_is_rejected() {
        let d = PlanarDomain::new(0.1, 1.0, |x, y| (x.abs() - 0.6).powi(2) + y * y - 0.09, |x, y| x * x + y * y).unwrap();
        assert!(matches!(build_system(d), Err(Error::DisconnectedInterior { components: 2 })));
        assert!(PlanarDomain::new(0.1, 1.0, |x, y| x * x + y * y - 1.0, |x, _| -x * x).is_err());
    }

    #[test]
    fn constant_data_bounds() {
        let s = system(1.0 / 24.0, 1.0);
        let f = s.sample_interior(|_, _| (1.0, 0.0));
        // A = 1 makes N_f = |f|², so the classical bound is |u|² ≤ |f|²
        assert!((s.n_f(&f) - s.norm_sq_interior(&f)).abs() < 1e-9 * s.n_f(&f));
        let rep = improved_estimate_check(&s, &[f.clone()], &delta_grid()).unwrap();
        assert!(rep.samples[0].u_norm_sq <= rep.samples[0].f_norm_sq);
        assert!(rep.min_delta_hat > 0.0);
        let point: Vec<f64> = (0..f.len()).map(|i| if i == 2 * (s.n_interior() / 2) { 1.0 } else { 0.0 }).collect();
        let rep = improved_estimate_check(&s, &[point], &delta_grid()).unwrap();
        assert!(rep.min_delta_hat >= 0.0);
        // ∂* of a constant vanishes away from the staircase when φ = 0
        let flat = build_system(PlanarDomain::new(1.0 / 24.0, 1.0, |x, y| x * x + y * y - 1.0, |x, y| 1e-9 * (x * x + y * y)).unwrap()).unwrap();
        let one = flat.sample_interior(|_, _| (1.0, 0.0));
        assert!(max_abs(&flat.partial_star(&one)) < 1e-6);
    }
}
