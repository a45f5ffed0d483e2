//! Lowest-order Whitney forms on a single simplex.
//!
//! With barycentric coordinates `λ_i`, the Whitney form of the local face
//! `σ = (σ_0 < … < σ_p)` is
//! `φ_σ = p! Σ_j (-1)^j λ_{σ_j} dλ_{σ_0} ∧ … ∧ \widehat{dλ_{σ_j}} ∧ … ∧ dλ_{σ_p}`,
//! normalized so that `∫_τ φ_σ = δ_{στ}`.

use crate::mesh::{det_small, factorial, for_each_subset, Point};

/// Barycentric gradients of one top simplex.
#[derive(Clone, Debug)]
pub struct SimplexGeometry {
    pub dim: usize,
    pub volume: f64,
    pub grads: Vec<Point>,
}

impl SimplexGeometry {
    /// `points` are the `dim + 1` vertices (unwrapped) of a full-dimensional simplex.
    pub fn new(points: &[Point], volume: f64) -> Self {
        let n = points.len() - 1;
        let e: Vec<Point> = points[1..]
            .iter()
            .map(|p| [p[0] - points[0][0], p[1] - points[0][1], p[2] - points[0][2]])
            .collect();
        // Rows of E^{-1}, where E has the edge vectors as columns, are ∇λ_1..∇λ_n.
        let mut grads = vec![[0.0; 3]; n + 1];
        match n {
            2 => {
                let det = e[0][0] * e[1][1] - e[1][0] * e[0][1];
                grads[1] = [e[1][1] / det, -e[1][0] / det, 0.0];
                grads[2] = [-e[0][1] / det, e[0][0] / det, 0.0];
            }
            3 => {
                let cross = |a: &Point, b: &Point| {
                    [
                        a[1] * b[2] - a[2] * b[1],
                        a[2] * b[0] - a[0] * b[2],
                        a[0] * b[1] - a[1] * b[0],
                    ]
                };
                let c12 = cross(&e[1], &e[2]);
                let det = e[0][0] * c12[0] + e[0][1] * c12[1] + e[0][2] * c12[2];
                let c20 = cross(&e[2], &e[0]);
                let c01 = cross(&e[0], &e[1]);
                for ax in 0..3 {
                    grads[1][ax] = c12[ax] / det;
                    grads[2][ax] = c20[ax] / det;
                    grads[3][ax] = c01[ax] / det;
                }
            }
            _ => panic!("Whitney geometry needs a 2- or 3-simplex"),
        }
        for ax in 0..3 {
            grads[0][ax] = -(1..=n).map(|i| grads[i][ax]).sum::<f64>();
        }
        SimplexGeometry { dim: n, volume, grads }
    }

    fn gram(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (&self.grads[a], &self.grads[b]);
        x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
    }

    /// `<dλ_I, dλ_J>` for equal-length local index lists.
    fn wedge_inner(&self, i: &[usize], j: &[usize]) -> f64 {
        let m: Vec<Vec<f64>> = i.iter().map(|&a| j.iter().map(|&b| self.gram(a, b)).collect()).collect();
        det_small(&m)
    }

    /// Local mass matrix over all `p`-faces, faces in lexicographic local order.
    pub fn local_mass(&self, p: usize) -> (Vec<Vec<usize>>, Vec<f64>) {
        let n = self.dim;
        let faces = local_faces(n, p);
        let nf = faces.len();
        let mut m = vec![0.0; nf * nf];
        let lam = |a: usize, b: usize| {
            self.volume * if a == b { 2.0 } else { 1.0 } / ((n + 1) * (n + 2)) as f64
        };
        let pf2 = factorial(p).powi(2);
        for (si, s) in faces.iter().enumerate() {
            for (ti, t) in faces.iter().enumerate().skip(si) {
                let mut acc = 0.0;
                for j in 0..=p {
                    let sj: Vec<usize> = omit(s, j);
                    for k in 0..=p {
                        let tk: Vec<usize> = omit(t, k);
                        let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * lam(s[j], t[k]) * self.wedge_inner(&sj, &tk);
                    }
                }
                m[si * nf + ti] = pf2 * acc;
                m[ti * nf + si] = pf2 * acc;
            }
        }
        (faces, m)
    }

    /// Components of `φ_σ` at barycentric point `mu`, over increasing `p`-subsets of the axes.
    pub fn eval_basis(&self, face: &[usize], mu: &[f64]) -> Vec<f64> {
        let p = face.len() - 1;
        let axes = axis_subsets(self.dim, p);
        let scale = factorial(p);
        let mut out = vec![0.0; axes.len()];
        for j in 0..=p {
            let coef = scale * mu[face[j]] * if j % 2 == 0 { 1.0 } else { -1.0 };
            if coef == 0.0 {
                continue;
            }
            let rest = omit(face, j);
            for (c, ax) in axes.iter().enumerate() {
                let m: Vec<Vec<f64>> = rest
                    .iter()
                    .map(|&a| ax.iter().map(|&x| self.grads[a][x]).collect())
                    .collect();
                out[c] += coef * det_small(&m);
            }
        }
        out
    }
}

pub(crate) fn omit(s: &[usize], j: usize) -> Vec<usize> {
    s.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect()
}

/// Local `p`-faces of an `n`-simplex as sorted local vertex lists.
pub fn local_faces(n: usize, p: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..=n).collect();
    let mut out = Vec::new();
    for_each_subset(&all, p + 1, |s| out.push(s.to_vec()));
    out
}

/// Increasing `p`-subsets of the coordinate axes `0..n`.
pub fn axis_subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![Vec::new()];
    }
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for_each_subset(&all, p, |s| out.push(s.to_vec()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn right_triangle() -> SimplexGeometry {
        SimplexGeometry::new(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 0.5)
    }

    fn tet() -> SimplexGeometry {
        let pts = [[0.1, 0.0, 0.0], [1.0, 0.2, 0.0], [0.0, 1.0, 0.3], [0.2, 0.1, 0.9]];
        let e: Vec<Point> = pts[1..].iter().map(|p| [p[0] - pts[0][0], p[1] - pts[0][1], p[2] - pts[0][2]]).collect();
        let det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
        SimplexGeometry::new(&pts, det.abs() / 6.0)
    }

    #[test]
    fn gradients_sum_to_zero_and_are_dual_to_edges() {
        let g = tet();
        for ax in 0..3 {
            assert!(g.grads.iter().map(|x| x[ax]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn scalar_mass_sums_to_area() {
        let (_, m) = right_triangle().local_mass(0);
        assert!((m.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!((m[0] - 0.5 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn top_mass_is_inverse_volume() {
        let t = right_triangle();
        let (_, m) = t.local_mass(2);
        assert!((m[0] - 2.0).abs() < 1e-13);
        let g = tet();
        let (_, m3) = g.local_mass(3);
        assert!((m3[0] - 1.0 / g.volume).abs() < 1e-10 * m3[0]);
    }

    /// Mass entries match a quadrature of the pointwise basis (degree-2 exact rule).
    #[test]
    fn mass_matches_quadrature_of_pointwise_basis() {
        for g in [right_triangle(), tet()] {
            let n = g.dim;
            for p in 0..=n {
                let (faces, m) = g.local_mass(p);
                // degree-2 exact rule: vertices weight (2-n)/((n+1)(n+2)), edge midpoints 4/((n+1)(n+2))
                let mut pts: Vec<(Vec<f64>, f64)> = Vec::new();
                let w_v = (2.0 - n as f64) / ((n + 1) * (n + 2)) as f64;
                let w_e = 4.0 / ((n + 1) * (n + 2)) as f64;
                for a in 0..=n {
                    let mut mu = vec![0.0; n + 1];
                    mu[a] = 1.0;
                    pts.push((mu, w_v));
                    for b in a + 1..=n {
                        let mut mu = vec![0.0; n + 1];
                        mu[a] = 0.5;
                        mu[b] = 0.5;
                        pts.push((mu, w_e));
                    }
                }
                let nf = faces.len();
                for (i, fi) in faces.iter().enumerate() {
                    for (j, fj) in faces.iter().enumerate() {
                        let q: f64 = pts
                            .iter()
                            .map(|(mu, w)| {
                                let a = g.eval_basis(fi, mu);
                                let b = g.eval_basis(fj, mu);
                                w * a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
                            })
                            .sum::<f64>()
                            * g.volume;
                        assert!((q - m[i * nf + j]).abs() < 1e-12 * (1.0 + q.abs()), "n={n} p={p}");
                    }
                }
            }
        }
    }

    /// Line integral of an edge basis form along each edge is the Kronecker delta.
    #[test]
    fn edge_forms_are_dual_to_edges() {
        let g = right_triangle();
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let faces = local_faces(2, 1);
        for (i, fi) in faces.iter().enumerate() {
            for (j, fj) in faces.iter().enumerate() {
                let (a, b) = (fj[0], fj[1]);
                // midpoint rule is exact for the linear tangential component
                let mut mu = vec![0.0; 3];
                mu[a] = 0.5;
                mu[b] = 0.5;
                let v = g.eval_basis(fi, &mu);
                let t = [pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]];
                let integral = v[0] * t[0] + v[1] * t[1];
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((integral - expected).abs() < 1e-14);
            }
        }
    }
}
