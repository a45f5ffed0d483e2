use super::whitney::{axis_subsets, local_faces, SimplexGeometry};
use super::{check_degree, small, Cochain, FlatBundle};
use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormDomain {
    Interior,
    Boundary,
}

/// Pointwise evaluation of Whitney interpolants of `p`-cochains.
pub struct FormEvaluator {
    degree: usize,
    rank: usize,
    geoms: Vec<SimplexGeometry>,
    local: Vec<Vec<usize>>,
    /// Global face indices, `local.len()` per top simplex.
    faces: Vec<usize>,
    /// Per top simplex and local face: transport from the face's base fiber to the top's base fiber.
    transports: Option<Vec<Vec<f64>>>,
    n_components: usize,
    boundary: Vec<(usize, Vec<f64>, f64)>,
}

impl FormEvaluator {
    pub fn new(mesh: &SimplicialMesh, degree: usize, bundle: &FlatBundle) -> Result<Self> {
        check_degree(mesh, degree)?;
        let n = mesh.dim();
        let local = local_faces(n, degree);
        let nt = mesh.n_simplices(n);
        let mut geoms = Vec::with_capacity(nt);
        let mut faces = Vec::with_capacity(nt * local.len());
        let mut transports = (!bundle.is_trivial()).then(Vec::new);
        let mut buf = Vec::new();
        for t in 0..nt {
            geoms.push(SimplexGeometry::new(&mesh.simplex_points(n, t), mesh.volume(n, t)));
            let verts = mesh.simplex(n, t);
            for f in &local {
                buf.clear();
                buf.extend(f.iter().map(|&l| verts[l]));
                faces.push(mesh.simplex_index(&buf).expect("face of a top simplex"));
                if let Some(tr) = transports.as_mut() {
                    tr.push(bundle.transport(mesh, buf[0], verts[0]));
                }
            }
        }
        let boundary = mesh
            .boundary_facets()
            .map(|f| {
                let t = mesh.facet_cofaces(f)[0];
                let j = mesh.faces_of(n, t).iter().position(|&x| x == f).unwrap();
                let mu: Vec<f64> = (0..=n).map(|i| if i == j { 0.0 } else { 1.0 / n as f64 }).collect();
                (t, mu, mesh.volume(n - 1, f))
            })
            .collect();
        Ok(FormEvaluator {
            degree,
            rank: bundle.rank(),
            geoms,
            n_components: axis_subsets(n, degree).len(),
            local,
            faces,
            transports,
            boundary,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Components (axis subset major, fiber minor) of the interpolant at barycentric point `mu` of top `t`.
    pub fn value(&self, values: &[f64], t: usize, mu: &[f64]) -> Vec<f64> {
        let r = self.rank;
        let nf = self.local.len();
        let mut out = vec![0.0; self.n_components * r];
        for (i, f) in self.local.iter().enumerate() {
            let g = self.faces[t * nf + i];
            let c = &values[g * r..(g + 1) * r];
            if c.iter().all(|&x| x == 0.0) {
                continue;
            }
            let basis = self.geoms[t].eval_basis(f, mu);
            let fiber = match &self.transports {
                Some(tr) => small::apply(&tr[t * nf + i], c, r),
                None => c.to_vec(),
            };
            for (k, b) in basis.iter().enumerate() {
                for a in 0..r {
                    out[k * r + a] += b * fiber[a];
                }
            }
        }
        out
    }

    pub fn pointwise_norm(&self, values: &[f64], t: usize, mu: &[f64]) -> f64 {
        self.value(values, t, mu).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Pointwise norm at every top-simplex barycenter.
    pub fn barycenter_norms(&self, values: &[f64]) -> Vec<f64> {
        (0..self.geoms.len())
            .map(|t| {
                let n = self.geoms[t].dim;
                let mu = vec![1.0 / (n + 1) as f64; n + 1];
                self.pointwise_norm(values, t, &mu)
            })
            .collect()
    }

    /// `(volume, |f|)` at each top-simplex barycenter.
    pub fn interior_samples(&self, values: &[f64]) -> Vec<(f64, f64)> {
        self.geoms
            .iter()
            .zip(self.barycenter_norms(values))
            .map(|(g, v)| (g.volume, v))
            .collect()
    }

    /// `(boundary facet area, |f|)` at each boundary facet barycenter, using the
    /// adjacent top simplex's interpolant.
    pub fn boundary_samples(&self, values: &[f64]) -> Vec<(f64, f64)> {
        self.boundary
            .iter()
            .map(|(t, mu, area)| (*area, self.pointwise_norm(values, *t, mu)))
            .collect()
    }

    pub fn norm(&self, values: &[f64], q: f64, domain: NormDomain) -> Result<f64> {
        let samples = match domain {
            NormDomain::Interior => self.interior_samples(values),
            NormDomain::Boundary => self.boundary_samples(values),
        };
        weighted_lq(&samples, q)
    }
}

/// `(Σ w |v|^q)^{1/q}`, or `max |v|` for `q = ∞`.
pub fn weighted_lq(samples: &[(f64, f64)], q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidExponent(q));
    }
    if q.is_infinite() {
        return Ok(samples.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs())));
    }
    let vmax = samples.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
    if vmax == 0.0 {
        return Ok(0.0);
    }
    // scale by the max to avoid overflow for large q
    let s: f64 = samples.iter().map(|&(w, v)| w * (v.abs() / vmax).powf(q)).sum();
    Ok(vmax * s.powf(1.0 / q))
}

/// Discrete `L^q` norm of a cochain via barycentric Whitney interpolation.
pub fn lq_norm(mesh: &SimplicialMesh, bundle: &FlatBundle, c: &Cochain, q: f64, domain: NormDomain) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidExponent(q));
    }
    let expected = mesh.n_simplices(c.degree) * bundle.rank();
    if c.values.len() != expected || c.rank != bundle.rank() {
        return Err(Error::ShapeMismatch(format!(
            "cochain has {} values, mesh and bundle need {expected}",
            c.values.len()
        )));
    }
    FormEvaluator::new(mesh, c.degree, bundle)?.norm(&c.values, q, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshShape};

    #[test]
    fn constant_function_norms() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 6).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        let c = Cochain::from_values(&m, 0, 1, vec![-3.0; m.n_vertices()]).unwrap();
        let v = m.total_volume();
        let n2 = lq_norm(&m, &b, &c, 2.0, NormDomain::Interior).unwrap();
        assert!((n2 - 3.0 * v.sqrt()).abs() < 1e-12);
        let nb = lq_norm(&m, &b, &c, 1.0, NormDomain::Boundary).unwrap();
        assert!((nb - 3.0 * m.boundary_volume()).abs() < 1e-12);
        let z = Cochain::zeros(&m, 1, 1);
        for q in [1.0, 2.5, f64::INFINITY] {
            assert_eq!(lq_norm(&m, &b, &z, q, NormDomain::Interior).unwrap(), 0.0);
        }
        assert!(matches!(lq_norm(&m, &b, &c, 0.5, NormDomain::Interior), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn sup_of_coordinate_on_disk() {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 12).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        let x: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let c = Cochain::from_values(&m, 0, 1, x).unwrap();
        let sup = lq_norm(&m, &b, &c, f64::INFINITY, NormDomain::Interior).unwrap();
        assert!(sup <= 1.0 && sup >= 1.0 - m.max_edge_length());
    }

    #[test]
    fn gradient_of_linear_function_is_exact() {
        // d of the interpolated x-coordinate is the constant covector dx
        let m = generate_mesh(&MeshShape::Box3d { side: 1.0 }, 3).unwrap();
        let b = FlatBundle::trivial(&m, 1);
        let d0 = crate::dec::exterior_derivative(&m, 0, &b).unwrap().matrix;
        let x: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let dx = d0.mul_vec(&x);
        let ev = FormEvaluator::new(&m, 1, &b).unwrap();
        for t in 0..m.n_simplices(3) {
            let v = ev.value(&dx, t, &[0.1, 0.2, 0.3, 0.4]);
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
        }
    }
}
