//! Sparse matrices and the factorizations the operators are built on.
//!
//! Assembly and matrix algebra happen on a small compressed-row type; the
//! factorizations are delegated to `faer` (sparse Cholesky for SPD blocks,
//! sparse LU for the indefinite mixed Hodge systems, dense eigensolvers for
//! coarse spectra). `faer` is built without rayon, so every solve is
//! sequential and bit-reproducible.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, MatMut, Par, Side};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    /// Explicit zeros produced by cancellation are kept so the sparsity
    /// pattern only depends on the triplet positions.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == c {
                    acc += row[k].1;
                    k += 1;
                }
                indices.push(c);
                values.push(acc);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            out.extend(self.row(r).map(|(c, v)| (r, c, v)));
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.indptr[r]..self.indptr[r + 1];
        match self.indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec: dimension mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "transpose_mul_vec: dimension mismatch");
        let mut out = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                out[c] += v * xr;
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let trips: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &trips)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul: inner dimension mismatch");
        let mut trips = Vec::new();
        let mut acc: Vec<f64> = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                trips.push((r, c, acc[c]));
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, &trips)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut trips = self.triplets();
        trips.extend(other.triplets());
        CsrMatrix::from_triplets(self.nrows, self.ncols, &trips)
    }

    /// Submatrix on the given row and column index lists (in that order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut trips = Vec::new();
        for (new_r, &old_r) in rows.iter().enumerate() {
            for (c, v) in self.row(old_r) {
                let nc = col_map[c];
                if nc != usize::MAX {
                    trips.push((new_r, nc, v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &trips)
    }

    /// Places `blocks[i][j]` at block position `(i, j)`; `None` is a zero block.
    pub fn block(row_sizes: &[usize], col_sizes: &[usize], blocks: &[Vec<Option<&CsrMatrix>>]) -> CsrMatrix {
        let row_off: Vec<usize> = offsets(row_sizes);
        let col_off: Vec<usize> = offsets(col_sizes);
        let mut trips = Vec::new();
        for (i, brow) in blocks.iter().enumerate() {
            for (j, b) in brow.iter().enumerate() {
                if let Some(m) = b {
                    assert_eq!((m.nrows, m.ncols), (row_sizes[i], col_sizes[j]), "block ({i}, {j}) shape");
                    trips.extend(m.triplets().into_iter().map(|(r, c, v)| (r + row_off[i], c + col_off[j], v)));
                }
            }
        }
        CsrMatrix::from_triplets(
            row_off[row_sizes.len()],
            col_off[col_sizes.len()],
            &trips,
        )
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let diff = self.add(&t.scaled(-1.0));
        diff.max_abs()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }

    /// Coordinate-list text dump (`row col value` per line) for debugging.
    pub fn to_coo_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            out.push_str(&format!("{r} {c} {v:.17e}\n"));
        }
        out
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(sizes.len() + 1);
    off.push(0);
    for s in sizes {
        off.push(off.last().unwrap() + s);
    }
    off
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `x^T A y` for a symmetric sparse `A`.
pub fn inner(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    dot(x, &a.mul_vec(y))
}

/// Sparse Cholesky factorization of an SPD matrix.
pub struct SpdSolver {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::ShapeMismatch(format!("{}x{} is not square", a.nrows, a.ncols)));
        }
        let llt = a
            .to_faer()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("cholesky: {e:?}")))?;
        Ok(SpdSolver { n: a.nrows, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        if self.n == 0 {
            return;
        }
        let m = MatMut::from_column_major_slice_mut(x, self.n, 1);
        self.llt.solve_in_place(m);
    }
}

/// Sparse LU with a few steps of iterative refinement against the original matrix.
pub struct LuSolver {
    a: CsrMatrix,
    lu: Option<faer::sparse::linalg::solvers::Lu<usize, f64>>,
}

impl LuSolver {
    pub fn new(a: CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::ShapeMismatch(format!("{}x{} is not square", a.nrows, a.ncols)));
        }
        let lu = if a.nrows == 0 {
            None
        } else {
            Some(
                a.to_faer()?
                    .sp_lu()
                    .map_err(|e| Error::Factorization(format!("lu: {e:?}")))?,
            )
        };
        Ok(LuSolver { a, lu })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    fn raw_solve(&self, x: &mut [f64]) {
        if let Some(lu) = &self.lu {
            let n = x.len();
            lu.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1));
        }
    }

    /// Solves `A x = b`, refining until the relative residual stops improving.
    /// Returns the solution and its relative residual.
    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        refine(&self.a, b, 4, |x| self.raw_solve(x))
    }
}

fn refine(a: &CsrMatrix, b: &[f64], max_steps: usize, raw_solve: impl Fn(&mut [f64])) -> (Vec<f64>, f64) {
    let bn = norm2(b);
    if bn == 0.0 {
        return (vec![0.0; b.len()], 0.0);
    }
    let mut x = b.to_vec();
    raw_solve(&mut x);
    let mut r = sub(b, &a.mul_vec(&x));
    let mut rel = norm2(&r) / bn;
    if !rel.is_finite() {
        return (x, f64::INFINITY);
    }
    for _ in 0..max_steps {
        if rel < 1e-14 {
            break;
        }
        raw_solve(&mut r);
        let cand: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + b).collect();
        let cr = sub(b, &a.mul_vec(&cand));
        let crel = norm2(&cr) / bn;
        if crel >= rel {
            break;
        }
        x = cand;
        r = cr;
        rel = crel;
    }
    (x, rel)
}

/// Sparse `L D L^T` for symmetric saddle-point systems. The factorized copy
/// gets a diagonal shift `±1e-8·max|a|` with the expected pivot signs, making
/// it quasi-definite; pivots that still come out with the wrong sign are
/// replaced dynamically. Refinement (and GMRES if refinement stalls) against
/// the original matrix repairs the difference.
pub struct LdltSolver {
    a: CsrMatrix,
    symbolic: Option<SymbolicCholesky<usize>>,
    values: Vec<f64>,
}

impl LdltSolver {
    /// `signs[i]` is the expected sign of the `i`-th pivot (`+1` or `-1`).
    pub fn new(a: CsrMatrix, signs: &[i8]) -> Result<Self> {
        if a.nrows != a.ncols || signs.len() != a.nrows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix with {} pivot signs",
                a.nrows,
                a.ncols,
                signs.len()
            )));
        }
        if a.nrows == 0 {
            return Ok(LdltSolver {
                a,
                symbolic: None,
                values: Vec::new(),
            });
        }
        // factor a quasi-definite copy; refinement runs against the original
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let shift: Vec<f64> = signs.iter().map(|&s| f64::from(s) * 1e-8 * scale).collect();
        let fa = a.add(&CsrMatrix::from_diagonal(&shift)).to_faer()?;
        let symbolic = factorize_symbolic_cholesky(
            fa.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Factorization(format!("ldlt symbolic: {e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut buf = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()))
            .map_err(|e| Error::Factorization(format!("ldlt workspace: {e:?}")))?;
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                fa.as_ref(),
                Side::Lower,
                LdltRegularization {
                    dynamic_regularization_signs: Some(signs),
                    dynamic_regularization_delta: 1e-10 * scale,
                    dynamic_regularization_epsilon: 1e-13 * scale,
                },
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| Error::Factorization(format!("ldlt: {e:?}")))?;
        Ok(LdltSolver {
            a,
            symbolic: Some(symbolic),
            values,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    fn raw_solve(&self, x: &mut [f64]) {
        if let Some(sym) = &self.symbolic {
            let n = x.len();
            let mut buf = MemBuffer::new(sym.solve_in_place_scratch::<f64>(1, Par::Seq));
            LdltRef::new(sym, &self.values).solve_in_place_with_conj(
                Conj::No,
                MatMut::from_column_major_slice_mut(x, n, 1),
                Par::Seq,
                MemStack::new(&mut buf),
            );
        }
    }

    /// Solves `A x = b` with iterative refinement, falling back to GMRES
    /// preconditioned by the factorization when refinement stalls. Returns the
    /// solution and its relative residual.
    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let (x, rel) = refine(&self.a, b, 20, |x| self.raw_solve(x));
        if rel <= 1e-13 {
            return (x, rel);
        }
        let (y, yrel) = gmres(&self.a, b, x.clone(), 30, 10, 1e-14, |v| self.raw_solve(v));
        if yrel < rel {
            (y, yrel)
        } else {
            (x, rel)
        }
    }
}

/// Restarted right-preconditioned GMRES from `x0`. Returns the iterate and its
/// true relative residual.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    restart: usize,
    cycles: usize,
    tol: f64,
    precond: impl Fn(&mut [f64]),
) -> (Vec<f64>, f64) {
    let bn = norm2(b);
    if bn == 0.0 {
        return (vec![0.0; b.len()], 0.0);
    }
    for _ in 0..cycles {
        let r = sub(b, &a.mul_vec(&x));
        let beta = norm2(&r);
        let rel = beta / bn;
        if rel <= tol || !rel.is_finite() {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        for j in 0..restart {
            let mut z = basis[j].clone();
            precond(&mut z);
            let mut w = a.mul_vec(&z);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                col[i] = dot(&w, v);
                axpy(&mut w, -col[i], v);
            }
            col[j + 1] = norm2(&w);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            cs.push(c);
            sn.push(s);
            let next = col[j + 1];
            col[j] = denom;
            col[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            hess.push(col);
            if next == 0.0 || (g[j + 1].abs() / bn) <= tol {
                break;
            }
            basis.push(w.iter().map(|v| v / next).collect());
        }
        // back substitution on the triangularized Hessenberg matrix
        let k = hess.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                acc -= hess[l][i] * yl;
            }
            y[i] = acc / hess[i][i];
        }
        let mut update = vec![0.0; b.len()];
        for (v, yi) in basis.iter().zip(&y) {
            axpy(&mut update, *yi, v);
        }
        precond(&mut update);
        axpy(&mut x, 1.0, &update);
    }
    let rel = norm2(&sub(b, &a.mul_vec(&x))) / bn;
    (x, rel)
}

/// Solves the generalized symmetric-definite problem `A v = lambda B v` densely.
/// Eigenvalues ascend; eigenvectors are `B`-orthonormal columns.
pub fn generalized_eigen(a: &Mat<f64>, b: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let llt = b
        .llt(Side::Lower)
        .map_err(|e| Error::Factorization(format!("dense cholesky: {e:?}")))?;
    let l = llt.L().to_owned();
    // C = L^{-1} A L^{-T}
    let mut tmp = a.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), tmp.as_mut(), faer::Par::Seq);
    let mut c = tmp.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), faer::Par::Seq);
    // symmetrize against rounding
    let cs = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = cs
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("eigen: {e:?}")))?;
    let s = evd.S();
    let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut vecs = evd.U().to_owned();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), vecs.as_mut(), faer::Par::Seq);
    Ok((vals, vecs))
}

/// Orthonormalizes `vectors` in the inner product `x^T M y` (modified Gram-Schmidt,
/// two passes). Vectors whose remaining norm falls below `drop_tol` times their
/// original norm are discarded.
pub fn orthonormalize(vectors: Vec<Vec<f64>>, mass: &CsrMatrix, drop_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        let n0 = inner(mass, &v, &v).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(&mbasis) {
                let c = dot(mb, &v);
                axpy(&mut v, -c, b);
            }
        }
        let mv = mass.mul_vec(&v);
        let n = dot(&v, &mv).sqrt();
        if n <= drop_tol * n0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
        mbasis.push(mv.into_iter().map(|x| x / n).collect());
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, -1.0)]);
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = CsrMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, -1.0), (2, 0, 4.0), (2, 1, 0.5)]);
        let c = a.matmul(&b);
        assert_eq!(c.get(0, 0), 9.0);
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 1), -3.0);
        let x = [1.0, 2.0];
        assert_eq!(c.mul_vec(&x), a.mul_vec(&b.mul_vec(&x)));
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn spd_and_lu_solvers_agree() {
        let a = laplace_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = SpdSolver::new(&a).unwrap().solve(&b);
        let (x2, rel) = LuSolver::new(a.clone()).unwrap().solve(&b);
        assert!(rel < 1e-13);
        assert!(max_abs(&sub(&x1, &x2)) < 1e-10);
        assert!(max_abs(&sub(&a.mul_vec(&x1), &b)) < 1e-10);
    }

    #[test]
    fn generalized_eigen_of_scaled_identity() {
        let a = laplace_1d(5).to_dense();
        let b = CsrMatrix::from_diagonal(&[2.0; 5]).to_dense();
        let (vals, vecs) = generalized_eigen(&a, &b).unwrap();
        // eigenvalues of tridiag(−1,2,−1) are 2 − 2cos(kπ/6); halved by B = 2I
        for (k, v) in vals.iter().enumerate() {
            let exact = (2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 6.0).cos()) / 2.0;
            assert!((v - exact).abs() < 1e-12);
        }
        // B-orthonormal
        let col0: Vec<f64> = (0..5).map(|i| vecs[(i, 0)]).collect();
        assert!((2.0 * dot(&col0, &col0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn select_and_block() {
        let a = laplace_1d(4);
        let s = a.select(&[1, 2], &[1, 2]);
        assert_eq!(s.get(0, 1), -1.0);
        let blk = CsrMatrix::block(&[2, 2], &[2], &[vec![Some(&s)], vec![None]]);
        assert_eq!(blk.nrows(), 4);
        assert_eq!(blk.get(1, 0), -1.0);
        assert_eq!(blk.get(3, 1), 0.0);
    }
}
