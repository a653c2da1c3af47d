//! Minimal complex sparse linear algebra: CSR storage, products, ILU(0)
//! preconditioned BiCGStab and a dense direct factorization for small
//! systems. The stage matrices of the time integrator are fixed per run, so
//! preconditioners and factorizations are built once and reused.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Compressed sparse row matrix over complex doubles. Column indices are
/// sorted within each row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C>,
}

impl CsrMatrix {
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, C)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![C::default(); triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let p = next[r];
            cols[p] = c;
            vals[p] = v;
            next[r] += 1;
        }
        // sort each row and merge duplicates
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        for r in 0..n_rows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            let mut entries: Vec<(usize, C)> = (lo..hi).map(|p| (cols[p], vals[p])).collect();
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                if let Some(last) = out_cols.last() {
                    if *last == c && out_cols.len() > row_ptr[r] {
                        *out_vals.last_mut().unwrap() += v;
                        continue;
                    }
                }
                out_cols.push(c);
                out_vals.push(v);
            }
            row_ptr[r + 1] = out_cols.len();
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx: out_cols,
            values: out_vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C::new(1.0, 0.0); n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn spmv(&self, x: &[C], y: &mut [C]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C::default();
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::default(); self.n_rows];
        self.spmv(x, &mut y);
        y
    }

    /// C = A B (dense accumulator per row).
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let n = other.n_cols;
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut acc = vec![C::default(); n];
        let mut marker = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            touched.clear();
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let k = self.col_idx[p];
                let av = self.values[p];
                for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                    let c = other.col_idx[q];
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = C::default();
                        touched.push(c);
                    }
                    acc[c] += av * other.values[q];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                cols.push(c);
                vals.push(acc[c]);
            }
            row_ptr[r + 1] = cols.len();
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: n,
            row_ptr,
            col_idx: cols,
            values: vals,
        }
    }

    /// A + s B
    pub fn add_scaled(&self, s: C, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..self.n_rows {
            let (mut p, pe) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (mut q, qe) = (other.row_ptr[r], other.row_ptr[r + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.col_idx[p] } else { usize::MAX };
                let cq = if q < qe { other.col_idx[q] } else { usize::MAX };
                if cp < cq {
                    cols.push(cp);
                    vals.push(self.values[p]);
                    p += 1;
                } else if cq < cp {
                    cols.push(cq);
                    vals.push(s * other.values[q]);
                    q += 1;
                } else {
                    cols.push(cp);
                    vals.push(self.values[p] + s * other.values[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx: cols,
            values: vals,
        }
    }

    /// diag(d) A — scales row r by d[r].
    pub fn scale_rows(&mut self, d: &[C]) {
        for (r, &dr) in d.iter().enumerate().take(self.n_rows) {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                self.values[p] *= dr;
            }
        }
    }

    pub fn scale(&mut self, s: C) {
        for v in self.values.iter_mut() {
            *v *= s;
        }
    }

    /// Zeroes the listed rows in place.
    pub fn zero_rows(&mut self, rows: &[bool]) {
        for (r, &zero) in rows.iter().enumerate().take(self.n_rows) {
            if zero {
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    self.values[p] = C::default();
                }
            }
        }
    }
}

/// ILU(0) factors on the sparsity pattern of the source matrix.
pub struct Ilu0 {
    mat: CsrMatrix,
    diag_ptr: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows;
        let mut m = a.clone();
        let mut diag_ptr = vec![usize::MAX; n];
        for (r, dp) in diag_ptr.iter_mut().enumerate() {
            for p in m.row_ptr[r]..m.row_ptr[r + 1] {
                if m.col_idx[p] == r {
                    *dp = p;
                }
            }
            if *dp == usize::MAX {
                return Err(Error::numerical(format!("ILU(0): empty diagonal at row {r}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (ps, pe) = (m.row_ptr[i], m.row_ptr[i + 1]);
            for p in ps..pe {
                pos[m.col_idx[p]] = p;
            }
            for p in ps..pe {
                let k = m.col_idx[p];
                if k >= i {
                    break;
                }
                let piv = m.values[diag_ptr[k]];
                if piv.norm_sqr() == 0.0 {
                    return Err(Error::numerical(format!("ILU(0): zero pivot at row {k}")));
                }
                let lik = m.values[p] / piv;
                m.values[p] = lik;
                for q in diag_ptr[k] + 1..m.row_ptr[k + 1] {
                    let j = m.col_idx[q];
                    let t = pos[j];
                    if t != usize::MAX {
                        let upd = lik * m.values[q];
                        m.values[t] -= upd;
                    }
                }
            }
            for p in ps..pe {
                pos[m.col_idx[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { mat: m, diag_ptr })
    }

    /// Solves (LU) z = r.
    pub fn solve(&self, r: &[C], z: &mut [C]) {
        let n = self.mat.n_rows;
        // forward: L z = r, unit diagonal
        for i in 0..n {
            let mut acc = r[i];
            for p in self.mat.row_ptr[i]..self.diag_ptr[i] {
                acc -= self.mat.values[p] * z[self.mat.col_idx[p]];
            }
            z[i] = acc;
        }
        // backward: U z = z
        for i in (0..n).rev() {
            let mut acc = z[i];
            for p in self.diag_ptr[i] + 1..self.mat.row_ptr[i + 1] {
                acc -= self.mat.values[p] * z[self.mat.col_idx[p]];
            }
            z[i] = acc / self.mat.values[self.diag_ptr[i]];
        }
    }
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned BiCGStab. Solves A x = b with the ILU(0) factors of A,
/// starting from x (used as the initial guess).
pub fn bicgstab(
    a: &CsrMatrix,
    precond: &Ilu0,
    b: &[C],
    x: &mut [C],
    rel_tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(C::default());
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let tol = rel_tol * bnorm;
    let mut r = vec![C::default(); n];
    a.spmv(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm(&r) <= tol {
        return Ok(SolveStats {
            iterations: 0,
            residual: norm(&r) / bnorm,
        });
    }
    let r0 = r.clone();
    let mut rho = C::new(1.0, 0.0);
    let mut alpha = C::new(1.0, 0.0);
    let mut omega = C::new(1.0, 0.0);
    let mut v = vec![C::default(); n];
    let mut p = vec![C::default(); n];
    let mut ph = vec![C::default(); n];
    let mut s = vec![C::default(); n];
    let mut sh = vec![C::default(); n];
    let mut t = vec![C::default(); n];
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.norm() < 1e-300 {
            return Err(Error::numerical("BiCGStab breakdown (rho -> 0)"));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.solve(&p, &mut ph);
        a.spmv(&ph, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            return Ok(SolveStats {
                iterations: it,
                residual: norm(&s) / bnorm,
            });
        }
        precond.solve(&s, &mut sh);
        a.spmv(&sh, &mut t);
        let tt = dot(&t, &t);
        if tt.norm() < 1e-300 {
            return Err(Error::numerical("BiCGStab breakdown (t -> 0)"));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = norm(&r);
        if rn <= tol {
            return Ok(SolveStats {
                iterations: it,
                residual: rn / bnorm,
            });
        }
    }
    Err(Error::numerical(format!(
        "BiCGStab did not converge in {max_iter} iterations (residual {:.3e})",
        norm(&r) / bnorm
    )))
}

/// Dense LU with partial pivoting, for small systems where a direct
/// factorization is affordable.
pub struct DenseLu {
    n: usize,
    lu: Vec<C>,
    piv: Vec<usize>,
}

/// Systems above this size fall back to the iterative path; a dense factor
/// would not fit the memory budget.
pub const DENSE_DIRECT_MAX: usize = 3600;

impl DenseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows;
        if n > DENSE_DIRECT_MAX {
            return Err(Error::config(format!(
                "direct solver limited to {DENSE_DIRECT_MAX} unknowns (got {n})"
            )));
        }
        let mut lu = vec![C::default(); n * n];
        for r in 0..n {
            for p in a.row_ptr[r]..a.row_ptr[r + 1] {
                lu[r * n + a.col_idx[p]] = a.values[p];
            }
        }
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut best = k;
            let mut mag = lu[k * n + k].norm_sqr();
            for r in k + 1..n {
                let m = lu[r * n + k].norm_sqr();
                if m > mag {
                    mag = m;
                    best = r;
                }
            }
            if mag == 0.0 {
                return Err(Error::numerical(format!("singular matrix at column {k}")));
            }
            piv[k] = best;
            if best != k {
                for c in 0..n {
                    lu.swap(k * n + c, best * n + c);
                }
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                lu[r * n + k] = f;
                if f.norm_sqr() != 0.0 {
                    for c in k + 1..n {
                        let u = lu[k * n + c];
                        lu[r * n + c] -= f * u;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, piv })
    }

    #[allow(clippy::needless_range_loop)] // triangular index arithmetic
    pub fn solve(&self, b: &[C], x: &mut [C]) {
        let n = self.n;
        x.copy_from_slice(b);
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk.norm_sqr() != 0.0 {
                for r in k + 1..n {
                    let l = self.lu[r * n + k];
                    x[r] -= l * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= self.lu[k * n + c] * x[c];
            }
            x[k] = acc / self.lu[k * n + k];
        }
    }
}
