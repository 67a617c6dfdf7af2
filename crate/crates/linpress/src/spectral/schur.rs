//! Real Schur form with eigenvalue reordering.
//!
//! nalgebra delivers the factorization `A = Q T Q^T` with `T` quasi upper
//! triangular; this module sorts the diagonal blocks by a caller-supplied key
//! on the eigenvalue modulus. Adjacent blocks are swapped with orthogonal
//! similarity transforms obtained from a small Sylvester solve followed by a
//! QR completion, the textbook direct-swap construction. Blocks are only ever
//! swapped across distinct moduli, so the Sylvester systems stay nonsingular.

use nalgebra::{Complex, DMatrix, linalg::Schur};

use super::SpectralError;

#[derive(Clone, Copy, Debug)]
pub struct SchurBlock {
    pub start: usize,
    pub size: usize,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl SchurBlock {
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        if self.size == 1 {
            return vec![Complex::new(self.a, 0.0)];
        }
        let tr = self.a + self.d;
        let det = self.a * self.d - self.b * self.c;
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            vec![Complex::new(tr / 2.0 + s, 0.0), Complex::new(tr / 2.0 - s, 0.0)]
        } else {
            let s = (-disc).sqrt();
            vec![Complex::new(tr / 2.0, s), Complex::new(tr / 2.0, -s)]
        }
    }

    /// Modulus used for ordering. For a complex pair this is `sqrt(det)`,
    /// which is exact for the modulus of either member.
    pub fn eigenvalue_modulus(&self) -> f64 {
        if self.size == 1 {
            return self.a.abs();
        }
        let det = self.a * self.d - self.b * self.c;
        let tr = self.a + self.d;
        let disc = tr * tr / 4.0 - det;
        if disc < 0.0 {
            det.max(0.0).sqrt()
        } else {
            // Unsplit real pair (near-defective): both eigenvalues are close
            // to tr/2.
            (tr / 2.0).abs()
        }
    }
}

/// Diagonal block structure of a quasi upper triangular matrix.
pub fn schur_blocks(t: &DMatrix<f64>) -> Vec<SchurBlock> {
    let n = t.nrows();
    let scale = t.amax().max(1e-300);
    let tiny = 1e-12 * scale;
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > tiny {
            blocks.push(SchurBlock {
                start: i,
                size: 2,
                a: t[(i, i)],
                b: t[(i, i + 1)],
                c: t[(i + 1, i)],
                d: t[(i + 1, i + 1)],
            });
            i += 2;
        } else {
            blocks.push(SchurBlock { start: i, size: 1, a: t[(i, i)], b: 0.0, c: 0.0, d: 0.0 });
            i += 1;
        }
    }
    blocks
}

/// Zero out numerical dust below the quasi-triangular structure.
fn cleanup(t: &mut DMatrix<f64>) {
    let n = t.nrows();
    let scale = t.amax().max(1e-300);
    let tiny = 1e-12 * scale;
    for i in 0..n {
        for j in 0..i {
            if i == j + 1 {
                if t[(i, j)].abs() <= tiny {
                    t[(i, j)] = 0.0;
                }
            } else {
                t[(i, j)] = 0.0;
            }
        }
    }
    // A 2x2 block cannot share its subdiagonal with a neighbor; break ties by
    // zeroing the smaller entry.
    for i in 1..n.saturating_sub(1) {
        if t[(i, i - 1)] != 0.0 && t[(i + 1, i)] != 0.0 {
            if t[(i, i - 1)].abs() < t[(i + 1, i)].abs() {
                t[(i, i - 1)] = 0.0;
            } else {
                t[(i + 1, i)] = 0.0;
            }
        }
    }
}

/// Split 2x2 blocks with real eigenvalues into two 1x1 blocks via a rotation,
/// so that class boundaries can pass between them.
fn split_real_blocks(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>) {
    let n = t.nrows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let tr = a + d;
        let det = a * d - b * c;
        let disc = tr * tr / 4.0 - det;
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs()).max(1e-300);
        if disc <= (1e-8 * scale) * (1e-8 * scale) {
            i += 2; // complex pair or numerically defective: keep the block
            continue;
        }
        let lambda = tr / 2.0 + disc.sqrt();
        // Eigenvector of the block for lambda.
        let v1 = (b, lambda - a);
        let v2 = (lambda - d, c);
        let (vx, vy) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
        let norm = vx.hypot(vy);
        let (cos, sin) = (vx / norm, vy / norm);
        // G = [[cos, -sin], [sin, cos]] maps e1 to the eigenvector.
        let g = DMatrix::from_row_slice(2, 2, &[cos, -sin, sin, cos]);
        apply_local_orthogonal(t, q, i, &g);
        t[(i + 1, i)] = 0.0;
        i += 1;
    }
}

/// Apply `T <- G^T T G`, `Q <- Q G` where `G` acts on rows/cols
/// `i..i+G.nrows()`.
fn apply_local_orthogonal(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>, i: usize, g: &DMatrix<f64>) {
    let n = t.nrows();
    let w = g.nrows();
    let gt = g.transpose();
    let cols = t.view((0, i), (n, w)) * g;
    t.view_mut((0, i), (n, w)).copy_from(&cols);
    let rows = &gt * t.view((i, 0), (w, n));
    t.view_mut((i, 0), (w, n)).copy_from(&rows);
    let qc = q.view((0, i), (n, w)) * g;
    q.view_mut((0, i), (n, w)).copy_from(&qc);
}

/// Swap the adjacent diagonal blocks at `i` (sizes `p`, then `qs`).
fn swap_adjacent_blocks(
    t: &mut DMatrix<f64>,
    q: &mut DMatrix<f64>,
    i: usize,
    p: usize,
    qs: usize,
) -> Result<(), SpectralError> {
    let n = p + qs;
    let t11 = t.view((i, i), (p, p)).into_owned();
    let t22 = t.view((i + p, i + p), (qs, qs)).into_owned();
    let t12 = t.view((i, i + p), (p, qs)).into_owned();

    // Solve T11 X - X T22 = T12 (column-major Kronecker system; sizes <= 4).
    let mut sys = DMatrix::<f64>::zeros(p * qs, p * qs);
    for cc in 0..qs {
        for r in 0..p {
            let row = cc * p + r;
            for k in 0..p {
                sys[(row, cc * p + k)] += t11[(r, k)];
            }
            for k in 0..qs {
                sys[(row, k * p + r)] -= t22[(k, cc)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_fn(p * qs, |idx, _| t12[(idx % p, idx / p)]);
    let x = sys.lu().solve(&rhs).ok_or(SpectralError::SchurFailed)?;

    // Columns of [-X; I] span the invariant subspace for T22's eigenvalues.
    let mut m = DMatrix::<f64>::zeros(n, qs);
    for cc in 0..qs {
        for r in 0..p {
            m[(r, cc)] = -x[cc * p + r];
        }
        m[(p + cc, cc)] = 1.0;
    }
    let thin = orthonormalize(&m);
    let g = complete_orthogonal(&thin);
    apply_local_orthogonal(t, q, i, &g);
    for r in (i + qs)..(i + n) {
        for cc in i..(i + qs) {
            t[(r, cc)] = 0.0;
        }
    }
    Ok(())
}

/// Modified Gram-Schmidt orthonormalization of the columns (assumed
/// independent).
pub(crate) fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        for k in 0..j {
            let proj = out.column(k).dot(&out.column(j));
            let col_k = out.column(k).into_owned();
            let mut col_j = out.column_mut(j);
            col_j -= col_k * proj;
        }
        let norm = out.column(j).norm();
        out.column_mut(j).scale_mut(1.0 / norm);
    }
    out
}

/// Extend an orthonormal column block to a full orthogonal matrix, preferring
/// coordinate directions for the completion.
fn complete_orthogonal(thin: &DMatrix<f64>) -> DMatrix<f64> {
    let n = thin.nrows();
    let k = thin.ncols();
    let mut cols: Vec<nalgebra::DVector<f64>> = (0..k).map(|j| thin.column(j).into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = nalgebra::DVector::zeros(n);
        v[e] = 1.0;
        for c in &cols {
            let proj = c.dot(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            // Second orthogonalization pass for accuracy.
            for c in &cols {
                let proj = c.dot(&v);
                v -= c * proj;
            }
            v /= v.norm();
            cols.push(v);
        }
    }
    debug_assert_eq!(cols.len(), n);
    DMatrix::from_columns(&cols)
}

/// Sort the diagonal blocks of an existing Schur pair in ascending order of
/// `key(modulus)`.
pub fn reorder_schur_by(
    t: &mut DMatrix<f64>,
    q: &mut DMatrix<f64>,
    key: impl Fn(f64) -> f64,
) -> Result<(), SpectralError> {
    let n = t.nrows();
    let max_swaps = n * n + 16;
    for _ in 0..max_swaps {
        let blocks = schur_blocks(t);
        let mut swapped = false;
        for w in blocks.windows(2) {
            let ka = key(w[0].eigenvalue_modulus());
            let kb = key(w[1].eigenvalue_modulus());
            if ka > kb + 1e-13 * (1.0 + ka.abs().max(kb.abs())) {
                swap_adjacent_blocks(t, q, w[0].start, w[0].size, w[1].size)?;
                swapped = true;
                break;
            }
        }
        if !swapped {
            return Ok(());
        }
    }
    Err(SpectralError::SchurFailed)
}

/// Real Schur decomposition of `a` with diagonal blocks sorted ascending by
/// `key(modulus)`. Returns `(Q, T)` with `A = Q T Q^T`.
pub fn ordered_real_schur(
    a: &DMatrix<f64>,
    key: impl Fn(f64) -> f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), SpectralError> {
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000).ok_or(SpectralError::SchurFailed)?;
    let (mut q, mut t) = schur.unpack();
    cleanup(&mut t);
    split_real_blocks(&mut t, &mut q);
    cleanup(&mut t);
    reorder_schur_by(&mut t, &mut q, key)?;

    let residual = (&q * &t * q.transpose() - a).norm();
    let scale = a.norm().max(1.0);
    if residual > 1e-7 * scale {
        return Err(SpectralError::SchurFailed);
    }
    Ok((q, t))
}
