//! Dense linear algebra helpers on top of nalgebra, plus mixed-precision
//! refinement of eigenpairs.
//!
//! nalgebra supplies the Schur form, SVD and LU factorizations in `f64`.
//! Residuals are then recomputed in double-double with the exact sparse
//! operator and corrected by a bordered Newton step, which recovers
//! eigenvectors to roughly 30 significant digits when the eigenvalue is
//! simple.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use crate::dd::Cdd;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Row-sum norm.
pub fn norm_inf(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Eigenvalues (with repetition) from a complex Schur decomposition.
pub fn schur_eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let cap = 100 * n.max(10);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, cap)
        .ok_or_else(|| Error::NoConvergence(format!("Schur iteration exceeded {cap} sweeps on a {n}x{n} matrix")))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Singular values in decreasing order and the right singular vectors of
/// the `count` smallest ones.
pub fn null_directions(m: &CMatrix, count: usize) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let cols = m.ncols();
    // pad wide matrices so that V is square
    let work = if m.nrows() < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = SVD::try_new(work, false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NoConvergence("singular value decomposition failed".into()))?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let vt = svd.v_t.expect("right singular vectors requested");
    let vectors = (0..count.min(cols))
        .map(|i| {
            let row = cols - 1 - i;
            (0..cols).map(|j| vt[(row, j)].conj()).collect()
        })
        .collect();
    Ok((sv, vectors))
}

/// `cols - rank` with singular values below `threshold` counted as zero,
/// and the distance of the nearest singular value to the threshold in
/// relative terms.
pub fn nullity(m: &CMatrix, threshold: f64) -> Result<(usize, f64)> {
    let (sv, _) = null_directions(m, 0)?;
    let cols = m.ncols();
    let rank = sv.iter().filter(|&&s| s >= threshold).count();
    let margin = sv.iter().map(|&s| ((s - threshold) / threshold).abs()).fold(f64::INFINITY, f64::min);
    Ok((cols - rank.min(cols), margin))
}

pub fn to_c64(v: &[Cdd]) -> DVector<Complex64> {
    DVector::from_iterator(v.len(), v.iter().map(|z| z.to_c64()))
}

fn max_entry(v: &[Cdd]) -> usize {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, z) in v.iter().enumerate() {
        let r = z.norm();
        if r > best_norm * (1.0 + 1e-12) {
            best = i;
            best_norm = r;
        }
    }
    best
}

/// Scales `v` so that its largest-modulus entry equals 1, lowest index on
/// (relative 1e-12) ties.
pub fn normalize_max(v: &mut [Cdd]) {
    let j = max_entry(v);
    let pivot = v[j];
    if pivot.norm() == 0.0 {
        return;
    }
    let inv = pivot.recip();
    for z in v.iter_mut() {
        *z *= inv;
    }
    v[j] = Cdd::ONE;
}

/// Max-norm of `M v - lambda v` in double-double.
pub fn eigen_residual(apply: &dyn Fn(&[Cdd]) -> Vec<Cdd>, lambda: Cdd, v: &[Cdd]) -> f64 {
    apply(v).iter().zip(v).map(|(&mv, &x)| (mv - lambda * x).norm()).fold(0.0, f64::max)
}

/// Bordered Newton refinement of a simple eigenpair.
///
/// `apply` is the exact operator in double-double and `dense` its `f64`
/// image. The correction system `[[M - lambda I, -v], [e_j^T, 0]]` is
/// factored once; each sweep reduces the residual by about `1e-16`.
pub fn refine_eigenpair(
    apply: &dyn Fn(&[Cdd]) -> Vec<Cdd>,
    dense: &CMatrix,
    lambda0: Cdd,
    v0: &[Cdd],
) -> (Cdd, Vec<Cdd>) {
    let n = v0.len();
    let mut v = v0.to_vec();
    normalize_max(&mut v);
    let j = max_entry(&v);
    let mut lambda = lambda0;
    let mut jac = CMatrix::zeros(n + 1, n + 1);
    jac.view_mut((0, 0), (n, n)).copy_from(dense);
    let l0 = lambda.to_c64();
    for i in 0..n {
        jac[(i, i)] -= l0;
        jac[(i, n)] = -v[i].to_c64();
    }
    jac[(n, j)] = Complex64::new(1.0, 0.0);
    let lu = jac.lu();
    let mut best = eigen_residual(apply, lambda, &v);
    for _ in 0..8 {
        if best == 0.0 {
            break;
        }
        let mv = apply(&v);
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -(mv[i] - lambda * v[i]).to_c64();
        }
        let Some(delta) = lu.solve(&rhs) else { break };
        let mut cand: Vec<Cdd> = v.iter().enumerate().map(|(i, &x)| x + Cdd::from(delta[i])).collect();
        cand[j] = Cdd::ONE;
        let cand_lambda = lambda + Cdd::from(delta[n]);
        let r = eigen_residual(apply, cand_lambda, &cand);
        if r.is_nan() || r >= best {
            break;
        }
        v = cand;
        lambda = cand_lambda;
        best = r;
    }
    (lambda, v)
}
