//! Ruelle and Koopman operators on cylinder functions, transfer matrices,
//! spectra, leading RPF data and the growth bound `rho`.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::symbolic::{word_of_index, AprioriMeasure, CylinderFunction, Side};
use crate::words::{check_budget, level_sums, Execution, WordFold};

fn check_measure(a: &CylinderFunction, nu: &AprioriMeasure) -> Result<()> {
    if a.d() != nu.d() {
        return Err(Error::InvalidMeasure(format!("measure has {} weights, alphabet has {} symbols", nu.d(), a.d())));
    }
    Ok(())
}

/// `(L_A phi)(w) = sum_a a_a e^{A(a w)} phi(a w)`, tabulated at depth
/// `max(k - 1, m)`.
pub fn ruelle_apply(a: &CylinderFunction, nu: &AprioriMeasure, phi: &CylinderFunction) -> Result<CylinderFunction> {
    if a.side() != phi.side() {
        return Err(Error::SideMismatch("potential and test function live on different sides"));
    }
    check_measure(a, nu)?;
    let d = a.d();
    let depth = a.depth().saturating_sub(1).max(phi.depth());
    let ea = a.exp();
    let weights: Vec<Cdd> = nu.weights().iter().map(|&w| Cdd::from_f64(w)).collect();
    let mut coords = vec![0usize; depth + 1];
    Ok(CylinderFunction::from_fn(a.side(), d, depth, |w| {
        coords[1..].copy_from_slice(w);
        let mut s = Cdd::ZERO;
        for (sym, &wt) in weights.iter().enumerate() {
            coords[0] = sym;
            s += wt * ea.value(&coords) * phi.value(&coords);
        }
        s
    }))
}

/// `(U_B phi)(w) = e^{B(w)} phi(shift w)`, tabulated at depth `max(k, m + 1)`.
pub fn koopman_apply(b: &CylinderFunction, phi: &CylinderFunction) -> Result<CylinderFunction> {
    if b.side() != phi.side() {
        return Err(Error::SideMismatch("potential and test function live on different sides"));
    }
    let depth = b.depth().max(phi.depth() + 1);
    let eb = b.exp();
    Ok(CylinderFunction::from_fn(b.side(), b.d(), depth, |w| eb.value(w) * phi.value(&w[1..])))
}

/// Matrix of `L_A` on depth-`m` tables.
///
/// Row `w` has exactly `d` nonzero entries, at the columns `u = a w_1 .. w_{m-1}`,
/// with value `a_a e^{A(a w_1 .. w_{k-1})}`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    side: Side,
    d: usize,
    m: usize,
    rows: Vec<Vec<(usize, Cdd)>>,
}

impl TransferMatrix {
    pub fn new(a: &CylinderFunction, nu: &AprioriMeasure, m: usize) -> Result<Self> {
        check_measure(a, nu)?;
        let need = a.depth().saturating_sub(1).max(1);
        if m < need {
            return Err(Error::DepthTooSmall { need, got: m });
        }
        let d = a.d();
        let ea = a.exp();
        let size = d.pow(m as u32);
        let shift = d.pow((m - 1) as u32);
        let mut coords = vec![0usize; m + 1];
        let rows = (0..size)
            .map(|row| {
                coords[1..].copy_from_slice(&word_of_index(d, m, row));
                (0..d)
                    .map(|sym| {
                        coords[0] = sym;
                        (sym * shift + row / d, Cdd::from_f64(nu.weight(sym)) * ea.value(&coords))
                    })
                    .collect()
            })
            .collect();
        Ok(TransferMatrix { side: a.side(), d, m, rows })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Nonzero entries of one row as `(column, value)`.
    pub fn row(&self, i: usize) -> &[(usize, Cdd)] {
        &self.rows[i]
    }

    pub fn apply(&self, v: &[Cdd]) -> Vec<Cdd> {
        self.rows.iter().map(|row| row.iter().map(|&(j, m)| m * v[j]).sum()).collect()
    }

    pub fn apply_transpose(&self, v: &[Cdd]) -> Vec<Cdd> {
        let mut out = vec![Cdd::ZERO; v.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, m) in row {
                out[j] += m * v[i];
            }
        }
        out
    }

    pub fn dense(&self) -> CMatrix {
        let n = self.size();
        let mut m = CMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v.to_c64();
            }
        }
        m
    }

    pub fn norm_inf(&self) -> f64 {
        self.rows.iter().map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Wraps a depth-`m` table as a cylinder function.
    pub fn function(&self, table: Vec<Cdd>) -> CylinderFunction {
        CylinderFunction::new(self.side, self.d, self.m, table).expect("table sized by the matrix")
    }
}

/// One eigenvalue cluster.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub value: Cdd,
    pub algebraic: usize,
    pub geometric: usize,
    /// Basis of right eigenvectors, each with largest-modulus entry 1.
    pub vectors: Vec<CylinderFunction>,
}

/// Eigen decomposition of a transfer matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Eigenvalues with algebraic repetition, by decreasing modulus then
    /// increasing argument.
    pub eigenvalues: Vec<Complex64>,
    pub eigenspaces: Vec<Eigenspace>,
    pub norm_inf: f64,
}

impl Spectrum {
    /// The eigenspace whose value lies within `tol` of `lambda`.
    pub fn nearest(&self, lambda: Complex64, tol: f64) -> Option<&Eigenspace> {
        self.eigenspaces
            .iter()
            .map(|e| ((e.value.to_c64() - lambda).norm(), e))
            .filter(|(dist, _)| *dist <= tol)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, e)| e)
    }

    /// Eigenspaces with nonzero eigenvalue.
    pub fn nonzero(&self) -> impl Iterator<Item = &Eigenspace> {
        self.eigenspaces.iter().filter(|e| e.value.norm() > 0.0)
    }
}

/// Eigenvalues below this fraction of `||M||` are treated as exact zeros.
/// De Bruijn transfer matrices at depth `m > k - 1` carry nilpotent blocks
/// whose computed eigenvalues scatter like `eps^(1/p)`.
const ZERO_SNAP: f64 = 1e-5;
/// Computed eigenvalues closer than this fraction of `||M||` form one cluster.
const CLUSTER: f64 = 1e-7;
/// Singular values below this fraction of `||M||` count as zero.
pub const RANK_THRESHOLD: f64 = 1e-8;

fn spectral_order(a: Complex64, b: Complex64, tol: f64) -> Ordering {
    let (ra, rb) = (a.norm(), b.norm());
    if (ra - rb).abs() > tol {
        return rb.total_cmp(&ra);
    }
    a.arg().total_cmp(&b.arg())
}

/// Full eigen decomposition with deterministic ordering and normalization.
pub fn spectrum_of(m: &TransferMatrix) -> Result<Spectrum> {
    let dense = m.dense();
    let n = dense.nrows();
    let norm = linalg::norm_inf(&dense).max(f64::MIN_POSITIVE);
    let raw = linalg::schur_eigenvalues(&dense)?;

    // cluster
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    let mut zeros = 0usize;
    for z in raw {
        if z.norm() <= ZERO_SNAP * norm {
            zeros += 1;
            continue;
        }
        match clusters.iter_mut().find(|c| c.iter().any(|w| (w - z).norm() <= CLUSTER * norm)) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut values: Vec<(Complex64, usize)> =
        clusters.iter().map(|c| (c.iter().sum::<Complex64>() / c.len() as f64, c.len())).collect();
    if zeros > 0 {
        values.push((Complex64::new(0.0, 0.0), zeros));
    }

    let apply = |v: &[Cdd]| m.apply(v);
    let mut spaces = Vec::with_capacity(values.len());
    for (lambda, algebraic) in values {
        let mut shifted = dense.clone();
        for i in 0..n {
            shifted[(i, i)] -= lambda;
        }
        let (sv, _) = linalg::null_directions(&shifted, 0)?;
        let geometric = sv.iter().filter(|&&s| s < RANK_THRESHOLD * norm).count().max(1);
        let (_, dirs) = linalg::null_directions(&shifted, geometric)?;
        let mut value = Cdd::from(lambda);
        let mut vectors: Vec<Vec<Cdd>> = dirs.iter().map(|v| v.iter().map(|&z| Cdd::from(z)).collect()).collect();
        if lambda.norm() == 0.0 {
            value = Cdd::ZERO;
        } else if geometric == 1 && algebraic == 1 {
            let (l, v) = linalg::refine_eigenpair(&apply, &dense, value, &vectors[0]);
            value = l;
            vectors[0] = v;
        }
        for v in vectors.iter_mut() {
            linalg::normalize_max(v);
        }
        spaces.push(Eigenspace {
            value,
            algebraic,
            geometric,
            vectors: vectors.into_iter().map(|v| m.function(v)).collect(),
        });
    }
    let tol = 1e-9 * norm;
    spaces.sort_by(|a, b| spectral_order(a.value.to_c64(), b.value.to_c64(), tol));
    let eigenvalues = spaces.iter().flat_map(|e| std::iter::repeat_n(e.value.to_c64(), e.algebraic)).collect();
    Ok(Spectrum { eigenvalues, eigenspaces: spaces, norm_inf: norm })
}

/// Leading eigenvalue and positive eigenfunction of a real potential.
#[derive(Clone, Debug)]
pub struct RpfData {
    pub value: Dd,
    /// Strictly positive, largest entry 1.
    pub vector: CylinderFunction,
}

const RPF_CAP: usize = 200_000;

/// Power iteration from the all-ones table until
/// `||L h - lambda h|| <= 1e-12 lambda`, then Newton refinement.
pub fn rpf_leading(a: &CylinderFunction, nu: &AprioriMeasure, m: usize) -> Result<RpfData> {
    if !a.is_real() {
        return Err(Error::NonReal("leading RPF data needs a real potential"));
    }
    let tm = TransferMatrix::new(a, nu, m)?;
    let mut h = vec![Cdd::ONE; tm.size()];
    let mut lambda = Cdd::ZERO;
    let mut converged = false;
    for _ in 0..RPF_CAP {
        let g = tm.apply(&h);
        let top = g.iter().map(|z| z.re).fold(Dd::ZERO, |x, y| if y > x { y } else { x });
        lambda = Cdd::from_real(top);
        let res = g.iter().zip(&h).map(|(&gi, &hi)| (gi - lambda * hi).norm()).fold(0.0, f64::max);
        let inv = Cdd::from_real(top.recip());
        h = g.iter().map(|&z| z * inv).collect();
        if res <= 1e-12 * top.to_f64() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationCap(RPF_CAP));
    }
    let dense = tm.dense();
    let (l, mut v) = linalg::refine_eigenpair(&|x: &[Cdd]| tm.apply(x), &dense, lambda, &h);
    linalg::normalize_max(&mut v);
    // drop the round-off imaginary parts; the problem is real
    let v: Vec<Cdd> = v.into_iter().map(|z| Cdd::from_real(z.re)).collect();
    if v.iter().any(|z| z.re.to_f64() <= 0.0) {
        return Err(Error::NoConvergence("RPF eigenvector is not strictly positive".into()));
    }
    Ok(RpfData { value: l.re, vector: tm.function(v) })
}

/// `rho_n` for `n = 1..=n_max` together with its limit.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoSequence {
    /// `values[n - 1] = rho_n`.
    pub values: Vec<f64>,
    /// Leading RPF eigenvalue of `Re A`.
    pub limit: f64,
}

struct RhoFold<'a> {
    d: usize,
    hk: usize,
    factors: &'a [f64],
    tail: usize,
}

impl WordFold for RhoFold<'_> {
    type State = (f64, usize);
    type Value = f64;

    fn root(&self) -> (f64, usize) {
        (1.0, self.tail)
    }

    fn step(&self, s: &(f64, usize), sym: usize, _level: usize) -> (f64, usize) {
        let idx = sym * self.d.pow(self.hk as u32) + s.1;
        let head = if self.hk > 0 { idx / self.d } else { 0 };
        (s.0 * self.factors[idx], head)
    }

    fn value(&self, s: &(f64, usize), _level: usize) -> f64 {
        s.0
    }
}

/// `rho_n = max_{x'} (sum_{|w| = n} prod a_{w_i} e^{Re A^n(w x')})^(1/n)`,
/// the max running over the `d^(k-1)` cylinders that `A^n` can see.
pub fn rho_sequence(
    a: &CylinderFunction,
    nu: &AprioriMeasure,
    n_max: usize,
    word_budget: u64,
    exec: Execution,
) -> Result<RhoSequence> {
    check_measure(a, nu)?;
    if n_max == 0 {
        return Err(Error::DepthTooSmall { need: 1, got: 0 });
    }
    let d = a.d();
    check_budget(d, n_max, word_budget)?;
    let k = a.depth();
    let hk = k.saturating_sub(1);
    let re = a.real_part();
    // factor for prepending `sym` to a point whose first k-1 coordinates have index `head`
    let factors: Vec<f64> = (0..d.pow(k.max(1) as u32))
        .map(|idx| {
            let sym = idx / d.pow(hk as u32);
            let coords = word_of_index(d, k.max(1), idx);
            nu.weight(sym) * re.value(&coords[..k]).exp().re.to_f64()
        })
        .collect();
    let mut best = vec![0.0f64; n_max + 1];
    for tail in 0..d.pow(hk as u32) {
        let fold = RhoFold { d, hk, factors: &factors, tail };
        let sums = level_sums(&fold, d, n_max, true, exec);
        for (b, s) in best.iter_mut().zip(&sums) {
            *b = b.max(*s);
        }
    }
    let values = (1..=n_max).map(|n| best[n].powf(1.0 / n as f64)).collect();
    let limit = rpf_leading(&re, nu, hk.max(1))?.value.to_f64();
    Ok(RhoSequence { values, limit })
}
