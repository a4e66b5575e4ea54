//! The atomic measures `D_{n,x'}`, their certified limit and the duality map
//! `Phi_W`.
//!
//! For an eigenpair `L_A psi = lambda psi` the measure `D_{n,x'}` pairs with a
//! past test function `phi` as
//!
//! ```text
//! <D_{n,x'}, phi> = sum_{|w| = n} prod a_{w_i} psi(F) e^{A^n(F)} lambda^{-n} e^{-W(y_w | x')} phi(y_w)
//! ```
//!
//! where `F = w_n .. w_1 x'` is a future point and `y_w` is the past point
//! with `y_i = w_i` for `i <= n` followed by the reference symbol. The limit
//! `n -> infinity` is an eigendistribution of `L_{A*}` whenever
//! `|lambda| > (rho + eps) theta`, and `Phi_W` maps it back onto `psi`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::involution::DualTriple;
use crate::linalg;
use crate::operators::{rho_sequence, ruelle_apply, RhoSequence, TransferMatrix, RANK_THRESHOLD};
use crate::symbolic::{word_index, AprioriMeasure, CylinderFunction, Point, Side};
use crate::words::{check_budget, level_sums, Execution, WordFold};

/// Relative rounding error of a double-double pairing, per level summed.
const ROUNDING_PER_LEVEL: f64 = 1e-29;

/// Rounds a bound evaluated in `f64` up past its own evaluation error.
fn outward(bound: f64) -> f64 {
    bound * (1.0 + 16.0 * f64::EPSILON)
}

/// Growth rates of a triple on both sides, computed once and shared.
#[derive(Clone, Debug)]
pub struct RhoData {
    pub rho: RhoSequence,
    pub rho_star: RhoSequence,
}

impl RhoData {
    pub fn compute(
        triple: &DualTriple,
        nu: &AprioriMeasure,
        n_max: usize,
        word_budget: u64,
        exec: Execution,
    ) -> Result<Self> {
        Ok(RhoData {
            rho: rho_sequence(triple.a(), nu, n_max, word_budget, exec)?,
            rho_star: rho_sequence(triple.a_star(), nu, n_max, word_budget, exec)?,
        })
    }

    /// Limit of `rho_n`, the leading RPF eigenvalue of `Re A`.
    pub fn estimate(&self) -> f64 {
        self.rho.limit
    }

    pub fn n_max(&self) -> usize {
        self.rho.values.len()
    }

    /// `max(rho_j, rho*_j)` over `j in [max(n, 1), n_max]`.
    pub fn sup_from(&self, n: usize) -> f64 {
        (n.max(1)..=self.n_max())
            .map(|j| self.rho.values[j - 1].max(self.rho_star.values[j - 1]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tuning knobs for [`DistributionApproximant`].
#[derive(Clone, Copy, Debug)]
pub struct PairingOptions {
    /// Margin above `rho`; chosen automatically when absent.
    pub epsilon: Option<f64>,
    /// Length of the `rho_n` sequences used to fix `eps` and `n0`.
    pub n_max: usize,
    /// Largest admissible number of words `d^n` in a single sum.
    pub word_budget: u64,
    /// Symbol filling the reference past point.
    pub reference: usize,
    pub execution: Execution,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions { epsilon: None, n_max: 12, word_budget: 1 << 24, reference: 0, execution: Execution::Auto }
    }
}

/// Certified value of `lim <D_{n,x'}, phi>`.
#[derive(Clone, Copy, Debug)]
pub struct LimitPairing {
    pub value: Cdd,
    pub n_used: usize,
    /// Tail bound `K ((rho + eps) theta / |lambda|)^n` at `n_used`, or the
    /// rounding allowance once the pairing has stabilized.
    pub bound: f64,
}

/// One row of a convergence trace.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub n: usize,
    pub value: Cdd,
    /// Certified tail bound, defined from `n0` on.
    pub bound: Option<f64>,
}

/// The data defining `D_{n,x'}` and its pairings.
#[derive(Clone, Debug)]
pub struct DistributionApproximant {
    triple: Arc<DualTriple>,
    nu: AprioriMeasure,
    psi: CylinderFunction,
    lambda: Cdd,
    base: Point,
    reference: Point,
    epsilon: f64,
    n0: usize,
    rho: Arc<RhoData>,
    options: PairingOptions,
}

/// Word-sum state: weight product, index of the head of `F`, index of the
/// head of `y_w`.
struct PairFold<'a> {
    d: usize,
    k: usize,
    head_len: usize,
    psi: &'a CylinderFunction,
    chi: &'a CylinderFunction,
    factors: Vec<Cdd>,
    root_head: usize,
    root_past: usize,
    reference: usize,
}

impl WordFold for PairFold<'_> {
    type State = (Cdd, usize, usize);
    type Value = Cdd;

    fn root(&self) -> Self::State {
        (Cdd::ONE, self.root_head, self.root_past)
    }

    fn step(&self, s: &Self::State, sym: usize, level: usize) -> Self::State {
        let d = self.d;
        let full = sym * d.pow(self.head_len as u32) + s.1;
        let a_idx = full / d.pow((self.head_len + 1 - self.k) as u32);
        let p = self.chi.depth();
        let past = if level <= p {
            let place = d.pow((p - level) as u32);
            s.2 - self.reference * place + sym * place
        } else {
            s.2
        };
        (s.0 * self.factors[a_idx], full / d, past)
    }

    fn value(&self, s: &Self::State, _level: usize) -> Cdd {
        let psi_idx = s.1 / self.d.pow((self.head_len - self.psi.depth()) as u32);
        s.0 * self.psi.table()[psi_idx] * self.chi.table()[s.2]
    }
}

impl DistributionApproximant {
    pub fn new(
        triple: Arc<DualTriple>,
        nu: AprioriMeasure,
        psi: CylinderFunction,
        lambda: Cdd,
        base: Point,
        options: PairingOptions,
    ) -> Result<Self> {
        let rho = Arc::new(RhoData::compute(&triple, &nu, options.n_max, options.word_budget, options.execution)?);
        Self::with_rho(triple, nu, psi, lambda, base, options, rho)
    }

    /// As [`new`](Self::new), reusing precomputed growth rates.
    pub fn with_rho(
        triple: Arc<DualTriple>,
        nu: AprioriMeasure,
        psi: CylinderFunction,
        lambda: Cdd,
        base: Point,
        options: PairingOptions,
        rho: Arc<RhoData>,
    ) -> Result<Self> {
        if psi.side() != Side::Future || base.side() != Side::Future {
            return Err(Error::SideMismatch("psi and the base point live on the future side"));
        }
        base.validate(triple.d())?;
        if options.reference >= triple.d() {
            return Err(Error::SymbolOutOfRange { symbol: options.reference, d: triple.d() });
        }
        if lambda.norm() == 0.0 {
            return Err(Error::ZeroEigenvalue);
        }
        let image = ruelle_apply(triple.a(), &nu, &psi)?;
        let residual = image.sub(&psi.scale(lambda))?.sup_norm();
        let allowed = 1e-10 * (1.0 + lambda.norm()) * psi.sup_norm();
        if residual > allowed {
            return Err(Error::NotEigenfunction { residual, bound: allowed });
        }
        let (epsilon, n0) = choose_margin(&rho, lambda.norm(), triple.theta(), options.epsilon)?;
        Ok(DistributionApproximant {
            reference: Point::constant(Side::Past, options.reference),
            triple,
            nu,
            psi,
            lambda,
            base,
            epsilon,
            n0,
            rho,
            options,
        })
    }

    pub fn triple(&self) -> &DualTriple {
        &self.triple
    }

    pub fn psi(&self) -> &CylinderFunction {
        &self.psi
    }

    pub fn lambda(&self) -> Cdd {
        self.lambda
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn rho(&self) -> &RhoData {
        &self.rho
    }

    pub fn rho_data(&self) -> Arc<RhoData> {
        Arc::clone(&self.rho)
    }

    /// `(rho + eps) theta / |lambda|`, the certified contraction rate.
    pub fn rate(&self) -> f64 {
        (self.rho.estimate() + self.epsilon) * self.triple.theta() / self.lambda.norm()
    }

    /// `|lambda| - (rho + eps) theta`.
    pub fn margin(&self) -> f64 {
        self.lambda.norm() - (self.rho.estimate() + self.epsilon) * self.triple.theta()
    }

    fn growth(&self) -> f64 {
        (self.rho.estimate() + self.epsilon) / self.lambda.norm()
    }

    /// `e^{-W(. | x)} phi` as a past function.
    fn weighted(&self, base: &Point, phi: &CylinderFunction) -> Result<CylinderFunction> {
        if phi.side() != Side::Past {
            return Err(Error::SideMismatch("test functions live on the past side"));
        }
        let w = self.triple.w().partial_past(base)?;
        w.map(|v| (-v).exp()).mul(phi)
    }

    fn levels(&self, base: &Point, n: usize, phi: &CylinderFunction, all: bool, exec: Execution) -> Result<Vec<Cdd>> {
        let d = self.triple.d();
        check_budget(d, n, self.options.word_budget)?;
        base.validate(d)?;
        let chi = self.weighted(base, phi)?;
        let a = self.triple.a();
        let k = a.depth();
        let head_len = k.max(self.psi.depth()).max(1);
        let ea = a.exp();
        let hk = k.saturating_sub(1);
        let factors = (0..d.pow(k as u32))
            .map(|idx| {
                let sym = if k == 0 { 0 } else { idx / d.pow(hk as u32) };
                Cdd::from_f64(self.nu.weight(sym)) * ea.table()[idx]
            })
            .collect();
        let fold = PairFold {
            d,
            k: k.max(1),
            head_len,
            psi: &self.psi,
            chi: &chi,
            factors: if k == 0 {
                // a constant potential still contributes a_sym e^c per step
                (0..d).map(|s| Cdd::from_f64(self.nu.weight(s)) * ea.table()[0]).collect()
            } else {
                factors
            },
            root_head: word_index(d, &base.coords(head_len)),
            root_past: word_index(d, &self.reference.coords(chi.depth())),
            reference: self.options.reference,
        };
        let sums = level_sums(&fold, d, n, all, exec);
        let inv = self.lambda.recip();
        let mut scale = Cdd::ONE;
        Ok(sums
            .into_iter()
            .map(|s| {
                let v = s * scale;
                scale *= inv;
                v
            })
            .collect())
    }

    /// `<D_{n,x'}, phi>` at the stored base point.
    pub fn pair_dn(&self, n: usize, phi: &CylinderFunction) -> Result<Cdd> {
        self.pair_dn_with(n, phi, self.options.execution)
    }

    pub fn pair_dn_with(&self, n: usize, phi: &CylinderFunction, exec: Execution) -> Result<Cdd> {
        Ok(self.levels(&self.base, n, phi, false, exec)?[n])
    }

    /// `<D_{n,z}, phi>` for another base point `z`.
    pub fn pair_dn_at(&self, base: &Point, n: usize, phi: &CylinderFunction) -> Result<Cdd> {
        Ok(self.levels(base, n, phi, false, self.options.execution)?[n])
    }

    /// Seminorm entering the bounds at level `n`: variations from level 1 on
    /// suffice once `n >= 1`, level 0 needs the global oscillation too.
    fn seminorm_at(f: &CylinderFunction, theta: f64, n: usize) -> Result<f64> {
        f.holder_seminorm(theta, n == 0)
    }

    /// `K_{x'}(phi) = ||e^{-W(.|x')} phi||_theta ||psi|| (rho + eps) / (|lambda| - (rho + eps) theta)`,
    /// with the seminorm appropriate to level `n`.
    pub fn tail_constant(&self, phi: &CylinderFunction, n: usize) -> Result<f64> {
        let sem = Self::seminorm_at(&self.weighted(&self.base, phi)?, self.triple.theta(), n)?;
        let rho_eps = self.rho.estimate() + self.epsilon;
        Ok(sem * self.psi.sup_norm() * rho_eps / self.margin())
    }

    /// Certified distance `K r^n` between `<D_{n,x'}, phi>` and the limit.
    pub fn tail_bound(&self, phi: &CylinderFunction, n: usize) -> Result<f64> {
        Ok(outward(self.tail_constant(phi, n)? * self.rate().powi(n as i32)))
    }

    /// Level from which `<D_{n,x'}, phi>` no longer depends on `n`: the depth
    /// of `e^{-W(.|x')} phi`.
    ///
    /// Once `n >= N`, the weight `e^{-W(y_w|x')} phi(y_w)` only reads
    /// `w_1 .. w_N`, and summing out `w_n .. w_{N+1}` applies
    /// `lambda^{-(n-N)} L_A^{n-N}` to `psi`, which returns `psi`.
    pub fn stabilization_level(&self, phi: &CylinderFunction) -> Result<usize> {
        Ok(self.weighted(&self.base, phi)?.depth())
    }

    /// Size of the sum of absolute values behind `<D_{n,x'}, phi>`.
    fn magnitude(&self, n: usize, phi: &CylinderFunction) -> f64 {
        let ew = self.triple.w().table().iter().map(|v| (-v.re).exp().to_f64()).fold(0.0, f64::max);
        let rho_eps = self.rho.estimate() + self.epsilon;
        let growth = match n {
            0 => 1.0,
            n if n <= self.rho.n_max() => (self.rho.rho.values[n - 1].max(rho_eps) / self.lambda.norm()).powi(n as i32),
            n => self.growth().powi(n as i32),
        };
        self.psi.sup_norm() * ew * phi.sup_norm() * growth
    }

    /// Double-double rounding budget of one pairing at level `n`.
    pub fn rounding_allowance(&self, n: usize, phi: &CylinderFunction) -> f64 {
        ROUNDING_PER_LEVEL * (n + 1) as f64 * self.magnitude(n, phi)
    }

    /// First `<D_{n,x'}, phi>` whose distance to the limit is certified below
    /// `tol`: either `n >= n0` and the tail bound is small enough, or `n`
    /// has reached the stabilization level and only rounding remains.
    pub fn limit_pairing(&self, phi: &CylinderFunction, tol: f64) -> Result<LimitPairing> {
        if self.psi.sup_norm() == 0.0 {
            return Ok(LimitPairing { value: Cdd::ZERO, n_used: self.n0, bound: 0.0 });
        }
        let n_stab = self.stabilization_level(phi)?;
        let mut n = self.n0.min(n_stab);
        loop {
            check_budget(self.triple.d(), n, self.options.word_budget)?;
            let bound = if n >= n_stab {
                Some(self.rounding_allowance(n, phi))
            } else if n >= self.n0 {
                Some(self.tail_bound(phi, n)?).filter(|&b| b <= tol)
            } else {
                None
            };
            if let Some(bound) = bound {
                return Ok(LimitPairing { value: self.pair_dn(n, phi)?, n_used: n, bound });
            }
            n += 1;
        }
    }

    /// `Phi_W(D_{n,x'})(x) = <D_{n,x'}, e^{W(.|x)}>`.
    pub fn phi_w_eval(&self, n: usize, x: &Point) -> Result<Cdd> {
        self.pair_dn(n, &self.kernel_at(x)?)
    }

    /// `y -> e^{W(y|x)}`.
    pub fn kernel_at(&self, x: &Point) -> Result<CylinderFunction> {
        Ok(self.triple.w().partial_past(x)?.exp())
    }

    /// Certified limit of `Phi_W(D_{n,x'})(x)`.
    pub fn phi_w_limit(&self, x: &Point, tol: f64) -> Result<LimitPairing> {
        self.limit_pairing(&self.kernel_at(x)?, tol)
    }

    /// `|<D_{n+1,x'}, phi> - lambda^{-1} sum_a a_a <D_{n,a x'}, e^{A*(. a)} phi(. a)>|`.
    pub fn recurrence_residual(&self, n: usize, phi: &CylinderFunction) -> Result<f64> {
        let lhs = self.pair_dn(n + 1, phi)?;
        let d = self.triple.d();
        let a_star = self.triple.a_star();
        let depth = a_star.depth().saturating_sub(1).max(phi.depth().saturating_sub(1));
        let mut rhs = Cdd::ZERO;
        for sym in 0..d {
            let shifted = CylinderFunction::from_fn(Side::Past, d, depth, |y| {
                let mut coords = Vec::with_capacity(y.len() + 1);
                coords.push(sym);
                coords.extend_from_slice(y);
                coords.resize(depth + 1, self.options.reference);
                a_star.value(&coords).exp() * phi.value(&coords)
            });
            rhs += Cdd::from_f64(self.nu.weight(sym)) * self.pair_dn_at(&self.base.push_front(sym), n, &shifted)?;
        }
        Ok((lhs - rhs * self.lambda.recip()).norm())
    }

    /// Gap between two base points and its certified bound
    /// `||psi e^{-W(0^inf|.)}||_theta ||phi|| ((rho + eps) theta / |lambda|)^n`,
    /// plus the rounding allowance of both pairings.
    pub fn base_independence_gap(
        &self,
        n: usize,
        phi: &CylinderFunction,
        z1: &Point,
        z2: &Point,
    ) -> Result<(f64, f64)> {
        let gap = (self.pair_dn_at(z1, n, phi)? - self.pair_dn_at(z2, n, phi)?).norm();
        let g = self.triple.w().partial_future(&self.reference)?.map(|v| (-v).exp()).mul(&self.psi)?;
        let bound = Self::seminorm_at(&g, self.triple.theta(), n)? * phi.sup_norm() * self.rate().powi(n as i32);
        Ok((gap, outward(bound) + 2.0 * self.rounding_allowance(n, phi)))
    }

    /// Bound on `|<D_{n+1},phi> - <D_n,phi>|`:
    /// `||e^{-W(.|x')} phi||_theta ||psi|| ((rho + eps)/|lambda|) ((rho + eps) theta/|lambda|)^n`,
    /// plus the rounding allowance of both pairings.
    pub fn cauchy_bound(&self, n: usize, phi: &CylinderFunction) -> Result<f64> {
        let sem = Self::seminorm_at(&self.weighted(&self.base, phi)?, self.triple.theta(), n)?;
        let rounding = self.rounding_allowance(n, phi) + self.rounding_allowance(n + 1, phi);
        Ok(outward(sem * self.psi.sup_norm() * self.growth() * self.rate().powi(n as i32)) + rounding)
    }

    /// `||psi|| ||e^{-W}|| ((rho + eps)/|lambda|)^n ||phi||`.
    pub fn uniform_bound(&self, n: usize, phi: &CylinderFunction) -> f64 {
        let ew = self.triple.w().table().iter().map(|v| (-v.re).exp().to_f64()).fold(0.0, f64::max);
        self.psi.sup_norm() * ew * self.growth().powi(n as i32) * phi.sup_norm()
    }

    /// `|<D_{n,x'}, L_{A*} phi> - lambda <D_{n,x'}, phi>|`.
    pub fn eigendistribution_residual(&self, n: usize, phi: &CylinderFunction) -> Result<f64> {
        let image = ruelle_apply(self.triple.a_star(), &self.nu, phi)?;
        Ok((self.pair_dn(n, &image)? - self.lambda * self.pair_dn(n, phi)?).norm())
    }

    /// `<D_{n,x'}, phi>` for `n = 0..=n_hi`, computed in a single sweep.
    pub fn convergence_trace(&self, phi: &CylinderFunction, n_hi: usize) -> Result<Vec<TraceRow>> {
        let values = self.levels(&self.base, n_hi, phi, true, self.options.execution)?;
        let zero = self.psi.sup_norm() == 0.0;
        values
            .into_iter()
            .enumerate()
            .map(|(n, value)| {
                let bound = if n < self.n0 {
                    None
                } else if zero {
                    Some(0.0)
                } else {
                    Some(self.tail_bound(phi, n)?)
                };
                Ok(TraceRow { n, value, bound })
            })
            .collect()
    }
}

/// Picks `(eps, n0)`.
///
/// With an explicit `eps`, `n0` is the least `n` such that
/// `rho_j, rho*_j <= rho + eps` for all `j` in `[max(n, 1), n_max]`. Otherwise
/// every `n0` in `0..=n_max` is tried with the smallest margin it allows,
/// `eps(n0) = max(sup_j max(rho_j, rho*_j) - rho, 1e-9 rho)`, and the choice
/// that certifies `1e-10` after the fewest levels wins.
fn choose_margin(rho: &RhoData, modulus: f64, theta: f64, user: Option<f64>) -> Result<(f64, usize)> {
    let est = rho.estimate();
    let n_max = rho.n_max();
    if let Some(eps) = user {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidMeasure(format!("epsilon must be positive, got {eps}")));
        }
        let threshold = (est + eps) * theta;
        if modulus <= threshold {
            return Err(Error::OutsideRegime { modulus, threshold });
        }
        let n0 = (0..=n_max).find(|&n| rho.sup_from(n) <= est + eps).ok_or(Error::NotStabilized(n_max))?;
        return Ok((eps, n0));
    }
    let mut best: Option<(usize, usize, f64)> = None;
    let mut least_threshold = f64::INFINITY;
    for n0 in 0..=n_max {
        let eps = (rho.sup_from(n0) - est).max(1e-9 * est);
        let rho_eps = est + eps;
        least_threshold = least_threshold.min(rho_eps * theta);
        if modulus <= rho_eps * theta {
            continue;
        }
        let r = rho_eps * theta / modulus;
        let c = rho_eps / (modulus - rho_eps * theta);
        let levels = ((c / 1e-10).ln() / (1.0 / r).ln()).ceil().max(0.0) as usize;
        let cost = n0.max(levels);
        if best.is_none_or(|(b, _, _)| cost < b) {
            best = Some((cost, n0, eps));
        }
    }
    match best {
        Some((_, n0, eps)) => Ok((eps, n0)),
        None => Err(Error::OutsideRegime { modulus, threshold: least_threshold }),
    }
}

/// Left eigenvector oracle for `lim <D_{n,x'}, phi>`.
///
/// On depth-`m` past functions the limit distribution is a left
/// `lambda`-eigenvector `u` of the `A*` transfer matrix. Its scale is fixed by
/// `<u, e^{W(.|x_ref)}> = psi(x_ref)` at `x_ref = 0^inf`, falling back to the
/// cylinder where `|psi|` is largest when `psi(0^inf)` is negligible.
pub fn oracle_pairing(
    triple: &DualTriple,
    nu: &AprioriMeasure,
    lambda: Cdd,
    psi: &CylinderFunction,
    m: usize,
    phi: &CylinderFunction,
) -> Result<Cdd> {
    if phi.side() != Side::Past {
        return Err(Error::SideMismatch("test functions live on the past side"));
    }
    if phi.depth() > m {
        return Err(Error::DepthTooSmall { need: phi.depth(), got: m });
    }
    let nmat = TransferMatrix::new(triple.a_star(), nu, m)?;
    let mut dense_t = nmat.dense().transpose();
    let norm = linalg::norm_inf(&dense_t).max(linalg::norm_inf(&nmat.dense()));
    let l = lambda.to_c64();
    for i in 0..dense_t.nrows() {
        dense_t[(i, i)] -= l;
    }
    let (sv, dirs) = linalg::null_directions(&dense_t, 1)?;
    let geometric = sv.iter().filter(|&&s| s < RANK_THRESHOLD * norm).count();
    if geometric != 1 {
        return Err(Error::NotSimple(geometric));
    }
    let dense_t = nmat.dense().transpose();
    let u0: Vec<Cdd> = dirs[0].iter().map(|&z| Cdd::from(z)).collect();
    let (_, u) = linalg::refine_eigenpair(&|v: &[Cdd]| nmat.apply_transpose(v), &dense_t, lambda, &u0);

    let d = triple.d();
    let sup = psi.sup_norm();
    let mut x_ref = Point::constant(Side::Future, 0);
    if psi.evaluate(&x_ref)?.norm() < 1e-8 * sup {
        let (idx, _) = psi.table().iter().enumerate().fold((0, -1.0), |best, (i, v)| {
            if v.norm() > best.1 * (1.0 + 1e-12) {
                (i, v.norm())
            } else {
                best
            }
        });
        x_ref = Point::new(Side::Future, crate::symbolic::word_of_index(d, psi.depth(), idx), 0);
    }
    let pair = |f: &CylinderFunction| -> Cdd { f.lift(m).table().iter().zip(&u).map(|(&a, &b)| a * b).sum() };
    let kernel = triple.w().partial_past(&x_ref)?.exp();
    let scale_at = pair(&kernel);
    let target = psi.evaluate(&x_ref)?;
    if target.norm() == 0.0 {
        return Ok(Cdd::ZERO);
    }
    if scale_at.norm() < 1e-300 {
        return Err(Error::NotEigenfunction { residual: f64::INFINITY, bound: 0.0 });
    }
    Ok(pair(phi) * target / scale_at)
}

/// Geometric multiplicities on both sides of the duality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiplicityPair {
    /// `dim ker(M_A - lambda)`.
    pub dim_e: usize,
    /// `dim ker(M_{A*}^T - lambda)`.
    pub dim_f: usize,
    /// Set when `|lambda|` is within `1e-8` of `rho theta`.
    pub near_threshold: bool,
}

/// Compares the `lambda`-eigenspace of `L_A` with the `lambda`-eigenspace of
/// the transposed `A*` matrix, both at depth `m`.
pub fn multiplicity_pair(
    triple: &DualTriple,
    nu: &AprioriMeasure,
    lambda: Complex64,
    m: usize,
    rho_estimate: f64,
) -> Result<MultiplicityPair> {
    let threshold = rho_estimate * triple.theta();
    if lambda.norm() <= threshold {
        return Err(Error::OutsideRegime { modulus: lambda.norm(), threshold });
    }
    let dims = |f: &CylinderFunction, transpose: bool| -> Result<usize> {
        let tm = TransferMatrix::new(f, nu, m)?;
        let mut dense = if transpose { tm.dense().transpose() } else { tm.dense() };
        let norm = linalg::norm_inf(&tm.dense());
        for i in 0..dense.nrows() {
            dense[(i, i)] -= lambda;
        }
        Ok(linalg::nullity(&dense, RANK_THRESHOLD * norm)?.0)
    };
    Ok(MultiplicityPair {
        dim_e: dims(triple.a(), false)?,
        dim_f: dims(triple.a_star(), true)?,
        near_threshold: lambda.norm() - threshold < 1e-8,
    })
}
