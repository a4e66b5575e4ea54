//! Transfer/Koopman duality through RPF lifts.
//!
//! Everything rests on `L_A[f U_B g] = g L_A[e^B f]`. With `f` the RPF
//! eigenfunction of `A + B` (eigenvalue `alpha`), `psi -> f psi` maps
//! `U_B`-eigenfunctions at `alpha/lambda` onto `L_A`-eigenfunctions at
//! `lambda`. On the distribution side, multiplying by the RPF eigenfunction
//! `g` of `A* + C*` (eigenvalue `beta`) turns `L_{A*}`-eigendistributions at
//! `lambda` into `U_{C*}`-eigendistributions at `beta/lambda`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dd::{Cdd, Dd};
use crate::eigendistribution::{DistributionApproximant, PairingOptions};
use crate::error::{Error, Result};
use crate::involution::DualTriple;
use crate::linalg::{self, CMatrix};
use crate::operators::{koopman_apply, rpf_leading, ruelle_apply, spectrum_of, TransferMatrix, RANK_THRESHOLD};
use crate::symbolic::{word_index, word_of_index, AprioriMeasure, CylinderFunction, Point, Side};

/// `||L_A[f U_B g] - g L_A[e^B f]||`, exact on cylinders.
pub fn fundamental_identity_residual(
    a: &CylinderFunction,
    nu: &AprioriMeasure,
    b: &CylinderFunction,
    f: &CylinderFunction,
    g: &CylinderFunction,
) -> Result<f64> {
    let lhs = ruelle_apply(a, nu, &f.mul(&koopman_apply(b, g)?)?)?;
    let rhs = g.mul(&ruelle_apply(a, nu, &f.mul(&b.exp())?)?)?;
    Ok(lhs.sub(&rhs)?.sup_norm())
}

/// RPF data of `A + B` and of `A* + C*`.
#[derive(Clone, Debug)]
pub struct KoopmanLift {
    pub f: CylinderFunction,
    pub alpha: Dd,
    pub g: CylinderFunction,
    pub beta: Dd,
}

/// Builds both RPF lifts; all four potentials must be real.
pub fn build_lift(
    a: &CylinderFunction,
    b: &CylinderFunction,
    a_star: &CylinderFunction,
    c_star: &CylinderFunction,
    nu: &AprioriMeasure,
) -> Result<KoopmanLift> {
    if !(a.is_real() && b.is_real()) {
        return Err(Error::NonReal("A and B must be real for the RPF lift"));
    }
    if !(a_star.is_real() && c_star.is_real()) {
        return Err(Error::NonReal("A* and C* must be real for the RPF lift"));
    }
    let lift = |p: &CylinderFunction| -> Result<(CylinderFunction, Dd)> {
        let r = rpf_leading(p, nu, p.depth().saturating_sub(1).max(1))?;
        let image = ruelle_apply(p, nu, &r.vector)?;
        let residual = image.sub(&r.vector.scale(Cdd::from_real(r.value)))?.sup_norm();
        let allowed = 1e-10 * r.value.to_f64() * r.vector.sup_norm();
        if residual > allowed {
            return Err(Error::NotEigenfunction { residual, bound: allowed });
        }
        Ok((r.vector, r.value))
    };
    let (f, alpha) = lift(&a.add(b)?)?;
    let (g, beta) = lift(&a_star.add(c_star)?)?;
    Ok(KoopmanLift { f, alpha, g, beta })
}

/// `||U_B psi - mu psi||`, evaluated at depth `max(k_B, depth psi + 1)`.
pub fn koopman_residual(b: &CylinderFunction, psi: &CylinderFunction, mu: Cdd) -> Result<f64> {
    Ok(koopman_apply(b, psi)?.sub(&psi.scale(mu))?.sup_norm())
}

/// `psi -> f psi`, for `psi` a `U_B`-eigenfunction at `alpha/lambda`.
pub fn lift_e(
    lift: &KoopmanLift,
    b: &CylinderFunction,
    psi: &CylinderFunction,
    lambda: Cdd,
    tol: f64,
) -> Result<CylinderFunction> {
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    let mu = Cdd::from_real(lift.alpha) / lambda;
    let residual = koopman_residual(b, psi, mu)?;
    let allowed = tol * psi.sup_norm();
    if residual > allowed {
        return Err(Error::NotKoopmanEigenfunction { residual, bound: allowed });
    }
    lift.f.mul(psi)
}

/// `<g D_{n,x'}, phi> = <D_{n,x'}, g phi>`.
pub fn lift_f_pairing(
    lift: &KoopmanLift,
    dist: &DistributionApproximant,
    n: usize,
    phi: &CylinderFunction,
) -> Result<Cdd> {
    dist.pair_dn(n, &lift.g.mul(phi)?)
}

/// Dimension of `{psi of depth j : U_B psi = mu psi}`.
pub fn koopman_eigenspace_dim(b: &CylinderFunction, mu: Complex64, depth: usize) -> Result<usize> {
    let d = b.d();
    let rows = b.depth().max(depth + 1);
    let eb = b.exp();
    let cols = d.pow(depth as u32);
    let mut m = CMatrix::zeros(d.pow(rows as u32), cols);
    for r in 0..m.nrows() {
        let w = word_of_index(d, rows, r);
        m[(r, word_index(d, &w[1..=depth]))] += eb.value(&w).to_c64();
        m[(r, word_index(d, &w[..depth]))] -= mu;
    }
    let scale = linalg::norm_inf(&m).max(f64::MIN_POSITIVE);
    Ok(linalg::nullity(&m, RANK_THRESHOLD * scale)?.0)
}

/// Inputs of the end-to-end check.
#[derive(Clone, Debug)]
pub struct KoopmanProblem {
    pub triple: Arc<DualTriple>,
    pub nu: AprioriMeasure,
    pub b: CylinderFunction,
    pub c_star: CylinderFunction,
    /// Target eigenvalue of `L_A`; the nearest computed eigenvalue is used.
    pub lambda: Complex64,
    /// Depth of the transfer matrix.
    pub m: usize,
    pub tol: f64,
    pub base: Point,
    /// Past test functions.
    pub battery: Vec<CylinderFunction>,
    /// Future points at which `psi` is reconstructed.
    pub grid: Vec<Point>,
    pub options: PairingOptions,
}

/// One stage of the end-to-end check.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct KoopmanReport {
    pub lambda: Cdd,
    pub alpha: Dd,
    pub beta: Dd,
    pub stages: Vec<Stage>,
}

impl KoopmanReport {
    pub fn pass(&self) -> bool {
        self.stages.iter().all(|s| s.pass)
    }

    pub fn first_failure(&self) -> Option<&Stage> {
        self.stages.iter().find(|s| !s.pass)
    }
}

fn stage(name: &'static str, residual: f64, tol: f64) -> Stage {
    Stage { name, residual, tol, pass: residual <= tol }
}

/// Runs the whole chain: `h` from the spectrum of `L_A`, `psi = h/f` as a
/// Koopman eigenfunction, the distribution `D` built from `h`, the
/// `U_{C*}` eigen-relation of `g D` on the battery, and the pointwise
/// reconstruction `psi = Phi_W(D)/f`.
pub fn verify_koopman_theorem(p: &KoopmanProblem) -> Result<KoopmanReport> {
    let t = &p.triple;
    let tm = TransferMatrix::new(t.a(), &p.nu, p.m)?;
    let spec = spectrum_of(&tm)?;
    let space = spec
        .nearest(p.lambda, 1e-8 * spec.norm_inf.max(1.0))
        .ok_or_else(|| Error::NoSuchEigenvalue(format!("{} not in the spectrum of L_A", p.lambda)))?;
    if space.geometric != 1 {
        return Err(Error::NotSimple(space.geometric));
    }
    let lambda = space.value;
    let h = space.vectors[0].clone();
    let lift = build_lift(t.a(), &p.b, t.a_star(), &p.c_star, &p.nu)?;
    let mut stages = Vec::new();

    // (1) h is an L_A eigenfunction
    let res_h = ruelle_apply(t.a(), &p.nu, &h)?.sub(&h.scale(lambda))?.sup_norm() / h.sup_norm();
    stages.push(stage("ruelle-eigenfunction", res_h, p.tol));

    // (2) psi = h / f is a U_B eigenfunction at alpha / lambda, and E maps it back to h
    let psi = h.mul(&lift.f.map(Cdd::recip))?;
    let mu = Cdd::from_real(lift.alpha) / lambda;
    stages.push(stage("koopman-eigenfunction", koopman_residual(&p.b, &psi, mu)? / psi.sup_norm(), p.tol));
    // a failed precondition is already recorded by the previous stage
    let back = match lift_e(&lift, &p.b, &psi, lambda, p.tol) {
        Ok(v) => v,
        Err(_) => lift.f.mul(&psi)?,
    };
    stages.push(stage("lift-round-trip", back.sub(&h)?.sup_norm() / h.sup_norm(), p.tol));
    let depth = psi.depth();
    let dim_u = koopman_eigenspace_dim(&p.b, mu.to_c64(), depth)?;
    stages.push(stage("koopman-eigenspace-dimension", dim_u.abs_diff(space.geometric) as f64, 0.0));

    // (3) D from h
    let dist = DistributionApproximant::new(Arc::clone(t), p.nu.clone(), h.clone(), lambda, p.base.clone(), p.options)?;

    // (4) <g D, U_{C*} phi> = (beta / lambda) <g D, phi>
    let ratio = Cdd::from_real(lift.beta) / lambda;
    let mut worst = 0.0f64;
    for phi in &p.battery {
        let lhs = dist.limit_pairing(&lift.g.mul(&koopman_apply(&p.c_star, phi)?)?, p.tol)?;
        let rhs = dist.limit_pairing(&lift.g.mul(phi)?, p.tol)?;
        worst = worst.max((lhs.value - ratio * rhs.value).norm());
    }
    stages.push(stage("koopman-eigendistribution", worst, p.tol));

    // (5) psi(x) = Phi_W(D)(x) / f(x)
    let mut worst = 0.0f64;
    for x in &p.grid {
        let phi_w = dist.phi_w_limit(x, p.tol)?;
        let recon = phi_w.value / lift.f.evaluate(x)?;
        worst = worst.max((recon - psi.evaluate(x)?).norm());
    }
    stages.push(stage("reconstruction", worst, p.tol));

    Ok(KoopmanReport { lambda, alpha: lift.alpha, beta: lift.beta, stages })
}

/// Points `w 0^inf` for every word `w` of length `depth`.
pub fn cylinder_grid(d: usize, depth: usize) -> Vec<Point> {
    (0..d.pow(depth as u32)).map(|i| Point::new(Side::Future, word_of_index(d, depth, i), 0)).collect()
}
