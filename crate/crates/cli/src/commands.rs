//! The five subcommands.

use std::sync::Arc;

use kernel_duality::{
    build_lift, cocycle_iterate_check, cylinder_grid, fundamental_identity_residual, kernel_norm_bounds,
    multiplicity_pair, oracle_pairing, sinai_pair, spectrum_of, verify_involution, verify_koopman_theorem,
    CylinderFunction, DistributionApproximant, DualTriple, Eigenspace, Error, Execution, KoopmanProblem,
    PairingOptions, Point, RhoData, Side, Spectrum, TransferMatrix,
};
use serde_json::json;

use crate::config::{test_function, EigenSelector, Experiment};
use crate::report::{cdd, cnum, num, Recorder, Section, Trace, TraceRow};
use crate::RunError;

pub const ANCHOR_INVOLUTION: &str = "involution kernel identity";
pub const ANCHOR_COCYCLE: &str = "iterated cocycle identity";
pub const ANCHOR_KERNEL_BOUNDS: &str = "kernel seminorm bounds";
pub const ANCHOR_GROWTH: &str = "growth rates of the dual pair";
pub const ANCHOR_SPECTRUM: &str = "shared isolated spectrum";
pub const ANCHOR_MULTIPLICITY: &str = "eigenspace dimension duality";
pub const ANCHOR_PREIMAGE: &str = "finite-level preimage identity";
pub const ANCHOR_RECURRENCE: &str = "recurrence between levels";
pub const ANCHOR_TAIL: &str = "exponential convergence of the atomic measures";
pub const ANCHOR_BASE: &str = "independence of the base point";
pub const ANCHOR_EIGENDISTRIBUTION: &str = "eigendistribution relation";
pub const ANCHOR_ORACLE: &str = "left-eigenvector oracle";
pub const ANCHOR_RECONSTRUCTION: &str = "duality map reconstruction";
pub const ANCHOR_TRANSFER_KOOPMAN: &str = "transfer-Koopman identity";
pub const ANCHOR_KOOPMAN: &str = "Koopman duality chain";
pub const ANCHOR_ABORT: &str = "aborted computation";

/// Every anchor a record can carry.
pub const ANCHORS: &[&str] = &[
    ANCHOR_INVOLUTION,
    ANCHOR_COCYCLE,
    ANCHOR_KERNEL_BOUNDS,
    ANCHOR_GROWTH,
    ANCHOR_SPECTRUM,
    ANCHOR_MULTIPLICITY,
    ANCHOR_PREIMAGE,
    ANCHOR_RECURRENCE,
    ANCHOR_TAIL,
    ANCHOR_BASE,
    ANCHOR_EIGENDISTRIBUTION,
    ANCHOR_ORACLE,
    ANCHOR_RECONSTRUCTION,
    ANCHOR_TRANSFER_KOOPMAN,
    ANCHOR_KOOPMAN,
    ANCHOR_ABORT,
];

/// Maps library errors onto exit-code classes.
pub fn classify(e: Error) -> RunError {
    match e {
        Error::OutsideRegime { .. } => RunError::Regime(e.to_string()),
        Error::InvalidMeasure(_)
        | Error::InvalidTheta(_)
        | Error::TableSize { .. }
        | Error::SideMismatch(_)
        | Error::SymbolOutOfRange { .. }
        | Error::NonReal(_)
        | Error::WordBudget { .. }
        | Error::DepthTooSmall { .. }
        | Error::NoSuchEigenvalue(_) => RunError::Config(e.to_string()),
        _ => RunError::Failed(e.to_string()),
    }
}

/// Shared state of one invocation.
pub struct Context {
    pub exp: Experiment,
    pub digest: String,
    triple: Arc<DualTriple>,
    rho: Option<Arc<RhoData>>,
    spectrum: Option<Spectrum>,
}

impl Context {
    pub fn new(exp: Experiment, digest: String) -> Result<Self, RunError> {
        let triple = sinai_pair(&exp.a, &exp.z).and_then(|t| t.with_theta(exp.theta)).map_err(classify)?;
        Ok(Context { exp, digest, triple: Arc::new(triple), rho: None, spectrum: None })
    }

    fn recorder(&self, command: &'static str) -> Recorder<'_> {
        Recorder { config_digest: &self.digest, command }
    }

    fn rho(&mut self) -> Result<Arc<RhoData>, RunError> {
        if self.rho.is_none() {
            let e = &self.exp;
            let r = RhoData::compute(&self.triple, &e.nu, e.n_max, e.word_budget, Execution::Auto).map_err(classify)?;
            self.rho = Some(Arc::new(r));
        }
        Ok(Arc::clone(self.rho.as_ref().expect("just computed")))
    }

    fn spectrum(&mut self) -> Result<&Spectrum, RunError> {
        if self.spectrum.is_none() {
            let tm = TransferMatrix::new(self.triple.a(), &self.exp.nu, self.exp.m).map_err(classify)?;
            self.spectrum = Some(spectrum_of(&tm).map_err(classify)?);
        }
        Ok(self.spectrum.as_ref().expect("just computed"))
    }

    fn selected(&mut self) -> Result<Eigenspace, RunError> {
        let selector = self.exp.selector.clone();
        let spec = self.spectrum()?;
        let found = match &selector {
            EigenSelector::Index { index } => spec.eigenspaces.get(*index),
            EigenSelector::Value { value, match_tol } => {
                spec.nearest(num_complex::Complex64::new(value[0].get(), value[1].get()), match_tol.get())
            }
        };
        found.cloned().ok_or_else(|| {
            RunError::Config(format!(
                "eigenvalue selector ({}) matches none of the {} distinct eigenvalues",
                selector.describe(),
                spec.eigenspaces.len()
            ))
        })
    }

    /// Refuses `|lambda| <= rho theta`.
    fn admissible(&mut self, space: &Eigenspace) -> Result<(), RunError> {
        let threshold = self.rho()?.estimate() * self.exp.theta;
        let modulus = space.value.norm();
        if modulus <= threshold {
            return Err(RunError::Regime(format!(
                "|lambda| = {modulus:.6e} <= rho theta = {threshold:.6e}; eigendistributions are only defined above it"
            )));
        }
        Ok(())
    }

    fn options(&self) -> PairingOptions {
        PairingOptions {
            epsilon: self.exp.epsilon,
            n_max: self.exp.n_max,
            word_budget: self.exp.word_budget,
            reference: self.exp.reference,
            execution: Execution::Auto,
        }
    }

    fn approximant(&mut self, space: &Eigenspace) -> Result<DistributionApproximant, RunError> {
        let rho = self.rho()?;
        DistributionApproximant::with_rho(
            Arc::clone(&self.triple),
            self.exp.nu.clone(),
            space.vectors[0].clone(),
            space.value,
            self.exp.base.clone(),
            self.options(),
            rho,
        )
        .map_err(classify)
    }
}

fn kernel_table_json(t: &DualTriple) -> serde_json::Value {
    let w = t.w();
    let entries: &[kernel_duality::Cdd] = if w.past_depth() + w.future_depth() == 0 { &[] } else { w.table() };
    json!({
        "past_depth": w.past_depth(),
        "future_depth": w.future_depth(),
        "values": entries.iter().map(|&v| cdd(v)).collect::<Vec<_>>(),
    })
}

fn function_json(f: &CylinderFunction) -> serde_json::Value {
    json!({
        "depth": f.depth(),
        "values": f.table().iter().map(|&v| cdd(v)).collect::<Vec<_>>(),
    })
}

fn point_label(p: &Point) -> String {
    format!("{:?}{}^inf", p.prefix(), p.tail())
}

pub fn dualize(ctx: &mut Context) -> Result<Section, RunError> {
    let mut sec = Section::new("dualize");
    let rec = ctx.recorder("dualize");
    let e = &ctx.exp;
    let t = &ctx.triple;
    let res = verify_involution(t).map_err(classify)?;
    sec.records.push(rec.record("verify_involution", ANCHOR_INVOLUTION, "all cylinders", res, e.exact_tol));

    let b = kernel_norm_bounds(t, e.theta).map_err(classify)?;
    let theta = format!("theta={}", num(e.theta));
    sec.records.push(rec.record("kernel_norm_bounds W", ANCHOR_KERNEL_BOUNDS, &theta, b.lhs_w, b.rhs_w));
    sec.records.push(rec.record("kernel_norm_bounds A*", ANCHOR_KERNEL_BOUNDS, &theta, b.lhs_a_star, b.rhs_a_star));

    let y = Point::constant(Side::Past, e.reference);
    let len = e.n_max.min(10);
    let mut worst = 0.0f64;
    for n in 1..=len {
        for idx in 0..e.d.pow(n as u32) {
            let w = kernel_duality::symbolic::word_of_index(e.d, n, idx);
            worst = worst.max(cocycle_iterate_check(t, &w, &e.base, &y).map_err(classify)?);
        }
    }
    let inputs = format!("words up to length {len}, x'={}, y'={}", point_label(&e.base), point_label(&y));
    sec.records.push(rec.record("cocycle_iterate_check", ANCHOR_COCYCLE, &inputs, worst, e.exact_tol));

    sec.tables = json!({
        "theta": num(e.theta),
        "z": point_label(&e.z),
        "A": function_json(t.a()),
        "A_star": function_json(t.a_star()),
        "W": kernel_table_json(t),
    });
    Ok(sec)
}

pub fn spectrum(ctx: &mut Context) -> Result<Section, RunError> {
    let mut sec = Section::new("spectrum");
    let rho = ctx.rho()?;
    let spec = ctx.spectrum()?.clone();
    let (e, t) = (&ctx.exp, &ctx.triple);
    let rec = ctx.recorder("spectrum");
    let star = spectrum_of(&TransferMatrix::new(t.a_star(), &e.nu, e.m).map_err(classify)?).map_err(classify)?;
    let threshold = rho.estimate() * e.theta;

    let w = t.w().real_sup_norm();
    for n in 1..=e.n_max {
        let gap = (rho.rho.values[n - 1].ln() - rho.rho_star.values[n - 1].ln()).abs();
        sec.records.push(rec.record(
            format!("log rho_n - log rho*_n at n={n}"),
            ANCHOR_GROWTH,
            &format!("n={n}"),
            gap,
            2.0 * w / n as f64,
        ));
    }

    let mut rows = Vec::new();
    for space in &spec.eigenspaces {
        let lambda = space.value.to_c64();
        let admissible = lambda.norm() > threshold;
        rows.push(json!({
            "value": cnum(lambda),
            "algebraic": space.algebraic,
            "geometric": space.geometric,
            "margin": num(lambda.norm() - threshold),
            "admissible": admissible,
        }));
        if !admissible {
            continue;
        }
        let label = format!("lambda=({}, {})", num(lambda.re), num(lambda.im));
        let dist = star.eigenvalues.iter().map(|z| (z - lambda).norm()).fold(f64::INFINITY, f64::min);
        let scale = spec.norm_inf.max(star.norm_inf);
        sec.records.push(rec.record(
            format!("dual spectrum contains {label}"),
            ANCHOR_SPECTRUM,
            &label,
            dist,
            e.limit_tol * scale,
        ));
        let mp = multiplicity_pair(t, &e.nu, lambda, e.m, rho.estimate()).map_err(classify)?;
        let check = format!("multiplicity_pair at {label}: dim E = {}, dim F = {}", mp.dim_e, mp.dim_f);
        sec.records.push(rec.record(check, ANCHOR_MULTIPLICITY, &label, mp.dim_e.abs_diff(mp.dim_f) as f64, 0.0));
    }
    let rank: usize = spec.eigenspaces.iter().filter(|s| s.value.norm() > 0.0).map(|s| s.algebraic).sum();
    sec.tables = json!({
        "matrix_depth": e.m,
        "norm_inf": num(spec.norm_inf),
        "rank": rank,
        "eigenvalues": rows,
        "dual_eigenvalues": star.eigenvalues.iter().map(|&z| cnum(z)).collect::<Vec<_>>(),
        "rho_limit": num(rho.estimate()),
        "threshold": num(threshold),
    });
    let trace = |name: &str, v: &[f64]| Trace {
        name: name.to_string(),
        rows: v
            .iter()
            .enumerate()
            .map(|(i, &r)| TraceRow { n: i + 1, value: [num(r), num(0.0)], bound: None })
            .collect(),
    };
    sec.traces.push(trace("rho", &rho.rho.values));
    sec.traces.push(trace("rho_star", &rho.rho_star.values));
    Ok(sec)
}

fn base_points(d: usize) -> Vec<Point> {
    vec![
        Point::constant(Side::Future, 0),
        Point::constant(Side::Future, d - 1),
        Point::new(Side::Future, vec![1], 0),
        Point::new(Side::Future, vec![0, 1], d - 1),
        Point::new(Side::Future, vec![d - 1, 0, 1], 1),
    ]
}

pub fn pair(ctx: &mut Context) -> Result<Section, RunError> {
    let mut sec = Section::new("pair");
    let space = ctx.selected()?;
    ctx.admissible(&space)?;
    let dist = ctx.approximant(&space)?;
    let (e, t) = (&ctx.exp, &ctx.triple);
    let rec = ctx.recorder("pair");
    let lambda = space.value;
    let psi = &space.vectors[0];
    let lam = format!("lambda=({}, {})", num(lambda.to_c64().re), num(lambda.to_c64().im));
    let n_max = e.n_max;
    let err = |x: Error| classify(x);

    // <D_n, e^{W(.|x')}> = psi(x') at every level
    let kernel = dist.kernel_at(&e.base).map_err(err)?;
    let target = psi.evaluate(&e.base).map_err(err)?;
    let levels = dist.convergence_trace(&kernel, n_max).map_err(err)?;
    let worst = levels.iter().map(|r| (r.value - target).norm()).fold(0.0, f64::max);
    let bound = e.preimage_tol * (1.0 + target.norm());
    sec.records.push(rec.record(format!("preimage identity n<={n_max}"), ANCHOR_PREIMAGE, &lam, worst, bound));

    for (label, phi) in &e.battery {
        let inputs = format!("{lam} {label}");
        let mut worst = 0.0f64;
        for n in 0..=n_max.saturating_sub(1).min(8) {
            worst = worst.max(dist.recurrence_residual(n, phi).map_err(err)?);
        }
        sec.records.push(rec.record(
            format!("recurrence_residual {label}"),
            ANCHOR_RECURRENCE,
            &inputs,
            worst,
            e.exact_tol,
        ));

        // consecutive differences against the certified rate
        let trace = dist.convergence_trace(phi, n_max + 1).map_err(err)?;
        let mut pick = (0.0f64, 0.0f64, f64::NEG_INFINITY);
        for n in dist.n0()..=n_max {
            let diff = (trace[n + 1].value - trace[n].value).norm();
            let b = dist.cauchy_bound(n, phi).map_err(err)?;
            let ratio = if b > 0.0 {
                diff / b
            } else if diff > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if ratio > pick.2 {
                pick = (diff, b, ratio);
            }
        }
        sec.records.push(rec.record(format!("level increments {label}"), ANCHOR_TAIL, &inputs, pick.0, pick.1));

        let lp = dist.limit_pairing(phi, e.limit_tol).map_err(err)?;
        let res = dist.eigendistribution_residual(lp.n_used, phi).map_err(err)?;
        let check = format!("eigendistribution_residual {label} at n={}", lp.n_used);
        sec.records.push(rec.record(check, ANCHOR_EIGENDISTRIBUTION, &inputs, res, e.limit_tol));

        if space.geometric == 1 {
            let m = e.m.max(phi.depth()).max(t.depth().saturating_sub(1)).max(1);
            let oracle = oracle_pairing(t, &e.nu, lambda, psi, m, phi).map_err(err)?;
            let check = format!("limit_pairing vs oracle {label}");
            sec.records.push(rec.record(check, ANCHOR_ORACLE, &inputs, (lp.value - oracle).norm(), e.limit_tol));
        }
        sec.traces.push(Trace {
            name: format!("pairing {label}"),
            rows: trace
                .iter()
                .take(n_max + 1)
                .map(|r| TraceRow { n: r.n, value: cdd(r.value), bound: r.bound.map(num) })
                .collect(),
        });
    }

    if let Some((label, phi)) = e.battery.first() {
        for z2 in base_points(e.d) {
            let mut pick = (0.0f64, 0.0f64, f64::NEG_INFINITY);
            for n in dist.n0()..=n_max {
                let (gap, b) = dist.base_independence_gap(n, phi, &e.base, &z2).map_err(err)?;
                let ratio = if b > 0.0 {
                    gap / b
                } else if gap > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                if ratio > pick.2 {
                    pick = (gap, b, ratio);
                }
            }
            let inputs = format!("{lam} {label} {} vs {}", point_label(&e.base), point_label(&z2));
            sec.records.push(rec.record(
                format!("base_independence_gap vs {}", point_label(&z2)),
                ANCHOR_BASE,
                &inputs,
                pick.0,
                pick.1,
            ));
        }
    }

    let grid = cylinder_grid(e.d, psi.depth().max(1));
    let mut worst = 0.0f64;
    for x in &grid {
        let v = dist.phi_w_limit(x, e.limit_tol).map_err(err)?;
        worst = worst.max((v.value - psi.evaluate(x).map_err(err)?).norm());
    }
    sec.records.push(rec.record("Phi_W reconstruction", ANCHOR_RECONSTRUCTION, &lam, worst, e.limit_tol));

    sec.traces.insert(
        0,
        Trace {
            name: "Phi_W at base".into(),
            rows: levels.iter().map(|r| TraceRow { n: r.n, value: cdd(r.value), bound: r.bound.map(num) }).collect(),
        },
    );
    sec.tables = json!({
        "lambda": cdd(lambda),
        "geometric": space.geometric,
        "psi": function_json(psi),
        "base": point_label(&e.base),
        "rho_estimate": num(dist.rho().estimate()),
        "epsilon": num(dist.epsilon()),
        "n0": dist.n0(),
        "rate": num(dist.rate()),
        "margin": num(dist.margin()),
    });
    Ok(sec)
}

pub fn koopman(ctx: &mut Context) -> Result<Section, RunError> {
    let mut sec = Section::new("koopman");
    let e = &ctx.exp;
    for (name, f) in [("A", &e.a), ("B", &e.b), ("Cstar", &e.c_star)] {
        if !f.is_real() {
            return Err(RunError::Config(format!(
                "realness precondition: potential {name} has a nonzero imaginary part; the RPF lift needs real potentials"
            )));
        }
    }
    let space = ctx.selected()?;
    ctx.admissible(&space)?;
    let options = ctx.options();
    let (e, t) = (&ctx.exp, &ctx.triple);
    let rec = ctx.recorder("koopman");
    let lambda = space.value.to_c64();
    let lam = format!("lambda=({}, {})", num(lambda.re), num(lambda.im));

    let lift = build_lift(t.a(), &e.b, t.a_star(), &e.c_star, &e.nu).map_err(classify)?;
    let future =
        |f: CylinderFunction| CylinderFunction::new(Side::Future, e.d, f.depth(), f.table().to_vec()).expect("sized");
    let g = future(test_function(e.d, 2, 7));
    let res = fundamental_identity_residual(t.a(), &e.nu, &e.b, &lift.f, &g).map_err(classify)?;
    sec.records.push(rec.record(
        "fundamental_identity_residual",
        ANCHOR_TRANSFER_KOOPMAN,
        "f = RPF(A+B), g seeded",
        res,
        e.exact_tol,
    ));

    let problem = KoopmanProblem {
        triple: Arc::clone(t),
        nu: e.nu.clone(),
        b: e.b.clone(),
        c_star: e.c_star.clone(),
        lambda,
        m: e.m,
        tol: e.limit_tol,
        base: e.base.clone(),
        battery: e.battery.iter().map(|(_, f)| f.clone()).collect(),
        grid: cylinder_grid(e.d, e.m.max(1)),
        options,
    };
    let report = verify_koopman_theorem(&problem).map_err(classify)?;
    for s in &report.stages {
        sec.records.push(rec.record(format!("stage {}", s.name), ANCHOR_KOOPMAN, &lam, s.residual, s.tol));
    }
    sec.tables = json!({
        "lambda": cdd(report.lambda),
        "alpha": num(report.alpha.to_f64()),
        "beta": num(report.beta.to_f64()),
        "koopman_eigenvalue": cdd(kernel_duality::Cdd::from_real(report.alpha) / report.lambda),
        "f": function_json(&lift.f),
        "g": function_json(&lift.g),
        "first_failure": report.first_failure().map(|s| s.name),
    });
    Ok(sec)
}
