//! Acceptance criteria, one PASS/FAIL line each. Exits 1 if any fails.
//!
//! Random instances are drawn from fixed ChaCha8 seeds, so every line is
//! reproducible.

use std::f64::consts::LN_2;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use kernel_duality::{
    cocycle_iterate_check, cylinder_grid, fundamental_identity_residual, kernel_norm_bounds, multiplicity_pair,
    oracle_pairing, rho_sequence, sinai_pair, spectrum_of, verify_involution, verify_koopman_theorem, AprioriMeasure,
    Cdd, CylinderFunction, DistributionApproximant, DualTriple, Eigenspace, Execution, KoopmanProblem, PairingOptions,
    Point, RhoData, Side, TransferMatrix,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT_TOL: f64 = 1e-12;
const PREIMAGE_TOL: f64 = 1e-10;
const LIMIT_TOL: f64 = 1e-8;
const RHO_LIMIT_TOL: f64 = 1e-6;
const N_MAX: usize = 12;
const BUDGET: u64 = 1 << 24;

type Outcome = Result<String, String>;
type Approximants = [(usize, DistributionApproximant)];

fn function(rng: &mut ChaCha8Rng, side: Side, d: usize, depth: usize, complex: bool) -> CylinderFunction {
    let n = d.pow(depth as u32);
    let re: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let im: Vec<f64> = if complex { (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect() } else { Vec::new() };
    CylinderFunction::from_parts(side, d, depth, &re, &im).unwrap()
}

fn measure(rng: &mut ChaCha8Rng, d: usize) -> AprioriMeasure {
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    let mut w: Vec<f64> = w.iter().map(|x| x / s).collect();
    let head: f64 = w[..d - 1].iter().sum();
    w[d - 1] = 1.0 - head;
    AprioriMeasure::new(w).unwrap()
}

fn point(rng: &mut ChaCha8Rng, side: Side, d: usize) -> Point {
    let len = rng.random_range(0..4);
    Point::new(side, (0..len).map(|_| rng.random_range(0..d)).collect(), rng.random_range(0..d))
}

fn zero_future() -> Point {
    Point::constant(Side::Future, 0)
}

/// Random complex potential of depth `1..=3` on 2 or 3 symbols.
struct Instance {
    d: usize,
    nu: AprioriMeasure,
    triple: DualTriple,
}

fn instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = rng.random_range(2..=3);
            let k = rng.random_range(1..=3);
            let a = function(&mut rng, Side::Future, d, k, true);
            let z = point(&mut rng, Side::Future, d);
            Instance { d, nu: measure(&mut rng, d), triple: sinai_pair(&a, &z).unwrap() }
        })
        .collect()
}

fn log2() -> CylinderFunction {
    CylinderFunction::from_parts(Side::Future, 2, 2, &[0.0, 0.0, 0.0, LN_2], &[]).unwrap()
}

fn log2_triple() -> Arc<DualTriple> {
    Arc::new(sinai_pair(&log2(), &zero_future()).unwrap().with_theta(0.01).unwrap())
}

fn log2_eigenpairs() -> Vec<Eigenspace> {
    let spec = spectrum_of(&TransferMatrix::new(&log2(), &AprioriMeasure::uniform(2), 1).unwrap()).unwrap();
    spec.nonzero().cloned().collect()
}

fn battery(seed: u64, d: usize, count: usize) -> Vec<CylinderFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| function(&mut rng, Side::Past, d, 1 + i % 3, true)).collect()
}

fn fail_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1(inst: &[Instance]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut inv, mut coc) = (0.0f64, 0.0f64);
    for i in inst {
        inv = inv.max(verify_involution(&i.triple).map_err(|e| e.to_string())?);
        for n in 0..=10 {
            let w: Vec<usize> = (0..n).map(|_| rng.random_range(0..i.d)).collect();
            let x = point(&mut rng, Side::Future, i.d);
            let y = point(&mut rng, Side::Past, i.d);
            coc = coc.max(cocycle_iterate_check(&i.triple, &w, &x, &y).map_err(|e| e.to_string())?);
        }
    }
    fail_if(
        inv <= EXACT_TOL && coc <= EXACT_TOL,
        format!("{} instances, involution {inv:.2e}, cocycle n<=10 {coc:.2e}, tol {EXACT_TOL:.0e}", inst.len()),
    )
}

fn criterion_2(inst: &[Instance]) -> Outcome {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in inst {
        for theta in [0.25, 0.5, 0.75] {
            let b = kernel_norm_bounds(&i.triple, theta).map_err(|e| e.to_string())?;
            violations += usize::from(!b.hold());
            worst = worst.max(b.lhs_w - b.rhs_w).max(b.lhs_a_star - b.rhs_a_star);
        }
    }
    fail_if(
        violations == 0,
        format!("{} checks, {violations} violations, largest lhs-rhs {worst:.3e}, tol 0", 3 * inst.len()),
    )
}

fn criterion_3a(inst: &[Instance]) -> Outcome {
    let (mut excess, mut worst_ratio) = (f64::NEG_INFINITY, 0.0f64);
    for i in inst {
        let rho = RhoData::compute(&i.triple, &i.nu, N_MAX, BUDGET, Execution::Auto).map_err(|e| e.to_string())?;
        let w = i.triple.w().real_sup_norm();
        for n in 1..=N_MAX {
            let gap = (rho.rho.values[n - 1].ln() - rho.rho_star.values[n - 1].ln()).abs();
            let bound = 2.0 * w / n as f64;
            excess = excess.max(gap - bound);
            worst_ratio = worst_ratio.max(ratio(gap, bound));
        }
    }
    fail_if(
        excess <= EXACT_TOL,
        format!("{} instances, n<=12, worst gap/bound {worst_ratio:.3e}, largest excess {excess:.3e}, slack {EXACT_TOL:.0e}", inst.len()),
    )
}

fn criterion_3b() -> Outcome {
    let seq = rho_sequence(&log2(), &AprioriMeasure::uniform(2), N_MAX, BUDGET, Execution::Auto)
        .map_err(|e| e.to_string())?;
    let exact = (3.0 + 5f64.sqrt()) / 4.0;
    let rel = (seq.values[N_MAX - 1] - exact).abs() / exact;
    fail_if(
        rel <= RHO_LIMIT_TOL,
        format!(
            "log-2 rho_12 = {:.10}, RPF {exact:.10}, relative error {rel:.3e}, tol {RHO_LIMIT_TOL:.0e}",
            seq.values[N_MAX - 1]
        ),
    )
}

fn criterion_4() -> Outcome {
    let t = log2_triple();
    let nu = AprioriMeasure::uniform(2);
    let mut bases = cylinder_grid(2, 3);
    bases.push(Point::constant(Side::Future, 1));
    let mut worst = 0.0f64;
    for e in log2_eigenpairs() {
        let psi = &e.vectors[0];
        for base in &bases {
            let dist = DistributionApproximant::new(
                t.clone(),
                nu.clone(),
                psi.clone(),
                e.value,
                base.clone(),
                PairingOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            let target = psi.evaluate(base).unwrap();
            for n in 0..=N_MAX {
                let v = dist.phi_w_eval(n, base).map_err(|e| e.to_string())?;
                worst = worst.max((v - target).norm() / (1.0 + target.norm()));
            }
        }
    }
    fail_if(
        worst <= PREIMAGE_TOL,
        format!(
            "both log-2 eigenpairs, {} base points, n<=12, relative residual {worst:.3e}, tol {PREIMAGE_TOL:.0e}",
            bases.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = log2_triple();
    let nu = AprioriMeasure::uniform(2);
    let phis = battery(505, 2, 10);
    // first symbols differ, so even depth-1 eigenfunctions separate the bases
    let p = |prefix: &[usize], tail| Point::new(Side::Future, prefix.to_vec(), tail);
    let pairs = [
        (p(&[], 0), p(&[], 1)),
        (p(&[0, 1], 0), p(&[1, 0], 1)),
        (p(&[1], 0), p(&[0, 1, 1], 0)),
        (p(&[1, 1, 0], 1), p(&[0], 1)),
        (p(&[0, 0, 1], 1), p(&[1, 0, 0], 0)),
    ];
    let (mut inc_ratio, mut gap_ratio) = (0.0f64, 0.0f64);
    let mut checks = 0;
    for e in log2_eigenpairs() {
        let dist = DistributionApproximant::new(
            t.clone(),
            nu.clone(),
            e.vectors[0].clone(),
            e.value,
            zero_future(),
            PairingOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        for phi in &phis {
            let mut prev = dist.pair_dn(dist.n0(), phi).map_err(|e| e.to_string())?;
            for n in dist.n0()..=N_MAX {
                let next = dist.pair_dn(n + 1, phi).map_err(|e| e.to_string())?;
                let bound = dist.cauchy_bound(n, phi).map_err(|e| e.to_string())?;
                inc_ratio = inc_ratio.max(ratio((next - prev).norm(), bound));
                prev = next;
                checks += 1;
            }
            for (z1, z2) in &pairs {
                for n in dist.n0()..=N_MAX {
                    let (gap, bound) = dist.base_independence_gap(n, phi, z1, z2).map_err(|e| e.to_string())?;
                    gap_ratio = gap_ratio.max(ratio(gap, bound));
                    checks += 1;
                }
            }
        }
    }
    fail_if(
        inc_ratio <= 1.0 && gap_ratio <= 1.0,
        format!("both log-2 eigenvalues, 10 test functions, 5 base pairs, {checks} checks, worst observed/bound: increments {inc_ratio:.3e}, gaps {gap_ratio:.3e}"),
    )
}

fn ratio(observed: f64, bound: f64) -> f64 {
    if observed == 0.0 {
        0.0
    } else {
        observed / bound
    }
}

/// Random depth-2 complex instance with every nonzero eigenvalue admissible:
/// `theta = 0.01 min|lambda| / rho`, rejecting `min|lambda| / rho < 0.05`.
struct Admissible {
    triple: Arc<DualTriple>,
    nu: AprioriMeasure,
    rho: f64,
    spaces: Vec<Eigenspace>,
}

fn admissible_instances(seed: u64, count: usize) -> Vec<Admissible> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let d = rng.random_range(2..=3);
        let a = function(&mut rng, Side::Future, d, 2, true);
        let nu = measure(&mut rng, d);
        let spec = spectrum_of(&TransferMatrix::new(&a, &nu, 1).unwrap()).unwrap();
        let spaces: Vec<Eigenspace> = spec.nonzero().cloned().collect();
        let t = sinai_pair(&a, &zero_future()).unwrap();
        let rho = RhoData::compute(&t, &nu, N_MAX, BUDGET, Execution::Auto).unwrap().estimate();
        let min = spaces.iter().map(|e| e.value.norm()).fold(f64::INFINITY, f64::min);
        if spaces.is_empty() || min / rho < 0.05 {
            continue;
        }
        let triple = Arc::new(t.with_theta(0.01 * min / rho).unwrap());
        out.push(Admissible { triple, nu, rho, spaces });
    }
    out
}

/// `(label, approximant)` for every simple eigenvalue of the log-2 example
/// and of the random instances.
fn simple_approximants(random: &[Admissible]) -> Result<Vec<(usize, DistributionApproximant)>, String> {
    let mut out = Vec::new();
    let t = log2_triple();
    for e in log2_eigenpairs() {
        let dist = DistributionApproximant::new(
            t.clone(),
            AprioriMeasure::uniform(2),
            e.vectors[0].clone(),
            e.value,
            zero_future(),
            PairingOptions::default(),
        );
        out.push((usize::MAX, dist.map_err(|e| e.to_string())?));
    }
    for (i, inst) in random.iter().enumerate() {
        for e in inst.spaces.iter().filter(|e| e.geometric == 1) {
            let dist = DistributionApproximant::new(
                inst.triple.clone(),
                inst.nu.clone(),
                e.vectors[0].clone(),
                e.value,
                zero_future(),
                PairingOptions::default(),
            );
            out.push((i, dist.map_err(|err| format!("instance {i}, lambda {}: {err}", e.value.to_c64()))?));
        }
    }
    Ok(out)
}

fn criterion_6(dists: &Approximants) -> Outcome {
    let mut worst = 0.0f64;
    for (_, dist) in dists {
        for phi in battery(606, dist.triple().d(), 3) {
            for n in 0..=8 {
                worst = worst.max(dist.recurrence_residual(n, &phi).map_err(|e| e.to_string())?);
            }
        }
    }
    fail_if(
        worst <= EXACT_TOL,
        format!("{} eigenpairs, 3 test functions, n<=8, residual {worst:.3e}, tol {EXACT_TOL:.0e}", dists.len()),
    )
}

fn criterion_7(dists: &Approximants) -> Outcome {
    let mut worst = 0.0f64;
    for (_, dist) in dists {
        for phi in battery(707, dist.triple().d(), 3) {
            let lp = dist.limit_pairing(&phi, LIMIT_TOL).map_err(|e| e.to_string())?;
            worst = worst.max(dist.eigendistribution_residual(lp.n_used, &phi).map_err(|e| e.to_string())?);
        }
    }
    fail_if(
        worst <= LIMIT_TOL,
        format!("{} eigenpairs (log-2 and 20 random), residual {worst:.3e}, tol {LIMIT_TOL:.0e}", dists.len()),
    )
}

fn criterion_8(dists: &Approximants, random: &[Admissible]) -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (i, dist) in dists.iter().filter(|(i, _)| *i != usize::MAX) {
        let inst = &random[*i];
        for phi in battery(808, dist.triple().d(), 3) {
            let lp = dist.limit_pairing(&phi, LIMIT_TOL).map_err(|e| e.to_string())?;
            let m = phi.depth().max(1);
            let oracle = oracle_pairing(&inst.triple, &inst.nu, dist.lambda(), dist.psi(), m, &phi)
                .map_err(|e| e.to_string())?;
            worst = worst.max((lp.value - oracle).norm());
        }
        count += 1;
    }
    fail_if(
        worst <= LIMIT_TOL,
        format!("{count} simple eigenvalues of 20 random instances, |limit - oracle| {worst:.3e}, tol {LIMIT_TOL:.0e}"),
    )
}

fn criterion_9(random: &[Admissible]) -> Outcome {
    let mut mismatches = Vec::new();
    let mut count = 0;
    for (i, inst) in random.iter().enumerate() {
        for e in &inst.spaces {
            let mp =
                multiplicity_pair(&inst.triple, &inst.nu, e.value.to_c64(), 1, inst.rho).map_err(|e| e.to_string())?;
            count += 1;
            if mp.dim_e != mp.dim_f {
                mismatches.push(format!("instance {i}: {} vs {}", mp.dim_e, mp.dim_f));
            }
        }
    }
    // circulant transfer matrix with a double eigenvalue (e - 1)/3
    let a = CylinderFunction::from_fn(Side::Future, 3, 2, |c| Cdd::from_f64(if c[0] == c[1] { 1.0 } else { 0.0 }));
    let nu = AprioriMeasure::uniform(3);
    let t = sinai_pair(&a, &zero_future()).unwrap().with_theta(0.1).unwrap();
    let e = std::f64::consts::E;
    let rho = (e + 2.0) / 3.0;
    let double = multiplicity_pair(&t, &nu, Complex64::new((e - 1.0) / 3.0, 0.0), 2, rho).map_err(|e| e.to_string())?;
    let leading = multiplicity_pair(&t, &nu, Complex64::new(rho, 0.0), 2, rho).map_err(|e| e.to_string())?;
    if (double.dim_e, double.dim_f) != (2, 2) || leading.dim_e != leading.dim_f {
        mismatches.push(format!("double eigenvalue instance: {double:?}, {leading:?}"));
    }
    fail_if(
        mismatches.is_empty(),
        format!("{count} admissible eigenvalues plus a double eigenvalue (dims 2 = 2), mismatches {mismatches:?}"),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(2..=3);
        let mut f = || {
            let k = rng.random_range(1..=3);
            function(&mut rng, Side::Future, d, k, true)
        };
        let (a, b, ff, g) = (f(), f(), f(), f());
        let nu = measure(&mut rng, d);
        worst = worst.max(fundamental_identity_residual(&a, &nu, &b, &ff, &g).map_err(|e| e.to_string())?);
    }
    fail_if(worst <= EXACT_TOL, format!("100 instances, residual {worst:.3e}, tol {EXACT_TOL:.0e}"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let zero =
        (CylinderFunction::constant(Side::Future, 2, Cdd::ZERO), CylinderFunction::constant(Side::Past, 2, Cdd::ZERO));
    let random = (function(&mut rng, Side::Future, 2, 2, false), function(&mut rng, Side::Past, 2, 2, false));
    let mut lines = Vec::new();
    let mut all = true;
    for (label, (b, c_star)) in [("(0,0)", &zero), ("random", &random)] {
        for e in log2_eigenpairs() {
            let p = KoopmanProblem {
                triple: log2_triple(),
                nu: AprioriMeasure::uniform(2),
                b: b.clone(),
                c_star: c_star.clone(),
                lambda: e.value.to_c64(),
                m: 1,
                tol: LIMIT_TOL,
                base: zero_future(),
                battery: battery(1112, 2, 3),
                grid: cylinder_grid(2, 2),
                options: PairingOptions::default(),
            };
            let r = verify_koopman_theorem(&p).map_err(|e| e.to_string())?;
            all &= r.pass();
            let status = match r.first_failure() {
                None => "pass".to_string(),
                Some(s) => format!("fails at {} ({:.3e} > {:.0e})", s.name, s.residual, s.tol),
            };
            lines.push(format!("{label} lambda={:.6}: {status}", e.value.re.to_f64()));
        }
    }
    fail_if(all, lines.join("; "))
}

fn criterion_12() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/log2.json");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_kduality"))
            .args(["verify", "--config", config.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    fail_if(
        a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty(),
        format!("verify on log2.json twice, {} bytes, identical {}", a.stdout.len(), a.stdout == b.stdout),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let inst = instances(1, 100);
    let random = admissible_instances(7, 20);
    let dists = simple_approximants(&random);
    let needs = |f: &dyn Fn(&Approximants) -> Outcome| match &dists {
        Ok(d) => f(d),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1", criterion_1(&inst)),
        ("2", criterion_2(&inst)),
        ("3a", criterion_3a(&inst)),
        ("3b", criterion_3b()),
        ("4", criterion_4()),
        ("5", criterion_5()),
        ("6", needs(&criterion_6)),
        ("7", needs(&|d| criterion_7(d))),
        ("8", needs(&|d| criterion_8(d, &random))),
        ("9", criterion_9(&random)),
        ("10", criterion_10()),
        ("11", criterion_11()),
        ("12", criterion_12()),
    ];
    let mut failed = 0;
    for (id, r) in &results {
        match r {
            Ok(detail) => println!("criterion {id:>2}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2}: FAIL  {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
