//! Worked examples with values derived by hand or by an independent oracle.

use std::f64::consts::LN_2;
use std::sync::Arc;

use kernel_duality::{
    cocycle_iterate_check, multiplicity_pair, oracle_pairing, rho_sequence, sinai_pair, spectrum_of, verify_involution,
    verify_koopman_theorem, AprioriMeasure, Cdd, CylinderFunction, DistributionApproximant, Error, Execution,
    KoopmanProblem, PairingOptions, Point, Side, TransferMatrix,
};
use num_complex::Complex64;

fn log2() -> CylinderFunction {
    CylinderFunction::from_parts(Side::Future, 2, 2, &[0.0, 0.0, 0.0, LN_2], &[]).unwrap()
}

fn zero_future() -> Point {
    Point::constant(Side::Future, 0)
}

fn log2_triple(theta: f64) -> Arc<kernel_duality::DualTriple> {
    Arc::new(sinai_pair(&log2(), &zero_future()).unwrap().with_theta(theta).unwrap())
}

fn re(v: &[Cdd]) -> Vec<f64> {
    v.iter().map(|z| z.re.to_f64()).collect()
}

#[test]
fn log2_dual_and_kernel() {
    let t = log2_triple(0.5);
    assert_eq!(re(t.a_star().table()), vec![0.0, 0.0, 0.0, LN_2]);
    assert_eq!(re(t.w().table()), vec![0.0, 0.0, 0.0, LN_2]);
    assert_eq!(verify_involution(&t).unwrap(), 0.0);
    let x = Point::new(Side::Future, vec![1, 0], 1);
    let y = Point::new(Side::Past, vec![0], 1);
    for w in [vec![1, 1, 0, 1], vec![0; 7], vec![1; 10]] {
        assert!(cocycle_iterate_check(&t, &w, &x, &y).unwrap() < 1e-15);
    }
}

#[test]
fn log2_spectrum_is_golden() {
    let nu = AprioriMeasure::uniform(2);
    let s5 = 5f64.sqrt();
    for m in 1..=3 {
        let spec = spectrum_of(&TransferMatrix::new(&log2(), &nu, m).unwrap()).unwrap();
        let nonzero: Vec<_> = spec.nonzero().collect();
        assert_eq!(nonzero.len(), 2, "m={m}");
        assert!((nonzero[0].value.to_c64() - Complex64::new((3.0 + s5) / 4.0, 0.0)).norm() < 1e-14);
        assert!((nonzero[1].value.to_c64() - Complex64::new((3.0 - s5) / 4.0, 0.0)).norm() < 1e-14);
        assert_eq!(spec.eigenvalues.len(), 1 << m);
    }
}

#[test]
fn zero_potential_spectrum_and_rho() {
    let nu = AprioriMeasure::uniform(3);
    let zero = CylinderFunction::constant(Side::Future, 3, Cdd::ZERO);
    let spec = spectrum_of(&TransferMatrix::new(&zero, &nu, 1).unwrap()).unwrap();
    let nonzero: Vec<_> = spec.nonzero().collect();
    assert_eq!(nonzero.len(), 1);
    assert!((nonzero[0].value.to_c64().re - 1.0).abs() < 1e-15);
    let rho = rho_sequence(&zero, &nu, 8, 1 << 20, Execution::Auto).unwrap();
    assert!(rho.values.iter().all(|&r| (r - 1.0).abs() < 1e-14));
    assert!((rho.limit - 1.0).abs() < 1e-15);
}

#[test]
fn depth_one_spectrum_has_rank_one() {
    let nu = AprioriMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
    let a = CylinderFunction::from_parts(Side::Future, 3, 1, &[0.4, -0.2, 0.1], &[0.3, 0.0, -0.5]).unwrap();
    let spec = spectrum_of(&TransferMatrix::new(&a, &nu, 1).unwrap()).unwrap();
    let nonzero: Vec<_> = spec.nonzero().collect();
    assert_eq!(nonzero.len(), 1);
    let expect: Complex64 = (0..3).map(|j| nu.weight(j) * a.table()[j].to_c64().exp()).sum();
    assert!((nonzero[0].value.to_c64() - expect).norm() < 1e-15);
}

/// `rho_n^n = max_x' (M^n 1)(x')` with `M` the transfer matrix of `Re A`.
#[test]
fn rho_matches_matrix_powers() {
    let nu = AprioriMeasure::new(vec![0.3, 0.7]).unwrap();
    let a = CylinderFunction::from_parts(Side::Future, 2, 3, &[0.1, -0.4, 0.9, 0.0, -0.7, 0.3, 0.5, -0.2], &[0.2; 8])
        .unwrap();
    let rho = rho_sequence(&a, &nu, 10, 1 << 20, Execution::Auto).unwrap();
    let tm = TransferMatrix::new(&a.real_part(), &nu, 2).unwrap();
    let mut v = vec![Cdd::ONE; tm.size()];
    for n in 1..=10 {
        v = tm.apply(&v);
        let top = v.iter().map(|z| z.re.to_f64()).fold(0.0, f64::max);
        assert!((rho.values[n - 1] - top.powf(1.0 / n as f64)).abs() < 1e-13, "n={n}");
    }
}

#[test]
fn log2_pairings_match_left_eigenvector() {
    let t = log2_triple(0.01);
    let nu = AprioriMeasure::uniform(2);
    let spec = spectrum_of(&TransferMatrix::new(t.a(), &nu, 1).unwrap()).unwrap();
    let phi = CylinderFunction::from_parts(Side::Past, 2, 2, &[0.3, -1.0, 0.25, 0.8], &[0.0, 0.1, 0.0, -0.4]).unwrap();
    for e in spec.nonzero() {
        let psi = e.vectors[0].clone();
        let dist = DistributionApproximant::new(
            t.clone(),
            nu.clone(),
            psi.clone(),
            e.value,
            zero_future(),
            PairingOptions::default(),
        )
        .unwrap();
        let lim = dist.limit_pairing(&phi, 1e-10).unwrap();
        let oracle = oracle_pairing(&t, &nu, e.value, &psi, 2, &phi).unwrap();
        assert!((lim.value - oracle).norm() < 1e-10, "{:?} vs {:?}", lim.value, oracle);
        assert!(dist.eigendistribution_residual(lim.n_used, &phi).unwrap() < 1e-10);
    }
}

/// Past the depth of `e^{-W(.|x')} phi` the levels agree up to rounding,
/// so a large `theta` still certifies the limit without deep word sums.
#[test]
fn pairings_stabilize_at_the_weighted_depth() {
    let t = log2_triple(0.5);
    let nu = AprioriMeasure::uniform(2);
    let spec = spectrum_of(&TransferMatrix::new(t.a(), &nu, 1).unwrap()).unwrap();
    let e = spec.nonzero().next().unwrap();
    let psi = e.vectors[0].clone();
    let dist = DistributionApproximant::new(
        t.clone(),
        nu.clone(),
        psi.clone(),
        e.value,
        zero_future(),
        PairingOptions::default(),
    )
    .unwrap();
    let phi =
        CylinderFunction::from_parts(Side::Past, 2, 3, &[0.3, -1.0, 0.25, 0.8, 0.1, 0.0, -0.6, 0.9], &[]).unwrap();
    let n_stab = dist.stabilization_level(&phi).unwrap();
    assert_eq!(n_stab, 3);
    let at = dist.pair_dn(n_stab, &phi).unwrap();
    for n in n_stab + 1..n_stab + 8 {
        assert!((dist.pair_dn(n, &phi).unwrap() - at).norm() <= dist.rounding_allowance(n, &phi));
    }
    let lim = dist.limit_pairing(&phi, 1e-12).unwrap();
    assert!(lim.n_used <= n_stab);
    let oracle = oracle_pairing(&t, &nu, e.value, &psi, 3, &phi).unwrap();
    assert!((lim.value - oracle).norm() < 1e-10);
}

#[test]
fn sub_leading_eigenvalue_is_refused_at_large_theta() {
    let t = log2_triple(0.5);
    let nu = AprioriMeasure::uniform(2);
    let spec = spectrum_of(&TransferMatrix::new(t.a(), &nu, 1).unwrap()).unwrap();
    let e = spec.nonzero().nth(1).unwrap();
    let r =
        DistributionApproximant::new(t, nu, e.vectors[0].clone(), e.value, zero_future(), PairingOptions::default());
    assert!(matches!(r, Err(Error::OutsideRegime { .. })));
}

/// Uniform weights on three symbols with `A(x1, x2) = g(x2 - x1 mod 3)`,
/// `g = (1, 0, 0)`: the transfer matrix is circulant with a double
/// eigenvalue `(e - 1)/3` next to `(e + 2)/3`.
#[test]
fn constructed_double_eigenvalue() {
    let a = CylinderFunction::from_fn(Side::Future, 3, 2, |c| {
        Cdd::from_f64(if (c[1] + 3 - c[0]) % 3 == 0 { 1.0 } else { 0.0 })
    });
    let nu = AprioriMeasure::uniform(3);
    let t = sinai_pair(&a, &zero_future()).unwrap().with_theta(0.1).unwrap();
    let e = std::f64::consts::E;
    let spec = spectrum_of(&TransferMatrix::new(&a, &nu, 1).unwrap()).unwrap();
    let double = spec.nearest(Complex64::new((e - 1.0) / 3.0, 0.0), 1e-10).unwrap();
    assert_eq!((double.algebraic, double.geometric), (2, 2));
    let rho = (e + 2.0) / 3.0;
    for lambda in [(e - 1.0) / 3.0, rho] {
        let mp = multiplicity_pair(&t, &nu, Complex64::new(lambda, 0.0), 2, rho).unwrap();
        assert_eq!(mp.dim_e, mp.dim_f);
    }
    let mp = multiplicity_pair(&t, &nu, Complex64::new((e - 1.0) / 3.0, 0.0), 2, rho).unwrap();
    assert_eq!(mp.dim_e, 2);
}

fn log2_koopman(lambda: f64) -> KoopmanProblem {
    KoopmanProblem {
        triple: log2_triple(0.01),
        nu: AprioriMeasure::uniform(2),
        b: CylinderFunction::constant(Side::Future, 2, Cdd::ZERO),
        c_star: CylinderFunction::constant(Side::Past, 2, Cdd::ZERO),
        lambda: Complex64::new(lambda, 0.0),
        m: 1,
        tol: 1e-8,
        base: zero_future(),
        battery: vec![CylinderFunction::from_parts(Side::Past, 2, 2, &[1.0, 0.5, -0.3, 0.2], &[]).unwrap()],
        grid: kernel_duality::cylinder_grid(2, 2),
        options: PairingOptions::default(),
    }
}

#[test]
fn koopman_chain_on_log2_leading() {
    let s5 = 5f64.sqrt();
    let r = verify_koopman_theorem(&log2_koopman((3.0 + s5) / 4.0)).unwrap();
    assert!(r.pass(), "{:?}", r.first_failure());
    assert!((r.alpha.to_f64() - (3.0 + s5) / 4.0).abs() < 1e-15);
    assert_eq!(r.beta.to_f64(), r.alpha.to_f64());
}

/// `psi = h/f` at the sub-leading eigenvalue is not a Koopman eigenfunction:
/// a bounded solution of `psi o sigma = mu psi` with `|mu| != 1` vanishes.
/// The distribution-side stages still hold.
#[test]
fn koopman_chain_on_log2_sub_leading() {
    let r = verify_koopman_theorem(&log2_koopman((3.0 - 5f64.sqrt()) / 4.0)).unwrap();
    assert_eq!(r.first_failure().unwrap().name, "koopman-eigenfunction");
    for s in &r.stages {
        let expect_pass = !matches!(s.name, "koopman-eigenfunction" | "koopman-eigenspace-dimension");
        assert_eq!(s.pass, expect_pass, "{s:?}");
    }
}

#[test]
fn complex_potential_is_rejected_by_koopman_chain() {
    let t = Arc::new(
        sinai_pair(
            &CylinderFunction::from_parts(Side::Future, 2, 1, &[0.1, 0.2], &[0.3, 0.0]).unwrap(),
            &zero_future(),
        )
        .unwrap()
        .with_theta(0.01)
        .unwrap(),
    );
    let p = KoopmanProblem {
        triple: t,
        nu: AprioriMeasure::uniform(2),
        b: CylinderFunction::constant(Side::Future, 2, Cdd::ZERO),
        c_star: CylinderFunction::constant(Side::Past, 2, Cdd::ZERO),
        lambda: Complex64::new(1.0, 0.0),
        m: 1,
        tol: 1e-8,
        base: zero_future(),
        battery: vec![],
        grid: vec![],
        options: PairingOptions::default(),
    };
    let r = verify_koopman_theorem(&p);
    assert!(matches!(r, Err(Error::NonReal(_)) | Err(Error::NoSuchEigenvalue(_))), "{r:?}");
}
