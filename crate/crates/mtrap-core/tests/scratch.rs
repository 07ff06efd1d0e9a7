use mtrap_core::bonnet::{compare_invariants, reconstruct, SolverOptions};
use mtrap_core::canonical::{canonicalize, is_canonical, CanonicalGauge, QuadratureSpec};
use mtrap_core::framefield::geometric_functions;
use mtrap_core::meridian::{principal_patch, reference, MeridianConfig};
use mtrap_core::surface::Rect;

#[test]
fn scratch_extraction_point() {
    let cfg = MeridianConfig::<f64>::default();
    let r = reference(&cfg).unwrap();
    let patch = principal_patch(cfg, Rect::new(0.3, 2.0, -1.0, 0.0).unwrap()).unwrap();
    let (ub, vb) = (1.0, -0.4);
    let t = ub - vb;
    let gf = geometric_functions(&patch, ub, vb).unwrap();
    println!("nu={:e} lam_err={:e} mu_err={:e}", gf.nu, (gf.lambda - r.lambda(t)).abs(), (gf.mu - r.mu(t)).abs());
    println!("g1_err={:e} g2_err={:e} b1_err={:e} b2_err={:e}",
        (gf.gamma1 - r.gamma1(t)).abs(), (gf.gamma2 - r.gamma2(t)).abs(),
        (gf.beta1 - r.beta1(t)).abs(), (gf.beta2 - r.beta2(t)).abs());
    assert!(gf.nu.abs() < 1e-12);
    assert!((gf.lambda - r.lambda(t)).abs() < 1e-12);
    assert!((gf.mu - r.mu(t)).abs() < 1e-12);
    assert!((gf.beta1 - r.beta1(t)).abs() < 1e-8);
}

#[test]
fn scratch_gauge_functions() {
    let cfg = MeridianConfig::<f64>::default();
    let patch = principal_patch(cfg, Rect::new(1.0, 2.0, -1.0, 0.0).unwrap()).unwrap();
    let gauge = CanonicalGauge::natural(&patch, 1.0, 0.0).unwrap();
    let quad = QuadratureSpec::default();
    let rep = is_canonical(&patch, &gauge, &quad, 1e-5).unwrap();
    println!("sup|phi-1|={:e} sup|psi-1|={:e}", rep.sup_phi_dev, rep.sup_psi_dev);
    assert!(rep.canonical, "{rep:?}");

    let canon = canonicalize(&patch, &gauge, &quad).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..11 {
        let u = 1.0 + k as f64 * 0.1;
        worst = worst.max((canon.map.forward_u(u) - u).abs());
    }
    println!("identity map deviation: {worst:e}");
    assert!(worst < 1e-8);
}

#[test]
fn scratch_reconstruct_round_trip() {
    let cfg = MeridianConfig::<f64>::default();
    let r = reference(&cfg).unwrap();
    let input = r
        .canonical_triple([1.0, 2.0], [-0.5, 0.0], 129, 65)
        .unwrap();
    let opts = SolverOptions::default();
    let t0 = std::time::Instant::now();
    let result = reconstruct(&input, &opts).unwrap();
    println!("reconstruct took {:?}", t0.elapsed());
    println!("diagnostics: {:?}", result.diagnostics);
    let patch = principal_patch(cfg, Rect::new(1.0, 2.0, -0.5, 0.0).unwrap()).unwrap();
    let table = compare_invariants(&result, &patch).unwrap();
    println!("table: {:?}", table);
    assert!(table.max() < 1e-3, "{table:?}");
    assert!(result.diagnostics.compatibility_residual_1 < 1e-4);
    assert!(result.diagnostics.metric_drift < 1e-6);
}
