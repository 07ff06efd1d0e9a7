//! Canonical principal parameters: the four coefficient functions of the
//! metric system, the gauge functions `phi(u)`, `psi(v)`, construction and
//! verification of the canonical reparametrization, and the specialization to
//! parallel mean curvature vector data.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::framefield::{extract_fields, geometric_functions, GeometricFieldGrid};
use crate::numerics::{cumint4, interp_cubic, Mat, MonotoneCubic};
use crate::scalar::Real;
use crate::surface::{first_form, GridSpec, Rect, SurfaceJet, SurfacePatch};

/// Default threshold on `|4 nu^2 + 4 lambda^2 - 1|` below which the surface
/// counts as degenerate type.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Invariant values and their plain coordinate partials at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantPoint<R> {
    pub nu: R,
    pub lambda: R,
    pub mu: R,
    pub nu_u: R,
    pub nu_v: R,
    pub lambda_u: R,
    pub lambda_v: R,
    pub mu_u: R,
    pub mu_v: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiQuadruple<R> {
    pub phi1: R,
    pub phi2: R,
    pub phi3: R,
    pub phi4: R,
}

/// General-type margin `|4 nu^2 + 4 lambda^2 - 1|`.
pub fn general_type_margin<R: Real>(nu: R, lambda: R) -> R {
    let four = R::of(4.0);
    (four * nu * nu + four * lambda * lambda - R::one()).abs()
}

/// The four coefficient functions of the metric system, from invariant values
/// and their coordinate partials.
pub fn phi_quadruple<R: Real>(p: &InvariantPoint<R>, tol: R) -> Result<PhiQuadruple<R>> {
    let margin = general_type_margin(p.nu, p.lambda);
    if margin < tol || p.mu == R::zero() {
        return Err(GeomError::DegenerateType {
            margin: margin.to_f64_lossy(),
        });
    }
    let two = R::of(2.0);
    let four = R::of(4.0);
    let one = R::one();
    let (nu, lam, mu) = (p.nu, p.lambda, p.mu);
    let d = two * mu * (four * nu * nu + four * lam * lam - one);
    let sq = lam * lam + nu * nu;
    // (lambda^2 + nu^2 -+ nu) partials
    let qv_minus = two * lam * p.lambda_v + two * nu * p.nu_v - p.nu_v;
    let qu_plus = two * lam * p.lambda_u + two * nu * p.nu_u + p.nu_u;
    let phi1 = -(mu * qv_minus + (two * sq + nu - one) * p.mu_v) / d;
    let phi2 = (two * mu * (p.lambda_u * nu - lam * p.nu_u) + lam * p.mu_u - p.lambda_u * mu) / d;
    let phi3 = (two * mu * (lam * p.nu_v - p.lambda_v * nu) + lam * p.mu_v - p.lambda_v * mu) / d;
    let phi4 = -(mu * qu_plus + (two * sq - nu - one) * p.mu_u) / d;
    Ok(PhiQuadruple {
        phi1,
        phi2,
        phi3,
        phi4,
    })
}

/// Coefficient grids from sampled invariants, with 4th-order grid partials.
/// Errors if any node is of degenerate type.
pub fn phi_fields<R: Real>(
    nu: &Mat<R>,
    lambda: &Mat<R>,
    mu: &Mat<R>,
    hu: R,
    hv: R,
    tol: R,
) -> Result<[Mat<R>; 4]> {
    let nu_u = nu.d_du(hu);
    let nu_v = nu.d_dv(hv);
    let lam_u = lambda.d_du(hu);
    let lam_v = lambda.d_dv(hv);
    let mu_u = mu.d_du(hu);
    let mu_v = mu.d_dv(hv);
    let (n_u, n_v) = (nu.nu(), nu.nv());
    let mut out = [
        Mat::zeros(n_u, n_v),
        Mat::zeros(n_u, n_v),
        Mat::zeros(n_u, n_v),
        Mat::zeros(n_u, n_v),
    ];
    for i in 0..n_u {
        for j in 0..n_v {
            let p = InvariantPoint {
                nu: nu.at(i, j),
                lambda: lambda.at(i, j),
                mu: mu.at(i, j),
                nu_u: nu_u.at(i, j),
                nu_v: nu_v.at(i, j),
                lambda_u: lam_u.at(i, j),
                lambda_v: lam_v.at(i, j),
                mu_u: mu_u.at(i, j),
                mu_v: mu_v.at(i, j),
            };
            let q = phi_quadruple(&p, tol)?;
            out[0].set(i, j, q.phi1);
            out[1].set(i, j, q.phi2);
            out[2].set(i, j, q.phi3);
            out[3].set(i, j, q.phi4);
        }
    }
    Ok(out)
}

/// Invariants and probe-step partials at a single point of a patch.
pub fn invariant_point_at<R: Real>(
    patch: &SurfacePatch<R>,
    u: R,
    v: R,
) -> Result<InvariantPoint<R>> {
    let bounds = patch.eval_bounds();
    let d = R::of(1e-5) * R::one().max(bounds.diagonal());
    let at = |uu: R, vv: R| geometric_functions(patch, uu, vv);
    let g0 = at(u, v)?;
    let two = R::of(2.0);
    // central differences, shifted inward at the boundary
    let ud = if u - d < bounds.u_min {
        (u, u + two * d)
    } else if u + d > bounds.u_max {
        (u - two * d, u)
    } else {
        (u - d, u + d)
    };
    let vd = if v - d < bounds.v_min {
        (v, v + two * d)
    } else if v + d > bounds.v_max {
        (v - two * d, v)
    } else {
        (v - d, v + d)
    };
    let gu0 = at(ud.0, v)?;
    let gu1 = at(ud.1, v)?;
    let gv0 = at(u, vd.0)?;
    let gv1 = at(u, vd.1)?;
    let du = ud.1 - ud.0;
    let dv = vd.1 - vd.0;
    Ok(InvariantPoint {
        nu: g0.nu,
        lambda: g0.lambda,
        mu: g0.mu,
        nu_u: (gu1.nu - gu0.nu) / du,
        nu_v: (gv1.nu - gv0.nu) / dv,
        lambda_u: (gu1.lambda - gu0.lambda) / du,
        lambda_v: (gv1.lambda - gv0.lambda) / dv,
        mu_u: (gu1.mu - gu0.mu) / du,
        mu_v: (gv1.mu - gv0.mu) / dv,
    })
}

/// The two line integrands of the gauge construction at a point:
/// `a = phi1 + phi2 sqrt(G/E)` (equals `(ln sqrtE)_v`) and
/// `b = phi3 sqrt(E/G) + phi4` (equals `(ln sqrtG)_u`).
pub fn gauge_integrands<R: Real>(patch: &SurfacePatch<R>, u: R, v: R) -> Result<(R, R)> {
    let p = invariant_point_at(patch, u, v)?;
    let q = phi_quadruple(&p, R::of(DEGENERATE_TOL))?;
    let jet = patch.jet(u, v)?;
    let ff = first_form(&jet)?;
    let ratio = (ff.g / ff.e).sqrt();
    Ok((q.phi1 + q.phi2 * ratio, q.phi3 / ratio + q.phi4))
}

/// Base point and gauge constants of the canonical construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalGauge<R> {
    pub u0: R,
    pub v0: R,
    pub c1: R,
    pub c2: R,
}

impl<R: Real> CanonicalGauge<R> {
    pub fn new(u0: R, v0: R, c1: R, c2: R) -> Self {
        Self { u0, v0, c1, c2 }
    }

    /// Constants that normalize the gauge functions to 1 at the base point:
    /// `c1 = -ln sqrtE(u0,v0)`, `c2 = -ln sqrtG(u0,v0)`.
    pub fn natural(patch: &SurfacePatch<R>, u0: R, v0: R) -> Result<Self> {
        let ff = first_form(&patch.jet(u0, v0)?)?;
        Ok(Self {
            u0,
            v0,
            c1: -ff.e.sqrt().ln(),
            c2: -ff.g.sqrt().ln(),
        })
    }

    /// The constant `c = e^{c2 - c1} = sqrt(E/G)(u, v0)` of the initial data.
    pub fn c(&self) -> R {
        (self.c2 - self.c1).exp()
    }
}

/// Quadrature resolution for the gauge construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec<R> {
    /// Nodes per grid line (composite rule of 4th order).
    pub nodes: usize,
    /// Number of cross-parameter lines used to certify one-variable behavior.
    pub check_lines: usize,
    /// Certification tolerance, relative to `max(1, |phi|)`.
    pub certify_tol: R,
}

impl<R: Real> Default for QuadratureSpec<R> {
    fn default() -> Self {
        Self {
            nodes: 129,
            check_lines: 3,
            certify_tol: R::of(1e-4),
        }
    }
}

/// Sampled gauge functions with derivatives, certified one-variable.
#[derive(Debug, Clone)]
pub struct GaugeFunctions<R> {
    pub u_grid: Vec<R>,
    pub phi: Vec<R>,
    pub phi_deriv: Vec<R>,
    pub v_grid: Vec<R>,
    pub psi: Vec<R>,
    pub psi_deriv: Vec<R>,
    /// Largest cross-parameter variation seen during certification.
    pub variation: R,
}

struct GaugeGrids<R> {
    us: Vec<R>,
    vs: Vec<R>,
    sqrt_e: Mat<R>,
    sqrt_g: Mat<R>,
    a: Mat<R>,
    b: Mat<R>,
}

fn gauge_grids<R: Real>(patch: &SurfacePatch<R>, nodes: usize) -> Result<GaugeGrids<R>> {
    let fields = extract_fields(patch, GridSpec::new(nodes, nodes))?;
    let (hu, hv) = fields.spacing();
    let phis = phi_fields(
        &fields.nu,
        &fields.lambda,
        &fields.mu,
        hu,
        hv,
        R::of(DEGENERATE_TOL),
    )?;
    let sqrt_e = fields.e.map(|x| x.sqrt());
    let sqrt_g = fields.g.map(|x| x.sqrt());
    let ratio = sqrt_g.zip(&sqrt_e, |g, e| g / e);
    let a = phis[0].zip(&phis[1].zip(&ratio, |p, r| p * r), |x, y| x + y);
    let b = phis[3].zip(&phis[2].zip(&ratio, |p, r| p / r), |x, y| x + y);
    Ok(GaugeGrids {
        us: fields.us,
        vs: fields.vs,
        sqrt_e,
        sqrt_g,
        a,
        b,
    })
}

fn frac_index<R: Real>(grid: &[R], x: R) -> R {
    (x - grid[0]) / (grid[1] - grid[0])
}

/// Construct `phi(u)` and `psi(v)` by nested line quadrature and certify that
/// they depend on one parameter only.
pub fn varphi_psi<R: Real>(
    patch: &SurfacePatch<R>,
    gauge: &CanonicalGauge<R>,
    quad: &QuadratureSpec<R>,
) -> Result<GaugeFunctions<R>> {
    let bounds = patch.eval_bounds();
    if !bounds.contains(gauge.u0, gauge.v0) {
        return Err(GeomError::OutOfDomain {
            u: gauge.u0.to_f64_lossy(),
            v: gauge.v0.to_f64_lossy(),
        });
    }
    let g = gauge_grids(patch, quad.nodes)?;
    let n = quad.nodes;
    let hu = g.us[1] - g.us[0];
    let hv = g.vs[1] - g.vs[0];
    let su0 = frac_index(&g.us, gauge.u0);
    let sv0 = frac_index(&g.vs, gauge.v0);

    // b along the v0 row, a along the u0 column (cubic interpolation off-grid)
    let b_row_v0: Vec<R> = (0..n)
        .map(|i| interp_cubic(&g.b.row(i), sv0))
        .collect();
    let a_col_u0: Vec<R> = (0..n)
        .map(|j| interp_cubic(&g.a.col(j), su0))
        .collect();

    // cumulative u-integral of b(., v0), rebased at u0
    let iu_b = {
        let raw = cumint4(&b_row_v0, hu);
        let at_u0 = interp_cubic(&raw, su0);
        raw.into_iter().map(|x| x - at_u0).collect::<Vec<R>>()
    };
    // cumulative v-integral of a(u0, .), rebased at v0
    let iv_a0 = {
        let raw = cumint4(&a_col_u0, hv);
        let at_v0 = interp_cubic(&raw, sv0);
        raw.into_iter().map(|x| x - at_v0).collect::<Vec<R>>()
    };

    // per-u cumulative v-integrals of a(u, .), rebased at v0; evaluated at
    // several check rows to certify u-dependence only
    let rows: Vec<usize> = (0..quad.check_lines.max(1))
        .map(|k| k * (n - 1) / quad.check_lines.max(1).max(1))
        .chain(std::iter::once(n - 1))
        .collect();
    let mut phi = vec![R::zero(); n];
    let mut variation = R::zero();
    for i in 0..n {
        let iv = {
            let raw = cumint4(&g.a.row(i), hv);
            let at_v0 = interp_cubic(&raw, sv0);
            raw.into_iter().map(|x| x - at_v0).collect::<Vec<R>>()
        };
        let mut first = R::zero();
        for (k, &jr) in rows.iter().enumerate() {
            let val = g.sqrt_e.at(i, jr) * (-iv[jr] - iu_b[i] + gauge.c1).exp();
            if k == 0 {
                first = val;
                phi[i] = val;
            } else {
                variation = variation.max((val - first).abs());
            }
        }
    }
    // psi: symmetric roles
    let mut psi = vec![R::zero(); n];
    let cols: Vec<usize> = rows.clone();
    for j in 0..n {
        let iu = {
            let raw = cumint4(&g.b.col(j), hu);
            let at_u0 = interp_cubic(&raw, su0);
            raw.into_iter().map(|x| x - at_u0).collect::<Vec<R>>()
        };
        let mut first = R::zero();
        for (k, &ic) in cols.iter().enumerate() {
            let val = g.sqrt_g.at(ic, j) * (-iu[ic] - iv_a0[j] + gauge.c2).exp();
            if k == 0 {
                first = val;
                psi[j] = val;
            } else {
                variation = variation.max((val - first).abs());
            }
        }
    }

    let scale = phi
        .iter()
        .chain(psi.iter())
        .fold(R::one(), |a, &b| a.max(b.abs()));
    if variation > quad.certify_tol * scale {
        return Err(GeomError::GaugeNotConstant {
            variation: variation.to_f64_lossy(),
            tol: (quad.certify_tol * scale).to_f64_lossy(),
        });
    }

    // phi'(u) = phi(u) [ (ln sqrtE)_u(u, v0) - b(u, v0) ]
    let ln_se_u = g.sqrt_e.map(|x| x.ln()).d_du(hu);
    let ln_sg_v = g.sqrt_g.map(|x| x.ln()).d_dv(hv);
    let phi_deriv: Vec<R> = (0..n)
        .map(|i| {
            let d = interp_cubic(&ln_se_u.row(i), sv0) - b_row_v0[i];
            phi[i] * d
        })
        .collect();
    let psi_deriv: Vec<R> = (0..n)
        .map(|j| {
            let d = interp_cubic(&ln_sg_v.col(j), su0) - a_col_u0[j];
            psi[j] * d
        })
        .collect();

    Ok(GaugeFunctions {
        u_grid: g.us,
        phi,
        phi_deriv,
        v_grid: g.vs,
        psi,
        psi_deriv,
        variation,
    })
}

/// Monotone sampled reparametrization `ubar(u)`, `vbar(v)` with inverses.
#[derive(Debug, Clone)]
pub struct ParameterMap<R> {
    pub u_grid: Vec<R>,
    pub ubar: Vec<R>,
    pub v_grid: Vec<R>,
    pub vbar: Vec<R>,
    fwd_u: MonotoneCubic<R>,
    inv_u: MonotoneCubic<R>,
    fwd_v: MonotoneCubic<R>,
    inv_v: MonotoneCubic<R>,
}

impl<R: Real> ParameterMap<R> {
    fn new(u_grid: Vec<R>, ubar: Vec<R>, v_grid: Vec<R>, vbar: Vec<R>) -> Result<Self> {
        let fwd_u = MonotoneCubic::new(u_grid.clone(), ubar.clone())?;
        let inv_u = MonotoneCubic::new(ubar.clone(), u_grid.clone())?;
        let fwd_v = MonotoneCubic::new(v_grid.clone(), vbar.clone())?;
        let inv_v = MonotoneCubic::new(vbar.clone(), v_grid.clone())?;
        Ok(Self {
            u_grid,
            ubar,
            v_grid,
            vbar,
            fwd_u,
            inv_u,
            fwd_v,
            inv_v,
        })
    }

    pub fn forward_u(&self, u: R) -> R {
        self.fwd_u.eval(u)
    }

    pub fn forward_v(&self, v: R) -> R {
        self.fwd_v.eval(v)
    }

    /// Invert `ubar(u) = t` (interpolant seed plus Newton refinement).
    pub fn inverse_u(&self, t: R) -> R {
        let mut u = self.inv_u.eval(t);
        for _ in 0..3 {
            let f = self.fwd_u.eval(u) - t;
            let d = self.fwd_u.deriv(u);
            if d.abs() > R::of(1e-300) {
                u = u - f / d;
            }
        }
        u
    }

    pub fn inverse_v(&self, t: R) -> R {
        let mut v = self.inv_v.eval(t);
        for _ in 0..3 {
            let f = self.fwd_v.eval(v) - t;
            let d = self.fwd_v.deriv(v);
            if d.abs() > R::of(1e-300) {
                v = v - f / d;
            }
        }
        v
    }

    pub fn ubar_range(&self) -> (R, R) {
        (self.ubar[0], *self.ubar.last().unwrap())
    }

    pub fn vbar_range(&self) -> (R, R) {
        (self.vbar[0], *self.vbar.last().unwrap())
    }
}

/// Result of `canonicalize`: the parameter map and the composed patch.
pub struct Canonicalization<R> {
    pub map: ParameterMap<R>,
    pub patch: SurfacePatch<R>,
    pub gauge_functions: GaugeFunctions<R>,
}

/// Build canonical principal parameters `ubar = u0 + int phi`, `vbar = v0 +
/// int psi` and the reparametrized patch.
pub fn canonicalize<R: Real>(
    patch: &SurfacePatch<R>,
    gauge: &CanonicalGauge<R>,
    quad: &QuadratureSpec<R>,
) -> Result<Canonicalization<R>> {
    let gf = varphi_psi(patch, gauge, quad)?;
    let hu = gf.u_grid[1] - gf.u_grid[0];
    let hv = gf.v_grid[1] - gf.v_grid[0];
    let su0 = frac_index(&gf.u_grid, gauge.u0);
    let sv0 = frac_index(&gf.v_grid, gauge.v0);
    let ubar: Vec<R> = {
        let raw = cumint4(&gf.phi, hu);
        let at_u0 = interp_cubic(&raw, su0);
        raw.into_iter().map(|x| x - at_u0 + gauge.u0).collect()
    };
    let vbar: Vec<R> = {
        let raw = cumint4(&gf.psi, hv);
        let at_v0 = interp_cubic(&raw, sv0);
        raw.into_iter().map(|x| x - at_v0 + gauge.v0).collect()
    };
    let map = ParameterMap::new(gf.u_grid.clone(), ubar, gf.v_grid.clone(), vbar)?;

    let phi_fn = MonotoneCubic::new(gf.u_grid.clone(), gf.phi.clone())?;
    let phi_d = MonotoneCubic::new(gf.u_grid.clone(), gf.phi_deriv.clone());
    let psi_fn = MonotoneCubic::new(gf.v_grid.clone(), gf.psi.clone())?;
    let psi_d = MonotoneCubic::new(gf.v_grid.clone(), gf.psi_deriv.clone());
    // derivative samples need not be monotone; fall back to flat zero on error
    let phi_d = phi_d.or_else(|_| MonotoneCubic::new(gf.u_grid.clone(), vec![R::zero(); gf.u_grid.len()]))?;
    let psi_d = psi_d.or_else(|_| MonotoneCubic::new(gf.v_grid.clone(), vec![R::zero(); gf.v_grid.len()]))?;

    let (ub0, ub1) = map.ubar_range();
    let (vb0, vb1) = map.vbar_range();
    let inner_patch = patch.clone();
    let map2 = map.clone();
    let composed = SurfacePatch::analytic(
        Rect::new(ub0, ub1, vb0, vb1)?,
        move |ub, vb| {
            let u = map2.inverse_u(ub);
            let v = map2.inverse_v(vb);
            let jet = inner_patch
                .jet(u, v)
                .unwrap_or_else(|_| inner_patch.jet(
                    u.max(inner_patch.eval_bounds().u_min).min(inner_patch.eval_bounds().u_max),
                    v.max(inner_patch.eval_bounds().v_min).min(inner_patch.eval_bounds().v_max),
                ).expect("clamped point inside domain"));
            let pu = phi_fn.eval(u);
            let pv = psi_fn.eval(v);
            let du = R::one() / pu; // du/dubar
            let dv = R::one() / pv;
            let ddu = -phi_d.eval(u) / (pu * pu * pu); // d2u/dubar2
            let ddv = -psi_d.eval(v) / (pv * pv * pv);
            SurfaceJet {
                z: jet.z,
                z_u: jet.z_u * du,
                z_v: jet.z_v * dv,
                z_uu: jet.z_uu * (du * du) + jet.z_u * ddu,
                z_uv: jet.z_uv * (du * dv),
                z_vv: jet.z_vv * (dv * dv) + jet.z_v * ddv,
            }
        },
    );

    Ok(Canonicalization {
        map,
        patch: composed,
        gauge_functions: gf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicityReport<R> {
    pub canonical: bool,
    pub sup_phi_dev: R,
    pub sup_psi_dev: R,
}

/// Canonical parameters iff `phi == 1` and `psi == 1` for the given gauge.
pub fn is_canonical<R: Real>(
    patch: &SurfacePatch<R>,
    gauge: &CanonicalGauge<R>,
    quad: &QuadratureSpec<R>,
    tol: R,
) -> Result<CanonicityReport<R>> {
    let gf = varphi_psi(patch, gauge, quad)?;
    let one = R::one();
    let sup_phi = gf
        .phi
        .iter()
        .fold(R::zero(), |a, &p| a.max((p - one).abs()));
    let sup_psi = gf
        .psi
        .iter()
        .fold(R::zero(), |a, &p| a.max((p - one).abs()));
    Ok(CanonicityReport {
        canonical: sup_phi <= tol && sup_psi <= tol,
        sup_phi_dev: sup_phi,
        sup_psi_dev: sup_psi,
    })
}

/// Diagnostics for parallel-mean-curvature-vector behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmcvReport<R> {
    pub beta_zero: bool,
    pub nu_zero: bool,
    /// Mean ratio `lambda/mu` when its variation stays below tolerance.
    pub lambda_over_mu: Option<R>,
    pub canonical_metric_ok: bool,
    pub sup_beta: R,
    pub sup_nu: R,
    pub ratio_variation: R,
    pub sup_metric_dev: R,
}

pub fn pmcv_report<R: Real>(
    patch: &SurfacePatch<R>,
    grid: GridSpec,
    tol: R,
) -> Result<PmcvReport<R>> {
    let fields = extract_fields(patch, grid)?;
    Ok(pmcv_report_fields(&fields, tol))
}

/// Evaluate the parallel-mean-curvature claims on sampled fields: vanishing
/// `beta`, vanishing `nu`, proportional `lambda`/`mu`, and the canonical
/// metric `E = G = 1/|mu|`.
pub fn pmcv_report_fields<R: Real>(f: &GeometricFieldGrid<R>, tol: R) -> PmcvReport<R> {
    let sup_beta = f.beta1.max_abs().max(f.beta2.max_abs());
    let sup_nu = f.nu.max_abs();
    let ratio = f.lambda.zip(&f.mu, |l, m| l / m);
    let n = (ratio.nu() * ratio.nv()) as f64;
    let mean = ratio
        .data()
        .iter()
        .fold(R::zero(), |a, &b| a + b)
        / R::of(n);
    let ratio_variation = ratio
        .data()
        .iter()
        .fold(R::zero(), |a, &b| a.max((b - mean).abs()));
    let metric_dev = |m: &Mat<R>| {
        let mut worst = R::zero();
        for i in 0..m.nu() {
            for j in 0..m.nv() {
                worst = worst.max((m.at(i, j) - R::one() / f.mu.at(i, j).abs()).abs());
            }
        }
        worst
    };
    let sup_metric_dev = metric_dev(&f.e).max(metric_dev(&f.g));
    PmcvReport {
        beta_zero: sup_beta <= tol,
        nu_zero: sup_nu <= tol,
        lambda_over_mu: (ratio_variation <= tol * R::one().max(mean.abs())).then_some(mean),
        canonical_metric_ok: sup_metric_dev <= tol,
        sup_beta,
        sup_nu,
        ratio_variation,
        sup_metric_dev,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_quadruple_vanishes_for_constant_invariants() {
        let p = InvariantPoint {
            nu: 0.1,
            lambda: 0.9,
            mu: 2.0,
            nu_u: 0.0,
            nu_v: 0.0,
            lambda_u: 0.0,
            lambda_v: 0.0,
            mu_u: 0.0,
            mu_v: 0.0,
        };
        let q = phi_quadruple(&p, DEGENERATE_TOL).unwrap();
        assert_eq!(
            (q.phi1, q.phi2, q.phi3, q.phi4),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn phi_quadruple_rejects_degenerate_type() {
        // 4 nu^2 + 4 lambda^2 = 1
        let p = InvariantPoint {
            nu: 0.3,
            lambda: 0.4,
            mu: 1.0,
            nu_u: 0.1,
            nu_v: 0.0,
            lambda_u: 0.0,
            lambda_v: 0.0,
            mu_u: 0.0,
            mu_v: 0.0,
        };
        assert!(matches!(
            phi_quadruple(&p, 1e-9),
            Err(GeomError::DegenerateType { .. })
        ));
    }

    #[test]
    fn pmcv_closed_forms_from_proportional_invariants() {
        // nu = 0, lambda = c mu: phi2 = phi3 = 0, phi1 = -(ln sqrt|mu|)_v,
        // phi4 = -(ln sqrt|mu|)_u
        let (mu, mu_u, mu_v) = (1.7, 0.35, -0.2);
        let c = 0.8;
        let p = InvariantPoint {
            nu: 0.0,
            lambda: c * mu,
            mu,
            nu_u: 0.0,
            nu_v: 0.0,
            lambda_u: c * mu_u,
            lambda_v: c * mu_v,
            mu_u,
            mu_v,
        };
        let q = phi_quadruple(&p, DEGENERATE_TOL).unwrap();
        assert!((q.phi2).abs() < 1e-15);
        assert!((q.phi3).abs() < 1e-15);
        assert!((q.phi1 + 0.5 * mu_v / mu).abs() < 1e-14);
        assert!((q.phi4 + 0.5 * mu_u / mu).abs() < 1e-14);
    }
}
