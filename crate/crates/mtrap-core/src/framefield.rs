//! The geometric moving frame `{x, y, n1, n2}` of a marginally trapped surface
//! in principal parameters, extraction of the seven geometric functions from
//! the Frenet-type derivative formulas, and the residuals of the seven-function
//! integrability system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::minkowski::{complete_null_frame, inner, NullNormalFrame, Vector4};
use crate::numerics::Mat;
use crate::scalar::Real;
use crate::surface::{
    first_form, mean_curvature_vector, split_tangent_normal, GridSpec, SurfaceJet, SurfacePatch,
};

/// `H` must be lightlike but not smaller than this in sup-norm; its scaling is
/// part of the geometry and cannot be normalized away.
pub const MIN_H_NORM: f64 = 1e-8;

/// Build the lightlike normal frame `(n1 = H, n2)` at a jet, seeding the
/// completion with the normal projection of a basis vector.
pub fn null_frame_at<R: Real>(jet: &SurfaceJet<R>, h: Vector4<R>) -> Result<NullNormalFrame<R>> {
    let h_sq = inner(h, h);
    let h_norm = h.norm_inf();
    let tol = crate::minkowski::lightlike_tol(h);
    if h_norm < R::of(MIN_H_NORM) || h_sq.abs() > tol {
        return Err(GeomError::NotMarginallyTrapped {
            h_sq: h_sq.to_f64_lossy(),
            h_norm: h_norm.to_f64_lossy(),
        });
    }
    let seeds = [
        Vector4::e3(),
        Vector4::e4(),
        Vector4::e1(),
        Vector4::e2(),
    ];
    let mut best: Option<(R, Vector4<R>)> = None;
    for s in seeds {
        let m = split_tangent_normal(jet, s)?.1;
        let score = inner(m, h).abs() / R::one().max(m.norm_inf());
        if best.map_or(true, |(b, _)| score > b) {
            best = Some((score, m));
        }
    }
    let (_, m) = best.unwrap();
    complete_null_frame(h, m)
}

/// A lightlike normal frame of the (Lorentzian) normal plane, independent of
/// the mean curvature vector. Used where `H` may vanish.
pub fn any_null_frame<R: Real>(jet: &SurfaceJet<R>) -> Result<NullNormalFrame<R>> {
    // two independent normal directions from projected basis vectors
    let mut cands: Vec<Vector4<R>> = Vec::new();
    for s in [
        Vector4::e3(),
        Vector4::e4(),
        Vector4::e1(),
        Vector4::e2(),
    ] {
        let m = split_tangent_normal(jet, s)?.1;
        if m.norm_inf() > R::of(1e-9) {
            cands.push(m);
        }
    }
    let m1 = cands
        .first()
        .copied()
        .ok_or_else(|| GeomError::DegeneratePlane { pairing: 0.0 })?;
    let m2 = cands
        .iter()
        .skip(1)
        .copied()
        .max_by(|a, b| {
            let indep = |m: &Vector4<R>| {
                // reject near-parallel candidates via a crude Gram score
                let g11 = inner(m1, m1);
                let g12 = inner(m1, *m);
                let g22 = inner(*m, *m);
                (g11 * g22 - g12 * g12).abs()
            };
            indep(a)
                .partial_cmp(&indep(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or(GeomError::DegeneratePlane { pairing: 0.0 })?;
    // null directions of span{m1, m2}: <m1 + t m2, m1 + t m2> = 0
    let a = inner(m1, m1);
    let b = inner(m1, m2);
    let c = inner(m2, m2);
    let n1_raw = if c.abs() <= R::of(1e-14) * m2.norm_inf().powi(2).max(R::one()) {
        m2
    } else {
        let disc = b * b - a * c;
        if disc <= R::zero() {
            return Err(GeomError::DegeneratePlane {
                pairing: disc.to_f64_lossy(),
            });
        }
        m1 + m2 * ((-b + disc.sqrt()) / c)
    };
    let n1 = n1_raw / n1_raw.norm_inf().max(R::of(1e-300));
    let seed = if inner(m1, n1).abs() >= inner(m2, n1).abs() {
        m1
    } else {
        m2
    };
    complete_null_frame(n1, seed)
}

/// The geometric frame: unit principal tangents and the lightlike normal pair
/// anchored at `n1 = H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameField<R> {
    pub x: Vector4<R>,
    pub y: Vector4<R>,
    pub frame: NullNormalFrame<R>,
}

impl<R: Real> FrameField<R> {
    /// Largest deviation from the ten Gram conditions.
    pub fn gram_defect(&self) -> R {
        let one = R::one();
        let vals = [
            inner(self.x, self.x) - one,
            inner(self.y, self.y) - one,
            inner(self.x, self.y),
            inner(self.x, self.frame.n1),
            inner(self.x, self.frame.n2),
            inner(self.y, self.frame.n1),
            inner(self.y, self.frame.n2),
            inner(self.frame.n1, self.frame.n1),
            inner(self.frame.n2, self.frame.n2),
            inner(self.frame.n1, self.frame.n2) + one,
        ];
        vals.iter().fold(R::zero(), |a, v| a.max(v.abs()))
    }
}

pub fn geometric_frame<R: Real>(jet: &SurfaceJet<R>) -> Result<FrameField<R>> {
    let ff = first_form(jet)?;
    let h = mean_curvature_vector(jet)?;
    let frame = null_frame_at(jet, h)?;
    Ok(FrameField {
        x: jet.z_u / ff.e.sqrt(),
        y: jet.z_v / ff.g.sqrt(),
        frame,
    })
}

/// The seven geometric functions at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFunctions<R> {
    pub nu: R,
    pub lambda: R,
    pub mu: R,
    pub gamma1: R,
    pub gamma2: R,
    pub beta1: R,
    pub beta2: R,
}

/// Gauss curvature and normal-connection curvature: `K = 2 lambda mu`,
/// `kappa = -2 mu nu`.
pub fn invariants<R: Real>(gf: &GeometricFunctions<R>) -> (R, R) {
    let two = R::of(2.0);
    (two * gf.lambda * gf.mu, -two * gf.mu * gf.nu)
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractionOptions<R> {
    /// Cross-check tolerance, absolute part.
    pub cross_tol_abs: R,
    /// Cross-check tolerance, relative part.
    pub cross_tol_rel: R,
    /// Step for differencing the normal fields; default `1e-6 * max(1, diag)`.
    pub probe_step: Option<R>,
}

impl<R: Real> Default for ExtractionOptions<R> {
    fn default() -> Self {
        Self {
            cross_tol_abs: R::of(1e-5),
            cross_tol_rel: R::of(1e-5),
            probe_step: None,
        }
    }
}

/// Extract the seven geometric functions at `(u, v)`.
///
/// Tangent-frame derivatives are assembled from the jet's second derivatives
/// and the exact metric derivatives (`E_u = 2<z_uu, z_u>`, ...); `beta1` and
/// `beta2` difference the sampled normal fields. The u- and v-equations give
/// two estimates for `nu`, `lambda`, `mu` each; their disagreement signals
/// non-principal parameters.
pub fn geometric_functions<R: Real>(
    patch: &SurfacePatch<R>,
    u: R,
    v: R,
) -> Result<GeometricFunctions<R>> {
    geometric_functions_with(patch, u, v, &ExtractionOptions::default())
}

pub fn geometric_functions_with<R: Real>(
    patch: &SurfacePatch<R>,
    u: R,
    v: R,
    opts: &ExtractionOptions<R>,
) -> Result<GeometricFunctions<R>> {
    let jet = patch.jet(u, v)?;
    let ff = first_form(&jet)?;
    let frame = geometric_frame(&jet)?;
    let (se, sg) = (ff.e.sqrt(), ff.g.sqrt());
    let two = R::of(2.0);

    // exact metric derivatives from the jet
    let e_u = two * inner(jet.z_uu, jet.z_u);
    let e_v = two * inner(jet.z_uv, jet.z_u);
    let g_u = two * inner(jet.z_uv, jet.z_v);
    let g_v = two * inner(jet.z_vv, jet.z_v);

    // D_a f = (partial_a f) / sqrt(metric); x = z_u/sqrt(E), y = z_v/sqrt(G)
    let du_x = (jet.z_uu / se - jet.z_u * (e_u / (two * ff.e * se))) / se;
    let dv_x = (jet.z_uv / se - jet.z_u * (e_v / (two * ff.e * se))) / sg;
    let du_y = (jet.z_uv / sg - jet.z_v * (g_u / (two * ff.g * sg))) / se;
    let dv_y = (jet.z_vv / sg - jet.z_v * (g_v / (two * ff.g * sg))) / sg;

    let n1 = frame.frame.n1;
    let n2 = frame.frame.n2;

    let gamma1 = inner(du_x, frame.y);
    let gamma2 = inner(dv_y, frame.x);

    let nu_x = -inner(du_x, n2) - R::one();
    let nu_y = R::one() + inner(dv_y, n2);
    let lam_x = -inner(du_y, n2);
    let lam_y = -inner(dv_x, n2);
    let mu_x = -inner(du_y, n1);
    let mu_y = -inner(dv_x, n1);

    let scale = R::one()
        .max(nu_x.abs())
        .max(lam_x.abs())
        .max(mu_x.abs());
    let tol = opts.cross_tol_abs + opts.cross_tol_rel * scale;
    let defect = (nu_x - nu_y)
        .abs()
        .max((lam_x - lam_y).abs())
        .max((mu_x - mu_y).abs());
    if defect > tol {
        return Err(GeomError::InconsistentFrameEquations {
            defect: defect.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }

    let half = R::of(0.5);
    let (beta1, beta2) = betas_by_projection(patch, u, v, n2, se, sg, opts)?;

    Ok(GeometricFunctions {
        nu: (nu_x + nu_y) * half,
        lambda: (lam_x + lam_y) * half,
        mu: (mu_x + mu_y) * half,
        gamma1,
        gamma2,
        beta1,
        beta2,
    })
}

/// `beta1 = -<D_u n1, n2>`, `beta2 = -<D_v n1, n2>` with the `n1 = H` field
/// differenced at the probe step (one-sided next to the domain boundary).
fn betas_by_projection<R: Real>(
    patch: &SurfacePatch<R>,
    u: R,
    v: R,
    n2: Vector4<R>,
    se: R,
    sg: R,
    opts: &ExtractionOptions<R>,
) -> Result<(R, R)> {
    let bounds = patch.eval_bounds();
    let delta = opts
        .probe_step
        .unwrap_or_else(|| R::of(1e-6) * R::one().max(bounds.diagonal()));
    let h_at = |uu: R, vv: R| -> Result<Vector4<R>> {
        let jet = patch.jet(uu, vv)?;
        mean_curvature_vector(&jet)
    };
    let two = R::of(2.0);
    let diff = |lo_ok: bool, hi_ok: bool, minus2: Vector4<R>, minus: Vector4<R>, center: Vector4<R>, plus: Vector4<R>, plus2: Vector4<R>| {
        if lo_ok && hi_ok {
            (plus - minus) / (two * delta)
        } else if hi_ok {
            (plus * R::of(4.0) - plus2 - center * R::of(3.0)) / (two * delta)
        } else {
            (center * R::of(3.0) - minus * R::of(4.0) + minus2) / (two * delta)
        }
    };

    let u_lo = u - delta >= bounds.u_min;
    let u_hi = u + delta <= bounds.u_max;
    let h0 = h_at(u, v)?;
    let (hum2, hum, hup, hup2) = (
        if u_lo { h_at((u - two * delta).max(bounds.u_min), v)? } else { Vector4::zero() },
        if u_lo { h_at(u - delta, v)? } else { Vector4::zero() },
        if u_hi { h_at(u + delta, v)? } else { Vector4::zero() },
        if u_hi { h_at((u + two * delta).min(bounds.u_max), v)? } else { Vector4::zero() },
    );
    let dh_u = diff(u_lo, u_hi, hum2, hum, h0, hup, hup2);

    let v_lo = v - delta >= bounds.v_min;
    let v_hi = v + delta <= bounds.v_max;
    let (hvm2, hvm, hvp, hvp2) = (
        if v_lo { h_at(u, (v - two * delta).max(bounds.v_min))? } else { Vector4::zero() },
        if v_lo { h_at(u, v - delta)? } else { Vector4::zero() },
        if v_hi { h_at(u, v + delta)? } else { Vector4::zero() },
        if v_hi { h_at(u, (v + two * delta).min(bounds.v_max))? } else { Vector4::zero() },
    );
    let dh_v = diff(v_lo, v_hi, hvm2, hvm, h0, hvp, hvp2);

    Ok((-inner(dh_u, n2) / se, -inner(dh_v, n2) / sg))
}

/// The seven functions plus the metric sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct GeometricFieldGrid<R> {
    pub us: Vec<R>,
    pub vs: Vec<R>,
    pub e: Mat<R>,
    pub g: Mat<R>,
    pub nu: Mat<R>,
    pub lambda: Mat<R>,
    pub mu: Mat<R>,
    pub gamma1: Mat<R>,
    pub gamma2: Mat<R>,
    pub beta1: Mat<R>,
    pub beta2: Mat<R>,
}

impl<R: Real> GeometricFieldGrid<R> {
    pub fn spacing(&self) -> (R, R) {
        (self.us[1] - self.us[0], self.vs[1] - self.vs[0])
    }
}

/// Sample metric and geometric functions over the patch evaluation bounds.
pub fn extract_fields<R: Real>(
    patch: &SurfacePatch<R>,
    grid: GridSpec,
) -> Result<GeometricFieldGrid<R>> {
    let (us, vs) = grid.points(patch.eval_bounds());
    let rows: Result<Vec<Vec<(R, R, GeometricFunctions<R>)>>> = us
        .par_iter()
        .map(|&u| {
            vs.iter()
                .map(|&v| {
                    let jet = patch.jet(u, v)?;
                    let ff = first_form(&jet)?;
                    let gf = geometric_functions(patch, u, v)?;
                    Ok((ff.e, ff.g, gf))
                })
                .collect()
        })
        .collect();
    let rows = rows?;
    let (nu_n, nv_n) = (us.len(), vs.len());
    let pick = |f: &dyn Fn(&(R, R, GeometricFunctions<R>)) -> R| {
        Mat::from_fn(nu_n, nv_n, |i, j| f(&rows[i][j]))
    };
    Ok(GeometricFieldGrid {
        e: pick(&|r| r.0),
        g: pick(&|r| r.1),
        nu: pick(&|r| r.2.nu),
        lambda: pick(&|r| r.2.lambda),
        mu: pick(&|r| r.2.mu),
        gamma1: pick(&|r| r.2.gamma1),
        gamma2: pick(&|r| r.2.gamma2),
        beta1: pick(&|r| r.2.beta1),
        beta2: pick(&|r| r.2.beta2),
        us,
        vs,
    })
}

/// Sup-norms of the six integrability equations over interior grid nodes, plus
/// the minima of the two positivity quantities from the reconstruction theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<R> {
    pub r: [R; 6],
    pub min_positivity_u: R,
    pub min_positivity_v: R,
}

impl<R: Real> ResidualReport<R> {
    pub fn max(&self) -> R {
        self.r.iter().fold(R::zero(), |a, &b| a.max(b))
    }
}

pub fn basic_system_residuals<R: Real>(
    patch: &SurfacePatch<R>,
    grid: GridSpec,
) -> Result<ResidualReport<R>> {
    let fields = extract_fields(patch, grid)?;
    Ok(residuals_from_fields(&fields))
}

/// Residuals of the six-equation system evaluated from sampled fields with
/// 4th-order finite-difference partials; sup over interior nodes.
pub fn residuals_from_fields<R: Real>(f: &GeometricFieldGrid<R>) -> ResidualReport<R> {
    let (hu, hv) = f.spacing();
    let se = f.e.map(|x| x.sqrt());
    let sg = f.g.map(|x| x.sqrt());
    let two = R::of(2.0);
    let one = R::one();

    let mu_u = f.mu.d_du(hu);
    let mu_v = f.mu.d_dv(hv);
    let nu_u = f.nu.d_du(hu);
    let nu_v = f.nu.d_dv(hv);
    let lam_u = f.lambda.d_du(hu);
    let lam_v = f.lambda.d_dv(hv);
    let g1_v = f.gamma1.d_dv(hv);
    let g2_u = f.gamma2.d_du(hu);
    let b1_v = f.beta1.d_dv(hv);
    let b2_u = f.beta2.d_du(hu);

    let (n_u, n_v) = (f.e.nu(), f.e.nv());
    let mut r = [Mat::zeros(n_u, n_v), Mat::zeros(n_u, n_v), Mat::zeros(n_u, n_v),
                 Mat::zeros(n_u, n_v), Mat::zeros(n_u, n_v), Mat::zeros(n_u, n_v)];
    let mut min_pu = R::infinity();
    let mut min_pv = R::infinity();
    let floor = R::of(1e-12);

    for i in 0..n_u {
        for j in 0..n_v {
            let (nu, lam, mu) = (f.nu.at(i, j), f.lambda.at(i, j), f.mu.at(i, j));
            let (g1, g2) = (f.gamma1.at(i, j), f.gamma2.at(i, j));
            let (b1, b2) = (f.beta1.at(i, j), f.beta2.at(i, j));
            let (se_, sg_) = (se.at(i, j), sg.at(i, j));
            r[0].set(i, j, two * mu * g2 + mu * b1 - mu_u.at(i, j) / se_);
            r[1].set(i, j, two * mu * g1 + mu * b2 - mu_v.at(i, j) / sg_);
            r[2].set(
                i,
                j,
                two * lam * mu
                    - (g2_u.at(i, j) / se_ + g1_v.at(i, j) / sg_ - (g1 * g1 + g2 * g2)),
            );
            r[3].set(
                i,
                j,
                two * lam * g2 - two * nu * g1 - lam * b1 + (one + nu) * b2
                    - (lam_u.at(i, j) / se_ - nu_v.at(i, j) / sg_),
            );
            r[4].set(
                i,
                j,
                two * lam * g1 + two * nu * g2 + (one - nu) * b1 - lam * b2
                    - (nu_u.at(i, j) / se_ + lam_v.at(i, j) / sg_),
            );
            r[5].set(
                i,
                j,
                g1 * b1 - g2 * b2 + two * nu * mu
                    - (-b2_u.at(i, j) / se_ + b1_v.at(i, j) / sg_),
            );

            // positivity diagnostics from the reconstruction theorem's proof
            let den_u = mu * (two * g2 + b1);
            let den_v = mu * (two * g1 + b2);
            if den_u.abs() > floor && mu_u.at(i, j).abs() > floor {
                min_pu = min_pu.min(mu_u.at(i, j) / den_u);
            }
            if den_v.abs() > floor && mu_v.at(i, j).abs() > floor {
                min_pv = min_pv.min(mu_v.at(i, j) / den_v);
            }
        }
    }

    ResidualReport {
        r: [
            r[0].max_abs_interior(1),
            r[1].max_abs_interior(1),
            r[2].max_abs_interior(1),
            r[3].max_abs_interior(1),
            r[4].max_abs_interior(1),
            r[5].max_abs_interior(1),
        ],
        min_positivity_u: min_pu,
        min_positivity_v: min_pv,
    }
}
