//! Marginally trapped meridian surfaces of parabolic type: a one-parameter
//! system of meridians on a rotational hypersurface with lightlike axis.
//! The default configuration carries a full set of closed-form reference
//! values and serves as the golden oracle for the rest of the toolkit.

use crate::bonnet::ReconstructionInput;
use crate::canonical::{CanonicalGauge, PhiQuadruple};
use crate::error::{GeomError, Result};
use crate::minkowski::Vector4;
use crate::scalar::Real;
use crate::surface::{first_form, Rect, SurfaceJet, SurfacePatch};

/// Constants of the family: the spherical-curve curvature `a`, the meridian
/// constants `b`, `c`, the sign branch of the meridian profile, and the phase
/// of the profile solution `omega(v) = (-2/a) cos(v + p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeridianConfig<R> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub sign_branch: i8,
    pub phase: R,
}

impl<R: Real> Default for MeridianConfig<R> {
    fn default() -> Self {
        Self {
            a: -R::one(),
            b: R::zero(),
            c: R::one(),
            sign_branch: 1,
            phase: R::zero(),
        }
    }
}

impl<R: Real> MeridianConfig<R> {
    pub fn is_default(&self) -> bool {
        self.a == -R::one()
            && self.b == R::zero()
            && self.c == R::one()
            && self.sign_branch == 1
            && self.phase == R::zero()
    }

    fn validate(&self) -> Result<()> {
        if self.a == R::zero() || self.c == R::zero() {
            return Err(GeomError::UnsupportedConfig(
                "meridian constants require a != 0 and c != 0".into(),
            ));
        }
        Ok(())
    }

    /// `c -+ a u`: the denominator of the profile (top branch: `c - a u`).
    fn pole_term(&self, u: R) -> R {
        if self.sign_branch >= 0 {
            self.c - self.a * u
        } else {
            self.c + self.a * u
        }
    }

    pub fn profile_g(&self, u: R) -> R {
        let two = R::of(2.0);
        let s = if self.sign_branch >= 0 { R::one() } else { -R::one() };
        let d = self.pole_term(u);
        let num = self.a * self.a * u * u - s * two * self.a * u * self.c;
        s / (two * self.a.powi(3)) * (num / d - two * self.c * d.abs().ln() + self.b)
    }

    pub fn profile_g_prime(&self, u: R) -> R {
        let d = self.pole_term(u);
        -u * u / (R::of(2.0) * d * d)
    }

    pub fn profile_g_second(&self, u: R) -> R {
        let d = self.pole_term(u);
        -u * self.c / (d * d * d)
    }

    /// Curvature of the plane meridian curve, `kappa_m = g'' / (-2 g')^{3/2}`.
    pub fn meridian_curvature(&self, u: R) -> R {
        self.profile_g_second(u) / (-R::of(2.0) * self.profile_g_prime(u)).powf(R::of(1.5))
    }

    pub fn omega(&self, v: R) -> R {
        -R::of(2.0) / self.a * (v + self.phase).cos()
    }

    fn omega_dot(&self, v: R) -> R {
        R::of(2.0) / self.a * (v + self.phase).sin()
    }

    fn omega_ddot(&self, v: R) -> R {
        R::of(2.0) / self.a * (v + self.phase).cos()
    }
}

fn to_standard<R: Real>(a: R, b: R, c: R, d: R) -> Vector4<R> {
    // coefficients along (e1, e2, xi1, xi2)
    let s = R::of(std::f64::consts::FRAC_1_SQRT_2);
    Vector4::new(a, b, (c - d) * s, (c + d) * s)
}

fn original_jet<R: Real>(cfg: &MeridianConfig<R>, u: R, v: R) -> SurfaceJet<R> {
    let (w, wd, wdd) = (cfg.omega(v), cfg.omega_dot(v), cfg.omega_ddot(v));
    let (cv, sv) = (v.cos(), v.sin());
    let half = R::of(0.5);
    let two = R::of(2.0);
    let g = cfg.profile_g(u);
    let gp = cfg.profile_g_prime(u);
    let gpp = cfg.profile_g_second(u);

    let a = u * w * cv;
    let b = u * w * sv;
    let c = u * w * w * half + g;
    let d = u;

    let a_u = w * cv;
    let b_u = w * sv;
    let c_u = w * w * half + gp;
    let d_u = R::one();

    let a_v = u * (wd * cv - w * sv);
    let b_v = u * (wd * sv + w * cv);
    let c_v = u * w * wd;
    let d_v = R::zero();

    let c_uu = gpp;

    let a_uv = wd * cv - w * sv;
    let b_uv = wd * sv + w * cv;
    let c_uv = w * wd;

    let a_vv = u * (wdd * cv - two * wd * sv - w * cv);
    let b_vv = u * (wdd * sv + two * wd * cv - w * sv);
    let c_vv = u * (wd * wd + w * wdd);

    SurfaceJet {
        z: to_standard(a, b, c, d),
        z_u: to_standard(a_u, b_u, c_u, d_u),
        z_v: to_standard(a_v, b_v, c_v, d_v),
        z_uu: to_standard(R::zero(), R::zero(), c_uu, R::zero()),
        z_uv: to_standard(a_uv, b_uv, c_uv, R::zero()),
        z_vv: to_standard(a_vv, b_vv, c_vv, R::zero()),
    }
}

/// The surface in its source parametrization over `(u, v)`.
pub fn build_patch<R: Real>(cfg: MeridianConfig<R>, domain: Rect<R>) -> Result<SurfacePatch<R>> {
    cfg.validate()?;
    if domain.u_min <= R::zero() {
        return Err(GeomError::InvalidDomain(
            "meridian profile needs u > 0".into(),
        ));
    }
    let p_lo = cfg.pole_term(domain.u_min);
    let p_hi = cfg.pole_term(domain.u_max);
    if p_lo == R::zero() || p_hi == R::zero() || p_lo.signum() != p_hi.signum() {
        return Err(GeomError::InvalidDomain(
            "meridian profile pole inside the u-interval".into(),
        ));
    }
    Ok(SurfacePatch::analytic(domain, move |u, v| {
        original_jet(&cfg, u, v)
    }))
}

fn principal_jet<R: Real>(cfg: &MeridianConfig<R>, ub: R, vb: R) -> SurfaceJet<R> {
    let t = ub - vb;
    let et = t.exp();
    let u = et - R::one();
    let v = (ub + vb) * R::of(0.5);
    let j = original_jet(cfg, u, v);
    let half = R::of(0.5);
    let quarter = R::of(0.25);
    // u = e^{ub-vb} - 1, v = (ub+vb)/2
    let z_ub = j.z_u * et + j.z_v * half;
    let z_vb = j.z_u * (-et) + j.z_v * half;
    let z_ubub = j.z_uu * (et * et) + j.z_uv * et + j.z_vv * quarter + j.z_u * et;
    let z_ubvb = j.z_uu * (-et * et) + j.z_vv * quarter + j.z_u * (-et);
    let z_vbvb = j.z_uu * (et * et) - j.z_uv * et + j.z_vv * quarter + j.z_u * et;
    SurfaceJet {
        z: j.z,
        z_u: z_ub,
        z_v: z_vb,
        z_uu: z_ubub,
        z_uv: z_ubvb,
        z_vv: z_vbvb,
    }
}

/// The surface in principal parameters `(ubar, vbar)` via the change
/// `u = e^{ubar - vbar} - 1`, `v = (ubar + vbar)/2` (default configuration
/// only; the rectangle must satisfy `ubar > vbar`).
pub fn principal_patch<R: Real>(
    cfg: MeridianConfig<R>,
    domain: Rect<R>,
) -> Result<SurfacePatch<R>> {
    cfg.validate()?;
    if !cfg.is_default() {
        return Err(GeomError::UnsupportedConfig(
            "the principal change of parameters is implemented for the default constants".into(),
        ));
    }
    if domain.u_min <= domain.v_max {
        return Err(GeomError::InvalidDomain(
            "principal rectangle must satisfy ubar > vbar".into(),
        ));
    }
    Ok(SurfacePatch::analytic(domain, move |ub, vb| {
        principal_jet(&cfg, ub, vb)
    }))
}

/// Closed-form reference values for the default configuration.
///
/// A few of these differ from their original printed forms: the mean
/// curvature direction, the coefficient quadruple in principal parameters,
/// and the canonical reparametrization were re-derived and verified against
/// independent numerical oracles before being frozen here.
#[derive(Debug, Clone, Copy)]
pub struct Reference;

/// Closed-form reference for the default configuration.
pub fn reference<R: Real>(cfg: &MeridianConfig<R>) -> Result<Reference> {
    cfg.validate()?;
    if cfg.is_default() {
        Ok(Reference)
    } else {
        Err(GeomError::UnsupportedConfig(
            "closed-form reference values exist for the default constants only".into(),
        ))
    }
}

impl Reference {
    /// `E, F, G` in the source parametrization.
    pub fn first_form_source<R: Real>(&self, u: R) -> (R, R, R) {
        let one = R::one();
        (
            u * u / ((u + one) * (u + one)),
            R::zero(),
            R::of(4.0) * u * u,
        )
    }

    /// `L, M, N` in the source parametrization.
    pub fn second_form_source<R: Real>(&self, u: R) -> (R, R, R) {
        (
            R::zero(),
            -R::of(2.0) / (u * (u + R::one())),
            R::zero(),
        )
    }

    /// `E = G`, `F = 0` in principal parameters, as functions of `t = ubar - vbar`.
    pub fn metric_principal<R: Real>(&self, t: R) -> R {
        let x = t.exp() - R::one();
        R::of(2.0) * x * x
    }

    pub fn nu<R: Real>(&self) -> R {
        R::zero()
    }

    pub fn lambda<R: Real>(&self, t: R) -> R {
        let et = t.exp();
        et / (et - R::one())
    }

    pub fn mu<R: Real>(&self, t: R) -> R {
        let x = t.exp() - R::one();
        R::one() / (R::of(2.0) * x * x * x)
    }

    pub fn gamma1<R: Real>(&self, t: R) -> R {
        let et = t.exp();
        let x = et - R::one();
        et / (R::of(std::f64::consts::SQRT_2) * x * x)
    }

    pub fn gamma2<R: Real>(&self, t: R) -> R {
        -self.gamma1(t)
    }

    pub fn beta1<R: Real>(&self, t: R) -> R {
        -self.gamma1(t)
    }

    pub fn beta2<R: Real>(&self, t: R) -> R {
        self.gamma1(t)
    }

    /// The orthonormal normal pair (unit spacelike, unit timelike) spanning
    /// the normal plane in the source parametrization.
    pub fn normal_pair<R: Real>(&self, u: R, v: R) -> (Vector4<R>, Vector4<R>) {
        let two = R::of(2.0);
        let (c2v, s2v) = ((two * v).cos(), (two * v).sin());
        let cv2 = v.cos() * v.cos();
        let n1 = to_standard(c2v, s2v, two * cv2, R::zero());
        let k = (u + R::one()) / u;
        let n2 = to_standard(
            k * two * cv2,
            k * s2v,
            k * (two * cv2 + u * u / (two * (u + R::one()) * (u + R::one()))),
            k,
        );
        (n1, n2)
    }

    /// The lightlike geometric frame normals: `n1 = H = -(u/2)(n1 - n2)` and
    /// its paired partner `(1/u)(n1 + n2)`, in terms of the orthonormal pair.
    pub fn lightlike_frame<R: Real>(&self, u: R, v: R) -> (Vector4<R>, Vector4<R>) {
        let (p, q) = self.normal_pair(u, v);
        let half = R::of(0.5);
        ((p - q) * (-u * half), (p + q) / u)
    }

    /// Coefficient quadruple in principal parameters, `t = ubar - vbar`.
    pub fn phi_quadruple_principal<R: Real>(&self, t: R) -> PhiQuadruple<R> {
        let et = t.exp();
        let two = R::of(2.0);
        let p2 = -et / (two * (et + R::one()));
        let p4 = et * (et + R::of(3.0)) / (two * (et * et - R::one()));
        PhiQuadruple {
            phi1: -p4,
            phi2: p2,
            phi3: -p2,
            phi4: p4,
        }
    }

    /// Coefficient quadruple evaluated on the invariants expressed as
    /// functions of the source parameter `u` (partials taken in the source
    /// parametrization, where they depend on `u` alone).
    pub fn phi_quadruple_source<R: Real>(&self, u: R) -> PhiQuadruple<R> {
        let two = R::of(2.0);
        PhiQuadruple {
            phi1: R::zero(),
            phi2: -R::one() / (two * (u + two)),
            phi3: R::zero(),
            phi4: (u + R::of(4.0)) / (two * u * (u + two)),
        }
    }

    /// Invariants and their partials in the source parametrization:
    /// `nu = 0`, `lambda = (u+1)/u`, `mu = 1/(2u^3)`.
    pub fn invariants_source<R: Real>(&self, u: R) -> crate::canonical::InvariantPoint<R> {
        let one = R::one();
        let two = R::of(2.0);
        crate::canonical::InvariantPoint {
            nu: R::zero(),
            lambda: (u + one) / u,
            mu: one / (two * u * u * u),
            nu_u: R::zero(),
            nu_v: R::zero(),
            lambda_u: -one / (u * u),
            lambda_v: R::zero(),
            mu_u: -R::of(1.5) / (u * u * u * u),
            mu_v: R::zero(),
        }
    }

    /// Gauge anchored at `(0, ln 2)`: `c1 = -ln(sqrt 3)`, `c2 = +ln(sqrt 3)`.
    /// The anchor lies outside any valid principal rectangle, so quadrature
    /// paths cannot reach it; the closed forms below extend it analytically.
    pub fn anchored_gauge<R: Real>(&self) -> CanonicalGauge<R> {
        let half_ln3 = R::of(0.5) * R::of(3.0).ln();
        CanonicalGauge::new(R::zero(), R::of(2.0).ln(), -half_ln3, half_ln3)
    }

    /// With the anchored gauge the gauge functions are constants.
    pub fn phi_const<R: Real>(&self) -> R {
        R::one() / R::of(6.0).sqrt()
    }

    pub fn psi_const<R: Real>(&self) -> R {
        R::of(6.0).sqrt() * R::of(0.5)
    }

    /// Closed-form canonical reparametrization for the anchored gauge.
    pub fn canonical_u<R: Real>(&self, ub: R) -> R {
        ub * self.phi_const()
    }

    pub fn canonical_v<R: Real>(&self, vb: R) -> R {
        let ln2 = R::of(2.0).ln();
        ln2 + self.psi_const::<R>() * (vb - ln2)
    }

    /// An in-domain gauge producing exactly the same gauge functions as the
    /// anchored one (the metric has `E = G`, so only the constants matter).
    pub fn equivalent_gauge_at<R: Real>(
        &self,
        patch: &SurfacePatch<R>,
        u0: R,
        v0: R,
    ) -> Result<CanonicalGauge<R>> {
        let ff = first_form(&patch.jet(u0, v0)?)?;
        Ok(CanonicalGauge::new(
            u0,
            v0,
            self.phi_const::<R>().ln() - ff.e.sqrt().ln(),
            self.psi_const::<R>().ln() - ff.g.sqrt().ln(),
        ))
    }

    /// Prescribed-invariant grids of the surface in canonical parameters
    /// (which coincide with the principal ones up to the natural gauge at the
    /// base node `(u_min, v_max)`).
    pub fn canonical_triple<R: Real>(
        &self,
        u_range: [R; 2],
        v_range: [R; 2],
        nu_nodes: usize,
        nv_nodes: usize,
    ) -> Result<ReconstructionInput<R>> {
        if u_range[0] <= v_range[1] {
            return Err(GeomError::InvalidDomain(
                "canonical rectangle must satisfy ubar > vbar".into(),
            ));
        }
        let t0 = u_range[0] - v_range[1];
        let se0 = self.metric_principal(t0).sqrt();
        let gauge = CanonicalGauge::new(u_range[0], v_range[1], -se0.ln(), -se0.ln());
        ReconstructionInput::from_functions(u_range, v_range, nu_nodes, nv_nodes, gauge, |u, v| {
            let t = u - v;
            (R::zero(), self.lambda(t), self.mu(t))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::GridSpec;

    #[test]
    fn default_profile_values() {
        let cfg = MeridianConfig::<f64>::default();
        assert!((cfg.profile_g(1.0) - (-0.75 + 2f64.ln())).abs() < 1e-15);
        assert!((cfg.meridian_curvature(1.0) + 1.0).abs() < 1e-13);
        assert!((cfg.meridian_curvature(2.0) + 0.25).abs() < 1e-13);
        assert!((cfg.omega(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn build_patch_rejects_bad_domains() {
        let cfg = MeridianConfig::<f64>::default();
        assert!(matches!(
            build_patch(cfg, Rect::new(-0.5, 1.0, 0.0, 1.0).unwrap()),
            Err(GeomError::InvalidDomain(_))
        ));
        // top branch with a = 1, c = 1 has a pole at u = 1
        let cfg2 = MeridianConfig {
            a: 1.0,
            ..MeridianConfig::<f64>::default()
        };
        assert!(matches!(
            build_patch(cfg2, Rect::new(0.5, 2.0, 0.0, 1.0).unwrap()),
            Err(GeomError::InvalidDomain(_))
        ));
    }

    #[test]
    fn source_first_form_matches_reference() {
        let cfg = MeridianConfig::<f64>::default();
        let r = reference(&cfg).unwrap();
        let patch = build_patch(cfg, Rect::new(0.5, 2.5, -1.0, 1.0).unwrap()).unwrap();
        for &u in &[0.5, 1.0, 1.7, 2.5] {
            for &v in &[-0.9, 0.0, 0.8] {
                let ff = first_form(&patch.jet(u, v).unwrap()).unwrap();
                let (e, f, g) = r.first_form_source(u);
                assert!((ff.e - e).abs() < 1e-14 * e.max(1.0));
                assert!(ff.f.abs() < 1e-14);
                assert!((ff.g - g).abs() < 1e-13 * g);
            }
        }
    }

    #[test]
    fn principal_patch_requires_ubar_above_vbar() {
        let cfg = MeridianConfig::<f64>::default();
        assert!(matches!(
            principal_patch(cfg, Rect::new(0.0, 1.0, -0.5, 0.5).unwrap()),
            Err(GeomError::InvalidDomain(_))
        ));
    }

    #[test]
    fn nondefault_configs_build_but_have_no_reference() {
        let cfg = MeridianConfig {
            a: -2.0,
            b: 0.5,
            c: 1.5,
            sign_branch: 1,
            phase: 0.3,
        };
        assert!(reference(&cfg).is_err());
        let patch = build_patch(cfg, Rect::new(0.4, 2.0, -0.8, 0.8).unwrap()).unwrap();
        // still spacelike and marginally trapped through the generic pipeline
        let cls = crate::surface::classify(&patch, GridSpec::new(9, 9), 1e-9).unwrap();
        assert!(cls.spacelike, "{cls:?}");
        assert!(cls.marginally_trapped, "{cls:?}");
    }
}
