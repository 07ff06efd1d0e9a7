//! Evaluable surface patches in Minkowski 4-space, fundamental forms, the mean
//! curvature vector, and the classification predicates (spacelike, marginally
//! trapped, general type, principal parameters).

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::minkowski::{inner, motion::LorentzMotion, NullNormalFrame, Vector4};
use crate::scalar::Real;

/// Closed parameter rectangle `[u_min, u_max] x [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<R> {
    pub u_min: R,
    pub u_max: R,
    pub v_min: R,
    pub v_max: R,
}

impl<R: Real> Rect<R> {
    pub fn new(u_min: R, u_max: R, v_min: R, v_max: R) -> Result<Self> {
        if u_max > u_min && v_max > v_min {
            Ok(Self {
                u_min,
                u_max,
                v_min,
                v_max,
            })
        } else {
            Err(GeomError::InvalidDomain(format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                u_min.to_f64_lossy(),
                u_max.to_f64_lossy(),
                v_min.to_f64_lossy(),
                v_max.to_f64_lossy()
            )))
        }
    }

    pub fn contains(&self, u: R, v: R) -> bool {
        u >= self.u_min && u <= self.u_max && v >= self.v_min && v <= self.v_max
    }

    pub fn diagonal(&self) -> R {
        let du = self.u_max - self.u_min;
        let dv = self.v_max - self.v_min;
        (du * du + dv * dv).sqrt()
    }

    pub fn inset(&self, margin: R) -> Self {
        Self {
            u_min: self.u_min + margin,
            u_max: self.u_max - margin,
            v_min: self.v_min + margin,
            v_max: self.v_max - margin,
        }
    }
}

/// Position and first/second partial derivatives at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceJet<R> {
    pub z: Vector4<R>,
    pub z_u: Vector4<R>,
    pub z_v: Vector4<R>,
    pub z_uu: Vector4<R>,
    pub z_uv: Vector4<R>,
    pub z_vv: Vector4<R>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode<R> {
    Analytic,
    FiniteDifference { step: R },
}

type JetFn<R> = Arc<dyn Fn(R, R) -> SurfaceJet<R> + Send + Sync>;
type PositionFn<R> = Arc<dyn Fn(R, R) -> Vector4<R> + Send + Sync>;

enum PatchKind<R> {
    Analytic(JetFn<R>),
    FiniteDifference { position: PositionFn<R>, step: R },
}

impl<R: Copy> Clone for PatchKind<R> {
    fn clone(&self) -> Self {
        match self {
            Self::Analytic(f) => Self::Analytic(f.clone()),
            Self::FiniteDifference { position, step } => Self::FiniteDifference {
                position: position.clone(),
                step: *step,
            },
        }
    }
}

/// An evaluable parametrization `z(u, v)` over a rectangle.
///
/// Patches are immutable after construction; jet evaluation is pure and safe
/// to run from many threads.
pub struct SurfacePatch<R> {
    domain: Rect<R>,
    kind: PatchKind<R>,
}

impl<R: Copy> Clone for SurfacePatch<R> {
    fn clone(&self) -> Self {
        Self {
            domain: self.domain,
            kind: self.kind.clone(),
        }
    }
}

/// Default finite-difference step factor relative to the domain diagonal.
pub const FD_STEP_FACTOR: f64 = 1e-4;

impl<R: Real> SurfacePatch<R> {
    pub fn analytic(
        domain: Rect<R>,
        jet: impl Fn(R, R) -> SurfaceJet<R> + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            kind: PatchKind::Analytic(Arc::new(jet)),
        }
    }

    pub fn from_position(
        domain: Rect<R>,
        position: impl Fn(R, R) -> Vector4<R> + Send + Sync + 'static,
        step: Option<R>,
    ) -> Self {
        let step = step.unwrap_or_else(|| R::of(FD_STEP_FACTOR) * domain.diagonal());
        Self {
            domain,
            kind: PatchKind::FiniteDifference {
                position: Arc::new(position),
                step,
            },
        }
    }

    pub fn domain(&self) -> Rect<R> {
        self.domain
    }

    pub fn derivative_mode(&self) -> DerivativeMode<R> {
        match &self.kind {
            PatchKind::Analytic(_) => DerivativeMode::Analytic,
            PatchKind::FiniteDifference { step, .. } => DerivativeMode::FiniteDifference {
                step: *step,
            },
        }
    }

    /// Rectangle on which `jet` may be evaluated: the full domain for
    /// analytic patches, inset by `2h` in finite-difference mode.
    pub fn eval_bounds(&self) -> Rect<R> {
        match &self.kind {
            PatchKind::Analytic(_) => self.domain,
            PatchKind::FiniteDifference { step, .. } => self.domain.inset(R::of(2.0) * *step),
        }
    }

    pub fn jet(&self, u: R, v: R) -> Result<SurfaceJet<R>> {
        if !self.eval_bounds().contains(u, v) {
            return Err(GeomError::OutOfDomain {
                u: u.to_f64_lossy(),
                v: v.to_f64_lossy(),
            });
        }
        Ok(match &self.kind {
            PatchKind::Analytic(f) => f(u, v),
            PatchKind::FiniteDifference { position, step } => fd_jet(position, u, v, *step),
        })
    }

    /// Same evaluator over a sub-rectangle of the domain.
    pub fn restricted(&self, rect: Rect<R>) -> Result<Self> {
        if !(rect.u_min >= self.domain.u_min
            && rect.u_max <= self.domain.u_max
            && rect.v_min >= self.domain.v_min
            && rect.v_max <= self.domain.v_max)
        {
            return Err(GeomError::InvalidDomain(
                "restriction rectangle exceeds the patch domain".into(),
            ));
        }
        Ok(Self {
            domain: rect,
            kind: self.kind.clone(),
        })
    }

    /// Patch moved by an isometry of the ambient metric.
    pub fn transformed(&self, motion: &LorentzMotion<R>) -> Self
    where
        R: 'static,
    {
        let m = *motion;
        match &self.kind {
            PatchKind::Analytic(f) => {
                let f = f.clone();
                Self::analytic(self.domain, move |u, v| {
                    let j = f(u, v);
                    SurfaceJet {
                        z: m.apply_point(j.z),
                        z_u: m.apply_vector(j.z_u),
                        z_v: m.apply_vector(j.z_v),
                        z_uu: m.apply_vector(j.z_uu),
                        z_uv: m.apply_vector(j.z_uv),
                        z_vv: m.apply_vector(j.z_vv),
                    }
                })
            }
            PatchKind::FiniteDifference { position, step } => {
                let f = position.clone();
                Self::from_position(self.domain, move |u, v| m.apply_point(f(u, v)), Some(*step))
            }
        }
    }
}

fn fd_jet<R: Real>(f: &PositionFn<R>, u: R, v: R, h: R) -> SurfaceJet<R> {
    let two = R::of(2.0);
    let four = R::of(4.0);
    let z = f(u, v);
    let zpu = f(u + h, v);
    let zmu = f(u - h, v);
    let zpv = f(u, v + h);
    let zmv = f(u, v - h);
    let zpp = f(u + h, v + h);
    let zpm = f(u + h, v - h);
    let zmp = f(u - h, v + h);
    let zmm = f(u - h, v - h);
    SurfaceJet {
        z,
        z_u: (zpu - zmu) / (two * h),
        z_v: (zpv - zmv) / (two * h),
        z_uu: (zpu - z * two + zmu) / (h * h),
        z_vv: (zpv - z * two + zmv) / (h * h),
        z_uv: (zpp - zpm - zmp + zmm) / (four * h * h),
    }
}

/// Coefficients of the first fundamental form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstForm<R> {
    pub e: R,
    pub f: R,
    pub g: R,
}

impl<R: Real> FirstForm<R> {
    pub fn w2(&self) -> R {
        self.e * self.g - self.f * self.f
    }

    pub fn validate(&self) -> Result<()> {
        if self.e > R::zero() && self.g > R::zero() && self.w2() > R::zero() {
            Ok(())
        } else {
            Err(GeomError::NotSpacelike {
                e: self.e.to_f64_lossy(),
                g: self.g.to_f64_lossy(),
                w2: self.w2().to_f64_lossy(),
            })
        }
    }
}

pub fn first_form<R: Real>(jet: &SurfaceJet<R>) -> Result<FirstForm<R>> {
    let ff = FirstForm {
        e: inner(jet.z_u, jet.z_u),
        f: inner(jet.z_u, jet.z_v),
        g: inner(jet.z_v, jet.z_v),
    };
    ff.validate()?;
    Ok(ff)
}

/// Split an ambient vector into its tangential and normal parts at a jet.
pub fn split_tangent_normal<R: Real>(
    jet: &SurfaceJet<R>,
    w: Vector4<R>,
) -> Result<(Vector4<R>, Vector4<R>)> {
    let ff = first_form(jet)?;
    let p = inner(w, jet.z_u);
    let q = inner(w, jet.z_v);
    let w2 = ff.w2();
    let a = (ff.g * p - ff.f * q) / w2;
    let b = (ff.e * q - ff.f * p) / w2;
    let tangential = jet.z_u * a + jet.z_v * b;
    Ok((tangential, w - tangential))
}

/// Second fundamental tensor on the coordinate vectors: the normal parts of
/// the three second derivatives.
pub fn coordinate_second_form<R: Real>(
    jet: &SurfaceJet<R>,
) -> Result<(Vector4<R>, Vector4<R>, Vector4<R>)> {
    Ok((
        split_tangent_normal(jet, jet.z_uu)?.1,
        split_tangent_normal(jet, jet.z_uv)?.1,
        split_tangent_normal(jet, jet.z_vv)?.1,
    ))
}

/// `H = 1/2 tr_g sigma`, computed frame-free from the normal parts of the
/// second derivatives.
pub fn mean_curvature_vector<R: Real>(jet: &SurfaceJet<R>) -> Result<Vector4<R>> {
    let ff = first_form(jet)?;
    let (c11, c12, c22) = coordinate_second_form(jet)?;
    let two = R::of(2.0);
    Ok((c11 * ff.g - c12 * (two * ff.f) + c22 * ff.e) / (two * ff.w2()))
}

/// Components of the second fundamental tensor along a lightlike normal frame:
/// `sigma = a n1 + b n2` with `a = -<sigma, n2>`, `b = -<sigma, n1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondFormDecomposed<R> {
    pub c11: (R, R),
    pub c12: (R, R),
    pub c22: (R, R),
}

pub fn second_form_decomposed<R: Real>(
    jet: &SurfaceJet<R>,
    frame: &NullNormalFrame<R>,
) -> Result<SecondFormDecomposed<R>> {
    let (c11, c12, c22) = coordinate_second_form(jet)?;
    let comp = |c: Vector4<R>| (-inner(c, frame.n2), -inner(c, frame.n1));
    Ok(SecondFormDecomposed {
        c11: comp(c11),
        c12: comp(c12),
        c22: comp(c22),
    })
}

/// Invariant second fundamental form `L, M, N` built from the determinants of
/// the frame components of `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GMSecondForm<R> {
    pub l: R,
    pub m: R,
    pub n: R,
}

/// Global sign of the invariant second form.
///
/// The determinant convention below, evaluated with `n1 = H`, yields
/// `M = +2/(u(u+1))` on the parabolic meridian reference surface whose
/// reference value is `-2/(u(u+1))`; this single constant calibrates the
/// orientation once. Frame rescalings `(s n1, n2/s)` do not affect it.
pub const GM_SIGN: f64 = -1.0;

pub fn gm_second_form<R: Real>(
    jet: &SurfaceJet<R>,
    frame: &NullNormalFrame<R>,
) -> Result<GMSecondForm<R>> {
    let ff = first_form(jet)?;
    let s = second_form_decomposed(jet, frame)?;
    let w = ff.w2().sqrt();
    let det = |a: (R, R), b: (R, R)| a.0 * b.1 - a.1 * b.0;
    let two = R::of(2.0);
    let sign = R::of(GM_SIGN);
    Ok(GMSecondForm {
        l: sign * two / w * det(s.c11, s.c12),
        m: sign / w * det(s.c11, s.c22),
        n: sign * two / w * det(s.c12, s.c22),
    })
}

/// Uniform sampling resolution for grid sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nu: 33, nv: 33 }
    }
}

impl GridSpec {
    pub fn new(nu: usize, nv: usize) -> Self {
        Self { nu, nv }
    }

    pub fn points<R: Real>(&self, rect: Rect<R>) -> (Vec<R>, Vec<R>) {
        (
            crate::numerics::linspace(rect.u_min, rect.u_max, self.nu),
            crate::numerics::linspace(rect.v_min, rect.v_max, self.nv),
        )
    }
}

/// Grid classification report. Extremal values are the attained bounds the
/// verdicts were decided on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification<R> {
    pub spacelike: bool,
    pub marginally_trapped: bool,
    pub general_type: bool,
    /// sup |<H,H>| over the grid
    pub sup_h_causal: R,
    /// inf |H|_inf over the grid
    pub inf_h_norm: R,
    /// inf |4 nu^2 + 4 lambda^2 - 1| (zero when not evaluable)
    pub inf_general_margin: R,
}

/// Classify a patch on a sample grid: spacelike, marginally trapped
/// (`H != 0`, `<H,H> = 0`), and general type (`4nu^2+4lambda^2-1 != 0`).
pub fn classify<R: Real>(
    patch: &SurfacePatch<R>,
    grid: GridSpec,
    tol: R,
) -> Result<Classification<R>> {
    let (us, vs) = grid.points(patch.eval_bounds());
    let points: Vec<(R, R)> = us
        .iter()
        .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
        .collect();

    struct Acc<R> {
        spacelike: bool,
        sup_h: R,
        inf_n: R,
    }
    let acc = points
        .par_iter()
        .map(|&(u, v)| {
            let jet = patch.jet(u, v)?;
            match mean_curvature_vector(&jet) {
                Ok(h) => Ok(Acc {
                    spacelike: true,
                    sup_h: inner(h, h).abs(),
                    inf_n: h.norm_inf(),
                }),
                Err(GeomError::NotSpacelike { .. }) => Ok(Acc {
                    spacelike: false,
                    sup_h: R::zero(),
                    inf_n: R::infinity(),
                }),
                Err(e) => Err(e),
            }
        })
        .try_reduce(
            || Acc {
                spacelike: true,
                sup_h: R::zero(),
                inf_n: R::infinity(),
            },
            |a, b| {
                Ok(Acc {
                    spacelike: a.spacelike && b.spacelike,
                    sup_h: a.sup_h.max(b.sup_h),
                    inf_n: a.inf_n.min(b.inf_n),
                })
            },
        )?;

    let marginally_trapped = acc.spacelike && acc.sup_h <= tol && acc.inf_n > tol;

    let mut inf_margin = R::zero();
    let mut general_type = false;
    if marginally_trapped {
        let margins: Result<Vec<R>> = points
            .par_iter()
            .map(|&(u, v)| {
                let gf = crate::framefield::geometric_functions(patch, u, v)?;
                let four = R::of(4.0);
                Ok((four * gf.nu * gf.nu + four * gf.lambda * gf.lambda - R::one()).abs())
            })
            .collect();
        match margins {
            Ok(m) => {
                inf_margin = m.into_iter().fold(R::infinity(), |a, b| a.min(b));
                general_type = inf_margin > tol;
            }
            Err(GeomError::InconsistentFrameEquations { .. }) => {
                // non-principal parameters: the margin is not evaluable here
                inf_margin = R::zero();
                general_type = false;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(Classification {
        spacelike: acc.spacelike,
        marginally_trapped,
        general_type,
        sup_h_causal: acc.sup_h,
        inf_h_norm: if acc.inf_n.is_finite() {
            acc.inf_n
        } else {
            R::zero()
        },
        inf_general_margin: inf_margin,
    })
}

/// Principal-parameter test: `F = 0` and `M = 0` within relative tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalReport<R> {
    pub principal: bool,
    pub sup_f: R,
    pub sup_m: R,
    pub f_bound: R,
    pub m_bound: R,
}

pub fn is_principal<R: Real>(
    patch: &SurfacePatch<R>,
    grid: GridSpec,
    tol: R,
) -> Result<PrincipalReport<R>> {
    let (us, vs) = grid.points(patch.eval_bounds());
    let mut sup_f = R::zero();
    let mut sup_eg = R::zero();
    let mut sup_m = R::zero();
    let mut sup_ln = R::zero();
    for &u in &us {
        for &v in &vs {
            let jet = patch.jet(u, v)?;
            let ff = first_form(&jet)?;
            let h = mean_curvature_vector(&jet)?;
            // prefer the geometric frame; fall back to any lightlike normal
            // frame where H is unusable (the verdict is frame-invariant)
            let frame = crate::framefield::null_frame_at(&jet, h)
                .or_else(|_| crate::framefield::any_null_frame(&jet))?;
            let gm = gm_second_form(&jet, &frame)?;
            sup_f = sup_f.max(ff.f.abs());
            sup_eg = sup_eg.max(ff.e.max(ff.g));
            sup_m = sup_m.max(gm.m.abs());
            sup_ln = sup_ln.max(gm.l.abs() + gm.n.abs());
        }
    }
    let f_bound = tol * sup_eg;
    let m_bound = tol * (sup_ln + R::one());
    Ok(PrincipalReport {
        principal: sup_f <= f_bound && sup_m <= m_bound,
        sup_f,
        sup_m,
        f_bound,
        m_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_patch() -> SurfacePatch<f64> {
        SurfacePatch::analytic(
            Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(),
            |u, v| SurfaceJet {
                z: Vector4::e1() * u + Vector4::e2() * v,
                z_u: Vector4::e1(),
                z_v: Vector4::e2(),
                z_uu: Vector4::zero(),
                z_uv: Vector4::zero(),
                z_vv: Vector4::zero(),
            },
        )
    }

    #[test]
    fn plane_jets_and_first_form() {
        let p = plane_patch();
        let j = p.jet(0.2, -0.7).unwrap();
        assert_eq!(j.z_uu, Vector4::zero());
        assert_eq!(j.z_uv, Vector4::zero());
        assert_eq!(j.z_vv, Vector4::zero());
        let ff = first_form(&j).unwrap();
        assert_eq!((ff.e, ff.f, ff.g), (1.0, 0.0, 1.0));
        assert_eq!(mean_curvature_vector(&j).unwrap(), Vector4::zero());
    }

    #[test]
    fn plane_is_principal_but_not_marginally_trapped() {
        let p = plane_patch();
        let cls = classify(&p, GridSpec::new(9, 9), 1e-9).unwrap();
        assert!(cls.spacelike);
        assert!(!cls.marginally_trapped);
        let pr = is_principal(&p, GridSpec::new(5, 5), 1e-9).unwrap();
        assert!(pr.principal);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let p = plane_patch();
        assert!(matches!(
            p.jet(2.0, 0.0),
            Err(GeomError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn fd_patch_insets_its_bounds() {
        let p: SurfacePatch<f64> = SurfacePatch::from_position(
            Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            |u, v| Vector4::e1() * u + Vector4::e2() * v,
            Some(0.01),
        );
        assert!(p.jet(0.001, 0.5).is_err());
        assert!(p.jet(0.5, 0.5).is_ok());
    }

    #[test]
    fn timelike_plane_is_rejected() {
        let p: SurfacePatch<f64> = SurfacePatch::analytic(
            Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(),
            |u, v| SurfaceJet {
                z: Vector4::e1() * u + Vector4::e4() * v,
                z_u: Vector4::e1(),
                z_v: Vector4::e4(),
                z_uu: Vector4::zero(),
                z_uv: Vector4::zero(),
                z_vv: Vector4::zero(),
            },
        );
        let j = p.jet(0.0, 0.0).unwrap();
        assert!(matches!(first_form(&j), Err(GeomError::NotSpacelike { .. })));
    }
}
