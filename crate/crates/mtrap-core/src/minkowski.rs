//! Indefinite linear algebra of Minkowski 4-space: the scalar product of
//! signature (3,1) with the time coordinate last, causal classification, and
//! pseudo-orthonormal (lightlike) normal frames.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::scalar::Real;

/// A point or vector of Minkowski 4-space, metric `dx1^2 + dx2^2 + dx3^2 - dx4^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector4<R> {
    pub x1: R,
    pub x2: R,
    pub x3: R,
    pub x4: R,
}

impl<R: Real> Vector4<R> {
    pub fn new(x1: R, x2: R, x3: R, x4: R) -> Self {
        Self { x1, x2, x3, x4 }
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero(), R::zero(), R::zero())
    }

    pub fn e1() -> Self {
        Self::new(R::one(), R::zero(), R::zero(), R::zero())
    }

    pub fn e2() -> Self {
        Self::new(R::zero(), R::one(), R::zero(), R::zero())
    }

    pub fn e3() -> Self {
        Self::new(R::zero(), R::zero(), R::one(), R::zero())
    }

    pub fn e4() -> Self {
        Self::new(R::zero(), R::zero(), R::zero(), R::one())
    }

    /// First vector of the pseudo-orthonormal base: `(e3 + e4)/sqrt(2)`.
    pub fn xi1() -> Self {
        let s = R::of(std::f64::consts::FRAC_1_SQRT_2);
        Self::new(R::zero(), R::zero(), s, s)
    }

    /// Second vector of the pseudo-orthonormal base: `(-e3 + e4)/sqrt(2)`.
    pub fn xi2() -> Self {
        let s = R::of(std::f64::consts::FRAC_1_SQRT_2);
        Self::new(R::zero(), R::zero(), -s, s)
    }

    pub fn norm_inf(&self) -> R {
        self.x1
            .abs()
            .max(self.x2.abs())
            .max(self.x3.abs())
            .max(self.x4.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite() && self.x4.is_finite()
    }

    pub fn components(&self) -> [R; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub fn from_components(c: [R; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

impl<R: Real> Add for Vector4<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3, self.x4 + o.x4)
    }
}

impl<R: Real> Sub for Vector4<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3, self.x4 - o.x4)
    }
}

impl<R: Real> Neg for Vector4<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2, -self.x3, -self.x4)
    }
}

impl<R: Real> Mul<R> for Vector4<R> {
    type Output = Self;
    fn mul(self, s: R) -> Self {
        Self::new(self.x1 * s, self.x2 * s, self.x3 * s, self.x4 * s)
    }
}

impl<R: Real> Div<R> for Vector4<R> {
    type Output = Self;
    fn div(self, s: R) -> Self {
        Self::new(self.x1 / s, self.x2 / s, self.x3 / s, self.x4 / s)
    }
}

impl<R: Real> AddAssign for Vector4<R> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<R: Real> SubAssign for Vector4<R> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// The indefinite scalar product `a1 b1 + a2 b2 + a3 b3 - a4 b4`.
pub fn inner<R: Real>(a: Vector4<R>, b: Vector4<R>) -> R {
    a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3 - a.x4 * b.x4
}

/// Causal character of a nonzero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
}

/// Default classification tolerance, relative to `max(1, |a|_inf^2)`.
///
/// Jet evaluation in finite-difference mode introduces O(h^2) noise, so the
/// lightlike band cannot be taken at machine precision.
pub fn lightlike_tol<R: Real>(a: Vector4<R>) -> R {
    let s = a.norm_inf();
    R::of(1e-9) * R::one().max(s * s)
}

pub fn causal_character<R: Real>(a: Vector4<R>, tol: R) -> Result<CausalCharacter> {
    if a.norm_inf() <= tol {
        return Err(GeomError::ZeroVector);
    }
    let q = inner(a, a);
    Ok(if q > tol {
        CausalCharacter::Spacelike
    } else if q < -tol {
        CausalCharacter::Timelike
    } else {
        CausalCharacter::Lightlike
    })
}

pub fn causal_character_default<R: Real>(a: Vector4<R>) -> Result<CausalCharacter> {
    causal_character(a, lightlike_tol(a))
}

/// A pair of lightlike normals with `<n1,n1> = <n2,n2> = 0`, `<n1,n2> = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullNormalFrame<R> {
    pub n1: Vector4<R>,
    pub n2: Vector4<R>,
}

pub const NULL_FRAME_TOL: f64 = 1e-10;

impl<R: Real> NullNormalFrame<R> {
    /// The constant frame `(xi1, xi2)` of the pseudo-orthonormal base.
    pub fn standard() -> Self {
        Self {
            n1: Vector4::xi1(),
            n2: Vector4::xi2(),
        }
    }

    /// Largest deviation from the three defining conditions.
    pub fn defect(&self) -> R {
        let a = inner(self.n1, self.n1).abs();
        let b = inner(self.n2, self.n2).abs();
        let c = (inner(self.n1, self.n2) + R::one()).abs();
        a.max(b).max(c)
    }

    pub fn validate(&self, tol: R) -> Result<()> {
        let d = self.defect();
        if d <= tol {
            Ok(())
        } else {
            Err(GeomError::InvalidGrid(format!(
                "null frame conditions violated by {:.3e}",
                d.to_f64_lossy()
            )))
        }
    }
}

/// Complete a lightlike `n1` to a `NullNormalFrame` using a seed `m` from the
/// same 2-plane.
///
/// The other null direction of a Lorentzian 2-plane is unique, and the pairing
/// `<n1,n2> = -1` fixes the scale, so the result does not depend on the seed.
pub fn complete_null_frame<R: Real>(n1: Vector4<R>, m: Vector4<R>) -> Result<NullNormalFrame<R>> {
    let pair = inner(m, n1);
    let scale = n1.norm_inf().max(m.norm_inf()).max(R::one());
    if pair.abs() <= R::of(1e-12) * scale * scale {
        return Err(GeomError::DegeneratePlane {
            pairing: pair.abs().to_f64_lossy(),
        });
    }
    // remove the n1-component of <m,m>: candidate is lightlike in span{n1,m}
    let two = R::of(2.0);
    let cand = m - n1 * (inner(m, m) / (two * pair));
    let n2 = cand * (-R::one() / inner(cand, n1));
    Ok(NullNormalFrame { n1, n2 })
}

pub mod motion {
    //! Isometries of the Minkowski metric, used for congruence tests: plane
    //! rotations, a boost in the (e3,e4) plane, and translations.

    use super::{inner, Vector4};
    use crate::scalar::Real;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct LorentzMotion<R> {
        pub linear: [[R; 4]; 4],
        pub translation: Vector4<R>,
    }

    impl<R: Real> LorentzMotion<R> {
        pub fn identity() -> Self {
            let mut m = [[R::zero(); 4]; 4];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = R::one();
            }
            Self {
                linear: m,
                translation: Vector4::zero(),
            }
        }

        fn with_block(i: usize, j: usize, a: R, b: R, c: R, d: R) -> Self {
            let mut m = Self::identity();
            m.linear[i][i] = a;
            m.linear[i][j] = b;
            m.linear[j][i] = c;
            m.linear[j][j] = d;
            m
        }

        /// Rotation by `theta` in the (e1,e2) plane.
        pub fn rotation_12(theta: R) -> Self {
            let (s, c) = theta.sin_cos();
            Self::with_block(0, 1, c, -s, s, c)
        }

        /// Rotation by `theta` in the (e2,e3) plane.
        pub fn rotation_23(theta: R) -> Self {
            let (s, c) = theta.sin_cos();
            Self::with_block(1, 2, c, -s, s, c)
        }

        /// Hyperbolic rotation by rapidity `chi` in the (e3,e4) plane.
        pub fn boost_34(chi: R) -> Self {
            let (s, c) = (chi.sinh(), chi.cosh());
            Self::with_block(2, 3, c, s, s, c)
        }

        pub fn translation(t: Vector4<R>) -> Self {
            Self {
                linear: Self::identity().linear,
                translation: t,
            }
        }

        /// `self` after `other`: `(self * other)(p) = self(other(p))`.
        pub fn compose(&self, other: &Self) -> Self {
            let mut linear = [[R::zero(); 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = R::zero();
                    for (k, other_row) in other.linear.iter().enumerate() {
                        s = s + self.linear[i][k] * other_row[j];
                    }
                    linear[i][j] = s;
                }
            }
            Self {
                linear,
                translation: self.apply_vector(other.translation) + self.translation,
            }
        }

        /// Apply the linear part only (for tangent/normal vectors).
        pub fn apply_vector(&self, v: Vector4<R>) -> Vector4<R> {
            let c = v.components();
            let mut out = [R::zero(); 4];
            for (i, row) in self.linear.iter().enumerate() {
                let mut s = R::zero();
                for (k, &m) in row.iter().enumerate() {
                    s = s + m * c[k];
                }
                out[i] = s;
            }
            Vector4::from_components(out)
        }

        /// Apply the full motion (for points).
        pub fn apply_point(&self, p: Vector4<R>) -> Vector4<R> {
            self.apply_vector(p) + self.translation
        }

        /// Largest defect of `<Lv, Lw> = <v, w>` over the standard basis.
        pub fn isometry_defect(&self) -> R {
            let basis = [
                Vector4::e1(),
                Vector4::e2(),
                Vector4::e3(),
                Vector4::e4(),
            ];
            let mut worst = R::zero();
            for (i, &a) in basis.iter().enumerate() {
                for &b in &basis[i..] {
                    let d = (inner(self.apply_vector(a), self.apply_vector(b)) - inner(a, b)).abs();
                    worst = worst.max(d);
                }
            }
            worst
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type V = Vector4<f64>;

    #[test]
    fn inner_on_basis_and_null_pair() {
        assert_eq!(inner(V::e4(), V::e4()), -1.0);
        assert_eq!(inner(V::e1(), V::e2()), 0.0);
        assert!((inner(V::xi1(), V::xi2()) + 1.0).abs() < 1e-15);
        assert!(inner(V::xi1(), V::xi1()).abs() < 1e-15);
    }

    #[test]
    fn causal_characters() {
        assert_eq!(
            causal_character_default(V::e1()).unwrap(),
            CausalCharacter::Spacelike
        );
        assert_eq!(
            causal_character_default(V::e4()).unwrap(),
            CausalCharacter::Timelike
        );
        assert_eq!(
            causal_character_default(V::xi1()).unwrap(),
            CausalCharacter::Lightlike
        );
        assert!(matches!(
            causal_character_default(V::zero()),
            Err(GeomError::ZeroVector)
        ));
    }

    #[test]
    fn complete_null_frame_from_e3_seed_recovers_xi2() {
        let f = complete_null_frame(V::xi1(), V::e3()).unwrap();
        let d = (f.n2 - V::xi2()).norm_inf();
        assert!(d < 1e-14, "n2 differs from xi2 by {d:.3e}");
        f.validate(NULL_FRAME_TOL).unwrap();
    }

    #[test]
    fn complete_null_frame_fixed_point_and_degenerate() {
        let f = complete_null_frame(V::xi1(), V::xi2()).unwrap();
        assert!((f.n2 - V::xi2()).norm_inf() < 1e-15);
        assert!(matches!(
            complete_null_frame(V::xi1(), V::xi1()),
            Err(GeomError::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn completion_is_seed_independent() {
        // two admissible seeds spanning the same plane as (xi1, e3)
        let n1 = V::xi1();
        let a = complete_null_frame(n1, V::e3()).unwrap().n2;
        let m2 = V::e3() * 0.7 + n1 * 1.3;
        let b = complete_null_frame(n1, m2).unwrap().n2;
        assert!((a - b).norm_inf() < 1e-10);
    }

    #[test]
    fn motions_preserve_the_metric() {
        let m = motion::LorentzMotion::rotation_12(0.83)
            .compose(&motion::LorentzMotion::boost_34(0.41))
            .compose(&motion::LorentzMotion::rotation_23(-1.2))
            .compose(&motion::LorentzMotion::translation(V::new(
                0.3, -1.0, 2.0, 0.5,
            )));
        assert!(m.isometry_defect() < 1e-14);
    }
}
