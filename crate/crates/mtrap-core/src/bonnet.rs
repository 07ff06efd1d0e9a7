//! The inverse problem: reconstruct a marginally trapped surface of general
//! type from prescribed `nu, lambda, mu` in canonical parameters, via the
//! hyperbolic Cauchy problem for the metric roots `Phi, Psi`, the
//! compatibility equations, and moving-frame integration.

use serde::{Deserialize, Serialize};

use crate::canonical::{phi_fields, CanonicalGauge, DEGENERATE_TOL};
use crate::error::{GeomError, Result};
use crate::framefield::{geometric_functions, GeometricFunctions};
use crate::minkowski::{inner, Vector4};
use crate::numerics::{cumint4_from, interp_cubic, linspace, Mat};
use crate::scalar::Real;
use crate::surface::{first_form, SurfacePatch};

/// Prescribed invariant grids over a rectangle, with the gauge data of the
/// canonical parameters they live in. The base point must be grid-aligned.
#[derive(Debug, Clone)]
pub struct ReconstructionInput<R> {
    pub us: Vec<R>,
    pub vs: Vec<R>,
    pub nu: Mat<R>,
    pub lambda: Mat<R>,
    pub mu: Mat<R>,
    pub gauge: CanonicalGauge<R>,
}

impl<R: Real> ReconstructionInput<R> {
    pub fn from_functions(
        u_range: [R; 2],
        v_range: [R; 2],
        nu_nodes: usize,
        nv_nodes: usize,
        gauge: CanonicalGauge<R>,
        mut f: impl FnMut(R, R) -> (R, R, R),
    ) -> Result<Self> {
        let us = linspace(u_range[0], u_range[1], nu_nodes);
        let vs = linspace(v_range[0], v_range[1], nv_nodes);
        let mut nu = Mat::zeros(nu_nodes, nv_nodes);
        let mut lambda = Mat::zeros(nu_nodes, nv_nodes);
        let mut mu = Mat::zeros(nu_nodes, nv_nodes);
        for (i, &u) in us.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate() {
                let (n, l, m) = f(u, v);
                nu.set(i, j, n);
                lambda.set(i, j, l);
                mu.set(i, j, m);
            }
        }
        let input = Self {
            us,
            vs,
            nu,
            lambda,
            mu,
            gauge,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn spacing(&self) -> (R, R) {
        (self.us[1] - self.us[0], self.vs[1] - self.vs[0])
    }

    /// Grid indices of the base point (must sit on a node).
    pub fn base_indices(&self) -> Result<(usize, usize)> {
        let (hu, hv) = self.spacing();
        let fi = ((self.gauge.u0 - self.us[0]) / hu).round();
        let fj = ((self.gauge.v0 - self.vs[0]) / hv).round();
        let i = fi.to_f64_lossy() as isize;
        let j = fj.to_f64_lossy() as isize;
        let ok = |k: isize, n: usize| k >= 0 && (k as usize) < n;
        if !ok(i, self.us.len()) || !ok(j, self.vs.len()) {
            return Err(GeomError::InvalidGrid(
                "base point outside the input rectangle".into(),
            ));
        }
        let (i, j) = (i as usize, j as usize);
        let du = (self.gauge.u0 - self.us[i]).abs();
        let dv = (self.gauge.v0 - self.vs[j]).abs();
        if du > hu * R::of(1e-6) || dv > hv * R::of(1e-6) {
            return Err(GeomError::InvalidGrid(
                "base point must be aligned with a grid node".into(),
            ));
        }
        Ok((i, j))
    }

    pub fn validate(&self) -> Result<()> {
        if self.us.len() < 5 || self.vs.len() < 5 {
            return Err(GeomError::InvalidGrid(
                "reconstruction needs at least 5 nodes per direction".into(),
            ));
        }
        self.base_indices()?;
        for i in 0..self.nu.nu() {
            for j in 0..self.nu.nv() {
                let margin = crate::canonical::general_type_margin(
                    self.nu.at(i, j),
                    self.lambda.at(i, j),
                );
                if self.mu.at(i, j).abs() <= R::of(1e-14) {
                    return Err(GeomError::InvalidGrid(format!(
                        "mu vanishes at node ({i}, {j})"
                    )));
                }
                if margin < R::of(DEGENERATE_TOL) {
                    return Err(GeomError::DegenerateType {
                        margin: margin.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Solver controls. `refine` runs the row-marching scheme on an internally
/// refined grid (bicubic resampling of the invariants) and restricts back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<R> {
    pub refine: usize,
    pub fixed_point_tol: R,
    pub max_iterations: usize,
    pub compatibility_threshold: R,
    /// Metric drift limit factor: `limit = factor * step^2`.
    pub drift_limit_factor: R,
}

impl<R: Real> Default for SolverOptions<R> {
    fn default() -> Self {
        Self {
            refine: 4,
            fixed_point_tol: R::of(1e-12),
            max_iterations: 50,
            compatibility_threshold: R::of(1e-3),
            drift_limit_factor: R::of(100.0),
        }
    }
}

/// Initial data of the Cauchy problem: `g1` on the `v0` row and `g2` on the
/// `u0` column, built from line quadrature of the coefficient functions.
pub fn initial_data<R: Real>(input: &ReconstructionInput<R>) -> Result<(Vec<R>, Vec<R>)> {
    let (hu, hv) = input.spacing();
    let (i0, j0) = input.base_indices()?;
    let phis = phi_fields(
        &input.nu,
        &input.lambda,
        &input.mu,
        hu,
        hv,
        R::of(DEGENERATE_TOL),
    )?;
    let c = input.gauge.c();
    let row: Vec<R> = (0..input.us.len())
        .map(|i| c * phis[2].at(i, j0) + phis[3].at(i, j0))
        .collect();
    let col: Vec<R> = (0..input.vs.len())
        .map(|j| phis[0].at(i0, j) + phis[1].at(i0, j) / c)
        .collect();
    let g1 = cumint4_from(&row, hu, i0)
        .into_iter()
        .map(|x| (x - input.gauge.c1).exp())
        .collect();
    let g2 = cumint4_from(&col, hv, j0)
        .into_iter()
        .map(|x| (x - input.gauge.c2).exp())
        .collect();
    Ok((g1, g2))
}

/// Discrete solution of the hyperbolic system.
#[derive(Debug, Clone)]
pub struct CauchySolution<R> {
    pub phi_big: Mat<R>,
    pub psi_big: Mat<R>,
    /// max PDE defect at cell centers of the I/O grid
    pub residual: R,
    pub max_row_iterations: usize,
}

/// Solve `Phi_v = phi1 Phi + phi2 Psi`, `Psi_u = phi3 Phi + phi4 Psi` with
/// `Phi(u, v0) = g1`, `Psi(u0, v) = g2` by trapezoidal row-marching with a
/// per-row fixed point.
pub fn solve_cauchy<R: Real>(
    input: &ReconstructionInput<R>,
    opts: &SolverOptions<R>,
) -> Result<CauchySolution<R>> {
    input.validate()?;
    let refine = opts.refine.max(1);
    let fine = refine_input(input, refine)?;
    let (hu, hv) = fine.spacing();
    let (i0, j0) = fine.base_indices()?;
    let phis = phi_fields(
        &fine.nu,
        &fine.lambda,
        &fine.mu,
        hu,
        hv,
        R::of(DEGENERATE_TOL),
    )?;
    let (g1, g2) = initial_data(&fine)?;
    let (phi_f, psi_f, iters) = march(&fine, &phis, &g1, &g2, (i0, j0), opts)?;

    // restrict to the I/O grid
    let (n_u, n_v) = (input.us.len(), input.vs.len());
    let phi_big = Mat::from_fn(n_u, n_v, |i, j| phi_f.at(i * refine, j * refine));
    let psi_big = Mat::from_fn(n_u, n_v, |i, j| psi_f.at(i * refine, j * refine));

    let residual = cauchy_residual(input, &phi_big, &psi_big)?;
    Ok(CauchySolution {
        phi_big,
        psi_big,
        residual,
        max_row_iterations: iters,
    })
}

/// Resample the invariant grids on a `refine`-times finer grid (cubic in each
/// direction).
fn refine_input<R: Real>(
    input: &ReconstructionInput<R>,
    refine: usize,
) -> Result<ReconstructionInput<R>> {
    if refine == 1 {
        return Ok(input.clone());
    }
    let (n_u, n_v) = (input.us.len(), input.vs.len());
    let (m_u, m_v) = ((n_u - 1) * refine + 1, (n_v - 1) * refine + 1);
    let us = linspace(input.us[0], *input.us.last().unwrap(), m_u);
    let vs = linspace(input.vs[0], *input.vs.last().unwrap(), m_v);
    let rf = R::of(refine as f64);
    let up = |m: &Mat<R>| {
        // rows first (v-direction), then columns (u-direction)
        let rows = Mat::from_fn(n_u, m_v, |i, j| {
            interp_cubic(&m.row(i), R::of(j as f64) / rf)
        });
        Mat::from_fn(m_u, m_v, |i, j| {
            interp_cubic(&rows.col(j), R::of(i as f64) / rf)
        })
    };
    Ok(ReconstructionInput {
        us,
        vs,
        nu: up(&input.nu),
        lambda: up(&input.lambda),
        mu: up(&input.mu),
        gauge: input.gauge,
    })
}

fn march<R: Real>(
    input: &ReconstructionInput<R>,
    phis: &[Mat<R>; 4],
    g1: &[R],
    g2: &[R],
    base: (usize, usize),
    opts: &SolverOptions<R>,
) -> Result<(Mat<R>, Mat<R>, usize)> {
    let (n_u, n_v) = (input.us.len(), input.vs.len());
    let (hu, hv) = input.spacing();
    let (i0, j0) = base;
    let half = R::of(0.5);
    let mut phi = Mat::zeros(n_u, n_v);
    let mut psi = Mat::zeros(n_u, n_v);
    for i in 0..n_u {
        phi.set(i, j0, g1[i]);
    }
    for j in 0..n_v {
        psi.set(i0, j, g2[j]);
    }
    let (p1, p2, p3, p4) = (&phis[0], &phis[1], &phis[2], &phis[3]);

    // trapezoidal u-march of Psi along one row, Phi on that row known
    let march_psi_row = |phi: &Mat<R>, psi: &mut Mat<R>, j: usize| {
        for i in i0..n_u - 1 {
            let f_here = p3.at(i, j) * phi.at(i, j) + p4.at(i, j) * psi.at(i, j);
            let rhs = psi.at(i, j) + hu * half * (f_here + p3.at(i + 1, j) * phi.at(i + 1, j));
            psi.set(i + 1, j, rhs / (R::one() - hu * half * p4.at(i + 1, j)));
        }
        for i in (1..=i0).rev() {
            let f_here = p3.at(i, j) * phi.at(i, j) + p4.at(i, j) * psi.at(i, j);
            let rhs = psi.at(i, j) - hu * half * (f_here + p3.at(i - 1, j) * phi.at(i - 1, j));
            psi.set(i - 1, j, rhs / (R::one() + hu * half * p4.at(i - 1, j)));
        }
    };
    march_psi_row(&phi, &mut psi, j0);

    let mut max_iters = 0usize;
    let mut advance = |phi: &mut Mat<R>, psi: &mut Mat<R>, jf: usize, jt: usize| -> Result<()> {
        let k = if jt > jf { hv } else { -hv };
        for i in 0..n_u {
            psi.set(i, jt, psi.at(i, jf)); // predictor
        }
        psi.set(i0, jt, g2[jt]);
        for it in 0..opts.max_iterations {
            // implicit-trapezoid Phi update in v (linear in the new value)
            for i in 0..n_u {
                let f_old = p1.at(i, jf) * phi.at(i, jf) + p2.at(i, jf) * psi.at(i, jf);
                let rhs = phi.at(i, jf)
                    + k * half * (f_old + p2.at(i, jt) * psi.at(i, jt));
                phi.set(i, jt, rhs / (R::one() - k * half * p1.at(i, jt)));
            }
            let old: Vec<R> = (0..n_u).map(|i| psi.at(i, jt)).collect();
            march_psi_row(phi, psi, jt);
            let mut diff = R::zero();
            for (i, &o) in old.iter().enumerate() {
                diff = diff.max((psi.at(i, jt) - o).abs());
            }
            if diff < opts.fixed_point_tol {
                max_iters = max_iters.max(it + 1);
                return Ok(());
            }
        }
        Err(GeomError::NoConvergence {
            row: jt,
            iterations: opts.max_iterations,
        })
    };
    for j in (1..=j0).rev() {
        advance(&mut phi, &mut psi, j, j - 1)?;
    }
    for j in j0..n_v - 1 {
        advance(&mut phi, &mut psi, j, j + 1)?;
    }
    Ok((phi, psi, max_iters))
}

/// Max PDE defect at cell centers (midpoint differences vs averaged right
/// sides).
fn cauchy_residual<R: Real>(
    input: &ReconstructionInput<R>,
    phi: &Mat<R>,
    psi: &Mat<R>,
) -> Result<R> {
    let (hu, hv) = input.spacing();
    let phis = phi_fields(
        &input.nu,
        &input.lambda,
        &input.mu,
        hu,
        hv,
        R::of(DEGENERATE_TOL),
    )?;
    let (n_u, n_v) = (phi.nu(), phi.nv());
    let quarter = R::of(0.25);
    let half = R::of(0.5);
    let mut worst = R::zero();
    for i in 0..n_u - 1 {
        for j in 0..n_v - 1 {
            let avg = |m: &Mat<R>| {
                (m.at(i, j) + m.at(i + 1, j) + m.at(i, j + 1) + m.at(i + 1, j + 1)) * quarter
            };
            let phi_v = (phi.at(i, j + 1) + phi.at(i + 1, j + 1)
                - phi.at(i, j)
                - phi.at(i + 1, j))
                * (half / hv);
            let psi_u = (psi.at(i + 1, j) + psi.at(i + 1, j + 1)
                - psi.at(i, j)
                - psi.at(i, j + 1))
                * (half / hu);
            let r1 = phi_v - (avg(&phis[0]) * avg(phi) + avg(&phis[1]) * avg(psi));
            let r2 = psi_u - (avg(&phis[2]) * avg(phi) + avg(&phis[3]) * avg(psi));
            worst = worst.max(r1.abs()).max(r2.abs());
        }
    }
    Ok(worst)
}

/// Sup-norms of the two compatibility equations, 4th-order central
/// differences.
pub fn compatibility_residuals<R: Real>(
    phi: &Mat<R>,
    psi: &Mat<R>,
    input: &ReconstructionInput<R>,
) -> (R, R) {
    let (hu, hv) = input.spacing();
    let two = R::of(2.0);
    let phi_v = phi.d_dv(hv);
    let psi_u = psi.d_du(hu);
    let a = phi_v.zip(psi, |x, y| x / y);
    let b = psi_u.zip(phi, |x, y| x / y);
    let a_v = a.d_dv(hv);
    let b_u = b.d_du(hu);
    let ln_ratio = psi.zip(phi, |p, q| (p.abs() / q.abs()).ln());
    let ln_uv = ln_ratio.d_dv(hv).d_du(hu);
    let (n_u, n_v) = (phi.nu(), phi.nv());
    let mut r1 = Mat::zeros(n_u, n_v);
    let mut r2 = Mat::zeros(n_u, n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            let pp = phi.at(i, j) * psi.at(i, j);
            r1.set(
                i,
                j,
                two * input.lambda.at(i, j) * input.mu.at(i, j)
                    + (a_v.at(i, j) + b_u.at(i, j)) / pp,
            );
            r2.set(
                i,
                j,
                two * input.nu.at(i, j) * input.mu.at(i, j) - two * ln_uv.at(i, j) / pp,
            );
        }
    }
    (r1.max_abs(), r2.max_abs())
}

/// `gamma` and `beta` grids from the metric roots and `mu`.
#[derive(Debug, Clone)]
pub struct DerivedCoefficients<R> {
    pub gamma1: Mat<R>,
    pub gamma2: Mat<R>,
    pub beta1: Mat<R>,
    pub beta2: Mat<R>,
}

pub fn derived_coefficients<R: Real>(
    phi: &Mat<R>,
    psi: &Mat<R>,
    mu: &Mat<R>,
    hu: R,
    hv: R,
) -> DerivedCoefficients<R> {
    let phi_v = phi.d_dv(hv);
    let psi_u = psi.d_du(hu);
    let ln_mu = mu.map(|m| m.abs().ln());
    let ln_mu_u = ln_mu.d_du(hu);
    let ln_mu_v = ln_mu.d_dv(hv);
    let (n_u, n_v) = (phi.nu(), phi.nv());
    let two = R::of(2.0);
    let mut out = DerivedCoefficients {
        gamma1: Mat::zeros(n_u, n_v),
        gamma2: Mat::zeros(n_u, n_v),
        beta1: Mat::zeros(n_u, n_v),
        beta2: Mat::zeros(n_u, n_v),
    };
    for i in 0..n_u {
        for j in 0..n_v {
            let pp = phi.at(i, j) * psi.at(i, j);
            out.gamma1.set(i, j, -phi_v.at(i, j) / pp);
            out.gamma2.set(i, j, -psi_u.at(i, j) / pp);
            out.beta1.set(
                i,
                j,
                (psi.at(i, j) * ln_mu_u.at(i, j) + two * psi_u.at(i, j)) / pp,
            );
            out.beta2.set(
                i,
                j,
                (phi.at(i, j) * ln_mu_v.at(i, j) + two * phi_v.at(i, j)) / pp,
            );
        }
    }
    out
}

/// A moving frame `(x, y, n1, n2)` per node.
#[derive(Debug, Clone)]
pub struct FrameGrid<R> {
    pub nu_nodes: usize,
    pub nv_nodes: usize,
    frames: Vec<[Vector4<R>; 4]>,
}

impl<R: Real> FrameGrid<R> {
    fn zeros(nu_nodes: usize, nv_nodes: usize) -> Self {
        Self {
            nu_nodes,
            nv_nodes,
            frames: vec![[Vector4::zero(); 4]; nu_nodes * nv_nodes],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> [Vector4<R>; 4] {
        self.frames[i * self.nv_nodes + j]
    }

    fn set(&mut self, i: usize, j: usize, f: [Vector4<R>; 4]) {
        self.frames[i * self.nv_nodes + j] = f;
    }

    /// Largest deviation of the ten Gram conditions over all nodes.
    pub fn metric_drift(&self) -> R {
        let one = R::one();
        let mut worst = R::zero();
        for f in &self.frames {
            let [x, y, n1, n2] = *f;
            let vals = [
                inner(x, x) - one,
                inner(y, y) - one,
                inner(x, y),
                inner(x, n1),
                inner(x, n2),
                inner(y, n1),
                inner(y, n2),
                inner(n1, n1),
                inner(n2, n2),
                inner(n1, n2) + one,
            ];
            for v in vals {
                worst = worst.max(v.abs());
            }
        }
        worst
    }
}

/// Coefficient bundle the frame equations read from.
pub struct FrameCoefficients<'a, R> {
    pub sqrt_e: &'a Mat<R>,
    pub sqrt_g: &'a Mat<R>,
    pub nu: &'a Mat<R>,
    pub lambda: &'a Mat<R>,
    pub mu: &'a Mat<R>,
    pub gamma1: &'a Mat<R>,
    pub gamma2: &'a Mat<R>,
    pub beta1: &'a Mat<R>,
    pub beta2: &'a Mat<R>,
}

#[derive(Clone, Copy)]
struct CoeffPoint<R> {
    se: R,
    sg: R,
    nu: R,
    lam: R,
    mu: R,
    g1: R,
    g2: R,
    b1: R,
    b2: R,
}

impl<'a, R: Real> FrameCoefficients<'a, R> {
    fn at_row(&self, j: usize, s: R) -> CoeffPoint<R> {
        let pick = |m: &Mat<R>| interp_cubic(&m.col(j), s);
        CoeffPoint {
            se: pick(self.sqrt_e),
            sg: pick(self.sqrt_g),
            nu: pick(self.nu),
            lam: pick(self.lambda),
            mu: pick(self.mu),
            g1: pick(self.gamma1),
            g2: pick(self.gamma2),
            b1: pick(self.beta1),
            b2: pick(self.beta2),
        }
    }

    fn at_col(&self, i: usize, s: R) -> CoeffPoint<R> {
        let pick = |m: &Mat<R>| interp_cubic(&m.row(i), s);
        CoeffPoint {
            se: pick(self.sqrt_e),
            sg: pick(self.sqrt_g),
            nu: pick(self.nu),
            lam: pick(self.lambda),
            mu: pick(self.mu),
            g1: pick(self.gamma1),
            g2: pick(self.gamma2),
            b1: pick(self.beta1),
            b2: pick(self.beta2),
        }
    }
}

/// Frame derivative in the u-direction: `d_u F = sqrtE * A(F)` with `A` read
/// off the Frenet-type formulas.
fn gen_u<R: Real>(c: &CoeffPoint<R>, f: &[Vector4<R>; 4]) -> [Vector4<R>; 4] {
    let [x, y, n1, n2] = *f;
    let one = R::one();
    [
        (y * c.g1 + n1 * (one + c.nu)) * c.se,
        (x * (-c.g1) + n1 * c.lam + n2 * c.mu) * c.se,
        (y * c.mu + n1 * c.b1) * c.se,
        (x * (one + c.nu) + y * c.lam - n2 * c.b1) * c.se,
    ]
}

/// Frame derivative in the v-direction: `d_v F = sqrtG * B(F)`.
fn gen_v<R: Real>(c: &CoeffPoint<R>, f: &[Vector4<R>; 4]) -> [Vector4<R>; 4] {
    let [x, y, n1, n2] = *f;
    let one = R::one();
    [
        (y * (-c.g2) + n1 * c.lam + n2 * c.mu) * c.sg,
        (x * c.g2 + n1 * (one - c.nu)) * c.sg,
        (x * c.mu + n1 * c.b2) * c.sg,
        (x * c.lam + y * (one - c.nu) - n2 * c.b2) * c.sg,
    ]
}

fn rk4_step<R: Real>(
    f: [Vector4<R>; 4],
    h: R,
    eval: impl Fn(R, &[Vector4<R>; 4]) -> [Vector4<R>; 4],
) -> [Vector4<R>; 4] {
    let add = |a: &[Vector4<R>; 4], b: &[Vector4<R>; 4], s: R| {
        [
            a[0] + b[0] * s,
            a[1] + b[1] * s,
            a[2] + b[2] * s,
            a[3] + b[3] * s,
        ]
    };
    let half = R::of(0.5);
    let k1 = eval(R::zero(), &f);
    let k2 = eval(half, &add(&f, &k1, h * half));
    let k3 = eval(half, &add(&f, &k2, h * half));
    let k4 = eval(R::one(), &add(&f, &k3, h));
    let sixth = h / R::of(6.0);
    [
        f[0] + (k1[0] + (k2[0] + k3[0]) * R::of(2.0) + k4[0]) * sixth,
        f[1] + (k1[1] + (k2[1] + k3[1]) * R::of(2.0) + k4[1]) * sixth,
        f[2] + (k1[2] + (k2[2] + k3[2]) * R::of(2.0) + k4[2]) * sixth,
        f[3] + (k1[3] + (k2[3] + k3[3]) * R::of(2.0) + k4[3]) * sixth,
    ]
}

/// RK4 march of the frame field: along the `v0` row in u, then along v for
/// every u-column. Coefficients between nodes come from cubic interpolation.
pub fn integrate_frame<R: Real>(
    coeffs: &FrameCoefficients<'_, R>,
    us: &[R],
    vs: &[R],
    base: (usize, usize),
    f0: [Vector4<R>; 4],
    drift_limit: R,
) -> Result<(FrameGrid<R>, R, R)> {
    let (n_u, n_v) = (us.len(), vs.len());
    let (hu, hv) = (us[1] - us[0], vs[1] - vs[0]);
    let (i0, j0) = base;
    let mut frames = FrameGrid::zeros(n_u, n_v);
    frames.set(i0, j0, f0);
    // u-march along the base row
    for i in i0..n_u - 1 {
        let f = frames.at(i, j0);
        let fi = R::of(i as f64);
        let next = rk4_step(f, hu, |s, ff| {
            gen_u(&coeffs.at_row(j0, fi + s), ff)
        });
        frames.set(i + 1, j0, next);
    }
    for i in (1..=i0).rev() {
        let f = frames.at(i, j0);
        let fi = R::of(i as f64);
        let next = rk4_step(f, -hu, |s, ff| {
            gen_u(&coeffs.at_row(j0, fi - s), ff)
        });
        frames.set(i - 1, j0, next);
    }
    // v-marches per column
    for i in 0..n_u {
        for j in j0..n_v - 1 {
            let f = frames.at(i, j);
            let fj = R::of(j as f64);
            let next = rk4_step(f, hv, |s, ff| gen_v(&coeffs.at_col(i, fj + s), ff));
            frames.set(i, j + 1, next);
        }
        for j in (1..=j0).rev() {
            let f = frames.at(i, j);
            let fj = R::of(j as f64);
            let next = rk4_step(f, -hv, |s, ff| gen_v(&coeffs.at_col(i, fj - s), ff));
            frames.set(i, j - 1, next);
        }
    }

    let drift = frames.metric_drift();
    if drift > drift_limit {
        return Err(GeomError::MetricDriftExceeded {
            drift: drift.to_f64_lossy(),
            limit: drift_limit.to_f64_lossy(),
        });
    }

    // commutator residual: || d_v (sqrtE A F) - d_u (sqrtG B F) ||_inf interior
    let mut p = vec![[Vector4::<R>::zero(); 4]; n_u * n_v];
    let mut q = vec![[Vector4::<R>::zero(); 4]; n_u * n_v];
    for i in 0..n_u {
        for j in 0..n_v {
            let c = coeffs.at_col(i, R::of(j as f64));
            let f = frames.at(i, j);
            p[i * n_v + j] = gen_u(&c, &f);
            q[i * n_v + j] = gen_v(&c, &f);
        }
    }
    let mut comm = R::zero();
    for a in 0..4 {
        for comp in 0..4 {
            let pm = Mat::from_fn(n_u, n_v, |i, j| p[i * n_v + j][a].components()[comp]);
            let qm = Mat::from_fn(n_u, n_v, |i, j| q[i * n_v + j][a].components()[comp]);
            let d = pm.d_dv(hv).zip(&qm.d_du(hu), |x, y| x - y);
            comm = comm.max(d.max_abs_interior(2));
        }
    }
    Ok((frames, drift, comm))
}

/// Path-integrate `z_u = Phi x`, `z_v = Psi y` (base row first, then columns);
/// the closure defect re-integrates in the other order.
pub fn integrate_position<R: Real>(
    phi: &Mat<R>,
    psi: &Mat<R>,
    frames: &FrameGrid<R>,
    us: &[R],
    vs: &[R],
    base: (usize, usize),
) -> (Vec<Vector4<R>>, R) {
    let (n_u, n_v) = (us.len(), vs.len());
    let (hu, hv) = (us[1] - us[0], vs[1] - vs[0]);
    let (i0, j0) = base;
    let mut z = vec![Vector4::<R>::zero(); n_u * n_v];
    let mut z2 = vec![Vector4::<R>::zero(); n_u * n_v];
    // z_u = Phi x along the base row
    for comp in 0..4 {
        let row: Vec<R> = (0..n_u)
            .map(|i| phi.at(i, j0) * frames.at(i, j0)[0].components()[comp])
            .collect();
        let iu = cumint4_from(&row, hu, i0);
        for i in 0..n_u {
            let mut c = z[i * n_v + j0].components();
            c[comp] = iu[i];
            z[i * n_v + j0] = Vector4::from_components(c);
        }
        // columns
        for i in 0..n_u {
            let col: Vec<R> = (0..n_v)
                .map(|j| psi.at(i, j) * frames.at(i, j)[1].components()[comp])
                .collect();
            let iv = cumint4_from(&col, hv, j0);
            for j in 0..n_v {
                let mut c = z[i * n_v + j].components();
                c[comp] = iu[i] + iv[j];
                z[i * n_v + j] = Vector4::from_components(c);
            }
        }
        // other order: base column first, then rows
        let col0: Vec<R> = (0..n_v)
            .map(|j| psi.at(i0, j) * frames.at(i0, j)[1].components()[comp])
            .collect();
        let iv0 = cumint4_from(&col0, hv, j0);
        for j in 0..n_v {
            let row: Vec<R> = (0..n_u)
                .map(|i| phi.at(i, j) * frames.at(i, j)[0].components()[comp])
                .collect();
            let iu_j = cumint4_from(&row, hu, i0);
            for i in 0..n_u {
                let mut c = z2[i * n_v + j].components();
                c[comp] = iv0[j] + iu_j[i];
                z2[i * n_v + j] = Vector4::from_components(c);
            }
        }
    }
    let mut closure = R::zero();
    for (a, b) in z.iter().zip(&z2) {
        closure = closure.max((*a - *b).norm_inf());
    }
    (z, closure)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<R> {
    pub cauchy_residual: R,
    pub compatibility_residual_1: R,
    pub compatibility_residual_2: R,
    pub frame_commutator_residual: R,
    pub metric_drift: R,
    pub closure_defect: R,
    pub min_positivity_u: R,
    pub min_positivity_v: R,
}

/// Full reconstruction output.
pub struct ReconstructionResult<R> {
    pub us: Vec<R>,
    pub vs: Vec<R>,
    pub base: (usize, usize),
    pub phi_big: Mat<R>,
    pub psi_big: Mat<R>,
    pub e: Mat<R>,
    pub g: Mat<R>,
    pub nu: Mat<R>,
    pub lambda: Mat<R>,
    pub mu: Mat<R>,
    pub gamma1: Mat<R>,
    pub gamma2: Mat<R>,
    pub beta1: Mat<R>,
    pub beta2: Mat<R>,
    pub frames: FrameGrid<R>,
    pub positions: Vec<Vector4<R>>,
    pub diagnostics: Diagnostics<R>,
}

impl<R: Real> ReconstructionResult<R> {
    pub fn position(&self, i: usize, j: usize) -> Vector4<R> {
        self.positions[i * self.vs.len() + j]
    }
}

/// Default initial frame: `x = e1, y = e2, n1 = xi1, n2 = xi2` (satisfies the
/// Gram conditions exactly).
pub fn default_initial_frame<R: Real>() -> [Vector4<R>; 4] {
    [
        Vector4::e1(),
        Vector4::e2(),
        Vector4::xi1(),
        Vector4::xi2(),
    ]
}

pub fn reconstruct<R: Real>(
    input: &ReconstructionInput<R>,
    opts: &SolverOptions<R>,
) -> Result<ReconstructionResult<R>> {
    reconstruct_with_frame(input, opts, default_initial_frame())
}

pub fn reconstruct_with_frame<R: Real>(
    input: &ReconstructionInput<R>,
    opts: &SolverOptions<R>,
    f0: [Vector4<R>; 4],
) -> Result<ReconstructionResult<R>> {
    let sol = solve_cauchy(input, opts)?;
    let (res1, res2) = compatibility_residuals(&sol.phi_big, &sol.psi_big, input);
    if res1 > opts.compatibility_threshold || res2 > opts.compatibility_threshold {
        return Err(GeomError::CompatibilityViolated {
            res1: res1.to_f64_lossy(),
            res2: res2.to_f64_lossy(),
            threshold: opts.compatibility_threshold.to_f64_lossy(),
        });
    }
    for v in sol.phi_big.data().iter().chain(sol.psi_big.data()) {
        if *v <= R::zero() {
            return Err(GeomError::NotSpacelike {
                e: v.to_f64_lossy(),
                g: v.to_f64_lossy(),
                w2: 0.0,
            });
        }
    }
    let (hu, hv) = input.spacing();
    let base = input.base_indices()?;
    let derived = derived_coefficients(&sol.phi_big, &sol.psi_big, &input.mu, hu, hv);
    let coeffs = FrameCoefficients {
        sqrt_e: &sol.phi_big,
        sqrt_g: &sol.psi_big,
        nu: &input.nu,
        lambda: &input.lambda,
        mu: &input.mu,
        gamma1: &derived.gamma1,
        gamma2: &derived.gamma2,
        beta1: &derived.beta1,
        beta2: &derived.beta2,
    };
    let step = hu.max(hv);
    let drift_limit = opts.drift_limit_factor * step * step;
    let (frames, drift, comm) =
        integrate_frame(&coeffs, &input.us, &input.vs, base, f0, drift_limit)?;
    let (positions, closure) =
        integrate_position(&sol.phi_big, &sol.psi_big, &frames, &input.us, &input.vs, base);

    // positivity diagnostics of the reconstruction theory
    let ln_mu_u = input.mu.map(|m| m.abs().ln()).d_du(hu);
    let ln_mu_v = input.mu.map(|m| m.abs().ln()).d_dv(hv);
    let mut min_pu = R::infinity();
    let mut min_pv = R::infinity();
    let floor = R::of(1e-12);
    for i in 0..input.us.len() {
        for j in 0..input.vs.len() {
            // mu_u / (mu (2 gamma2 + beta1)) reduces to Phi when mu_u != 0
            let du = ln_mu_u.at(i, j);
            let dv = ln_mu_v.at(i, j);
            let den_u = R::of(2.0) * derived.gamma2.at(i, j) + derived.beta1.at(i, j);
            let den_v = R::of(2.0) * derived.gamma1.at(i, j) + derived.beta2.at(i, j);
            if den_u.abs() > floor && du.abs() > floor {
                min_pu = min_pu.min(du / den_u);
            }
            if den_v.abs() > floor && dv.abs() > floor {
                min_pv = min_pv.min(dv / den_v);
            }
        }
    }

    Ok(ReconstructionResult {
        e: sol.phi_big.map(|x| x * x),
        g: sol.psi_big.map(|x| x * x),
        nu: input.nu.clone(),
        lambda: input.lambda.clone(),
        mu: input.mu.clone(),
        gamma1: derived.gamma1,
        gamma2: derived.gamma2,
        beta1: derived.beta1,
        beta2: derived.beta2,
        frames,
        positions,
        diagnostics: Diagnostics {
            cauchy_residual: sol.residual,
            compatibility_residual_1: res1,
            compatibility_residual_2: res2,
            frame_commutator_residual: comm,
            metric_drift: drift,
            closure_defect: closure,
            min_positivity_u: min_pu,
            min_positivity_v: min_pv,
        },
        us: input.us.clone(),
        vs: input.vs.clone(),
        base,
        phi_big: sol.phi_big,
        psi_big: sol.psi_big,
    })
}

/// Motion-invariant congruence table: sup-norm differences of the nine
/// invariant functions between a reconstruction and a reference patch
/// evaluated on the same parameter grid. Raw coordinates are never compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTable<R> {
    pub e: R,
    pub g: R,
    pub nu: R,
    pub lambda: R,
    pub mu: R,
    pub gamma1: R,
    pub gamma2: R,
    pub beta1: R,
    pub beta2: R,
}

impl<R: Real> InvariantTable<R> {
    pub fn max(&self) -> R {
        [
            self.e,
            self.g,
            self.nu,
            self.lambda,
            self.mu,
            self.gamma1,
            self.gamma2,
            self.beta1,
            self.beta2,
        ]
        .iter()
        .fold(R::zero(), |a, &b| a.max(b))
    }

    pub fn rows(&self) -> [(&'static str, R); 9] {
        [
            ("E", self.e),
            ("G", self.g),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ]
    }
}

pub fn compare_invariants<R: Real>(
    result: &ReconstructionResult<R>,
    reference: &SurfacePatch<R>,
) -> Result<InvariantTable<R>> {
    let mut table = InvariantTable {
        e: R::zero(),
        g: R::zero(),
        nu: R::zero(),
        lambda: R::zero(),
        mu: R::zero(),
        gamma1: R::zero(),
        gamma2: R::zero(),
        beta1: R::zero(),
        beta2: R::zero(),
    };
    for (i, &u) in result.us.iter().enumerate() {
        for (j, &v) in result.vs.iter().enumerate() {
            let jet = reference.jet(u, v)?;
            let ff = first_form(&jet)?;
            let gf: GeometricFunctions<R> = geometric_functions(reference, u, v)?;
            table.e = table.e.max((result.e.at(i, j) - ff.e).abs());
            table.g = table.g.max((result.g.at(i, j) - ff.g).abs());
            table.nu = table.nu.max((result.nu.at(i, j) - gf.nu).abs());
            table.lambda = table.lambda.max((result.lambda.at(i, j) - gf.lambda).abs());
            table.mu = table.mu.max((result.mu.at(i, j) - gf.mu).abs());
            table.gamma1 = table.gamma1.max((result.gamma1.at(i, j) - gf.gamma1).abs());
            table.gamma2 = table.gamma2.max((result.gamma2.at(i, j) - gf.gamma2).abs());
            table.beta1 = table.beta1.max((result.beta1.at(i, j) - gf.beta1).abs());
            table.beta2 = table.beta2.max((result.beta2.at(i, j) - gf.beta2).abs());
        }
    }
    Ok(table)
}

/// Low-level Goursat solve from explicit coefficient grids and boundary data;
/// used by manufactured-solution tests.
pub fn solve_cauchy_system<R: Real>(
    us: &[R],
    vs: &[R],
    phis: &[Mat<R>; 4],
    g1: &[R],
    g2: &[R],
    base: (usize, usize),
    opts: &SolverOptions<R>,
) -> Result<(Mat<R>, Mat<R>)> {
    let input = ReconstructionInput {
        us: us.to_vec(),
        vs: vs.to_vec(),
        nu: Mat::zeros(us.len(), vs.len()),
        lambda: Mat::zeros(us.len(), vs.len()),
        mu: Mat::zeros(us.len(), vs.len()),
        gauge: CanonicalGauge::new(us[base.0], vs[base.1], R::zero(), R::zero()),
    };
    let (phi, psi, _) = march(&input, phis, g1, g2, base, opts)?;
    Ok((phi, psi))
}
