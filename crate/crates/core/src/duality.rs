//! The duality maps between `(q, p)` and `(lambda, theta)`, and the checks
//! built on them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::poisson_bracket_fd;
use crate::error::{Error, Result};
use crate::matrix::{self, CMat, CVec, I};
use crate::params::{
    angle_diff, lambda_membership, lambda_of_z, wrap_angle, CouplingParams, DualPoint, Membership, OscillatorPoint,
    SutherlandPoint, DOMAIN_MARGIN,
};
use crate::rsvd::{self, f_squared_branches};
use crate::sutherland::{self, STRUCT_TOL};

/// Everything the forward map computes on the way.
#[derive(Debug, Clone)]
pub struct ForwardData {
    pub dual: DualPoint,
    /// `F = h^-1 g^-1 e^{-iQ(q)} V_R`.
    pub f: CVec,
    /// `max_k | |F_k|^2 - F+_k |`.
    pub branch_error: f64,
}

/// `(q, p) -> (lambda, theta)`.
pub fn forward_map(point: &SutherlandPoint, params: &CouplingParams) -> Result<DualPoint> {
    forward_full(point, params).map(|d| d.dual)
}

pub fn forward_full(point: &SutherlandPoint, params: &CouplingParams) -> Result<ForwardData> {
    let (lambda, spec) = sutherland::action_map_full(point, params)?;
    let n = params.n;
    match lambda_membership(&lambda, params, DOMAIN_MARGIN * lambda[0].max(1.0)) {
        Membership::Inside => {}
        _ => {
            return Err(Error::DegenerateTorus(format!(
                "actions {lambda:?} lie on the boundary of the chamber; use the oscillator chart"
            )))
        }
    }
    let h = rsvd::h_matrix(&lambda, params)?.h;
    let rhs = matrix::exp_iq(&point.q, -1.0).component_mul(&sutherland::v_real(n));
    let f = h.transpose() * (spec.frame.adjoint() * rhs);
    let theta: Vec<f64> = (0..n).map(|c| wrap_angle(f[n + c].arg() - f[c].arg())).collect();
    let branches = f_squared_branches(&lambda, params)?;
    let branch_error =
        (0..2 * n).map(|k| (f[k].norm_sqr() - branches.fsq_plus[k]).abs()).fold(0.0, f64::max);
    if branch_error > 1e-6 * (2 * n) as f64 {
        return Err(Error::Consistency(format!("|F|^2 misses the admissible branch by {branch_error:e}")));
    }
    Ok(ForwardData { dual: DualPoint { lambda, theta }, f, branch_error })
}

/// Everything the backward map computes on the way.
#[derive(Debug, Clone)]
pub struct BackwardData {
    pub point: SutherlandPoint,
    /// `B = -(h A h)^dagger`.
    pub b: CMat,
    /// `y = eta e^{iQ(q)} eta^-1`.
    pub y: CMat,
    /// `Y = i h Lambda h^-1`.
    pub big_y: CMat,
    /// `V = y h f`.
    pub v: CVec,
    /// `Y` after the gauge transformations, which should equal `Y(q, p)`.
    pub y_final: CMat,
    /// `V` after conjugating by `eta`, of the form `(u, -u)`.
    pub u: Vec<Complex64>,
}

/// `(lambda, theta) -> (q, p)`.
pub fn backward_map(dual: &DualPoint, params: &CouplingParams) -> Result<SutherlandPoint> {
    backward_full(dual, params).map(|d| d.point)
}

pub fn backward_full(dual: &DualPoint, params: &CouplingParams) -> Result<BackwardData> {
    let n = params.n;
    let f = rsvd::f_vector(dual, params)?;
    let a = rsvd::a_check(dual, params)?;
    let frame = rsvd::h_matrix(&dual.lambda, params)?;
    let h = &frame.h;
    let b = (h * &a * h).adjoint() * Complex64::new(-1.0, 0.0);
    let (eta, q) = matrix::cartan_decompose_gminus(&b, STRUCT_TOL)?;
    let eta_inv = eta.adjoint();
    let y = &eta * matrix::diag(&matrix::exp_iq(&q, 1.0)) * &eta_inv;
    let v = &y * h * &f;
    let big_y = h * matrix::real_diag(&frame.big_lambda) * h.transpose() * I;
    let y2 = &eta_inv * &big_y * &eta;
    let v2 = &eta_inv * &v;
    let u: Vec<Complex64> = (0..n).map(|j| v2[j]).collect();
    let bad = (0..n).map(|j| (v2[j] + v2[n + j]).norm().max((u[j].norm() - 1.0).abs())).fold(0.0, f64::max);
    if bad > 1e-6 {
        return Err(Error::Consistency(format!("gauge-fixed V is not of the form (u, -u) with |u| = 1 ({bad:e})")));
    }
    let zeta: Vec<Complex64> = (0..2 * n).map(|k| u[k % n].conj() / u[k % n].norm()).collect();
    let y_final = CMat::from_fn(2 * n, 2 * n, |r, c| zeta[r] * y2[(r, c)] / zeta[c]);
    let p: Vec<f64> = (0..n).map(|j| y_final[(j, j)].im).collect();
    let point = SutherlandPoint { q, p };
    point.validate(params, 0.0)?;
    Ok(BackwardData { point, b, y, big_y, v, y_final, u })
}

/// Central finite-difference Jacobian of `f` at `x`.
pub fn fd_jacobian<F>(f: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let f0 = f(x)?;
    let mut jac = DMatrix::zeros(f0.len(), x.len());
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        let width = xp[i] - xm[i];
        for r in 0..f0.len() {
            jac[(r, i)] = (fp[r] - fm[r]) / width;
        }
    }
    Ok(jac)
}

/// Standard symplectic matrix `[[0, I], [-I, 0]]` of size `2n`.
pub fn omega(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if c == r + n {
            1.0
        } else if r == c + n {
            -1.0
        } else {
            0.0
        }
    })
}

/// Largest entry of `J^T Omega J - s Omega`.
pub fn pullback_residual(jac: &DMatrix<f64>, scale: f64) -> f64 {
    let o = omega(jac.nrows() / 2);
    (jac.transpose() * &o * jac - o * scale).amax()
}

/// Jacobian of the forward map, with angle differences taken on the circle.
pub fn forward_jacobian(point: &SutherlandPoint, params: &CouplingParams, fd_step: f64) -> Result<DMatrix<f64>> {
    let n = point.n();
    let base = forward_map(point, params)?;
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let p = SutherlandPoint::from_slice(x);
        p.validate(params, 0.0)?;
        let d = forward_map(&p, params)?;
        // unwrap against the base point so central differences see no jumps
        let th = (0..n).map(|j| base.theta[j] + angle_diff(d.theta[j], base.theta[j]));
        Ok(d.lambda.iter().copied().chain(th).collect())
    };
    fd_jacobian(f, &point.to_vec(), fd_step)
}

/// `|J^T Omega J - Omega|` for the Jacobian `J` of the forward map.
pub fn canonicity_residual(point: &SutherlandPoint, params: &CouplingParams, fd_step: f64) -> Result<f64> {
    Ok(pullback_residual(&forward_jacobian(point, params, fd_step)?, 1.0))
}

/// `|J^T Omega J - s Omega|`; the forward map satisfies this with `s = -2`.
pub fn canonicity_residual_scaled(
    point: &SutherlandPoint,
    params: &CouplingParams,
    fd_step: f64,
    scale: f64,
) -> Result<f64> {
    Ok(pullback_residual(&forward_jacobian(point, params, fd_step)?, scale))
}

/// Values and closed forms of the invariants `phi_m` and `chi_k`.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub phi: Vec<(f64, f64)>,
    pub chi: Vec<(f64, f64)>,
    pub max_error: f64,
}

/// `phi_m` on the reduced space: zero for odd `m`, `(-1)^{m/2} (2/m) sum lambda^m` otherwise.
pub fn phi_closed(lambda: &[f64], m: usize) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        let s = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
        s * 2.0 / m as f64 * lambda.iter().map(|l| l.powi(m as i32)).sum::<f64>()
    }
}

/// `chi_k` on the reduced space, for given `|F|^2`.
pub fn chi_closed(lambda: &[f64], theta: &[f64], fsq: &[f64], kappa: f64, k: usize) -> f64 {
    let n = lambda.len();
    let mut s = 0.0;
    for j in 0..n {
        let l = lambda[j];
        let x = (fsq[j] * fsq[n + j]).sqrt();
        let root = (1.0 - kappa * kappa / (l * l)).sqrt();
        let lk = l.powi(k as i32);
        if k % 2 == 1 {
            let sign = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            s += 2.0 * sign * lk * root * x * theta[j].sin();
        } else {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * (2.0 * lk * root * x * theta[j].cos() - kappa * l.powi(k as i32 - 1) * (fsq[j] - fsq[n + j]));
        }
    }
    s
}

/// Evaluates `phi_m = Re tr(Y^m)/m` and `chi_k = Re tr(Y^k y^-1 V V^dagger y C)` on
/// the section data and compares them with the closed forms at the image point.
pub fn invariant_crosscheck(
    point: &SutherlandPoint,
    params: &CouplingParams,
    mmax: usize,
    kmax: usize,
) -> Result<InvariantReport> {
    let dual = forward_map(point, params)?;
    let fsq = f_squared_branches(&dual.lambda, params)?.fsq_plus;
    let (y, big_y, v) = sutherland::section_data(point, params)?;
    let nn = params.big_n();
    let c = matrix::exchange(params.n);
    let tail = y.adjoint() * &v * v.adjoint() * &y * c;
    let mut pow = CMat::identity(nn, nn);
    let mut phi = Vec::new();
    let mut chi = Vec::new();
    let mut max_error: f64 = 0.0;
    for k in 0..=kmax.max(mmax) {
        if k > 0 {
            pow = &pow * &big_y;
        }
        if k >= 1 && k <= mmax {
            let val = pow.trace().re / k as f64;
            let cf = phi_closed(&dual.lambda, k);
            max_error = max_error.max((val - cf).abs() / cf.abs().max(1.0));
            phi.push((val, cf));
        }
        if k <= kmax {
            let val = (&pow * &tail).trace().re;
            let cf = chi_closed(&dual.lambda, &dual.theta, &fsq, params.kappa, k);
            max_error = max_error.max((val - cf).abs() / cf.abs().max(1.0));
            chi.push((val, cf));
        }
    }
    Ok(InvariantReport { phi, chi, max_error })
}

/// Numerical rank of `d lambda` at `z`, in real coordinates `(Re z, Im z)`.
pub fn rank_of_dlambda(z: &OscillatorPoint, params: &CouplingParams) -> usize {
    let n = z.n();
    let x: Vec<f64> = z.z.iter().map(|c| c.re).chain(z.z.iter().map(|c| c.im)).collect();
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let zz = (0..n).map(|k| Complex64::new(x[k], x[n + k])).collect();
        Ok(lambda_of_z(&OscillatorPoint::new(zz), params))
    };
    let jac = fd_jacobian(f, &x, 1e-6).expect("lambda(z) is defined everywhere");
    let sv = jac.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-7 * top).count()
}

/// The matrix `X_ij = dh_i/dq_j`, the extra integrals `f_i` and the
/// brackets `{f_i, h_k}`.
#[derive(Debug, Clone, Serialize)]
pub struct SuperintegrabilityData {
    pub x: Vec<Vec<f64>>,
    pub det_x: f64,
    pub f: Vec<f64>,
    pub brackets: Vec<Vec<f64>>,
}

/// `h_k(q) = ((-1)^k / k) sum_j cos(2k q_j)`.
pub fn h_tilde_restricted(q: &[f64], k: usize) -> f64 {
    let s = if k % 2 == 0 { 1.0 } else { -1.0 };
    s / k as f64 * q.iter().map(|x| (2.0 * k as f64 * x).cos()).sum::<f64>()
}

/// `X_ij = (-1)^{i+1} 2 sin(2 i q_j)` with one-based `i`.
pub fn x_matrix(q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    DMatrix::from_fn(n, n, |i, j| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * 2.0 * (2.0 * (i + 1) as f64 * q[j]).sin()
    })
}

/// `f_i = sum_j p_j (X^-1)_{ji}`.
pub fn extra_integrals(q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let inv = x_matrix(q).try_inverse().ok_or(Error::Singular)?;
    let n = q.len();
    Ok((0..n).map(|i| (0..n).map(|j| p[j] * inv[(j, i)]).sum()).collect())
}

pub fn superintegrability_data(
    point: &SutherlandPoint,
    params: &CouplingParams,
    fd_step: f64,
) -> Result<SuperintegrabilityData> {
    point.validate(params, DOMAIN_MARGIN)?;
    let n = point.n();
    let x = x_matrix(&point.q);
    let det_x = x.determinant();
    if !(det_x.abs() > 1e-12) {
        return Err(Error::Consistency(format!("det X = {det_x:e} inside the chamber")));
    }
    let f = extra_integrals(&point.q, &point.p)?;
    let state = point.to_vec();
    let mut brackets = vec![vec![0.0; n]; n];
    for (i, row) in brackets.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            let fa = |s: &[f64]| extra_integrals(&s[..n], &s[n..]).map(|v| v[i]);
            let fb = |s: &[f64]| Ok(h_tilde_restricted(&s[..n], k + 1));
            *slot = poisson_bracket_fd(fa, fb, &state, fd_step)?;
        }
    }
    Ok(SuperintegrabilityData {
        x: (0..n).map(|i| x.row(i).iter().copied().collect()).collect(),
        det_x,
        f,
        brackets,
    })
}

/// Result of running one of the maps, with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub sutherland: SutherlandPoint,
    pub dual: DualPoint,
    pub z: OscillatorPoint,
    /// Distance between the input and its image under the other map.
    pub round_trip_error: f64,
    /// Moment-map residuals of the backward-map data.
    pub constraint_residuals: (f64, f64),
    /// `max_k | |F_k|^2 - F+_k |`.
    pub branch_error: f64,
    /// `H0(lambda, theta) + sum cos 2q`.
    pub h0_error: f64,
}

fn point_distance(a: &SutherlandPoint, b: &SutherlandPoint) -> f64 {
    a.q.iter().zip(&b.q).chain(a.p.iter().zip(&b.p)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dual_distance(a: &DualPoint, b: &DualPoint) -> f64 {
    let dl = a.lambda.iter().zip(&b.lambda).map(|(x, y)| (x - y).abs());
    let dt = a.theta.iter().zip(&b.theta).map(|(x, y)| angle_diff(*x, *y).abs());
    dl.chain(dt).fold(0.0, f64::max)
}

fn report(s: SutherlandPoint, d: DualPoint, round_trip_error: f64, params: &CouplingParams) -> Result<DualityReport> {
    let fwd = forward_full(&s, params)?;
    let bwd = backward_full(&d, params)?;
    let constraint_residuals = sutherland::momentum_residual(&bwd.y, &bwd.big_y, &bwd.v, params)?;
    let h0 = rsvd::dual_h0_closed(&d.lambda, &d.theta, params);
    let h0_error = (h0 + s.q.iter().map(|x| (2.0 * x).cos()).sum::<f64>()).abs();
    let z = crate::params::z_from_angles(&d, params)?;
    Ok(DualityReport { sutherland: s, dual: d, z, round_trip_error, constraint_residuals, branch_error: fwd.branch_error, h0_error })
}

/// Forward map followed by the backward map, with diagnostics.
pub fn forward_report(point: &SutherlandPoint, params: &CouplingParams) -> Result<DualityReport> {
    let d = forward_map(point, params)?;
    let back = backward_map(&d, params)?;
    let err = point_distance(point, &back);
    report(point.clone(), d, err, params)
}

/// Backward map followed by the forward map, with diagnostics.
pub fn backward_report(dual: &DualPoint, params: &CouplingParams) -> Result<DualityReport> {
    let s = backward_map(dual, params)?;
    let again = forward_map(&s, params)?;
    let err = dual_distance(dual, &again);
    report(s, dual.canonical(), err, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn p1() -> CouplingParams {
        CouplingParams::from_rsvd(1.0, 2.0, 0.0, 1).unwrap()
    }

    #[test]
    fn forward_at_equilibrium_is_degenerate() {
        let e = forward_map(&SutherlandPoint::new(vec![FRAC_PI_4], vec![0.0]), &p1()).unwrap_err();
        assert!(matches!(e, Error::DegenerateTorus(_)));
    }

    #[test]
    fn forward_worked_example() {
        let d = forward_map(&SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]), &p1()).unwrap();
        assert_abs_diff_eq!(d.lambda[0], 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.theta[0], 1.5 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(rsvd::dual_h0(&d, &p1()).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn round_trip_worked_example() {
        let s = SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]);
        let back = backward_map(&forward_map(&s, &p1()).unwrap(), &p1()).unwrap();
        assert_abs_diff_eq!(back.q[0], FRAC_PI_4, epsilon = 1e-8);
        assert_abs_diff_eq!(back.p[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn backward_reconstructs_lax_matrix() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 3).unwrap();
        let d = DualPoint::new(vec![6.1, 3.9, 2.0], vec![0.3, 2.0, 5.0]);
        let b = backward_full(&d, &p).unwrap();
        let lax = sutherland::lax_y(&b.point, &p).unwrap();
        assert!((&b.y_final - lax.y).norm() < 1e-8);
        let (r1, r2) = sutherland::momentum_residual(&b.y, &b.big_y, &b.v, &p).unwrap();
        assert!(r1 < 1e-9 && r2 < 1e-9, "{r1} {r2}");
    }

    #[test]
    fn identity_map_is_canonical() {
        let x = [0.3, 1.1, -0.2, 0.7];
        let jac = fd_jacobian(|v| Ok(v.to_vec()), &x, 1e-5).unwrap();
        assert!(pullback_residual(&jac, 1.0) <= 1e-12);
    }

    #[test]
    fn forward_map_scales_the_symplectic_form() {
        let s = SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]);
        assert!(canonicity_residual_scaled(&s, &p1(), 1e-5, -2.0).unwrap() < 1e-5);
    }

    #[test]
    fn invariants_match() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 3).unwrap();
        let s = SutherlandPoint::new(vec![1.2, 0.7, 0.3], vec![0.1, -0.4, 0.9]);
        let r = invariant_crosscheck(&s, &p, 4, 4).unwrap();
        assert!(r.max_error < 1e-9, "{r:?}");
        assert_eq!(r.phi[0].1, 0.0);
    }

    #[test]
    fn rank_examples() {
        let p2 = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 2).unwrap();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        assert_eq!(rank_of_dlambda(&OscillatorPoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)]), &p2), 1);
        assert_eq!(rank_of_dlambda(&OscillatorPoint::new(vec![c(0.0, 0.0); 2]), &p2), 0);
        let p3 = p2.with_n(3).unwrap();
        assert_eq!(rank_of_dlambda(&OscillatorPoint::new(vec![c(1.0, 0.2), c(-0.3, 0.5), c(0.0, 0.7)]), &p3), 3);
    }

    #[test]
    fn superintegrability_one_particle() {
        let d = superintegrability_data(&SutherlandPoint::new(vec![FRAC_PI_4], vec![0.6]), &p1(), 1e-4).unwrap();
        assert_abs_diff_eq!(d.x[0][0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.f[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(d.brackets[0][0], -1.0, epsilon = 1e-9);
    }
}
