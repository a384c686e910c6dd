//! The Sutherland side: Lax matrix, commuting Hamiltonians and actions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, CMat, CVec, PairedSpectrum, I};
use crate::params::{lambda_membership, CouplingParams, Membership, SutherlandPoint, DOMAIN_MARGIN};

/// Tolerance of the structure checks fed by exact constructions.
pub(crate) const STRUCT_TOL: f64 = 1e-10;

/// `Y = K - i kappa C` together with its `g-` part `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SutherlandLax {
    pub y: CMat,
    pub k: CMat,
}

/// `V_R = (1, ..., 1, -1, ..., -1)`.
pub fn v_real(n: usize) -> CVec {
    CVec::from_fn(2 * n, |k, _| Complex64::new(if k < n { 1.0 } else { -1.0 }, 0.0))
}

/// The Lax matrix `Y(q, p)`.
pub fn lax_y(point: &SutherlandPoint, params: &CouplingParams) -> Result<SutherlandLax> {
    point.validate(params, DOMAIN_MARGIN)?;
    let n = params.n;
    let (mu, nu, kappa) = (params.mu, params.nu, params.kappa);
    let q = &point.q;
    let mut k = CMat::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let (kab, kanb) = if a == b {
                let s2 = (2.0 * q[a]).sin();
                (Complex64::new(0.0, point.p[a]), Complex64::new(nu / s2 + kappa * (2.0 * q[a]).cos() / s2, 0.0))
            } else {
                (
                    Complex64::new(-mu / (q[a] - q[b]).sin(), 0.0),
                    Complex64::new(mu / (q[a] + q[b]).sin(), 0.0),
                )
            };
            k[(a, b)] = kab;
            k[(a, n + b)] = kanb;
            k[(n + a, n + b)] = -kab;
            k[(n + a, b)] = -kanb;
        }
    }
    let y = &k - matrix::exchange(n) * (I * kappa);
    Ok(SutherlandLax { y, k })
}

/// Eigenvalues of the Hermitian matrix `-iY`, ascending.
pub fn spectrum(lax: &SutherlandLax) -> Vec<f64> {
    matrix::hermitian_eigen(&(&lax.y * (-I))).0
}

/// `tr((-iY)^m)` for `m = 1..=mmax`, from matrix powers.
pub fn power_traces(lax: &SutherlandLax, mmax: usize) -> Vec<f64> {
    let h = &lax.y * (-I);
    let mut pow = h.clone();
    let mut out = Vec::with_capacity(mmax);
    for m in 1..=mmax {
        if m > 1 {
            pow = &pow * &h;
        }
        out.push(pow.trace().re);
    }
    out
}

/// The closed-form Hamiltonian `H(q, p)`.
pub fn h1_closed_form(point: &SutherlandPoint, params: &CouplingParams) -> f64 {
    let n = point.n();
    let q = &point.q;
    let mut h = 0.5 * point.p.iter().map(|x| x * x).sum::<f64>();
    for j in 0..n {
        for k in j + 1..n {
            h += params.gamma / (q[j] - q[k]).sin().powi(2) + params.gamma / (q[j] + q[k]).sin().powi(2);
        }
        h += params.gamma1 / q[j].sin().powi(2) + params.gamma2 / (2.0 * q[j]).sin().powi(2);
    }
    h
}

/// `H_k = (1/4k) tr((-iY)^{2k})` for `k = 1..=kmax`, from the spectrum.
///
/// `H_1` is checked against the closed form.
pub fn hamiltonians(point: &SutherlandPoint, params: &CouplingParams, kmax: usize) -> Result<Vec<f64>> {
    let lax = lax_y(point, params)?;
    let ev = spectrum(&lax);
    let out: Vec<f64> = (1..=kmax)
        .map(|k| ev.iter().map(|x| x.powi(2 * k as i32)).sum::<f64>() / (4.0 * k as f64))
        .collect();
    if kmax >= 1 {
        let closed = h1_closed_form(point, params);
        if (out[0] - closed).abs() > 1e-9 * closed.abs().max(1.0) {
            return Err(Error::Consistency(format!("spectral H1 = {} but closed form gives {}", out[0], closed)));
        }
    }
    Ok(out)
}

/// Same as [`hamiltonians`] but through matrix powers.
pub fn hamiltonians_by_trace(point: &SutherlandPoint, params: &CouplingParams, kmax: usize) -> Result<Vec<f64>> {
    let lax = lax_y(point, params)?;
    let tr = power_traces(&lax, 2 * kmax);
    Ok((1..=kmax).map(|k| tr[2 * k - 1] / (4.0 * k as f64)).collect())
}

/// Exact gradient `(dH/dq, dH/dp)` of the closed-form Hamiltonian.
pub fn grad_h1(point: &SutherlandPoint, params: &CouplingParams) -> (Vec<f64>, Vec<f64>) {
    let n = point.n();
    let q = &point.q;
    let g = params.gamma;
    let dq = (0..n)
        .map(|j| {
            let mut s = 0.0;
            for k in 0..n {
                if k != j {
                    let a = q[j] - q[k];
                    let b = q[j] + q[k];
                    s -= 2.0 * g * a.cos() / a.sin().powi(3) + 2.0 * g * b.cos() / b.sin().powi(3);
                }
            }
            let x = q[j];
            s - 2.0 * params.gamma1 * x.cos() / x.sin().powi(3)
                - 4.0 * params.gamma2 * (2.0 * x).cos() / (2.0 * x).sin().powi(3)
        })
        .collect();
    (dq, point.p.clone())
}

/// Exact gradient of `H_k` as `(dq, dp)`, from `dH_k = (1/2) tr((-iY)^{2k-1} d(-iY))`.
pub fn grad_hk(point: &SutherlandPoint, params: &CouplingParams, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Invalid("H_k needs k >= 1".into()));
    }
    let lax = lax_y(point, params)?;
    let n = params.n;
    let m = &lax.y * (-I);
    let mut pow = CMat::identity(2 * n, 2 * n);
    for _ in 0..2 * k - 1 {
        pow = &pow * &m;
    }
    // tr(P dM) with dM = -i dK and dK given entrywise
    let contract = |entries: &[(usize, usize, Complex64)]| -> f64 {
        entries.iter().map(|&(i, j, v)| (pow[(j, i)] * v * (-I)).re).sum::<f64>() * 0.5
    };
    let (mu, nu, kappa) = (params.mu, params.nu, params.kappa);
    let q = &point.q;
    let mut dq = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for a in 0..n {
        dp[a] = contract(&[(a, a, I), (n + a, n + a, -I)]);
        let (s, c) = ((2.0 * q[a]).sin(), (2.0 * q[a]).cos());
        let wall = Complex64::new(-2.0 * (nu * c + kappa) / (s * s), 0.0);
        let mut e = vec![(a, n + a, wall), (n + a, a, -wall)];
        for b in 0..n {
            if b == a {
                continue;
            }
            let (d, t) = (q[a] - q[b], q[a] + q[b]);
            let minus = Complex64::new(mu * d.cos() / d.sin().powi(2), 0.0);
            let plus = Complex64::new(-mu * t.cos() / t.sin().powi(2), 0.0);
            // K_ab and K_ba depend on q_a with opposite signs of the difference
            for (i, j, dm) in [(a, b, minus), (b, a, -minus)] {
                e.push((i, j, dm));
                e.push((n + i, n + j, -dm));
            }
            for (i, j) in [(a, b), (b, a)] {
                e.push((i, n + j, plus));
                e.push((n + i, j, -plus));
            }
        }
        dq[a] = contract(&e);
    }
    Ok((dq, dp))
}

/// `{H_i, H_j}` from exact gradients.
pub fn hamiltonian_bracket(point: &SutherlandPoint, params: &CouplingParams, i: usize, j: usize) -> Result<f64> {
    let (aq, ap) = grad_hk(point, params, i)?;
    let (bq, bp) = grad_hk(point, params, j)?;
    Ok((0..params.n).map(|c| aq[c] * bp[c] - ap[c] * bq[c]).sum())
}

/// Central finite-difference gradient of `H_k` with respect to `(q, p)`.
pub fn grad_hk_fd(point: &SutherlandPoint, params: &CouplingParams, k: usize, step: f64) -> Result<Vec<f64>> {
    let x0 = point.to_vec();
    let mut g = vec![0.0; x0.len()];
    for i in 0..x0.len() {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[i] += step;
        xm[i] -= step;
        let hp = hamiltonians(&SutherlandPoint::from_slice(&xp), params, k)?[k - 1];
        let hm = hamiltonians(&SutherlandPoint::from_slice(&xm), params, k)?[k - 1];
        g[i] = (hp - hm) / (2.0 * step);
    }
    Ok(g)
}

/// The actions together with the `G+` frame diagonalizing `Y-`.
pub fn action_map_full(point: &SutherlandPoint, params: &CouplingParams) -> Result<(Vec<f64>, PairedSpectrum)> {
    let lax = lax_y(point, params)?;
    let (_, ym) = matrix::gamma_split(&lax.y, STRUCT_TOL)?;
    let spec = matrix::pair_diagonalize_gminus(&ym, STRUCT_TOL)?;
    let kk = params.kappa * params.kappa;
    let lambda: Vec<f64> = spec.values.iter().map(|d| (d * d + kk).sqrt()).collect();
    let scale = lambda[0].max(1.0);
    if lambda_membership(&lambda, params, 1e-9 * scale) == Membership::Outside {
        return Err(Error::Consistency(format!("actions {lambda:?} outside the closed chamber")));
    }
    Ok((lambda, spec))
}

/// The action variables `lambda(q, p)`.
pub fn action_map(point: &SutherlandPoint, params: &CouplingParams) -> Result<Vec<f64>> {
    action_map_full(point, params).map(|(l, _)| l)
}

/// Residuals of the two moment-map constraints for the triple `(y, Y, V)`:
/// `|(y Y y^-1)_+ + i mu (V V^dagger - 1) + i (mu - nu) C|` and `|-Y_+ - i kappa C|`.
pub fn momentum_residual(y: &CMat, big_y: &CMat, v: &CVec, params: &CouplingParams) -> Result<(f64, f64)> {
    let nn = v.len();
    let c = matrix::exchange(nn / 2);
    let cv = matrix::c_vec(v) + v;
    if nn != params.big_n() || cv.norm() > 1e-8 || (v.norm_squared() - nn as f64).abs() > 1e-8 * nn as f64 {
        return Err(Error::Invalid("V must satisfy CV + V = 0 and |V|^2 = N".into()));
    }
    let yt = y * big_y * matrix::inverse(y)?;
    let plus = (&yt + matrix::conj_c(&yt)) * Complex64::new(0.5, 0.0);
    let ups_l = (v * v.adjoint() - CMat::identity(nn, nn)) * (I * params.mu) + &c * (I * (params.mu - params.nu));
    let r1 = (plus + ups_l).norm();
    let yplus = (big_y + matrix::conj_c(big_y)) * Complex64::new(0.5, 0.0);
    let r2 = (-yplus - c * (I * params.kappa)).norm();
    Ok((r1, r2))
}

/// The section data `(e^{iQ(q)}, Y(q, p), V_R)`.
pub fn section_data(point: &SutherlandPoint, params: &CouplingParams) -> Result<(CMat, CMat, CVec)> {
    let lax = lax_y(point, params)?;
    Ok((matrix::diag(&matrix::exp_iq(&point.q, 1.0)), lax.y, v_real(params.n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn p1() -> CouplingParams {
        CouplingParams::from_rsvd(1.0, 2.0, 0.0, 1).unwrap()
    }

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lax_at_equilibrium() {
        let l = lax_y(&SutherlandPoint::new(vec![FRAC_PI_4], vec![0.0]), &p1()).unwrap();
        let e = CMat::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(2.0, 0.0), cx(-2.0, 0.0), cx(0.0, 0.0)]);
        assert!((l.y - e).norm() < 1e-15);
    }

    #[test]
    fn lax_with_momentum() {
        let l = lax_y(&SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]), &p1()).unwrap();
        let e = CMat::from_row_slice(2, 2, &[cx(0.0, 1.0), cx(2.0, 0.0), cx(-2.0, 0.0), cx(0.0, -1.0)]);
        assert!((l.y - e).norm() < 1e-15);
    }

    #[test]
    fn exact_hk_gradient_matches_differences() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 3).unwrap();
        let x = SutherlandPoint::new(vec![1.2, 0.8, 0.3], vec![0.5, -1.1, 0.7]);
        for k in 1..=3 {
            let (dq, dp) = grad_hk(&x, &p, k).unwrap();
            let fd = grad_hk_fd(&x, &p, k, 1e-5).unwrap();
            let exact: Vec<f64> = dq.into_iter().chain(dp).collect();
            let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in exact.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-7 * scale, "k={k}: {a} vs {b}");
            }
        }
        let (dq, dp) = grad_hk(&x, &p, 1).unwrap();
        let (eq, ep) = grad_h1(&x, &p);
        for (a, b) in dq.iter().chain(&dp).zip(eq.iter().chain(&ep)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10 * b.abs().max(1.0));
        }
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            assert!(hamiltonian_bracket(&x, &p, i, j).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn k_is_in_gminus_algebra() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 3).unwrap();
        let l = lax_y(&SutherlandPoint::new(vec![1.2, 0.7, 0.3], vec![0.1, -0.4, 0.9]), &p).unwrap();
        assert!(matrix::structure_residual(&l.k, matrix::Structure::LieMinus).unwrap() <= 1e-13);
    }

    #[test]
    fn lax_rejects_unordered_q() {
        let p = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 2).unwrap();
        let e = lax_y(&SutherlandPoint::new(vec![0.3, 0.7], vec![0.0, 0.0]), &p).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn h1_examples() {
        let h = hamiltonians(&SutherlandPoint::new(vec![FRAC_PI_4], vec![0.0]), &p1(), 1).unwrap();
        assert_abs_diff_eq!(h[0], 2.0, epsilon = 1e-14);
        let h = hamiltonians(&SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]), &p1(), 1).unwrap();
        assert_abs_diff_eq!(h[0], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn trace_vanishes() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 3).unwrap();
        let l = lax_y(&SutherlandPoint::new(vec![1.2, 0.7, 0.3], vec![0.1, -0.4, 0.9]), &p).unwrap();
        assert!(power_traces(&l, 1)[0].abs() < 1e-13);
    }

    #[test]
    fn gradient_examples() {
        let (dq, dp) = grad_h1(&SutherlandPoint::new(vec![FRAC_PI_4], vec![0.0]), &p1());
        assert!(dq[0].abs() < 1e-14 && dp[0] == 0.0);
        let (_, dp) = grad_h1(&SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]), &p1());
        assert_eq!(dp, vec![1.0]);
    }

    #[test]
    fn actions_examples() {
        let l = action_map(&SutherlandPoint::new(vec![FRAC_PI_4], vec![0.0]), &p1()).unwrap();
        assert_abs_diff_eq!(l[0], 2.0, epsilon = 1e-14);
        let l = action_map(&SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]), &p1()).unwrap();
        assert_abs_diff_eq!(l[0], 5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn section_satisfies_constraints() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 3).unwrap();
        let (y, yy, v) = section_data(&SutherlandPoint::new(vec![1.2, 0.7, 0.3], vec![0.1, -0.4, 0.9]), &p).unwrap();
        let (r1, r2) = momentum_residual(&y, &yy, &v, &p).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
    }

    #[test]
    fn off_shell_point_violates_constraints() {
        let p = p1();
        let (r1, _) =
            momentum_residual(&CMat::identity(2, 2), &CMat::zeros(2, 2), &v_real(1), &p).unwrap();
        assert!(r1 > 0.1);
    }
}
