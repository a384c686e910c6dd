//! The dual side: the frame `h(lambda)`, the vector `f`, the unitary `A`,
//! the Hamiltonian `H0` and the `W`-system.

mod appendix;
mod zchart;

pub use appendix::{appendix_chain, AppendixReport};
pub use zchart::{a_tilde, dual_hk, g_functions, l_tilde, m_of_theta};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{self, CMat, CVec};
use crate::params::{
    lambda_membership, strongly_regular, z_from_angles, CouplingParams, DualPoint, Membership, REGULARITY_MARGIN,
};

/// `h(lambda)` and its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrame {
    pub h: CMat,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `diag(lambda, -lambda)`.
    pub big_lambda: Vec<f64>,
}

/// `alpha(x)` and `beta(x)`, exactly `(1, 0)` when `kappa = 0`.
pub fn alpha_beta(x: f64, kappa: f64) -> (f64, f64) {
    if kappa == 0.0 {
        return (1.0, 0.0);
    }
    let r = (x + (x * x - kappa * kappa).max(0.0).sqrt()).sqrt();
    let s = (2.0 * x).sqrt();
    (r / s, kappa / (s * r))
}

/// The real `G-` matrix conjugating `diag(lambda, -lambda)` into `D - kappa C`.
pub fn h_matrix(lambda: &[f64], params: &CouplingParams) -> Result<DualFrame> {
    let kappa = params.kappa;
    if let Some(x) = lambda.iter().find(|&&x| !(x >= kappa.abs())) {
        return Err(Error::Domain(format!("lambda = {x} is below |kappa| = {}", kappa.abs())));
    }
    let n = lambda.len();
    let (alpha, beta): (Vec<f64>, Vec<f64>) = lambda.iter().map(|&x| alpha_beta(x, kappa)).unzip();
    let mut h = CMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        h[(j, j)] = Complex64::new(alpha[j], 0.0);
        h[(n + j, n + j)] = Complex64::new(alpha[j], 0.0);
        h[(j, n + j)] = Complex64::new(beta[j], 0.0);
        h[(n + j, j)] = Complex64::new(-beta[j], 0.0);
    }
    Ok(DualFrame { h, alpha, beta, big_lambda: big_lambda(lambda) })
}

/// `(lambda, -lambda)`.
pub fn big_lambda(lambda: &[f64]) -> Vec<f64> {
    lambda.iter().copied().chain(lambda.iter().map(|x| -x)).collect()
}

/// The positive square-root factors of `|f_c|^2` and `|f_{n+c}|^2`.
fn f_moduli_sq(lambda: &[f64], params: &CouplingParams) -> (Vec<f64>, Vec<f64>) {
    let n = lambda.len();
    let (mu, nu) = (params.mu, params.nu);
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for c in 0..n {
        let lc = lambda[c];
        let mut a = 1.0 - nu / lc;
        let mut b = 1.0 + nu / lc;
        for d in 0..n {
            if d != c {
                let (m, p) = (lc - lambda[d], lc + lambda[d]);
                a *= (1.0 - 2.0 * mu / m) * (1.0 - 2.0 * mu / p);
                b *= (1.0 + 2.0 * mu / m) * (1.0 + 2.0 * mu / p);
            }
        }
        lo[c] = a;
        hi[c] = b;
    }
    (lo, hi)
}

/// The vector `f(lambda, theta)`: `f_c > 0` and `f_{n+c} = e^{i theta_c} |f_{n+c}|`.
pub fn f_vector(dual: &DualPoint, params: &CouplingParams) -> Result<CVec> {
    dual.validate(params, 0.0)?;
    let n = params.n;
    let (lo, hi) = f_moduli_sq(&dual.lambda, params);
    let f = CVec::from_fn(2 * n, |k, _| {
        if k < n {
            Complex64::new(lo[k].sqrt(), 0.0)
        } else {
            Complex64::from_polar(hi[k - n].sqrt(), dual.theta[k - n])
        }
    });
    let nn = 2.0 * n as f64;
    if (f.norm_squared() - nn).abs() > 1e-9 * nn {
        return Err(Error::Consistency(format!("|f|^2 = {} differs from N", f.norm_squared())));
    }
    Ok(f)
}

/// The weights `w_k` entering `W_k = w_k F_k`.
pub fn w_weights(lambda: &[f64], mu: f64) -> Vec<f64> {
    let n = lambda.len();
    let mut w = vec![1.0; 2 * n];
    for a in 0..n {
        for b in 0..n {
            if b != a {
                let (m, p) = (lambda[a] - lambda[b], lambda[a] + lambda[b]);
                w[a] *= m * p / ((2.0 * mu - m) * (2.0 * mu - p));
                w[a + n] *= m * p / ((2.0 * mu + m) * (2.0 * mu + p));
            }
        }
    }
    w
}

/// The two solutions of the `W`-system and the induced `|F_k|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WSystemData {
    pub w: Vec<f64>,
    pub fsq_plus: Vec<f64>,
    pub fsq_minus: Vec<f64>,
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<f64>,
}

impl WSystemData {
    pub fn sum_plus(&self) -> f64 {
        self.fsq_plus.iter().sum()
    }

    pub fn sum_minus(&self) -> f64 {
        self.fsq_minus.iter().sum()
    }
}

/// Both branches: `W+ = (1 - nu/lambda, 1 + nu/lambda)` and
/// `W- = (-1 + (2mu - nu)/lambda, -1 - (2mu - nu)/lambda)`, divided by `w`.
pub fn f_squared_branches(lambda: &[f64], params: &CouplingParams) -> Result<WSystemData> {
    let inside = lambda_membership(lambda, params, 0.0) == Membership::Inside;
    if !inside && !strongly_regular(lambda, params, REGULARITY_MARGIN) {
        return Err(Error::StrongRegularity(format!("{lambda:?}")));
    }
    let n = lambda.len();
    let (mu, nu) = (params.mu, params.nu);
    let w = w_weights(lambda, mu);
    let mut w_plus = vec![0.0; 2 * n];
    let mut w_minus = vec![0.0; 2 * n];
    for c in 0..n {
        let l = lambda[c];
        w_plus[c] = 1.0 - nu / l;
        w_plus[n + c] = 1.0 + nu / l;
        w_minus[c] = -1.0 + (2.0 * mu - nu) / l;
        w_minus[n + c] = -1.0 - (2.0 * mu - nu) / l;
    }
    let fsq_plus: Vec<f64> = w_plus.iter().zip(&w).map(|(a, b)| a / b).collect();
    let fsq_minus: Vec<f64> = w_minus.iter().zip(&w).map(|(a, b)| a / b).collect();
    if fsq_plus.iter().chain(&fsq_minus).any(|x| !x.is_finite()) {
        return Err(Error::StrongRegularity(format!("{lambda:?}")));
    }
    Ok(WSystemData { w, fsq_plus, fsq_minus, w_plus, w_minus })
}

/// Residuals of the two `W`-system equations for the candidate `|F_k|^2`.
pub fn w_system_residual(lambda: &[f64], fsq: &[f64], params: &CouplingParams) -> Result<(f64, f64)> {
    if !strongly_regular(lambda, params, REGULARITY_MARGIN) {
        return Err(Error::StrongRegularity(format!("{lambda:?}")));
    }
    let n = lambda.len();
    if fsq.len() != 2 * n {
        return Err(Error::Invalid(format!("expected {} values, got {}", 2 * n, fsq.len())));
    }
    let (mu, nu) = (params.mu, params.nu);
    let w = w_weights(lambda, mu);
    let big_w: Vec<f64> = w.iter().zip(fsq).map(|(a, b)| a * b).collect();
    let (mut r1, mut r2) = (0.0_f64, 0.0_f64);
    for c in 0..n {
        let (l, wc, wn) = (lambda[c], big_w[c], big_w[n + c]);
        r1 = r1.max(((mu + l) * wc + (mu - l) * wn - 2.0 * (mu - nu)).abs());
        r2 = r2.max((l * l * wc * wn - mu * (mu - nu) * (wc + wn) + (mu - nu).powi(2) + mu * mu - l * l).abs());
    }
    Ok((r1, r2))
}

/// The Cauchy-like matrix built from an arbitrary `F`:
/// `(2 mu F_j conj((CF)_k) - 2 (mu - nu) C_jk) / (2 mu + Lambda_k - Lambda_j)`.
pub fn a_check_from_f(lambda: &[f64], f: &CVec, params: &CouplingParams) -> CMat {
    let n = lambda.len();
    let nn = 2 * n;
    let lam = big_lambda(lambda);
    let cf = matrix::c_vec(f);
    let mu = params.mu;
    CMat::from_fn(nn, nn, |j, k| {
        let cjk = if (j + n) % nn == k { 1.0 } else { 0.0 };
        (f[j] * cf[k].conj() * (2.0 * mu) - Complex64::new(2.0 * (mu - params.nu) * cjk, 0.0))
            / (2.0 * mu + lam[k] - lam[j])
    })
}

/// `A(lambda, theta)` by the explicit Cauchy-like formula.
///
/// Singular where `2 mu + Lambda_k - Lambda_j` vanishes, i.e. at `lambda_n = mu`;
/// [`a_check`] is smooth there.
pub fn a_check_direct(dual: &DualPoint, params: &CouplingParams) -> Result<CMat> {
    let f = f_vector(dual, params)?;
    Ok(a_check_from_f(&dual.lambda, &f, params))
}

/// `A(lambda, theta) = m(theta)^-1 A~(z(lambda, theta)) m(theta)`.
pub fn a_check(dual: &DualPoint, params: &CouplingParams) -> Result<CMat> {
    let z = z_from_angles(dual, params)?;
    let at = a_tilde(&z, params);
    let m = m_of_theta(&dual.theta);
    Ok(CMat::from_fn(at.nrows(), at.ncols(), |j, k| m[j].conj() * at[(j, k)] * m[k]))
}

/// Residual of `2mu A + A Lambda - Lambda A - 2mu F (CF)^dagger + 2(mu - nu) C = 0`.
pub fn a_constraint_residual(a: &CMat, lambda: &[f64], f: &CVec, params: &CouplingParams) -> f64 {
    let n = lambda.len();
    let lam = matrix::real_diag(&big_lambda(lambda));
    let mu = params.mu;
    let cf = matrix::c_vec(f);
    let r = a * Complex64::new(2.0 * mu, 0.0) + a * &lam - &lam * a - f * cf.adjoint() * Complex64::new(2.0 * mu, 0.0)
        + matrix::exchange(n) * Complex64::new(2.0 * (mu - params.nu), 0.0);
    r.norm()
}

/// The closed-form dual Hamiltonian `H0(lambda, theta)`, valid on the closed chamber.
pub fn dual_h0_closed(lambda: &[f64], theta: &[f64], params: &CouplingParams) -> f64 {
    let n = lambda.len();
    let (mu, nu, kappa) = (params.mu, params.nu, params.kappa);
    let root = |x: f64| x.max(0.0).sqrt();
    let mut h = 0.0;
    let mut prod = 1.0;
    for j in 0..n {
        let l = lambda[j];
        let mut r = root(1.0 - nu * nu / (l * l)) * root(1.0 - kappa * kappa / (l * l));
        for k in 0..n {
            if k != j {
                let (m, p) = (l - lambda[k], l + lambda[k]);
                r *= root(1.0 - 4.0 * mu * mu / (m * m)) * root(1.0 - 4.0 * mu * mu / (p * p));
            }
        }
        h += theta[j].cos() * r;
        prod *= 1.0 - 4.0 * mu * mu / (l * l);
    }
    h + nu * kappa / (4.0 * mu * mu) * (1.0 - prod)
}

/// Exact gradient `(dH0/dlambda, dH0/dtheta)` of [`dual_h0_closed`] in the open chamber.
pub fn grad_dual_h0(lambda: &[f64], theta: &[f64], params: &CouplingParams) -> (Vec<f64>, Vec<f64>) {
    let n = lambda.len();
    let (mu, nu, kappa) = (params.mu, params.nu, params.kappa);
    let m2 = 4.0 * mu * mu;
    // d/dx ln sqrt(1 - a/x^2) = a / (x (x^2 - a))
    let dl = |a: f64, x: f64| a / (x * (x * x - a));
    let mut r = vec![0.0; n];
    let mut dlam = vec![0.0; n];
    let mut dth = vec![0.0; n];
    for j in 0..n {
        let l = lambda[j];
        let mut v = (1.0 - nu * nu / (l * l)).sqrt() * (1.0 - kappa * kappa / (l * l)).sqrt();
        for k in 0..n {
            if k != j {
                let (m, p) = (l - lambda[k], l + lambda[k]);
                v *= (1.0 - m2 / (m * m)).sqrt() * (1.0 - m2 / (p * p)).sqrt();
            }
        }
        r[j] = v;
        dth[j] = -theta[j].sin() * v;
    }
    for j in 0..n {
        let l = lambda[j];
        let cj = theta[j].cos() * r[j];
        let mut own = dl(nu * nu, l) + dl(kappa * kappa, l);
        for k in 0..n {
            if k != j {
                let (m, p) = (l - lambda[k], l + lambda[k]);
                own += dl(m2, m) + dl(m2, p);
                // R_j also depends on lambda_k
                dlam[k] += cj * (-dl(m2, m) + dl(m2, p));
            }
        }
        dlam[j] += cj * own;
        let others: f64 = (0..n).filter(|&k| k != j).map(|k| 1.0 - m2 / (lambda[k] * lambda[k])).product();
        dlam[j] -= nu * kappa / (4.0 * mu * mu) * (2.0 * m2 / (l * l * l)) * others;
    }
    (dlam, dth)
}

/// `H0(lambda, theta)`, cross-checked against `tr(h A h)/2` in the open chamber.
pub fn dual_h0(dual: &DualPoint, params: &CouplingParams) -> Result<f64> {
    match dual.membership(params, 0.0) {
        Membership::Outside => {
            return Err(Error::Domain("lambda outside the closed chamber".into()));
        }
        Membership::Boundary => return Ok(dual_h0_closed(&dual.lambda, &dual.theta, params)),
        Membership::Inside => {}
    }
    let closed = dual_h0_closed(&dual.lambda, &dual.theta, params);
    let tr = dual_h0_trace(dual, params)?;
    if (closed - tr).abs() > 1e-9 * closed.abs().max(1.0) {
        return Err(Error::Consistency(format!("H0 closed form {closed} but trace form {tr}")));
    }
    Ok(closed)
}

/// `tr(h A h)/2`.
pub fn dual_h0_trace(dual: &DualPoint, params: &CouplingParams) -> Result<f64> {
    let h = h_matrix(&dual.lambda, params)?.h;
    let a = a_check(dual, params)?;
    Ok(0.5 * (&h * a * &h).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Structure;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn p(mu: f64, nu: f64, kappa: f64, n: usize) -> CouplingParams {
        CouplingParams::from_rsvd(mu, nu, kappa, n).unwrap()
    }

    #[test]
    fn h_is_identity_without_kappa() {
        let f = h_matrix(&[7.0, 4.0], &p(1.0, 2.0, 0.0, 2)).unwrap();
        assert_eq!(f.h, CMat::identity(4, 4));
    }

    #[test]
    fn h_entries_for_kappa_three() {
        let f = h_matrix(&[5.0], &p(1.0, 4.0, 3.0, 1)).unwrap();
        assert_abs_diff_eq!(f.alpha[0], 0.9f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.beta[0], 0.1f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.alpha[0].powi(2) + f.beta[0].powi(2), 1.0, epsilon = 1e-15);
        assert!(matrix::structure_residual(&f.h, Structure::GMinus).unwrap() <= 1e-12);
        // h Lambda h^-1 = D - kappa C
        let lam = matrix::real_diag(&f.big_lambda);
        let lhs = &f.h * lam * f.h.transpose();
        let rhs = matrix::real_diag(&[4.0, -4.0]) - matrix::exchange(1) * Complex64::new(3.0, 0.0);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn h_rejects_small_lambda() {
        assert!(h_matrix(&[2.0], &p(1.0, 4.0, 3.0, 1)).is_err());
    }

    #[test]
    fn f_for_one_particle() {
        let pp = p(1.0, 2.0, 0.0, 1);
        let l = 5f64.sqrt();
        let f = f_vector(&DualPoint::new(vec![l], vec![0.0]), &pp).unwrap();
        assert_abs_diff_eq!(f[0].re, (1.0 - 2.0 / l).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f[1].re, (1.0 + 2.0 / l).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.norm_squared(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn branches_for_one_particle() {
        let d = f_squared_branches(&[3.0], &p(1.0, 2.0, 0.0, 1)).unwrap();
        assert_abs_diff_eq!(d.fsq_plus[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.fsq_plus[1], 5.0 / 3.0, epsilon = 1e-15);
        assert_eq!(d.fsq_minus, vec![-1.0, -1.0]);
        assert_abs_diff_eq!(d.sum_plus(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.sum_minus(), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn plus_branch_matches_f() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let dual = DualPoint::new(vec![6.1, 3.9, 2.0], vec![0.3, 2.0, 5.0]);
        let f = f_vector(&dual, &pp).unwrap();
        let d = f_squared_branches(&dual.lambda, &pp).unwrap();
        for k in 0..6 {
            assert_abs_diff_eq!(f[k].norm_sqr(), d.fsq_plus[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn w_system_both_branches() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let lam = [6.1, 3.9, 2.0];
        let d = f_squared_branches(&lam, &pp).unwrap();
        let (a, b) = w_system_residual(&lam, &d.fsq_plus, &pp).unwrap();
        assert!(a < 1e-9 && b < 1e-9);
        let (a, b) = w_system_residual(&lam, &d.fsq_minus, &pp).unwrap();
        assert!(a < 1e-9 && b < 1e-9);
        let bumped: Vec<f64> = d.fsq_plus.iter().map(|x| x + 1e-3).collect();
        let (a, b) = w_system_residual(&lam, &bumped, &pp).unwrap();
        assert!(a.max(b) >= 1e-4);
    }

    #[test]
    fn a_check_is_unitary_and_solves_constraint() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let dual = DualPoint::new(vec![6.1, 3.9, 2.0], vec![0.3, 2.0, 5.0]);
        let a = a_check(&dual, &pp).unwrap();
        assert!(matrix::unitarity_residual(&a) < 1e-12);
        assert!(matrix::structure_residual(&a, Structure::GMinus).unwrap() < 1e-12);
        let f = f_vector(&dual, &pp).unwrap();
        assert!(a_constraint_residual(&a, &dual.lambda, &f, &pp) < 1e-12);
        assert!((a - a_check_direct(&dual, &pp).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn trace_of_h_a_h_for_one_particle() {
        let pp = p(1.0, 2.0, 0.0, 1);
        let dual = DualPoint::new(vec![5f64.sqrt()], vec![0.0]);
        assert_abs_diff_eq!(dual_h0_trace(&dual, &pp).unwrap(), 1.0 / 5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn h0_examples() {
        let pp = p(1.0, 2.0, 0.0, 1);
        let l = 5f64.sqrt();
        assert_abs_diff_eq!(
            dual_h0(&DualPoint::new(vec![l], vec![FRAC_PI_2]), &pp).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(dual_h0(&DualPoint::new(vec![l], vec![0.0]), &pp).unwrap(), 0.447213595499958, epsilon = 1e-15);
        assert_eq!(dual_h0(&DualPoint::new(vec![2.0], vec![0.3]), &pp).unwrap(), 0.0);
        let t = 0.8;
        assert_abs_diff_eq!(
            dual_h0(&DualPoint::new(vec![3.0], vec![t]), &pp).unwrap(),
            t.cos() * (1.0 - 4.0 / 9.0f64).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn h0_gradient_matches_differences() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let lam = [6.1, 3.9, 2.0];
        let th = [0.3, 2.0, 5.0];
        let (gl, gt) = grad_dual_h0(&lam, &th, &pp);
        let e = 1e-6;
        for i in 0..3 {
            let (mut a, mut b) = (lam.to_vec(), lam.to_vec());
            a[i] += e;
            b[i] -= e;
            let fd = (dual_h0_closed(&a, &th, &pp) - dual_h0_closed(&b, &th, &pp)) / (2.0 * e);
            assert_abs_diff_eq!(gl[i], fd, epsilon = 1e-8);
            let (mut a, mut b) = (th.to_vec(), th.to_vec());
            a[i] += e;
            b[i] -= e;
            let fd = (dual_h0_closed(&lam, &a, &pp) - dual_h0_closed(&lam, &b, &pp)) / (2.0 * e);
            assert_abs_diff_eq!(gt[i], fd, epsilon = 1e-8);
        }
    }
}
