//! Smooth objects on the global oscillator chart.
//!
//! Stripping the factor `|z_c|` (resp. `|z_{c-1}|`, with `z_0 = 1`) from
//! `|f_c|` (resp. `|f_{n+c}|`) leaves the positive functions
//!
//! ```text
//! g_c^2     = (1 - nu/l_c) / (l_c - l_{c+1}) * (1 - 2mu/(l_c + l_{c+1})) * P-_c    (c < n)
//! g_n^2     = 1/l_n * P-_n
//! g_{n+1}^2 = (1 + nu/l_1) * P+_1
//! g_{n+c}^2 = (1 + nu/l_c) / (l_{c-1} - l_c) * (1 + 2mu/(l_c + l_{c-1})) * P+_c  (c > 1)
//! ```
//!
//! where `P-+_c` is the product of `(1 -+ 2mu/(l_c - l_a))(1 -+ 2mu/(l_c + l_a))`
//! over the remaining `a != c`. Every factor is positive on the closed chamber,
//! so `g`, `A~` and `L~` are smooth on all of `C^n`.

use num_complex::Complex64;

use super::h_matrix;
use crate::matrix::{CMat, CVec, ZERO};
use crate::params::{lambda_of_z, CouplingParams, OscillatorPoint};

/// The positive functions `g_1 .. g_{2n}` of `z`.
pub fn g_functions(z: &OscillatorPoint, params: &CouplingParams) -> Vec<f64> {
    g_at(&lambda_of_z(z, params), params)
}

fn g_at(lambda: &[f64], params: &CouplingParams) -> Vec<f64> {
    let n = lambda.len();
    let (mu, nu) = (params.mu, params.nu);
    let pair = |c: usize, a: usize, s: f64| {
        (1.0 + s * 2.0 * mu / (lambda[c] - lambda[a])) * (1.0 + s * 2.0 * mu / (lambda[c] + lambda[a]))
    };
    let mut g = vec![0.0; 2 * n];
    for c in 0..n {
        let l = lambda[c];
        let mut v = if c + 1 < n {
            (1.0 - nu / l) / (l - lambda[c + 1]) * (1.0 - 2.0 * mu / (l + lambda[c + 1]))
        } else {
            1.0 / l
        };
        for a in (0..n).filter(|&a| a != c && a != c + 1) {
            v *= pair(c, a, -1.0);
        }
        g[c] = v.sqrt();

        let mut v = 1.0 + nu / l;
        if c > 0 {
            v *= (1.0 + 2.0 * mu / (l + lambda[c - 1])) / (lambda[c - 1] - l);
        }
        for a in (0..n).filter(|&a| a != c && a + 1 != c) {
            v *= pair(c, a, 1.0);
        }
        g[n + c] = v.sqrt();
    }
    g
}

/// Diagonal of `m(theta) = diag(m, m)` with `m_k = prod_{j <= k} e^{-i theta_j}`.
pub fn m_of_theta(theta: &[f64]) -> CVec {
    let n = theta.len();
    let mut acc = 0.0;
    let half: Vec<Complex64> = theta
        .iter()
        .map(|t| {
            acc += t;
            Complex64::from_polar(1.0, -acc)
        })
        .collect();
    CVec::from_fn(2 * n, |k, _| half[k % n])
}

/// The unitary matrix `A~(z)`, smooth on all of `C^n`.
pub fn a_tilde(z: &OscillatorPoint, params: &CouplingParams) -> CMat {
    let n = z.n();
    let (mu, nu) = (params.mu, params.nu);
    let lambda = lambda_of_z(z, params);
    let g = g_at(&lambda, params);
    // one-based z with z_0 = 1
    let zz = |k: usize| if k == 0 { Complex64::new(1.0, 0.0) } else { z.z[k - 1] };
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut a = CMat::from_element(2 * n, 2 * n, ZERO);
    for ia in 1..=n {
        for ib in 1..=n {
            let (la, lb) = (lambda[ia - 1], lambda[ib - 1]);
            let (ga, gb, gna, gnb) = (g[ia - 1], g[ib - 1], g[n + ia - 1], g[n + ib - 1]);
            let (r, c) = (ia - 1, ib - 1);

            a[(r, c)] = if ib == ia + 1 {
                re(-2.0 * mu * ga * gnb)
            } else {
                zz(ia).conj() * zz(ib - 1) * (-2.0 * mu * ga * gnb / (la - lb - 2.0 * mu))
            };

            a[(r, n + c)] = if ia == n && ib == n {
                re(corner(&lambda, mu, nu))
            } else {
                let mut v = zz(ia).conj() * zz(ib) * (-2.0 * mu * ga * gb / (la + lb - 2.0 * mu));
                if ia == ib {
                    v += (mu - nu) / (la - mu);
                }
                v
            };

            let mut v = zz(ia - 1).conj() * zz(ib - 1) * (2.0 * mu * gna * gnb / (la + lb + 2.0 * mu));
            if ia == ib {
                v -= (mu - nu) / (la + mu);
            }
            a[(n + r, c)] = v;

            a[(n + r, n + c)] = if ia == ib + 1 {
                re(-2.0 * mu * gna * gb)
            } else {
                zz(ia - 1).conj() * zz(ib) * (2.0 * mu * gna * gb / (la - lb + 2.0 * mu))
            };
        }
    }
    a
}

/// Entry `(n, 2n)` in a form without the removable `0/0` at `lambda_n = mu`.
fn corner(lambda: &[f64], mu: f64, nu: f64) -> f64 {
    let n = lambda.len();
    let x = lambda[n - 1];
    let (mut q, mut r) = (0.0, 1.0);
    for &l in &lambda[..n - 1] {
        let s = 4.0 * mu / (x * x - l * l);
        q += s * r;
        r *= 1.0 + (mu - x) * s;
    }
    (mu * (x - nu) * q - nu) / x
}

/// The global Lax matrix `L~(z) = h A~ h`.
pub fn l_tilde(z: &OscillatorPoint, params: &CouplingParams) -> CMat {
    let lambda = lambda_of_z(z, params);
    // lambda_k(z) >= nu > |kappa|, so the frame always exists
    let h = h_matrix(&lambda, params).expect("lambda(z) >= nu > |kappa|").h;
    &h * a_tilde(z, params) * &h
}

/// `H~_k = tr(L~^k) / 2k` for `k = 1..=kmax`.
pub fn dual_hk(z: &OscillatorPoint, params: &CouplingParams, kmax: usize) -> Vec<f64> {
    let l = l_tilde(z, params);
    let mut pow = l.clone();
    (1..=kmax)
        .map(|k| {
            if k > 1 {
                pow = &pow * &l;
            }
            pow.trace().re / (2.0 * k as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unitarity_residual;
    use crate::params::DualPoint;
    use crate::rsvd::{a_check_direct, f_vector};
    use approx::assert_abs_diff_eq;

    fn p(mu: f64, nu: f64, kappa: f64, n: usize) -> CouplingParams {
        CouplingParams::from_rsvd(mu, nu, kappa, n).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_positive_with_zero_components() {
        let pp = p(0.7, 1.3, 0.4, 3);
        for z in [vec![ZERO; 3], vec![c(1.0, 0.5), ZERO, c(0.0, 2.0)], vec![ZERO, c(0.3, 0.0), ZERO]] {
            assert!(g_functions(&OscillatorPoint::new(z), &pp).iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn g_one_particle() {
        let g = g_functions(&OscillatorPoint::new(vec![c(1.0, 0.0)]), &p(1.0, 2.0, 0.0, 1));
        assert_abs_diff_eq!(g[0], (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn g_times_modulus_is_f() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let dual = DualPoint::new(vec![6.1, 3.9, 2.0], vec![0.3, 2.0, 5.0]);
        let z = crate::params::z_from_angles(&dual, &pp).unwrap();
        let g = g_functions(&z, &pp);
        let f = f_vector(&dual, &pp).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(f[k].norm(), g[k] * z.z[k].norm(), epsilon = 1e-14);
            let prev = if k == 0 { 1.0 } else { z.z[k - 1].norm() };
            assert_abs_diff_eq!(f[3 + k].norm(), g[3 + k] * prev, epsilon = 1e-14);
        }
    }

    #[test]
    fn m_at_zero_is_identity() {
        assert!(m_of_theta(&[0.0, 0.0]).iter().all(|&x| x == c(1.0, 0.0)));
    }

    #[test]
    fn superdiagonal_relation() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let z = OscillatorPoint::new(vec![c(0.3, -1.0), c(0.8, 0.2), ZERO]);
        let a = a_tilde(&z, &pp);
        let g = g_functions(&z, &pp);
        for k in 0..2 {
            assert_abs_diff_eq!(a[(k, k + 1)].re, -2.0 * 0.7 * g[k] * g[3 + k + 1], epsilon = 1e-15);
            assert!(a[(k, k + 1)].norm() > 0.0);
        }
    }

    #[test]
    fn equilibrium_one_particle() {
        let pp = p(1.0, 2.0, 0.0, 1);
        let z = OscillatorPoint::new(vec![ZERO]);
        let a = a_tilde(&z, &pp);
        // lambda = 2: corrections (mu - nu)/(lambda - mu) = -1 and -(mu - nu)/(lambda + mu) = 1/3
        assert_abs_diff_eq!(a[(0, 1)].re, -1.0, epsilon = 1e-15);
        assert!(a[(0, 0)].norm() < 1e-15 && a[(1, 1)].norm() < 1e-15);
        assert!(unitarity_residual(&l_tilde(&z, &pp)) < 1e-12);
    }

    #[test]
    fn smooth_through_lambda_n_equal_mu() {
        // nu < mu lets lambda_n reach mu inside the chamber
        let pp = p(1.1, 0.5, -0.3, 2);
        let r = (1.1f64 - 0.5).sqrt();
        let z = OscillatorPoint::new(vec![c(0.4, 0.9), Complex64::from_polar(r, 0.3)]);
        assert_abs_diff_eq!(crate::params::lambda_of_z(&z, &pp)[1], 1.1, epsilon = 1e-15);
        let a = a_tilde(&z, &pp);
        assert!(a.iter().all(|x| x.is_finite()));
        assert!(unitarity_residual(&a) < 1e-12);
        let z2 = OscillatorPoint::new(z.z.iter().map(|x| x * (1.0 + 1e-7)).collect());
        assert!((a_tilde(&z2, &pp) - a).norm() < 1e-5);
    }

    #[test]
    fn agrees_with_direct_formula() {
        let pp = p(0.7, 1.3, 0.4, 3);
        let dual = DualPoint::new(vec![6.1, 3.9, 2.0], vec![0.3, 2.0, 5.0]);
        let z = crate::params::z_from_angles(&dual, &pp).unwrap();
        let m = m_of_theta(&dual.theta);
        let at = a_tilde(&z, &pp);
        let back = CMat::from_fn(6, 6, |j, k| m[j].conj() * at[(j, k)] * m[k]);
        assert!((back - a_check_direct(&dual, &pp).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn spectrum_matches_angle_chart() {
        let pp = p(1.0, 2.0, 0.5, 1);
        let dual = DualPoint::new(vec![3.0], vec![0.7]);
        let z = crate::params::z_from_angles(&dual, &pp).unwrap();
        let lt = l_tilde(&z, &pp);
        let h = h_matrix(&dual.lambda, &pp).unwrap().h;
        let hah = &h * crate::rsvd::a_check(&dual, &pp).unwrap() * &h;
        // traces of powers fix the spectrum of a 2x2 matrix
        assert!((lt.trace() - hah.trace()).norm() < 1e-12);
        assert!(((&lt * &lt).trace() - (&hah * &hah).trace()).norm() < 1e-12);
    }
}
