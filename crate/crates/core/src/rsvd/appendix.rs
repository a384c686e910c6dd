//! The cofactor route from unitarity of `A` to the `W`-system.
//!
//! For each `a`, Jacobi's identity applied to `A` and `conj(A)` relates
//! determinants of Cauchy-like blocks. Evaluating every intermediate
//! quantity numerically and comparing it with its closed form shows that
//! the two `W`-system equations come out of the chain.
//!
//! The closed forms carry a factor `mu` that is easy to lose:
//! `det Psi = mu D_a W_a / (mu - l_a)`, `det Xi = mu D_a W_{n+a} / (mu + l_a)`,
//! `C_{a,n+1} = -mu D_a W_{n+a} / (mu + l_a)` and `C_{n+1,a} = -mu D_a W_a / (mu - l_a)`.

use num_complex::Complex64;
use serde::Serialize;

use super::{a_check_from_f, w_weights};
use crate::error::{Error, Result};
use crate::matrix::{minor, CMat, CVec};
use crate::params::{strongly_regular, CouplingParams, REGULARITY_MARGIN};

/// Largest relative residual of each link of the chain, over all `a`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AppendixReport {
    /// `det xi = -det eta` (Jacobi with one transposition).
    pub jacobi_transposition: f64,
    /// `xi`, `eta` are rank-one updates of `Psi`, `Xi`.
    pub block_forms: f64,
    /// Cauchy determinants of `Psi`, `Xi` and the cofactor `C_aa = D_a`.
    pub cauchy_determinants: f64,
    /// `det X = det Y = D_a` (Jacobi with the identity permutation).
    pub jacobi_identity: f64,
    /// `X` is a rank-two update of `Phi`, and `det Phi`.
    pub phi_forms: f64,
    /// Cofactors of `Phi`.
    pub phi_cofactors: f64,
    /// Rank-two determinant expansion of `det X`.
    pub rank_two_expansion: f64,
    /// First `W`-system equation with `W` read off the determinants.
    pub linear_equation: f64,
    /// Second `W`-system equation with `W` read off the determinants.
    pub quadratic_equation: f64,
}

impl AppendixReport {
    pub fn max(&self) -> f64 {
        [
            self.jacobi_transposition,
            self.block_forms,
            self.cauchy_determinants,
            self.jacobi_identity,
            self.phi_forms,
            self.phi_cofactors,
            self.rank_two_expansion,
            self.linear_equation,
            self.quadratic_equation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn rel(x: Complex64, y: Complex64, scale: f64) -> f64 {
    (x - y).norm() / scale.max(y.norm()).max(f64::MIN_POSITIVE)
}

fn cofactor(m: &CMat, i: usize, j: usize) -> Complex64 {
    let rows: Vec<usize> = (0..m.nrows()).filter(|&r| r != i).collect();
    let cols: Vec<usize> = (0..m.ncols()).filter(|&c| c != j).collect();
    let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
    minor(m, &rows, &cols) * s
}

fn sub(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Runs the chain for `F` with `|F_k|^2 = fsq_k`, `F_c >= 0` and
/// `arg F_{n+c} = theta_c`.
pub fn appendix_chain(lambda: &[f64], theta: &[f64], fsq: &[f64], params: &CouplingParams) -> Result<AppendixReport> {
    let n = lambda.len();
    let nn = 2 * n;
    if !strongly_regular(lambda, params, REGULARITY_MARGIN) {
        return Err(Error::StrongRegularity(format!("{lambda:?}")));
    }
    if fsq.len() != nn || theta.len() != n || fsq.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Invalid("need 2n nonnegative values of |F|^2 and n angles".into()));
    }
    let (mu, nu) = (params.mu, params.nu);
    let f = CVec::from_fn(nn, |k, _| {
        if k < n {
            Complex64::new(fsq[k].sqrt(), 0.0)
        } else {
            Complex64::from_polar(fsq[k].sqrt(), theta[k - n])
        }
    });
    let a = a_check_from_f(lambda, &f, params);
    let b = a.map(|x| x.conj());
    let w = w_weights(lambda, mu);
    let big_w: Vec<f64> = w.iter().zip(fsq).map(|(x, y)| x * y).collect();
    let l = lambda;
    let mut rep = AppendixReport::default();
    let bump = |slot: &mut f64, v: f64| *slot = slot.max(if v.is_nan() { f64::INFINITY } else { v });

    for ia in 0..n {
        let la = l[ia];
        let mut da = Complex64::new(1.0, 0.0);
        for bb in (0..n).filter(|&bb| bb != ia) {
            da *= f[bb].conj() * f[n + bb];
        }
        for c in (0..n).filter(|&c| c != ia) {
            for d in (0..n).filter(|&d| d != ia && d != c) {
                da *= (l[c] - l[d]) / (2.0 * mu + l[c] - l[d]);
            }
        }
        let dn = da.norm();

        // Jacobi with the transposition (a, n+a) and p = n
        let mut cols = (0..n).collect::<Vec<_>>();
        cols[ia] = n + ia;
        let xi = sub(&b, &(0..n).collect::<Vec<_>>(), &cols);
        let rows2: Vec<usize> = (n..nn).collect();
        let mut cols2 = rows2.clone();
        cols2[ia] = ia;
        let eta = sub(&a, &rows2, &cols2);
        let (dxi, deta) = (xi.determinant(), eta.determinant());
        bump(&mut rep.jacobi_transposition, rel(dxi, -deta, dn));

        let mut psi = CMat::zeros(n, n);
        let mut xim = CMat::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                if k != ia {
                    psi[(j, k)] = f[j].conj() * f[n + k] * (2.0 * mu / (2.0 * mu - l[j] + l[k]));
                    xim[(j, k)] = f[n + j] * f[k].conj() * (2.0 * mu / (2.0 * mu + l[j] - l[k]));
                } else {
                    psi[(j, k)] = f[j].conj() * f[ia] * (2.0 * mu / (2.0 * mu - l[j] - la));
                    xim[(j, k)] = f[n + j] * f[n + ia].conj() * (2.0 * mu / (2.0 * mu + l[j] + la));
                }
            }
        }
        let mut psi_e = psi.clone();
        psi_e[(ia, ia)] -= (mu - nu) / (mu - la);
        let mut xi_e = xim.clone();
        xi_e[(ia, ia)] -= (mu - nu) / (mu + la);
        bump(&mut rep.block_forms, ((&xi - psi_e).norm() + (&eta - xi_e).norm()) / dn.max(1.0));

        let (dpsi, dxim) = (psi.determinant(), xim.determinant());
        let caa = cofactor(&psi, ia, ia);
        let wa = big_w[ia];
        let wn = big_w[n + ia];
        bump(&mut rep.cauchy_determinants, rel(dpsi, da * (mu * wa / (mu - la)), dn));
        bump(&mut rep.cauchy_determinants, rel(dxim, da * (mu * wn / (mu + la)), dn));
        bump(&mut rep.cauchy_determinants, rel(caa, da, dn));

        // Jacobi with the identity permutation and p = n + 1
        let rows_x: Vec<usize> = (0..n).chain(std::iter::once(n + ia)).collect();
        let xm = sub(&b, &rows_x, &rows_x);
        let rows_y: Vec<usize> = (n..nn).filter(|&k| k != n + ia).collect();
        let dy = if rows_y.is_empty() { Complex64::new(1.0, 0.0) } else { sub(&a, &rows_y, &rows_y).determinant() };
        let dx = xm.determinant();
        bump(&mut rep.jacobi_identity, rel(dx, da, dn));
        bump(&mut rep.jacobi_identity, rel(dy, da, dn));

        let mut phi = CMat::zeros(n + 1, n + 1);
        for j in 0..n {
            for k in 0..n {
                phi[(j, k)] = f[j].conj() * f[n + k] * (2.0 * mu / (2.0 * mu - l[j] + l[k]));
            }
            phi[(j, n)] = f[j].conj() * f[ia] * (2.0 * mu / (2.0 * mu - l[j] - la));
        }
        for k in 0..n {
            phi[(n, k)] = f[n + ia].conj() * f[n + k] * (2.0 * mu / (2.0 * mu + la + l[k]));
        }
        phi[(n, n)] = f[n + ia].conj() * f[ia];
        let mut phi_e = phi.clone();
        phi_e[(ia, n)] -= (mu - nu) / (mu - la);
        phi_e[(n, ia)] -= (mu - nu) / (mu + la);
        bump(&mut rep.phi_forms, (&xm - phi_e).norm() / dn.max(1.0));
        let dphi = phi.determinant();
        let phi_closed = da * (-la * la / (mu * mu - la * la) * wa * wn);
        bump(&mut rep.phi_forms, rel(dphi, phi_closed, dn));

        let c_aa = cofactor(&phi, ia, ia);
        let c_nn = cofactor(&phi, n, n);
        let c_an = cofactor(&phi, ia, n);
        let c_na = cofactor(&phi, n, ia);
        let d2 = dn * dn;
        bump(&mut rep.phi_cofactors, rel(c_aa * c_nn, da * da * (wa * wn), d2));
        bump(&mut rep.phi_cofactors, rel(c_an, da * (-mu * wn / (mu + la)), dn));
        bump(&mut rep.phi_cofactors, rel(c_na, da * (-mu * wa / (mu - la)), dn));

        let t = mu - nu;
        let expansion = dphi - (c_an / (mu - la) + c_na / (mu + la)) * t
            + (c_an * c_na - c_aa * c_nn) * (t * t) / (dphi * ((mu - la) * (mu + la)));
        bump(&mut rep.rank_two_expansion, rel(dx, expansion, dn));

        // W read off the determinants, then the equations they must satisfy
        let wa_num = (dpsi * (mu - la) / (da * mu)).re;
        let wn_num = (dxim * (mu + la) / (da * mu)).re;
        bump(&mut rep.linear_equation, ((mu + la) * wa_num + (mu - la) * wn_num - 2.0 * t).abs());
        bump(
            &mut rep.quadratic_equation,
            (la * la * (wa_num * wn_num - 1.0) - mu * t * (wa_num + wn_num - 2.0) + nu * nu).abs(),
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsvd::f_squared_branches;

    #[test]
    fn chain_closes_on_plus_branch() {
        for (mu, nu, kappa, lam) in [
            (1.0, 2.0, 0.0, vec![3.0]),
            (0.7, 1.3, 0.4, vec![4.2, 1.9]),
            (1.1, 0.5, -0.3, vec![7.0, 4.1, 1.4]),
            (0.8, 0.6, 0.2, vec![9.0, 6.5, 3.3, 1.1]),
        ] {
            let p = CouplingParams::from_rsvd(mu, nu, kappa, lam.len()).unwrap();
            let d = f_squared_branches(&lam, &p).unwrap();
            let th: Vec<f64> = (0..lam.len()).map(|k| 0.7 + k as f64).collect();
            let r = appendix_chain(&lam, &th, &d.fsq_plus, &p).unwrap();
            assert!(r.max() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn chain_detects_perturbed_input() {
        let p = CouplingParams::from_rsvd(0.7, 1.3, 0.4, 2).unwrap();
        let lam = [4.2, 1.9];
        let d = f_squared_branches(&lam, &p).unwrap();
        let bumped: Vec<f64> = d.fsq_plus.iter().map(|x| x * 1.01).collect();
        let r = appendix_chain(&lam, &[0.1, 0.2], &bumped, &p).unwrap();
        assert!(r.max() > 1e-4);
    }
}
