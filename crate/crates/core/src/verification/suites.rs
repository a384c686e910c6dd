use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::sampling as smp;
use super::{CheckKind, Ctx, Sample};
use crate::duality::{self, backward_full, backward_map, forward_full, forward_map};
use crate::dynamics::{angle_linearity_check, AngleReport, integrate, poisson_bracket_fd, richardson_derivative, FlowSpec, Integrator, System};
use crate::error::Result;
use crate::matrix::{self, CMat, Structure, StructuredMatrix};
use crate::params::{
    angles_from_z, lambda_membership, lambda_of_z, z_from_angles, CouplingParams, DualPoint, Membership,
    OscillatorPoint, SutherlandPoint,
};
use crate::rsvd::{self, appendix_chain};
use crate::sutherland;

use CheckKind::{Identity, Informational, NegativeControl};

const EPS_Q: f64 = 0.05;
const CONSERVATIVE_EPS_Q: f64 = 0.2;
const STIFFNESS_BUDGET: f64 = 0.05;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn dual_sample(rng: &mut impl Rng, p: &CouplingParams) -> DualPoint {
    DualPoint::new(smp::lambda(rng, p), smp::angles(rng, p.n))
}

pub(super) fn structure(ctx: &mut Ctx) {
    let count = ctx.scaled(1, 1);
    for n in ctx.cfg.sizes(usize::MAX) {
        ctx.check("gamma_split", Identity, Some(n), count, 1e-12, |rng| {
            let y = smp::anti_hermitian(rng, 2 * n);
            let (plus, minus) = matrix::gamma_split(&y, 1e-12)?;
            let scale = y.norm().max(1.0);
            let r = ((&plus + &minus - &y).norm() / scale)
                .max(matrix::structure_residual(&plus, Structure::LiePlus)? / scale)
                .max(matrix::structure_residual(&minus, Structure::LieMinus)? / scale);
            Ok((r, json!({ "y": StructuredMatrix::new(y, None) })))
        });
        ctx.check("pair_diagonalize", Identity, Some(n), count, 1e-10, |rng| {
            let ym = smp::lie_minus(rng, n);
            let spec = matrix::pair_diagonalize_gminus(&ym, 1e-10)?;
            let order = spec.values.windows(2).all(|w| w[0] >= w[1]) && spec.values.iter().all(|d| *d >= 0.0);
            let r = ((spec.reconstruct() - &ym).norm() / ym.norm().max(1.0))
                .max(matrix::structure_residual(&spec.frame, Structure::GPlus)?);
            Ok((if order { r } else { f64::INFINITY }, json!({ "y_minus": StructuredMatrix::new(ym, None) })))
        });
        ctx.check("cartan_decompose", Identity, Some(n), count, 1e-9, |rng| {
            let (b, q) = smp::group_minus(rng, n);
            let (eta, q2) = matrix::cartan_decompose_gminus(&b, 1e-10)?;
            let rebuilt = &eta * matrix::diag(&matrix::exp_iq(&q2, 2.0)) * eta.adjoint();
            let r = (rebuilt - &b)
                .norm()
                .max(matrix::structure_residual(&eta, Structure::GPlus)?)
                .max(max_abs_diff(&q, &q2));
            Ok((r, json!({ "b": StructuredMatrix::new(b, None), "q": q })))
        });
        ctx.check("json_round_trip", Identity, Some(n), count.min(20), 0.0, |rng| {
            let g = StructuredMatrix::new(smp::g_plus(rng, n), Some(Structure::GPlus));
            let text = serde_json::to_string(&g).map_err(|e| crate::Error::Invalid(e.to_string()))?;
            let back: StructuredMatrix =
                serde_json::from_str(&text).map_err(|e| crate::Error::Invalid(e.to_string()))?;
            let r = if back == g { 0.0 } else { 1.0 };
            Ok((r, json!({ "text": text })))
        });
        ctx.check("perturbed_group_element", NegativeControl, Some(n), count.min(20), 1e-10, |rng| {
            let g = smp::g_plus(rng, n) + smp::ginibre(rng, 2 * n) * Complex64::new(1e-4, 0.0);
            Ok((matrix::structure_residual(&g, Structure::GPlus)?, json!({ "g": StructuredMatrix::new(g, None) })))
        });
    }
}

fn pairing_error(point: &SutherlandPoint, p: &CouplingParams, shift: f64) -> Result<f64> {
    let lax = sutherland::lax_y(point, p)?;
    let ev = sutherland::spectrum(&lax);
    let mut lambda = sutherland::action_map(point, p)?;
    if lambda_membership(&lambda, p, 0.0) == Membership::Outside {
        return Ok(f64::INFINITY);
    }
    lambda[0] += shift;
    let expected = sorted(lambda.iter().flat_map(|l| [*l, -*l]).collect());
    Ok(max_abs_diff(&ev, &expected) / lambda[0].max(1.0))
}

pub(super) fn sutherland(ctx: &mut Ctx) {
    let count = ctx.scaled(1, 1);
    let spec = ctx.cfg.sampler;
    for n in ctx.cfg.sizes(usize::MAX) {
        ctx.check("spectral_pairing", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((pairing_error(&x, &p, 0.0)?, json!({ "params": p, "point": x })))
        });
        ctx.check("hamiltonian_identities", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let kmax = n.max(2);
            let hs = sutherland::hamiltonians(&x, &p, kmax)?;
            let ht = sutherland::hamiltonians_by_trace(&x, &p, kmax)?;
            let lambda = sutherland::action_map(&x, &p)?;
            let mut r: f64 = rel(hs[0], sutherland::h1_closed_form(&x, &p));
            for k in 1..=kmax {
                let pushed = lambda.iter().map(|l| l.powi(2 * k as i32)).sum::<f64>() / (2.0 * k as f64);
                r = r.max(rel(hs[k - 1], pushed)).max(rel(ht[k - 1], pushed));
            }
            Ok((r, json!({ "params": p, "point": x })))
        });
        ctx.check("section_momentum", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let (y, big_y, v) = sutherland::section_data(&x, &p)?;
            let (r1, r2) = sutherland::momentum_residual(&y, &big_y, &v, &p)?;
            Ok((r1.max(r2) / big_y.norm().max(1.0), json!({ "params": p, "point": x })))
        });
        ctx.check("shifted_actions", NegativeControl, Some(n), count.min(20), 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((pairing_error(&x, &p, 1e-6)?, json!({ "params": p, "point": x })))
        });
    }
}

pub(super) fn rsvd(ctx: &mut Ctx) {
    let count = ctx.scaled(1, 1);
    let spec = ctx.cfg.sampler;
    for n in ctx.cfg.sizes(usize::MAX) {
        ctx.check("a_unitarity", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let a = rsvd::a_check(&d, &p)?;
            Ok((matrix::unitarity_residual(&a), json!({ "params": p, "dual": d })))
        });
        ctx.check("a_constraint", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let a = rsvd::a_check(&d, &p)?;
            let f = rsvd::f_vector(&d, &p)?;
            let r = rsvd::a_constraint_residual(&a, &d.lambda, &f, &p) / d.lambda[0].max(1.0);
            Ok((r, json!({ "params": p, "dual": d })))
        });
        ctx.check("a_routes_agree", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let r = (rsvd::a_check(&d, &p)? - rsvd::a_check_direct(&d, &p)?).norm();
            Ok((r, json!({ "params": p, "dual": d })))
        });
        ctx.check("sum_identities", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let l = smp::regular_lambda(rng, &p, 1e-3);
            let w = rsvd::f_squared_branches(&l, &p)?;
            let nn = p.big_n() as f64;
            let r = (w.sum_plus() - nn).abs().max((w.sum_minus() + nn).abs());
            Ok((r, json!({ "params": p, "lambda": l })))
        });
        ctx.check("w_system", Identity, Some(n), count, 1e-9, |rng| {
            let p = smp::params(rng, &spec, n);
            let l = smp::regular_lambda(rng, &p, 1e-3);
            let w = rsvd::f_squared_branches(&l, &p)?;
            let (a, b) = rsvd::w_system_residual(&l, &w.fsq_plus, &p)?;
            let (c, d) = rsvd::w_system_residual(&l, &w.fsq_minus, &p)?;
            Ok((a.max(b).max(c).max(d), json!({ "params": p, "lambda": l })))
        });
        ctx.check("branch_signs", Identity, Some(n), count, 0.0, |rng| {
            let p = smp::params(rng, &spec, n);
            let l = smp::regular_lambda(rng, &p, 1e-3);
            let w = rsvd::f_squared_branches(&l, &p)?;
            let low_plus = w.fsq_plus.iter().copied().fold(f64::INFINITY, f64::min);
            let low_minus = w.fsq_minus.iter().copied().fold(f64::INFINITY, f64::min);
            let r = (-low_plus).max(0.0) + low_minus.max(0.0);
            Ok((r, json!({ "params": p, "lambda": l })))
        });
        ctx.check("h0_trace", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let r = rel(rsvd::dual_h0_trace(&d, &p)?, rsvd::dual_h0_closed(&d.lambda, &d.theta, &p));
            Ok((r, json!({ "params": p, "dual": d })))
        });
        ctx.check("l_tilde_unitarity", Identity, Some(n), count, 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let z = smp::oscillator(rng, n);
            Ok((matrix::unitarity_residual(&rsvd::l_tilde(&z, &p)), json!({ "params": p, "z": z })))
        });
        ctx.check("perturbed_f_unitarity", NegativeControl, Some(n), count.min(20), 1e-10, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let mut f = rsvd::f_vector(&d, &p)?;
            f[0] *= Complex64::new(1.001, 0.0);
            let a = rsvd::a_check_from_f(&d.lambda, &f, &p);
            Ok((matrix::unitarity_residual(&a), json!({ "params": p, "dual": d })))
        });
    }
}

fn point_error(a: &SutherlandPoint, b: &SutherlandPoint) -> f64 {
    max_abs_diff(&a.to_vec(), &b.to_vec())
}

/// Round trip, worked example and invariants of the forward map at one point.
fn round_trip(x: &SutherlandPoint, p: &CouplingParams) -> Result<f64> {
    let back = backward_map(&forward_map(x, p)?, p)?;
    Ok(point_error(x, &back))
}

/// Eigenvalues of the Hermitian and anti-Hermitian parts of `L(y) = -y^-1 C y C`
/// against `-e^{+-2iq}`.
fn l_spectrum_error(y: &CMat, q: &[f64]) -> f64 {
    let n = q.len();
    let c = matrix::exchange(n);
    let l = -(y.adjoint() * &c * y * &c);
    let half = Complex64::new(0.5, 0.0);
    let re = (&l + l.adjoint()) * half;
    let im = (&l - l.adjoint()) * (half * Complex64::new(0.0, -1.0));
    let (ev_re, _) = matrix::hermitian_eigen(&re);
    let (ev_im, _) = matrix::hermitian_eigen(&im);
    let want_re = sorted(q.iter().flat_map(|x| [-(2.0 * x).cos(); 2]).collect());
    let want_im = sorted(q.iter().flat_map(|x| [(2.0 * x).sin(), -(2.0 * x).sin()]).collect());
    max_abs_diff(&ev_re, &want_re).max(max_abs_diff(&ev_im, &want_im))
}

pub(super) fn duality(ctx: &mut Ctx) {
    let count = ctx.scaled(1, 1);
    let spec = ctx.cfg.sampler;
    if ctx.cfg.n_min == 1 {
        ctx.check("worked_example", Identity, Some(1), 1, 1e-12, |_| {
            let p = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 1)?;
            let x = SutherlandPoint::new(vec![FRAC_PI_4], vec![1.0]);
            let d = forward_map(&x, &p)?;
            Ok(((d.lambda[0] - 5f64.sqrt()).abs(), json!({ "dual": d })))
        });
    }
    for n in ctx.cfg.sizes(usize::MAX) {
        ctx.check("round_trip", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((round_trip(&x, &p)?, json!({ "params": p, "point": x })))
        });
        ctx.check("reconstruction", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let b = backward_full(&d, &p)?;
            let lax = sutherland::lax_y(&b.point, &p)?;
            let r = (&b.y_final - &lax.y).norm() / lax.y.norm().max(1.0);
            let back = forward_map(&b.point, &p)?;
            let r2 = max_abs_diff(&back.lambda, &d.lambda).max(
                back.theta.iter().zip(&d.theta).map(|(a, b)| crate::params::angle_diff(*a, *b).abs()).fold(0.0, f64::max),
            );
            Ok((r.max(r2), json!({ "params": p, "dual": d })))
        });
        ctx.check("backward_momentum", Identity, Some(n), count, 1e-9, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let b = backward_full(&d, &p)?;
            let (r1, r2) = sutherland::momentum_residual(&b.y, &b.big_y, &b.v, &p)?;
            Ok((r1.max(r2) / d.lambda[0].max(1.0), json!({ "params": p, "dual": d })))
        });
        ctx.check("branch_selection", Identity, Some(n), count, 1e-9, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((forward_full(&x, &p)?.branch_error, json!({ "params": p, "point": x })))
        });
        ctx.check("h0_consistency", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let d = forward_map(&x, &p)?;
            let r = (rsvd::dual_h0_closed(&d.lambda, &d.theta, &p) - duality::h_tilde_restricted(&x.q, 1)).abs();
            Ok((r, json!({ "params": p, "point": x })))
        });
        ctx.check("dual_hamiltonians_pulled_back", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let z = z_from_angles(&forward_map(&x, &p)?, &p)?;
            let h = rsvd::dual_hk(&z, &p, n.max(2));
            let r = (1..=h.len()).map(|k| rel(h[k - 1], duality::h_tilde_restricted(&x.q, k))).fold(0.0, f64::max);
            Ok((r, json!({ "params": p, "point": x })))
        });
        ctx.check("invariants", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((duality::invariant_crosscheck(&x, &p, 4, 4)?.max_error, json!({ "params": p, "point": x })))
        });
        ctx.check("lax_spectrum_dual", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let d = dual_sample(rng, &p);
            let b = backward_full(&d, &p)?;
            Ok((l_spectrum_error(&b.y, &b.point.q), json!({ "params": p, "dual": d })))
        });
        let flipped = |rng: &mut rand_chacha::ChaCha8Rng| -> Sample {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let mut d = forward_map(&x, &p)?;
            d.theta.iter_mut().for_each(|t| *t = -*t);
            let back = backward_map(&d, &p)?;
            Ok((point_error(&x, &back), json!({ "params": p, "point": x })))
        };
        ctx.check("flipped_orientation", NegativeControl, Some(n), count.min(20), 1e-8, flipped);
    }
    let canon = ctx.scaled(1, 4);
    for n in ctx.cfg.sizes(3) {
        ctx.check("canonicity_normalized", Identity, Some(n), canon, 1e-4, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((duality::canonicity_residual_scaled(&x, &p, 1e-5, -2.0)?, json!({ "params": p, "point": x })))
        });
        ctx.check("canonicity_unit", Informational, Some(n), canon, 1e-4, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            Ok((duality::canonicity_residual(&x, &p, 1e-5)?, json!({ "params": p, "point": x })))
        });
    }
    let superint = ctx.scaled(5, 2);
    for n in ctx.cfg.sizes(3) {
        ctx.check("det_x_inverse", Identity, Some(n), superint, 1e12, |rng| {
            let q = smp::positions(rng, n, EPS_Q);
            Ok((1.0 / duality::x_matrix(&q).determinant().abs(), json!({ "q": q })))
        });
        ctx.check("superintegrability", Identity, Some(n), superint, 1e-6, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let s = duality::superintegrability_data(&x, &p, 1e-4)?;
            let mut r: f64 = 0.0;
            for (i, row) in s.brackets.iter().enumerate() {
                for (k, b) in row.iter().enumerate() {
                    r = r.max((b + if i == k { 1.0 } else { 0.0 }).abs());
                }
            }
            Ok((r, json!({ "params": p, "point": x })))
        });
    }
    let per_n = ctx.scaled(50, 1) / (ctx.cfg.n_max - ctx.cfg.n_min + 1);
    for n in ctx.cfg.sizes(usize::MAX) {
        let patterns = 1usize << n;
        ctx.check("rank_dlambda", Identity, Some(n), patterns * 4, 0.0, |rng| {
            let p = smp::params(rng, &spec, n);
            let mut z = smp::oscillator(rng, n);
            let mask = rng.random_range(0..patterns);
            for k in 0..n {
                if mask & (1 << k) != 0 {
                    z.z[k] = Complex64::ZERO;
                }
            }
            let rank = duality::rank_of_dlambda(&z, &p);
            let r = (rank as f64 - z.nonzero_count(1e-9) as f64).abs();
            Ok((r, json!({ "params": p, "z": z, "rank": rank })))
        });
        ctx.check("equilibrium", Identity, Some(n), per_n, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let z = match rng.random_range(0..100) {
                0 => OscillatorPoint::new(vec![Complex64::ZERO; n]),
                _ => smp::oscillator(rng, n),
            };
            let h1 = |l: &[f64]| 0.5 * l.iter().map(|x| x * x).sum::<f64>();
            let lam0: Vec<f64> = (0..n).map(|j| p.nu + 2.0 * (n - 1 - j) as f64 * p.mu).collect();
            let base = h1(&lambda_of_z(&OscillatorPoint::new(vec![Complex64::ZERO; n]), &p));
            let mut r = rel(base, h1(&lam0));
            let hz = h1(&lambda_of_z(&z, &p));
            let zero = z.nonzero_count(0.0) == 0;
            if (zero && hz != base) || (!zero && hz <= base) {
                r = f64::INFINITY;
            }
            if z.nonzero_count(1e-3) == n {
                let s = backward_map(&angles_from_z(&z, &p)?, &p)?;
                let hs = sutherland::h1_closed_form(&s, &p);
                r = r.max(rel(hs, hz));
                if hs < base {
                    r = f64::INFINITY;
                }
            }
            Ok((r, json!({ "params": p, "z": z })))
        });
    }
}

/// Summary of one Sutherland H1 trajectory.
pub(crate) struct H1Run {
    pub params: CouplingParams,
    pub point: SutherlandPoint,
    pub energy_drift: f64,
    pub lambda_drift: f64,
    pub hk_drift: f64,
    pub angles: AngleReport,
}

/// Integrates H1 for `T = 10` at `dt = 1e-3` from a conservative start.
pub(crate) fn h1_run(rng: &mut impl Rng, spec: &smp::SamplerSpec, n: usize) -> Result<H1Run> {
    let (params, point) = smp::flow_start(rng, spec, n, CONSERVATIVE_EPS_Q, 1e-3, STIFFNESS_BUDGET);
    let tr = integrate(&FlowSpec::new(System::SutherlandH1, 1e-3, 10.0), &point.to_vec(), &params)?;
    let relative = |name: &str| {
        let i = tr.monitor_names.iter().position(|m| m == name).expect("monitor exists");
        tr.monitor_drift(name).unwrap_or(f64::INFINITY) / tr.monitors[0][i].abs().max(1.0)
    };
    let energy_drift = relative("energy");
    let hk_drift = (1..=n).map(|k| relative(&format!("H{k}"))).fold(0.0, f64::max);
    let angles = angle_linearity_check(&tr, &params)?;
    Ok(H1Run { params, point, energy_drift, lambda_drift: tr.max_drift("lambda"), hk_drift, angles })
}

fn fd_gradient<F: Fn(&[f64]) -> Result<f64>>(f: &F, x: &[f64]) -> Result<Vec<f64>> {
    (0..x.len()).map(|i| richardson_derivative(f, x, i, 1e-4)).collect()
}

/// Largest `|{H_i, H_j}| / (|grad H_i| |grad H_j|)` over `i <= j <= kmax`, `H_j` taken with couplings `q`.
fn involution_defect(x: &SutherlandPoint, p: &CouplingParams, q: &CouplingParams, kmax: usize) -> Result<f64> {
    let state = x.to_vec();
    let mut r: f64 = 0.0;
    for i in 1..=kmax {
        for j in i..=kmax {
            let fa = |s: &[f64]| Ok(sutherland::hamiltonians(&SutherlandPoint::from_slice(s), p, i)?[i - 1]);
            let fb = |s: &[f64]| Ok(sutherland::hamiltonians(&SutherlandPoint::from_slice(s), q, j)?[j - 1]);
            let na = fd_gradient(&fa, &state)?.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = fd_gradient(&fb, &state)?.iter().map(|v| v * v).sum::<f64>().sqrt();
            r = r.max(poisson_bracket_fd(fa, fb, &state, 1e-4)?.abs() / (na * nb).max(f64::MIN_POSITIVE));
        }
    }
    Ok(r)
}

/// Largest `|{H_i, H_j}|` over `i <= j <= kmax` from exact gradients, `H_j` taken with couplings `q`;
/// with `normalized` each bracket is divided by `|grad H_i| |grad H_j|`.
fn exact_involution_defect(x: &SutherlandPoint, p: &CouplingParams, q: &CouplingParams, kmax: usize, normalized: bool) -> Result<f64> {
    let grads = |c: &CouplingParams| (1..=kmax).map(|k| sutherland::grad_hk(x, c, k)).collect::<Result<Vec<_>>>();
    let (ga, gb) = (grads(p)?, grads(q)?);
    let norm = |(a, b): &(Vec<f64>, Vec<f64>)| a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt();
    let mut r: f64 = 0.0;
    for i in 0..kmax {
        for j in i..kmax {
            let ((aq, ap), (bq, bp)) = (&ga[i], &gb[j]);
            let b = (0..x.n()).map(|c| aq[c] * bp[c] - ap[c] * bq[c]).sum::<f64>().abs();
            r = r.max(if normalized { b / (norm(&ga[i]) * norm(&gb[j])).max(f64::MIN_POSITIVE) } else { b });
        }
    }
    Ok(r)
}

pub(super) fn dynamics(ctx: &mut Ctx) {
    let spec = ctx.cfg.sampler;
    let runs = ctx.scaled(1, 40);
    for n in ctx.cfg.sizes(3) {
        let flows: Vec<std::result::Result<H1Run, String>> = (0..runs)
            .into_par_iter()
            .map(|i| {
                let mut rng = smp::stream(ctx.cfg.seed, "dynamics/h1_flow", n, i);
                h1_run(&mut rng, &spec, n).map_err(|e| e.to_string())
            })
            .collect();
        let get = |i: usize| -> Result<&H1Run> { flows[i].as_ref().map_err(|e| crate::Error::Invalid(e.clone())) };
        let state = |r: &H1Run| json!({ "params": r.params, "point": r.point });
        ctx.check_indexed("h1_energy_drift", Identity, Some(n), runs, 1e-8, |i, _| {
            let r = get(i)?;
            Ok((r.energy_drift, state(r)))
        });
        ctx.check_indexed("h1_action_drift", Identity, Some(n), runs, 1e-6, |i, _| {
            let r = get(i)?;
            Ok((r.lambda_drift, state(r)))
        });
        ctx.check_indexed("h1_conserves_hk", Identity, Some(n), runs, 1e-6, |i, _| {
            let r = get(i)?;
            Ok((r.hk_drift, state(r)))
        });
        ctx.check_indexed("angle_fit_residual", Identity, Some(n), runs, 1e-5, |i, _| {
            let r = get(i)?;
            Ok((r.angles.fit_residual, state(r)))
        });
        ctx.check_indexed("angle_slope_normalized", Identity, Some(n), runs, 1e-4, |i, _| {
            let r = get(i)?;
            Ok((r.angles.slope_error(2.0), state(r)))
        });
        ctx.check_indexed("angle_slope_unit", Informational, Some(n), runs, 1e-4, |i, _| {
            let r = get(i)?;
            Ok((r.angles.slope_error(1.0), state(r)))
        });
        ctx.check("dual_h0_position_drift", Identity, Some(n), runs, 1e-6, |rng| {
            let (p, mut x) = smp::flow_start(rng, &spec, n, CONSERVATIVE_EPS_Q, 1e-3, STIFFNESS_BUDGET);
            x.p.iter_mut().for_each(|v| *v = v.abs() + 0.3);
            let d = forward_map(&x, &p)?;
            let tr = integrate(&FlowSpec::new(System::DualH0, 1e-3, 10.0), &d.to_vec(), &p)?;
            Ok((tr.max_drift("q"), json!({ "params": p, "point": x })))
        });
        let inv = ctx.scaled(1, 10);
        if n >= 2 {
            ctx.check("involutivity", Identity, Some(n), inv, 1e-6, |rng| {
                let p = smp::params(rng, &spec, n);
                let x = smp::phase_point(rng, n, EPS_Q);
                Ok((exact_involution_defect(&x, &p, &p, n, true)?, json!({ "params": p, "point": x })))
            });
            ctx.check("involutivity_absolute", Informational, Some(n), inv, 1e-6, |rng| {
                let p = smp::params(rng, &spec, n);
                let x = smp::phase_point(rng, n, EPS_Q);
                Ok((exact_involution_defect(&x, &p, &p, n, false)?, json!({ "params": p, "point": x })))
            });
            ctx.check("involutivity_fd_normalized", Identity, Some(n), inv.min(20), 1e-6, |rng| {
                let p = smp::params(rng, &spec, n);
                let x = smp::phase_point(rng, n, EPS_Q);
                Ok((involution_defect(&x, &p, &p, n)?, json!({ "params": p, "point": x })))
            });
            ctx.check("mismatched_couplings", NegativeControl, Some(n), inv.min(20), 1e-6, |rng| {
                let p = smp::params(rng, &spec, n);
                let q = CouplingParams::from_rsvd(p.mu * 3.0, p.nu * 1.5, p.kappa * 1.5, n)?;
                let mut x = smp::phase_point(rng, n, CONSERVATIVE_EPS_Q);
                x.p.iter_mut().for_each(|v| *v *= 0.3);
                Ok((exact_involution_defect(&x, &p, &q, n, true)?, json!({ "params": p, "point": x })))
            });
        }
        ctx.check("action_brackets", Identity, Some(n), inv, 1e-5, |rng| {
            let p = smp::params(rng, &spec, n);
            let x = smp::phase_point(rng, n, EPS_Q);
            let state = x.to_vec();
            let mut r: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let fa = |s: &[f64]| Ok(sutherland::action_map(&SutherlandPoint::from_slice(s), &p)?[i]);
                    let fb = |s: &[f64]| Ok(sutherland::action_map(&SutherlandPoint::from_slice(s), &p)?[j]);
                    r = r.max(poisson_bracket_fd(fa, fb, &state, 1e-4)?.abs());
                }
            }
            Ok((r, json!({ "params": p, "point": x })))
        });
        ctx.check("canonical_brackets", Identity, Some(n), inv.min(20), 1e-9, |rng| {
            let x = smp::phase_point(rng, n, EPS_Q).to_vec();
            let mut r: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let b = poisson_bracket_fd(|s| Ok(s[i]), |s| Ok(s[n + j]), &x, 1e-4)?;
                    r = r.max((b - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            Ok((r, json!({ "state": x })))
        });
        ctx.check("time_reversal", Identity, Some(n), inv.min(20), 1e-9, |rng| {
            let (p, x) = smp::flow_start(rng, &spec, n, CONSERVATIVE_EPS_Q, 1e-3, STIFFNESS_BUDGET);
            let flow = FlowSpec::new(System::SutherlandH1, 1e-3, 0.1);
            let integ = Integrator::new(&flow, &p)?;
            let mut s = x.to_vec();
            for _ in 0..100 {
                s = integ.step(&s, 1e-3)?;
            }
            for _ in 0..100 {
                s = integ.step(&s, -1e-3)?;
            }
            Ok((max_abs_diff(&s, &x.to_vec()), json!({ "params": p, "point": x })))
        });
    }
}

pub(super) fn appendix(ctx: &mut Ctx) {
    let spec = ctx.cfg.sampler;
    let count = ctx.scaled(1, 2);
    for size in [4usize, 6, 8] {
        ctx.check("jacobi_minors", Identity, Some(size / 2), count, 1e-10, |rng| {
            let a = smp::unimodular(rng, size);
            let rows = smp::permutation(rng, size);
            let cols = smp::permutation(rng, size);
            let p = rng.random_range(1..size);
            let scale = matrix::minor(&a, &rows[p..], &cols[p..]).norm().max(1.0);
            let r = matrix::jacobi_minor_residual(&a, &rows, &cols, p)? / scale;
            Ok((r, json!({ "a": StructuredMatrix::new(a, None), "rows": rows, "cols": cols, "p": p })))
        });
    }
    let count = ctx.scaled(1, 1);
    for n in ctx.cfg.sizes(usize::MAX) {
        ctx.check("cofactor_chain", Identity, Some(n), count, 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let l = smp::regular_lambda(rng, &p, 1e-2);
            let th = smp::angles(rng, n);
            let w = rsvd::f_squared_branches(&l, &p)?;
            Ok((appendix_chain(&l, &th, &w.fsq_plus, &p)?.max(), json!({ "params": p, "lambda": l, "theta": th })))
        });
        ctx.check("perturbed_chain", NegativeControl, Some(n), count.min(20), 1e-8, |rng| {
            let p = smp::params(rng, &spec, n);
            let l = smp::regular_lambda(rng, &p, 1e-2);
            let th = smp::angles(rng, n);
            let w = rsvd::f_squared_branches(&l, &p)?;
            let bumped: Vec<f64> = w.fsq_plus.iter().map(|x| x * 1.01).collect();
            Ok((appendix_chain(&l, &th, &bumped, &p)?.max(), json!({ "params": p, "lambda": l, "theta": th })))
        });
    }
}
