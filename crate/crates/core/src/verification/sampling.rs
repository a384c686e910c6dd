//! Seeded random inputs for the suites.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::matrix::{self, CMat};
use crate::sutherland::h1_closed_form;
use crate::params::{strongly_regular, CouplingParams, OscillatorPoint, SutherlandPoint};

/// Ranges for the couplings; `kappa = nu * u` with `u ~ U(-kappa_ratio, kappa_ratio)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub mu: (f64, f64),
    pub nu: (f64, f64),
    pub kappa_ratio: f64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec { mu: (0.5, 1.5), nu: (0.3, 2.5), kappa_ratio: 0.9 }
    }
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Independent stream for sample `index` of check `tag` at size `n`.
pub fn stream(seed: u64, tag: &str, n: usize, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(mix(seed) ^ fnv(tag)) ^ n as u64) ^ mix(index as u64))
}

pub fn params(rng: &mut impl Rng, spec: &SamplerSpec, n: usize) -> CouplingParams {
    let mu = rng.random_range(spec.mu.0..spec.mu.1);
    let nu = rng.random_range(spec.nu.0..spec.nu.1);
    let kappa = nu * rng.random_range(-spec.kappa_ratio..=spec.kappa_ratio);
    CouplingParams::from_rsvd(mu, nu, kappa, n).expect("sampler ranges respect the coupling constraints")
}

/// `lambda_n = nu + u_n`, `lambda_k = lambda_{k+1} + 2 mu + u_k`, `u ~ U(0.1, 3)`.
pub fn lambda(rng: &mut impl Rng, p: &CouplingParams) -> Vec<f64> {
    let n = p.n;
    let mut l = vec![0.0; n];
    l[n - 1] = p.nu.max(p.kappa.abs()) + rng.random_range(0.1..3.0);
    for k in (0..n - 1).rev() {
        l[k] = l[k + 1] + 2.0 * p.mu + rng.random_range(0.1..3.0);
    }
    l
}

/// Like [`lambda`] but also strongly regular with the given margin.
pub fn regular_lambda(rng: &mut impl Rng, p: &CouplingParams, margin: f64) -> Vec<f64> {
    loop {
        let l = lambda(rng, p);
        if strongly_regular(&l, p, margin) {
            return l;
        }
    }
}

pub fn angles(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Decreasing `q` in `(eps, pi/2 - eps)` with gaps at least `eps`.
pub fn positions(rng: &mut impl Rng, n: usize, eps: f64) -> Vec<f64> {
    loop {
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(eps..FRAC_PI_2 - eps)).collect();
        q.sort_by(|a, b| b.total_cmp(a));
        if q.windows(2).all(|w| w[0] - w[1] >= eps) {
            return q;
        }
    }
}

pub fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `q` with gaps at least `eps` and `p ~ N(0, 1)`.
pub fn phase_point(rng: &mut impl Rng, n: usize, eps: f64) -> SutherlandPoint {
    let q = positions(rng, n, eps);
    SutherlandPoint::new(q, normals(rng, n))
}

pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    Complex64::new(a, b) / 2f64.sqrt()
}

pub fn oscillator(rng: &mut impl Rng, n: usize) -> OscillatorPoint {
    OscillatorPoint::new((0..n).map(|_| complex_normal(rng)).collect())
}

pub fn ginibre(rng: &mut impl Rng, size: usize) -> CMat {
    CMat::from_fn(size, size, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary matrix.
pub fn unitary(rng: &mut impl Rng, size: usize) -> CMat {
    let qr = ginibre(rng, size).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_fn(size, size, |i, j| if i == j { r[(i, i)] / r[(i, i)].norm() } else { Complex64::ZERO });
    q * phases
}

/// Element of `G+`, built from two unitaries in the eigenbasis of `C`.
pub fn g_plus(rng: &mut impl Rng, n: usize) -> CMat {
    let (u1, u2) = (unitary(rng, n), unitary(rng, n));
    let half = Complex64::new(0.5, 0.0);
    let (s, d) = ((&u1 + &u2) * half, (&u1 - &u2) * half);
    let mut g = CMat::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&s);
    g.view_mut((n, n), (n, n)).copy_from(&s);
    g.view_mut((0, n), (n, n)).copy_from(&d);
    g.view_mut((n, 0), (n, n)).copy_from(&d);
    g
}

pub fn anti_hermitian(rng: &mut impl Rng, size: usize) -> CMat {
    let z = ginibre(rng, size);
    (&z - z.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Element of the `g-` part of `u(2n)`.
pub fn lie_minus(rng: &mut impl Rng, n: usize) -> CMat {
    let z = anti_hermitian(rng, 2 * n);
    (&z - matrix::conj_c(&z)) * Complex64::new(0.5, 0.0)
}

/// `eta e^{2iQ(q)} eta^-1` together with `q`.
pub fn group_minus(rng: &mut impl Rng, n: usize) -> (CMat, Vec<f64>) {
    let eta = g_plus(rng, n);
    let q = positions(rng, n, 0.05);
    let b = &eta * matrix::diag(&matrix::exp_iq(&q, 2.0)) * eta.adjoint();
    (b, q)
}

/// Complex matrix with determinant one.
pub fn unimodular(rng: &mut impl Rng, size: usize) -> CMat {
    let a = ginibre(rng, size);
    let d = a.determinant();
    let root = Complex64::from_polar(d.norm().powf(1.0 / size as f64), d.arg() / size as f64);
    a / root
}

/// Random permutation of `0..n`.
pub fn permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

/// `H1 / sqrt(g)` with `g` the weakest of the pair and the two wall couplings;
/// it bounds the fastest local frequency along the `H1` flow.
pub fn stiffness(point: &SutherlandPoint, p: &CouplingParams) -> f64 {
    let walls = ((p.nu + p.kappa).powi(2) / 8.0).min((p.nu - p.kappa).powi(2) / 8.0);
    let g = if p.n > 1 { walls.min(p.gamma) } else { walls };
    h1_closed_form(point, p) / g.sqrt()
}

/// Couplings and a start point with gaps at least `eps` and `dt * stiffness <= budget`.
pub fn flow_start(rng: &mut impl Rng, spec: &SamplerSpec, n: usize, eps: f64, dt: f64, budget: f64) -> (CouplingParams, SutherlandPoint) {
    loop {
        let p = params(rng, spec, n);
        let x = phase_point(rng, n, eps);
        if dt * stiffness(&x, &p) <= budget {
            return (p, x);
        }
    }
}
