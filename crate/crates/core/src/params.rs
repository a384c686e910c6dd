//! Coupling constants, phase-space points and the three charts.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance band for domain membership.
pub const DOMAIN_MARGIN: f64 = 1e-9;
/// Default tolerance band for strong regularity.
pub const REGULARITY_MARGIN: f64 = 1e-6;

/// The coupling constants in both parametrizations.
///
/// The Sutherland couplings are tied to the dual ones by
/// `gamma = mu^2`, `gamma1 = nu*kappa/2`, `gamma2 = (nu-kappa)^2/2`,
/// and the dual ones are restricted to `mu > 0`, `nu > |kappa|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct CouplingParams {
    pub n: usize,
    pub mu: f64,
    pub nu: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    n: usize,
    mu: f64,
    nu: f64,
    kappa: f64,
    /// Derived; echoed for readers and ignored on input.
    #[serde(default, skip_deserializing)]
    gamma: f64,
    #[serde(default, skip_deserializing)]
    gamma1: f64,
    #[serde(default, skip_deserializing)]
    gamma2: f64,
}

impl TryFrom<ParamsRepr> for CouplingParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        CouplingParams::from_rsvd(r.mu, r.nu, r.kappa, r.n)
    }
}

impl From<CouplingParams> for ParamsRepr {
    fn from(p: CouplingParams) -> Self {
        ParamsRepr { n: p.n, mu: p.mu, nu: p.nu, kappa: p.kappa, gamma: p.gamma, gamma1: p.gamma1, gamma2: p.gamma2 }
    }
}

impl CouplingParams {
    /// Builds the parameter set from the dual couplings `(mu, nu, kappa)`.
    pub fn from_rsvd(mu: f64, nu: f64, kappa: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n >= 1".into()));
        }
        if !(mu.is_finite() && nu.is_finite() && kappa.is_finite()) {
            return Err(Error::Parameter("couplings must be finite".into()));
        }
        if mu <= 0.0 {
            return Err(Error::Parameter("mu > 0".into()));
        }
        if nu <= kappa.abs() {
            return Err(Error::Parameter("nu > |kappa|".into()));
        }
        Ok(CouplingParams {
            n,
            mu,
            nu,
            kappa,
            gamma: mu * mu,
            gamma1: nu * kappa / 2.0,
            gamma2: (nu - kappa) * (nu - kappa) / 2.0,
        })
    }

    /// Builds the parameter set from the Sutherland couplings.
    ///
    /// The root is the unique one with `nu > |kappa|`.
    pub fn from_sutherland(gamma: f64, gamma1: f64, gamma2: f64, n: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma1.is_finite() && gamma2.is_finite()) {
            return Err(Error::Parameter("couplings must be finite".into()));
        }
        if gamma <= 0.0 {
            return Err(Error::Parameter("gamma > 0".into()));
        }
        if gamma2 <= 0.0 {
            return Err(Error::Parameter("gamma2 > 0".into()));
        }
        if 4.0 * gamma1 + gamma2 <= 0.0 {
            return Err(Error::Parameter("4*gamma1 + gamma2 > 0".into()));
        }
        let mu = gamma.sqrt();
        let s = (2.0 * gamma2).sqrt();
        let nu = 0.5 * (s + (s * s + 8.0 * gamma1).sqrt());
        let kappa = nu - s;
        let mut p = Self::from_rsvd(mu, nu, kappa, n)?;
        // keep the caller's values rather than the round-tripped ones
        p.gamma = gamma;
        p.gamma1 = gamma1;
        p.gamma2 = gamma2;
        Ok(p)
    }

    /// Same couplings, different particle number.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::from_rsvd(self.mu, self.nu, self.kappa, n)
    }

    /// Matrix size `2n`.
    pub fn big_n(&self) -> usize {
        2 * self.n
    }

    /// The minimum point of the actions, `lambda_j = nu + 2(n-j) mu`.
    pub fn lambda_min(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.nu + 2.0 * (self.n - 1 - k) as f64 * self.mu).collect()
    }
}

/// Classification of a point relative to a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Classifies by the smallest slack of the defining inequalities.
fn classify(slacks: impl IntoIterator<Item = f64>, margin: f64) -> Membership {
    let m = slacks.into_iter().fold(f64::INFINITY, f64::min);
    if m.is_nan() {
        Membership::Outside
    } else if m > margin {
        Membership::Inside
    } else if m >= -margin {
        Membership::Boundary
    } else {
        Membership::Outside
    }
}

/// Point `(q, p)` of the Sutherland phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SutherlandPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl SutherlandPoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        SutherlandPoint { q, p }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    fn slacks(&self) -> Vec<f64> {
        let n = self.q.len();
        let mut s = Vec::with_capacity(n + 1);
        if n > 0 {
            s.push(FRAC_PI_2 - self.q[0]);
            s.extend(self.q.windows(2).map(|w| w[0] - w[1]));
            s.push(self.q[n - 1]);
        }
        s
    }

    /// Position relative to `pi/2 > q_1 > ... > q_n > 0`.
    pub fn membership(&self, margin: f64) -> Membership {
        classify(self.slacks(), margin)
    }

    /// Smallest slack of the chamber inequalities.
    pub fn chamber_slack(&self) -> f64 {
        self.slacks().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Errors unless the point lies strictly inside the chamber and matches `params.n`.
    pub fn validate(&self, params: &CouplingParams, margin: f64) -> Result<()> {
        if self.q.len() != params.n || self.p.len() != params.n {
            return Err(Error::Invalid(format!(
                "expected q and p of length {}, got {} and {}",
                params.n,
                self.q.len(),
                self.p.len()
            )));
        }
        if self.p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("p must be finite".into()));
        }
        match self.membership(margin) {
            Membership::Inside => Ok(()),
            _ => Err(Error::Domain("q must satisfy pi/2 > q1 > ... > qn > 0".into())),
        }
    }

    /// Flat state `(q, p)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(x: &[f64]) -> Self {
        let n = x.len() / 2;
        SutherlandPoint { q: x[..n].to_vec(), p: x[n..].to_vec() }
    }
}

/// Point `(lambda, theta)` of the dual phase space in the angle chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
}

impl DualPoint {
    pub fn new(lambda: Vec<f64>, theta: Vec<f64>) -> Self {
        DualPoint { lambda, theta }
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Position of `lambda` relative to the chamber with thick walls.
    pub fn membership(&self, params: &CouplingParams, margin: f64) -> Membership {
        lambda_membership(&self.lambda, params, margin)
    }

    /// Errors unless lambda is strictly inside the chamber.
    pub fn validate(&self, params: &CouplingParams, margin: f64) -> Result<()> {
        if self.lambda.len() != params.n || self.theta.len() != params.n {
            return Err(Error::Invalid(format!(
                "expected lambda and theta of length {}, got {} and {}",
                params.n,
                self.lambda.len(),
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("theta must be finite".into()));
        }
        match self.membership(params, margin) {
            Membership::Inside => Ok(()),
            Membership::Boundary => Err(Error::DegenerateTorus(
                "lambda lies on the boundary of the chamber".into(),
            )),
            Membership::Outside => Err(Error::Domain(
                "lambda must satisfy lambda_a - lambda_(a+1) > 2 mu and lambda_n > max(|nu|, |kappa|)"
                    .into(),
            )),
        }
    }

    /// Same point with every angle reduced to `[0, 2 pi)`.
    pub fn canonical(&self) -> Self {
        DualPoint { lambda: self.lambda.clone(), theta: self.theta.iter().map(|&t| wrap_angle(t)).collect() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.lambda.iter().chain(&self.theta).copied().collect()
    }

    pub fn from_slice(x: &[f64]) -> Self {
        let n = x.len() / 2;
        DualPoint { lambda: x[..n].to_vec(), theta: x[n..].to_vec() }
    }
}

/// Point of the global oscillator chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorPoint {
    pub z: Vec<Complex64>,
}

impl OscillatorPoint {
    pub fn new(z: Vec<Complex64>) -> Self {
        OscillatorPoint { z }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Number of components with `|z_k| > tol`.
    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.z.iter().filter(|c| c.norm() > tol).count()
    }
}

/// Position of `lambda` relative to the chamber with thick walls.
pub fn lambda_membership(lambda: &[f64], params: &CouplingParams, margin: f64) -> Membership {
    let n = lambda.len();
    if n == 0 {
        return Membership::Outside;
    }
    let wall = params.nu.abs().max(params.kappa.abs());
    let slacks = lambda
        .windows(2)
        .map(|w| w[0] - w[1] - 2.0 * params.mu)
        .chain(std::iter::once(lambda[n - 1] - wall));
    classify(slacks, margin)
}

/// Strong regularity of `lambda` with slack `margin` on each condition.
///
/// Requires `lambda_1 > ... > lambda_n > |kappa|`, `|lambda_a +- lambda_b| != 2 mu`
/// for all `a, b` (so also `lambda_a != mu`), and
/// `(lambda_a - nu)(lambda_a - |2 mu - nu|) != 0`.
pub fn strongly_regular(lambda: &[f64], params: &CouplingParams, margin: f64) -> bool {
    let n = lambda.len();
    if n == 0 || lambda.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let mu2 = 2.0 * params.mu;
    if lambda.windows(2).any(|w| w[0] - w[1] <= margin) {
        return false;
    }
    if lambda[n - 1] - params.kappa.abs() <= margin {
        return false;
    }
    let alt = (mu2 - params.nu).abs();
    for a in 0..n {
        let la = lambda[a];
        if (la - params.nu).abs() <= margin || (la - alt).abs() <= margin {
            return false;
        }
        for b in 0..n {
            let lb = lambda[b];
            if ((la + lb).abs() - mu2).abs() <= margin {
                return false;
            }
            if a != b && ((la - lb).abs() - mu2).abs() <= margin {
                return false;
            }
        }
    }
    true
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed distance between two angles, in `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// The oscillator coordinates of an interior point of the angle chart.
pub fn z_from_angles(dual: &DualPoint, params: &CouplingParams) -> Result<OscillatorPoint> {
    dual.validate(params, 0.0)?;
    let n = dual.n();
    let mut phase = 0.0;
    let z = (0..n)
        .map(|j| {
            phase += dual.theta[j];
            let r2 = if j + 1 < n {
                dual.lambda[j] - dual.lambda[j + 1] - 2.0 * params.mu
            } else {
                dual.lambda[j] - params.nu
            };
            Complex64::from_polar(r2.sqrt(), phase)
        })
        .collect();
    Ok(OscillatorPoint { z })
}

/// The actions as functions on the oscillator chart.
pub fn lambda_of_z(z: &OscillatorPoint, params: &CouplingParams) -> Vec<f64> {
    let n = z.n();
    let mut lambda = vec![0.0; n];
    let mut tail = 0.0;
    for k in (0..n).rev() {
        tail += z.z[k].norm_sqr();
        lambda[k] = params.nu + 2.0 * (n - 1 - k) as f64 * params.mu + tail;
    }
    lambda
}

/// Inverts [`z_from_angles`] where every `z_k` is nonzero.
pub fn angles_from_z(z: &OscillatorPoint, params: &CouplingParams) -> Result<DualPoint> {
    if let Some(k) = z.z.iter().position(|c| c.norm() == 0.0) {
        return Err(Error::DegenerateChart { index: k + 1 });
    }
    let lambda = lambda_of_z(z, params);
    let mut prev = 0.0;
    let theta = z
        .z
        .iter()
        .map(|c| {
            let a = c.arg();
            let t = wrap_angle(a - prev);
            prev = a;
            t
        })
        .collect();
    Ok(DualPoint { lambda, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rsvd_to_sutherland_couplings() {
        let p = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 1).unwrap();
        assert_eq!((p.gamma, p.gamma1, p.gamma2), (1.0, 0.0, 2.0));
    }

    #[test]
    fn sutherland_to_rsvd_couplings() {
        let p = CouplingParams::from_sutherland(1.0, 0.0, 2.0, 1).unwrap();
        assert_abs_diff_eq!(p.mu, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.nu, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.kappa, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_nu_below_kappa() {
        let e = CouplingParams::from_rsvd(1.0, 1.0, 2.0, 1).unwrap_err();
        assert_eq!(e, Error::Parameter("nu > |kappa|".into()));
    }

    #[test]
    fn membership_examples() {
        let p1 = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 1).unwrap();
        assert_eq!(lambda_membership(&[2.0], &p1, 1e-12), Membership::Boundary);
        let s = SutherlandPoint::new(vec![std::f64::consts::FRAC_PI_4], vec![0.0]);
        assert_eq!(s.membership(DOMAIN_MARGIN), Membership::Inside);
        let p2 = p1.with_n(2).unwrap();
        assert_eq!(lambda_membership(&[4.5, 2.1], &p2, 0.0), Membership::Inside);
        assert_eq!(lambda_membership(&[4.5, 1.9], &p2, 0.0), Membership::Outside);
    }

    #[test]
    fn strong_regularity_examples() {
        let p1 = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 1).unwrap();
        assert!(strongly_regular(&[5f64.sqrt()], &p1, REGULARITY_MARGIN));
        assert!(!strongly_regular(&[2.0], &p1, REGULARITY_MARGIN));
        let p2 = p1.with_n(2).unwrap();
        assert!(!strongly_regular(&[4.0, 2.000001], &p2, 1e-3));
    }

    #[test]
    fn z_chart_examples() {
        let p2 = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 2).unwrap();
        let zero = OscillatorPoint::new(vec![Complex64::new(0.0, 0.0); 2]);
        assert_eq!(lambda_of_z(&zero, &p2), vec![4.0, 2.0]);
        let z = z_from_angles(&DualPoint::new(vec![5.0, 2.5], vec![0.0, 0.0]), &p2).unwrap();
        assert_abs_diff_eq!(z.z[0].re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(z.z[1].re, 0.5f64.sqrt(), epsilon = 1e-15);
        let p1 = p2.with_n(1).unwrap();
        let d = angles_from_z(&OscillatorPoint::new(vec![Complex64::new(1.0, 0.0)]), &p1).unwrap();
        assert_eq!(d.lambda, vec![3.0]);
        assert_eq!(d.theta, vec![0.0]);
    }

    #[test]
    fn degenerate_chart_reports_index() {
        let p2 = CouplingParams::from_rsvd(1.0, 2.0, 0.0, 2).unwrap();
        let z = OscillatorPoint::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(angles_from_z(&z, &p2).unwrap_err(), Error::DegenerateChart { index: 2 });
    }

    #[test]
    fn params_json_shape() {
        let p = CouplingParams::from_rsvd(1.0, 2.0, 0.5, 3).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":3,"mu":1.0,"nu":2.0,"kappa":0.5,"gamma":1.0,"gamma1":0.5,"gamma2":1.125}"#);
        let back: CouplingParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bare: CouplingParams = serde_json::from_str(r#"{"n":3,"mu":1.0,"nu":2.0,"kappa":0.5}"#).unwrap();
        assert_eq!(bare, p);
        assert!(serde_json::from_str::<CouplingParams>(r#"{"n":1,"mu":1,"nu":1,"kappa":2}"#).is_err());
    }
}
