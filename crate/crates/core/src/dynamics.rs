//! Symplectic integration of the Sutherland and dual flows.
//!
//! Both charts are canonical: `(q, p)` and `(lambda, theta)` enter as
//! `(x, y)` with `x' = dH/dy`, `y' = -dH/dx`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::duality::{backward_map, forward_map};
use crate::error::{Error, Result};
use crate::params::{angle_diff, lambda_membership, z_from_angles, CouplingParams, DualPoint, Membership, SutherlandPoint};
use crate::{rsvd, sutherland};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    SutherlandH1,
    SutherlandHk(usize),
    DualH0,
    DualHk(usize),
}

impl System {
    pub fn chart(self) -> Chart {
        match self {
            System::SutherlandH1 | System::SutherlandHk(_) => Chart::Qp,
            System::DualH0 | System::DualHk(_) => Chart::LambdaTheta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Qp,
    LambdaTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Analytic,
    FiniteDifference(f64),
}

/// Step rule: implicit midpoint, or its symmetric triple-jump compositions
/// of order 4, 6 and 8 (3, 9 and 27 midpoint stages).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Midpoint,
    Yoshida4,
    TripleJump6,
    TripleJump8,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Midpoint => 2,
            Scheme::Yoshida4 => 4,
            Scheme::TripleJump6 => 6,
            Scheme::TripleJump8 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub system: System,
    pub chart: Chart,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub gradient: GradientMode,
    pub scheme: Scheme,
    /// Distance to the domain boundary that aborts the run.
    pub margin: f64,
}

impl FlowSpec {
    /// Spec with the default gradient mode, scheme and margin.
    pub fn new(system: System, dt: f64, t_end: f64) -> Self {
        let gradient = match system {
            System::SutherlandH1 | System::SutherlandHk(_) | System::DualH0 => GradientMode::Analytic,
            _ => GradientMode::FiniteDifference(1e-6),
        };
        FlowSpec { system, chart: system.chart(), dt, t_end, gradient, scheme: Scheme::TripleJump8, margin: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chart != self.system.chart() {
            return Err(Error::Invalid("chart does not match the system".into()));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt < self.t_end) {
            return Err(Error::Invalid("need 0 < dt < T".into()));
        }
        if let System::SutherlandHk(k) | System::DualHk(k) = self.system {
            if k == 0 {
                return Err(Error::Invalid("k >= 1".into()));
            }
        }
        if let (System::DualHk(_), GradientMode::Analytic) = (self.system, self.gradient) {
            return Err(Error::Invalid("dual H_k flows need finite-difference gradients".into()));
        }
        if let GradientMode::FiniteDifference(h) = self.gradient {
            if !(h > 0.0) {
                return Err(Error::Invalid("finite-difference step must be positive".into()));
            }
        }
        if !(self.margin > 0.0) {
            return Err(Error::Invalid("margin must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Times, states and monitored quantities of an integration run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub spec: FlowSpec,
    pub params: CouplingParams,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitor_names: Vec<String>,
    pub monitors: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn state_names(&self) -> Vec<String> {
        let n = self.params.n;
        let (a, b) = match self.spec.chart {
            Chart::Qp => ("q", "p"),
            Chart::LambdaTheta => ("lambda", "theta"),
        };
        (1..=n).map(|j| format!("{a}{j}")).chain((1..=n).map(|j| format!("{b}{j}"))).collect()
    }

    /// Largest deviation of the named monitor from its initial value.
    pub fn monitor_drift(&self, name: &str) -> Option<f64> {
        let i = self.monitor_names.iter().position(|m| m == name)?;
        let x0 = self.monitors[0][i];
        Some(self.monitors.iter().map(|m| (m[i] - x0).abs()).fold(0.0, f64::max))
    }

    /// Largest drift over every monitor whose name starts with `prefix`.
    pub fn max_drift(&self, prefix: &str) -> f64 {
        self.monitor_names
            .iter()
            .filter(|m| m.starts_with(prefix))
            .filter_map(|m| self.monitor_drift(m))
            .fold(0.0, f64::max)
    }
}

/// Hamiltonian vector field of one [`FlowSpec`] with a fixed step rule.
pub struct Integrator<'a> {
    pub spec: &'a FlowSpec,
    pub params: &'a CouplingParams,
}

impl<'a> Integrator<'a> {
    pub fn new(spec: &'a FlowSpec, params: &'a CouplingParams) -> Result<Self> {
        spec.validate()?;
        Ok(Integrator { spec, params })
    }

    fn n(&self) -> usize {
        self.params.n
    }

    /// Errors if `x` is within the margin of the boundary.
    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        let n = self.n();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite state".into()));
        }
        let inside = match self.spec.chart {
            Chart::Qp => SutherlandPoint::from_slice(x).chamber_slack() > self.spec.margin,
            Chart::LambdaTheta => {
                lambda_membership(&x[..n], self.params, self.spec.margin) == Membership::Inside
            }
        };
        if inside {
            Ok(())
        } else {
            Err(Error::BoundaryApproach { t: f64::NAN })
        }
    }

    pub fn hamiltonian(&self, x: &[f64]) -> Result<f64> {
        let p = self.params;
        let n = self.n();
        match self.spec.system {
            System::SutherlandH1 => Ok(sutherland::h1_closed_form(&SutherlandPoint::from_slice(x), p)),
            System::SutherlandHk(k) => Ok(sutherland::hamiltonians(&SutherlandPoint::from_slice(x), p, k)?[k - 1]),
            System::DualH0 => Ok(rsvd::dual_h0_closed(&x[..n], &x[n..], p)),
            System::DualHk(k) => {
                let z = z_from_angles(&DualPoint::from_slice(x), p)?;
                Ok(rsvd::dual_hk(&z, p, k)[k - 1])
            }
        }
    }

    /// `dH/dx` in the chart coordinates.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        match (self.spec.gradient, self.spec.system) {
            (GradientMode::Analytic, System::SutherlandH1) => {
                let (dq, dp) = sutherland::grad_h1(&SutherlandPoint::from_slice(x), self.params);
                Ok(dq.into_iter().chain(dp).collect())
            }
            (GradientMode::Analytic, System::SutherlandHk(k)) => {
                let (dq, dp) = sutherland::grad_hk(&SutherlandPoint::from_slice(x), self.params, k)?;
                Ok(dq.into_iter().chain(dp).collect())
            }
            (GradientMode::Analytic, System::DualH0) => {
                let (dl, dt) = rsvd::grad_dual_h0(&x[..n], &x[n..], self.params);
                Ok(dl.into_iter().chain(dt).collect())
            }
            (GradientMode::Analytic, _) => Err(Error::Invalid("no analytic gradient".into())),
            (GradientMode::FiniteDifference(h), _) => {
                let mut g = vec![0.0; 2 * n];
                let mut y = x.to_vec();
                for i in 0..2 * n {
                    y[i] = x[i] + h;
                    let hp = self.hamiltonian(&y)?;
                    y[i] = x[i] - h;
                    let hm = self.hamiltonian(&y)?;
                    y[i] = x[i];
                    g[i] = (hp - hm) / (2.0 * h);
                }
                Ok(g)
            }
        }
    }

    /// `J grad H`.
    pub fn vector_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let g = self.gradient(x)?;
        Ok((0..2 * n).map(|i| if i < n { g[n + i] } else { -g[i - n] }).collect())
    }

    fn field_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let m = x.len();
        let h = match self.spec.gradient {
            GradientMode::Analytic => 1e-6,
            GradientMode::FiniteDifference(s) => (s * 100.0).min(1e-3),
        };
        let mut jac = DMatrix::zeros(m, m);
        let mut y = x.to_vec();
        for i in 0..m {
            y[i] = x[i] + h;
            let fp = self.vector_field(&y)?;
            y[i] = x[i] - h;
            let fm = self.vector_field(&y)?;
            y[i] = x[i];
            for r in 0..m {
                jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// One implicit-midpoint step `x1 = x0 + dt f((x0 + x1)/2)`.
    pub fn midpoint_step(&self, x0: &[f64], dt: f64) -> Result<Vec<f64>> {
        let m = x0.len();
        let mid = |k: &DVector<f64>| -> Vec<f64> { (0..m).map(|i| x0[i] + 0.5 * k[i]).collect() };
        let mut k = DVector::from_vec(self.vector_field(x0)?) * dt;
        let scale = 1.0 + x0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut lu = None;
        let mut last = f64::INFINITY;
        for it in 0..50 {
            let xm = mid(&k);
            let f = DVector::from_vec(self.vector_field(&xm)?);
            let g = &k - f * dt;
            if lu.is_none() || it % 8 == 7 {
                let jac = DMatrix::identity(m, m) - self.field_jacobian(&xm)? * (0.5 * dt);
                lu = Some(jac.lu());
            }
            let delta = lu.as_ref().unwrap().solve(&g).ok_or(Error::Singular)?;
            k -= &delta;
            last = delta.amax();
            if last <= 1e-12 * scale {
                return Ok((0..m).map(|i| x0[i] + k[i]).collect());
            }
        }
        Err(Error::Newton { t: f64::NAN, residual: last })
    }

    pub fn step(&self, x0: &[f64], dt: f64) -> Result<Vec<f64>> {
        self.composed_step(x0, dt, self.spec.scheme.order())
    }

    fn composed_step(&self, x0: &[f64], dt: f64, order: u32) -> Result<Vec<f64>> {
        if order <= 2 {
            return self.midpoint_step(x0, dt);
        }
        let r = 2f64.powf(1.0 / (order - 1) as f64);
        let w1 = 1.0 / (2.0 - r);
        let w0 = -r * w1;
        let a = self.composed_step(x0, w1 * dt, order - 2)?;
        let b = self.composed_step(&a, w0 * dt, order - 2)?;
        self.composed_step(&b, w1 * dt, order - 2)
    }

    /// Names of the monitored quantities.
    pub fn monitor_names(&self) -> Vec<String> {
        let n = self.n();
        let mut names = vec!["energy".to_string()];
        match self.spec.chart {
            Chart::Qp => {
                names.extend((1..=n).map(|j| format!("lambda{j}")));
                names.extend((1..=n).map(|k| format!("H{k}")));
            }
            Chart::LambdaTheta => names.extend((1..=n).map(|j| format!("q{j}"))),
        }
        names
    }

    pub fn monitors(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut out = vec![self.hamiltonian(x)?];
        match self.spec.chart {
            Chart::Qp => {
                let pt = SutherlandPoint::from_slice(x);
                out.extend(sutherland::action_map(&pt, self.params)?);
                out.extend(sutherland::hamiltonians(&pt, self.params, n)?);
            }
            Chart::LambdaTheta => out.extend(backward_map(&DualPoint::from_slice(x), self.params)?.q),
        }
        Ok(out)
    }
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::BoundaryApproach { .. } => Error::BoundaryApproach { t },
        Error::Newton { residual, .. } => Error::Newton { t, residual },
        other => other,
    }
}

/// Integrates the flow from `x0` for `round(T/dt)` steps.
pub fn integrate(spec: &FlowSpec, x0: &[f64], params: &CouplingParams) -> Result<Trajectory> {
    let integ = Integrator::new(spec, params)?;
    if x0.len() != 2 * params.n {
        return Err(Error::Invalid(format!("initial state must have {} components", 2 * params.n)));
    }
    match spec.chart {
        Chart::Qp => SutherlandPoint::from_slice(x0).validate(params, spec.margin)?,
        Chart::LambdaTheta => DualPoint::from_slice(x0).validate(params, spec.margin)?,
    }
    let steps = spec.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut monitors = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    monitors.push(integ.monitors(&x)?);
    states.push(x.clone());
    for s in 1..=steps {
        let t = s as f64 * spec.dt;
        x = integ.step(&x, spec.dt).map_err(|e| at_time(e, t))?;
        integ.check_domain(&x).map_err(|e| at_time(e, t))?;
        times.push(t);
        monitors.push(integ.monitors(&x).map_err(|e| at_time(e, t))?);
        states.push(x.clone());
    }
    Ok(Trajectory { spec: spec.clone(), params: *params, times, states, monitor_names: integ.monitor_names(), monitors })
}

fn central<F>(f: &F, x: &[f64], i: usize, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut y = x.to_vec();
    y[i] = x[i] + h;
    let fp = f(&y)?;
    y[i] = x[i] - h;
    let fm = f(&y)?;
    Ok((fp - fm) / (2.0 * h))
}

/// Derivative by central differences with one Richardson step (`h`, `h/2`).
pub fn richardson_derivative<F>(f: &F, x: &[f64], i: usize, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d1 = central(f, x, i, h)?;
    let d2 = central(f, x, i, 0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `{a, b}` at `x = (x_1..x_n, y_1..y_n)` in canonical coordinates.
pub fn poisson_bracket_fd<A, B>(fa: A, fb: B, x: &[f64], step: f64) -> Result<f64>
where
    A: Fn(&[f64]) -> Result<f64>,
    B: Fn(&[f64]) -> Result<f64>,
{
    let n = x.len() / 2;
    let mut s = 0.0;
    for j in 0..n {
        let (ax, ay) = (richardson_derivative(&fa, x, j, step)?, richardson_derivative(&fa, x, n + j, step)?);
        let (bx, by) = (richardson_derivative(&fb, x, j, step)?, richardson_derivative(&fb, x, n + j, step)?);
        s += ax * by - ay * bx;
    }
    Ok(s)
}

/// Fitted angle evolution along a Sutherland flow.
#[derive(Debug, Clone, Serialize)]
pub struct AngleReport {
    /// Fitted `d theta_j / dt`.
    pub slopes: Vec<f64>,
    /// `dH_k/dlambda_j` at the initial point.
    pub frequencies: Vec<f64>,
    /// Largest deviation of the unwrapped angles from their fitted lines.
    pub fit_residual: f64,
    /// Largest deviation of `lambda(t)` from `lambda(0)`.
    pub lambda_drift: f64,
    /// Largest angle increment between consecutive samples.
    pub max_increment: f64,
}

impl AngleReport {
    /// `max_j |slope_j - s * frequency_j|`.
    pub fn slope_error(&self, s: f64) -> f64 {
        self.slopes.iter().zip(&self.frequencies).map(|(a, b)| (a - s * b).abs()).fold(0.0, f64::max)
    }
}

/// Maps a Sutherland trajectory to angle variables and fits `theta(t)` by lines.
pub fn angle_linearity_check(traj: &Trajectory, params: &CouplingParams) -> Result<AngleReport> {
    let k = match traj.spec.system {
        System::SutherlandH1 => 1,
        System::SutherlandHk(k) => k,
        _ => return Err(Error::Invalid("angle linearity needs a Sutherland flow".into())),
    };
    let n = params.n;
    let duals: Vec<DualPoint> =
        traj.states.iter().map(|x| forward_map(&SutherlandPoint::from_slice(x), params)).collect::<Result<_>>()?;
    let d0 = &duals[0];
    let lambda_drift = duals
        .iter()
        .flat_map(|d| d.lambda.iter().zip(&d0.lambda).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    let energy = |x: &[f64]| -> Result<f64> {
        let s = backward_map(&DualPoint::from_slice(x), params)?;
        Ok(sutherland::hamiltonians(&s, params, k)?[k - 1])
    };
    let x0 = d0.to_vec();
    let frequencies = (0..n).map(|j| richardson_derivative(&energy, &x0, j, 1e-4)).collect::<Result<Vec<_>>>()?;

    let dt = traj.spec.dt;
    let fastest = frequencies.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    let mut max_increment: f64 = 0.0;
    let mut unwrapped = vec![d0.theta.clone()];
    for w in duals.windows(2) {
        let prev = unwrapped.last().unwrap().clone();
        let next: Vec<f64> = (0..n)
            .map(|j| {
                let d = angle_diff(w[1].theta[j], w[0].theta[j]);
                max_increment = max_increment.max(d.abs());
                prev[j] + d
            })
            .collect();
        unwrapped.push(next);
    }
    if max_increment > 0.5 * std::f64::consts::PI || 2.0 * dt * fastest > std::f64::consts::PI {
        return Err(Error::Invalid(format!(
            "phase unwrapping is ambiguous: angle increments up to {max_increment} per step"
        )));
    }

    let t = &traj.times;
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let stt: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    let mut slopes = vec![0.0; n];
    let mut fit_residual: f64 = 0.0;
    for j in 0..n {
        let ym = unwrapped.iter().map(|u| u[j]).sum::<f64>() / m;
        let sty: f64 = t.iter().zip(&unwrapped).map(|(x, u)| (x - tm) * (u[j] - ym)).sum();
        let b = sty / stt;
        let a = ym - b * tm;
        slopes[j] = b;
        for (x, u) in t.iter().zip(&unwrapped) {
            fit_residual = fit_residual.max((u[j] - a - b * x).abs());
        }
    }
    Ok(AngleReport { slopes, frequencies, fit_residual, lambda_drift, max_increment })
}
