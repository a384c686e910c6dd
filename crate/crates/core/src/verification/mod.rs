//! Named, seeded verification suites with residual statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub mod sampling;
mod suites;

pub use sampling::SamplerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Structure,
    Sutherland,
    Rsvd,
    Duality,
    Dynamics,
    Appendix,
    All,
    /// Every negative control, judged as if it were an identity.
    Negative,
}

impl Suite {
    pub const NAMES: [&'static str; 8] =
        ["structure", "sutherland", "rsvd", "duality", "dynamics", "appendix", "all", "negative"];

    pub fn parse(s: &str) -> Option<Suite> {
        Some(match s {
            "structure" => Suite::Structure,
            "sutherland" => Suite::Sutherland,
            "rsvd" => Suite::Rsvd,
            "duality" => Suite::Duality,
            "dynamics" => Suite::Dynamics,
            "appendix" => Suite::Appendix,
            "all" => Suite::All,
            "negative" => Suite::Negative,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        Suite::NAMES[self as usize]
    }

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All | Suite::Negative => vec![
                Suite::Structure,
                Suite::Sutherland,
                Suite::Rsvd,
                Suite::Duality,
                Suite::Dynamics,
                Suite::Appendix,
            ],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub n_min: usize,
    pub n_max: usize,
    pub sampler: SamplerSpec,
    /// Base sample count; individual checks scale it.
    pub samples: usize,
    pub seed: u64,
    /// Overrides keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
    /// Worker threads; 0 uses the rayon default.
    #[serde(skip)]
    pub jobs: usize,
}

impl SuiteConfig {
    pub fn new(suite: Suite, seed: u64) -> Self {
        SuiteConfig {
            suite,
            n_min: 1,
            n_max: 4,
            sampler: SamplerSpec::default(),
            samples: 200,
            seed,
            tolerances: BTreeMap::new(),
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::Invalid("need 1 <= n_min <= n_max".into()));
        }
        if self.samples == 0 {
            return Err(Error::Invalid("need at least one sample".into()));
        }
        let s = &self.sampler;
        if !(s.mu.0 > 0.0 && s.mu.0 < s.mu.1 && s.nu.0 > 0.0 && s.nu.0 < s.nu.1) {
            return Err(Error::Invalid("sampler ranges must be nonempty and positive".into()));
        }
        if !(0.0..1.0).contains(&s.kappa_ratio) {
            return Err(Error::Invalid("kappa_ratio must lie in [0, 1)".into()));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::Invalid(format!("tolerance for {k} must be nonnegative, got {v}")));
        }
        Ok(())
    }

    fn sizes(&self, cap: usize) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max.min(cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Residual must not exceed the tolerance.
    Identity,
    /// Residual of a perturbed input must exceed ten times the tolerance.
    NegativeControl,
    /// Reported but excluded from the verdict.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub kind: CheckKind,
    pub n: Option<usize>,
    pub tolerance: f64,
    pub count: usize,
    pub failures: usize,
    pub max: f64,
    pub mean: f64,
    pub pass: bool,
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Summary table, one row per check.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,kind,n,count,failures,max,mean,tolerance,pass\n");
        for c in &self.checks {
            let kind = match c.kind {
                CheckKind::Identity => "identity",
                CheckKind::NegativeControl => "negative_control",
                CheckKind::Informational => "informational",
            };
            let n = c.n.map(|n| n.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{}",
                c.suite, c.name, kind, n, c.count, c.failures, c.max, c.mean, c.tolerance, c.pass
            );
        }
        out
    }

    pub fn find<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a CheckResult> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }

    /// Largest residual of the named check over all sizes.
    pub fn max_of(&self, name: &str) -> Option<f64> {
        self.find(name).map(|c| c.max).reduce(f64::max)
    }

    /// Whether every row of the named check passed.
    pub fn passed(&self, name: &str) -> bool {
        let mut rows = self.find(name).peekable();
        rows.peek().is_some() && rows.all(|c| c.pass)
    }
}

/// One sample's residual and the state that produced it.
pub(crate) type Sample = Result<(f64, Value)>;

pub(crate) struct Ctx<'a> {
    cfg: &'a SuiteConfig,
    suite: &'static str,
    rows: Vec<CheckResult>,
}

impl<'a> Ctx<'a> {
    fn negative_only(&self) -> bool {
        self.cfg.suite == Suite::Negative
    }

    pub(crate) fn scaled(&self, num: usize, den: usize) -> usize {
        (self.cfg.samples * num / den).max(1)
    }

    pub(crate) fn check<F>(&mut self, name: &str, kind: CheckKind, n: Option<usize>, count: usize, tol: f64, f: F)
    where
        F: Fn(&mut ChaCha8Rng) -> Sample + Sync,
    {
        self.check_indexed(name, kind, n, count, tol, |_, rng| f(rng))
    }

    pub(crate) fn check_indexed<F>(
        &mut self,
        name: &str,
        kind: CheckKind,
        n: Option<usize>,
        count: usize,
        tol: f64,
        f: F,
    ) where
        F: Fn(usize, &mut ChaCha8Rng) -> Sample + Sync,
    {
        let kind = match (self.negative_only(), kind) {
            (true, CheckKind::NegativeControl) => CheckKind::Identity,
            (true, _) => return,
            (false, k) => k,
        };
        let tol = self.cfg.tolerances.get(name).copied().unwrap_or(tol);
        let tag = format!("{}/{}", self.suite, name);
        let seed = self.cfg.seed;
        let outcomes: Vec<(f64, Value)> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = sampling::stream(seed, &tag, n.unwrap_or(0), i);
                match f(i, &mut rng) {
                    Ok((r, v)) => (r, v),
                    Err(e) => (f64::NAN, json!({ "error": e.to_string() })),
                }
            })
            .collect();
        let ok = |r: f64| match kind {
            CheckKind::NegativeControl => r > 10.0 * tol,
            _ => r <= tol,
        };
        let mut failures = 0;
        let mut counterexample = None;
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        for (i, (r, v)) in outcomes.iter().enumerate() {
            let r = if r.is_nan() { f64::INFINITY } else { *r };
            max = max.max(r);
            sum += r;
            if !ok(r) {
                failures += 1;
                if counterexample.is_none() {
                    counterexample = Some(json!({ "index": i, "residual": r, "state": v }));
                }
            }
        }
        let mean = sum / count.max(1) as f64;
        if kind == CheckKind::NegativeControl {
            // the smallest residual is the one that matters for a control
            max = outcomes.iter().map(|(r, _)| if r.is_nan() { f64::INFINITY } else { *r }).fold(f64::INFINITY, f64::min);
        }
        self.rows.push(CheckResult {
            suite: self.suite.to_string(),
            name: name.to_string(),
            kind,
            n,
            tolerance: tol,
            count,
            failures,
            max,
            mean,
            pass: failures == 0 && count > 0,
            counterexample,
        });
    }
}

/// Runs the configured suite. Failures are report content, not errors.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let run = || {
        let mut rows = Vec::new();
        for s in config.suite.members() {
            let mut ctx = Ctx { cfg: config, suite: s.name(), rows: Vec::new() };
            match s {
                Suite::Structure => suites::structure(&mut ctx),
                Suite::Sutherland => suites::sutherland(&mut ctx),
                Suite::Rsvd => suites::rsvd(&mut ctx),
                Suite::Duality => suites::duality(&mut ctx),
                Suite::Dynamics => suites::dynamics(&mut ctx),
                Suite::Appendix => suites::appendix(&mut ctx),
                Suite::All | Suite::Negative => unreachable!(),
            }
            rows.extend(ctx.rows);
        }
        rows
    };
    let checks = if config.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Invalid(e.to_string()))?;
        pool.install(run)
    } else {
        run()
    };
    let pass = checks.iter().all(|c| c.kind == CheckKind::Informational || c.pass);
    Ok(SuiteReport { config: config.clone(), pass, checks })
}
