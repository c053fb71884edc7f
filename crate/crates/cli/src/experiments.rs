//! The five experiment kinds and their registry.

use std::collections::BTreeMap;

use irs_secrecy::analytics::{
    bob_snr_params, eve_snr_params, optimal_k, sop_at, GammaParams, LowerBoundSop, SopEvaluator, SopRegistry,
};
use irs_secrecy::channel::SystemParams;
use irs_secrecy::mc::{estimate_snr_stats, estimate_sop_sweep, McEstimate, Side};
use irs_secrecy::specfun::Probability;
use irs_secrecy::transceiver::{Scenario, SelectorRegistry};

use crate::config::{ExperimentKind, ExperimentSpec};
use crate::error::CliResult;
use crate::output::{Cell, Table};

/// Outage probability of one scenario at one subset size.
#[derive(Debug, Clone, PartialEq)]
pub struct SopPoint {
    pub scenario: Scenario,
    /// Active elements.
    pub k: usize,
    pub sop_analytic: Probability,
    pub sop_lower: Probability,
    /// Strongest-`K` estimate.
    pub mc: Option<McEstimate>,
    /// Uniformly random `K`-subset estimate from the same channel draws.
    pub mc_random: Option<McEstimate>,
    pub seed: u64,
}

pub const SWEEP_K_COLUMNS: [&str; 9] =
    ["scenario", "K", "sop_analytic", "sop_lower", "sop_mc", "sop_mc_se", "sop_mc_random_ess", "trials", "seed"];

fn sop_table(points: &[SopPoint]) -> Table {
    let mut t = Table::new(SWEEP_K_COLUMNS.to_vec());
    for p in points {
        t.push(vec![
            p.scenario.label().into(),
            p.k.into(),
            p.sop_analytic.value().into(),
            p.sop_lower.value().into(),
            p.mc.map(|m| m.p_hat.value()).into(),
            p.mc.map(|m| m.std_err).into(),
            p.mc_random.map(|m| m.p_hat.value()).into(),
            p.mc.map(|m| m.trials).into(),
            p.seed.into(),
        ]);
    }
    t
}

fn evaluator<'a>(reg: &'a SopRegistry, spec: &ExperimentSpec) -> CliResult<&'a dyn SopEvaluator> {
    Ok(reg.get(&spec.method)?)
}

fn sop_points(spec: &ExperimentSpec, ks: &[usize]) -> CliResult<Vec<SopPoint>> {
    let sops = SopRegistry::default();
    let eval = evaluator(&sops, spec)?;
    let selectors = SelectorRegistry::default();
    let subsets: Vec<Option<usize>> = ks.iter().map(|&k| Some(k)).collect();
    let mut points = Vec::new();
    for &scenario in &spec.scenarios {
        let (ess, random) = if spec.mc_enabled {
            let run = |name| estimate_sop_sweep(&spec.params, scenario, &subsets, selectors.get(name)?, spec.mc);
            (Some(run("ess")?), Some(run("random")?))
        } else {
            (None, None)
        };
        for (i, &k) in ks.iter().enumerate() {
            points.push(SopPoint {
                scenario,
                k,
                sop_analytic: sop_at(&spec.params, scenario, Some(k), eval)?,
                sop_lower: sop_at(&spec.params, scenario, Some(k), &LowerBoundSop)?,
                mc: ess.as_ref().map(|v| v[i]),
                mc_random: random.as_ref().map(|v| v[i]),
                seed: spec.mc.seed,
            });
        }
    }
    points.sort_by_key(|p| (p.scenario.number(), p.k));
    Ok(points)
}

pub fn run_sop_point(spec: &ExperimentSpec) -> CliResult<Vec<SopPoint>> {
    sop_points(spec, &[spec.point_k.unwrap_or(spec.params.elements())])
}

pub fn run_sweep_k(spec: &ExperimentSpec) -> CliResult<Vec<SopPoint>> {
    let mut ks = spec.k_grid.clone();
    ks.sort_unstable();
    ks.dedup();
    sop_points(spec, &ks)
}

/// One `(scenario, ρ, N)` point of the surface-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepNRow {
    pub scenario: Scenario,
    pub rho: f64,
    pub n: usize,
    pub k_opt: usize,
    /// Every element on.
    pub sop_full: Probability,
    pub sop_opt: Probability,
    pub mc_full: Option<McEstimate>,
    pub mc_opt: Option<McEstimate>,
    pub seed: u64,
}

pub fn run_sweep_n(spec: &ExperimentSpec) -> CliResult<Vec<SweepNRow>> {
    let sops = SopRegistry::default();
    let eval = evaluator(&sops, spec)?;
    let mut rows = Vec::new();
    for &scenario in &spec.scenarios {
        for &rho in &spec.rho_list {
            for &n in &spec.n_grid {
                let params = SystemParams { rho, ..spec.params.with_elements(n) };
                params.validate()?;
                let (k_opt, sop_opt) = optimal_k(&params, scenario, eval)?;
                let sop_full = sop_at(&params, scenario, None, eval)?;
                let (mc_full, mc_opt) = if spec.mc_enabled {
                    let selector = SelectorRegistry::default();
                    let est =
                        estimate_sop_sweep(&params, scenario, &[None, Some(k_opt)], selector.get("ess")?, spec.mc)?;
                    (Some(est[0]), Some(est[1]))
                } else {
                    (None, None)
                };
                rows.push(SweepNRow {
                    scenario,
                    rho,
                    n,
                    k_opt,
                    sop_full,
                    sop_opt,
                    mc_full,
                    mc_opt,
                    seed: spec.mc.seed,
                });
            }
        }
    }
    Ok(rows)
}

fn sweep_n_table(rows: &[SweepNRow]) -> Table {
    let mut t = Table::new(vec![
        "scenario",
        "rho",
        "N",
        "K_opt",
        "sop_analytic_no_ess",
        "sop_analytic_opt_ess",
        "sop_mc_no_ess",
        "sop_mc_no_ess_se",
        "sop_mc_opt_ess",
        "sop_mc_opt_ess_se",
        "trials",
        "seed",
    ]);
    for r in rows {
        t.push(vec![
            r.scenario.label().into(),
            r.rho.into(),
            r.n.into(),
            r.k_opt.into(),
            r.sop_full.value().into(),
            r.sop_opt.value().into(),
            r.mc_full.map(|m| m.p_hat.value()).into(),
            r.mc_full.map(|m| m.std_err).into(),
            r.mc_opt.map(|m| m.p_hat.value()).into(),
            r.mc_opt.map(|m| m.std_err).into(),
            r.mc_full.map(|m| m.trials).into(),
            r.seed.into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalKRow {
    pub scenario: Scenario,
    pub n: usize,
    pub k_opt: usize,
    pub sop_opt: Probability,
    /// Minimiser of the lower bound.
    pub k_opt_lower: usize,
    pub sop_full: Probability,
    pub mc_opt: Option<McEstimate>,
    pub seed: u64,
}

pub fn run_optimal_k(spec: &ExperimentSpec) -> CliResult<Vec<OptimalKRow>> {
    let sops = SopRegistry::default();
    let eval = evaluator(&sops, spec)?;
    let selectors = SelectorRegistry::default();
    spec.scenarios
        .iter()
        .map(|&scenario| {
            let (k_opt, sop_opt) = optimal_k(&spec.params, scenario, eval)?;
            let (k_opt_lower, _) = optimal_k(&spec.params, scenario, &LowerBoundSop)?;
            let mc_opt = if spec.mc_enabled {
                Some(estimate_sop_sweep(&spec.params, scenario, &[Some(k_opt)], selectors.get("ess")?, spec.mc)?[0])
            } else {
                None
            };
            Ok(OptimalKRow {
                scenario,
                n: spec.params.elements(),
                k_opt,
                sop_opt,
                k_opt_lower,
                sop_full: sop_at(&spec.params, scenario, None, eval)?,
                mc_opt,
                seed: spec.mc.seed,
            })
        })
        .collect()
}

fn optimal_k_table(rows: &[OptimalKRow]) -> Table {
    let mut t = Table::new(vec![
        "scenario",
        "N",
        "K_opt",
        "sop_at_k_opt",
        "K_opt_lower",
        "sop_no_ess",
        "sop_mc_at_k_opt",
        "sop_mc_at_k_opt_se",
        "trials",
        "seed",
    ]);
    for r in rows {
        t.push(vec![
            r.scenario.label().into(),
            r.n.into(),
            r.k_opt.into(),
            r.sop_opt.value().into(),
            r.k_opt_lower.into(),
            r.sop_full.value().into(),
            r.mc_opt.map(|m| m.p_hat.value()).into(),
            r.mc_opt.map(|m| m.std_err).into(),
            r.mc_opt.map(|m| m.trials).into(),
            r.seed.into(),
        ]);
    }
    t
}

/// One observed-versus-predicted comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DistCheck {
    pub check: &'static str,
    pub scenario: Scenario,
    pub k: usize,
    pub observed: f64,
    pub predicted: f64,
    /// Largest admissible `|observed - predicted|`, or the KS ceiling.
    pub tolerance: f64,
    pub pass: bool,
}

impl DistCheck {
    fn within(
        check: &'static str,
        scenario: Scenario,
        k: usize,
        observed: f64,
        predicted: f64,
        tolerance: f64,
    ) -> Self {
        let pass = (observed - predicted).abs() <= tolerance;
        DistCheck { check, scenario, k, observed, predicted, tolerance, pass }
    }
}

/// Distance ceiling of the empirical-CDF check.
pub const KS_LIMIT: f64 = 0.01;

pub fn run_validate_dist(spec: &ExperimentSpec) -> CliResult<Vec<DistCheck>> {
    let p = &spec.params;
    let n = p.elements();
    let k = spec.validate_k;
    let corrupt = |g: GammaParams| GammaParams::new(g.shape * spec.shape_corruption, g.scale);
    let mut checks = Vec::new();
    for &s in &spec.scenarios {
        let bob = corrupt(bob_snr_params(p, s.bob, None)?)?;
        let obs = estimate_snr_stats(p, s, None, Side::Bob, spec.mc)?;
        checks.push(DistCheck::within("bob_mean", s, n, obs.mean, bob.mean(), 3.0 * obs.std_err));
        checks.push(DistCheck::within("bob_variance", s, n, obs.variance, bob.variance(), 0.05 * bob.variance()));

        let eve = eve_snr_params(p, s.eve, None)?;
        let obs = estimate_snr_stats(p, s, None, Side::Eve, spec.mc)?;
        checks.push(DistCheck::within("eve_mean", s, n, obs.mean, eve.mean, 3.0 * obs.std_err));
        let ks = obs.ks_against(|x| eve.cdf(x));
        checks.push(DistCheck {
            check: "eve_ks",
            scenario: s,
            k: n,
            observed: ks,
            predicted: 0.0,
            tolerance: KS_LIMIT,
            pass: ks < KS_LIMIT,
        });

        let bob = corrupt(bob_snr_params(p, s.bob, Some(k))?)?;
        let obs = estimate_snr_stats(p, s, Some(k), Side::Bob, spec.mc)?;
        checks.push(DistCheck::within("bob_ess_mean", s, k, obs.mean, bob.mean(), 0.03 * bob.mean()));
        let eve = eve_snr_params(p, s.eve, Some(k))?;
        let obs = estimate_snr_stats(p, s, Some(k), Side::Eve, spec.mc)?;
        checks.push(DistCheck::within("eve_ess_mean", s, k, obs.mean, eve.mean, 0.03 * eve.mean));
    }
    Ok(checks)
}

fn validate_table(checks: &[DistCheck]) -> Table {
    let mut t = Table::new(vec!["check", "scenario", "K", "observed", "predicted", "tolerance", "pass"]);
    for c in checks {
        t.push(vec![
            Cell::Text(c.check.into()),
            c.scenario.label().into(),
            c.k.into(),
            c.observed.into(),
            c.predicted.into(),
            c.tolerance.into(),
            c.pass.into(),
        ]);
    }
    t
}

/// An experiment family runnable from the command line.
pub trait Experiment: Send + Sync {
    fn kind(&self) -> ExperimentKind;
    fn run(&self, spec: &ExperimentSpec) -> CliResult<Table>;
}

macro_rules! experiment {
    ($name:ident, $kind:expr, $run:expr, $table:expr) => {
        pub struct $name;

        impl Experiment for $name {
            fn kind(&self) -> ExperimentKind {
                $kind
            }
            fn run(&self, spec: &ExperimentSpec) -> CliResult<Table> {
                Ok($table(&$run(spec)?))
            }
        }
    };
}

experiment!(SopPointExperiment, ExperimentKind::SopPoint, run_sop_point, sop_table);
experiment!(SweepKExperiment, ExperimentKind::SweepK, run_sweep_k, sop_table);
experiment!(SweepNExperiment, ExperimentKind::SweepN, run_sweep_n, sweep_n_table);
experiment!(OptimalKExperiment, ExperimentKind::OptimalK, run_optimal_k, optimal_k_table);
experiment!(ValidateDistExperiment, ExperimentKind::ValidateDist, run_validate_dist, validate_table);

pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        ExperimentRegistry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, experiment: Box<dyn Experiment>) {
        self.entries.insert(experiment.kind().as_str(), experiment);
    }

    pub fn get(&self, kind: ExperimentKind) -> Option<&dyn Experiment> {
        self.entries.get(kind.as_str()).map(|e| e.as_ref())
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(SopPointExperiment));
        reg.register(Box::new(SweepKExperiment));
        reg.register(Box::new(SweepNExperiment));
        reg.register(Box::new(OptimalKExperiment));
        reg.register(Box::new(ValidateDistExperiment));
        reg
    }
}
