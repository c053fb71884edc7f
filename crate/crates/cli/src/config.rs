//! Flat `key = value` experiment configuration.
//!
//! Keys are dotted (`system.M`, `mc.trials`, `sweep.k_grid`); `#` starts a
//! comment. Quantities quoted in decibels have suffixed keys (`system.P_dBm`,
//! `system.C1_dB`) next to their linear twins (`system.P_W`, `system.C1`);
//! giving both is an error. Everything is converted to linear units here.
//! [`emit_config`] writes linear keys only, so that loading its output
//! reproduces the same experiment exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use irs_secrecy::channel::{db_to_linear, dbm_to_watts, rho_from_doppler, PathLoss, SystemParams};
use irs_secrecy::mc::McConfig;
use irs_secrecy::transceiver::Scenario;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SopPoint,
    SweepK,
    SweepN,
    OptimalK,
    ValidateDist,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SopPoint,
        ExperimentKind::SweepK,
        ExperimentKind::SweepN,
        ExperimentKind::OptimalK,
        ExperimentKind::ValidateDist,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::SopPoint => "sop-point",
            ExperimentKind::SweepK => "sweep-k",
            ExperimentKind::SweepN => "sweep-n",
            ExperimentKind::OptimalK => "optimal-k",
            ExperimentKind::ValidateDist => "validate-dist",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown output format `{s}` (csv or json)")),
        }
    }
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub params: SystemParams,
    pub scenarios: Vec<Scenario>,
    pub k_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub rho_list: Vec<f64>,
    /// Subset size for `sop-point`; `None` keeps every element on.
    pub point_k: Option<usize>,
    /// Subset size of the selection checks in `validate-dist`.
    pub validate_k: usize,
    /// Factor applied to every predicted Gamma shape in `validate-dist`;
    /// anything but 1 is a harness self-test that must fail.
    pub shape_corruption: f64,
    /// SOP evaluator used for the analytic columns.
    pub method: String,
    pub mc_enabled: bool,
    pub mc: McConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::SweepK,
            params: SystemParams::default(),
            scenarios: vec![Scenario::WORST_CASE],
            k_grid: (1..=20).map(|i| 5 * i).collect(),
            n_grid: vec![16, 36, 64, 100, 144, 196],
            rho_list: vec![0.8, 0.9],
            point_k: None,
            validate_k: 20,
            shape_corruption: 1.0,
            method: "exact".into(),
            mc_enabled: true,
            mc: McConfig { trials: 100_000, seed: 1, workers: 0 },
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentSpec {
    /// Grid and scenario checks on top of [`SystemParams::validate`].
    pub fn validate(&self) -> CliResult<()> {
        self.params.validate()?;
        let n = self.params.elements();
        if self.scenarios.is_empty() {
            return Err(CliError::Config("scenario.list must name at least one scenario".into()));
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k == 0 || k > n) {
            return Err(CliError::Config(format!("sweep.k_grid value {k} outside [1, N = {n}]")));
        }
        if self.n_grid.contains(&0) {
            return Err(CliError::Config("sweep.n_grid values must be >= 1".into()));
        }
        if let Some(r) = self.rho_list.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(CliError::Config(format!("sweep.rho_list value {r} outside [0, 1]")));
        }
        if let Some(k) = self.point_k.filter(|&k| k == 0 || k > n) {
            return Err(CliError::Config(format!("point.K = {k} outside [1, N = {n}]")));
        }
        if self.validate_k == 0 || self.validate_k > n {
            return Err(CliError::Config(format!("validate.K = {} outside [1, N = {n}]", self.validate_k)));
        }
        if !(self.shape_corruption > 0.0) || !self.shape_corruption.is_finite() {
            return Err(CliError::Config("validate.shape_corruption must be finite and > 0".into()));
        }
        if self.mc.trials < 1 {
            return Err(CliError::Config("mc.trials must be >= 1".into()));
        }
        Ok(())
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(CliError::ConfigLine {
                    line,
                    key: body.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key.is_empty() {
                return Err(CliError::ConfigLine { line, key, message: "empty key".into() });
            }
            if let Some((first, _)) = map.get(&key) {
                return Err(CliError::ConfigLine {
                    line,
                    key,
                    message: format!("duplicate key, first set on line {first}"),
                });
            }
            map.insert(key, (line, value));
        }
        Ok(Entries { map })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|e| CliError::ConfigLine {
                line,
                key: key.into(),
                message: format!("cannot parse `{value}`: {e}"),
            }),
        }
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some((_, value)) if value.is_empty() => Ok(Some(Vec::new())),
            Some((line, value)) => value
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|e| CliError::ConfigLine {
                        line,
                        key: key.into(),
                        message: format!("cannot parse list item `{}`: {e}", item.trim()),
                    })
                })
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    /// A quantity given either linearly under `linear` or through `alt` with
    /// a unit conversion.
    fn take_either(&mut self, linear: &str, alt: &str, convert: fn(f64) -> f64) -> CliResult<Option<f64>> {
        let lin_line = self.map.get(linear).map(|(l, _)| *l);
        let a: Option<f64> = self.take(linear)?;
        let b: Option<f64> = self.take(alt)?;
        match (a, b) {
            (Some(_), Some(_)) => Err(CliError::ConfigLine {
                line: lin_line.unwrap_or(0),
                key: linear.into(),
                message: format!("conflicts with `{alt}`; give only one"),
            }),
            (Some(x), None) => Ok(Some(x)),
            (None, Some(x)) => Ok(Some(convert(x))),
            (None, None) => Ok(None),
        }
    }

    fn finish(self) -> CliResult<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(CliError::ConfigLine { line, key, message: "unknown key".into() }),
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_levels(s: &str) -> Result<u32, String> {
    if s.eq_ignore_ascii_case("inf") {
        Ok(u32::MAX)
    } else {
        s.parse().map_err(|e| format!("{e}"))
    }
}

fn parse_subset(s: &str) -> Result<Option<usize>, String> {
    if s == "all" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|e| format!("{e}"))
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

/// Wraps a plain parse function for [`Entries::take`].
struct Parsed<T>(T);

macro_rules! parsed_from {
    ($t:ty, $f:expr) => {
        impl FromStr for Parsed<$t> {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                $f(s).map(Parsed)
            }
        }
    };
}
parsed_from!(u32, parse_levels);
parsed_from!(Option<usize>, parse_subset);
parsed_from!(bool, parse_bool);

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    let n: u8 = s.trim_start_matches('S').parse().map_err(|_| format!("unknown scenario `{s}`"))?;
    Scenario::from_number(n).map_err(|e| e.to_string())
}

struct ScenarioItem(Scenario);
impl FromStr for ScenarioItem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_scenario(s).map(ScenarioItem)
    }
}

/// Parses a configuration document; omitted keys keep their defaults.
pub fn parse_config(text: &str) -> CliResult<ExperimentSpec> {
    let mut e = Entries::parse(text)?;
    let mut spec = ExperimentSpec::default();
    set(&mut spec.kind, e.take("experiment.kind")?);

    let p = &mut spec.params;
    set(&mut p.bs_antennas, e.take("system.M")?);
    set(&mut p.irs_columns, e.take("system.N_H")?);
    set(&mut p.irs_rows, e.take("system.N_V")?);
    set(&mut p.quantization_levels, e.take::<Parsed<u32>>("system.L")?.map(|x| x.0));
    set(&mut p.tx_power, e.take_either("system.P_W", "system.P_dBm", dbm_to_watts)?);
    let shared_noise = e.take_either("system.sigma2_W", "system.sigma2_dBm", dbm_to_watts)?;
    set(&mut p.noise_bob, shared_noise);
    set(&mut p.noise_eve, shared_noise);
    set(&mut p.noise_bob, e.take_either("system.sigma2_B_W", "system.sigma2_B_dBm", dbm_to_watts)?);
    set(&mut p.noise_eve, e.take_either("system.sigma2_E_W", "system.sigma2_E_dBm", dbm_to_watts)?);
    let rho_line = e.map.get("system.rho").map(|(l, _)| *l);
    let rho: Option<f64> = e.take("system.rho")?;
    let fd_td: Option<f64> = e.take("system.fd_Td")?;
    match (rho, fd_td) {
        (Some(_), Some(_)) => {
            return Err(CliError::ConfigLine {
                line: rho_line.unwrap_or(0),
                key: "system.rho".into(),
                message: "conflicts with `system.fd_Td`; give only one".into(),
            })
        }
        (Some(r), None) => p.rho = r,
        (None, Some(x)) => p.rho = rho_from_doppler(x)?,
        (None, None) => {}
    }
    set(&mut p.secrecy_rate, e.take("system.Rs")?);
    set(&mut p.aod_azimuth, e.take_either("system.phi1", "system.phi1_deg", f64::to_radians)?);
    set(&mut p.aod_elevation, e.take_either("system.theta1", "system.theta1_deg", f64::to_radians)?);
    set(&mut p.aoa_azimuth, e.take_either("system.phi2", "system.phi2_deg", f64::to_radians)?);
    set(&mut p.aoa_elevation, e.take_either("system.theta2", "system.theta2_deg", f64::to_radians)?);
    set(&mut p.spacing_bs, e.take("system.d_BS")?);
    set(&mut p.spacing_h, e.take("system.d_H")?);
    set(&mut p.spacing_v, e.take("system.d_V")?);
    set(&mut p.bs_irs.intercept, e.take_either("system.C1", "system.C1_dB", db_to_linear)?);
    set(&mut p.bs_irs.exponent, e.take("system.alpha1")?);
    set(&mut p.bs_irs.distance, e.take("system.d1")?);
    set(&mut p.irs_user.intercept, e.take_either("system.C2", "system.C2_dB", db_to_linear)?);
    set(&mut p.irs_user.exponent, e.take("system.alpha2")?);
    set(&mut p.irs_user.distance, e.take("system.d2")?);

    set(
        &mut spec.scenarios,
        e.take_list::<ScenarioItem>("scenario.list")?.map(|v| v.into_iter().map(|s| s.0).collect()),
    );
    set(&mut spec.k_grid, e.take_list("sweep.k_grid")?);
    set(&mut spec.n_grid, e.take_list("sweep.n_grid")?);
    set(&mut spec.rho_list, e.take_list("sweep.rho_list")?);
    set(&mut spec.point_k, e.take::<Parsed<Option<usize>>>("point.K")?.map(|x| x.0));
    set(&mut spec.validate_k, e.take("validate.K")?);
    set(&mut spec.shape_corruption, e.take("validate.shape_corruption")?);
    set(&mut spec.method, e.take("analytics.method")?);
    set(&mut spec.mc_enabled, e.take::<Parsed<bool>>("mc.enabled")?.map(|x| x.0));
    set(&mut spec.mc.trials, e.take("mc.trials")?);
    set(&mut spec.mc.seed, e.take("mc.seed")?);
    set(&mut spec.mc.workers, e.take("mc.workers")?);
    spec.out = e.take::<PathBuf>("output.path")?.or(spec.out);
    set(&mut spec.format, e.take("output.format")?);
    e.finish()?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> CliResult<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Canonical text form of `spec`; floats are written in shortest
/// round-trip notation.
pub fn emit_config(spec: &ExperimentSpec) -> String {
    let p = &spec.params;
    let PathLoss { intercept: c1, exponent: a1, distance: d1 } = p.bs_irs;
    let PathLoss { intercept: c2, exponent: a2, distance: d2 } = p.irs_user;
    let levels = if p.quantization_levels == u32::MAX { "inf".to_string() } else { p.quantization_levels.to_string() };
    let scenarios: Vec<String> =
        spec.scenarios.iter().map(|s| s.number().map(|n| n.to_string()).unwrap_or_else(|| s.label())).collect();
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("experiment.kind", spec.kind.as_str().into());
    kv("system.M", p.bs_antennas.to_string());
    kv("system.N_H", p.irs_columns.to_string());
    kv("system.N_V", p.irs_rows.to_string());
    kv("system.L", levels);
    kv("system.P_W", p.tx_power.to_string());
    kv("system.sigma2_B_W", p.noise_bob.to_string());
    kv("system.sigma2_E_W", p.noise_eve.to_string());
    kv("system.rho", p.rho.to_string());
    kv("system.Rs", p.secrecy_rate.to_string());
    kv("system.phi1", p.aod_azimuth.to_string());
    kv("system.theta1", p.aod_elevation.to_string());
    kv("system.phi2", p.aoa_azimuth.to_string());
    kv("system.theta2", p.aoa_elevation.to_string());
    kv("system.d_BS", p.spacing_bs.to_string());
    kv("system.d_H", p.spacing_h.to_string());
    kv("system.d_V", p.spacing_v.to_string());
    kv("system.C1", c1.to_string());
    kv("system.alpha1", a1.to_string());
    kv("system.d1", d1.to_string());
    kv("system.C2", c2.to_string());
    kv("system.alpha2", a2.to_string());
    kv("system.d2", d2.to_string());
    kv("scenario.list", scenarios.join(","));
    kv("sweep.k_grid", join(&spec.k_grid));
    kv("sweep.n_grid", join(&spec.n_grid));
    kv("sweep.rho_list", join(&spec.rho_list));
    kv("point.K", spec.point_k.map(|k| k.to_string()).unwrap_or_else(|| "all".into()));
    kv("validate.K", spec.validate_k.to_string());
    kv("validate.shape_corruption", spec.shape_corruption.to_string());
    kv("analytics.method", spec.method.clone());
    kv("mc.enabled", spec.mc_enabled.to_string());
    kv("mc.trials", spec.mc.trials.to_string());
    kv("mc.seed", spec.mc.seed.to_string());
    kv("mc.workers", spec.mc.workers.to_string());
    if let Some(path) = &spec.out {
        kv("output.path", path.display().to_string());
    }
    kv("output.format", spec.format.as_str().into());
    out
}
