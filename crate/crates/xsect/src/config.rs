//! Experiment configuration: TOML text in, validated [`ExperimentConfig`] out.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use xsect_core::systems::SymbolicSystem;
use xsect_core::tiling::{self, Hypothesis};
use xsect_core::GroupModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tile,
    Entropy,
    Abramov,
    Mixing,
    CastleCheck,
    Transfer,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Tile,
        Command::Entropy,
        Command::Abramov,
        Command::Mixing,
        Command::CastleCheck,
        Command::Transfer,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Tile => "tile",
            Command::Entropy => "entropy",
            Command::Abramov => "abramov",
            Command::Mixing => "mixing",
            Command::CastleCheck => "castle-check",
            Command::Transfer => "transfer",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// `z`, `z1`..`z4` or `h3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupSpec(pub GroupModel);

impl FromStr for GroupSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let g = match s {
            "z" => GroupModel::integers(),
            "h3" => GroupModel::heisenberg(),
            _ => {
                let d = s
                    .strip_prefix('z')
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| format!("unknown group `{s}`; expected z, z2, z3, z4 or h3"))?;
                GroupModel::lattice(d).map_err(|e| format!("group `{s}`: {e}"))?
            }
        };
        Ok(GroupSpec(g))
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            GroupModel::Heisenberg => write!(f, "h3"),
            GroupModel::Lattice { rank: 1 } => write!(f, "z"),
            GroupModel::Lattice { rank } => write!(f, "z{rank}"),
        }
    }
}

/// A system description such as `bernoulli:0.3`, `markov:0.9`,
/// `markov:0.8,0.2;0.3,0.7`, `periodic:0,1,1` or `tower:2,3|bernoulli:0.5`.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemSpec {
    Bernoulli(Vec<f64>),
    Markov(Vec<Vec<f64>>),
    Periodic(Vec<u32>),
    Tower { roof: Vec<u32>, base: Box<SystemSpec> },
}

fn numbers<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad {what} `{x}`")))
        .collect()
}

impl FromStr for SystemSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("tower:") {
            let (roof, base) = rest
                .split_once('|')
                .ok_or_else(|| format!("tower spec `{s}` needs `roof|base`"))?;
            return Ok(SystemSpec::Tower {
                roof: numbers(roof, "roof value")?,
                base: Box::new(base.parse()?),
            });
        }
        let (kind, args) = s.split_once(':').ok_or_else(|| format!("system spec `{s}` needs `kind:args`"))?;
        match kind {
            "bernoulli" => {
                let p: Vec<f64> = numbers(args, "probability")?;
                Ok(SystemSpec::Bernoulli(if p.len() == 1 { vec![p[0], 1.0 - p[0]] } else { p }))
            }
            "markov" => {
                let rows: Vec<Vec<f64>> = args
                    .split(';')
                    .map(|r| numbers(r, "transition probability"))
                    .collect::<Result<_, _>>()?;
                if rows.len() == 1 && rows[0].len() == 1 {
                    let s = rows[0][0];
                    Ok(SystemSpec::Markov(vec![vec![s, 1.0 - s], vec![1.0 - s, s]]))
                } else {
                    Ok(SystemSpec::Markov(rows))
                }
            }
            "periodic" => Ok(SystemSpec::Periodic(numbers(args, "symbol")?)),
            _ => Err(format!("unknown system kind `{kind}`")),
        }
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSpec::Bernoulli(p) => write!(f, "bernoulli:{}", join(p)),
            SystemSpec::Markov(m) => {
                let rows: Vec<String> = m.iter().map(|r| join(r)).collect();
                write!(f, "markov:{}", rows.join(";"))
            }
            SystemSpec::Periodic(w) => write!(f, "periodic:{}", join(w)),
            SystemSpec::Tower { roof, base } => write!(f, "tower:{}|{base}", join(roof)),
        }
    }
}

impl SystemSpec {
    pub fn build(&self, group: GroupModel) -> Result<SymbolicSystem, String> {
        let needs_z = |name: &str| {
            if group == GroupModel::integers() {
                Ok(())
            } else {
                Err(format!("{name} systems act on z only"))
            }
        };
        let sys = match self {
            SystemSpec::Bernoulli(p) => SymbolicSystem::bernoulli(p.clone(), group),
            SystemSpec::Markov(m) => {
                needs_z("markov")?;
                SymbolicSystem::markov(m.clone())
            }
            SystemSpec::Periodic(w) => {
                needs_z("periodic")?;
                SymbolicSystem::periodic(w.clone())
            }
            SystemSpec::Tower { roof, base } => {
                needs_z("tower")?;
                SymbolicSystem::suspend(base.build(group)?, roof.clone())
            }
        };
        sys.map_err(|e| format!("system `{self}`: {e}"))
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
string_serde!(GroupSpec);
string_serde!(SystemSpec);

/// Numeric knobs; which ones matter depends on the command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub scales: Option<Vec<u32>>,
    pub window: Option<u32>,
    pub sample_size: Option<usize>,
    pub cylinder: Option<Vec<u32>>,
    pub density: Option<f64>,
    pub orbits: Option<usize>,
    pub side: Option<i64>,
    pub tolerance: Option<f64>,
    pub family_size: Option<usize>,
    pub coding: Option<Vec<u32>>,
    pub max_scales: Option<usize>,
}

/// Config as written by a user; everything optional until validated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Option<String>,
    pub group: Option<String>,
    pub system: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub params: RawParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub delta: f64,
    pub eps: f64,
    pub scales: Vec<u32>,
    pub window: u32,
    pub sample_size: usize,
    pub cylinder: Vec<u32>,
    pub density: f64,
    pub orbits: usize,
    pub side: i64,
    pub tolerance: f64,
    pub family_size: usize,
    pub coding: Vec<u32>,
    pub max_scales: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub group: GroupSpec,
    pub system: SystemSpec,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_system(&self) -> Result<SymbolicSystem, String> {
        self.system.build(self.group.0)
    }
}

/// Every violation found, in field order.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("invalid config:\n  {}", .0.join("\n  "))]
pub struct ConfigErrors(pub Vec<String>);

fn default_window(command: Command, group: GroupModel) -> u32 {
    match (command, group) {
        (Command::Tile, GroupModel::Lattice { rank: 1 }) => 50_000,
        (Command::Tile, GroupModel::Lattice { rank: 2 }) => 160,
        (Command::Tile, GroupModel::Lattice { .. }) => 30,
        (Command::Tile, GroupModel::Heisenberg) => 9,
        (Command::Entropy, _) => 10,
        (Command::Abramov, _) => 2,
        (Command::Mixing, _) => 0,
        (Command::CastleCheck, GroupModel::Lattice { rank: 1 }) => 100_000,
        (Command::CastleCheck, _) => 150,
        (Command::Transfer, _) => 50,
    }
}

fn default_scales(command: Command) -> Vec<u32> {
    match command {
        Command::Mixing => (1..=30).collect(),
        Command::CastleCheck => vec![10, 100, 1000, 10_000],
        _ => Vec::new(),
    }
}

fn default_samples(command: Command) -> usize {
    match command {
        Command::Mixing => 200_000,
        _ => 1_000_000,
    }
}

/// Parse and check a TOML config, reporting all violations at once.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigErrors(vec![format!("syntax: {}", e.message())]))?;
    validate(raw)
}

/// Fill defaults and check every field against the preconditions of the owning module.
pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errs = Vec::new();
    let command = match raw.command.as_deref() {
        None => {
            errs.push(String::from("command: missing"));
            None
        }
        Some(c) => c.parse::<Command>().map_err(|e| errs.push(format!("command: {e}"))).ok(),
    };
    let default_group = match command {
        Some(Command::Tile | Command::Transfer) => "z2",
        _ => "z",
    };
    let group = raw
        .group
        .as_deref()
        .unwrap_or(default_group)
        .parse::<GroupSpec>()
        .map_err(|e| errs.push(format!("group: {e}")))
        .ok();
    let system_text = raw.system.as_deref().unwrap_or(match command {
        Some(Command::Mixing) => "markov:0.9",
        _ => "bernoulli:0.5",
    });
    let system = system_text
        .parse::<SystemSpec>()
        .map_err(|e| errs.push(format!("system: {e}")))
        .ok();
    if let (Some(s), Some(g)) = (&system, group) {
        if let Err(e) = s.build(g.0) {
            errs.push(format!("system: {e}"));
        }
    }
    if raw.seed.is_none() {
        errs.push(String::from("seed: missing; every run needs an explicit seed"));
    }

    let p = &raw.params;
    let cmd = command.unwrap_or(Command::Entropy);
    let g = group.map_or(GroupModel::integers(), |g| g.0);
    let delta = p.delta.unwrap_or(0.1);
    if !tiling::delta_in_range(delta) {
        errs.push(format!("params.delta = {delta}: must satisfy {}", Hypothesis::DeltaRange.statement()));
    }
    let eps = p.eps.unwrap_or(0.05);
    if !(eps > 0.0 && eps < 1.0) {
        errs.push(format!("params.eps = {eps}: must lie in (0, 1)"));
    }
    let scales = p.scales.clone().unwrap_or_else(|| default_scales(cmd));
    if matches!(cmd, Command::Mixing | Command::CastleCheck) && scales.is_empty() {
        errs.push(String::from("params.scales: needs at least one scale"));
    }
    if cmd == Command::CastleCheck && scales.contains(&0) {
        errs.push(String::from("params.scales: castle scales must be positive"));
    }
    let window = p.window.unwrap_or_else(|| default_window(cmd, g));
    if cmd != Command::Mixing && window == 0 {
        errs.push(String::from("params.window: must be positive"));
    }
    let sample_size = p.sample_size.unwrap_or_else(|| default_samples(cmd));
    if matches!(cmd, Command::Entropy | Command::Abramov | Command::Mixing) && sample_size < xsect_core::entropy::MIN_SAMPLES {
        errs.push(format!(
            "params.sample_size = {sample_size}: must be at least {}",
            xsect_core::entropy::MIN_SAMPLES
        ));
    }
    let cylinder = p.cylinder.clone().unwrap_or_else(|| vec![0]);
    if cylinder.is_empty() {
        errs.push(String::from("params.cylinder: must name at least one symbol"));
    }
    if matches!(cmd, Command::Abramov | Command::CastleCheck) {
        if let Some(sys) = system.as_ref().and_then(|s| group.and_then(|g| s.build(g.0).ok())) {
            match sys.cylinder_probability(&cylinder) {
                Ok(v) if v > 0.0 => {}
                Ok(_) => errs.push(format!("params.cylinder = {cylinder:?}: has probability zero")),
                Err(e) => errs.push(format!("params.cylinder: {e}")),
            }
        }
    }
    if cmd == Command::Abramov && g != GroupModel::integers() {
        errs.push(String::from("group: induced systems act on z only"));
    }
    let density = p.density.unwrap_or(0.9);
    if !(density > 0.0 && density <= 1.0) {
        errs.push(format!("params.density = {density}: must lie in (0, 1]"));
    }
    let orbits = p.orbits.unwrap_or(1);
    if orbits == 0 {
        errs.push(String::from("params.orbits: must be positive"));
    }
    let side = p.side.unwrap_or(3);
    if side < 1 {
        errs.push(format!("params.side = {side}: must be positive"));
    }
    if cmd == Command::Transfer && g.rank() < 2 {
        errs.push(String::from("group: transfer compares a lattice cocycle of rank at least 2 with z"));
    }
    if cmd == Command::Transfer && g == GroupModel::heisenberg() {
        errs.push(String::from("group: transfer uses lattice boxes; h3 is not a lattice"));
    }
    let tolerance = p.tolerance.unwrap_or(match cmd {
        Command::Transfer => 0.1,
        _ => 0.05,
    });
    if !(tolerance > 0.0) {
        errs.push(format!("params.tolerance = {tolerance}: must be positive"));
    }
    let family_size = p.family_size.unwrap_or(2);
    if family_size == 0 {
        errs.push(String::from("params.family_size: must be positive"));
    }
    let alphabet = system
        .as_ref()
        .and_then(|s| group.and_then(|g| s.build(g.0).ok()))
        .map_or(0, |s| s.alphabet());
    let coding = p.coding.clone().unwrap_or_else(|| (0..alphabet as u32).collect());
    if cmd == Command::Mixing && alphabet > 0 && coding.len() != alphabet {
        errs.push(format!("params.coding: needs one entry per symbol ({alphabet})"));
    }
    let max_scales = p.max_scales.unwrap_or(tiling::DEFAULT_MAX_SCALES);
    if max_scales == 0 {
        errs.push(String::from("params.max_scales: must be positive"));
    }

    if !errs.is_empty() {
        return Err(ConfigErrors(errs));
    }
    Ok(ExperimentConfig {
        command: command.unwrap(),
        group: group.unwrap(),
        system: system.unwrap(),
        seed: raw.seed.unwrap(),
        output: raw.output,
        csv: raw.csv,
        params: Params {
            delta,
            eps,
            scales,
            window,
            sample_size,
            cylinder,
            density,
            orbits,
            side,
            tolerance,
            family_size,
            coding,
            max_scales,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip() {
        for s in ["bernoulli:0.3,0.7", "markov:0.9,0.1;0.1,0.9", "periodic:0,1,1", "tower:2,3|bernoulli:0.5,0.5"] {
            let spec: SystemSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("bernoulli:0.3".parse::<SystemSpec>().unwrap(), SystemSpec::Bernoulli(vec![0.3, 0.7]));
        for g in ["z", "z2", "z4", "h3"] {
            assert_eq!(g.parse::<GroupSpec>().unwrap().to_string(), g);
        }
        assert!("z9".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn all_violations_are_listed() {
        let err = validate_config("command = \"tile\"\n[params]\ndelta = 0.2\ndensity = 2.0\n").unwrap_err();
        assert_eq!(err.0.len(), 3, "{err}");
        assert!(err.0.iter().any(|e| e.contains("0 < δ ≤ 0.1")));
        assert!(err.0.iter().any(|e| e.starts_with("seed")));
    }
}
