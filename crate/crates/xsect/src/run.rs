//! Dispatch of a validated config to the core routines.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use xsect_core::entropy::{self, FiberPartition, Partition};
use xsect_core::mixing::{self, MixingReport};
use xsect_core::section::{self, SectionRule, SectionSample};
use xsect_core::systems::SymbolicSystem;
use xsect_core::tiling::{self, InstanceOptions, ScaleFamily};
use xsect_core::{ElementSet, GroupModel};

use crate::config::{Command, ExperimentConfig};
use crate::output::{cell, cell_f, Table};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: &'static str,
    pub timestamp: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub outputs: Value,
    /// Named checker outcomes; empty for pure estimators.
    pub verdicts: BTreeMap<String, bool>,
    pub pass: bool,
    #[serde(skip)]
    pub table: Option<Table>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigErrors),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("thread pool: {0}")]
    Threads(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn pre<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Precondition(e.to_string())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("outputs serialize")
}

struct Outcome {
    outputs: Value,
    verdicts: BTreeMap<String, bool>,
    table: Option<Table>,
}

/// Run on a pool of `threads` workers (all cores when `None`).
pub fn run(config: &ExperimentConfig, threads: Option<usize>) -> Result<ResultRecord, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| RunError::Threads(e.to_string()))?;
    let outcome = pool.install(|| dispatch(config))?;
    let pass = outcome.verdicts.values().all(|v| *v);
    Ok(ResultRecord {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        provenance: Provenance {
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
        outputs: outcome.outputs,
        verdicts: outcome.verdicts,
        pass,
        table: outcome.table,
    })
}

fn dispatch(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    match c.command {
        Command::Tile => tile(c),
        Command::Entropy => block_entropy(c),
        Command::Abramov => abramov(c),
        Command::Mixing => mixing_cmd(c),
        Command::CastleCheck => castle_check(c),
        Command::Transfer => transfer(c),
    }
}

fn system(c: &ExperimentConfig) -> Result<SymbolicSystem, RunError> {
    c.build_system().map_err(RunError::Precondition)
}

fn verdicts(items: &[(&str, bool)]) -> BTreeMap<String, bool> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn tile(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    let g = c.group.0;
    let p = &c.params;
    let opts = InstanceOptions {
        delta: p.delta,
        family: ScaleFamily::default_for(&g),
        ..InstanceOptions::default()
    };
    let inst = tiling::make_instance_with(&g, p.window, p.density, c.seed, &opts).map_err(pre)?;
    let params = tiling::params_for_capped(p.delta, inst.required_packing(), p.max_scales).map_err(pre)?;
    let result = tiling::quasi_tile(&inst, &params).map_err(pre)?;
    let report = tiling::verify_tiling(&inst, &params, &result);
    let mut table = Table::new(&["scale", "size", "tiles", "max_overlap_ratio", "disjoint"]);
    for s in &report.per_scale {
        table.push(vec![
            cell(s.scale),
            cell(inst.scales[s.scale].len()),
            cell(s.tiles),
            cell_f(s.max_overlap_ratio),
            cell(s.passed),
        ]);
    }
    Ok(Outcome {
        outputs: json!({
            "params": to_value(&params),
            "instance": {
                "points": inst.a.len(),
                "admissible_centers": inst.b.len(),
                "intensity": inst.intensity,
                "scale_sizes": inst.scales.iter().map(|s| s.len()).collect::<Vec<_>>(),
            },
            "tiling": {
                "centers_per_scale": result.centers.iter().map(|v| v.len()).collect::<Vec<_>>(),
                "covered": result.covered,
                "coverage": result.coverage,
                "last_scale": result.last_scale,
            },
            "report": to_value(&report),
        }),
        verdicts: verdicts(&[
            ("disjoint_within_scales", report.disjoint_within_scales),
            ("disjoint_across_scales", report.disjoint_across_scales),
            ("covers", report.covers),
            ("centers_in_b", report.centers_in_b),
        ]),
        table: Some(table),
    })
}

/// `{0..len-1}` on `Z`, the Følner set of that scale elsewhere.
fn window_for(g: GroupModel, len: u32) -> ElementSet {
    if g == GroupModel::integers() {
        entropy::interval(len as usize)
    } else {
        g.folner(len)
    }
}

fn block_entropy(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    let sys = system(c)?;
    let p = &c.params;
    let w = window_for(c.group.0, p.window);
    let est = entropy::block_entropy(&sys, &w, p.sample_size, c.seed).map_err(pre)?;
    let target = sys.analytic_entropy().ok();
    let table = c.csv.as_ref().map(|_| {
        let mut t = Table::new(&["pattern", "count"]);
        for (k, n) in entropy::pattern_table(&sys, &w, p.sample_size, c.seed) {
            t.push(vec![k, cell(n)]);
        }
        t
    });
    Ok(Outcome {
        outputs: json!({
            "window_size": w.len(),
            "estimate": to_value(&est),
            "target": target,
            "relative_error": target.filter(|t| *t != 0.0).map(|t| (est.estimate - t).abs() / t),
        }),
        verdicts: BTreeMap::new(),
        table,
    })
}

fn abramov(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    let sys = system(c)?;
    let p = &c.params;
    let rep = entropy::abramov_check(&sys, &p.cylinder, p.window as usize, p.sample_size, c.seed).map_err(pre)?;
    let kac = (rep.mean_return_time - rep.kac_target).abs() <= 3.0 * rep.return_time_stderr;
    Ok(Outcome {
        verdicts: verdicts(&[("ratio", rep.relative_error <= p.tolerance), ("kac", kac)]),
        outputs: json!({ "report": to_value(&rep) }),
        table: None,
    })
}

/// The same families and seeds as [`mixing::mixing_scan`], one radius per task.
pub fn parallel_scan(
    sys: &SymbolicSystem,
    coding: &[u32],
    radii: &[u32],
    family_size: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<MixingReport>, RunError> {
    let g = sys.group();
    radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let s = seed.wrapping_add(i as u64);
            let k = g.ball(r);
            let window = g.folner(r.max(1) * family_size as u32);
            let family = mixing::separated_family(&g, &k, family_size, &window, s).map_err(pre)?;
            mixing::mixing_report(sys, coding, r, family, sample_size, s).map_err(pre)
        })
        .collect()
}

fn mixing_cmd(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    let sys = system(c)?;
    let p = &c.params;
    let reps = parallel_scan(&sys, &p.coding, &p.scales, p.family_size, p.sample_size, c.seed)?;
    let mut table = Table::new(&["radius", "defect", "signed_defect", "stderr", "oracle_defect"]);
    for r in &reps {
        table.push(vec![
            cell(r.radius),
            cell_f(r.defect),
            cell_f(r.signed_defect),
            cell_f(r.stderr),
            r.oracle_defect.map(cell_f).unwrap_or_default(),
        ]);
    }
    let mut v = BTreeMap::new();
    if reps.iter().all(|r| r.oracle_defect.is_some()) {
        let ok = reps
            .iter()
            .all(|r| (r.signed_defect - r.oracle_defect.unwrap()).abs() <= 3.0 * r.stderr);
        v.insert(String::from("oracle_agreement"), ok);
    } else if matches!(sys, SymbolicSystem::Bernoulli { .. }) {
        v.insert(
            String::from("no_defect"),
            reps.iter().all(|r| r.defect < 3.0 * r.stderr),
        );
    }
    Ok(Outcome {
        outputs: json!({ "reports": to_value(&reps) }),
        verdicts: v,
        table: Some(table),
    })
}

/// `h(x) = 1` when the symbol one generator step away lies in the cylinder.
pub fn neighbour_indicator(sample: &SectionSample, cylinder: &[u32]) -> Vec<f64> {
    let g = sample.group();
    let s = g.generators()[0];
    (0..sample.len())
        .map(|x| {
            let y = g.op(&s, &sample.position(x));
            let hit = sample
                .ambient_label(sample.class_of(x), &y)
                .is_some_and(|l| cylinder.contains(&l));
            f64::from(u8::from(hit))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub scale: u32,
    pub tile_size: usize,
    pub ergodic: section::CastleErgodicReport,
    pub coverage: f64,
    pub invariance: section::InvarianceReport,
    pub deviation: section::DeviationReport,
}

/// Castle and mean ergodic statistics at one Følner scale.
pub fn castle_scale(sample: &SectionSample, h: &[f64], scale: u32, delta: f64, tol: f64) -> Result<ScaleRow, RunError> {
    let g = sample.group();
    let f = g.folner(scale);
    let castle = section::tiling_castle(sample, &f, delta).map_err(pre)?;
    let ergodic = section::castle_ergodic_check(sample, &castle, h, tol).map_err(pre)?;
    let invariance = section::is_castle_invariant(sample, &castle, &g.ball(1), tol).map_err(pre)?;
    let hf = section::ergodic_average(sample, h, &f);
    let deviation = section::deviation_measure(sample, h, &hf, tol, &sample.collar(&f));
    Ok(ScaleRow {
        scale,
        tile_size: f.len(),
        coverage: castle.range_measure(sample),
        ergodic,
        invariance,
        deviation,
    })
}

fn castle_check(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    let sys = system(c)?;
    let p = &c.params;
    let window = c.group.0.folner(p.window);
    let rule = SectionRule::Symbols(p.cylinder.clone());
    let sample = section::from_orbit_window(&sys, &window, &rule, p.orbits, c.seed).map_err(pre)?;
    let h = neighbour_indicator(&sample, &p.cylinder);
    let rows: Vec<ScaleRow> = p
        .scales
        .par_iter()
        .map(|s| castle_scale(&sample, &h, *s, p.delta, p.tolerance))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&[
        "scale",
        "tile_size",
        "towers",
        "coverage",
        "good_fraction",
        "castle_pass",
        "invariant",
        "deviation",
        "collar_mass",
    ]);
    for r in &rows {
        table.push(vec![
            cell(r.scale),
            cell(r.tile_size),
            cell(r.ergodic.towers),
            cell_f(r.coverage),
            cell_f(r.ergodic.good_mass / r.ergodic.total_mass),
            cell(r.ergodic.pass),
            cell(r.invariance.invariant),
            cell_f(r.deviation.deviation),
            cell_f(r.deviation.collar_mass),
        ]);
    }
    let last = rows.last().expect("at least one scale");
    Ok(Outcome {
        verdicts: verdicts(&[
            ("castle_ergodic", last.ergodic.pass),
            ("castle_invariant", last.invariance.invariant),
        ]),
        outputs: json!({
            "points": sample.len(),
            "intensity": sample.intensity(),
            "dropped_orbits": sample.dropped_orbits(),
            "scales": to_value(&rows),
        }),
        table: Some(table),
    })
}

fn transfer(c: &ExperimentConfig) -> Result<Outcome, RunError> {
    let sys = system(c)?;
    let p = &c.params;
    let window = c.group.0.folner(p.window);
    let sample = section::from_orbit_window(&sys, &window, &SectionRule::Always, p.orbits, c.seed).map_err(pre)?;
    let part = Partition::new(sample.labels().to_vec());
    let fibers = FiberPartition::trivial(sample.len());
    let rep = entropy::transfer_check(&sample, &part, &fibers, p.side, p.eps, p.tolerance).map_err(pre)?;
    Ok(Outcome {
        verdicts: verdicts(&[("agreement", rep.pass)]),
        outputs: json!({ "points": sample.len(), "report": to_value(&rep) }),
        table: None,
    })
}

impl ResultRecord {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// The record without provenance timestamp: the part that must reproduce byte for byte.
    pub fn reproducible_json(&self) -> String {
        crate::output::to_json(&json!({
            "config": to_value(&self.config),
            "outputs": self.outputs,
            "verdicts": self.verdicts,
            "pass": self.pass,
        }))
    }
}
