use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ResolvedConfig, RunConfig, SweepParameter, Task, DEFAULT_LAMBDAS, DEFAULT_LENGTHS};
use crate::error::{Error, Result};
use crate::family::{rescale, verify_assumptions_with, GridKind, PotentialFamily};
use crate::index::{convergence_study_with, default_ladder, default_spacing, Rung, DEFAULT_H_CAP};
use crate::sflow::{spectral_flow_circle_with, spectral_flow_crossing_with, SpectralFlowReport};
use crate::theorems::{self, hypothesis_error, EnsembleSpec, TheoremCheckResult, TheoremId, Verdict};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    HypothesisFailure,
    Fail,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::HypothesisFailure => 2,
        }
    }

    fn of_error(e: &Error) -> Status {
        if hypothesis_error(e) {
            Status::HypothesisFailure
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

/// Everything a run persists. Only `timings` differs between two runs of
/// the same config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config: RunConfig,
    pub config_hash: String,
    pub defaulted: Vec<String>,
    pub status: Status,
    pub exit_code: i32,
    pub report: Value,
    pub error: Option<String>,
    pub artifacts: Vec<String>,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    pub dir: PathBuf,
    pub document_path: PathBuf,
    pub document: ResultDocument,
}

/// Status, report and error message of one task.
struct TaskResult {
    status: Status,
    report: Value,
    error: Option<String>,
}

impl TaskResult {
    fn from_error(e: Error, report: Value) -> TaskResult {
        TaskResult {
            status: Status::of_error(&e),
            report,
            error: Some(e.to_string()),
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// Runs the resolved config and writes `<out_root>/<hash>/result[-k].json`,
/// never overwriting an earlier document.
pub fn run(resolved: &ResolvedConfig, out_root: &Path, emit_branches: bool) -> Result<RunOutcome> {
    let start = Instant::now();
    let config = &resolved.config;
    let hash = config.content_hash();
    let dir = out_root.join(&hash);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let k = next_slot(&dir);
    let suffix = if k == 1 { String::new() } else { format!("-{k}") };
    let branches = (emit_branches || config.output.branches).then(|| dir.join(format!("branches{suffix}.csv")));

    let result = execute(config, branches.as_deref());
    let mut artifacts = vec![];
    if let Some(b) = &branches {
        if b.exists() {
            artifacts.push(b.file_name().expect("file name").to_string_lossy().into_owned());
        }
    }
    let document = ResultDocument {
        config: config.clone(),
        config_hash: hash,
        defaulted: resolved.defaulted.clone(),
        status: result.status,
        exit_code: result.status.exit_code(),
        report: result.report,
        error: result.error,
        artifacts,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        },
    };
    let path = dir.join(format!("result{suffix}.json"));
    let text = serde_json::to_string_pretty(&document).map_err(|e| Error::Serialization(e.to_string()))?;
    write_new(&path, &text)?;
    Ok(RunOutcome {
        status: document.status,
        dir,
        document_path: path,
        document,
    })
}

fn next_slot(dir: &Path) -> usize {
    let mut k = 1;
    loop {
        let name = if k == 1 { "result.json".to_string() } else { format!("result-{k}.json") };
        if !dir.join(name).exists() {
            return k;
        }
        k += 1;
    }
}

fn write_new(path: &Path, text: &str) -> Result<()> {
    use std::io::Write;
    let mut f = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn execute(config: &RunConfig, branches: Option<&Path>) -> TaskResult {
    let tol = &config.numerics.tolerances;
    match &config.task {
        Task::Index { .. } => match config.family() {
            Ok(fam) => index_task(config, &fam, tol),
            Err(e) => TaskResult::from_error(e, Value::Null),
        },
        Task::Sflow => sflow_task(config, tol, branches),
        Task::Assumptions => match config.family().and_then(|f| verify_assumptions_with(&f, tol)) {
            Ok(rep) => TaskResult {
                status: if rep.passed() { Status::Pass } else { Status::HypothesisFailure },
                report: json!({ "assumptions": rep }),
                error: None,
            },
            Err(e) => TaskResult::from_error(e, Value::Null),
        },
        Task::Theorem { id, ensemble, lambdas, lengths } => {
            match theorem_task(config, *id, ensemble.as_ref(), lambdas.as_deref(), lengths.as_deref(), tol) {
                Ok(r) => {
                    let status = if r.verdict == Verdict::Fail {
                        Status::Fail
                    } else if r.admissible() == 0 {
                        Status::HypothesisFailure
                    } else {
                        Status::Pass
                    };
                    TaskResult {
                        status,
                        report: json!({ "theorem": r }),
                        error: None,
                    }
                }
                Err(e) => TaskResult::from_error(e, Value::Null),
            }
        }
        Task::Sweep { parameter, values } => sweep_task(config, *parameter, values, tol),
    }
}

fn ladder_for(config: &RunConfig, fam: &PotentialFamily, tol: &Tolerances) -> Result<Vec<Rung>> {
    if let Some(l) = config.ladder() {
        return Ok(l);
    }
    let h_cap = match &config.task {
        Task::Index { h_cap: Some(h), .. } => *h,
        _ => DEFAULT_H_CAP,
    };
    match config.manifold.cylinder_length {
        Some(l) => {
            let h = default_spacing(fam, h_cap);
            Ok(vec![
                Rung::from((1.5 * h, l)),
                Rung::from((1.25 * h, 1.25 * l)),
                Rung::from((h, 1.5 * l)),
            ])
        }
        None => default_ladder(fam, h_cap, tol),
    }
}

fn index_task(config: &RunConfig, fam: &PotentialFamily, tol: &Tolerances) -> TaskResult {
    let assumptions = match verify_assumptions_with(fam, tol) {
        Ok(a) => a,
        Err(e) => return TaskResult::from_error(e, Value::Null),
    };
    if !assumptions.passed() {
        return TaskResult {
            status: Status::HypothesisFailure,
            report: json!({ "assumptions": assumptions }),
            error: Some("family fails the standing assumptions".into()),
        };
    }
    let ladder = match ladder_for(config, fam, tol) {
        Ok(l) => l,
        Err(e) => return TaskResult::from_error(e, json!({ "assumptions": assumptions })),
    };
    match convergence_study_with(fam, &ladder, tol) {
        Ok(index) => TaskResult {
            status: Status::Pass,
            report: json!({ "assumptions": assumptions, "ladder": ladder, "index": index }),
            error: None,
        },
        Err(e) => {
            let trail = match &e {
                Error::NonConvergence { trail } => to_value(trail),
                _ => Value::Null,
            };
            let report = json!({ "assumptions": assumptions, "ladder": ladder, "trail": trail });
            TaskResult::from_error(e, report)
        }
    }
}

fn sflow_task(config: &RunConfig, tol: &Tolerances, branches: Option<&Path>) -> TaskResult {
    let run = || -> Result<SpectralFlowReport> {
        let fam = config.family()?;
        let rep = match fam.grid().kind() {
            GridKind::Line => spectral_flow_crossing_with(&fam, tol)?,
            GridKind::Circle => spectral_flow_circle_with(&fam, tol)?,
        };
        if let Some(path) = branches {
            rep.write_trace_csv(path)?;
        }
        Ok(rep)
    };
    match run() {
        Ok(rep) => TaskResult {
            status: if rep.agreement { Status::Pass } else { Status::Fail },
            error: (!rep.agreement).then(|| "crossing count and partition oracle disagree".into()),
            report: json!({ "spectral_flow": rep }),
        },
        Err(e) => TaskResult::from_error(e, Value::Null),
    }
}

fn theorem_task(
    config: &RunConfig,
    id: TheoremId,
    ensemble: Option<&EnsembleSpec>,
    lambdas: Option<&[f64]>,
    lengths: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<TheoremCheckResult> {
    let lambdas = lambdas.unwrap_or(&DEFAULT_LAMBDAS);
    let lengths = lengths.unwrap_or(&DEFAULT_LENGTHS);
    if let Some(ens) = ensemble {
        return match id {
            TheoremId::IndexEqualsFlow => theorems::check_index_equals_sf(ens, tol),
            TheoremId::FlowOracles => theorems::check_flow_oracles(ens, tol),
            TheoremId::Rescaling => theorems::check_rescaling_ensemble(ens, lambdas, tol),
            TheoremId::RelativeIndex => theorems::check_relative_index_ensemble(ens, tol),
            TheoremId::CylinderReplacement => theorems::check_cylinder_replacement_ensemble(ens, lengths, tol),
            TheoremId::Homotopy => theorems::check_homotopy_ensemble(ens, tol),
            TheoremId::GradedVanishing => theorems::check_graded_vanishing(ens, tol),
        };
    }
    let fam = config.family()?;
    Ok(match id {
        TheoremId::IndexEqualsFlow => theorems::check_index_equals_sf_family(&fam, tol),
        TheoremId::FlowOracles => return theorems::check_flow_oracles(&EnsembleSpec::default(), tol),
        TheoremId::Rescaling => theorems::check_rescaling(&fam, lambdas, tol),
        TheoremId::RelativeIndex => {
            let w = ((1.0 / fam.grid().h()).round() as usize).max(2);
            let seed = config.family.seed.unwrap_or(0);
            let (partner, glue) = theorems::matched_partner(&fam, &fam.reversed(), w, w, seed)?;
            theorems::check_relative_index(&fam, &partner, &glue, tol)?
        }
        TheoremId::CylinderReplacement => theorems::check_cylinder_replacement(&fam, lengths, tol),
        TheoremId::Homotopy => theorems::check_homotopy_invariance(&fam, tol),
        TheoremId::GradedVanishing => theorems::check_graded_vanishing_family(&fam, tol),
    })
}

fn sweep_task(config: &RunConfig, parameter: SweepParameter, values: &[f64], tol: &Tolerances) -> TaskResult {
    let entries: Vec<(Status, Value)> = values
        .par_iter()
        .map(|&v| {
            let mut c = config.clone();
            c.task = Task::Index { ladder: None, h_cap: None };
            let fam = match parameter {
                SweepParameter::Scale => config.family().and_then(|f| rescale(&f, v)),
                SweepParameter::Spacing => {
                    c.manifold.spacing = Some(v);
                    c.family()
                }
                SweepParameter::CylinderLength => {
                    c.manifold.cylinder_length = Some(v);
                    c.family()
                }
                SweepParameter::Seed => {
                    c.family.seed = Some(v as u64);
                    c.family()
                }
            };
            let r = match fam {
                Ok(f) => index_task(&c, &f, tol),
                Err(e) => TaskResult::from_error(e, Value::Null),
            };
            (r.status, json!({ "value": v, "status": r.status, "report": r.report, "error": r.error }))
        })
        .collect();
    let status = entries.iter().map(|e| e.0).max().unwrap_or(Status::Pass);
    TaskResult {
        status,
        report: json!({ "sweep": { "parameter": parameter, "runs": entries.into_iter().map(|e| e.1).collect::<Vec<_>>() } }),
        error: None,
    }
}
