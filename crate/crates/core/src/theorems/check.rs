use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{instance_seed, EnsembleSpec, Instance};
use super::glue::{matched_partner, swap_at_collars, GlueSpec};
use crate::error::{Error, Result};
use crate::family::{
    build_family, constant_ends_homotopy, has_constant_ends, make_constant_ends, rescale,
    smooth_family, verify_assumptions_with, PotentialFamily, DEFAULT_COLLAR,
};
use crate::index::{
    convergence_study_with, default_ladder, default_spacing, graded_convergence_study, IndexReport,
    Rung, TrailEntry, DEFAULT_H_CAP,
};
use crate::sflow::{spectral_flow_crossing_with, spectral_flow_partition_with};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "index=sf")]
    IndexEqualsFlow,
    #[serde(rename = "flow_oracles")]
    FlowOracles,
    #[serde(rename = "rescaling")]
    Rescaling,
    #[serde(rename = "relative_index")]
    RelativeIndex,
    #[serde(rename = "cylinder_replacement")]
    CylinderReplacement,
    #[serde(rename = "homotopy")]
    Homotopy,
    #[serde(rename = "graded_vanishing")]
    GradedVanishing,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::IndexEqualsFlow,
        TheoremId::FlowOracles,
        TheoremId::Rescaling,
        TheoremId::RelativeIndex,
        TheoremId::CylinderReplacement,
        TheoremId::Homotopy,
        TheoremId::GradedVanishing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::IndexEqualsFlow => "index=sf",
            TheoremId::FlowOracles => "flow_oracles",
            TheoremId::Rescaling => "rescaling",
            TheoremId::RelativeIndex => "relative_index",
            TheoremId::CylinderReplacement => "cylinder_replacement",
            TheoremId::Homotopy => "homotopy",
            TheoremId::GradedVanishing => "graded_vanishing",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown theorem `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// An integer index with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub label: String,
    pub index: Vec<i64>,
    pub gap_ratio: f64,
    pub trail: Vec<TrailEntry>,
}

impl IndexRecord {
    fn new(label: impl Into<String>, r: &IndexReport) -> Self {
        IndexRecord {
            label: label.into(),
            index: r.index.clone(),
            gap_ratio: r.gap_ratio,
            trail: r.trail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub label: String,
    pub net_flow: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceValues {
    pub instance: usize,
    pub seed: Option<u64>,
    pub dim: usize,
    pub indices: Vec<IndexRecord>,
    pub flows: Vec<FlowRecord>,
}

/// Why an instance did not pass, with what is needed to rerun it alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub instance: usize,
    pub seed: Option<u64>,
    pub dim: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheckResult {
    pub id: TheoremId,
    pub instances: usize,
    pub failures: Vec<InstanceFailure>,
    /// Instances whose hypotheses failed; they do not count against the theorem.
    pub inadmissible: Vec<InstanceFailure>,
    pub values: Vec<InstanceValues>,
    pub verdict: Verdict,
    /// Ensemble the instances came from, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
}

impl TheoremCheckResult {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn admissible(&self) -> usize {
        self.instances - self.inadmissible.len()
    }
}

/// Outcome of one instance.
enum Outcome {
    Agree(InstanceValues),
    Disagree(InstanceValues, String),
    Inadmissible(InstanceValues, String),
}

pub(crate) fn hypothesis_error(e: &Error) -> bool {
    matches!(
        e,
        Error::EndpointNotInvertible { .. }
            | Error::CoverViolation { .. }
            | Error::SmoothingTooCoarse { .. }
            | Error::CollarMismatch(_)
    )
}

fn finish(id: TheoremId, outcomes: Vec<(usize, Option<u64>, usize, Result<Outcome>)>) -> TheoremCheckResult {
    let mut failures = vec![];
    let mut inadmissible = vec![];
    let mut values = vec![];
    let instances = outcomes.len();
    for (instance, seed, dim, out) in outcomes {
        let fail = |reason: String| InstanceFailure {
            instance,
            seed,
            dim,
            reason,
        };
        match out {
            Ok(Outcome::Agree(v)) => values.push(v),
            Ok(Outcome::Disagree(v, why)) => {
                failures.push(fail(why));
                values.push(v);
            }
            Ok(Outcome::Inadmissible(v, why)) => {
                inadmissible.push(fail(why));
                values.push(v);
            }
            Err(e) if hypothesis_error(&e) => inadmissible.push(fail(e.to_string())),
            Err(e) => failures.push(fail(e.to_string())),
        }
    }
    let verdict = if failures.is_empty() { Verdict::Pass } else { Verdict::Fail };
    TheoremCheckResult {
        id,
        instances,
        failures,
        inadmissible,
        values,
        verdict,
        ensemble: None,
    }
}

fn run_ensemble<F>(id: TheoremId, ens: &EnsembleSpec, f: F) -> Result<TheoremCheckResult>
where
    F: Fn(&Instance) -> Result<Outcome> + Sync,
{
    ens.validate()?;
    let outcomes: Vec<_> = (0..ens.instances)
        .into_par_iter()
        .map(|i| match ens.instance(i) {
            Ok(inst) => (i, Some(inst.seed), inst.dim, f(&inst)),
            Err(e) => (i, Some(instance_seed(ens.master_seed, i)), 0, Err(e)),
        })
        .collect();
    let mut res = finish(id, outcomes);
    res.ensemble = Some(ens.clone());
    Ok(res)
}

fn single(id: TheoremId, fam: &PotentialFamily, out: Result<Outcome>) -> TheoremCheckResult {
    finish(id, vec![(0, None, fam.dim(), out)])
}

fn values_for(inst: Option<&Instance>) -> InstanceValues {
    InstanceValues {
        instance: inst.map_or(0, |i| i.id),
        seed: inst.map(|i| i.seed),
        dim: inst.map_or(0, |i| i.dim),
        ..Default::default()
    }
}

/// Assumption gate; `Some(reason)` when the family is inadmissible.
fn inadmissible_reason(fam: &PotentialFamily, tol: &Tolerances) -> Result<Option<String>> {
    let rep = verify_assumptions_with(fam, tol)?;
    if rep.passed() {
        Ok(None)
    } else {
        Ok(Some(format!("assumptions fail: {:?}", rep.pass)))
    }
}

/// Index through the default ladder.
pub fn certified_index(fam: &PotentialFamily, tol: &Tolerances) -> Result<IndexReport> {
    let ladder = default_ladder(fam, DEFAULT_H_CAP, tol)?;
    convergence_study_with(fam, &ladder, tol)
}

fn all_equal<T: PartialEq>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

fn index_equals_flow(fam: &PotentialFamily, mut v: InstanceValues, tol: &Tolerances) -> Result<Outcome> {
    if let Some(why) = inadmissible_reason(fam, tol)? {
        return Ok(Outcome::Inadmissible(v, why));
    }
    let index = certified_index(fam, tol)?;
    let flow = spectral_flow_crossing_with(fam, tol)?;
    v.indices.push(IndexRecord::new("index", &index));
    v.flows.push(FlowRecord {
        label: "flow".into(),
        net_flow: flow.net_flow.clone(),
    });
    Ok(if index.index == flow.net_flow {
        Outcome::Agree(v)
    } else {
        let why = format!("index {:?} but spectral flow {:?}", index.index, flow.net_flow);
        Outcome::Disagree(v, why)
    })
}

/// Index (through cylinder ends) against crossing spectral flow, per block.
pub fn check_index_equals_sf(ens: &EnsembleSpec, tol: &Tolerances) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::IndexEqualsFlow, ens, |inst| {
        index_equals_flow(&inst.family, values_for(Some(inst)), tol)
    })
}

pub fn check_index_equals_sf_family(fam: &PotentialFamily, tol: &Tolerances) -> TheoremCheckResult {
    single(TheoremId::IndexEqualsFlow, fam, index_equals_flow(fam, values_for(None), tol))
}

/// Crossing tracker against the partition oracle on every ensemble path.
pub fn check_flow_oracles(ens: &EnsembleSpec, tol: &Tolerances) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::FlowOracles, ens, |inst| {
        let mut v = values_for(Some(inst));
        let crossing = spectral_flow_crossing_with(&inst.family, tol)?.net_flow;
        let partition = spectral_flow_partition_with(&inst.family, tol)?;
        let agree = crossing == partition;
        let why = format!("crossing {crossing:?} but partition {partition:?}");
        v.flows.push(FlowRecord {
            label: "crossing".into(),
            net_flow: crossing,
        });
        v.flows.push(FlowRecord {
            label: "partition".into(),
            net_flow: partition,
        });
        Ok(if agree { Outcome::Agree(v) } else { Outcome::Disagree(v, why) })
    })
}

fn rescaling(fam: &PotentialFamily, lambdas: &[f64], mut v: InstanceValues, tol: &Tolerances) -> Result<Outcome> {
    if let Some(why) = inadmissible_reason(fam, tol)? {
        return Ok(Outcome::Inadmissible(v, why));
    }
    for &l in lambdas {
        let r = certified_index(&rescale(fam, l)?, tol)?;
        v.indices.push(IndexRecord::new(format!("lambda={l}"), &r));
    }
    let idx: Vec<&Vec<i64>> = v.indices.iter().map(|r| &r.index).collect();
    Ok(if all_equal(&idx) {
        Outcome::Agree(v)
    } else {
        let why = format!("index varies with lambda: {idx:?}");
        Outcome::Disagree(v, why)
    })
}

/// Index of λS for each λ.
pub fn check_rescaling(fam: &PotentialFamily, lambdas: &[f64], tol: &Tolerances) -> TheoremCheckResult {
    single(TheoremId::Rescaling, fam, rescaling(fam, lambdas, values_for(None), tol))
}

pub fn check_rescaling_ensemble(
    ens: &EnsembleSpec,
    lambdas: &[f64],
    tol: &Tolerances,
) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::Rescaling, ens, |inst| {
        rescaling(&inst.family, lambdas, values_for(Some(inst)), tol)
    })
}

fn relative_index(
    fam1: &PotentialFamily,
    fam2: &PotentialFamily,
    glue: &GlueSpec,
    mut v: InstanceValues,
    tol: &Tolerances,
) -> Result<Outcome> {
    let (m3, m4) = swap_at_collars(fam1, fam2, glue, tol)?;
    for (label, f) in [("M1", fam1), ("M2", fam2), ("M3", &m3), ("M4", &m4)] {
        if let Some(why) = inadmissible_reason(f, tol)? {
            return Ok(Outcome::Inadmissible(v, format!("{label}: {why}")));
        }
    }
    let reports = [fam1, fam2, &m3, &m4]
        .par_iter()
        .map(|f| certified_index(f, tol))
        .collect::<Result<Vec<_>>>()?;
    for (label, r) in ["M1", "M2", "M3", "M4"].iter().zip(&reports) {
        v.indices.push(IndexRecord::new(*label, r));
    }
    let sum = |a: &IndexReport, b: &IndexReport| -> Vec<i64> {
        a.index.iter().zip(&b.index).map(|(x, y)| x + y).collect()
    };
    let lhs = sum(&reports[0], &reports[1]);
    let rhs = sum(&reports[2], &reports[3]);
    Ok(if lhs == rhs {
        Outcome::Agree(v)
    } else {
        let why = format!("Index1 + Index2 = {lhs:?} but Index3 + Index4 = {rhs:?}");
        Outcome::Disagree(v, why)
    })
}

/// Index¹ + Index² = Index³ + Index⁴ after swapping the halves beyond the
/// matched collars. Collar mismatches are precondition errors.
pub fn check_relative_index(
    fam1: &PotentialFamily,
    fam2: &PotentialFamily,
    glue: &GlueSpec,
    tol: &Tolerances,
) -> Result<TheoremCheckResult> {
    super::glue::check_collars(fam1, fam2, glue, tol)?;
    Ok(single(
        TheoremId::RelativeIndex,
        fam1,
        relative_index(fam1, fam2, glue, values_for(None), tol),
    ))
}

/// Random pairs: each instance family is matched with a partner built
/// from an independent family of the same dimension.
pub fn check_relative_index_ensemble(ens: &EnsembleSpec, tol: &Tolerances) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::RelativeIndex, ens, |inst| {
        let partner_seed = instance_seed(inst.seed, 1);
        let desc = match &inst.descriptor {
            crate::family::FamilyDescriptor::RandomSmooth(r) => {
                crate::family::FamilyDescriptor::random_smooth(r.dim, partner_seed)
            }
            other => other.clone(),
        };
        let base = build_family(&desc, &ens.grid()?, &ens.layout())?;
        let width = ((1.0 / ens.spacing).round() as usize).max(2);
        let (fam2, glue) = matched_partner(&inst.family, &base, width, width, partner_seed)?;
        relative_index(&inst.family, &fam2, &glue, values_for(Some(inst)), tol)
    })
}

fn cylinder_replacement(
    fam: &PotentialFamily,
    lengths: &[f64],
    mut v: InstanceValues,
    tol: &Tolerances,
) -> Result<Outcome> {
    if let Some(why) = inadmissible_reason(fam, tol)? {
        return Ok(Outcome::Inadmissible(v, why));
    }
    let h = default_spacing(fam, DEFAULT_H_CAP);
    for &l in lengths {
        let ladder: Vec<Rung> = [1.5, 1.25, 1.0].iter().map(|&s| Rung::from((s * h, l))).collect();
        let r = convergence_study_with(fam, &ladder, tol)?;
        v.indices.push(IndexRecord::new(format!("L={l}"), &r));
    }
    let idx: Vec<&Vec<i64>> = v.indices.iter().map(|r| &r.index).collect();
    Ok(if all_equal(&idx) {
        Outcome::Agree(v)
    } else {
        let why = format!("index varies with cylinder length: {idx:?}");
        Outcome::Disagree(v, why)
    })
}

/// Index with product ends of each length in `lengths`. Ends are made
/// constant first when they are not.
pub fn check_cylinder_replacement(fam: &PotentialFamily, lengths: &[f64], tol: &Tolerances) -> TheoremCheckResult {
    let out = constant(fam).and_then(|f| cylinder_replacement(&f, lengths, values_for(None), tol));
    single(TheoremId::CylinderReplacement, fam, out)
}

pub fn check_cylinder_replacement_ensemble(
    ens: &EnsembleSpec,
    lengths: &[f64],
    tol: &Tolerances,
) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::CylinderReplacement, ens, |inst| {
        cylinder_replacement(&constant(&inst.family)?, lengths, values_for(Some(inst)), tol)
    })
}

fn constant(fam: &PotentialFamily) -> Result<PotentialFamily> {
    if has_constant_ends(fam) {
        Ok(fam.clone())
    } else {
        make_constant_ends(fam, DEFAULT_COLLAR)
    }
}

/// Sample points of the homotopy checks.
pub const HOMOTOPY_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn homotopy(fam: &PotentialFamily, times: &[f64], mut v: InstanceValues, tol: &Tolerances) -> Result<Outcome> {
    if let Some(why) = inadmissible_reason(fam, tol)? {
        return Ok(Outcome::Inadmissible(v, why));
    }
    let width = (2.0 * fam.grid().h()).max(0.5);
    let smooth = smooth_family(fam, width)?.family;
    let mut members = vec![];
    for &t in times {
        members.push((format!("ends t={t}"), constant_ends_homotopy(fam, DEFAULT_COLLAR, t)?));
    }
    for &t in times {
        let mats = fam
            .matrices()
            .iter()
            .zip(smooth.matrices())
            .map(|(a, b)| if t == 0.0 { a.clone() } else { a.combine(1.0 - t, b, t) })
            .collect();
        let mut ht = PotentialFamily::new(fam.grid().clone(), mats, fam.compact(), fam.cover().to_vec())?;
        if let Some(b) = fam.blocks() {
            ht = ht.with_blocks(b.to_vec())?;
        }
        members.push((format!("smoothing t={t}"), ht));
    }
    for (label, m) in &members {
        if let Some(why) = inadmissible_reason(m, tol)? {
            return Ok(Outcome::Inadmissible(v, format!("{label}: {why}")));
        }
    }
    let results = members
        .par_iter()
        .map(|(_, m)| Ok((certified_index(m, tol)?, spectral_flow_crossing_with(m, tol)?.net_flow)))
        .collect::<Result<Vec<_>>>()?;
    for ((label, _), (r, flow)) in members.iter().zip(results) {
        v.indices.push(IndexRecord::new(label.clone(), &r));
        v.flows.push(FlowRecord {
            label: label.clone(),
            net_flow: flow,
        });
    }
    let idx: Vec<&Vec<i64>> = v.indices.iter().map(|r| &r.index).collect();
    Ok(if all_equal(&idx) && v.flows.iter().all(|f| &f.net_flow == idx[0]) {
        Outcome::Agree(v)
    } else {
        let flows: Vec<&Vec<i64>> = v.flows.iter().map(|f| &f.net_flow).collect();
        let why = format!("index not constant along the homotopy: {idx:?}, flows {flows:?}");
        Outcome::Disagree(v, why)
    })
}

/// Index (and spectral flow) at the sample times of the constant-ends
/// homotopy H^t and of the linear path from S to its smoothing.
pub fn check_homotopy_invariance(fam: &PotentialFamily, tol: &Tolerances) -> TheoremCheckResult {
    single(TheoremId::Homotopy, fam, homotopy(fam, &HOMOTOPY_TIMES, values_for(None), tol))
}

pub fn check_homotopy_ensemble(ens: &EnsembleSpec, tol: &Tolerances) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::Homotopy, ens, |inst| {
        homotopy(&inst.family, &HOMOTOPY_TIMES, values_for(Some(inst)), tol)
    })
}

fn graded(fam: &PotentialFamily, mut v: InstanceValues, tol: &Tolerances) -> Result<Outcome> {
    if let Some(why) = inadmissible_reason(fam, tol)? {
        return Ok(Outcome::Inadmissible(v, why));
    }
    let ladder = default_ladder(fam, DEFAULT_H_CAP, tol)?;
    let g = graded_convergence_study(fam, &ladder, tol)?;
    v.indices.push(IndexRecord::new("graded", &g.report));
    Ok(if g.vanishes {
        Outcome::Agree(v)
    } else {
        let why = format!("graded index {:?} does not vanish", g.report.index);
        Outcome::Disagree(v, why)
    })
}

/// Index of the doubled-fiber operator with a grading; must vanish.
pub fn check_graded_vanishing(ens: &EnsembleSpec, tol: &Tolerances) -> Result<TheoremCheckResult> {
    run_ensemble(TheoremId::GradedVanishing, ens, |inst| graded(&inst.family, values_for(Some(inst)), tol))
}

pub fn check_graded_vanishing_family(fam: &PotentialFamily, tol: &Tolerances) -> TheoremCheckResult {
    single(TheoremId::GradedVanishing, fam, graded(fam, values_for(None), tol))
}
