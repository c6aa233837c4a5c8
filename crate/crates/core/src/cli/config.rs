use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discretize::Scheme;
use crate::error::{Error, Result};
use crate::family::{
    build_family, FamilyDescriptor, Grid1D, GridKind, Layout, PotentialFamily, Profile, RandomSmooth,
};
use crate::index::Rung;
use crate::theorems::{EnsembleSpec, TheoremId};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldSection,
    pub family: FamilySection,
    pub task: Task,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    pub kind: GridKind,
    /// Line only: `[a, b]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Circle only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Length of the product ends attached beyond each end of the line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// tanh, arctan, kink, constant, random_smooth, random_blocks,
    /// random_loop or sampled. Ignored when `descriptor` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<FamilyDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Constant family value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of points of the base for random_blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// K as a coordinate interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compact: Option<[f64; 2]>,
    /// Anchors x_j per cover patch, left to right.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<f64>>,
    /// Declared a_j per cover patch, left to right.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Scale,
    Spacing,
    CylinderLength,
    Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Index {
        /// `[h, cylinder_length]` rungs; the default ladder when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ladder: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h_cap: Option<f64>,
    },
    Sflow,
    Assumptions,
    Theorem {
        id: TheoremId,
        /// Run over a seeded ensemble instead of the configured family.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ensemble: Option<EnsembleSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambdas: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lengths: Option<Vec<f64>>,
    },
    /// Index of the configured family for each value of one parameter.
    Sweep {
        parameter: SweepParameter,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write the eigenvalue branches of spectral-flow runs as CSV.
    #[serde(default)]
    pub branches: bool,
}

/// A parsed config with every default filled in and the keys that were
/// defaulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    pub defaulted: Vec<String>,
}

impl ResolvedConfig {
    /// Seed override from the command line; the seeds it sets are no longer defaulted.
    pub fn with_seed(mut self, seed: u64) -> ResolvedConfig {
        self.config = self.config.with_seed(seed);
        self.defaulted
            .retain(|k| k != "family.seed" && k != "task.ensemble.master_seed");
        self
    }
}

pub const DEFAULT_SPACING: f64 = 0.05;
pub const DEFAULT_LAMBDAS: [f64; 4] = [0.25, 1.0, 4.0, 16.0];
pub const DEFAULT_LENGTHS: [f64; 3] = [8.0, 16.0, 32.0];

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn semantic(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ConfigSemantic {
        key: key.into(),
        message: message.into(),
    }
}

/// Parses and validates a run configuration, then applies defaults.
pub fn parse_config(text: &str) -> Result<ResolvedConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::ConfigSyntax {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        semantic(key, inner.message().trim())
    })?;
    validate(&config)?;
    let raw = toml::Deserializer::parse(text)
        .ok()
        .and_then(|de| serde_json::Value::deserialize(de).ok())
        .unwrap_or_default();
    let mut resolved = resolve(config);
    resolved.defaulted.extend(absent_keys(&raw, &resolved.config));
    Ok(resolved)
}

/// Serde-defaulted keys the text leaves out.
fn absent_keys(raw: &serde_json::Value, c: &RunConfig) -> Vec<String> {
    fn has(raw: &serde_json::Value, path: &[&str]) -> bool {
        path.iter()
            .try_fold(raw, |t, k| t.get(*k))
            .is_some()
    }
    let fields = |v: serde_json::Value| -> Vec<String> {
        v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
    };
    let mut out = vec![];
    let mut check = |prefix: &[&str], key: &str| {
        let path: Vec<&str> = prefix.iter().copied().chain([key]).collect();
        if !has(raw, &path) {
            out.push(path.join("."));
        }
    };
    check(&["numerics"], "scheme");
    for k in fields(serde_json::to_value(c.numerics.tolerances).unwrap_or_default()) {
        check(&["numerics", "tolerances"], &k);
    }
    check(&["output"], "branches");
    if let Task::Theorem { ensemble: Some(e), .. } = &c.task {
        for k in fields(serde_json::to_value(e).unwrap_or_default()) {
            check(&["task", "ensemble"], &k);
        }
    }
    out
}

fn validate(c: &RunConfig) -> Result<()> {
    let m = &c.manifold;
    match m.kind {
        GridKind::Line => {
            let [a, b] = m.extent.ok_or_else(|| semantic("manifold.extent", "a line needs an extent [a, b]"))?;
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(semantic("manifold.extent", format!("need a < b, got [{a}, {b}]")));
            }
            if let Some([ka, kb]) = c.family.compact {
                if !(ka >= a && kb <= b && kb >= ka) {
                    return Err(semantic("family.compact", format!("[{ka}, {kb}] must lie inside [{a}, {b}]")));
                }
            }
        }
        GridKind::Circle => {
            if m.nodes.is_none_or(|n| n < 3) {
                return Err(semantic("manifold.nodes", "a circle needs at least 3 nodes"));
            }
        }
    }
    if let Some(h) = m.spacing {
        if !(h > 0.0 && h.is_finite()) {
            return Err(semantic("manifold.spacing", format!("spacing must be positive, got {h}")));
        }
    }
    if let Some(l) = m.cylinder_length {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(semantic("manifold.cylinder_length", format!("must be non-negative, got {l}")));
        }
    }
    if let Some(bounds) = &c.family.bounds {
        for (j, &a) in bounds.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(semantic(format!("family.bounds[{j}]"), format!("a_j must lie in (0,1), got {a}")));
            }
        }
    }
    if c.family.descriptor.is_none() {
        let name = c.family.name.as_deref().ok_or_else(|| {
            semantic("family.name", "give a family name or a descriptor")
        })?;
        match name {
            "tanh" | "arctan" | "kink" | "constant" | "random_smooth" | "random_blocks" | "random_loop" => {}
            "sampled" if c.family.path.is_some() => {}
            "sampled" => return Err(semantic("family.path", "a sampled family needs a path")),
            other => return Err(semantic("family.name", format!("unknown family `{other}`"))),
        }
        if let Some(0) = c.family.dim {
            return Err(semantic("family.dim", "dimension must be positive"));
        }
    }
    if let Some(s) = c.family.scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(semantic("family.scale", format!("scale must be positive, got {s}")));
        }
    }
    match &c.task {
        Task::Index { ladder, h_cap } => {
            if let Some(l) = ladder {
                if l.is_empty() || l.iter().any(|r| !(r[0] > 0.0) || !(r[1] >= 0.0)) {
                    return Err(semantic("task.ladder", "rungs are [h > 0, L >= 0]"));
                }
            }
            if h_cap.is_some_and(|h| !(h > 0.0)) {
                return Err(semantic("task.h_cap", "must be positive"));
            }
        }
        Task::Theorem { ensemble, lambdas, lengths, .. } => {
            if let Some(e) = ensemble {
                e.validate().map_err(|err| semantic("task.ensemble", err.to_string()))?;
            }
            if lambdas.as_ref().is_some_and(|l| l.iter().any(|&x| !(x > 0.0))) {
                return Err(semantic("task.lambdas", "rescaling factors must be positive"));
            }
            if lengths.as_ref().is_some_and(|l| l.iter().any(|&x| !(x >= 0.0))) {
                return Err(semantic("task.lengths", "cylinder lengths must be non-negative"));
            }
        }
        Task::Sweep { values, parameter } => {
            if values.is_empty() {
                return Err(semantic("task.values", "nothing to sweep"));
            }
            if *parameter != SweepParameter::Seed && values.iter().any(|&v| !(v > 0.0)) {
                return Err(semantic("task.values", "sweep values must be positive"));
            }
        }
        Task::Sflow | Task::Assumptions => {}
    }
    Ok(())
}

fn resolve(mut c: RunConfig) -> ResolvedConfig {
    let mut defaulted = vec![];
    let mut note = |k: &str| defaulted.push(k.to_string());
    if c.manifold.kind == GridKind::Line {
        if c.manifold.spacing.is_none() {
            c.manifold.spacing = Some(DEFAULT_SPACING);
            note("manifold.spacing");
        }
        if c.family.compact.is_none() {
            let [a, b] = c.manifold.extent.expect("validated");
            let q = (b - a) / 4.0;
            c.family.compact = Some([a + q, b - q]);
            note("family.compact");
        }
        if c.manifold.cylinder_length.is_none() {
            note("manifold.cylinder_length (default rule)");
        }
    }
    if c.family.descriptor.is_none() {
        let name = c.family.name.clone().unwrap_or_default();
        let random = matches!(name.as_str(), "random_smooth" | "random_blocks" | "random_loop");
        if random && c.family.dim.is_none() {
            c.family.dim = Some(2);
            note("family.dim");
        }
        if random && c.family.seed.is_none() {
            c.family.seed = Some(0);
            note("family.seed");
        }
        if name == "random_blocks" && c.family.blocks.is_none() {
            c.family.blocks = Some(3);
            note("family.blocks");
        }
        if name == "constant" && c.family.value.is_none() {
            c.family.value = Some(1.0);
            note("family.value");
        }
        if matches!(name.as_str(), "tanh" | "arctan" | "kink") && c.family.scale.is_none() {
            c.family.scale = Some(1.0);
            note("family.scale");
        }
    }
    match &mut c.task {
        Task::Index { h_cap, ladder } => {
            if h_cap.is_none() {
                *h_cap = Some(crate::index::DEFAULT_H_CAP);
                note("task.h_cap");
            }
            if ladder.is_none() {
                note("task.ladder (default rule)");
            }
        }
        Task::Theorem { id, lambdas, lengths, .. } => {
            if *id == TheoremId::Rescaling && lambdas.is_none() {
                *lambdas = Some(DEFAULT_LAMBDAS.to_vec());
                note("task.lambdas");
            }
            if *id == TheoremId::CylinderReplacement && lengths.is_none() {
                *lengths = Some(DEFAULT_LENGTHS.to_vec());
                note("task.lengths");
            }
        }
        _ => {}
    }
    ResolvedConfig { config: c, defaulted }
}

impl RunConfig {
    /// Applies a seed override to the family and to any ensemble.
    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        if self.family.seed.is_some() || self.family.descriptor.is_none() {
            self.family.seed = Some(seed);
        }
        if let Task::Theorem { ensemble: Some(e), .. } = &mut self.task {
            e.master_seed = seed;
        }
        self
    }

    /// SHA-256 of the canonical JSON form, output section excluded.
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid1D> {
        let m = &self.manifold;
        match m.kind {
            GridKind::Line => {
                let [a, b] = m.extent.ok_or_else(|| semantic("manifold.extent", "missing"))?;
                Grid1D::line(a, b, m.spacing.unwrap_or(DEFAULT_SPACING))
            }
            GridKind::Circle => Grid1D::circle(m.nodes.unwrap_or(64)),
        }
    }

    pub fn descriptor(&self) -> Result<FamilyDescriptor> {
        let f = &self.family;
        if let Some(d) = &f.descriptor {
            return Ok(d.clone());
        }
        let name = f.name.as_deref().unwrap_or_default();
        let random = RandomSmooth {
            dim: f.dim.unwrap_or(2),
            seed: f.seed.unwrap_or(0),
            ..RandomSmooth::default()
        };
        Ok(match name {
            "tanh" | "arctan" | "kink" => FamilyDescriptor::ScalarProfile {
                profile: Profile::from_name(name)?,
                scale: f.scale.unwrap_or(1.0),
                coefficient: None,
                offset: None,
            },
            "constant" => FamilyDescriptor::constant(crate::numerics::HermitianMatrix::scalar(
                f.value.unwrap_or(1.0),
            )),
            "random_smooth" => FamilyDescriptor::RandomSmooth(random),
            "random_loop" => FamilyDescriptor::RandomLoop(random),
            "random_blocks" => FamilyDescriptor::DirectSum {
                parts: (0..f.blocks.unwrap_or(3) as u64)
                    .map(|k| {
                        FamilyDescriptor::RandomSmooth(RandomSmooth {
                            seed: random.seed.wrapping_mul(31).wrapping_add(k),
                            ..random.clone()
                        })
                    })
                    .collect(),
            },
            "sampled" => FamilyDescriptor::Sampled {
                path: f.path.clone().ok_or_else(|| semantic("family.path", "missing"))?,
            },
            other => return Err(semantic("family.name", format!("unknown family `{other}`"))),
        })
    }

    /// The configured family on the configured grid, with K, anchors and bounds.
    pub fn family(&self) -> Result<PotentialFamily> {
        let grid = self.grid()?;
        let desc = self.descriptor()?;
        let layout = Layout {
            compact: self.family.compact,
            bounds: self
                .family
                .bounds
                .as_ref()
                .map(|b| b.iter().map(|&a| Some(a)).collect())
                .unwrap_or_default(),
        };
        let fam = build_family(&desc, &grid, &layout).map_err(|e| match e {
            Error::Family(m) if m.contains("bounds") => semantic("family.bounds", m),
            e => e,
        })?;
        match &self.family.anchors {
            Some(xs) => fam.with_anchors(xs).map_err(|e| semantic("family.anchors", e.to_string())),
            None => Ok(fam),
        }
    }

    pub fn ladder(&self) -> Option<Vec<Rung>> {
        match &self.task {
            Task::Index { ladder: Some(l), .. } => Some(l.iter().map(|r| Rung::from((r[0], r[1]))).collect()),
            _ => None,
        }
    }
}
