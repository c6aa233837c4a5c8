use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::grid::{Grid1D, GridKind};
use super::io::load_samples;
use super::potential::{default_cover, NodeRange, PotentialFamily};
use crate::error::{Error, Result};
use crate::numerics::{eigh, GeneralMatrix, HermitianMatrix, C64};

/// Scalar profile f in S(x) = f(x/scale)·A + B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Profile {
    Tanh,
    /// (2/π) arctan, normalized to the limits ±1.
    Arctan,
    /// Linear between `knots` (x, value), constant beyond the first and last.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
}

impl Profile {
    pub fn from_name(name: &str) -> Result<Profile> {
        match name {
            "tanh" => Ok(Profile::Tanh),
            "arctan" => Ok(Profile::Arctan),
            "kink" => Ok(Profile::PiecewiseLinear {
                knots: vec![[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]],
            }),
            _ => Err(Error::UnknownFamily(format!("profile `{name}`"))),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Tanh => x.tanh(),
            Profile::Arctan => x.atan() * (2.0 / PI),
            Profile::PiecewiseLinear { knots } => piecewise_linear(knots, x),
        }
    }
}

fn piecewise_linear(knots: &[[f64; 2]], x: f64) -> f64 {
    match knots {
        [] => 0.0,
        [k] => k[1],
        _ => {
            if x <= knots[0][0] {
                return knots[0][1];
            }
            for w in knots.windows(2) {
                if x <= w[1][0] {
                    let t = (x - w[0][0]) / (w[1][0] - w[0][0]);
                    return w[0][1] + t * (w[1][1] - w[0][1]);
                }
            }
            knots[knots.len() - 1][1]
        }
    }
}

/// Parameters of the seeded smooth random families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSmooth {
    pub dim: usize,
    pub seed: u64,
    /// Trigonometric polynomial degree of the bump term.
    pub degree: usize,
    /// Width of the tanh transition between the two ends.
    pub width: f64,
    /// Magnitude range of the end eigenvalues.
    pub gap: [f64; 2],
    pub amplitude: f64,
    /// Restrict to real symmetric matrices.
    pub real: bool,
}

impl Default for RandomSmooth {
    fn default() -> Self {
        RandomSmooth {
            dim: 2,
            seed: 0,
            degree: 4,
            width: 1.5,
            gap: [1.0, 1.6],
            amplitude: 0.7,
            real: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    ScalarProfile {
        profile: Profile,
        #[serde(default = "one")]
        scale: f64,
        /// Defaults to the 1×1 identity.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficient: Option<HermitianMatrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<HermitianMatrix>,
    },
    Constant {
        matrix: HermitianMatrix,
    },
    DirectSum {
        parts: Vec<FamilyDescriptor>,
    },
    /// S(x) = (1-s)S₋ + sS₊ + sech²(x/w)P(x), s = (1 + tanh(x/w))/2,
    /// with P a random trigonometric polynomial.
    RandomSmooth(RandomSmooth),
    /// Periodic family S(θ) = S₀ + Σ_k C_k cos kθ + D_k sin kθ on a circle.
    RandomLoop(RandomSmooth),
    Sampled {
        path: PathBuf,
    },
    Rescaled {
        base: Box<FamilyDescriptor>,
        factor: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl FamilyDescriptor {
    pub fn tanh() -> Self {
        FamilyDescriptor::ScalarProfile {
            profile: Profile::Tanh,
            scale: 1.0,
            coefficient: None,
            offset: None,
        }
    }

    pub fn constant(matrix: HermitianMatrix) -> Self {
        FamilyDescriptor::Constant { matrix }
    }

    pub fn random_smooth(dim: usize, seed: u64) -> Self {
        FamilyDescriptor::RandomSmooth(RandomSmooth {
            dim,
            seed,
            ..RandomSmooth::default()
        })
    }

    pub fn compile(&self) -> Result<Evaluator> {
        Ok(match self {
            FamilyDescriptor::ScalarProfile {
                profile,
                scale,
                coefficient,
                offset,
            } => {
                if !(*scale > 0.0) {
                    return Err(Error::Family(format!("profile scale must be positive, got {scale}")));
                }
                let a = coefficient.clone().unwrap_or_else(|| HermitianMatrix::identity(1));
                let b = offset.clone().unwrap_or_else(|| HermitianMatrix::zeros(a.dim()));
                if a.dim() != b.dim() {
                    return Err(Error::Family("coefficient and offset dimensions differ".into()));
                }
                Evaluator::Profile {
                    profile: profile.clone(),
                    scale: *scale,
                    a,
                    b,
                }
            }
            FamilyDescriptor::Constant { matrix } => Evaluator::Constant(matrix.clone()),
            FamilyDescriptor::DirectSum { parts } => {
                if parts.is_empty() {
                    return Err(Error::Family("empty direct sum".into()));
                }
                Evaluator::Sum(parts.iter().map(|p| p.compile()).collect::<Result<_>>()?)
            }
            FamilyDescriptor::RandomSmooth(p) => Evaluator::random_line(p)?,
            FamilyDescriptor::RandomLoop(p) => Evaluator::random_loop(p)?,
            FamilyDescriptor::Sampled { path } => {
                let (nodes, matrices) = load_samples(path)?;
                Evaluator::Samples { nodes, matrices }
            }
            FamilyDescriptor::Rescaled { base, factor } => {
                if !(*factor > 0.0) {
                    return Err(Error::NonPositiveScale(*factor));
                }
                Evaluator::Scaled(Box::new(base.compile()?), *factor)
            }
        })
    }

    /// Block sizes induced by direct sums (None for a single block).
    pub fn block_sizes(&self) -> Result<Option<Vec<usize>>> {
        match self {
            FamilyDescriptor::DirectSum { parts } => {
                let mut sizes = vec![];
                for p in parts {
                    match p.block_sizes()? {
                        Some(s) => sizes.extend(s),
                        None => sizes.push(p.compile()?.dim()),
                    }
                }
                Ok(Some(sizes))
            }
            FamilyDescriptor::Rescaled { base, .. } => base.block_sizes(),
            _ => Ok(None),
        }
    }
}

/// A descriptor prepared for pointwise evaluation.
#[derive(Debug, Clone)]
pub enum Evaluator {
    Profile {
        profile: Profile,
        scale: f64,
        a: HermitianMatrix,
        b: HermitianMatrix,
    },
    Constant(HermitianMatrix),
    Sum(Vec<Evaluator>),
    RandomLine {
        width: f64,
        omega: f64,
        minus: HermitianMatrix,
        plus: HermitianMatrix,
        cos: Vec<HermitianMatrix>,
        sin: Vec<HermitianMatrix>,
    },
    RandomLoop {
        base: HermitianMatrix,
        cos: Vec<HermitianMatrix>,
        sin: Vec<HermitianMatrix>,
    },
    Samples {
        nodes: Vec<f64>,
        matrices: Vec<HermitianMatrix>,
    },
    Scaled(Box<Evaluator>, f64),
}

impl Evaluator {
    pub fn dim(&self) -> usize {
        match self {
            Evaluator::Profile { a, .. } => a.dim(),
            Evaluator::Constant(m) => m.dim(),
            Evaluator::Sum(parts) => parts.iter().map(Evaluator::dim).sum(),
            Evaluator::RandomLine { plus, .. } => plus.dim(),
            Evaluator::RandomLoop { base, .. } => base.dim(),
            Evaluator::Samples { matrices, .. } => matrices[0].dim(),
            Evaluator::Scaled(e, _) => e.dim(),
        }
    }

    pub fn eval(&self, x: f64) -> HermitianMatrix {
        match self {
            Evaluator::Profile { profile, scale, a, b } => {
                a.combine(profile.eval(x / scale), b, 1.0)
            }
            Evaluator::Constant(m) => m.clone(),
            Evaluator::Sum(parts) => {
                let blocks: Vec<_> = parts.iter().map(|p| p.eval(x)).collect();
                HermitianMatrix::direct_sum(&blocks)
            }
            Evaluator::RandomLine {
                width,
                omega,
                minus,
                plus,
                cos,
                sin,
            } => {
                let u = x / width;
                let s = 0.5 * (1.0 + u.tanh());
                let bump = 1.0 / u.cosh().powi(2);
                let mut m = minus.combine(1.0 - s, plus, s);
                for (k, (c, d)) in cos.iter().zip(sin).enumerate() {
                    let phase = k as f64 * omega * x;
                    m = m.combine(1.0, c, bump * phase.cos());
                    m = m.combine(1.0, d, bump * phase.sin());
                }
                m
            }
            Evaluator::RandomLoop { base, cos, sin } => {
                let mut m = base.clone();
                for (k, (c, d)) in cos.iter().zip(sin).enumerate() {
                    let phase = (k + 1) as f64 * x;
                    m = m.combine(1.0, c, phase.cos());
                    m = m.combine(1.0, d, phase.sin());
                }
                m
            }
            Evaluator::Samples { nodes, matrices } => {
                let last = nodes.len() - 1;
                if x <= nodes[0] {
                    return matrices[0].clone();
                }
                if x >= nodes[last] {
                    return matrices[last].clone();
                }
                let h = (nodes[last] - nodes[0]) / last as f64;
                let t = (x - nodes[0]) / h;
                let i = (t.floor() as usize).min(last - 1);
                let frac = t - i as f64;
                if frac.abs() < 1e-9 {
                    return matrices[i].clone();
                }
                if (1.0 - frac).abs() < 1e-9 {
                    return matrices[i + 1].clone();
                }
                interpolate(&matrices[i], &matrices[i + 1], frac)
            }
            Evaluator::Scaled(e, f) => e.eval(x).scale(*f),
        }
    }

    fn random_line(p: &RandomSmooth) -> Result<Evaluator> {
        check_random(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let minus = random_invertible(&mut rng, p)?;
        let plus = random_invertible(&mut rng, p)?;
        let (cos, sin) = random_coefficients(&mut rng, p, 0);
        Ok(Evaluator::RandomLine {
            width: p.width,
            omega: PI / 4.0,
            minus,
            plus,
            cos,
            sin,
        })
    }

    fn random_loop(p: &RandomSmooth) -> Result<Evaluator> {
        check_random(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let base = random_invertible(&mut rng, p)?;
        let (cos, sin) = random_coefficients(&mut rng, p, 1);
        Ok(Evaluator::RandomLoop { base, cos, sin })
    }
}

/// (1-t)A + tB, returning A itself when both ends agree bitwise.
pub(crate) fn interpolate(a: &HermitianMatrix, b: &HermitianMatrix, t: f64) -> HermitianMatrix {
    if a == b {
        a.clone()
    } else {
        a.combine(1.0 - t, b, t)
    }
}

fn check_random(p: &RandomSmooth) -> Result<()> {
    if p.dim == 0 {
        return Err(Error::Family("random family dimension must be positive".into()));
    }
    if !(p.width > 0.0) || !(p.gap[0] > 0.0 && p.gap[1] >= p.gap[0]) {
        return Err(Error::Family("random family width/gap out of range".into()));
    }
    Ok(())
}

fn gaussian_hermitian(rng: &mut ChaCha8Rng, n: usize, real: bool) -> HermitianMatrix {
    let mut g = GeneralMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
            g.set(i, j, C64::new(re, im));
        }
    }
    HermitianMatrix::symmetrized(&g + &g.adjoint())
}

/// U diag(±d) U* with magnitudes d drawn from `gap` and independent signs.
fn random_invertible(rng: &mut ChaCha8Rng, p: &RandomSmooth) -> Result<HermitianMatrix> {
    let u = eigh(&gaussian_hermitian(rng, p.dim, p.real))?.eigenvectors;
    let values: Vec<f64> = (0..p.dim)
        .map(|_| {
            let mag = rng.random_range(p.gap[0]..=p.gap[1]);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let d = GeneralMatrix::real_diag(&values);
    Ok(HermitianMatrix::symmetrized(&(&u * &d) * &u.adjoint()))
}

/// Unit-norm Hermitian coefficients scaled by amplitude/(1+k).
fn random_coefficients(
    rng: &mut ChaCha8Rng,
    p: &RandomSmooth,
    first: usize,
) -> (Vec<HermitianMatrix>, Vec<HermitianMatrix>) {
    let mut cos = vec![];
    let mut sin = vec![];
    for k in first..=p.degree {
        let weight = p.amplitude / (1.0 + k as f64);
        for out in [&mut cos, &mut sin] {
            let g = gaussian_hermitian(rng, p.dim, p.real);
            let norm = g.norm().max(f64::MIN_POSITIVE);
            out.push(g.scale(weight / norm));
        }
    }
    (cos, sin)
}

/// Where K sits and which a_j are declared.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Layout {
    /// Coordinate interval of K; `None` means the whole grid.
    pub compact: Option<[f64; 2]>,
    /// Declared a_j per cover patch, left to right.
    #[serde(default)]
    pub bounds: Vec<Option<f64>>,
}

impl Layout {
    pub fn compact(a: f64, b: f64) -> Self {
        Layout {
            compact: Some([a, b]),
            bounds: vec![],
        }
    }
}

/// Samples a descriptor on a grid and attaches K, cover and block metadata.
pub fn build_family(
    desc: &FamilyDescriptor,
    grid: &Grid1D,
    layout: &Layout,
) -> Result<PotentialFamily> {
    let eval = desc.compile()?;
    if let Evaluator::Samples { nodes, .. } = &eval {
        let ok = nodes.len() == grid.len()
            && nodes
                .iter()
                .enumerate()
                .all(|(i, &x)| (x - grid.x(i)).abs() <= 1e-9 * (1.0 + x.abs()));
        if !ok {
            return Err(Error::Grid(
                "sampled family nodes do not match the grid; use resample".into(),
            ));
        }
    }
    let matrices: Vec<HermitianMatrix> = (0..grid.len()).map(|i| eval.eval(grid.x(i))).collect();
    let compact = compact_range(grid, layout)?;
    let cover = default_cover(grid, compact);
    let mut fam = PotentialFamily::new(grid.clone(), matrices, compact, cover)?;
    if !layout.bounds.is_empty() {
        fam = fam.with_bounds(&layout.bounds)?;
    }
    if let Some(sizes) = desc.block_sizes()? {
        fam = fam.with_blocks(sizes)?;
    }
    Ok(fam.with_descriptor(Some(desc.clone())))
}

pub(crate) fn compact_range(grid: &Grid1D, layout: &Layout) -> Result<NodeRange> {
    match (grid.kind(), layout.compact) {
        (GridKind::Circle, Some(_)) => Err(Error::Family(
            "circle families use the whole loop as compact set".into(),
        )),
        (_, None) => Ok(NodeRange::new(0, grid.len())),
        (GridKind::Line, Some([a, b])) => {
            if !(a <= b) {
                return Err(Error::Family(format!("compact interval [{a}, {b}] is reversed")));
            }
            let r = grid.range_within(a, b);
            if r.start >= grid.len() || (r.is_empty() && a != b) {
                return Err(Error::Family(format!(
                    "compact interval [{a}, {b}] misses the grid"
                )));
            }
            Ok(r)
        }
    }
}
