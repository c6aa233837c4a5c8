use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matching::match_branches;
use crate::error::{Error, Result};
use crate::family::{GridKind, PotentialFamily};
use crate::numerics::{count_in, eigenvalues, eigh, min_singular_value, EigenSystem, HermitianMatrix};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Block of the base the branch belongs to.
    pub block: usize,
    /// Segment [x_i, x_{i+1}] (the seam segment on a circle is the last one).
    pub segment: usize,
    pub branch: usize,
    /// +1 when the eigenvalue becomes nonnegative, −1 when it becomes negative.
    pub direction: i64,
    /// Linear interpolation of the zero between the two samples.
    pub location: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub arclength: f64,
    pub branch: usize,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlowReport {
    /// One entry per block.
    pub net_flow: Vec<i64>,
    pub crossings: Vec<Crossing>,
    pub refinement_depth: usize,
    pub oracle_flow: Vec<i64>,
    pub agreement: bool,
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

impl SpectralFlowReport {
    pub fn total(&self) -> i64 {
        self.net_flow.iter().sum()
    }

    /// CSV with columns arclength, branch, eigenvalue.
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
        );
        let mut body = String::from("arclength,branch,eigenvalue\n");
        for p in &self.trace {
            body.push_str(&format!("{},{},{}\n", p.arclength, p.branch, p.eigenvalue));
        }
        f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
        f.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn spectral_flow_crossing(fam: &PotentialFamily) -> Result<SpectralFlowReport> {
    spectral_flow_crossing_with(fam, &Tolerances::DEFAULT)
}

pub fn spectral_flow_crossing_with(
    fam: &PotentialFamily,
    tol: &Tolerances,
) -> Result<SpectralFlowReport> {
    if fam.grid().kind() != GridKind::Line {
        return Err(Error::Geometry("spectral_flow_crossing needs a line grid".into()));
    }
    check_endpoint(fam, 0, tol)?;
    check_endpoint(fam, fam.len() - 1, tol)?;
    run(fam, false, tol)
}

pub fn spectral_flow_circle(fam: &PotentialFamily) -> Result<SpectralFlowReport> {
    spectral_flow_circle_with(fam, &Tolerances::DEFAULT)
}

pub fn spectral_flow_circle_with(
    fam: &PotentialFamily,
    tol: &Tolerances,
) -> Result<SpectralFlowReport> {
    if fam.grid().kind() != GridKind::Circle {
        return Err(Error::Geometry("spectral_flow_circle needs a circle grid".into()));
    }
    check_endpoint(fam, 0, tol)?;
    run(fam, true, tol)
}

/// Σ over segments of #[0, ε)(S(x_{k+1})) − #[0, ε)(S(x_k)), one entry per block.
pub fn spectral_flow_partition(fam: &PotentialFamily) -> Result<Vec<i64>> {
    spectral_flow_partition_with(fam, &Tolerances::DEFAULT)
}

pub fn spectral_flow_partition_with(fam: &PotentialFamily, tol: &Tolerances) -> Result<Vec<i64>> {
    let closed = fam.grid().kind() == GridKind::Circle;
    check_endpoint(fam, 0, tol)?;
    if !closed {
        check_endpoint(fam, fam.len() - 1, tol)?;
    }
    (0..fam.block_count())
        .map(|b| {
            let blk = fam.block(b)?;
            let mut total = 0;
            for (seg, (i, j)) in segments(blk.len(), closed).enumerate() {
                let a = blk.matrix(i);
                let c = blk.matrix(j);
                total += partition_segment(seg, a, &eigenvalues(a), c, &eigenvalues(c), 0, tol)?;
            }
            Ok(total)
        })
        .collect()
}

fn check_endpoint(fam: &PotentialFamily, node: usize, tol: &Tolerances) -> Result<()> {
    let sigma = min_singular_value(fam.matrix(node).as_general())?;
    if !(sigma > tol.endpoint_invertibility) {
        return Err(Error::EndpointNotInvertible { node, sigma });
    }
    Ok(())
}

fn segments(len: usize, closed: bool) -> impl Iterator<Item = (usize, usize)> {
    let last = if closed { len } else { len - 1 };
    (0..last).map(move |i| (i, (i + 1) % len))
}

fn midpoint(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    a.combine(0.5, b, 0.5)
}

fn partition_segment(
    seg: usize,
    a: &HermitianMatrix,
    ea: &[f64],
    b: &HermitianMatrix,
    eb: &[f64],
    depth: usize,
    tol: &Tolerances,
) -> Result<i64> {
    let ds = if a == b { 0.0 } else { b.sub(a).norm() };
    let eps = choose_cut(ea, eb);
    let dist = ea.iter().map(|l| (l - eps).abs()).fold(f64::INFINITY, f64::min);
    if dist > ds {
        return Ok(count_in(eb, 0.0, eps) as i64 - count_in(ea, 0.0, eps) as i64);
    }
    if depth >= tol.max_refinement_depth {
        return Err(Error::ResolutionFailure { segment: seg, depth });
    }
    let m = midpoint(a, b);
    let em = eigenvalues(&m);
    Ok(partition_segment(seg, a, ea, &m, &em, depth + 1, tol)?
        + partition_segment(seg, &m, &em, b, eb, depth + 1, tol)?)
}

/// ε > 0 as far as possible from both spectra: midpoints between 0 and the
/// positive eigenvalues, or beyond the largest one.
fn choose_cut(ea: &[f64], eb: &[f64]) -> f64 {
    let mut pos: Vec<f64> = ea.iter().chain(eb).copied().filter(|&l| l > 0.0).collect();
    pos.sort_by(f64::total_cmp);
    let mut cands = vec![];
    let mut prev = 0.0;
    for &p in &pos {
        if p > prev {
            cands.push(0.5 * (prev + p));
        }
        prev = p;
    }
    cands.push(prev + prev.max(1.0));
    let dist = |e: f64| {
        ea.iter()
            .chain(eb)
            .map(|l| (l - e).abs())
            .fold(f64::INFINITY, f64::min)
    };
    cands
        .into_iter()
        .max_by(|x, y| dist(*x).total_cmp(&dist(*y)))
        .expect("at least one candidate")
}

struct Sample {
    x: f64,
    s: HermitianMatrix,
    sys: EigenSystem,
}

impl Sample {
    fn new(x: f64, s: HermitianMatrix) -> Result<Self> {
        let sys = eigh(&s)?;
        Ok(Sample { x, s, sys })
    }
}

struct Tracker<'a> {
    tol: &'a Tolerances,
    block: usize,
    branch_offset: usize,
    /// Branch id of each eigenvalue index at the current left sample.
    branch_of: Vec<usize>,
    crossings: Vec<Crossing>,
    trace: Vec<TracePoint>,
    depth: usize,
    origin: f64,
}

impl Tracker<'_> {
    fn record(&mut self, s: &Sample) {
        for (k, &l) in s.sys.eigenvalues.iter().enumerate() {
            self.trace.push(TracePoint {
                arclength: s.x - self.origin,
                branch: self.branch_offset + self.branch_of[k],
                eigenvalue: l,
            });
        }
    }

    fn segment(&mut self, seg: usize, a: &Sample, b: &Sample, depth: usize) -> Result<()> {
        self.depth = self.depth.max(depth);
        let n = a.sys.dim();
        let overlap: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let v = a.sys.vector(i);
                (0..n)
                    .map(|j| {
                        let w = b.sys.vector(j);
                        v.iter().zip(&w).map(|(p, q)| p.conj() * q).sum::<crate::numerics::C64>().norm()
                    })
                    .collect()
            })
            .collect();
        let (perm, worst) = match_branches(&overlap, self.tol.branch_overlap);
        let confident = worst >= self.tol.branch_overlap;
        let ds = if a.s == b.s { 0.0 } else { b.s.sub(&a.s).norm() };
        let la = &a.sys.eigenvalues;
        let lb = &b.sys.eigenvalues;
        // A branch keeping its sign can only have crossed twice if it moved
        // at least |λa| + |λb|, and branches move at most ‖ΔS‖.
        let hidden = (0..n).any(|k| {
            let (p, q) = (la[k], lb[perm[k]]);
            (p >= 0.0) == (q >= 0.0) && p.abs() + q.abs() < ds
        });
        if hidden || !confident {
            if depth < self.tol.max_refinement_depth {
                let m = Sample::new(0.5 * (a.x + b.x), midpoint(&a.s, &b.s))?;
                self.segment(seg, a, &m, depth + 1)?;
                return self.segment(seg, &m, b, depth + 1);
            }
            if hidden {
                return Err(Error::ResolutionFailure { segment: seg, depth });
            }
            // Only the labelling is uncertain here (degenerate samples); the
            // signed count per segment does not depend on it.
        }
        let mut next = vec![0; n];
        for k in 0..n {
            let (p, q) = (la[k], lb[perm[k]]);
            let id = self.branch_of[k];
            next[perm[k]] = id;
            let direction = match (p >= 0.0, q >= 0.0) {
                (false, true) => 1,
                (true, false) => -1,
                _ => continue,
            };
            let location = if p == q { a.x } else { a.x + (b.x - a.x) * (p / (p - q)) };
            self.crossings.push(Crossing {
                block: self.block,
                segment: seg,
                branch: self.branch_offset + id,
                direction,
                location,
            });
        }
        self.branch_of = next;
        self.record(b);
        Ok(())
    }
}

fn run(fam: &PotentialFamily, closed: bool, tol: &Tolerances) -> Result<SpectralFlowReport> {
    let grid = fam.grid();
    let oracle_flow = spectral_flow_partition_with(fam, tol)?;
    let mut net_flow = vec![];
    let mut crossings = vec![];
    let mut trace = vec![];
    let mut depth = 0;
    let mut offset = 0;
    for b in 0..fam.block_count() {
        let blk = fam.block(b)?;
        let n = blk.dim();
        let period = grid.h() * grid.len() as f64;
        let x_of = |i: usize, wrap: bool| grid.x(i) + if wrap { period } else { 0.0 };
        let mut t = Tracker {
            tol,
            block: b,
            branch_offset: offset,
            branch_of: (0..n).collect(),
            crossings: vec![],
            trace: vec![],
            depth: 0,
            origin: grid.x(0),
        };
        let mut left = Sample::new(x_of(0, false), blk.matrix(0).clone())?;
        t.record(&left);
        for (seg, (i, j)) in segments(blk.len(), closed).enumerate() {
            let right = Sample::new(x_of(j, j < i), blk.matrix(j).clone())?;
            t.segment(seg, &left, &right, 0)?;
            left = right;
        }
        net_flow.push(t.crossings.iter().map(|c| c.direction).sum());
        crossings.extend(t.crossings);
        trace.extend(t.trace);
        depth = depth.max(t.depth);
        offset += n;
    }
    let agreement = net_flow == oracle_flow;
    Ok(SpectralFlowReport {
        net_flow,
        crossings,
        refinement_depth: depth,
        oracle_flow,
        agreement,
        trace,
    })
}
