use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Line,
    Circle,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Line => "line",
            GridKind::Circle => "circle",
        }
    }
}

/// Uniform sampling of a segment or a circle.
///
/// Line nodes are `origin + i*h`. Circle nodes are angles `i*h` with
/// `h = 2π/N`; the seam joins node `N-1` to node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    kind: GridKind,
    origin: f64,
    h: f64,
    len: usize,
    /// Length appended beyond the original ends, `[left, right]`.
    end_margins: [f64; 2],
}

impl Grid1D {
    /// Nodes from `a` to `b` inclusive with spacing as close to `h` as divides the span.
    pub fn line(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::Grid(format!("bad extent [{a}, {b}]")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Grid(format!("spacing must be positive, got {h}")));
        }
        let cells = ((b - a) / h).round().max(1.0) as usize;
        Self::line_with_count(a, b, cells + 1)
    }

    pub fn line_with_count(a: f64, b: f64, len: usize) -> Result<Self> {
        if len < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes, got {len}")));
        }
        if !(b > a) {
            return Err(Error::Grid(format!("bad extent [{a}, {b}]")));
        }
        Ok(Grid1D {
            kind: GridKind::Line,
            origin: a,
            h: (b - a) / (len - 1) as f64,
            len,
            end_margins: [0.0, 0.0],
        })
    }

    pub fn circle(len: usize) -> Result<Self> {
        if len < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes, got {len}")));
        }
        Ok(Grid1D {
            kind: GridKind::Circle,
            origin: 0.0,
            h: TAU / len as f64,
            len,
            end_margins: [0.0, 0.0],
        })
    }

    /// Validates explicit coordinates (uniform within 1e-12 relative).
    pub fn from_nodes(kind: GridKind, nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Grid(format!(
                "need at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        let scale = nodes[0].abs().max(nodes[nodes.len() - 1].abs()).max(h);
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Grid(format!("nodes not increasing at {}", i + 1)));
            }
            if ((w[1] - w[0]) - h).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::Grid(format!("spacing not uniform at node {}", i + 1)));
            }
        }
        match kind {
            GridKind::Line => Ok(Grid1D {
                kind,
                origin: nodes[0],
                h,
                len: nodes.len(),
                end_margins: [0.0, 0.0],
            }),
            GridKind::Circle => {
                let g = Grid1D::circle(nodes.len())?;
                if (nodes[0]).abs() > 1e-12 || (g.h - h).abs() > 1e-12 {
                    return Err(Error::Grid(
                        "circle nodes must be the angles 2πk/N".into(),
                    ));
                }
                Ok(g)
            }
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end_margins(&self) -> [f64; 2] {
        self.end_margins
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.x(i)).collect()
    }

    pub fn start(&self) -> f64 {
        self.origin
    }

    pub fn end(&self) -> f64 {
        self.x(self.len - 1)
    }

    /// Node nearest to coordinate `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.origin) / self.h).round();
        t.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Nodes with coordinates inside `[a, b]`, allowing half a cell of slack.
    pub fn range_within(&self, a: f64, b: f64) -> super::NodeRange {
        let eps = 1e-9 * self.h;
        let start = (((a - self.origin) / self.h) - eps).ceil().max(0.0) as usize;
        let end = ((((b - self.origin) / self.h) + eps).floor() + 1.0)
            .clamp(0.0, self.len as f64) as usize;
        super::NodeRange::new(start.min(end), end)
    }

    /// Same grid with `left`/`right` extra nodes and margins grown accordingly.
    pub(crate) fn extended(&self, left: usize, right: usize) -> Grid1D {
        Grid1D {
            kind: self.kind,
            origin: self.origin - left as f64 * self.h,
            h: self.h,
            len: self.len + left + right,
            end_margins: [
                self.end_margins[0] + left as f64 * self.h,
                self.end_margins[1] + right as f64 * self.h,
            ],
        }
    }

    /// Same kind and extent, new spacing close to `h`.
    pub fn respaced(&self, h: f64) -> Result<Grid1D> {
        match self.kind {
            GridKind::Line => {
                let mut g = Grid1D::line(self.start(), self.end(), h)?;
                g.end_margins = self.end_margins;
                Ok(g)
            }
            GridKind::Circle => Grid1D::circle((TAU / h).round() as usize),
        }
    }

    /// Contiguous sub-grid `[start, end)`; margins are dropped.
    pub(crate) fn slice(&self, start: usize, end: usize) -> Grid1D {
        Grid1D {
            kind: GridKind::Line,
            origin: self.x(start),
            h: self.h,
            len: end - start,
            end_margins: [0.0, 0.0],
        }
    }

    pub(crate) fn with_origin(&self, origin: f64) -> Grid1D {
        Grid1D {
            origin,
            ..self.clone()
        }
    }
}
