use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{build_family, FamilyDescriptor, Grid1D, Layout, PotentialFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RandomSmooth,
    /// Direct sum of `blocks` independent random parts (a finite base Y).
    Blocks { blocks: usize },
}

/// Seeded family ensemble on a common line grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub instances: usize,
    pub master_seed: u64,
    /// Inclusive range of the fiber dimension (per block for `Blocks`).
    pub dims: [usize; 2],
    /// Half-width of the line.
    pub extent: f64,
    /// Half-width of K.
    pub compact: f64,
    pub spacing: f64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            kind: EnsembleKind::RandomSmooth,
            instances: 50,
            master_seed: 0x5eed_ca11_1a5,
            dims: [1, 6],
            extent: 5.0,
            compact: 3.0,
            spacing: 0.25,
        }
    }
}

/// One member of an ensemble, enough to rebuild it alone.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: usize,
    pub seed: u64,
    pub dim: usize,
    pub descriptor: FamilyDescriptor,
    pub family: PotentialFamily,
}

/// Seed of instance `id`: stream `id` of a ChaCha generator keyed by the master seed.
pub fn instance_seed(master: u64, id: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id as u64);
    rng.next_u64()
}

impl EnsembleSpec {
    pub fn with_instances(mut self, n: usize) -> Self {
        self.instances = n;
        self
    }

    pub fn with_dims(mut self, lo: usize, hi: usize) -> Self {
        self.dims = [lo, hi];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.dims;
        if lo == 0 || hi < lo {
            return Err(Error::Family(format!("bad dimension range [{lo}, {hi}]")));
        }
        if !(self.compact > 0.0 && self.extent > self.compact && self.spacing > 0.0) {
            return Err(Error::Geometry(format!(
                "need 0 < compact < extent and spacing > 0, got {} / {} / {}",
                self.compact, self.extent, self.spacing
            )));
        }
        if let EnsembleKind::Blocks { blocks: 0 } = self.kind {
            return Err(Error::Family("block ensemble needs at least one block".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::line(-self.extent, self.extent, self.spacing)
    }

    pub fn layout(&self) -> Layout {
        Layout::compact(-self.compact, self.compact)
    }

    pub fn descriptor(&self, seed: u64) -> (usize, FamilyDescriptor) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [lo, hi] = self.dims;
        match self.kind {
            EnsembleKind::RandomSmooth => {
                let dim = rng.random_range(lo..=hi);
                (dim, FamilyDescriptor::random_smooth(dim, seed))
            }
            EnsembleKind::Blocks { blocks } => {
                let parts: Vec<FamilyDescriptor> = (0..blocks)
                    .map(|_| {
                        let d = rng.random_range(lo..=hi);
                        FamilyDescriptor::random_smooth(d, rng.next_u64())
                    })
                    .collect();
                let dim = parts
                    .iter()
                    .map(|p| match p {
                        FamilyDescriptor::RandomSmooth(r) => r.dim,
                        _ => unreachable!(),
                    })
                    .sum();
                (dim, FamilyDescriptor::DirectSum { parts })
            }
        }
    }

    pub fn instance(&self, id: usize) -> Result<Instance> {
        let seed = instance_seed(self.master_seed, id);
        let (dim, descriptor) = self.descriptor(seed);
        let family = build_family(&descriptor, &self.grid()?, &self.layout())?;
        Ok(Instance {
            id,
            seed,
            dim,
            descriptor,
            family,
        })
    }
}
