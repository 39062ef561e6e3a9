//! Bijections of the cells of a dyadic grid and their tiled application.

use rayon::prelude::*;

use crate::error::{MixError, Result};
use crate::grid::{FieldData, GridSpec, TracerField};

/// A bijection of the cells of a `2^level x 2^level` grid. `dest[c]` is the
/// cell that receives the content of cell `c` (column-major indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellPermutation {
    level: u32,
    dest: Vec<u32>,
}

impl CellPermutation {
    pub fn identity(level: u32) -> Self {
        let n = 1usize << (2 * level);
        Self {
            level,
            dest: (0..n as u32).collect(),
        }
    }

    pub fn new(level: u32, dest: Vec<u32>) -> Result<Self> {
        let n = 1usize << (2 * level);
        if dest.len() != n {
            return Err(MixError::InvalidParameter(format!(
                "permutation of level {level} needs {n} entries, got {}",
                dest.len()
            )));
        }
        let mut seen = vec![false; n];
        for &d in &dest {
            let d = d as usize;
            if d >= n || seen[d] {
                return Err(MixError::InvalidParameter(format!(
                    "entry {d} is out of range or repeated"
                )));
            }
            seen[d] = true;
        }
        Ok(Self { level, dest })
    }

    /// Builds from a map `(i, j) -> (i', j')` on the `2^level` grid.
    pub fn from_fn(level: u32, f: impl Fn(usize, usize) -> (usize, usize)) -> Result<Self> {
        let n = 1usize << level;
        let mut dest = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = f(i, j);
                if a >= n || b >= n {
                    return Err(MixError::InvalidParameter(format!(
                        "cell ({i}, {j}) maps outside the grid"
                    )));
                }
                dest.push((a * n + b) as u32);
            }
        }
        Self::new(level, dest)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> usize {
        1usize << self.level
    }

    pub fn dest(&self) -> &[u32] {
        &self.dest
    }

    pub fn map_cell(&self, i: usize, j: usize) -> (usize, usize) {
        let n = self.side();
        let d = self.dest[i * n + j] as usize;
        (d / n, d % n)
    }

    pub fn is_identity(&self) -> bool {
        self.dest.iter().enumerate().all(|(k, &d)| k == d as usize)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.dest.len()];
        for (c, &d) in self.dest.iter().enumerate() {
            inv[d as usize] = c as u32;
        }
        Self {
            level: self.level,
            dest: inv,
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &CellPermutation) -> Result<Self> {
        if self.level != next.level {
            return Err(MixError::InvalidParameter(format!(
                "cannot compose permutations of levels {} and {}",
                self.level, next.level
            )));
        }
        Ok(Self {
            level: self.level,
            dest: self.dest.iter().map(|&d| next.dest[d as usize]).collect(),
        })
    }

    /// The same map on a finer grid: each cell is split into sub-cells that
    /// are translated rigidly with their parent.
    pub fn refine(&self, new_level: u32) -> Result<Self> {
        if new_level < self.level {
            return Err(MixError::ResolutionTooCoarse {
                have: new_level,
                need: self.level,
            });
        }
        let shift = new_level - self.level;
        let n = 1usize << new_level;
        let sub = 1usize << shift;
        let dest = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let (a, b) = self.map_cell(i >> shift, j >> shift);
                let (ni, nj) = (a * sub + (i & (sub - 1)), b * sub + (j & (sub - 1)));
                (ni * n + nj) as u32
            })
            .collect();
        Ok(Self {
            level: new_level,
            dest,
        })
    }

    /// Applies this permutation inside every tile of level `tile_level` of
    /// `field`, whose grid must satisfy `m = tile_level + self.level`.
    pub fn apply_tiled(&self, field: &TracerField, tile_level: u32) -> Result<TracerField> {
        let perms = TiledPermutations::Uniform(self);
        apply_tiled(field, tile_level, &perms)
    }

    /// Applies the permutation to a field on a grid of the same level.
    pub fn apply(&self, field: &TracerField) -> Result<TracerField> {
        self.apply_tiled(field, 0)
    }
}

/// Permutations to use in each tile of a level, indexed like tiles.
pub enum TiledPermutations<'a> {
    Uniform(&'a CellPermutation),
    PerTile(Vec<&'a CellPermutation>),
}

impl TiledPermutations<'_> {
    fn get(&self, tile: usize) -> &CellPermutation {
        match self {
            TiledPermutations::Uniform(p) => p,
            TiledPermutations::PerTile(v) => v[tile],
        }
    }
}

/// Moves the content of each cell of each tile to its destination within the
/// same tile. Tiles are processed independently.
pub fn apply_tiled(
    field: &TracerField,
    tile_level: u32,
    perms: &TiledPermutations<'_>,
) -> Result<TracerField> {
    let grid = field.grid();
    if tile_level > grid.m() {
        return Err(MixError::LevelTooFine {
            level: tile_level,
            m: grid.m(),
        });
    }
    let local = grid.m() - tile_level;
    let tiles = 1usize << tile_level;
    for t in 0..tiles * tiles {
        if perms.get(t).level() != local {
            return Err(MixError::InvalidParameter(format!(
                "tile permutation has level {}, tiles hold 2^{local} cells per side",
                perms.get(t).level()
            )));
        }
    }
    let n = grid.side();
    let ls = 1usize << local;
    // Each strip of tile columns is filled independently; every output cell
    // receives exactly one source index.
    let mut source = vec![0u32; grid.cell_count()];
    source
        .par_chunks_mut(n * ls)
        .enumerate()
        .for_each(|(k, strip)| {
            for h in 0..tiles {
                let p = perms.get(k * tiles + h);
                for a in 0..ls {
                    for b in 0..ls {
                        let d = p.dest[a * ls + b] as usize;
                        let (da, db) = (d / ls, d % ls);
                        let out = da * n + h * ls + db;
                        let src = (k * ls + a) * n + h * ls + b;
                        strip[out] = src as u32;
                    }
                }
            }
        });
    let data = match field.data() {
        FieldData::Binary(s) => {
            FieldData::Binary(source.par_iter().map(|&c| s[c as usize]).collect())
        }
        FieldData::Continuous(v) => {
            FieldData::Continuous(source.par_iter().map(|&c| v[c as usize]).collect())
        }
    };
    Ok(TracerField::from_parts(grid, data))
}

/// Composite map of the cell centers of a grid; used to track flow maps.
pub fn compose_on_grid(
    grid: GridSpec,
    current: &[u32],
    tile_level: u32,
    perms: &TiledPermutations<'_>,
) -> Vec<u32> {
    let n = grid.side();
    let local = grid.m() - tile_level;
    let ls = 1usize << local;
    let tiles = 1usize << tile_level;
    current
        .par_iter()
        .map(|&c| {
            let c = c as usize;
            let (i, j) = (c / n, c % n);
            let (k, h) = (i / ls, j / ls);
            let p = perms.get(k * tiles + h);
            let d = p.dest[(i % ls) * ls + (j % ls)] as usize;
            ((k * ls + d / ls) * n + h * ls + d % ls) as u32
        })
        .collect()
}
