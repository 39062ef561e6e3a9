//! Dyadic grids over the unit square `Q = (-1/2, 1/2)^2`, tracer fields,
//! tilings and tile statistics.
//!
//! Cells are addressed by `(i, j)` where `i` is the column (x direction, left
//! to right) and `j` the row (y direction, bottom to top). Storage is
//! column-major: `index = i * side + j`. The field is identically zero outside
//! `Q`; nothing is stored for the exterior.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{MixError, Result};

/// Largest supported grid exponent (cell indices must fit in `u32`).
pub const MAX_LEVEL: u32 = 14;

/// Tolerance used for mean-zero and mixed checks on continuous fields.
pub const CONTINUOUS_TOL: f64 = 1e-12;

/// A `2^m x 2^m` grid of cells covering `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    m: u32,
}

impl GridSpec {
    pub fn new(m: u32) -> Result<Self> {
        if m > MAX_LEVEL {
            return Err(MixError::InvalidParameter(format!(
                "grid exponent {m} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Cells per side, `2^m`.
    pub fn side(&self) -> usize {
        1usize << self.m
    }

    pub fn cell_count(&self) -> usize {
        self.side() * self.side()
    }

    /// Cell side length `h = 2^-m`.
    pub fn h(&self) -> f64 {
        1.0 / self.side() as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.side(), index % self.side())
    }

    /// Physical center of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        (-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h)
    }

    /// Cell containing the point, or `None` outside `Q`.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x > -0.5 && x < 0.5 && y > -0.5 && y < 0.5) {
            return None;
        }
        let n = self.side();
        let i = (((x + 0.5) * n as f64) as usize).min(n - 1);
        let j = (((y + 0.5) * n as f64) as usize).min(n - 1);
        Some((i, j))
    }
}

/// Storage mode of a tracer field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum FieldData {
    /// One sign per cell, always +1 or -1.
    Binary(Vec<i8>),
    Continuous(Vec<f64>),
}

/// A scalar tracer, piecewise constant on the cells of a [`GridSpec`].
///
/// Binary fields take values in `{+1, -1}` with equal counts of each sign, so
/// their mean is exactly zero and every integral is an exact integer count.
/// Continuous fields hold arbitrary finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct TracerField {
    grid: GridSpec,
    data: FieldData,
}

/// Canonical initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// +1 for x < 0, -1 for x > 0.
    LeftRightHalves,
    /// +1 for y > 0, -1 for y < 0.
    TopBottomHalves,
    /// Tiles of level `l` alternate in sign, bottom-left tile +1.
    Checkerboard(u32),
    /// Vertical stripes of width `2^-l`, leftmost stripe +1.
    Stripes(u32),
    /// Horizontal stripes of width `2^-l`, topmost stripe +1.
    HorizontalStripes(u32),
}

impl Pattern {
    fn level(&self) -> u32 {
        match *self {
            Pattern::LeftRightHalves | Pattern::TopBottomHalves => 1,
            Pattern::Checkerboard(l) | Pattern::Stripes(l) | Pattern::HorizontalStripes(l) => l,
        }
    }
}

impl TracerField {
    /// Builds a binary field, rejecting entries other than +1/-1 and
    /// unbalanced sign counts.
    pub fn binary(grid: GridSpec, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != grid.cell_count() {
            return Err(MixError::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.cell_count(),
                signs.len()
            )));
        }
        let mut total: i64 = 0;
        for &s in &signs {
            if s != 1 && s != -1 {
                return Err(MixError::InvalidParameter(format!(
                    "binary field entry {s} is not +1 or -1"
                )));
            }
            total += s as i64;
        }
        if total != 0 {
            return Err(MixError::NotMeanZero(total as f64 / signs.len() as f64));
        }
        Ok(Self {
            grid,
            data: FieldData::Binary(signs),
        })
    }

    pub fn continuous(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(MixError::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(MixError::InvalidParameter(format!("non-finite value {v}")));
        }
        Ok(Self {
            grid,
            data: FieldData::Continuous(values),
        })
    }

    /// Continuous field sampled from a function of the cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let n = grid.side();
        let values: Vec<f64> = (0..grid.cell_count())
            .into_par_iter()
            .map(|idx| {
                let (x, y) = grid.center(idx / n, idx % n);
                f(x, y)
            })
            .collect();
        Self::continuous(grid, values)
    }

    pub fn pattern(grid: GridSpec, pattern: Pattern) -> Result<Self> {
        let level = pattern.level();
        if level == 0 {
            return Err(MixError::InvalidParameter(
                "pattern level 0 cannot be mean-zero".into(),
            ));
        }
        if level > grid.m() {
            return Err(MixError::LevelTooFine { level, m: grid.m() });
        }
        let n = grid.side();
        let shift = grid.m() - level;
        let mut signs = vec![0i8; grid.cell_count()];
        for i in 0..n {
            let k = i >> shift;
            for j in 0..n {
                let h = j >> shift;
                let plus = match pattern {
                    Pattern::LeftRightHalves | Pattern::Stripes(_) => k % 2 == 0,
                    Pattern::TopBottomHalves | Pattern::HorizontalStripes(_) => h % 2 == 1,
                    Pattern::Checkerboard(_) => (k + h) % 2 == 0,
                };
                signs[grid.index(i, j)] = if plus { 1 } else { -1 };
            }
        }
        Self::binary(grid, signs)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn mode(&self) -> FieldMode {
        match self.data {
            FieldData::Binary(_) => FieldMode::Binary,
            FieldData::Continuous(_) => FieldMode::Continuous,
        }
    }

    pub(crate) fn data(&self) -> &FieldData {
        &self.data
    }

    pub(crate) fn from_parts(grid: GridSpec, data: FieldData) -> Self {
        Self { grid, data }
    }

    pub fn signs(&self) -> Option<&[i8]> {
        match &self.data {
            FieldData::Binary(s) => Some(s),
            FieldData::Continuous(_) => None,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let idx = self.grid.index(i, j);
        match &self.data {
            FieldData::Binary(s) => s[idx] as f64,
            FieldData::Continuous(v) => v[idx],
        }
    }

    /// All cell values in storage order.
    pub fn values(&self) -> Vec<f64> {
        match &self.data {
            FieldData::Binary(s) => s.iter().map(|&v| v as f64).collect(),
            FieldData::Continuous(v) => v.clone(),
        }
    }

    /// Continuous copy of the field.
    pub fn lift(&self) -> TracerField {
        TracerField {
            grid: self.grid,
            data: FieldData::Continuous(self.values()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.data {
            FieldData::Binary(_) => 1.0,
            FieldData::Continuous(v) => v.iter().fold(0.0f64, |a, b| a.max(b.abs())),
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.data {
            FieldData::Binary(s) => {
                s.iter().map(|&v| v as i64).sum::<i64>() as f64 / s.len() as f64
            }
            FieldData::Continuous(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }

    /// L2(Q) norm of the piecewise-constant field.
    pub fn l2_norm(&self) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        match &self.data {
            FieldData::Binary(s) => (s.len() as f64 * h2).sqrt(),
            FieldData::Continuous(v) => (v.iter().map(|x| x * x).sum::<f64>() * h2).sqrt(),
        }
    }

    /// Errors unless the field has zero mean (exactly for binary fields).
    pub fn require_mean_zero(&self) -> Result<()> {
        let mean = self.mean();
        let ok = match self.data {
            FieldData::Binary(_) => mean == 0.0,
            FieldData::Continuous(_) => mean.abs() <= CONTINUOUS_TOL,
        };
        if ok {
            Ok(())
        } else {
            Err(MixError::NotMeanZero(mean))
        }
    }

    /// Splits every cell into `4^(new_m - m)` cells carrying the same value.
    pub fn refine(&self, new_m: u32) -> Result<TracerField> {
        if new_m < self.grid.m() {
            return Err(MixError::InvalidParameter(format!(
                "cannot refine from m={} to coarser m={new_m}",
                self.grid.m()
            )));
        }
        let fine = GridSpec::new(new_m)?;
        let shift = new_m - self.grid.m();
        let n = fine.side();
        let src = |idx: usize| {
            let (i, j) = (idx / n, idx % n);
            self.grid.index(i >> shift, j >> shift)
        };
        let data = match &self.data {
            FieldData::Binary(s) => FieldData::Binary(
                (0..fine.cell_count())
                    .into_par_iter()
                    .map(|idx| s[src(idx)])
                    .collect(),
            ),
            FieldData::Continuous(v) => FieldData::Continuous(
                (0..fine.cell_count())
                    .into_par_iter()
                    .map(|idx| v[src(idx)])
                    .collect(),
            ),
        };
        Ok(TracerField { grid: fine, data })
    }

    /// Values sorted ascending; equal multisets give equal vectors.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Serializes to the `mixlab-field v1` text format. Comment lines are
    /// emitted after the header, each prefixed with `# `.
    pub fn to_text(&self, comments: &[String]) -> String {
        let n = self.grid.side();
        let mode = match self.mode() {
            FieldMode::Binary => "binary",
            FieldMode::Continuous => "continuous",
        };
        let mut out = String::with_capacity(self.grid.cell_count() * 3 + 64);
        let _ = writeln!(out, "mixlab-field v1 m={} mode={mode}", self.grid.m());
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        for row in 0..n {
            let j = n - 1 - row;
            for i in 0..n {
                if i > 0 {
                    out.push(' ');
                }
                match &self.data {
                    FieldData::Binary(s) => {
                        out.push_str(if s[self.grid.index(i, j)] > 0 { "1" } else { "-1" })
                    }
                    FieldData::Continuous(v) => {
                        let _ = write!(out, "{}", v[self.grid.index(i, j)]);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `mixlab-field v1` text format. Lines starting with `#` are
    /// ignored.
    pub fn parse(text: &str) -> Result<TracerField> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(MixError::Parse {
            line: 1,
            msg: "empty field file".into(),
        })?;
        let perr = |line: usize, msg: String| MixError::Parse { line, msg };
        let mut parts = header.split_whitespace();
        if parts.next() != Some("mixlab-field") || parts.next() != Some("v1") {
            return Err(perr(hline, "expected header `mixlab-field v1 ...`".into()));
        }
        let mut m = None;
        let mut mode = None;
        for p in parts {
            if let Some(v) = p.strip_prefix("m=") {
                m = Some(
                    v.parse::<u32>()
                        .map_err(|e| perr(hline, format!("bad m: {e}")))?,
                );
            } else if let Some(v) = p.strip_prefix("mode=") {
                mode = Some(match v {
                    "binary" => FieldMode::Binary,
                    "continuous" => FieldMode::Continuous,
                    other => return Err(perr(hline, format!("unknown mode `{other}`"))),
                });
            } else {
                return Err(perr(hline, format!("unexpected header token `{p}`")));
            }
        }
        let m = m.ok_or_else(|| perr(hline, "header lacks m=".into()))?;
        let mode = mode.ok_or_else(|| perr(hline, "header lacks mode=".into()))?;
        let grid = GridSpec::new(m)?;
        let n = grid.side();
        let mut values = vec![0.0f64; grid.cell_count()];
        for row in 0..n {
            let (lno, line) = lines
                .next()
                .ok_or_else(|| perr(hline, format!("expected {n} rows, found {row}")))?;
            let j = n - 1 - row;
            let mut count = 0;
            for (i, tok) in line.split_whitespace().enumerate() {
                if i >= n {
                    return Err(perr(lno, format!("more than {n} values in row")));
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|e| perr(lno, format!("bad value `{tok}`: {e}")))?;
                values[grid.index(i, j)] = v;
                count += 1;
            }
            if count != n {
                return Err(perr(lno, format!("expected {n} values, found {count}")));
            }
        }
        if let Some((lno, _)) = lines.next() {
            return Err(perr(lno, "trailing data after the last row".into()));
        }
        match mode {
            FieldMode::Binary => {
                let mut signs = Vec::with_capacity(values.len());
                for (idx, v) in values.iter().enumerate() {
                    if *v == 1.0 {
                        signs.push(1);
                    } else if *v == -1.0 {
                        signs.push(-1);
                    } else {
                        let (i, j) = grid.coords(idx);
                        return Err(MixError::InvalidParameter(format!(
                            "binary field holds {v} at cell ({i}, {j})"
                        )));
                    }
                }
                TracerField::binary(grid, signs)
            }
            FieldMode::Continuous => TracerField::continuous(grid, values),
        }
    }

    pub fn read(path: &Path) -> Result<TracerField> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path, comments: &[String]) -> Result<()> {
        std::fs::write(path, self.to_text(comments))?;
        Ok(())
    }
}

/// The tiling of `Q` by `4^ell` open squares of side `2^-ell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tiling {
    ell: u32,
}

/// One tile of a [`Tiling`], addressed by column `k` and row `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tile {
    pub level: u32,
    pub k: usize,
    pub h: usize,
}

impl Tile {
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn center(&self) -> (f64, f64) {
        let s = self.side();
        (-0.5 + (self.k as f64 + 0.5) * s, -0.5 + (self.h as f64 + 0.5) * s)
    }

    /// The square of grid cells covered by this tile.
    pub fn region(&self, grid: GridSpec) -> Result<CellRegion> {
        if self.level > grid.m() {
            return Err(MixError::LevelTooFine {
                level: self.level,
                m: grid.m(),
            });
        }
        let size = 1usize << (grid.m() - self.level);
        Ok(CellRegion {
            i0: self.k * size,
            j0: self.h * size,
            size,
        })
    }
}

impl Tiling {
    pub fn new(ell: u32) -> Self {
        Self { ell }
    }

    pub fn level(&self) -> u32 {
        self.ell
    }

    /// Tile side `lambda = 2^-ell`.
    pub fn lambda(&self) -> f64 {
        (-(self.ell as f64)).exp2()
    }

    pub fn tiles_per_side(&self) -> usize {
        1usize << self.ell
    }

    pub fn tile_count(&self) -> usize {
        self.tiles_per_side() * self.tiles_per_side()
    }

    pub fn tile(&self, index: usize) -> Tile {
        let t = self.tiles_per_side();
        Tile {
            level: self.ell,
            k: index / t,
            h: index % t,
        }
    }

    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        (0..self.tile_count()).map(move |i| self.tile(i))
    }

    pub fn compatible_with(&self, grid: GridSpec) -> bool {
        self.ell <= grid.m()
    }
}

/// A grid-aligned square block of cells `[i0, i0+size) x [j0, j0+size)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRegion {
    pub i0: usize,
    pub j0: usize,
    pub size: usize,
}

impl CellRegion {
    pub fn whole(grid: GridSpec) -> Self {
        Self {
            i0: 0,
            j0: 0,
            size: grid.side(),
        }
    }
}

/// Per-tile integrals of a field at one tiling level.
#[derive(Clone, Debug, PartialEq)]
pub enum TileSums {
    /// Integer sums of signs (binary fields).
    Exact { level: u32, cells_per_tile: u64, sums: Vec<i64> },
    Float { level: u32, cells_per_tile: u64, sums: Vec<f64> },
}

impl TileSums {
    pub fn level(&self) -> u32 {
        match self {
            TileSums::Exact { level, .. } | TileSums::Float { level, .. } => *level,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TileSums::Exact { sums, .. } => sums.len(),
            TileSums::Float { sums, .. } => sums.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn average(&self, tile_index: usize) -> f64 {
        match self {
            TileSums::Exact {
                cells_per_tile,
                sums,
                ..
            } => sums[tile_index] as f64 / *cells_per_tile as f64,
            TileSums::Float {
                cells_per_tile,
                sums,
                ..
            } => sums[tile_index] / *cells_per_tile as f64,
        }
    }

    pub fn averages(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.average(t)).collect()
    }

    /// True iff every tile integral vanishes (exactly for binary fields).
    pub fn all_zero(&self) -> bool {
        match self {
            TileSums::Exact { sums, .. } => sums.iter().all(|&s| s == 0),
            TileSums::Float { .. } => self.averages().iter().all(|a| a.abs() <= CONTINUOUS_TOL),
        }
    }
}

fn check_level(grid: GridSpec, level: u32) -> Result<()> {
    if level > grid.m() {
        Err(MixError::LevelTooFine { level, m: grid.m() })
    } else {
        Ok(())
    }
}

/// Integrals of `field` over every tile of `T_{2^-level}`.
pub fn tile_sums(field: &TracerField, level: u32) -> Result<TileSums> {
    let grid = field.grid();
    check_level(grid, level)?;
    let shift = grid.m() - level;
    let t = 1usize << level;
    let n = grid.side();
    let cells_per_tile = 1u64 << (2 * shift);
    // Each tile column is an independent strip of grid columns.
    Ok(match field.data() {
        FieldData::Binary(s) => {
            let cols: Vec<Vec<i64>> = (0..t)
                .into_par_iter()
                .map(|k| {
                    let mut acc = vec![0i64; t];
                    for i in (k << shift)..((k + 1) << shift) {
                        for j in 0..n {
                            acc[j >> shift] += s[grid.index(i, j)] as i64;
                        }
                    }
                    acc
                })
                .collect();
            TileSums::Exact {
                level,
                cells_per_tile,
                sums: cols.concat(),
            }
        }
        FieldData::Continuous(v) => {
            let cols: Vec<Vec<f64>> = (0..t)
                .into_par_iter()
                .map(|k| {
                    let mut acc = vec![0.0f64; t];
                    for i in (k << shift)..((k + 1) << shift) {
                        for j in 0..n {
                            acc[j >> shift] += v[grid.index(i, j)];
                        }
                    }
                    acc
                })
                .collect();
            TileSums::Float {
                level,
                cells_per_tile,
                sums: cols.concat(),
            }
        }
    })
}

/// Mean of the field over one tile.
pub fn tile_average(field: &TracerField, tiling: Tiling, tile_index: usize) -> Result<f64> {
    if !tiling.compatible_with(field.grid()) {
        return Err(MixError::LevelTooFine {
            level: tiling.level(),
            m: field.grid().m(),
        });
    }
    if tile_index >= tiling.tile_count() {
        return Err(MixError::InvalidParameter(format!(
            "tile index {tile_index} out of range for {} tiles",
            tiling.tile_count()
        )));
    }
    Ok(tile_sums(field, tiling.level())?.average(tile_index))
}

/// Whether the field has zero average on every tile of `T_{2^-level}`.
pub fn is_mixed_at_scale(field: &TracerField, level: u32) -> Result<bool> {
    Ok(tile_sums(field, level)?.all_zero())
}

/// The finest level at which the field is mixed, or `None` if its mean is not
/// zero. Mixedness at level `k` implies mixedness at all coarser levels.
pub fn mixed_level(field: &TracerField) -> Option<u32> {
    let mut best = None;
    for level in 0..=field.grid().m() {
        match is_mixed_at_scale(field, level) {
            Ok(true) => best = Some(level),
            _ => break,
        }
    }
    best
}

/// A subset of grid cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    grid: GridSpec,
    member: Vec<bool>,
}

impl CellSet {
    pub fn new(grid: GridSpec, member: Vec<bool>) -> Result<Self> {
        if member.len() != grid.cell_count() {
            return Err(MixError::InvalidParameter(format!(
                "expected {} indicator values, got {}",
                grid.cell_count(),
                member.len()
            )));
        }
        Ok(Self { grid, member })
    }

    /// Cells whose center satisfies the predicate.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> bool) -> Self {
        let n = grid.side();
        let member = (0..grid.cell_count())
            .map(|idx| {
                let (x, y) = grid.center(idx / n, idx % n);
                f(x, y)
            })
            .collect();
        Self { grid, member }
    }

    /// Cells where a binary field takes the given sign.
    pub fn from_sign(field: &TracerField, sign: i8) -> Result<Self> {
        let s = field.signs().ok_or(MixError::NotBinary)?;
        Ok(Self {
            grid: field.grid(),
            member: s.iter().map(|&v| v == sign).collect(),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.member[self.grid.index(i, j)]
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> CellSet {
        CellSet {
            grid: self.grid,
            member: self.member.iter().map(|b| !b).collect(),
        }
    }
}
