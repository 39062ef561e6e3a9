//! Radius ladder and rasterized disks.
//!
//! Disks are centered on grid nodes. Node `(a, b)` sits at the lower-left
//! corner of cell `(a, b)`, so nodes run from `0` to `2^m` on each axis (and
//! beyond, for centers outside `Q`). A cell belongs to the disk of radius
//! `r` iff its center lies strictly inside the disk. For the cell at offset
//! `(di, dj)` from the node this reads
//! `(2 di + 1)^2 + (2 dj + 1)^2 < 4 (r / h)^2`.

/// Ladder radius in units of the cell side: `2^(index / 4)`.
pub fn radius_cells(index: u32) -> f64 {
    (index as f64 / 4.0).exp2()
}

/// Ladder radius `h 2^(index / 4)` on a grid with exponent `m`.
pub fn radius(m: u32, index: u32) -> f64 {
    (index as f64 / 4.0 - m as f64).exp2()
}

/// Index of the top of the geometric ladder, whose radius is `sqrt 2`.
pub fn top_index(m: u32) -> u32 {
    4 * m + 2
}

/// Disk membership threshold `4 (r/h)^2` for a ladder index.
pub fn threshold(index: u32) -> f64 {
    4.0 * (index as f64 / 2.0).exp2()
}

/// Whether the cell at offset `(di, dj)` from a node lies in the disk.
#[inline]
pub fn contains(threshold: f64, di: i64, dj: i64) -> bool {
    let u = 2 * di + 1;
    let v = 2 * dj + 1;
    ((u * u + v * v) as f64) < threshold
}

/// Row decomposition of a rasterized disk.
#[derive(Clone, Debug)]
pub struct Disk {
    pub index: u32,
    /// `(dj, k)`: cells `di in [-k-1, k]` of row offset `dj` are inside.
    pub rows: Vec<(i64, i64)>,
    /// Number of lattice cells inside (cells outside `Q` included).
    pub count: i64,
    /// The disk fits in offsets `[-reach, reach)` on both axes.
    pub reach: i64,
}

impl Disk {
    pub fn new(index: u32) -> Self {
        let t = threshold(index);
        let reach = radius_cells(index).ceil() as i64;
        let mut rows = Vec::new();
        let mut count = 0;
        for dj in -reach..reach {
            // largest k with the cell at di = k inside
            let mut k: i64 = -1;
            while contains(t, k + 1, dj) {
                k += 1;
            }
            if k >= 0 {
                rows.push((dj, k));
                count += 2 * (k + 1);
            }
        }
        Self {
            index,
            rows,
            count,
            reach,
        }
    }

    /// Widest half-width, i.e. the disk lies in `[-k-1, k]^2`.
    pub fn half_width(&self) -> i64 {
        self.rows.iter().map(|r| r.1).max().unwrap_or(-1)
    }
}
