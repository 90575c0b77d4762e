//! Time-frequency map over the 26 leaves: row orderings, the ordering side
//! info, and the parent/descendant relation used by the zero-tree coders.
//!
//! Row `r` holds `L_r` coefficients; coefficient `(r, j)` occupies the time
//! span `[j/L_r, (j+1)/L_r)` of the frame. A coefficient is a descendant of
//! another when its row sits lower, its row is strictly longer, and its time
//! span nests inside the parent's.

use crate::bitstream::{BitReader, BitWriter};
use crate::error::{CodecError, Result};
use crate::subband::{CoefficientMap, SubbandLayout};

/// Row arrangement of a map: `order[r]` is the 1-based leaf id placed at row
/// position `r` (top to bottom), `lengths[r]` its coefficient count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfShape {
    pub order: Vec<usize>,
    pub lengths: Vec<usize>,
}

impl TfShape {
    pub fn new(order: Vec<usize>, lengths: Vec<usize>) -> Self {
        debug_assert_eq!(order.len(), lengths.len());
        Self { order, lengths }
    }

    pub fn from_layout(layout: &SubbandLayout, order: Vec<usize>) -> Self {
        let lengths = order.iter().map(|&leaf| layout.leaves[leaf - 1].coeff_count).collect();
        Self { order, lengths }
    }

    pub fn rows(&self) -> usize {
        self.order.len()
    }
}

/// An integer coefficient map arranged by a row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfMap {
    pub shape: TfShape,
    pub rows: Vec<Vec<i32>>,
}

impl TfMap {
    pub fn from_map(map: &CoefficientMap<i32>, shape: TfShape) -> Self {
        let rows = shape.order.iter().map(|&leaf| map.rows[leaf - 1].clone()).collect();
        Self { shape, rows }
    }

    /// Place rows back into leaf order.
    pub fn to_map(&self) -> CoefficientMap<i32> {
        let mut rows = vec![Vec::new(); self.rows.len()];
        for (r, &leaf) in self.shape.order.iter().enumerate() {
            rows[leaf - 1] = self.rows[r].clone();
        }
        CoefficientMap { rows }
    }

    pub fn len(&self, r: usize) -> usize {
        self.shape.lengths[r]
    }

    pub fn value(&self, r: usize, j: usize) -> i32 {
        self.rows[r][j]
    }

    pub fn max_abs(&self) -> u32 {
        self.rows
            .iter()
            .flatten()
            .map(|&v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Debug dump: row position, leaf id, length, average magnitude.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,leaf,length,avg_magnitude\n");
        for (r, row) in self.rows.iter().enumerate() {
            let avg = row.iter().map(|v| v.unsigned_abs() as f64).sum::<f64>() / row.len() as f64;
            out.push_str(&format!("{},{},{},{}\n", r + 1, self.shape.order[r], row.len(), avg));
        }
        out
    }
}

/// True when `(rc, jc)` is a descendant of `(rp, jp)` in the current row
/// order: lower row, strictly longer row, nested time span.
pub fn is_descendant(
    shape: &TfShape,
    parent: (usize, usize),
    cand: (usize, usize),
) -> Result<bool> {
    let (rp, jp) = parent;
    let (rc, jc) = cand;
    for &(r, j) in &[parent, cand] {
        if r >= shape.rows() || j >= shape.lengths[r] {
            return Err(CodecError::data(format!("coordinate ({r},{j}) out of range")));
        }
    }
    let (lp, lc) = (shape.lengths[rp], shape.lengths[rc]);
    Ok(rc > rp && lc > lp && jc * lp >= jp * lc && (jc + 1) * lp <= (jp + 1) * lc)
}

/// Indices in a length-`child_len` row whose spans nest inside coefficient
/// `j` of a length-`parent_len` row. Lengths must divide evenly.
pub fn desc_range(parent_len: usize, j: usize, child_len: usize) -> std::ops::Range<usize> {
    debug_assert!(child_len >= parent_len && child_len % parent_len == 0);
    let ratio = child_len / parent_len;
    j * ratio..(j + 1) * ratio
}

/// Rows sorted by descending average coefficient magnitude; ties and
/// all-zero rows fall back to ascending leaf id, zero rows after all
/// nonzero rows. Returns 1-based leaf ids.
pub fn magnitude_order(map: &CoefficientMap<i32>) -> Vec<usize> {
    let n = map.rows.len();
    let avg: Vec<f64> = map
        .rows
        .iter()
        .map(|row| row.iter().map(|v| v.unsigned_abs() as f64).sum::<f64>() / row.len() as f64)
        .collect();
    let mut ids: Vec<usize> = (1..=n).collect();
    ids.sort_by(|&a, &b| {
        avg[b - 1]
            .partial_cmp(&avg[a - 1])
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    ids
}

/// The leaf ids with nonzero average magnitude, in transmitted order.
pub fn ordering_side_info(map: &CoefficientMap<i32>) -> Vec<usize> {
    magnitude_order(map)
        .into_iter()
        .filter(|&leaf| map.rows[leaf - 1].iter().any(|&v| v != 0))
        .collect()
}

/// Rebuild the full row order from the transmitted prefix: listed rows
/// first, remaining rows in ascending leaf id.
pub fn order_from_side_info(listed: &[usize], total_rows: usize) -> Vec<usize> {
    let mut seen = vec![false; total_rows + 1];
    let mut order = Vec::with_capacity(total_rows);
    for &leaf in listed {
        seen[leaf] = true;
        order.push(leaf);
    }
    for leaf in 1..=total_rows {
        if !seen[leaf] {
            order.push(leaf);
        }
    }
    order
}

/// Baseline arrangement: stable sort by ascending row length.
pub fn length_order(layout: &SubbandLayout) -> Vec<usize> {
    let mut ids: Vec<usize> = (1..=layout.leaves.len()).collect();
    ids.sort_by_key(|&leaf| layout.leaves[leaf - 1].coeff_count);
    ids
}

/// Promote the first shortest row to the top; rows above it shift down one.
pub fn avdz_relocate(shape: &TfShape) -> TfShape {
    let min_len = *shape.lengths.iter().min().expect("nonempty shape");
    let pos = shape.lengths.iter().position(|&l| l == min_len).unwrap();
    let mut order = shape.order.clone();
    let mut lengths = shape.lengths.clone();
    let leaf = order.remove(pos);
    let len = lengths.remove(pos);
    order.insert(0, leaf);
    lengths.insert(0, len);
    TfShape { order, lengths }
}

/// Write the ordering sequence as 5-bit leaf ids plus a 5-bit terminator.
pub fn encode_ordering(listed: &[usize], w: &mut BitWriter) -> Result<()> {
    for &leaf in listed {
        if leaf == 0 || leaf > 31 {
            return Err(CodecError::data(format!("leaf id {leaf} not codable in 5 bits")));
        }
        w.put_bits(leaf as u32, 5)?;
    }
    w.put_bits(0, 5)
}

/// Read ordering ids until the zero terminator; ids must be distinct.
pub fn decode_ordering(r: &mut BitReader) -> Result<Vec<usize>> {
    let mut listed = Vec::new();
    let mut seen = [false; 32];
    loop {
        let id = r.get_bits(5)? as usize;
        if id == 0 {
            return Ok(listed);
        }
        if seen[id] {
            return Err(CodecError::data(format!("duplicate leaf id {id} in ordering")));
        }
        seen[id] = true;
        listed.push(id);
    }
}
