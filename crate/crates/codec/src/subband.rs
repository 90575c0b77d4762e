//! The fixed wavelet-packet decomposition: 512-sample frames onto 19
//! critical bands realized as 26 dyadic tree leaves, and its inverse.
//!
//! Repeated high/low splits scramble frequency order (the high branch of a
//! split is spectrally inverted after downsampling), so the tree descent
//! tracks an inversion flag per node and assigns child intervals
//! accordingly. Leaves come out in ascending frequency order.

use crate::error::{CodecError, Result};
use crate::kernel::{merge, split, FilterQuadruple};

pub use crate::bitstream::FRAME_SIZE;

/// Full analysis bandwidth in Hz (half the 16 kHz sample rate).
pub const FULL_BAND_HZ: u32 = 8_000;
pub const LEAF_COUNT: usize = 26;
pub const BAND_COUNT: usize = 19;

/// One terminal node of the decomposition tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leaf {
    /// 1-based index in ascending frequency order.
    pub index: usize,
    pub low_hz: u32,
    pub high_hz: u32,
    pub depth: usize,
    pub coeff_count: usize,
    /// 1-based critical band this leaf belongs to.
    pub band: usize,
}

/// One critical band; bands 14-19 aggregate several leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Band {
    pub index: usize,
    pub low_hz: u32,
    pub high_hz: u32,
    /// 1-based member leaf indices.
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandLayout {
    pub leaves: Vec<Leaf>,
    pub bands: Vec<Band>,
}

// (low_hz, high_hz, band) per leaf, ascending in frequency.
const LEAF_TABLE: [(u32, u32, usize); LEAF_COUNT] = [
    (0, 125, 1),
    (125, 250, 2),
    (250, 375, 3),
    (375, 500, 4),
    (500, 625, 5),
    (625, 750, 6),
    (750, 875, 7),
    (875, 1000, 8),
    (1000, 1250, 9),
    (1250, 1500, 10),
    (1500, 1750, 11),
    (1750, 2000, 12),
    (2000, 2250, 13),
    (2250, 2500, 14),
    (2500, 2750, 14),
    (2750, 3000, 15),
    (3000, 3125, 15),
    (3125, 3250, 16),
    (3250, 3500, 16),
    (3500, 3750, 16),
    (3750, 4000, 17),
    (4000, 5000, 17),
    (5000, 6000, 18),
    (6000, 6500, 18),
    (6500, 7000, 19),
    (7000, 8000, 19),
];

/// Build the fixed layout.
pub fn make_layout() -> SubbandLayout {
    let leaves: Vec<Leaf> = LEAF_TABLE
        .iter()
        .enumerate()
        .map(|(i, &(low_hz, high_hz, band))| {
            let width = high_hz - low_hz;
            let depth = (FULL_BAND_HZ / width).trailing_zeros() as usize;
            Leaf {
                index: i + 1,
                low_hz,
                high_hz,
                depth,
                coeff_count: FRAME_SIZE >> depth,
                band,
            }
        })
        .collect();
    let mut bands = Vec::with_capacity(BAND_COUNT);
    for b in 1..=BAND_COUNT {
        let members: Vec<usize> =
            leaves.iter().filter(|l| l.band == b).map(|l| l.index).collect();
        let low_hz = leaves[members[0] - 1].low_hz;
        let high_hz = leaves[members[members.len() - 1] - 1].high_hz;
        bands.push(Band { index: b, low_hz, high_hz, leaves: members });
    }
    SubbandLayout { leaves, bands }
}

impl SubbandLayout {
    /// Leaf lengths in ascending frequency order.
    pub fn leaf_lengths(&self) -> Vec<usize> {
        self.leaves.iter().map(|l| l.coeff_count).collect()
    }

    /// CSV dump: leaf_index,low_hz,high_hz,depth,count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("leaf_index,low_hz,high_hz,depth,count\n");
        for l in &self.leaves {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                l.index, l.low_hz, l.high_hz, l.depth, l.coeff_count
            ));
        }
        out
    }
}

/// Per-frame coefficients indexed by leaf (ascending frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMap<T> {
    /// rows[i] holds leaf i+1's coefficients.
    pub rows: Vec<Vec<T>>,
}

impl<T: Clone + Default> CoefficientMap<T> {
    pub fn zeros(layout: &SubbandLayout) -> Self {
        Self {
            rows: layout.leaves.iter().map(|l| vec![T::default(); l.coeff_count]).collect(),
        }
    }
}

impl<T> CoefficientMap<T> {
    pub fn total_len(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn matches(&self, layout: &SubbandLayout) -> bool {
        self.rows.len() == LEAF_COUNT
            && self
                .rows
                .iter()
                .zip(&layout.leaves)
                .all(|(row, leaf)| row.len() == leaf.coeff_count)
    }
}

fn leaf_for_interval(layout: &SubbandLayout, low: u32, high: u32) -> Option<usize> {
    layout
        .leaves
        .iter()
        .position(|l| l.low_hz == low && l.high_hz == high)
}

fn analyze_node(
    signal: Vec<f64>,
    low: u32,
    high: u32,
    inverted: bool,
    layout: &SubbandLayout,
    quad: &FilterQuadruple,
    out: &mut Vec<Vec<f64>>,
) -> Result<()> {
    if let Some(idx) = leaf_for_interval(layout, low, high) {
        out[idx] = signal;
        return Ok(());
    }
    let mid = (low + high) / 2;
    let (lo_sig, hi_sig) = split(&signal, quad)?;
    if inverted {
        analyze_node(lo_sig, mid, high, true, layout, quad, out)?;
        analyze_node(hi_sig, low, mid, false, layout, quad, out)?;
    } else {
        analyze_node(lo_sig, low, mid, false, layout, quad, out)?;
        analyze_node(hi_sig, mid, high, true, layout, quad, out)?;
    }
    Ok(())
}

fn synthesize_node(
    low: u32,
    high: u32,
    inverted: bool,
    layout: &SubbandLayout,
    quad: &FilterQuadruple,
    map: &CoefficientMap<f64>,
) -> Result<Vec<f64>> {
    if let Some(idx) = leaf_for_interval(layout, low, high) {
        return Ok(map.rows[idx].clone());
    }
    let mid = (low + high) / 2;
    let (lo_sig, hi_sig) = if inverted {
        (
            synthesize_node(mid, high, true, layout, quad, map)?,
            synthesize_node(low, mid, false, layout, quad, map)?,
        )
    } else {
        (
            synthesize_node(low, mid, false, layout, quad, map)?,
            synthesize_node(mid, high, true, layout, quad, map)?,
        )
    };
    merge(&lo_sig, &hi_sig, quad)
}

/// Decompose a 512-sample frame onto the 26 leaves.
pub fn analyze(
    frame: &[f64],
    layout: &SubbandLayout,
    quad: &FilterQuadruple,
) -> Result<CoefficientMap<f64>> {
    if frame.len() != FRAME_SIZE {
        return Err(CodecError::data(format!(
            "frame length {} (expected {FRAME_SIZE})",
            frame.len()
        )));
    }
    let mut rows = vec![Vec::new(); LEAF_COUNT];
    analyze_node(frame.to_vec(), 0, FULL_BAND_HZ, false, layout, quad, &mut rows)?;
    Ok(CoefficientMap { rows })
}

/// Inverse decomposition.
pub fn synthesize(
    map: &CoefficientMap<f64>,
    layout: &SubbandLayout,
    quad: &FilterQuadruple,
) -> Result<Vec<f64>> {
    if !map.matches(layout) {
        return Err(CodecError::data("coefficient map does not match layout".to_string()));
    }
    synthesize_node(0, FULL_BAND_HZ, false, layout, quad, map)
}
