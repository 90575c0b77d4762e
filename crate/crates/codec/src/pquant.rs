//! Heuristic perceptual bit allocation and uniform scalar quantization.
//!
//! Per critical band, an importance factor `mean_energy^alpha` drives a 6/7
//! bit base split (including the sign bit). The five wide bands then give up
//! bits the ear does not miss, and frame-level energy rules trade one bit in
//! quiet or loud narrow bands. The realized case per band travels as 1-bit
//! (wide) or 2-bit (narrow) side codes.

use crate::bitstream::{BitReader, BitWriter};
use crate::error::{CodecError, Result};
use crate::subband::{CoefficientMap, SubbandLayout, BAND_COUNT};

/// Energy thresholds and the importance exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PquantParams {
    pub alpha: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl Default for PquantParams {
    fn default() -> Self {
        Self { alpha: 0.04, e1: 0.01, e2: 0.004, e3: 0.02, e4: 0.04 }
    }
}

/// Wide bands and how many bits each gives back, 1-based band index.
const WIDE_REDUCTION: [(usize, u8); 5] = [(1, 2), (2, 1), (17, 1), (18, 3), (19, 2)];
const NARROW: std::ops::RangeInclusive<usize> = 3..=16;

fn wide_reduction(band: usize) -> Option<u8> {
    WIDE_REDUCTION.iter().find(|(b, _)| *b == band).map(|&(_, r)| r)
}

/// Per-band bit counts, sign bit included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitAllocation {
    /// bits[b-1] for band b in 1..=19.
    pub bits: [u8; BAND_COUNT],
}

impl BitAllocation {
    pub fn bits_for_band(&self, band: usize) -> u8 {
        self.bits[band - 1]
    }

    /// Degenerate allocation: every band at base 7 before wide reductions.
    pub fn base_pattern() -> Self {
        let mut bits = [7u8; BAND_COUNT];
        for (band, red) in WIDE_REDUCTION {
            bits[band - 1] = 7 - red;
        }
        Self { bits }
    }

    /// All bands at 7 bits; not representable as side info and only reachable
    /// through the uniform-quantizer benchmark mode.
    pub fn uniform7() -> Self {
        Self { bits: [7u8; BAND_COUNT] }
    }

    pub fn is_valid(&self) -> bool {
        self.bits.iter().enumerate().all(|(i, &b)| {
            let band = i + 1;
            match wide_reduction(band) {
                Some(red) => b == 6 - red || b == 7 - red,
                None => (5..=8).contains(&b),
            }
        })
    }

    /// 33 bits of side info: 1 bit per wide band, 2 per narrow band, in band
    /// index order. Wide: 0 from base 6, 1 from base 7. Narrow: 00=6, 01=7,
    /// 10=5, 11=8.
    pub fn encode(&self, w: &mut BitWriter) -> Result<()> {
        for band in 1..=BAND_COUNT {
            let b = self.bits[band - 1];
            match wide_reduction(band) {
                Some(red) => {
                    let code = if b == 7 - red {
                        1
                    } else if b == 6 - red {
                        0
                    } else {
                        return Err(CodecError::data(format!(
                            "band {band} has {b} bits, outside its allowed pair"
                        )));
                    };
                    w.put_bits(code, 1)?;
                }
                None => {
                    let code = match b {
                        6 => 0,
                        7 => 1,
                        5 => 2,
                        8 => 3,
                        _ => {
                            return Err(CodecError::data(format!(
                                "narrow band {band} has {b} bits, outside 5..=8"
                            )))
                        }
                    };
                    w.put_bits(code, 2)?;
                }
            }
        }
        Ok(())
    }

    pub fn decode(r: &mut BitReader) -> Result<Self> {
        let mut bits = [0u8; BAND_COUNT];
        for band in 1..=BAND_COUNT {
            bits[band - 1] = match wide_reduction(band) {
                Some(red) => {
                    let base = if r.get_bits(1)? == 1 { 7 } else { 6 };
                    base - red
                }
                None => match r.get_bits(2)? {
                    0 => 6,
                    1 => 7,
                    2 => 5,
                    _ => 8,
                },
            };
        }
        Ok(Self { bits })
    }
}

/// Mean squared magnitude of a band's coefficients.
fn mean_energy(chunks: &[&[f64]]) -> f64 {
    let count: usize = chunks.iter().map(|c| c.len()).sum();
    if count == 0 {
        return 0.0;
    }
    let sum: f64 = chunks.iter().flat_map(|c| c.iter()).map(|v| v * v).sum();
    sum / count as f64
}

/// Importance factor of one band: mean energy raised to `alpha`.
pub fn i_factor(coeffs: &[f64], alpha: f64) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(CodecError::data("empty band in i_factor".to_string()));
    }
    if alpha <= 0.0 {
        return Err(CodecError::config(format!("alpha must be positive, got {alpha}")));
    }
    Ok(mean_energy(&[coeffs]).powf(alpha))
}

fn band_chunks<'a>(
    map: &'a CoefficientMap<f64>,
    layout: &SubbandLayout,
    band: usize,
) -> Vec<&'a [f64]> {
    layout.bands[band - 1]
        .leaves
        .iter()
        .map(|&leaf| map.rows[leaf - 1].as_slice())
        .collect()
}

/// Run the full allocation rule on one frame.
pub fn allocate_bits(
    map: &CoefficientMap<f64>,
    layout: &SubbandLayout,
    params: &PquantParams,
) -> Result<BitAllocation> {
    if !map.matches(layout) {
        return Err(CodecError::data("coefficient map does not match layout".to_string()));
    }
    let energies: Vec<f64> = (1..=BAND_COUNT)
        .map(|b| mean_energy(&band_chunks(map, layout, b)))
        .collect();
    if energies.iter().all(|&e| e == 0.0) {
        return Ok(BitAllocation::base_pattern());
    }

    let factors: Vec<f64> = energies.iter().map(|e| e.powf(params.alpha)).collect();
    let fmax = factors.iter().cloned().fold(f64::MIN, f64::max);
    let fmin = factors.iter().cloned().fold(f64::MAX, f64::min);
    let midpoint = (fmax + fmin) / 2.0;
    let mut bits = [0u8; BAND_COUNT];
    for b in 1..=BAND_COUNT {
        // degenerate max == min assigns 7 everywhere
        bits[b - 1] = if fmax == fmin || factors[b - 1] >= midpoint { 7 } else { 6 };
    }
    for (band, red) in WIDE_REDUCTION {
        bits[band - 1] -= red;
    }

    // energy over all coefficients of the narrow region, bands 3..=16
    let narrow_chunks: Vec<&[f64]> = NARROW
        .flat_map(|b| band_chunks(map, layout, b))
        .collect();
    let narrow_mean = mean_energy(&narrow_chunks);
    if narrow_mean < params.e1 {
        for b in NARROW {
            if energies[b - 1] < params.e2 {
                bits[b - 1] += 1;
            }
        }
    } else if narrow_mean > params.e3 {
        for b in NARROW {
            if energies[b - 1] > params.e4 {
                bits[b - 1] -= 1;
            }
        }
    }
    let alloc = BitAllocation { bits };
    debug_assert!(alloc.is_valid());
    Ok(alloc)
}

/// Symmetric mid-tread quantizer with saturation: `b` bits including sign map
/// [-1, 1] to [-(2^(b-1)-1), 2^(b-1)-1]. Returns the map and how many
/// coefficients clipped.
pub fn quantize(
    map: &CoefficientMap<f64>,
    layout: &SubbandLayout,
    alloc: &BitAllocation,
) -> (CoefficientMap<i32>, usize) {
    let mut clipped = 0usize;
    let rows = map
        .rows
        .iter()
        .zip(&layout.leaves)
        .map(|(row, leaf)| {
            let b = alloc.bits_for_band(leaf.band);
            debug_assert!(b >= 2);
            let scale = (1i64 << (b - 1)) as f64;
            let limit = (1i32 << (b - 1)) - 1;
            row.iter()
                .map(|&c| {
                    // round half away from zero
                    let q = (c * scale).round();
                    if q > limit as f64 || q < -limit as f64 {
                        clipped += 1;
                    }
                    (q as i64).clamp(-(limit as i64), limit as i64) as i32
                })
                .collect()
        })
        .collect();
    (CoefficientMap { rows }, clipped)
}

pub fn dequantize(
    map: &CoefficientMap<i32>,
    layout: &SubbandLayout,
    alloc: &BitAllocation,
) -> CoefficientMap<f64> {
    let rows = map
        .rows
        .iter()
        .zip(&layout.leaves)
        .map(|(row, leaf)| {
            let b = alloc.bits_for_band(leaf.band);
            let scale = (1i64 << (b - 1)) as f64;
            row.iter().map(|&q| q as f64 / scale).collect()
        })
        .collect();
    CoefficientMap { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subband::make_layout;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fill_band(map: &mut CoefficientMap<f64>, layout: &SubbandLayout, band: usize, value: f64) {
        for &leaf in &layout.bands[band - 1].leaves {
            for v in &mut map.rows[leaf - 1] {
                *v = value;
            }
        }
    }

    #[test]
    fn i_factor_edges() {
        assert_eq!(i_factor(&[0.0, 0.0], 0.04).unwrap(), 0.0);
        assert!((i_factor(&[1.0, -1.0], 0.3).unwrap() - 1.0).abs() < 1e-15);
        // mean energy 0.25
        let v = i_factor(&[0.5, -0.5], 0.04).unwrap();
        assert!((v - 0.9460576467255959).abs() < 1e-12, "got {v}");
        assert!(i_factor(&[], 0.04).is_err());
        assert!(i_factor(&[1.0], 0.0).is_err());
    }

    #[test]
    fn equal_energy_gives_base_pattern() {
        let layout = make_layout();
        let mut map = CoefficientMap::<f64>::zeros(&layout);
        for b in 1..=19 {
            fill_band(&mut map, &layout, b, 0.3);
        }
        let alloc = allocate_bits(&map, &layout, &PquantParams::default()).unwrap();
        let mut expect = [7u8; 19];
        expect[0] = 5;
        expect[1] = 6;
        expect[16] = 6;
        expect[17] = 4;
        expect[18] = 5;
        assert_eq!(alloc.bits, expect);
    }

    #[test]
    fn all_zero_frame_gets_base_pattern() {
        let layout = make_layout();
        let map = CoefficientMap::<f64>::zeros(&layout);
        let alloc = allocate_bits(&map, &layout, &PquantParams::default()).unwrap();
        assert_eq!(alloc, BitAllocation::base_pattern());
    }

    #[test]
    fn quiet_narrow_region_adds_a_bit() {
        let layout = make_layout();
        let mut map = CoefficientMap::<f64>::zeros(&layout);
        // narrow region mean 0.005 < e1; band 5 mean 0.001 < e2, others 0.00531
        for b in 3..=16 {
            let e = if b == 5 { 0.001f64 } else { 0.005307f64 };
            fill_band(&mut map, &layout, b, e.sqrt());
        }
        let alloc = allocate_bits(&map, &layout, &PquantParams::default()).unwrap();
        // band 5 had the smallest factor (base 6), then +1
        assert_eq!(alloc.bits_for_band(5), 7);
        let narrow: Vec<&[f64]> = (3..=16)
            .flat_map(|b| {
                layout.bands[b - 1]
                    .leaves
                    .iter()
                    .map(|&l| map.rows[l - 1].as_slice())
                    .collect::<Vec<_>>()
            })
            .collect();
        assert!(mean_energy(&narrow) < 0.01);
    }

    #[test]
    fn loud_narrow_region_drops_a_bit() {
        let layout = make_layout();
        let mut map = CoefficientMap::<f64>::zeros(&layout);
        // narrow region mean > e3 = 0.02; band 10 energy 0.05 > e4
        for b in 3..=16 {
            let e = if b == 10 { 0.05f64 } else { 0.028f64 };
            fill_band(&mut map, &layout, b, e.sqrt());
        }
        let alloc = allocate_bits(&map, &layout, &PquantParams::default()).unwrap();
        // band 10 carried the max factor (base 7), then -1
        assert_eq!(alloc.bits_for_band(10), 6);
    }

    #[test]
    fn allocation_ranges_hold_on_random_frames() {
        let layout = make_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let mut map = CoefficientMap::<f64>::zeros(&layout);
            for row in &mut map.rows {
                if rng.gen_bool(0.7) {
                    let amp: f64 = rng.gen_range(0.0..0.5);
                    for v in row.iter_mut() {
                        *v = rng.gen_range(-amp..=amp);
                    }
                }
            }
            let alloc = allocate_bits(&map, &layout, &PquantParams::default()).unwrap();
            assert!(alloc.is_valid(), "invalid allocation {:?}", alloc.bits);
        }
    }

    #[test]
    fn quantize_examples() {
        let layout = make_layout();
        let mut map = CoefficientMap::<f64>::zeros(&layout);
        map.rows[0][0] = 0.5;
        let alloc = BitAllocation::uniform7();
        let (q, clipped) = quantize(&map, &layout, &alloc);
        assert_eq!(q.rows[0][0], 32);
        assert_eq!(clipped, 0);
        let d = dequantize(&q, &layout, &alloc);
        assert_eq!(d.rows[0][0], 0.5);
        assert_eq!(d.rows[0][1], 0.0);
    }

    #[test]
    fn quantizer_clips_and_counts() {
        let layout = make_layout();
        let mut map = CoefficientMap::<f64>::zeros(&layout);
        map.rows[0][0] = 2.5;
        map.rows[0][1] = -3.0;
        let alloc = BitAllocation::base_pattern();
        let (q, clipped) = quantize(&map, &layout, &alloc);
        let limit = (1 << (alloc.bits_for_band(1) - 1)) - 1;
        assert_eq!(q.rows[0][0], limit);
        assert_eq!(q.rows[0][1], -limit);
        assert_eq!(clipped, 2);
    }

    #[test]
    fn more_bits_never_hurt() {
        let layout = make_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut map = CoefficientMap::<f64>::zeros(&layout);
        for row in &mut map.rows {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let mut prev_err = f64::INFINITY;
        for bits in 3..=8u8 {
            let alloc = BitAllocation { bits: [bits; 19] };
            let (q, _) = quantize(&map, &layout, &alloc);
            let d = dequantize(&q, &layout, &alloc);
            let err: f64 = map
                .rows
                .iter()
                .flatten()
                .zip(d.rows.iter().flatten())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(err <= prev_err + 1e-15, "{bits} bits err {err} > {prev_err}");
            prev_err = err;
        }
    }

    #[test]
    fn side_info_is_33_bits_and_base_is_not_all_zero_narrow() {
        let mut w = BitWriter::new();
        BitAllocation::base_pattern().encode(&mut w).unwrap();
        assert_eq!(w.len_bits(), 33);
    }

    #[test]
    fn narrow_code_table() {
        // one narrow band coded "01" decodes to 7 bits
        let mut alloc = BitAllocation::base_pattern();
        alloc.bits[2] = 7;
        let mut w = BitWriter::new();
        alloc.encode(&mut w).unwrap();
        let bits = w.len_bits();
        let bytes = w.into_bytes();
        let mut r = BitReader::with_bit_len(&bytes, bits);
        // wide bands 1,2 take the first two bits
        r.get_bits(2).unwrap();
        assert_eq!(r.get_bits(2).unwrap(), 0b01);
    }

    #[test]
    fn truncated_side_info_is_an_error() {
        let mut w = BitWriter::new();
        BitAllocation::base_pattern().encode(&mut w).unwrap();
        let bytes = w.into_bytes();
        let mut r = BitReader::with_bit_len(&bytes, 20);
        assert!(BitAllocation::decode(&mut r).is_err());
    }

    proptest! {
        #[test]
        fn side_info_roundtrip(seed in 0u64..1u64 << 48) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bits = [0u8; 19];
            for band in 1..=19usize {
                bits[band - 1] = match super::wide_reduction(band) {
                    Some(red) => if rng.gen() { 7 - red } else { 6 - red },
                    None => *[5u8, 6, 7, 8].iter().nth(rng.gen_range(0..4)).unwrap(),
                };
            }
            let alloc = BitAllocation { bits };
            let mut w = BitWriter::new();
            alloc.encode(&mut w).unwrap();
            prop_assert_eq!(w.len_bits(), 33);
            let n = w.len_bits();
            let bytes = w.into_bytes();
            let mut r = BitReader::with_bit_len(&bytes, n);
            prop_assert_eq!(BitAllocation::decode(&mut r).unwrap(), alloc);
        }

        #[test]
        fn dequantize_error_bound(seed in 0u64..1u64 << 48) {
            let layout = make_layout();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut map = CoefficientMap::<f64>::zeros(&layout);
            for row in &mut map.rows {
                for v in row.iter_mut() {
                    *v = rng.gen_range(-0.99..0.99);
                }
            }
            let alloc = allocate_bits(&map, &layout, &PquantParams::default()).unwrap();
            let (q, _) = quantize(&map, &layout, &alloc);
            let d = dequantize(&q, &layout, &alloc);
            for (leaf, (orig, deq)) in layout.leaves.iter().zip(map.rows.iter().zip(&d.rows)) {
                let b = alloc.bits_for_band(leaf.band);
                let limit = ((1i32 << (b - 1)) - 1) as f64 / (1i64 << (b - 1)) as f64;
                let bound = 0.5f64.powi(b as i32) + 1e-12;
                for (&c, &dc) in orig.iter().zip(deq) {
                    if c.abs() <= limit {
                        prop_assert!((c - dc).abs() <= bound,
                            "b={} c={} dc={} bound={}", b, c, dc, bound);
                    }
                }
            }
        }
    }
}
