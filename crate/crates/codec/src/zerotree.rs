//! Shared machinery for the bit-plane zero-tree coders.
//!
//! Each coder is written once as a state machine over a `Channel`. The
//! encoding channel evaluates significance/sign/refinement decisions from the
//! true coefficients and appends the bits; the decoding channel ignores the
//! closures and reads the same bits back. Both sides therefore run the exact
//! same list updates, which is what makes the decoder a mirror of the encoder.
//!
//! Reconstruction tracks twice the magnitude (`mag2`) in integers: discovery
//! at bit plane `n` sets `mag2 = 3 << n` (midpoint 1.5 * 2^n), and a
//! refinement bit at plane `n` moves the midpoint by `2^(n-1)`, i.e. `mag2`
//! by `2^n`. The final integer magnitude is `mag2 >> 1`, exact once plane 0
//! has been refined.

use crate::bitstream::{BitReader, BitWriter};
use crate::error::CodecError;
use crate::tfmap::TfMap;

/// Signals that the decode side ran out of payload bits. Embedded streams
/// treat this as a clean stop, not an error.
pub(crate) struct Stop;

pub(crate) type Flow<T> = std::result::Result<T, Stop>;

pub(crate) trait Channel {
    /// True on the encode side; engines may precompute values they will feed
    /// through the channel.
    const ENCODING: bool;

    /// One bit: the encoder evaluates `f` and writes the result, the decoder
    /// reads instead and never calls `f`.
    fn bit(&mut self, f: impl FnOnce() -> bool) -> Flow<bool>;

    /// A fixed-width field, MSB first.
    fn bits(&mut self, width: u32, f: impl FnOnce() -> u32) -> Flow<u32>;

    /// Record a pass boundary (encode side only).
    fn boundary(&mut self);
}

pub(crate) struct EncodeChannel<'a> {
    pub w: &'a mut BitWriter,
    pub boundaries: &'a mut Vec<usize>,
}

impl Channel for EncodeChannel<'_> {
    const ENCODING: bool = true;

    fn bit(&mut self, f: impl FnOnce() -> bool) -> Flow<bool> {
        let v = f();
        self.w.put_bit(v);
        Ok(v)
    }

    fn bits(&mut self, width: u32, f: impl FnOnce() -> u32) -> Flow<u32> {
        let v = f();
        self.w.put_bits(v, width).expect("value fits width");
        Ok(v)
    }

    fn boundary(&mut self) {
        self.boundaries.push(self.w.len_bits());
    }
}

pub(crate) struct DecodeChannel<'a> {
    pub r: BitReader<'a>,
}

impl Channel for DecodeChannel<'_> {
    const ENCODING: bool = false;

    fn bit(&mut self, _f: impl FnOnce() -> bool) -> Flow<bool> {
        match self.r.get_bit() {
            Ok(v) => Ok(v),
            Err(CodecError::EndOfStream) => Err(Stop),
            Err(_) => Err(Stop),
        }
    }

    fn bits(&mut self, width: u32, _f: impl FnOnce() -> u32) -> Flow<u32> {
        match self.r.get_bits(width) {
            Ok(v) => Ok(v),
            Err(_) => Err(Stop),
        }
    }

    fn boundary(&mut self) {}
}

/// Working reconstruction: per-coordinate signed `mag2` values.
pub(crate) struct Recon {
    pub rows: Vec<Vec<i64>>,
}

impl Recon {
    pub fn new(lengths: &[usize]) -> Self {
        Self { rows: lengths.iter().map(|&l| vec![0i64; l]).collect() }
    }

    pub fn discover(&mut self, r: usize, j: usize, n: u32, negative: bool) {
        let mag2 = 3i64 << n;
        self.rows[r][j] = if negative { -mag2 } else { mag2 };
    }

    /// Merged-first-pass discovery: the top two planes arrive together, so
    /// the midpoint starts at 3, 5, or 7 times 2^n depending on the range.
    pub fn discover_scaled(&mut self, r: usize, j: usize, n: u32, factor: i64, negative: bool) {
        let mag2 = factor << n;
        self.rows[r][j] = if negative { -mag2 } else { mag2 };
    }

    pub fn refine(&mut self, r: usize, j: usize, n: u32, up: bool) {
        let delta = 1i64 << n;
        let v = &mut self.rows[r][j];
        if *v >= 0 {
            *v += if up { delta } else { -delta };
        } else {
            *v -= if up { delta } else { -delta };
        }
    }

    /// Final integer output: floor of the half-scaled magnitude, signed.
    pub fn into_values(self) -> Vec<Vec<i32>> {
        self.rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|v| {
                        let mag = (v.abs() >> 1) as i32;
                        if v < 0 {
                            -mag
                        } else {
                            mag
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Exponent of the largest power of two not exceeding the map's peak
/// magnitude; `None` for an all-zero map.
pub(crate) fn initial_exponent(map: &TfMap) -> Option<u32> {
    let max = map.max_abs();
    if max == 0 {
        None
    } else {
        Some(31 - max.leading_zeros())
    }
}

/// Magnitude bit of `value` at plane `n`.
pub(crate) fn magnitude_bit(value: i32, n: u32) -> bool {
    (value.unsigned_abs() >> n) & 1 == 1
}

pub(crate) fn significant(value: i32, n: u32) -> bool {
    value.unsigned_abs() >= (1u32 << n)
}

/// Output of an encode run.
pub struct Payload {
    pub bits: Vec<u8>,
    pub bit_len: usize,
    /// Bit offsets after each completed pass, in emission order.
    pub boundaries: Vec<usize>,
    /// Levels run; 0 for an all-zero map.
    pub last_step_level: u8,
    /// List mutations plus bits processed, for complexity accounting.
    pub ops: u64,
}

/// Output of a decode run.
pub struct Decoded {
    pub map: TfMap,
    pub ops: u64,
}
