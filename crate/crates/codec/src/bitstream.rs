//! Bit-level reader/writer, the frame container, and fixed-rate control.
//!
//! All multi-bit fields are MSB-first. A frame on the wire is
//! `[payload bit count: u16][header][payload][pad to byte]`, so frames
//! concatenate byte-aligned and a stream can be cut frame by frame.

use crate::error::{CodecError, Result};
use crate::pquant::BitAllocation;
use crate::tfmap;

/// Samples per frame; frames last 32 ms at 16 kHz.
pub const FRAME_SIZE: usize = 512;
pub const SAMPLE_RATE: u32 = 16_000;

/// MSB-first bit writer.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len_bits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    pub fn put_bit(&mut self, bit: bool) {
        let byte = self.len_bits / 8;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 0x80 >> (self.len_bits % 8);
        }
        self.len_bits += 1;
    }

    /// Append `width` bits of `value`, MSB first. `width` must be <= 32 and
    /// `value` must fit in `width` bits.
    pub fn put_bits(&mut self, value: u32, width: u32) -> Result<()> {
        if width > 32 {
            return Err(CodecError::data(format!("bit width {width} > 32")));
        }
        if width < 32 && value >= (1u32 << width) {
            return Err(CodecError::data(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        for i in (0..width).rev() {
            self.put_bit((value >> i) & 1 == 1);
        }
        Ok(())
    }

    /// Final byte is zero-padded.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// MSB-first bit reader over a byte slice with an explicit bit length,
/// so truncated payloads read exactly as many bits as they hold.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len_bits: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, len_bits: bytes.len() * 8, pos: 0 }
    }

    pub fn with_bit_len(bytes: &'a [u8], len_bits: usize) -> Self {
        debug_assert!(len_bits <= bytes.len() * 8);
        Self { bytes, len_bits, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.len_bits - self.pos
    }

    pub fn get_bit(&mut self) -> Result<bool> {
        if self.pos >= self.len_bits {
            return Err(CodecError::EndOfStream);
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn get_bits(&mut self, width: u32) -> Result<u32> {
        if width > 32 {
            return Err(CodecError::data(format!("bit width {width} > 32")));
        }
        let mut v = 0u32;
        for _ in 0..width {
            v = (v << 1) | self.get_bit()? as u32;
        }
        Ok(v)
    }

    /// Skip forward to the next byte boundary.
    pub fn align_byte(&mut self) {
        self.pos = (self.pos + 7) / 8 * 8;
    }
}

/// Wire identifier of a re-encoder variant. Three bits in the frame header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coder {
    Ezw,
    Mezw,
    Spiht,
    SpihtOrdered,
    SpihtModifiedO,
    Mspiht,
    Avdz,
}

impl Coder {
    pub const ALL: [Coder; 7] = [
        Coder::Ezw,
        Coder::Mezw,
        Coder::Spiht,
        Coder::SpihtOrdered,
        Coder::SpihtModifiedO,
        Coder::Mspiht,
        Coder::Avdz,
    ];

    /// The five coders exposed on the command line, in benchmark column order.
    pub const BENCH: [Coder; 5] =
        [Coder::Ezw, Coder::Spiht, Coder::Mezw, Coder::Mspiht, Coder::Avdz];

    pub fn id(self) -> u32 {
        match self {
            Coder::Ezw => 0,
            Coder::Mezw => 1,
            Coder::Spiht => 2,
            Coder::SpihtOrdered => 3,
            Coder::SpihtModifiedO => 4,
            Coder::Mspiht => 5,
            Coder::Avdz => 6,
        }
    }

    pub fn from_id(id: u32) -> Result<Coder> {
        Coder::ALL
            .iter()
            .copied()
            .find(|c| c.id() == id)
            .ok_or_else(|| CodecError::data(format!("unknown coder id {id}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Coder::Ezw => "ezw",
            Coder::Mezw => "mezw",
            Coder::Spiht => "spiht",
            Coder::SpihtOrdered => "spiht-ordered",
            Coder::SpihtModifiedO => "spiht-modo",
            Coder::Mspiht => "mspiht",
            Coder::Avdz => "avdz",
        }
    }

    /// True when the coder transmits a per-frame magnitude ordering; the
    /// baseline coders use the static length ordering instead.
    pub fn uses_magnitude_order(self) -> bool {
        !matches!(self, Coder::Ezw | Coder::Spiht)
    }
}

impl std::str::FromStr for Coder {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Coder> {
        Coder::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| CodecError::data(format!("unknown coder '{s}'")))
    }
}

/// One frame of encoded output: self-delimiting header plus a raw,
/// truncatable zero-tree payload.
#[derive(Debug, Clone)]
pub struct FrameStream {
    pub coder: Coder,
    /// Number of bit-plane levels; 0 means an all-zero frame with no payload.
    pub last_step_level: u8,
    pub alloc: BitAllocation,
    /// Leaf indices (1-based) with nonzero average magnitude, best first.
    /// Empty for the baseline coders, which imply the length ordering.
    pub ordering: Vec<usize>,
    pub payload: Vec<u8>,
    pub payload_bits: usize,
}

impl FrameStream {
    /// Header size on the wire, excluding the u16 length prefix.
    pub fn header_bits(&self) -> usize {
        3 + 4 + 33 + 5 * (self.ordering.len() + 1)
    }

    /// Total wire size in bits, including length prefix and byte padding.
    pub fn wire_bits(&self) -> usize {
        let raw = 16 + self.header_bits() + self.payload_bits;
        (raw + 7) / 8 * 8
    }

    /// Cut the payload to at most `bits` bits.
    pub fn truncate_payload(&mut self, bits: usize) {
        if bits >= self.payload_bits {
            return;
        }
        self.payload_bits = bits;
        self.payload.truncate((bits + 7) / 8);
        // clear pad bits in the last byte so packing stays canonical
        if bits % 8 != 0 {
            if let Some(last) = self.payload.last_mut() {
                *last &= 0xffu8 << (8 - bits % 8);
            }
        }
    }
}

/// Serialize one frame; output begins and ends on a byte boundary.
pub fn pack_frame(frame: &FrameStream) -> Result<Vec<u8>> {
    if frame.payload_bits > u16::MAX as usize {
        return Err(CodecError::data(format!(
            "payload of {} bits exceeds the 16-bit length prefix",
            frame.payload_bits
        )));
    }
    let mut w = BitWriter::new();
    w.put_bits(frame.payload_bits as u32, 16)?;
    w.put_bits(frame.coder.id(), 3)?;
    w.put_bits(frame.last_step_level as u32, 4)?;
    frame.alloc.encode(&mut w)?;
    tfmap::encode_ordering(&frame.ordering, &mut w)?;
    let mut r = BitReader::with_bit_len(&frame.payload, frame.payload_bits);
    for _ in 0..frame.payload_bits {
        w.put_bit(r.get_bit()?);
    }
    Ok(w.into_bytes())
}

/// Parse one frame starting at `offset`; returns the frame and the number of
/// bytes consumed. `frame_index` is only used for error reporting.
pub fn unpack_frame(
    bytes: &[u8],
    offset: usize,
    frame_index: usize,
) -> Result<(FrameStream, usize)> {
    let framing = |reason: &str| CodecError::Framing {
        frame: frame_index,
        reason: reason.to_string(),
    };
    let mut r = BitReader::new(&bytes[offset..]);
    let payload_bits = r.get_bits(16).map_err(|_| framing("missing length prefix"))? as usize;
    let coder =
        Coder::from_id(r.get_bits(3).map_err(|_| framing("truncated header"))?)?;
    let last_step_level =
        r.get_bits(4).map_err(|_| framing("truncated header"))? as u8;
    let alloc = BitAllocation::decode(&mut r)
        .map_err(|_| framing("truncated allocation side info"))?;
    let ordering =
        tfmap::decode_ordering(&mut r).map_err(|_| framing("bad ordering side info"))?;
    let mut payload_writer = BitWriter::new();
    for _ in 0..payload_bits {
        payload_writer.put_bit(r.get_bit().map_err(|_| framing("truncated payload"))?);
    }
    let consumed = (r.pos() + 7) / 8;
    Ok((
        FrameStream {
            coder,
            last_step_level,
            alloc,
            ordering,
            payload: payload_writer.into_bytes(),
            payload_bits,
        },
        consumed,
    ))
}

/// Fixed-rate budget with a one-frame carry buffer.
#[derive(Debug, Clone, Copy)]
pub struct RateBudget {
    pub target_bps: u32,
    /// Whole-frame budget in bits (target x 32 ms).
    pub frame_bits: i64,
}

/// Smallest frame the container can emit: length prefix plus a header with an
/// empty ordering sequence, rounded up to bytes.
pub const MIN_FRAME_BITS: i64 = 64;

impl RateBudget {
    pub fn new(target_bps: u32) -> Result<Self> {
        let frame_bits = (target_bps as i64 * FRAME_SIZE as i64) / SAMPLE_RATE as i64;
        if frame_bits < MIN_FRAME_BITS {
            return Err(CodecError::config(format!(
                "rate target {target_bps} bit/s leaves {frame_bits} bits per frame, below the {MIN_FRAME_BITS}-bit header minimum"
            )));
        }
        Ok(Self { target_bps, frame_bits })
    }
}

/// Truncate one frame's payload to the running budget. Headers are never
/// truncated; a header overrun borrows from the next frame through a negative
/// carry. Unused budget rolls forward, capped at one frame.
pub fn truncate_to_budget(
    frame: &mut FrameStream,
    budget: &RateBudget,
    carry: i64,
) -> i64 {
    let available = budget.frame_bits + carry;
    let fixed = 16 + frame.header_bits() as i64;
    // Largest payload whose byte-padded frame fits the available budget.
    let keep = ((available / 8) * 8 - fixed).max(0) as usize;
    if (frame.payload_bits as i64) > keep as i64 {
        frame.truncate_payload(keep);
    }
    let emitted = frame.wire_bits() as i64;
    (available - emitted).clamp(-budget.frame_bits, budget.frame_bits)
}
