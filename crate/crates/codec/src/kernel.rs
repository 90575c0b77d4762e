//! Raised-cosine "savN" wavelet kernel design and the two-channel
//! analysis/synthesis primitives built from it.
//!
//! The kernel's magnitude response over `f in [0, k]`, `k = N/2`, is a flat
//! passband, a quarter-cosine taper of width `2*beta*k`, and a zero stopband:
//!
//! ```text
//! T(f) = 1                                   |f| <= (r - beta) * k
//!      = cos(pi/(4*beta) * (f/k - r + beta)) |f| <= (r + beta) * k
//!      = 0                                   otherwise           (r = 1/2)
//! ```
//!
//! The cosine argument runs on normalized frequency f/k, which makes the
//! response continuous at both breakpoints. FIR taps come from sampling the
//! response on the N-point DFT grid, inverse-transforming, circularly
//! centering, and normalizing to unit energy.

use crate::error::{CodecError, Result};

/// Parameters of a "savN" kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Filter order N (tap count); even, >= 4.
    pub order: usize,
    /// Cutoff sharpness; 0 < beta < 1/2.
    pub beta: f64,
}

/// Half-band split point r = 1/2.
pub const HALF_BAND: f64 = 0.5;

pub const SAV8_ORDER: usize = 8;
pub const SAV8_BETA: f64 = 0.168;

impl KernelSpec {
    pub fn new(order: usize, beta: f64) -> Result<Self> {
        let spec = Self { order, beta };
        spec.validate()?;
        Ok(spec)
    }

    /// The default "sav8" kernel.
    pub fn sav8() -> Self {
        Self { order: SAV8_ORDER, beta: SAV8_BETA }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 4 || self.order % 2 != 0 {
            return Err(CodecError::config(format!(
                "kernel order must be even and >= 4, got {}",
                self.order
            )));
        }
        if !(self.beta > 0.0 && self.beta < HALF_BAND) {
            return Err(CodecError::config(format!(
                "kernel beta must lie in (0, 1/2), got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Half order k = N/2; the response is defined on [0, k].
    pub fn half_order(&self) -> f64 {
        self.order as f64 / 2.0
    }
}

/// Evaluate the kernel magnitude response at frequency `f in [0, k]`.
pub fn kernel_response(spec: &KernelSpec, f: f64) -> Result<f64> {
    spec.validate()?;
    let k = spec.half_order();
    if !(0.0..=k).contains(&f) {
        return Err(CodecError::data(format!("frequency {f} outside [0, {k}]")));
    }
    let (r, beta) = (HALF_BAND, spec.beta);
    if f <= (r - beta) * k {
        Ok(1.0)
    } else if f <= (r + beta) * k {
        Ok((std::f64::consts::PI / (4.0 * beta) * (f / k - r + beta)).cos())
    } else {
        Ok(0.0)
    }
}

/// Design the low-pass prototype: IDFT of the sampled response, circularly
/// centered, unit Euclidean norm.
pub fn design_kernel(spec: &KernelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.order;
    // Hermitian-symmetric sampling keeps the IDFT real.
    let mut grid = vec![0.0f64; n];
    for (m, g) in grid.iter_mut().enumerate() {
        let f = m.min(n - m) as f64;
        *g = kernel_response(spec, f)?;
    }
    let mut taps = vec![0.0f64; n];
    for (t, tap) in taps.iter_mut().enumerate() {
        // rotate by n/2 to center the symmetric impulse response
        let shifted = (t + n / 2) % n;
        let mut acc = 0.0;
        for (m, g) in grid.iter().enumerate() {
            acc += g * (2.0 * std::f64::consts::PI * m as f64 * shifted as f64 / n as f64).cos();
        }
        *tap = acc / n as f64;
    }
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    for t in &mut taps {
        *t /= norm;
    }
    Ok(taps)
}

/// The four filters of a two-channel orthogonal bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterQuadruple {
    pub analysis_lo: Vec<f64>,
    pub analysis_hi: Vec<f64>,
    pub synthesis_lo: Vec<f64>,
    pub synthesis_hi: Vec<f64>,
}

/// Build the quadruple from a unit-norm low-pass prototype: high-pass by
/// alternating-sign time reversal, synthesis filters by time reversal.
pub fn derive_quadruple(lowpass: &[f64]) -> Result<FilterQuadruple> {
    let n = lowpass.len();
    if n == 0 || n % 2 != 0 {
        return Err(CodecError::data(format!(
            "low-pass prototype length must be even and nonzero, got {n}"
        )));
    }
    let norm = lowpass.iter().map(|t| t * t).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(CodecError::data(format!(
            "low-pass prototype must have unit norm, got {norm}"
        )));
    }
    let analysis_lo = lowpass.to_vec();
    let analysis_hi: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { lowpass[n - 1 - i] } else { -lowpass[n - 1 - i] })
        .collect();
    let synthesis_lo: Vec<f64> = analysis_lo.iter().rev().copied().collect();
    let synthesis_hi: Vec<f64> = analysis_hi.iter().rev().copied().collect();
    Ok(FilterQuadruple { analysis_lo, analysis_hi, synthesis_lo, synthesis_hi })
}

impl FilterQuadruple {
    /// The codec's default bank.
    pub fn sav8() -> FilterQuadruple {
        derive_quadruple(&design_kernel(&KernelSpec::sav8()).expect("sav8 is valid"))
            .expect("sav8 prototype is unit norm")
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<FilterQuadruple> {
        derive_quadruple(&design_kernel(spec)?)
    }

    /// A textbook orthogonal kernel (Daubechies, 4 vanishing moments) entered
    /// as constants. Used to verify transform plumbing at machine precision
    /// independently of the savN design path.
    pub fn reference_orthogonal() -> FilterQuadruple {
        const DB4_LO: [f64; 8] = [
            0.230377813308855230,
            0.714846570552541500,
            0.630880767929590400,
            -0.027983769416983850,
            -0.187034811718881140,
            0.030841381835986965,
            0.032883011666982945,
            -0.010597401784997278,
        ];
        derive_quadruple(&DB4_LO).expect("db4 taps are unit norm")
    }

    pub fn len(&self) -> usize {
        self.analysis_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.analysis_lo.is_empty()
    }
}

/// One analysis step: correlate with the analysis pair and downsample by two,
/// with periodic extension. Input length must be even.
pub fn split(signal: &[f64], quad: &FilterQuadruple) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = signal.len();
    if len == 0 || len % 2 != 0 {
        return Err(CodecError::data(format!("split input length {len} must be even")));
    }
    let taps = quad.len();
    let half = len / 2;
    let mut low = vec![0.0; half];
    let mut high = vec![0.0; half];
    for m in 0..half {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for n in 0..taps {
            let x = signal[(2 * m + n) % len];
            lo += quad.analysis_lo[n] * x;
            hi += quad.analysis_hi[n] * x;
        }
        low[m] = lo;
        high[m] = hi;
    }
    Ok((low, high))
}

/// One synthesis step: upsample both half-bands by two, correlate with the
/// synthesis pair, and sum. The `taps - 1` offset cancels the analysis delay
/// so `merge(split(x)) == x` for an orthogonal bank.
pub fn merge(low: &[f64], high: &[f64], quad: &FilterQuadruple) -> Result<Vec<f64>> {
    if low.len() != high.len() {
        return Err(CodecError::data(format!(
            "merge halves differ in length: {} vs {}",
            low.len(),
            high.len()
        )));
    }
    if low.is_empty() {
        return Err(CodecError::data("merge input is empty".to_string()));
    }
    let len = low.len() * 2;
    let taps = quad.len();
    let mut out = vec![0.0; len];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for n in 0..taps {
            let idx = (j + n + taps * len - (taps - 1)) % len;
            if idx % 2 == 0 {
                acc += quad.synthesis_lo[n] * low[idx / 2] + quad.synthesis_hi[n] * high[idx / 2];
            }
        }
        *o = acc;
    }
    Ok(out)
}
