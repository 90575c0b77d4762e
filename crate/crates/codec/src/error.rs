use thiserror::Error;

/// Errors shared across the codec.
#[derive(Debug, Error)]
pub enum CodecError {
    /// Bad construction parameters (kernel spec, rate target, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violates a contract (frame length, empty band, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A reader ran out of bits. Payload readers treat this as end of an
    /// embedded stream; header readers treat it as a framing error.
    #[error("end of bitstream")]
    EndOfStream,

    /// A malformed container (bad magic, short frame, invalid side info).
    #[error("framing error in frame {frame}: {reason}")]
    Framing { frame: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CodecError>;

impl CodecError {
    pub fn config(msg: impl Into<String>) -> Self {
        CodecError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CodecError::Data(msg.into())
    }
}
