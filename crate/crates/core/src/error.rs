use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("timestamp regression at event {index}: {t_us} us after {prev_us} us")]
    Ordering { index: usize, prev_us: u64, t_us: u64 },

    #[error("event {index} at ({x}, {y}) outside {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u32,
        y: u32,
        width: u16,
        height: u16,
    },

    #[error("bad magic, not an EVT1 event file")]
    BadMagic,

    #[error("truncated event file: {0}")]
    Truncated(String),

    #[error("invalid polarity {0}, expected -1 or 1")]
    Polarity(i64),

    #[error("sensor geometry mismatch: {0}x{1} vs {2}x{3}")]
    GeometryMismatch(u16, u16, u16, u16),

    #[error("invalid sensor geometry {0}x{1}")]
    Geometry(u32, u32),

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("threshold {0} outside (0, 1]")]
    Threshold(f64),

    #[error("only {0:.2} px of travel observed, contour not yet defined")]
    InsufficientMotion(f64),

    #[error("map has zero mass")]
    ZeroMass,

    #[error("time went backwards: event at {t_us} us, map last updated at {last_us} us")]
    TimeRegression { last_us: u64, t_us: u64 },

    #[error("empty seed grid")]
    EmptyGrid,

    #[error("descriptor shapes {0}x{1} and {2}x{3} cannot be reconciled")]
    Shape(usize, usize, usize, usize),

    #[error("no overlapping time span between telemetry and ground truth")]
    NoOverlap,

    #[error("config: {0}")]
    Config(String),

    #[error("scene script: {0}")]
    Script(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
