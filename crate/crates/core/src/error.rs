use thiserror::Error;

use crate::codegen::BocpSet;

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("code length {0} is not a power of two >= 2")]
    InvalidLength(usize),
    #[error("code is empty")]
    EmptyCode,
    #[error("chip {value} at position {position} is not +1 or -1")]
    InvalidChip { position: usize, value: i8 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("Walsh index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid code count {0}")]
    InvalidCount(usize),
    #[error(
        "no {wanted}-code BOCP set found at length {len} (best {best_size}{})",
        if *timed_out { ", search timed out" } else { ", search exhausted" }
    )]
    BocpInfeasible {
        len: usize,
        wanted: usize,
        best_size: usize,
        timed_out: bool,
        best: Box<BocpSet>,
    },
    #[error("invalid LFSR: {0}")]
    InvalidLfsr(String),
    #[error("LFSR seed must be nonzero")]
    ZeroSeed,
    #[error("shift {shift} outside 0..{period}")]
    ShiftOutOfRange { shift: usize, period: usize },
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("geometry has no elements")]
    Empty,
    #[error("duplicate element position ({0}, {1})")]
    DuplicatePosition(i32, i32),
    #[error("grid pitch must be positive, got {0}")]
    InvalidPitch(f64),
    #[error("wavelength must be positive, got {0}")]
    InvalidWavelength(f64),
    #[error("need at least {needed} elements, got {got}")]
    TooFewElements { needed: usize, got: usize },
    #[error("u_max must be >= 1")]
    InvalidSpan,
    #[error(
        "no {n_elements}-element layout covers 1..={u_max} without holes (largest coverable span {best})"
    )]
    CoverageInfeasible {
        n_elements: usize,
        u_max: usize,
        best: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("geometry file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown builtin geometry '{0}'")]
    UnknownBuiltin(String),
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("emitter {index} lies outside the unit circle (l={l}, m={m})")]
    OutsideUnitCircle { index: usize, l: f64, m: f64 },
    #[error("emitter {index} has negative or non-finite brightness {brightness}")]
    InvalidBrightness { index: usize, brightness: f64 },
    #[error("background must be finite and >= 0, got {0}")]
    InvalidBackground(f64),
    #[error("mask has no set cells")]
    EmptyMask,
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("scene file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum RfError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} codes, got {got}")]
    CodeCountMismatch { expected: usize, got: usize },
    #[error("code length {code} does not match stream of {chips} chips")]
    CodeLengthMismatch { code: usize, chips: usize },
    #[error("stream lengths differ: {0} vs {1}")]
    StreamLengthMismatch(usize, usize),
    #[error("no streams to combine")]
    NoStreams,
    #[error("non-finite sample in element {0}")]
    NonFinite(usize),
    #[error("stream dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DemodError {
    #[error("power stream has {samples} samples, expected {chips} chips x {samples_per_chip}")]
    LengthMismatch {
        samples: usize,
        chips: usize,
        samples_per_chip: usize,
    },
    #[error("missing {component} component for pair ({a}, {b})")]
    IncompleteVisibility {
        a: usize,
        b: usize,
        component: &'static str,
    },
    #[error("need {needed} BOCP codes, got {got}")]
    InsufficientCodes { needed: usize, got: usize },
    #[error("run plan has {plan} runs but {powers} power streams were supplied")]
    RunCountMismatch { plan: usize, powers: usize },
    #[error("geometry has {geometry} elements but {codes} codes were supplied")]
    ElementCountMismatch { geometry: usize, codes: usize },
    #[error("samples_per_chip must be >= 1")]
    InvalidSamplesPerChip,
    #[error("visibility dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("u-v coverage has {} holes, first {:?}", .missing.len(), .missing.first())]
    CoverageHoles { missing: Vec<(i32, i32)> },
    #[error("imaginary residual {residual:e} exceeds {limit:e}")]
    ImaginaryResidual { residual: f64, limit: f64 },
    #[error("map is all zero")]
    AllZero,
    #[error("map is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("coverage mismatch: sample ({0}, {1}) present in only one function")]
    CoverageMismatch(i32, i32),
    #[error("reference visibility function is all zero")]
    ZeroReference,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Rf(#[from] RfError),
    #[error(transparent)]
    Demod(#[from] DemodError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}
