use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point ({x:.3}, {y:.3}, {z:.3}) mm lies outside the volume")]
    OutOfBounds { x: f64, y: f64, z: f64 },
    #[error("point #{index} lies outside the displacement field domain")]
    PointOutOfBounds { index: usize },
    #[error("volume geometries differ")]
    GeometryMismatch,
    #[error("value count {got} does not match the geometry ({expected} voxels)")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("invalid intensity window: lo {lo} must be below hi {hi}")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("gaussian sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("volume needs at least 3 voxels along every axis")]
    VolumeTooSmall,
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("seed voxel value {value} is below the region threshold {threshold}")]
    SeedBelowThreshold { value: f64, threshold: f64 },
    #[error("no voxel lies inside the sphere")]
    EmptySupport,
    #[error("diameters must be positive")]
    InvalidDiameter,
    #[error("point inversion did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("no landmark pairs left after filtering")]
    EmptySelection,
    #[error("samples have different lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("at least two paired samples are required")]
    TooFewSamples,
    #[error("t statistic undefined: all paired differences are zero")]
    Undefined,
    #[error("{0}")]
    Other(String),
}
