use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A shape parameter or operation argument is outside its domain.
    InvalidParameter { name: &'static str, reason: String },
    /// Two objects that must share an ambient dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// Coordinates outside their documented ranges.
    InvalidCoordinates(String),
    /// The shape has `d == d_min` and therefore zero volume.
    DegenerateShape,
    /// The two foci coincide.
    CoincidentFoci,
    /// Tensor quadrature was requested in too high a dimension.
    DimensionTooLarge { n: usize, max: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidCoordinates(msg) => write!(f, "invalid coordinates: {msg}"),
            Error::DegenerateShape => {
                write!(f, "degenerate shape: d == d_min has zero volume")
            }
            Error::CoincidentFoci => write!(f, "foci coincide"),
            Error::DimensionTooLarge { n, max } => {
                write!(f, "dimension {n} exceeds the tensor quadrature limit of {max}")
            }
        }
    }
}

impl std::error::Error for Error {}
