use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Degree below the minimum an operation accepts.
    InvalidDegree { degree: usize, min: usize },
    /// A scalar argument outside its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// A NaN or infinite component in a stored point.
    NonFinite { field: &'static str, index: usize },
    RootOutsideDisk { index: usize, modulus: f64 },
    NotMonic { leading: ComplexParts },
    CoefficientCount { expected: usize, found: usize },
    InconsistentForms { index: usize, expected: ComplexParts, found: ComplexParts },
    MissingRepresentation,
    /// Coefficient expansion is only offered up to this degree.
    ExpansionTooLarge { degree: usize, max: usize },
    EvaluationOverflow,
    CriticalPoint,
    NotClassifiable,
    OutOfValidityRange { d_r_squared: f64 },
    DegreeMismatch { polynomial: usize, grid: usize },
}

/// Plain `(re, im)` pair used in error payloads.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexParts(pub f64, pub f64);

impl fmt::Display for ComplexParts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.0, self.1)
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDegree { degree, min } => {
                write!(f, "degree {degree} is invalid (must be at least {min})")
            }
            Error::InvalidParameter { name, value } => write!(f, "{name} = {value} is out of range"),
            Error::NonFinite { field, index } => write!(f, "{field}[{index}] is not finite"),
            Error::RootOutsideDisk { index, modulus } => {
                write!(f, "roots[{index}] has modulus {modulus}, outside the closed unit disk")
            }
            Error::NotMonic { leading } => {
                write!(f, "leading coefficient is {leading}, expected exactly [1, 0]")
            }
            Error::CoefficientCount { expected, found } => {
                write!(f, "expected {expected} coefficients, found {found}")
            }
            Error::InconsistentForms { index, expected, found } => write!(
                f,
                "coeffs[{index}] = {found} does not match the root expansion {expected}"
            ),
            Error::MissingRepresentation => write!(f, "neither roots nor coeffs given"),
            Error::ExpansionTooLarge { degree, max } => {
                write!(f, "coefficient expansion requested for degree {degree} > {max}")
            }
            Error::EvaluationOverflow => {
                write!(f, "coefficient-form evaluation overflowed; use the root form")
            }
            Error::CriticalPoint => write!(f, "derivative vanishes away from a root"),
            Error::NotClassifiable => write!(f, "point coincides with a root"),
            Error::OutOfValidityRange { d_r_squared } => {
                write!(f, "d*r^2 = {d_r_squared} is not below 1/2")
            }
            Error::DegreeMismatch { polynomial, grid } => {
                write!(f, "polynomial degree {polynomial} does not match grid degree {grid}")
            }
        }
    }
}
