use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// An argument lies outside the domain of a function.
    Domain { what: &'static str, value: f64 },
    /// A parameter violates its documented precondition.
    InvalidParameter(&'static str),
    /// Newton polishing of a quadrature node did not converge.
    NodeRefinement { order: usize, node: usize },
    /// Adaptive quadrature could not reach its tolerance.
    Integration { lower: f64, upper: f64 },
    /// The implicit breakpoint equation could not be bracketed.
    Bracketing { start: f64 },
    /// Two inputs disagree on a size.
    DimensionMismatch { expected: usize, found: usize },
    /// The discretization has no interior degrees of freedom.
    Degenerate(&'static str),
    /// A finite-difference operator was requested on a non-uniform grid.
    NonUniformGrid,
    /// A tabulated potential was evaluated outside its table.
    Extrapolation { r: f64 },
    /// An iterative eigensolver hit its iteration limit.
    EigenNoConvergence { iterations: usize },
    /// More eigenpairs were requested than the operator has.
    CountExceedsDimension { count: usize, dimension: usize },
    /// The spectral bounds did not enclose the Hamiltonian during a step.
    BoundsViolation { time: f64, norm_change: f64 },
    /// A signal processing routine received no samples.
    EmptySeries,
    /// The requested frequency band is not covered by the spectrum.
    BandOutsideAxis { lower: f64, upper: f64 },
    /// An index does not refer to an available element.
    IndexOutOfRange { index: usize, len: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NodeRefinement { order, node } => {
                write!(f, "newton refinement of GLL node {node} (order {order}) did not converge")
            }
            Error::Integration { lower, upper } => {
                write!(f, "adaptive quadrature failed on [{lower}, {upper}]")
            }
            Error::Bracketing { start } => {
                write!(f, "could not bracket the next breakpoint after r = {start}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Degenerate(msg) => write!(f, "degenerate discretization: {msg}"),
            Error::NonUniformGrid => f.write_str("finite differences need a uniform grid"),
            Error::Extrapolation { r } => write!(f, "tabulated potential extrapolated at r = {r}"),
            Error::EigenNoConvergence { iterations } => {
                write!(f, "eigensolver did not converge after {iterations} iterations")
            }
            Error::CountExceedsDimension { count, dimension } => {
                write!(f, "requested {count} eigenpairs from a {dimension}-dimensional operator")
            }
            Error::BoundsViolation { time, norm_change } => write!(
                f,
                "spectral bounds violated at t = {time}: norm changed by {norm_change:e}"
            ),
            Error::EmptySeries => f.write_str("empty time series"),
            Error::BandOutsideAxis { lower, upper } => {
                write!(f, "band [{lower}, {upper}] lies outside the frequency axis")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
        }
    }
}

impl core::error::Error for Error {}
