use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdent { name: String, pos: usize },
    #[error("jet order {order} exceeds the context bound {max}")]
    JetOrderOverflow { order: usize, max: usize },
    #[error("potential derivative order {order} exceeds the context bound {max}")]
    PotentialOrderOverflow { order: usize, max: usize },
    #[error("component {comp} outside configuration dimension {dim}")]
    Component { comp: usize, dim: usize },
    #[error("division by an identically zero coefficient")]
    DivisionByZero,
    #[error("division by an expression that is not a pure coefficient")]
    NonCoefficientDivision,
    #[error("leading coefficient matrix is singular over the coefficient field: {0}")]
    SingularLeading(String),
    #[error("residual is not affine in the second derivative at leading order")]
    NotAffine,
    #[error("generator is not a variational symmetry: {0}")]
    NotSymmetry(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("truncation orders are incompatible: {0}")]
    Truncation(String),
    #[error("substitution target is not a jet variable")]
    NotAJetVar,
    #[error("reduction did not reach a fixed point after {0} passes")]
    NoFixedPoint(usize),
    #[error("closedness check failed: {0}")]
    NotClosed(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("linear system is underdetermined ({0} free directions)")]
    Underdetermined(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unbound parameter `{0}`")]
    UnboundParam(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;
