use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Membership,
    Cap,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency matrices of colours {0} and {1} do not commute")]
    Commutation(usize, usize),
    #[error("factorization data rejected: {0}")]
    Factorization(String),
    #[error("language rejected: {0}")]
    Language(String),
    #[error("dynamics rejected: {0}")]
    Dynamics(String),
    #[error("malformed input: {0}")]
    InvalidInput(String),
    #[error("ideal lattice rejected: {0}")]
    InvalidLattice(String),
    #[error("inconsistent path: {0}")]
    Path(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("vertex enumeration over {0} coordinates exceeds the cap of {1}")]
    DimensionCap(usize, usize),
    #[error("fock basis of {0} vectors exceeds the cap of {1}")]
    SizeCap(usize, usize),
    #[error("e^beta = {exp_beta} is within snap tolerance of several eigenvalues of colour {color}: {candidates:?}")]
    EigenSnapAmbiguity {
        color: usize,
        exp_beta: f64,
        candidates: Vec<f64>,
    },
    #[error("graph with several vertices needs explicit factorization data for colours {0} and {1}")]
    FactorizationRequired(usize, usize),
    #[error("requested operator lies outside the truncation: {0}")]
    OutOfTruncation(String),
    #[error("trace is not admissible for this component: {0}")]
    Membership(String),
    #[error("partition sum does not converge: {0}")]
    Convergence(String),
    #[error("no convergence certificate: spectral ratio {0} >= 1")]
    CertificateUnavailable(f64),
    #[error("trace is not the restriction of an equilibrium state: {0}")]
    NotKms(String),
    #[error("negative mass {mass} for colour set {set}")]
    NegativeMass { set: String, mass: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Commutation(..) | Factorization(_) | Language(_) | Dynamics(_) | InvalidInput(_)
            | InvalidLattice(_) | Path(_) | FactorizationRequired(..) | OutOfTruncation(_) => {
                ErrorKind::Validation
            }
            Membership(_) | Convergence(_) | NotKms(_) | NegativeMass { .. }
            | EigenSnapAmbiguity { .. } | CertificateUnavailable(_) => ErrorKind::Membership,
            Unsupported(_) | CapExceeded(_) | DimensionCap(..) | SizeCap(..) => ErrorKind::Cap,
        }
    }
}
