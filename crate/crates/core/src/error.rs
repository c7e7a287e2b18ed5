use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("invalid phy config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("{0} is colocated with the access point (zero distance)")]
    ColocatedUser(&'static str),
    #[error("empty channel vector")]
    EmptyChannel,
    #[error("channel vectors differ in length (GO {go}, DO {do_len})")]
    AntennaMismatch { go: usize, do_len: usize },
    #[error("unsupported QAM order {0}")]
    UnsupportedModulation(u32),
    #[error("negative SINR {0}")]
    NegativeSinr(f64),
    #[error("negative transmit power {0} W")]
    NegativePower(f64),
    #[error("GO transmission time {d_tx} s outside [0, {slot}] s")]
    TxExceedsSlot { d_tx: f64, slot: f64 },
    #[error("no compute allocated")]
    NoComputeAllocated,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReliabilityError {
    #[error("catalog has no models")]
    EmptyCatalog,
    #[error("duplicate model name {0:?}")]
    DuplicateName(String),
    #[error("model {model:?}: {reason}")]
    InvalidModel { model: String, reason: String },
    #[error("model {model:?}, knot {knot}: {reason}")]
    InvalidKnot {
        model: String,
        knot: usize,
        reason: String,
    },
    #[error("BER {0} outside [0, 0.5]")]
    InvalidBer(f64),
    #[error("synthetic model {model:?}: {reason}")]
    InvalidSynthetic { model: String, reason: String },
    #[error("profile file {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("profile document: {0}")]
    Parse(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("invalid policy config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("model index {0} out of range")]
    ModelIndex(usize),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sim config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("empty sweep grid: {0}")]
    EmptyGrid(&'static str),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("writing output: {0}")]
    Output(String),
}

impl SimError {
    /// True for errors caused by invalid user input rather than the run itself.
    pub fn is_validation(&self) -> bool {
        match self {
            SimError::InvalidConfig { .. } | SimError::EmptyGrid(_) => true,
            SimError::Phy(PhyError::InvalidConfig { .. } | PhyError::ColocatedUser(_)) => true,
            SimError::Policy(PolicyError::InvalidConfig { .. } | PolicyError::ModelIndex(_)) => true,
            SimError::Reliability(e) => !matches!(e, ReliabilityError::Io { .. }),
            _ => false,
        }
    }
}
