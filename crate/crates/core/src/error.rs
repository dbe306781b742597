use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a closed-form expression.
    #[error("domain error in {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    /// The requested system is larger than the exact treatment supports.
    #[error("capacity exceeded: {atoms} atoms requested, at most {max} supported by {what}")]
    Capacity {
        what: &'static str,
        atoms: usize,
        max: usize,
    },

    /// Rejection sampling of atom positions did not converge.
    #[error("could not place {atoms} atoms with separation {min_separation} um in a {box_side} um cube after {rounds} rounds")]
    Sampling {
        atoms: usize,
        box_side: f64,
        min_separation: f64,
        rounds: usize,
    },

    /// A caller broke an operation's documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The pulse schedule is inconsistent.
    #[error("invalid pulse schedule: {0}")]
    Schedule(String),

    /// Time integration failed.
    #[error("propagation failed at t = {t} us: {reason}")]
    Propagation { t: f64, reason: String },

    /// A trajectory inside an ensemble failed.
    #[error("trajectory with seed {seed} failed: {source}")]
    Trajectory {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// Missing or malformed input data.
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }
}
