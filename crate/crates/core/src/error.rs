use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Array or profile dimensions disagree with the game.
    #[error("shape error: {0}")]
    Shape(String),

    #[error("index error: {what} {index} out of range 0..{bound}")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("non-finite payoff for player {player} at flat index {index}")]
    NonFinite { player: usize, index: usize },

    /// A vector that should lie on a probability simplex does not.
    #[error("simplex violation: {0}")]
    Simplex(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The incentive produced a value the revision map cannot use.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("symmetry hypothesis violated: max sampled defect {max_defect:e}")]
    Hypothesis { max_defect: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
