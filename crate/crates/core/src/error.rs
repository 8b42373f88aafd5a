use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game needs at least one player")]
    NoPlayers,
    #[error("player {0} has no strategies")]
    NoStrategies(usize),
    #[error("player {player} out of range (game has {players} players)")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("invalid profile {0:?}")]
    InvalidProfile(Vec<usize>),
    #[error("payoff tensor has {got} entries, expected {expected}")]
    PayoffLength { got: usize, expected: usize },
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid boost parameter {0}: must be positive")]
    InvalidBoost(f64),
    #[error("scale for player {player} must be positive, got {scale}")]
    NonPositiveScale { player: usize, scale: f64 },
    #[error("budget for player {player} at profile {profile} is {bound}, below payoff {payoff}")]
    BudgetBelowPayoff {
        player: usize,
        profile: usize,
        bound: f64,
        payoff: f64,
    },
    #[error("invalid mixed strategy for player {player}: {reason}")]
    InvalidMixed { player: usize, reason: String },
    #[error("player {0} cannot pay itself")]
    SelfTransfer(usize),
    #[error("negative amount {0}")]
    NegativeAmount(f64),
    #[error("player {0} has no goal profiles")]
    NoGoals(usize),
    #[error("invalid boolean game: {0}")]
    InvalidBoolean(String),
    #[error("invalid transfer grid: {0}")]
    InvalidGrid(String),
    #[error("grid has {size:.3e} points, above the cap of {cap}")]
    GridTooLarge { size: f64, cap: usize },
    #[error("profile {0} is not a pure Nash equilibrium of the induced game")]
    NotNashEquilibrium(usize),
    #[error("expected {expected} players, got {got}")]
    PlayerCount { expected: usize, got: usize },
}
