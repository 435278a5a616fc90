use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum WlabError {
    #[error("singularity within the guard distance of the integration path (at {0})")]
    SingularityOnPath(String),
    #[error("adaptive refinement budget exhausted: {0}")]
    NoConvergence(String),
    #[error("more than one singularity inside the residue circle")]
    MultipleSingularities,
    #[error("function vanishes or blows up on the contour (near {0})")]
    ZeroOnPath(String),
    #[error("winding estimate {0} is not within 0.1 of an integer")]
    WindingNotInteger(f64),
    #[error("top-third spectral energy ratio {0:e} exceeds 1e-10")]
    AliasingDetected(f64),
    #[error("expression is not a total derivative")]
    NotExact,
    #[error("jet order {have} is below the required {need}")]
    InsufficientJetOrder { have: usize, need: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("singular point at {0}")]
    SingularPoint(String),
    #[error("singularity on the level line")]
    SingularityOnLevel,
    #[error("singularity on the sampled line")]
    SingularityOnLine,
    #[error("samples are not a graph over the horizontal plane")]
    NotAGraph,
    #[error("degree estimate {0} is not an integer")]
    NonIntegerDegree(f64),
    #[error("check not applicable: {0}")]
    NotApplicable(String),
    #[error("period closure failed: {0}")]
    PeriodSolveFailed(String),
    #[error("vertical flux vanishes")]
    ZeroVerticalFlux,
    #[error("branch point of the normal on the grid")]
    BranchPointOnGrid,
    #[error("blow-up detected at t = {0}")]
    BlowupDetected(f64),
    #[error("pole at distance {distance:e} from the line at t = {t}")]
    PoleCollision { t: f64, distance: f64 },
    #[error("pole track lost at t = {0}")]
    TrackLost(f64),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for WlabError {
    fn from(e: std::io::Error) -> Self {
        WlabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WlabError>;
