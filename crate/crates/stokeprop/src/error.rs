use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed STL at byte {offset}: {reason}")]
    MalformedStl { offset: u64, reason: String },

    #[error(
        "surface is not closed: {count} boundary edge(s), first few: {examples:?}"
    )]
    OpenSurface {
        count: usize,
        examples: Vec<(usize, usize)>,
    },

    #[error("surface is not orientable: edge ({0}, {1}) traversed twice in the same direction")]
    NonOrientable(usize, usize),

    #[error("degenerate panel {panel}: area {area:e} below threshold {threshold:e}")]
    DegeneratePanel {
        panel: usize,
        area: f64,
        threshold: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh has {panels} panels, above the solver cap of {cap}")]
    TooManyPanels { panels: usize, cap: usize },

    #[error(
        "collocation solve unreliable: residual {residual:e} exceeds {tol:e} \
         (1-norm condition estimate {cond:e})"
    )]
    SolveFailed { residual: f64, tol: f64, cond: f64 },

    #[error("resistance tensors violate {invariant}: defect {defect:e} exceeds {tol:e}")]
    TensorInvariant {
        invariant: &'static str,
        defect: f64,
        tol: f64,
    },

    #[error("degenerate resistance: {0}")]
    DegenerateResistance(String),

    #[error(
        "no periodic orbit within {periods} periods: final defect {defect:e} \
         (too large an amplitude or too coarse a step?)"
    )]
    NoPeriodicOrbit {
        periods: usize,
        defect: f64,
        history: Vec<f64>,
    },

    #[error("average velocity is zero: the requested distance is unreachable at this order")]
    NoPropulsion,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure stems from invalid input rather than from the
    /// numerics (drives the CLI exit-code contract).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MalformedStl { .. }
                | Error::OpenSurface { .. }
                | Error::NonOrientable(..)
                | Error::DegeneratePanel { .. }
                | Error::InvalidParameter(..)
                | Error::TooManyPanels { .. }
                | Error::Io(..)
        )
    }
}
