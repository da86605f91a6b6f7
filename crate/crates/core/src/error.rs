use thiserror::Error;

/// Plant state component, used to name the offending variable in numeric errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateComponent {
    IL1,
    IL2,
    Vo,
    D2,
}

impl std::fmt::Display for StateComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StateComponent::IL1 => "iL1",
            StateComponent::IL2 => "iL2",
            StateComponent::Vo => "Vo",
            StateComponent::D2 => "d2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible operating point: Vref {vref} V must be below input voltage {vin} V")]
    Infeasible { vref: f64, vin: f64 },

    #[error(
        "degenerate converter pair: |X| = {x:.3e} is below the guard {guard:.3e} \
         (I1m*L1 and I2m*L2 are too close)"
    )]
    DegenerateCoupling { x: f64, guard: f64 },

    #[error("load schedule error: {0}")]
    Schedule(String),

    #[error("integration diverged at t = {t:.9} s: {component} = {value}")]
    Divergence {
        t: f64,
        component: StateComponent,
        value: f64,
    },

    #[error("continuous-conduction violation at t = {t:.9} s: {component} = {current:.6e} A")]
    CcmViolation {
        t: f64,
        component: StateComponent,
        current: f64,
    },

    #[error("empty trace")]
    EmptyTrace,

    #[error("trace is not sorted by time (record {index})")]
    UnsortedTrace { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
