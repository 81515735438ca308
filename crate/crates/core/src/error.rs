use alloc::string::String;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("position {x} lies outside [0, pi]")]
    Domain { x: f64 },
    #[error("mode {p} out of range for {n} nodes")]
    ModeRange { p: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("exponent {exponent:.3} exceeds the overflow guard {limit}")]
    Overflow { exponent: f64, limit: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {last_increment:e}, ratio {last_ratio:.4})")]
    PicardDiverged {
        iterations: usize,
        last_increment: f64,
        last_ratio: f64,
    },
    #[error("step refinement did not stabilize: change {change:e} > tolerance {tolerance:e}")]
    NonConvergence { change: f64, tolerance: f64 },
    #[error("noise level sigma_{k} = {sigma} is not below V_max = {v_max}")]
    NoiseBound { k: usize, sigma: f64, v_max: f64 },
}

impl Error {
    /// True for failures that come from arithmetic rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::NonFinite(_)
                | Error::PicardDiverged { .. }
                | Error::NonConvergence { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

/// Largest exponent accepted before `exp` is considered out of range.
pub const EXP_GUARD: f64 = 700.0;

pub(crate) fn guard_exponent(exponent: f64) -> Result<()> {
    if exponent > EXP_GUARD {
        Err(Error::Overflow {
            exponent,
            limit: EXP_GUARD,
        })
    } else {
        Ok(())
    }
}
