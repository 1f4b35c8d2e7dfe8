use thiserror::Error;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("non-finite value in {component}")]
    NonFinite { component: &'static str },

    #[error("training aborted at epoch {epoch}: non-finite {component}")]
    Diverged {
        epoch: usize,
        component: &'static str,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn ensure(cond: bool, msg: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg))
    }
}

pub(crate) fn finite(value: f64, component: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { component })
    }
}
