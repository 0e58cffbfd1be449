use thiserror::Error;

use crate::harness::HarnessError;
use crate::instances::InstanceError;
use crate::model::ModelError;
use crate::pac::PacError;
use crate::regret::RegretError;
use crate::schedule::ScheduleError;
use crate::stream::StreamError;

/// Crate-level error, one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Pac(#[from] PacError),
    #[error(transparent)]
    Regret(#[from] RegretError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
