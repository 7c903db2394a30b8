//! Glue shared by the command-line front end and the end-to-end tests.

use thiserror::Error;

use crate::calibrate::{assign_probabilities, CalibrationConfig, CalibrationError};
use crate::corpus_io::{PropsDocument, SyntheticCorpus};
use crate::pool::{align_gold, build_pool, CandidatePool, PoolError, SystemOutput};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Builds the pool, aligns gold when given, and converts raw scores to
/// probabilities.
pub fn prepare_pool(
    systems: &[SystemOutput],
    gold: Option<&PropsDocument>,
    calibration: &CalibrationConfig,
) -> Result<CandidatePool, PipelineError> {
    let mut pool = build_pool(systems)?;
    if let Some(g) = gold {
        align_gold(&mut pool, g)?;
    }
    assign_probabilities(&mut pool, calibration)?;
    Ok(pool)
}

pub fn synthetic_systems(corpus: &SyntheticCorpus) -> Vec<SystemOutput> {
    corpus
        .systems
        .iter()
        .map(|s| SystemOutput { id: s.id.clone(), props: s.props.clone(), scores: Some(s.scores.clone()) })
        .collect()
}
