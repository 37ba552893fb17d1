//! Rotation vectors on small-angle targets.
//!
//! Alignment runs with targets of angle below `0.9 α`:
//!
//! | label                   | head                  | targets          |
//! |-------------------------|-----------------------|------------------|
//! | `rotvec-restricted:α`   | `RotVecRestricted(α)` | small            |
//! | `procrustes`            | `Procrustes`          | small            |
//! | `rotvec`                | `RotVec`              | small            |
//! | `rotvec/shifted`        | `RotVec`              | small · `R_x(π)` |

use crate::error::Result;
use crate::experiments::align::{half_turn_x, run_alignment, AlignConfig, HeadChoice};
use crate::experiments::{run_batch, ExperimentReport};
use crate::mappings::MappingKind;

pub const SHIFTED_LABEL: &str = "rotvec/shifted";

/// The four configurations of the probe, in report order.
pub fn probe_configs(max_angle: f64, cfg: &AlignConfig) -> Result<Vec<AlignConfig>> {
    let restricted = MappingKind::rotvec_restricted(max_angle)?;
    let base = AlignConfig {
        target_max_angle: Some(0.9 * max_angle),
        target_offset: None,
        label: None,
        ..cfg.clone()
    };
    let with = |head: MappingKind, shifted: bool, label: Option<&str>| AlignConfig {
        head: HeadChoice::Mapping(head),
        target_offset: shifted.then(half_turn_x),
        label: label.map(str::to_string),
        ..base.clone()
    };
    Ok(vec![
        with(restricted, false, None),
        with(MappingKind::Procrustes, false, None),
        with(MappingKind::RotVec, false, None),
        with(MappingKind::RotVec, true, Some(SHIFTED_LABEL)),
    ])
}

pub fn run_restricted_rotvec_probe(max_angle: f64, cfg: &AlignConfig) -> Result<ExperimentReport> {
    run_restricted_rotvec_probe_jobs(max_angle, cfg, 1)
}

pub fn run_restricted_rotvec_probe_jobs(max_angle: f64, cfg: &AlignConfig, jobs: usize) -> Result<ExperimentReport> {
    run_batch(probe_configs(max_angle, cfg)?, jobs, |c| run_alignment(&c))
}
