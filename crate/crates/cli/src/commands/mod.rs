mod models;
mod topology;

pub use models::{handle_epsilon, parity, trace, verify, TraceArgs};
pub use topology::{contours, hopf, moser, obstruction, parse_parities, MoserArgs};

use anyhow::Result;
use nearsym_core::calibration::Region;
use nearsym_core::models::{ModelKind, ModelSpec};

/// Default sampling region for each model.
pub fn region_for(spec: &ModelSpec) -> Result<Region> {
    Ok(match spec.kind {
        ModelKind::Birth => Region::unit_ball(),
        ModelKind::OmegaF => Region::cube(2.0),
        ModelKind::OmegaDeltaT => Region::u_delta(spec.delta)?,
        _ => Region::cube(1.0),
    })
}

/// Default parameter range of a model's path.
pub fn t_range(kind: ModelKind) -> (f64, f64) {
    match kind {
        ModelKind::Birth | ModelKind::Surgery => (-0.5, 0.5),
        ModelKind::OmegaDeltaT => (-1.0, 1.0),
        _ => (0.0, 1.0),
    }
}
