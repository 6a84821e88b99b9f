//! Fixtures shared by the benchmarks under `benches/`.

use ionwalk::pulse::{walk_program, StepLayout};
use ionwalk::{ApproxLevel, PulseProgram, Result, SimParams};

/// Experimental parameters at the given level and truncation.
pub fn params(level: ApproxLevel, dim: usize) -> SimParams {
    SimParams::experimental().with_level(level).with_dim(dim)
}

/// Three-step walk program at `T_D = π/δ` with the default layout.
pub fn three_step(p: &SimParams) -> Result<PulseProgram> {
    walk_program(3, p.half_period(), false, p, StepLayout::default(), 0.0)
}
