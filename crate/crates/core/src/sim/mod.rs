//! Deterministic kinematic simulation of the workcell and the script
//! interpreter that drives it.

mod collision;
mod handle;
mod interp;
mod state;

pub use collision::{first_hit, sample_point, BodyGeometry};
pub use handle::SimHandle;
pub use interp::{run_script, Expectation, RunTrace, RuntimeScriptError};
pub use state::{
    Checkpoint, GripperLocation, Hold, PartState, RobotState, SimConfig, SimError, SimErrorKind, StateDump,
    WorkcellState,
};
