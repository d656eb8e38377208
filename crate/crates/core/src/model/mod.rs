//! Shared data model: poses, the assembly dictionary and the workcell description.

pub mod assembly;
pub mod pose;
pub mod workcell;

pub use assembly::{AssemblySpec, Joint, PartSpec};
pub use pose::{Pose, PoseError};
pub use workcell::{Aabb, GripperSpec, RackSlot, RobotSpec, StationKind, StationSpec, WorkcellSpec};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("reference error at {path}: {message}")]
    Reference { path: String, message: String },
    #[error("unknown part '{0}'")]
    UnknownPart(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
