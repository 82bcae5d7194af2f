//! Scene files in, geometry reports out.

pub mod report;
pub mod run;
pub mod scene;

pub use report::Report;
pub use run::{run, summary, Command, Flags};
pub use scene::{Scene, SceneError};
