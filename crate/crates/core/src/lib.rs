//! Code-modulated interferometry simulator.
//!
//! An array of elements is combined into a single power detector after each
//! element is modulated by its own code. Pairwise correlations (visibilities)
//! are recovered by correlating the detected power with code products, then
//! imaged by an inverse DFT over the u-v grid.

pub mod codegen;
pub mod demod;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod oracle;
pub mod pipeline;
pub mod rfchain;
pub mod scene;
pub mod sensitivity;
pub mod visibility;

pub use codegen::{BocpSet, Code};
pub use error::{
    CodegenError, DemodError, GeometryError, ImagingError, OracleError, PipelineError, RfError, SceneError,
    SensitivityError,
};
pub use geometry::ArrayGeometry;
pub use imaging::BrightnessMap;
pub use pipeline::Acquisition;
pub use rfchain::SimParams;
pub use scene::{Emitter, Scene};
pub use visibility::VisibilityFunction;
