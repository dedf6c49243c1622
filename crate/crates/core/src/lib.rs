pub mod cli;
pub mod duality;
pub mod error;
pub mod exec;
pub mod instance;
pub mod lowerbounds;
pub mod mechanisms;
pub mod model;
pub mod myerson;
pub mod optrev;
pub mod partition;
pub mod simplex;

pub use error::{LabError, Result};
