pub mod agents;
pub mod analytics;
pub mod environment;
pub mod error;
pub mod mathcore;
pub mod posterior;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use rng::RngStream;
