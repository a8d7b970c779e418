//! Label transform, losses, optimizer and the model family, with training
//! loops and hand-written gradients.

pub mod baseline;
pub mod bundle;
pub mod cnn;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod optim;
pub mod params;
pub mod predict;
pub mod train;
pub mod transform;

pub use model::Model;
