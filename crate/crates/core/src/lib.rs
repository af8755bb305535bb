pub mod carleson;
pub mod dyadic;
pub mod error;
pub mod norms;
pub mod operators;
pub mod verify;
pub mod weights;

pub use dyadic::{DyadicTree, LeafFn, Node};
pub use error::{Error, Result};
pub use weights::{Weight, WeightPair, WeightSpec};
