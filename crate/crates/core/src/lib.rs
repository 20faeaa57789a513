pub mod cli;
pub mod datagen;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod schemes;
pub mod sphere;
pub mod tensor;
