pub mod complexity;
pub mod edf;
pub mod evaluation;
pub mod model;
pub mod nn;
pub mod preprocess;
pub mod synthetic;
pub mod training;
