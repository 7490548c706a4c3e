pub mod bench;
pub mod cli;
pub mod counting;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measurement;
pub mod polarization;
pub mod source;
pub mod state;
pub mod tomography;
