pub mod bench;
pub mod grid;
pub mod halo;
pub mod rma;
pub mod sim;
