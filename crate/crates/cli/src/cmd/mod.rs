pub mod dtn;
pub mod energies;
pub mod evolve;
pub mod stability;
pub mod symbols;
pub mod verify;
