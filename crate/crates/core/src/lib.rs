pub mod admissibility;
pub mod arnoldi;
pub mod config;
pub mod forms;
pub mod lattice;
pub mod materials;
pub mod output;
pub mod oracles;
pub mod path;
pub mod quadratic;
pub mod standard;
pub mod sweep;
pub mod validation;
