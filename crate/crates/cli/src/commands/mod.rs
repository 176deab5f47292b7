pub mod ablate;
pub mod bench;
pub mod gen;
pub mod run;
pub mod tune;
