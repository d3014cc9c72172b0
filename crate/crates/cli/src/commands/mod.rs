pub mod ensemble;
pub mod evolve;
pub mod scan;
pub mod validate;
