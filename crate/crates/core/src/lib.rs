pub mod bch;
pub mod harness;
pub mod interp;
pub mod lie;
pub mod linalg;
pub mod magnetic;
pub mod poly;
pub mod quadrature;
pub mod symbol_space;
pub mod weyl;
