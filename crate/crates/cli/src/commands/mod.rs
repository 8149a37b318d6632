pub mod abl;
pub mod chsh;
pub mod jam;
pub mod signal;
pub mod sweep;
