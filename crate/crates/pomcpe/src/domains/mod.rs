//! Concrete benchmark domains.

pub mod hallway;
pub mod tiger;
