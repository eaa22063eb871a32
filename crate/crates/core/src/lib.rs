pub mod gateway;
pub mod gm;
pub mod logics;
pub mod memory;
pub mod paradigms;
pub mod persona;
pub mod probes;
pub mod runner;
pub mod templates;
