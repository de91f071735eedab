#![no_std]
extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod dsl;
mod math;
pub mod rng;
pub mod actions;
pub mod designer;
pub mod elite;
pub mod eval;
pub mod prompts;
pub mod tree;
pub mod search;
