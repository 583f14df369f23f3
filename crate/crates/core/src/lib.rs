#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod corpus;
pub mod decode;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod tokenizer;
