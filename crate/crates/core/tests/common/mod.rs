#![allow(dead_code)]

pub mod fdp_reference;
pub mod fdp_strategies;
