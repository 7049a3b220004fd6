#![allow(dead_code)]
pub mod collocation;
pub mod fields;
