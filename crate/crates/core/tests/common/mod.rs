#![allow(dead_code)]

pub mod dialogues;
pub mod refworld;
