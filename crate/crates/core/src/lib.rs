pub mod cli;
pub mod data;
pub mod models;
pub mod label_gen;
pub mod meta_features;
pub mod meta_classifier;
pub mod neighborhood;
pub mod synth;
