pub mod aoi;
pub mod channel;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod event;
pub mod protocol;
pub mod report;
pub mod sim;
pub mod sweep;
pub mod task;
