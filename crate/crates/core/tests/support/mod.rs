pub mod golden;
pub mod latency;
