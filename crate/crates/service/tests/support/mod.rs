pub mod process;
pub mod server;
