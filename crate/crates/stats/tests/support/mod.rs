pub mod oracles;
pub mod fixture132;
