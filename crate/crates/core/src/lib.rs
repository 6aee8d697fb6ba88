pub mod channel;
pub mod cli;
pub mod error;
pub mod finite;
pub mod mc;
pub mod optimize;
pub mod pairing;
pub mod scan;
pub mod security;
