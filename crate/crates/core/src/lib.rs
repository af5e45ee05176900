pub mod codec;
pub mod dht;
pub mod pattern;
pub mod xml;
pub mod extract;
pub mod bench;
pub mod catalog;
pub mod algebra;
pub mod rewrite;
pub mod materialize;
pub mod exec;
