//! Library surface of the decoding pipeline: binary file formats, manifest
//! handling, configuration, and the subcommand implementations behind the
//! `knnctc` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod rw;
pub mod store_io;
pub mod tensor_io;
