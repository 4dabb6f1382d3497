//! File-level tooling around the MSCR code: chunk files, the manifest,
//! experiment configuration and the operations behind each subcommand.

pub mod chunk;
pub mod commands;
pub mod config;
pub mod manifest;
