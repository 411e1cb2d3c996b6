//! Library side of the `hspec` binary: word parsing, command execution and
//! report rendering. `main.rs` only maps clap arguments onto [`run`].

pub mod commands;
pub mod report;
pub mod word;

pub use commands::{run, CliError, Command, Output, RunConfig};
pub use word::{eval, parse_word, parse_word_list, ParseError, Word};
