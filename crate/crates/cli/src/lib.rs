//! Live simulation service behind the `snakeforge serve` subcommand.

pub mod service;
