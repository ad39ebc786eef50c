mod args;
mod commands;
mod select;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// A failure with its exit code: 2 for user or configuration errors, 3 for
/// problems in the data.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: "Usage".into(),
            message: message.into(),
            code: 2,
        }
    }
}

impl From<coordlab::Error> for CliError {
    fn from(e: coordlab::Error) -> Self {
        use coordlab::Error as E;
        let code = match &e {
            E::EmptyGroup(_)
            | E::InvalidSpec(_)
            | E::InsufficientMetadata(_)
            | E::UnknownScheme(_)
            | E::AmbiguousMembership(_)
            | E::MissingCategory(_)
            | E::DuplicateLexeme { .. }
            | E::NonCanonicalLexeme { .. }
            | E::Io { .. }
            | E::Json(_) => 2,
            _ => 3,
        };
        CliError {
            kind: e.kind().to_string(),
            message: e.to_string(),
            code,
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    let body = serde_json::json!({ "error": e.kind, "message": e.message, "exit_code": e.code });
    eprintln!("{body}");
    ExitCode::from(e.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::usage(e.render().to_string().trim_end())),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
