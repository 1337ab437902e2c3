//! Command-line front end: flag parsing, command execution and the JSON/CSV
//! result documents.

pub mod args;
pub mod doc;
pub mod error;
pub mod output;
pub mod run;

pub use args::{Cli, Command, Format};
pub use doc::ResultDoc;
pub use error::CliError;
pub use run::run;

/// Result rendered in `format`.
pub fn render(doc: &ResultDoc, format: Format) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Csv => output::table(&doc.outputs).to_csv(),
    }
}
