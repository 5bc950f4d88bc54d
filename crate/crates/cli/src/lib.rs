//! Operator commands: generate, simulate, render, compare, inspect, serve,
//! and the reference raycaster.

pub mod args;
pub mod commands;
pub mod serve;

use std::path::{Path, PathBuf};

pub use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scene(#[from] vdi::scene::SceneError),
    #[error(transparent)]
    Format(#[from] vdi::vdi::format::FormatError),
    #[error(transparent)]
    Image(#[from] vdi::image::ImageError),
    #[error(transparent)]
    Pipeline(#[from] vdi::distributed::PipelineError),
    #[error(transparent)]
    Repr(#[from] vdi::vdi::ReprError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot bind {addr}: {reason}")]
    Bind { addr: String, reason: String },
}

impl CliError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Scene(_) => "scene",
            CliError::Format(_) => "vdi_format",
            CliError::Image(_) => "image",
            CliError::Pipeline(_) => "pipeline",
            CliError::Repr(_) => "representation",
            CliError::Io { .. } => "io",
            CliError::Invalid(_) => "invalid_argument",
            CliError::Bind { .. } => "bind",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io { .. } | CliError::Bind { .. } => 3,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() })
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Runs one parsed command and returns its JSON summary.
pub fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Render(a) => commands::render(&a),
        Command::Dvr(a) => commands::dvr(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Inspect(a) => commands::inspect(&a),
        Command::Serve(a) => serve::serve(&a),
    }
}
