use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    ConfigParse(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("nothing to plot: {0}")]
    EmptyReport(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] dec_green::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Usage and configuration problems (exit 1) as opposed to numerical failures (exit 2).
    pub fn is_usage(&self) -> bool {
        matches!(self, CliError::ConfigParse(_) | CliError::MissingInput(_))
    }
}

/// Variant name of a library error, used in failure summaries.
pub fn error_kind(e: &dec_green::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.chars().take_while(|c| c.is_alphanumeric()).collect()
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}
