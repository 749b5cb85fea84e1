use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] thermpeps::Error),

    #[error("{0} check(s) failed")]
    ChecksFailed(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use thermpeps::Error as E;
        ExitCode::from(match self {
            CliError::Config(_) | CliError::Core(E::InvalidArgument(_)) => 2,
            CliError::Core(E::SizeLimit { .. }) => 4,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(E::Dimension(_)) | CliError::ChecksFailed(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        })
    }
}
