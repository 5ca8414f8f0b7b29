use serde::Serialize;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const INADMISSIBLE: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
    pub const OTHER: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] phonon_eq::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("relative residuals ({mass:e}, {energy:e}) exceed 1e-6")]
    Residual { mass: f64, energy: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_inconclusive() => exit::INCONCLUSIVE,
            CliError::Core(phonon_eq::Error::InadmissibleTarget { .. }) => exit::INADMISSIBLE,
            CliError::Residual { .. } => exit::INCONCLUSIVE,
            _ => exit::OTHER,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "Usage",
            CliError::Io(_) => "Io",
            CliError::Residual { .. } => "ResidualTooLarge",
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Doc {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        })
        .expect("error document serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
