use std::fmt;

use flatlab_core::FlatError;

/// Exit status classes of the runner.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Exit 2: a configuration field is invalid.
    Validation { field: String, message: String },
    /// Exit 3: a numerical routine failed on valid input.
    Numerical(String),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            CliError::Validation { field, .. } => Some(field),
            CliError::Numerical(_) => None,
        }
    }

    /// Classifies a core error raised while handling config field `field`.
    pub fn from_core(field: &str, e: FlatError) -> Self {
        match e {
            FlatError::InvalidArgument { field: f, .. } => {
                let path = if field.is_empty() { f.to_string() } else { format!("{field}.{f}") };
                CliError::validation(path, e.to_string())
            }
            FlatError::UnknownObjective(_) => CliError::validation(join(field, "name"), e.to_string()),
            FlatError::BadParams { .. } => CliError::validation(join(field, "params"), e.to_string()),
            FlatError::DimensionMismatch { .. }
            | FlatError::NotSymmetric(_)
            | FlatError::RankDeficient { .. }
            | FlatError::NotGlobalMinimum(_)
            | FlatError::Precondition(_)
            | FlatError::ClosedFormUnavailable(_)
            | FlatError::MissingGradient(_) => CliError::validation(field, e.to_string()),
            FlatError::Singular(_) | FlatError::LocallyConstant | FlatError::NonFinite { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }

    /// Core error that can only come from the numerics.
    pub fn numerical(e: FlatError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn join(a: &str, b: &str) -> String {
    if a.is_empty() {
        b.to_string()
    } else {
        format!("{a}.{b}")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = |s: &str| s.replace('\n', " ");
        match self {
            CliError::Validation { field, message } => {
                write!(f, "invalid field `{field}`: {}", one_line(message))
            }
            CliError::Numerical(m) => write!(f, "numerical failure: {}", one_line(m)),
        }
    }
}

impl std::error::Error for CliError {}
