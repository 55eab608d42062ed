//! Error type and process exit codes for the command-line tool.
//!
//! Every failure funnels into [`HarnessError`] so the binary can map it to a
//! stable exit code: 1 for I/O trouble, 2 for configuration mistakes, 3 for
//! unreadable or inconsistent data, 4 for numerical breakdown.

use adi_core::{AdiError, ErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    /// A file failed to parse. `line` is 1-based; 0 means the problem is
    /// with the file as a whole rather than a specific line.
    #[error("{}", format_parse(.path, *.line, .message))]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: unsupported {what} version {found}, this build reads version {expected}")]
    UnsupportedVersion {
        path: String,
        what: &'static str,
        found: String,
        expected: u32,
    },

    /// A failure attributed to one scenario case.
    #[error("case {label}: {source}")]
    Case {
        label: String,
        #[source]
        source: Box<HarnessError>,
    },

    #[error(transparent)]
    Core(#[from] AdiError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_parse(path: &str, line: usize, message: &str) -> String {
    if line == 0 {
        format!("{path}: {message}")
    } else {
        format!("{path}:{line}: {message}")
    }
}

impl HarnessError {
    /// Exit code contract: 0 success, 1 I/O, 2 configuration, 3 data,
    /// 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Parse { .. } | HarnessError::UnsupportedVersion { .. } => 3,
            HarnessError::Case { source, .. } => source.exit_code(),
            HarnessError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            },
            HarnessError::Io { .. } => 1,
        }
    }

    pub fn for_case(label: &str, source: HarnessError) -> Self {
        HarnessError::Case {
            label: label.to_string(),
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
