// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command, split by the exit code they map to.
#[derive(Debug, Clone, Error)]
pub enum CliError {
    /// Bad arguments or an invalid configuration file: exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Simulation, analysis or output failure: exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }

    pub fn input(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("{}: {err}", path.display()))
    }
}

impl From<fluorsim::Error> for CliError {
    fn from(err: fluorsim::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Files created by a command, removed again unless the command succeeds.
#[derive(Debug, Default)]
pub struct OutputGuard {
    files: Vec<PathBuf>,
    dir: Option<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    /// Creates `dir` if needed; it is removed on failure only if it was
    /// created here.
    pub fn for_dir(dir: &std::path::Path) -> CliResult<Self> {
        let created = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { files: Vec::new(), dir: created.then(|| dir.to_path_buf()), committed: false })
    }

    pub fn track(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
        if let Some(d) = &self.dir {
            let _ = std::fs::remove_dir(d);
        }
    }
}
