//! Output directory handling with atomic file emission: every file is
//! written to a temporary sibling and renamed into place, so a failed
//! command never leaves a partial data file behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::AppError;

pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    /// Use the requested directory, or create a fresh timestamped one
    /// (suffixed on collision) so repeated runs never overwrite each other.
    pub fn create(requested: Option<PathBuf>) -> Result<Self, AppError> {
        let path = match requested {
            Some(p) => p,
            None => {
                let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
                let base = PathBuf::from(format!("sgsim-run-{stamp}"));
                let mut candidate = base.clone();
                let mut k = 0;
                while candidate.exists() {
                    k += 1;
                    candidate = PathBuf::from(format!("{}-{k}", base.display()));
                }
                candidate
            }
        };
        fs::create_dir_all(&path)
            .map_err(|e| AppError::Usage(format!("cannot create {}: {e}", path.display())))?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Write a file atomically (temp file + rename).
    pub fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), AppError> {
        let tmp = self.path.join(format!(".{name}.tmp"));
        let target = self.path.join(name);
        fs::write(&tmp, bytes).map_err(|e| AppError::io("writing output", e))?;
        fs::rename(&tmp, &target).map_err(|e| AppError::io("renaming output", e))?;
        Ok(())
    }

    /// Create a subdirectory for auxiliary files (snapshot dumps).
    pub fn subdir(&self, name: &str) -> Result<OutDir, AppError> {
        let path = self.path.join(name);
        fs::create_dir_all(&path)
            .map_err(|e| AppError::Usage(format!("cannot create {}: {e}", path.display())))?;
        Ok(OutDir { path })
    }
}
