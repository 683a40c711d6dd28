//! Output directory with write-once, write-temp-then-rename semantics.

use std::path::{Path, PathBuf};

use hardy_core::KvDoc;

use crate::{CliError, VERSION};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        std::fs::write(&tmp, contents)?;
        std::fs::rename(&tmp, &target)?;
        Ok(())
    }

    /// Fills a temporary directory with `fill`, then moves it to `name`.
    pub fn write_dir(
        &self,
        name: &str,
        fill: impl FnOnce(&Path) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp)?;
        }
        fill(&tmp)?;
        if target.exists() {
            std::fs::remove_dir_all(&target)?;
        }
        std::fs::rename(&tmp, &target)?;
        Ok(())
    }
}

/// Leading lines of every report.
pub fn header(command: &str, config_hash: &str) -> KvDoc {
    let mut d = KvDoc::new();
    d.push("artifact", format!("hardy {VERSION}")).push("command", command).push("config_hash", config_hash);
    d
}
