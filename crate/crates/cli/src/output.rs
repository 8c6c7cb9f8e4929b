//! All-or-nothing output: results are staged in a temporary sibling of the
//! destination and renamed into place only once complete.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tempfile::{NamedTempFile, TempDir};

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// A directory staged next to `dest`; dropped without `commit` it is removed.
pub struct StagedDir {
    tmp: TempDir,
    dest: PathBuf,
}

impl StagedDir {
    /// Fails if `dest` already exists, unless `overwrite` is set.
    pub fn new(dest: &Path, overwrite: bool) -> Result<Self> {
        if dest.exists() && !overwrite {
            bail!(
                "output directory {} already exists (pass --force to replace it)",
                dest.display()
            );
        }
        let parent = parent_of(dest);
        fs::create_dir_all(&parent)
            .with_context(|| format!("creating {}", parent.display()))?;
        let tmp = tempfile::Builder::new()
            .prefix(".keepaug-staging-")
            .tempdir_in(&parent)
            .with_context(|| format!("creating staging directory in {}", parent.display()))?;
        Ok(Self {
            tmp,
            dest: dest.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    pub fn commit(self) -> Result<PathBuf> {
        if self.dest.exists() {
            fs::remove_dir_all(&self.dest)
                .with_context(|| format!("removing old {}", self.dest.display()))?;
        }
        let staged = self.tmp.keep();
        fs::rename(&staged, &self.dest).with_context(|| {
            format!("moving {} to {}", staged.display(), self.dest.display())
        })?;
        Ok(self.dest)
    }
}

/// A file staged next to `dest`.
pub struct StagedFile {
    tmp: NamedTempFile,
    dest: PathBuf,
}

impl StagedFile {
    pub fn new(dest: &Path) -> Result<Self> {
        let parent = parent_of(dest);
        fs::create_dir_all(&parent)
            .with_context(|| format!("creating {}", parent.display()))?;
        let tmp = tempfile::Builder::new()
            .prefix(".keepaug-staging-")
            .suffix(
                &dest
                    .extension()
                    .map(|e| format!(".{}", e.to_string_lossy()))
                    .unwrap_or_default(),
            )
            .tempfile_in(&parent)
            .with_context(|| format!("creating staging file in {}", parent.display()))?;
        Ok(Self {
            tmp,
            dest: dest.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    pub fn file(&mut self) -> &mut fs::File {
        self.tmp.as_file_mut()
    }

    pub fn commit(self) -> Result<PathBuf> {
        self.tmp
            .persist(&self.dest)
            .with_context(|| format!("writing {}", self.dest.display()))?;
        Ok(self.dest)
    }
}
