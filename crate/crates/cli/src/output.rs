//! Output directory handling. All files are written from the main thread in
//! path index order.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub struct Output {
    dir: PathBuf,
    pub csv: bool,
    pub paths: bool,
}

impl Output {
    pub fn create(dir: &Path, csv: bool, paths: bool) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
            paths,
        })
    }

    /// Opens `rel` for writing, creating parent directories.
    pub fn file(&self, rel: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(BufWriter::new(File::create(path)?))
    }

    pub fn write_with(
        &self,
        rel: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> anyhow::Result<()> {
        let mut w = self.file(rel)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_report<S: Serialize>(&self, rel: &str, report: &S) -> anyhow::Result<()> {
        let mut w = self.file(rel)?;
        serde_json::to_writer_pretty(&mut w, report)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}
