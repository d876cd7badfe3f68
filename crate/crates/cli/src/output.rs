//! Output directory that is rolled back unless the run completes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), created_dir, written: Vec::new(), committed: false })
    }

    /// Reserves `name` inside the output directory; the file is removed on
    /// rollback whether or not it was finished.
    pub fn path(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        path
    }

    pub fn csv(&mut self, name: &str, header: &[&str]) -> Result<CsvOut> {
        let path = self.path(name);
        let mut writer =
            csv::Writer::from_path(&path).with_context(|| format!("cannot create {}", path.display()))?;
        writer.write_record(header)?;
        Ok(CsvOut { writer, path })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created_dir {
            // only succeeds when nothing else was put there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

pub struct CsvOut {
    writer: csv::Writer<fs::File>,
    path: PathBuf,
}

impl CsvOut {
    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).with_context(|| format!("cannot write {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().with_context(|| format!("cannot write {}", self.path.display()))
    }
}
