use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Output directory for one run; remembers the files it hands out.
pub struct Output {
    dir: PathBuf,
    seed: u64,
    files: Vec<String>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn create(dir: &Path, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), seed, files: Vec::new() })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes `name` through `body`, which receives a buffered writer.
    pub fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(|e| io_error(&path, e))?);
        body(&mut w)?;
        w.flush().map_err(|e| io_error(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// CSV with the given header and rows of preformatted fields.
    pub fn write_rows(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        self.write(name, |w| {
            let mut csv = csv::Writer::from_writer(w);
            let err = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
            csv.write_record(header).map_err(err)?;
            for row in rows {
                csv.write_record(row).map_err(err)?;
            }
            csv.flush().map_err(|e| CliError::Io(format!("{name}: {e}")))
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
            writeln!(w).map_err(|e| CliError::Io(format!("{name}: {e}")))
        })
    }
}

/// Fixed-format float for CSV bodies.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
