use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Buffered CSV writer; every value is written with 17 significant digits.
pub struct CsvWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: PathBuf, header: &str) -> std::io::Result<Self> {
        let mut inner = BufWriter::new(File::create(&path)?);
        writeln!(inner, "{header}")?;
        Ok(CsvWriter { path, inner })
    }

    pub fn row(&mut self, values: &[f64]) -> std::io::Result<()> {
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                self.inner.write_all(b",")?;
            }
            write!(self.inner, "{}", format_value(*v))?;
        }
        self.inner.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.inner.flush()?;
        Ok(self.path)
    }
}

pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}
