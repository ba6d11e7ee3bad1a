use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::CliError;

/// Comma-separated, `\n`-terminated, header first. Floats are written with
/// 17 significant digits in scientific notation, independent of locale.
pub(crate) struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
    rows: usize,
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvOut {
    pub(crate) fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        inner.write_record(header)?;
        Ok(Self { inner, rows: 0 })
    }

    pub(crate) fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        self.inner.write_record(values.iter().map(|v| fmt_f64(*v)))?;
        self.rows += 1;
        Ok(())
    }

    /// A row led by an integer label (path index).
    pub(crate) fn labeled_row(&mut self, label: usize, values: &[f64]) -> Result<(), CliError> {
        let fields = std::iter::once(label.to_string()).chain(values.iter().map(|v| fmt_f64(*v)));
        self.inner.write_record(fields)?;
        self.rows += 1;
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Result<usize, CliError> {
        self.inner.flush()?;
        Ok(self.rows)
    }
}
