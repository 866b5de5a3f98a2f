//! CSV and JSON writers. Numbers are written with 17 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub struct CsvOut {
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvOut {
    pub fn new(path: Option<&Path>, header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(sink(path)?);
        writer.write_record(header).map_err(csv_error)?;
        Ok(Self { writer })
    }

    pub fn numbers(&mut self, row: &[f64]) -> Result<(), CliError> {
        self.writer.write_record(row.iter().map(|v| num(*v))).map_err(csv_error)
    }

    pub fn fields<I, S>(&mut self, row: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(row).map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let mut out = sink(Some(path))?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Config(format!("json: {e}")))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
