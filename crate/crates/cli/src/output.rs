//! CSV and JSON writers.

use std::io::Write;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes records as CSV with a header row, or as a JSON array.
pub fn write_table<W: Write, T: Serialize>(out: W, format: Format, rows: &[T]) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(std::io::Error::other)?;
            }
            w.flush()
        }
        Format::Json => write_json(out, &rows),
    }
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::other)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct R {
        a: f64,
        b: Option<usize>,
    }

    #[test]
    fn csv_has_header_and_empty_options() {
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Csv, &[R { a: 1.5, b: None }, R { a: 2.0, b: Some(3) }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1.5,\n2.0,3\n");
    }
}
