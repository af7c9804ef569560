//! CSV persistence for homodyne records (`x,basis,y`).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::observation::{Basis, HomodyneRecord, RecordEntry};
use crate::{Error, Result};

const HEADER: [&str; 3] = ["x", "basis", "y"];

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_record<R: Read>(reader: R) -> Result<HomodyneRecord> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = csv.records();
    match rows.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file, expected header `x,basis,y`".into(),
            })
        }
        Some(header) => {
            let header = header?;
            if header.iter().ne(HEADER.iter().copied()) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "expected header `x,basis,y`, found `{}`",
                        header.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
        }
    }
    let mut entries = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse { line, message };
        if row.len() != 3 {
            return Err(fail(format!("expected 3 fields, found {}", row.len())));
        }
        let x = match &row[0] {
            "0" => 0,
            "1" => 1,
            other => return Err(fail(format!("x must be 0 or 1, found `{other}`"))),
        };
        let basis = match &row[1] {
            "q" => Basis::Q,
            "p" => Basis::P,
            other => return Err(fail(format!("basis must be `q` or `p`, found `{other}`"))),
        };
        let y: f64 = row[2]
            .parse()
            .map_err(|_| fail(format!("y is not a number: `{}`", &row[2])))?;
        if !y.is_finite() {
            return Err(fail(format!("y must be finite, found `{}`", &row[2])));
        }
        entries.push(RecordEntry { x, basis, y });
    }
    Ok(HomodyneRecord { entries })
}

pub fn write_record<W: Write>(writer: W, record: &HomodyneRecord) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().from_writer(writer);
    csv.write_record(HEADER)?;
    for e in &record.entries {
        csv.write_record([
            e.x.to_string(),
            e.basis.symbol().to_string(),
            e.y.to_string(),
        ])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_record_file(path: &Path) -> Result<HomodyneRecord> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_record(std::io::BufReader::new(file))
}

pub fn write_record_file(path: &Path, record: &HomodyneRecord) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_record(std::io::BufWriter::new(file), record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::{conditional_from_params, sample_record, ChannelParams};

    #[test]
    fn round_trip_is_exact() {
        let d = conditional_from_params(&ChannelParams::new(0.5, 0.8, 0.01).unwrap());
        let rec = sample_record(&d, 500, 11);
        let mut buf = Vec::new();
        write_record(&mut buf, &rec).unwrap();
        assert!(buf.starts_with(b"x,basis,y\n"));
        assert_eq!(read_record(buf.as_slice()).unwrap(), rec);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "x,basis,y\n0,q,1.0\n1,z,2.0\n";
        match read_record(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("basis"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_record("x,basis,y\n2,q,1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_record("x,basis,y\n0,q,abc\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_record("a,b,c\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_record("".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn header_only_is_empty_record() {
        assert!(read_record("x,basis,y\n".as_bytes()).unwrap().is_empty());
    }
}
