use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::validation::SampleKind;

/// First line of a samples file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesHeader {
    pub kind: SampleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl SamplesHeader {
    pub fn raw(m: usize) -> Self {
        Self { kind: SampleKind::RawOccupations, m: Some(m), k: None }
    }

    pub fn binned(k: usize) -> Self {
        Self { kind: SampleKind::BinnedCounts, m: None, k: Some(k) }
    }

    /// Entries per record.
    pub fn width(&self) -> Option<usize> {
        match self.kind {
            SampleKind::RawOccupations => self.m,
            SampleKind::BinnedCounts => self.k,
        }
    }
}

/// A record and the 1-based file line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub line: usize,
    pub values: Vec<usize>,
}

/// Parsed samples file. An empty file has no header and no records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplesFile {
    pub header: Option<SamplesHeader>,
    pub header_line: usize,
    pub records: Vec<Record>,
}

/// Read a header line followed by one JSON array per line. Blank lines are
/// skipped; every record must have the width the header declares.
pub fn read_samples(reader: impl BufRead) -> Result<SamplesFile> {
    let mut header: Option<(SamplesHeader, usize)> = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Ingestion { line: line_no, message: e.to_string() })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match &header {
            None => {
                let h: SamplesHeader = serde_json::from_str(text)
                    .map_err(|e| Error::Ingestion { line: line_no, message: format!("bad header: {e}") })?;
                match h.width() {
                    Some(w) if w > 0 => {}
                    _ => {
                        return Err(Error::Ingestion {
                            line: line_no,
                            message: "header needs a positive \"m\" (raw) or \"K\" (binned)".into(),
                        })
                    }
                }
                if h.m.is_some() && h.k.is_some() {
                    return Err(Error::Ingestion {
                        line: line_no,
                        message: "header declares both \"m\" and \"K\"".into(),
                    });
                }
                header = Some((h, line_no));
            }
            Some((h, _)) => {
                let values: Vec<usize> = serde_json::from_str(text).map_err(|e| Error::Ingestion {
                    line: line_no,
                    message: format!("expected an array of counts: {e}"),
                })?;
                let width = h.width().expect("checked on header");
                if values.len() != width {
                    return Err(Error::Ingestion {
                        line: line_no,
                        message: format!("record has {} entries, header declares {width}", values.len()),
                    });
                }
                records.push(Record { line: line_no, values });
            }
        }
    }
    Ok(match header {
        Some((h, line)) => SamplesFile { header: Some(h), header_line: line, records },
        None => SamplesFile { header: None, header_line: 0, records },
    })
}

pub fn write_samples(mut out: impl Write, header: &SamplesHeader, records: &[Vec<usize>]) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(header)?)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_header_and_records() {
        let text = "{\"kind\":\"raw_occupations\",\"m\":3}\n[1,0,1]\n\n[0,2,0]\n";
        let f = read_samples(text.as_bytes()).unwrap();
        assert_eq!(f.header, Some(SamplesHeader::raw(3)));
        assert_eq!(f.records[1], Record { line: 4, values: vec![0, 2, 0] });
    }

    #[test]
    fn empty_file() {
        let f = read_samples("".as_bytes()).unwrap();
        assert!(f.header.is_none() && f.records.is_empty());
    }

    #[test]
    fn names_offending_line() {
        let text = "{\"kind\":\"binned_counts\",\"K\":2}\n[1,1]\n[2]\n";
        match read_samples(text.as_bytes()) {
            Err(Error::Ingestion { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        for bad in ["{\"kind\":\"raw_occupations\"}\n", "{\"kind\":\"binned_counts\",\"K\":2}\n[1,-1]\n", "[1]\n"] {
            assert!(matches!(read_samples(bad.as_bytes()), Err(Error::Ingestion { .. })), "{bad}");
        }
    }

    #[test]
    fn write_then_read() {
        let mut buf = Vec::new();
        write_samples(&mut buf, &SamplesHeader::binned(2), &[vec![1, 0], vec![0, 1]]).unwrap();
        let f = read_samples(buf.as_slice()).unwrap();
        assert_eq!(f.header, Some(SamplesHeader::binned(2)));
        assert_eq!(f.records.len(), 2);
    }
}
