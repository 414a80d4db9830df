use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{InputFormat, PipelineError};
use crate::descriptors::DescriptorRecord;

/// One data row of a corpus file. `id` is the 0-based index among
/// non-empty data rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRow {
    pub id: u64,
    pub smiles: String,
}

pub fn read_corpus(path: &Path, format: &InputFormat) -> Result<Vec<CorpusRow>, PipelineError> {
    match format {
        InputFormat::Smi => read_smi(path),
        InputFormat::Delimited { delimiter, column } => read_delimited(path, *delimiter, column),
    }
}

fn read_smi(path: &Path) -> Result<Vec<CorpusRow>, PipelineError> {
    let file = File::open(path).map_err(PipelineError::io(path))?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(PipelineError::io(path))?;
        let Some(smiles) = line.split_whitespace().next() else {
            continue;
        };
        rows.push(CorpusRow {
            id: rows.len() as u64,
            smiles: smiles.to_string(),
        });
    }
    Ok(rows)
}

fn read_delimited(path: &Path, delimiter: u8, column: &str) -> Result<Vec<CorpusRow>, PipelineError> {
    let csv_err = |source| PipelineError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(column))
        .ok_or_else(|| PipelineError::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        // a short row keeps its id and fails to parse later
        let smiles = record.get(col).unwrap_or("").trim().to_string();
        rows.push(CorpusRow {
            id: rows.len() as u64,
            smiles,
        });
    }
    Ok(rows)
}

/// Reads an annotated JSON-lines file.
pub fn read_annotated(path: &Path) -> Result<Vec<DescriptorRecord>, PipelineError> {
    let file = File::open(path).map_err(PipelineError::io(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(PipelineError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DescriptorRecord = serde_json::from_str(&line).map_err(|e| PipelineError::BadRecord {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn smi_and_csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let smi = dir.path().join("a.smi");
        std::fs::write(&smi, "CCO ethanol\n\nc1ccccc1\n").unwrap();
        let rows = read_corpus(&smi, &InputFormat::Smi).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], CorpusRow { id: 1, smiles: "c1ccccc1".into() });

        let csv = dir.path().join("a.csv");
        let mut f = File::create(&csv).unwrap();
        writeln!(f, "name,SMILES\nx,CC\ny,\"C(=O)O\"").unwrap();
        let rows = read_corpus(&csv, &InputFormat::for_path(&csv)).unwrap();
        assert_eq!(rows.iter().map(|r| r.smiles.as_str()).collect::<Vec<_>>(), ["CC", "C(=O)O"]);

        let bad = InputFormat::Delimited {
            delimiter: b',',
            column: "smi".into(),
        };
        assert!(matches!(read_corpus(&csv, &bad), Err(PipelineError::MissingColumn { .. })));
    }
}
