use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{read_corpus, thread_pool, CorpusRow, PipelineConfig, PipelineError};
use crate::descriptors::{prepare, DescriptorEngine, DescriptorRecord};
use crate::fg::{FunctionalGroupLibrary, PrevalenceCounter, PrevalenceTable};
use crate::smiles::parse_smiles;
use crate::tiering::{assign_tier, tier_histogram};

pub(crate) fn load_library(cfg: &PipelineConfig) -> Result<FunctionalGroupLibrary, PipelineError> {
    match &cfg.library {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
            Ok(FunctionalGroupLibrary::from_tsv(&text)?)
        }
        None => Ok(FunctionalGroupLibrary::default_library()),
    }
}

pub(crate) fn load_prevalence(path: &Path) -> Result<PrevalenceTable, PipelineError> {
    let file = File::open(path).map_err(PipelineError::io(path))?;
    Ok(PrevalenceTable::read_tsv(std::io::BufReader::new(file))?)
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(PipelineError::io(path))?))
}

fn write_prevalence_files(
    dir: &Path,
    table: &PrevalenceTable,
    top: &[String],
) -> Result<(PathBuf, PathBuf), PipelineError> {
    let table_path = dir.join("prevalence.tsv");
    let mut out = create(&table_path)?;
    table.write_tsv(&mut out).map_err(PipelineError::io(&table_path))?;
    out.flush().map_err(PipelineError::io(&table_path))?;

    let top_path = dir.join("top_groups.txt");
    let mut out = create(&top_path)?;
    for name in top {
        writeln!(out, "{name}").map_err(PipelineError::io(&top_path))?;
    }
    out.flush().map_err(PipelineError::io(&top_path))?;
    Ok((table_path, top_path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrevalenceReport {
    pub table: PrevalenceTable,
    pub top: Vec<String>,
    pub molecules: u64,
    pub skipped: usize,
    pub table_path: PathBuf,
    pub top_path: PathBuf,
}

/// Computes the corpus prevalence table and writes `prevalence.tsv` and
/// `top_groups.txt` to the output directory.
pub fn cmd_prevalence(cfg: &PipelineConfig) -> Result<PrevalenceReport, PipelineError> {
    cfg.log_run("prevalence");
    cfg.validate()?;
    let path = cfg.input_path()?;
    let rows = read_corpus(path, &cfg.input_format()?)?;
    let library = load_library(cfg)?;
    let pool = thread_pool(cfg.workers)?;
    let partials: Vec<(PrevalenceCounter, usize)> = pool.install(|| {
        rows.par_chunks(cfg.chunk_size)
            .map(|chunk| {
                let mut counter = PrevalenceCounter::new(library.len());
                let mut skipped = 0;
                for row in chunk {
                    match parse_smiles(&row.smiles) {
                        Ok(g) => counter.add(&library.present_groups(&prepare(&g).0)),
                        Err(e) => {
                            log::debug!("row {}: {e}", row.id);
                            skipped += 1;
                        }
                    }
                }
                (counter, skipped)
            })
            .collect()
    });
    let mut counter = PrevalenceCounter::new(library.len());
    let mut skipped = 0;
    for (c, s) in &partials {
        counter.merge(c);
        skipped += s;
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} unparseable rows");
    }
    let table = counter.finish(&library)?;
    let top = table.top_k(cfg.tier.top_k);
    let (table_path, top_path) = write_prevalence_files(&cfg.output_dir, &table, &top)?;
    Ok(PrevalenceReport {
        molecules: counter.molecules(),
        table,
        top,
        skipped,
        table_path,
        top_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotateReport {
    pub written: usize,
    pub skipped: usize,
    pub histogram: [u64; 5],
    pub output: PathBuf,
    /// Set when the prevalence table was computed in this run.
    pub prevalence_path: Option<PathBuf>,
}

/// Annotated records in row order, the number of skipped rows and the
/// prevalence table used.
///
/// Without `table`, the table is computed from the same rows first
/// (two-phase: descriptors and group sets, then rarity and tiers).
pub fn annotate_rows(
    rows: &[CorpusRow],
    cfg: &PipelineConfig,
    library: &FunctionalGroupLibrary,
    table: Option<&PrevalenceTable>,
) -> Result<(Vec<DescriptorRecord>, usize, PrevalenceTable), PipelineError> {
    let pool = thread_pool(cfg.workers)?;
    let partial = DescriptorEngine::without_prevalence(library.clone());
    let chunks: Vec<Vec<Option<DescriptorRecord>>> = pool.install(|| {
        rows.par_chunks(cfg.chunk_size)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|row| {
                        let result = parse_smiles(&row.smiles)
                            .map_err(|e| e.to_string())
                            .and_then(|g| partial.compute(&g).map_err(|e| e.to_string()));
                        match result {
                            Ok(mut record) => {
                                record.id = row.id;
                                Some(record)
                            }
                            Err(e) => {
                                log::debug!("row {}: {e}", row.id);
                                None
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    });
    let total = rows.len();
    let mut records: Vec<DescriptorRecord> = chunks.into_iter().flatten().flatten().collect();
    let skipped = total - records.len();
    if skipped > 0 {
        log::warn!("skipped {skipped} unparseable rows");
    }

    let table = match table {
        Some(t) => t.clone(),
        None => {
            let mut counter = PrevalenceCounter::new(library.len());
            for r in &records {
                let present: Vec<usize> = r.fg_names.iter().filter_map(|n| library.index_of(n)).collect();
                counter.add(&present);
            }
            counter.finish(library)?
        }
    };
    let engine = partial.with_table(&table)?;
    let top: HashSet<String> = table.top_k(cfg.tier.top_k).into_iter().collect();
    pool.install(|| {
        records.par_iter_mut().for_each(|r| {
            r.rarity = engine.rarity_of(r);
            r.tier = Some(assign_tier(r, &top, &cfg.tier).tier);
        })
    });
    Ok((records, skipped, table))
}

/// Writes `annotated.jsonl` (one record per parseable row, input order) to
/// the output directory.
pub fn cmd_annotate(cfg: &PipelineConfig) -> Result<AnnotateReport, PipelineError> {
    cfg.log_run("annotate");
    cfg.validate()?;
    let path = cfg.input_path()?;
    let rows = read_corpus(path, &cfg.input_format()?)?;
    let library = load_library(cfg)?;
    let given = cfg.prevalence.as_deref().map(load_prevalence).transpose()?;

    let output = cfg.output_dir.join("annotated.jsonl");
    let mut out = create(&output)?;
    if rows.is_empty() {
        out.flush().map_err(PipelineError::io(&output))?;
        return Ok(AnnotateReport {
            written: 0,
            skipped: 0,
            histogram: [0; 5],
            output,
            prevalence_path: None,
        });
    }

    let (records, skipped, table) = annotate_rows(&rows, cfg, &library, given.as_ref())?;
    for r in &records {
        serde_json::to_writer(&mut out, r).map_err(|e| PipelineError::io(&output)(e.into()))?;
        out.write_all(b"\n").map_err(PipelineError::io(&output))?;
    }
    out.flush().map_err(PipelineError::io(&output))?;

    let prevalence_path = if given.is_none() {
        let top = table.top_k(cfg.tier.top_k);
        Some(write_prevalence_files(&cfg.output_dir, &table, &top)?.0)
    } else {
        None
    };
    Ok(AnnotateReport {
        written: records.len(),
        skipped,
        histogram: tier_histogram(records.iter().filter_map(|r| r.tier)),
        output,
        prevalence_path,
    })
}
