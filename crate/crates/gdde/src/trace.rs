//! Per-evaluation run traces and their CSV serialization.
//!
//! One record per real objective evaluation, in evaluation order. The CSV
//! schema is `eval_index,stage,fitness,x_0,...,x_{d-1}` with a 1-based
//! `eval_index` and floats printed with Rust's shortest-roundtrip `Display`,
//! so a parsed file reproduces the original values bit for bit.

use crate::error::{Error, Result};
use crate::problem::Stage;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// One real objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based position in evaluation order.
    pub eval_index: usize,
    pub stage: Stage,
    pub fitness: f64,
    pub x: Vec<f64>,
}

/// Evaluation-ordered trace of a whole run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Running maximum of fitness by evaluation order (convergence curve).
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.max(r.fitness);
                best
            })
            .collect()
    }

    /// Writes the trace as CSV. Every record must share one dimensionality.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dims = match self.records.first() {
            Some(r) => r.x.len(),
            None => 0,
        };
        let mut line = String::from("eval_index,stage,fitness");
        for d in 0..dims {
            write!(line, ",x_{d}").expect("string write cannot fail");
        }
        line.push('\n');
        for r in &self.records {
            if r.x.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: r.x.len(),
                });
            }
            write!(line, "{},{},{}", r.eval_index, r.stage, r.fitness)
                .expect("string write cannot fail");
            for v in &r.x {
                write!(line, ",{v}").expect("string write cannot fail");
            }
            line.push('\n');
        }
        out.write_all(line.as_bytes())?;
        Ok(())
    }

    /// Parses a CSV produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trace file".into()))??;
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() < 3
            || columns[0] != "eval_index"
            || columns[1] != "stage"
            || columns[2] != "fitness"
        {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let dims = columns.len() - 3;
        let mut trace = RunTrace::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dims + 3 {
                return Err(Error::Parse(format!(
                    "trace row has {} fields, expected {}",
                    fields.len(),
                    dims + 3
                )));
            }
            let eval_index: usize = fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad eval_index {:?}: {e}", fields[0])))?;
            let stage: Stage = fields[1].parse()?;
            let fitness: f64 = fields[2]
                .parse()
                .map_err(|e| Error::Parse(format!("bad fitness {:?}: {e}", fields[2])))?;
            let mut x = Vec::with_capacity(dims);
            for field in &fields[3..] {
                x.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad coordinate {field:?}: {e}")))?,
                );
            }
            trace.push(TraceRecord {
                eval_index,
                stage,
                fitness,
                x,
            });
        }
        Ok(trace)
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }
}
