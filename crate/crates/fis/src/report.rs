//! CSV artifacts. Floats use nine significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use fis_core::diagnostics::DiagnosticsReport;
use fis_core::model::FlopsLedger;

use crate::experiments::{AblationCell, Check};
use crate::manifest::RunManifest;

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)
}

pub fn float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Accumulates CSV rows behind the manifest comment line.
pub struct Table {
    buf: Vec<u8>,
}

impl Table {
    pub fn new(manifest: &RunManifest, columns: &[&str]) -> Self {
        let mut buf = manifest.header_line().into_bytes();
        buf.extend_from_slice(columns.join(",").as_bytes());
        buf.push(b'\n');
        Self { buf }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(fields).expect("writing to memory");
        self.buf.extend(w.into_inner().expect("flushing to memory"));
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, &self.buf)
    }
}

pub fn ledger_table(manifest: &RunManifest, ledger: &FlopsLedger) -> Table {
    let mut t = Table::new(
        manifest,
        &[
            "step",
            "block",
            "gated",
            "token_count",
            "attn_madds",
            "ffn_madds",
        ],
    );
    for e in &ledger.entries {
        t.row([
            e.step.to_string(),
            e.block.to_string(),
            e.gated.to_string(),
            e.token_count.to_string(),
            e.attn_madds.to_string(),
            e.ffn_madds.to_string(),
        ]);
    }
    t
}

pub fn per_frame_error_table(manifest: &RunManifest, errors: &[f64]) -> Table {
    let mut t = Table::new(manifest, &["frame", "error"]);
    for (i, e) in errors.iter().enumerate() {
        t.row([i.to_string(), float(*e)]);
    }
    t
}

pub fn rel_change_table(manifest: &RunManifest, report: &DiagnosticsReport) -> Table {
    let mut t = Table::new(
        manifest,
        &["block", "step", "prompt", "frame_i", "delta_rel"],
    );
    for (key, curve) in &report.rel_change_curves {
        for (i, v) in curve.iter().enumerate() {
            t.row([
                key.block.to_string(),
                key.step.to_string(),
                key.prompt.to_string(),
                i.to_string(),
                float(*v),
            ]);
        }
    }
    t
}

pub fn cv_table(manifest: &RunManifest, report: &DiagnosticsReport) -> Table {
    let mut t = Table::new(manifest, &["block", "step", "mean_cv"]);
    for e in &report.cv_matrix {
        t.row([e.block.to_string(), e.step.to_string(), float(e.mean_cv)]);
    }
    t
}

pub fn ablation_table(manifest: &RunManifest, cells: &[AblationCell]) -> Table {
    let mut t = Table::new(
        manifest,
        &[
            "grid",
            "cell",
            "stride_n",
            "interleave",
            "sensitive_blocks",
            "tail_steps",
            "seeds",
            "mean_error",
            "dense_madds",
            "sparse_madds",
            "speedup",
        ],
    );
    for c in cells {
        let sensitive: Vec<String> = c.sensitive_blocks.iter().map(usize::to_string).collect();
        t.row([
            c.grid.to_string(),
            c.cell.clone(),
            c.stride_n.to_string(),
            c.interleave.to_string(),
            sensitive.join(" "),
            c.tail_steps.to_string(),
            c.seeds.to_string(),
            float(c.mean_error),
            c.dense_madds.to_string(),
            c.sparse_madds.to_string(),
            float(c.speedup),
        ]);
    }
    t
}

/// `metric,value` rows followed by named checks.
pub fn summary_table(
    manifest: &RunManifest,
    metrics: &[(String, String)],
    checks: &[Check],
) -> Table {
    let mut t = Table::new(manifest, &["metric", "value"]);
    for (k, v) in metrics {
        t.row([k, v]);
    }
    for c in checks {
        t.row([
            format!("check:{}", c.name),
            if c.passed {
                "pass".into()
            } else {
                format!("FAIL ({})", c.detail)
            },
        ]);
    }
    t
}
