use std::collections::HashSet;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{LabeledFrameRecord, LabelingError, UNLABELED};

pub const MANIFEST_FORMAT: &str = "csv:frame_path,label";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetManifest {
    pub format: String,
    pub rows: Vec<(String, String)>,
}

impl DatasetManifest {
    /// Build rows from records, dropping unlabeled frames.
    pub fn from_records(records: &[LabeledFrameRecord]) -> Result<Self, LabelingError> {
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for r in records.iter().filter(|r| r.label != UNLABELED) {
            for field in [&r.frame_path, &r.label] {
                if field.is_empty() || field.contains([',', '\n', '\r', '"']) {
                    return Err(LabelingError::Record(format!(
                        "field `{field}` cannot be written to the manifest"
                    )));
                }
            }
            if !seen.insert(r.frame_path.as_str()) {
                return Err(LabelingError::DuplicatePath(r.frame_path.clone()));
            }
            rows.push((r.frame_path.clone(), r.label.clone()));
        }
        if rows.is_empty() {
            return Err(LabelingError::EmptyDataset);
        }
        Ok(DatasetManifest {
            format: MANIFEST_FORMAT.into(),
            rows,
        })
    }

    pub fn render(&self) -> String {
        render_manifest(&self.rows)
    }
}

/// `frame_path,label` per line, LF endings, no header.
pub fn render_manifest(rows: &[(String, String)]) -> String {
    let mut out = String::with_capacity(rows.len() * 48);
    for (path, label) in rows {
        out.push_str(path);
        out.push(',');
        out.push_str(label);
        out.push('\n');
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<(String, String)>, LabelingError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| match line.split_once(',') {
            Some((p, l)) if !p.is_empty() && !l.is_empty() && !l.contains(',') => {
                Ok((p.to_string(), l.to_string()))
            }
            _ => Err(LabelingError::Manifest {
                line: i + 1,
                reason: format!("expected `frame_path,label`, got `{line}`"),
            }),
        })
        .collect()
}

/// Write the manifest atomically: either the full file appears at
/// `destination` or nothing does.
pub fn export_manifest(
    records: &[LabeledFrameRecord],
    destination: &Path,
) -> Result<DatasetManifest, LabelingError> {
    let manifest = DatasetManifest::from_records(records)?;
    let file_name = destination
        .file_name()
        .ok_or_else(|| LabelingError::Config(format!("{} is not a file path", destination.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".partial");
    let tmp = destination.with_file_name(tmp_name);
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(manifest.render().as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, destination)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(manifest)
}
