use std::path::Path;

use super::{Annotation, DatasetError};
use crate::detection::BBox;

/// Parses `class_id cx cy w h` lines; blank lines are skipped.
pub fn parse_annotations(text: &str, path: &Path) -> Result<Vec<Annotation>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::MalformedAnnotation {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(malformed(format!(
                "expected 5 fields, found {}",
                fields.len()
            )));
        }
        let class_id: u32 = fields[0].parse().map_err(|_| {
            malformed(format!(
                "class id {:?} is not a non-negative integer",
                fields[0]
            ))
        })?;
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| malformed(format!("{field:?} is not a number")))?;
        }
        let [cx, cy, w, h] = v;
        if !(w > 0.0 && h > 0.0) {
            return Err(malformed(format!("box size {w} x {h} must be positive")));
        }
        let bbox = BBox::new(cx, cy, w, h).map_err(malformed)?;
        out.push(Annotation { class_id, bbox });
    }
    Ok(out)
}

pub fn read_label_file(path: &Path) -> Result<Vec<Annotation>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(DatasetError::io(path))?;
    parse_annotations(&text, path)
}

/// Inverse of [`parse_annotations`]; numbers use their shortest exact form.
pub fn format_annotations(annotations: &[Annotation]) -> String {
    annotations
        .iter()
        .map(|a| {
            format!(
                "{} {} {} {} {}\n",
                a.class_id, a.bbox.cx, a.bbox.cy, a.bbox.w, a.bbox.h
            )
        })
        .collect()
}
