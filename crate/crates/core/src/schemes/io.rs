//! Plain-text scheme files: one `gx gy gz b` line per direction, `#`
//! comments, LF newlines. A `# name: <label>` comment names the scheme.

use std::fmt::Write as _;
use std::path::Path;

use super::{GradientScheme, SchemeError};

pub fn scheme_to_string(scheme: &GradientScheme) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# name: {}", scheme.name());
    let _ = writeln!(out, "# gx gy gz b");
    for d in scheme.dirs() {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e} {}", d[0], d[1], d[2], scheme.b());
    }
    out
}

pub fn parse_scheme(text: &str, default_name: &str) -> Result<GradientScheme, SchemeError> {
    let mut name = default_name.to_string();
    let mut dirs = Vec::new();
    let mut b_value: Option<f64> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("name:") {
                name = n.trim().to_string();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| SchemeError::Parse { line: lineno + 1, msg: e.to_string() })?;
        if fields.len() != 4 {
            return Err(SchemeError::Parse {
                line: lineno + 1,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        match b_value {
            None => b_value = Some(fields[3]),
            Some(b) if b != fields[3] => {
                return Err(SchemeError::Parse {
                    line: lineno + 1,
                    msg: format!("multi-shell schemes are not supported (b {} vs {})", b, fields[3]),
                })
            }
            _ => {}
        }
        dirs.push([fields[0], fields[1], fields[2]]);
    }
    let b = b_value.ok_or(SchemeError::Parse { line: 0, msg: "no directions".into() })?;
    GradientScheme::new(name, b, dirs)
}

pub fn read_scheme(path: &Path) -> Result<GradientScheme, SchemeError> {
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scheme");
    parse_scheme(&text, stem)
}

pub fn write_scheme(path: &Path, scheme: &GradientScheme) -> Result<(), SchemeError> {
    std::fs::write(path, scheme_to_string(scheme))?;
    Ok(())
}
