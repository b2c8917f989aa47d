//! `SIFTv1` feature files: a `SIFTv1 <count>` header line followed by one JSON
//! object per feature, `{"kp":[x,y,sigma,ori,resp],"d":[...128 values]}`,
//! numbers written with 9 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{Descriptor, Feature, DESCRIPTOR_LEN};
use crate::error::{Error, Result};

const MAGIC: &str = "SIFTv1";

/// Shortest decimal with at most 9 significant digits, `%.9g` style.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, v);
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_features(features: &[Feature]) -> String {
    let mut out = format!("{MAGIC} {}\n", features.len());
    for f in features {
        out.push_str("{\"kp\":[");
        let kp = [f.x, f.y, f.sigma, f.orientation, f.response];
        for (i, v) in kp.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_sig9(*v));
        }
        out.push_str("],\"d\":[");
        for (i, v) in f.descriptor.values().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_sig9(f64::from(*v)));
        }
        out.push_str("]}\n");
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kp: [f64; 5],
    d: Vec<f32>,
}

pub fn parse_features(text: &str, path: &Path) -> Result<Vec<Feature>> {
    let err = |line: usize, message: String| Error::FeatureFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let count: usize = match header.split_once(' ') {
        Some((MAGIC, n)) => n.trim().parse().map_err(|_| err(1, format!("bad count `{n}`")))?,
        _ => return Err(err(1, format!("expected `{MAGIC} <count>` header"))),
    };
    let mut features = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| err(lineno, e.to_string()))?;
        if rec.d.len() != DESCRIPTOR_LEN {
            return Err(err(lineno, format!("descriptor has {} values", rec.d.len())));
        }
        let mut values = [0.0f32; DESCRIPTOR_LEN];
        values.copy_from_slice(&rec.d);
        let descriptor = Descriptor::new(values).map_err(|e| err(lineno, e.to_string()))?;
        let [x, y, sigma, orientation, response] = rec.kp;
        features.push(Feature {
            x,
            y,
            sigma,
            orientation,
            response,
            descriptor,
        });
    }
    if features.len() != count {
        return Err(err(1, format!("header declares {count} features, found {}", features.len())));
    }
    Ok(features)
}

pub fn write_features(path: &Path, features: &[Feature]) -> Result<()> {
    std::fs::write(path, render_features(features)).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<Vec<Feature>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text, path)
}
