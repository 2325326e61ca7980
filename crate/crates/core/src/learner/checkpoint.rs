//! Plain-text parameter dump: a header line, the layer sizes, then one
//! parameter per line in shortest round-trip decimal form.

use std::fs;
use std::path::Path;

use super::{LearnerError, QNetwork};

const MAGIC: &str = "pdlight-qnet v1";

pub fn to_text(net: &QNetwork) -> String {
    let mut out = String::with_capacity(net.param_count() * 24 + 64);
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str("sizes");
    for s in net.layer_sizes() {
        out.push(' ');
        out.push_str(&s.to_string());
    }
    out.push('\n');
    for p in net.params() {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<QNetwork, LearnerError> {
    let bad = |what: String| LearnerError::Checkpoint(what);
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header".into()));
    }
    let sizes_line = lines.next().ok_or_else(|| bad("missing layer sizes".into()))?;
    let sizes = sizes_line
        .strip_prefix("sizes")
        .ok_or_else(|| bad("missing layer sizes".into()))?
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|_| bad(format!("bad layer size `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut net = QNetwork::zeros(&sizes)?;
    let params = lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| l.parse::<f64>().map_err(|_| bad(format!("bad parameter {i}: `{l}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    net.set_params(&params)?;
    if !net.all_finite() {
        return Err(bad("non-finite parameter".into()));
    }
    Ok(net)
}

pub fn save(net: &QNetwork, path: impl AsRef<Path>) -> Result<(), LearnerError> {
    fs::write(path, to_text(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<QNetwork, LearnerError> {
    from_text(&fs::read_to_string(path)?)
}
