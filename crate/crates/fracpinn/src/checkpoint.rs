//! Plain-text network checkpoints.
//!
//! ```text
//! fracpinn-checkpoint 1
//! layers 2 20 20 20 1
//! <parameter>
//! <parameter>
//! ...
//! ```
//!
//! Parameters follow, one per line, in the network's flat order (per layer:
//! row-major weights `[out][in]`, then biases), written in the shortest
//! decimal form that parses back to the identical `f64`.

use std::fmt::Write as _;
use std::path::Path;

use fracpinn_core::Network;

use crate::error::{AppError, Result};
use crate::format::full;
use crate::output::write_atomic;

const MAGIC: &str = "fracpinn-checkpoint 1";

pub fn to_string(net: &Network) -> String {
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    s.push_str("layers");
    for w in net.layer_sizes() {
        let _ = write!(s, " {w}");
    }
    s.push('\n');
    for &p in net.parameters() {
        s.push_str(&full(p));
        s.push('\n');
    }
    s
}

pub fn parse(text: &str) -> std::result::Result<Network, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err("missing checkpoint header".into());
    }
    let sizes: Vec<usize> = lines
        .next()
        .and_then(|l| l.strip_prefix("layers "))
        .ok_or("missing layers line")?
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| format!("bad layer width {w:?}")))
        .collect::<std::result::Result<_, _>>()?;
    let params: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| format!("bad parameter {i}: {l:?}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    Network::from_parameters(&sizes, params).map_err(|e| e.to_string())
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    write_atomic(path, to_string(net).as_bytes())
}

pub fn load(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(AppError::io(path))?;
    parse(&text).map_err(|m| AppError::format(path, m))
}
