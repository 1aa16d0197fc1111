//! Text format for network descriptions.
//!
//! ```text
//! # comments run to end of line
//! network lenet5
//! conv k=5 s=1 n=1 m=6 ifm=32 relu
//! pool k=2 s=2
//! conv k=5 s=1 n=6 m=16 ifm=14 relu
//! pool k=2 s=2
//! ```
//!
//! The first significant line names the network; each following line is one
//! layer: `conv` with `k= s= m=` plus a trailing `relu` flag, or `pool` with
//! `k= s=`. `ifm=` is required on the first layer and `n=` on the first
//! conv; later layers inherit both from the layer above, and stating them
//! anyway is checked against the chain. Errors carry line and column.

use thiserror::Error;

use crate::net::{LayerKind, LayerSpec, NetError, NetworkSpec};

#[derive(Debug, Error)]
pub enum NetfileError {
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Net(#[from] NetError),
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, NetfileError> {
    Err(NetfileError::Parse { line, col, msg: msg.into() })
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

struct Fields {
    k: Option<usize>,
    s: Option<usize>,
    n: Option<usize>,
    m: Option<usize>,
    ifm: Option<usize>,
    relu: bool,
}

fn parse_fields(
    kind: LayerKind,
    line: usize,
    toks: &[(usize, &str)],
) -> Result<Fields, NetfileError> {
    let mut f = Fields { k: None, s: None, n: None, m: None, ifm: None, relu: false };
    for &(col, tok) in toks {
        if tok == "relu" {
            if kind == LayerKind::Pool {
                return err(line, col, "pooling layers take no `relu` flag");
            }
            if f.relu {
                return err(line, col, "duplicate `relu` flag");
            }
            f.relu = true;
            continue;
        }
        let Some((key, value)) = tok.split_once('=') else {
            return err(line, col, format!("expected `key=value` or `relu`, found `{tok}`"));
        };
        let slot = match key {
            "k" => &mut f.k,
            "s" => &mut f.s,
            "n" => &mut f.n,
            "m" if kind == LayerKind::Conv => &mut f.m,
            "ifm" => &mut f.ifm,
            _ => return err(line, col, format!("unknown field `{key}`")),
        };
        if slot.is_some() {
            return err(line, col, format!("duplicate field `{key}`"));
        }
        let parsed: usize = match value.parse() {
            Ok(v) if v > 0 => v,
            _ => return err(line, col, format!("`{key}` wants a positive integer, found `{value}`")),
        };
        *slot = Some(parsed);
    }
    Ok(f)
}

fn require(
    field: Option<usize>,
    name: &str,
    line: usize,
    col: usize,
) -> Result<usize, NetfileError> {
    field.ok_or(()).or_else(|_| err(line, col, format!("missing `{name}=`")))
}

/// Parses a network description, returning the validated network.
pub fn parse_network(text: &str) -> Result<NetworkSpec, NetfileError> {
    let mut name: Option<String> = None;
    let mut layers: Vec<LayerSpec> = Vec::new();
    // Shape flowing out of the last parsed layer, for inherited fields.
    let mut carry: Option<(Option<usize>, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks = tokens(body);
        let Some(&(col, head)) = toks.first() else { continue };

        if name.is_none() {
            if head != "network" {
                return err(line, col, format!("expected `network <name>`, found `{head}`"));
            }
            match toks.len() {
                1 => return err(line, col + head.len(), "missing network name"),
                2 => name = Some(toks[1].1.to_string()),
                _ => return err(line, toks[2].0, "network name must be a single word"),
            }
            continue;
        }

        let kind = match head {
            "conv" => LayerKind::Conv,
            "pool" => LayerKind::Pool,
            _ => return err(line, col, format!("expected `conv` or `pool`, found `{head}`")),
        };
        let f = parse_fields(kind, line, &toks[1..])?;
        let k = require(f.k, "k", line, col)?;
        let s = require(f.s, "s", line, col)?;
        let (carry_ofm, carry_ch) = carry.unwrap_or((None, 0));
        let ifm = match f.ifm.or(carry_ofm) {
            Some(v) => v,
            None if layers.is_empty() => return err(line, col, "first layer must state `ifm=`"),
            None => {
                return err(line, col, "cannot infer `ifm=`: the layer above does not tile")
            }
        };
        let layer = match kind {
            LayerKind::Conv => {
                let n = match f.n {
                    Some(v) => v,
                    None if layers.is_empty() => {
                        return err(line, col, "first conv must state `n=`")
                    }
                    None => carry_ch,
                };
                let m = require(f.m, "m", line, col)?;
                LayerSpec::conv(k, s, n, m, ifm, f.relu)
            }
            LayerKind::Pool => {
                let ch = match f.n {
                    Some(v) => v,
                    None if layers.is_empty() => {
                        return err(line, col, "a leading pool must state `n=`")
                    }
                    None => carry_ch,
                };
                LayerSpec::pool(k, s, ch, ifm)
            }
        };
        carry = Some((layer.ofm(), layer.m_out));
        layers.push(layer);
    }

    let Some(name) = name else {
        return err(1, 1, "empty description: expected `network <name>`");
    };
    Ok(NetworkSpec::new(name, layers)?)
}
