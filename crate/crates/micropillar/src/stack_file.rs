//! Layer-stack description files.
//!
//! ```text
//! # top mirror, cavity, bottom mirror
//! ambient 1.0
//! repeat 15 {
//!   layer 3.5 67.857
//!   layer 2.95 80.508
//! }
//! layer 3.5 0.002 271.43    # real index, extinction, thickness in nm
//! substrate 3.5
//! ```
//!
//! `ambient` and `substrate` default to 1.0. `repeat` blocks nest.

use std::path::Path;

use micropillar_core::multilayer::{Layer, LayerStack};
use micropillar_core::num_complex::Complex64;

use crate::FormatError;

pub fn parse(text: &str, source_name: &str) -> Result<LayerStack, FormatError> {
    let err = |line: usize, msg: String| FormatError::new(source_name, line, msg);
    let mut ambient = None;
    let mut substrate = None;
    // Each open block: (repeat count, layers collected so far, opening line).
    let mut blocks: Vec<(usize, Vec<Layer>, usize)> = vec![(1, Vec::new(), 0)];

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let number = |w: &str| -> Result<f64, FormatError> {
            w.parse::<f64>()
                .map_err(|_| err(line, format!("'{w}' is not a number")))
        };
        match words[0] {
            "ambient" | "substrate" => {
                if words.len() != 2 {
                    return Err(err(line, format!("expected '{} <index>'", words[0])));
                }
                if blocks.len() > 1 {
                    return Err(err(line, format!("'{}' inside a repeat block", words[0])));
                }
                let slot = if words[0] == "ambient" {
                    &mut ambient
                } else {
                    &mut substrate
                };
                let n = number(words[1])?;
                if !(n >= 1.0 && n.is_finite()) {
                    return Err(err(line, format!("{} index must be >= 1", words[0])));
                }
                if slot.replace(n).is_some() {
                    return Err(err(line, format!("'{}' given twice", words[0])));
                }
            }
            "layer" => {
                let (re, im, thk) = match words.len() {
                    3 => (number(words[1])?, 0.0, number(words[2])?),
                    4 => (number(words[1])?, number(words[2])?, number(words[3])?),
                    _ => {
                        return Err(err(
                            line,
                            "expected 'layer <index_re> [index_im] <thickness_nm>'".into(),
                        ))
                    }
                };
                let layer = Layer::new(Complex64::new(re, im), thk).map_err(|e| err(line, e.to_string()))?;
                blocks.last_mut().unwrap().1.push(layer);
            }
            "repeat" => {
                if words.len() != 3 || words[2] != "{" {
                    return Err(err(line, "expected 'repeat <count> {'".into()));
                }
                let count = words[1]
                    .parse::<usize>()
                    .map_err(|_| err(line, format!("'{}' is not a repeat count", words[1])))?;
                blocks.push((count, Vec::new(), line));
            }
            "}" => {
                if words.len() != 1 || blocks.len() == 1 {
                    return Err(err(line, "unmatched '}'".into()));
                }
                let (count, body, _) = blocks.pop().unwrap();
                let parent = &mut blocks.last_mut().unwrap().1;
                for _ in 0..count {
                    parent.extend_from_slice(&body);
                }
            }
            other => return Err(err(line, format!("unknown directive '{other}'"))),
        }
    }
    if blocks.len() > 1 {
        let open = blocks.last().unwrap().2;
        return Err(err(open, "repeat block is never closed".into()));
    }
    let layers = blocks.pop().unwrap().1;
    LayerStack::new(ambient.unwrap_or(1.0), layers, substrate.unwrap_or(1.0))
        .map_err(|e| err(text.lines().count(), e.to_string()))
}

pub fn load(path: &Path) -> anyhow::Result<LayerStack> {
    let text =
        std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read stack file {}: {e}", path.display()))?;
    Ok(parse(&text, &path.display().to_string())?)
}
