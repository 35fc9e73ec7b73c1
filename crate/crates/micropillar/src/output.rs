//! Delimited output with `#` provenance headers.

use std::fmt::Write;

use sha2::{Digest, Sha256};

use crate::config::ConfigSource;

/// 13 significant digits, or `inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    micropillar_core::efficiency::hex(&Sha256::digest(bytes))
}

/// Header block: tool version, command, config digest, every effective
/// parameter, then command-specific `extra` lines.
pub fn provenance(command: &str, config: &ConfigSource, extra: &[(&str, String)]) -> String {
    let echo = config.echo();
    let mut canonical = String::new();
    for (k, v) in &echo {
        let _ = writeln!(canonical, "{k} = {v}");
    }
    let mut out = String::new();
    let _ = writeln!(out, "# micropillar {} {command}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# config_sha256 = {}", sha256_hex(canonical.as_bytes()));
    for (k, v) in &echo {
        let _ = writeln!(out, "# param {k} = {v}");
    }
    for (k, v) in extra {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}
