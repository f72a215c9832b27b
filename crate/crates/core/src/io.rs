//! CSV serialization, atomic file writes, and the text grammars used by
//! the command-line front end.
//!
//! CSV dialect: comma separators, '.' decimal point, 17 significant digits
//! for floating-point values, and '#'-prefixed header comment lines that
//! record the full configuration for provenance. Files are written to a
//! temporary sibling and atomically renamed so failures never leave
//! partial output behind.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::observables::ObservableSeries;
use crate::oracle::Spectrum;
use crate::pipeline::library_state;
use crate::qite::QiteTrace;
use crate::qlanczos::ScanRecord;
use crate::state::StateVector;

/// Format with 17 significant digits, enough for exact f64 round-tripping.
pub fn format_float(x: f64) -> String {
    let s = format!("{x:.16e}");
    // normalize "-0.0000000000000000e0" to a stable zero spelling
    if s.starts_with("-0.0000000000000000e") {
        s[1..].to_string()
    } else {
        s
    }
}

fn parse_float(text: &str, offset: usize) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| Error::Parse {
        offset,
        message: format!("expected a number, found '{}'", text.trim()),
    })
}

/// Write `contents` to `path` via a temporary sibling plus atomic rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("invalid output path {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header_lines(config: &[(String, String)]) -> String {
    config
        .iter()
        .map(|(k, v)| format!("# {k} = {v}\n"))
        .collect()
}

/// Spectrum CSV: columns `index,energy,t0..t{2^N-1}`.
pub fn spectrum_to_csv(spec: &Spectrum, config: &[(String, String)]) -> String {
    let dim = spec.dim();
    let mut out = header_lines(config);
    out.push_str("index,energy");
    for x in 0..dim {
        out.push_str(&format!(",t{x}"));
    }
    out.push('\n');
    for level in 0..dim {
        out.push_str(&format!("{level},{}", format_float(spec.energies[level])));
        for x in 0..dim {
            out.push_str(&format!(",{}", format_float(spec.t[(level, x)])));
        }
        out.push('\n');
    }
    out
}

/// Parse a spectrum CSV produced by [`spectrum_to_csv`]. Errors carry the
/// byte offset of the offending token.
pub fn spectrum_from_csv(text: &str) -> Result<Spectrum> {
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut offset = 0usize;
    let mut header_seen = false;
    for line in text.lines() {
        let line_offset = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            if !trimmed.starts_with("index,energy") {
                return Err(Error::Parse {
                    offset: line_offset,
                    message: "expected header 'index,energy,t0,...'".into(),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                offset: line_offset,
                message: format!("row has {} fields, expected at least 3", fields.len()),
            });
        }
        let energy = parse_float(fields[1], line_offset)?;
        let t_row = fields[2..]
            .iter()
            .map(|f| parse_float(f, line_offset))
            .collect::<Result<Vec<_>>>()?;
        rows.push((energy, t_row));
    }
    let dim = rows.len();
    if dim == 0 {
        return Err(Error::Parse {
            offset: 0,
            message: "spectrum file contains no data rows".into(),
        });
    }
    if !dim.is_power_of_two() || rows.iter().any(|(_, r)| r.len() != dim) {
        return Err(Error::Parse {
            offset: 0,
            message: format!("expected a square 2^N x 2^N layout, found {dim} rows"),
        });
    }
    let num_sites = dim.trailing_zeros() as usize;
    let mut t = Matrix::zeros(dim, dim);
    let mut energies = Vec::with_capacity(dim);
    for (level, (e, row)) in rows.into_iter().enumerate() {
        energies.push(e);
        for (x, v) in row.into_iter().enumerate() {
            t[(level, x)] = v;
        }
    }
    Ok(Spectrum {
        num_sites,
        energies,
        t,
    })
}

/// Imaginary-time trace CSV: columns `step,tau,energy,energy_std,c_sq_inv`.
/// `energy` is the mean over the supplied traces (seed-offset repeats) and
/// `energy_std` the population standard deviation; the normalization
/// column comes from the first trace.
pub fn traces_to_csv(traces: &[QiteTrace], config: &[(String, String)]) -> Result<String> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidParameter("no traces to serialize".into()))?;
    if traces.iter().any(|t| t.len() != first.len()) {
        return Err(Error::DimensionMismatch(
            "traces of unequal length cannot share a CSV".into(),
        ));
    }
    let mut out = header_lines(config);
    out.push_str("step,tau,energy,energy_std,c_sq_inv\n");
    for step in 0..first.len() {
        let energies: Vec<f64> = traces.iter().map(|t| t.energies[step]).collect();
        let mean = energies.iter().sum::<f64>() / energies.len() as f64;
        let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / energies.len() as f64;
        out.push_str(&format!(
            "{step},{},{},{},{}\n",
            format_float(step as f64 * first.dtau),
            format_float(mean),
            format_float(var.sqrt()),
            format_float(first.c_sq_inv[step]),
        ));
    }
    Ok(out)
}

/// Scan diagnostic CSV: columns `entry,l,m,E,delta_e,accepted`, one block
/// of rows per plan entry.
pub fn scans_to_csv(scans: &[(String, Vec<ScanRecord>)], config: &[(String, String)]) -> String {
    let mut out = header_lines(config);
    out.push_str("entry,l,m,E,delta_e,accepted\n");
    for (entry, records) in scans {
        for r in records {
            out.push_str(&format!(
                "{entry},{},{},{},{},{}\n",
                r.l,
                r.m,
                format_float(r.energy),
                format_float(r.delta_e),
                u8::from(r.accepted),
            ));
        }
    }
    out
}

/// Series CSV: column `t` then one column per series label. All series
/// must share the same grid.
pub fn series_to_csv(series: &[ObservableSeries], config: &[(String, String)]) -> Result<String> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidParameter("no series to serialize".into()))?;
    let times = first.grid.times();
    if series.iter().any(|s| s.values.len() != times.len()) {
        return Err(Error::DimensionMismatch(
            "series of unequal length cannot share a CSV".into(),
        ));
    }
    let mut out = header_lines(config);
    out.push('t');
    for s in series {
        out.push(',');
        out.push_str(&s.label);
    }
    out.push('\n');
    for (k, t) in times.iter().enumerate() {
        out.push_str(&format_float(*t));
        for s in series {
            out.push(',');
            out.push_str(&format_float(s.values[k]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse an initial-state specification: either `lib:<name>` (a named
/// library state) or a comma-separated list of optionally signed
/// bitstrings such as `+0001,-0010`. All bitstrings must have length `n`
/// and be distinct. Errors carry character offsets into the spec text.
pub fn parse_state_spec(text: &str, n: usize) -> Result<StateVector> {
    let trimmed = text.trim();
    if let Some(name) = trimmed.strip_prefix("lib:") {
        return library_state(n, name);
    }
    if trimmed.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty state specification".into(),
        });
    }
    let mut parts: Vec<(String, f64)> = Vec::new();
    let mut offset = 0usize;
    for piece in trimmed.split(',') {
        let piece_offset = offset;
        offset += piece.len() + 1;
        let token = piece.trim();
        let token_offset = piece_offset + (piece.len() - piece.trim_start().len());
        let (sign, bits) = match token.chars().next() {
            Some('+') => (1.0, &token[1..]),
            Some('-') | Some('\u{2212}') => {
                let c = token.chars().next().unwrap();
                (-1.0, &token[c.len_utf8()..])
            }
            _ => (1.0, token),
        };
        if bits.is_empty() {
            return Err(Error::Parse {
                offset: token_offset,
                message: "sign without a bitstring".into(),
            });
        }
        if let Some(bad) = bits.chars().position(|c| c != '0' && c != '1') {
            return Err(Error::Parse {
                offset: token_offset + (token.len() - bits.len()) + bad,
                message: format!(
                    "invalid character '{}' in bitstring",
                    bits.chars().nth(bad).unwrap()
                ),
            });
        }
        if bits.len() != n {
            return Err(Error::Parse {
                offset: token_offset,
                message: format!("bitstring '{bits}' has length {}, expected {n}", bits.len()),
            });
        }
        if parts.iter().any(|(b, _)| b == bits) {
            return Err(Error::Parse {
                offset: token_offset,
                message: format!("duplicate bitstring '{bits}'"),
            });
        }
        parts.push((bits.to_string(), sign));
    }
    let refs: Vec<(&str, f64)> = parts.iter().map(|(b, s)| (b.as_str(), *s)).collect();
    StateVector::from_superposition(n, &refs)
}

/// Parse a flat `key = value` configuration file. `[section]` headers
/// prefix subsequent keys as `section.key`; '#' starts a comment; blank
/// lines are ignored. Later keys override earlier ones.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut section = String::new();
    let mut offset = 0usize;
    for line in text.lines() {
        let line_offset = offset;
        offset += line.len() + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or(Error::Parse {
                offset: line_offset,
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            offset: line_offset,
            message: format!("expected 'key = value', found '{content}'"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                offset: line_offset,
                message: "empty key".into(),
            });
        }
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        let prev = pairs.iter_mut().find(|(k, _)| *k == full);
        match prev {
            Some(slot) => slot.1 = value.trim().to_string(),
            None => pairs.push((full, value.trim().to_string())),
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::TimeGrid;
    use crate::oracle::oracle_spectrum;

    #[test]
    fn float_roundtrip() {
        for x in [0.0, -0.0, 1.0, -3.3435595774162685, 1e-300, 2.5e17] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        // negative zero is spelled like positive zero for byte-stable output
        assert_eq!(format_float(-0.0), format_float(0.0));
    }

    #[test]
    fn spectrum_csv_roundtrip() {
        let spec = oracle_spectrum(3, 0.6, 1.0).unwrap();
        let csv = spectrum_to_csv(&spec, &[("sites".into(), "3".into())]);
        assert!(csv.starts_with("# sites = 3\n"));
        let back = spectrum_from_csv(&csv).unwrap();
        assert_eq!(back.num_sites, 3);
        assert_eq!(back.energies, spec.energies);
        for i in 0..8 {
            for x in 0..8 {
                assert_eq!(back.t[(i, x)], spec.t[(i, x)]);
            }
        }
    }

    #[test]
    fn spectrum_csv_rejects_malformed() {
        assert!(spectrum_from_csv("").is_err());
        assert!(spectrum_from_csv("nonsense\n1,2,3\n").is_err());
        // wrong row width
        let bad = "index,energy,t0,t1\n0,1.0,0.5\n1,2.0,0.5,0.5\n";
        assert!(spectrum_from_csv(bad).is_err());
    }

    #[test]
    fn state_spec_grammar() {
        let s = parse_state_spec("100", 3).unwrap();
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-15);

        let w = parse_state_spec("+110,+101,+011", 3).unwrap();
        let lib = library_state(3, "w3-twoparticle").unwrap();
        assert!(w.fidelity(&lib).unwrap() > 1.0 - 1e-12);

        let alt = parse_state_spec("+0001,-0010,+0100,-1000", 4).unwrap();
        let lib = library_state(4, "w4-oneparticle-alt").unwrap();
        assert!(alt.fidelity(&lib).unwrap() > 1.0 - 1e-12);

        assert!(parse_state_spec("lib:w3-twoparticle", 3).is_ok());
        assert!(parse_state_spec("lib:nonsense", 3).is_err());

        // mixed lengths, duplicates, bad characters: offsets reported
        match parse_state_spec("+10,-100", 3).unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, 0),
            e => panic!("unexpected {e}"),
        }
        match parse_state_spec("100,100", 3).unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, 4),
            e => panic!("unexpected {e}"),
        }
        match parse_state_spec("100,1x0", 3).unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, 5),
            e => panic!("unexpected {e}"),
        }
        assert!(parse_state_spec("", 3).is_err());
        assert!(parse_state_spec("+", 3).is_err());
    }

    #[test]
    fn config_file_grammar() {
        let text = "\n# comment\nsites = 3\n[noise]\nshots = 8192 # inline\np01 = 0.02\n[qite]\ndtau = 0.1\nsites_again=1\n";
        let pairs = parse_config_file(text).unwrap();
        let get = |k: &str| {
            pairs
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
        };
        assert_eq!(get("sites"), Some("3"));
        assert_eq!(get("noise.shots"), Some("8192"));
        assert_eq!(get("noise.p01"), Some("0.02"));
        assert_eq!(get("qite.dtau"), Some("0.1"));
        assert!(parse_config_file("[broken\n").is_err());
        assert!(parse_config_file("novalue\n").is_err());
    }

    #[test]
    fn series_csv_layout() {
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let s = ObservableSeries {
            grid: grid.clone(),
            label: "p_1_to_2".into(),
            values: vec![1.0, 0.5, 0.25],
        };
        let csv = series_to_csv(&[s], &[]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,p_1_to_2");
        assert!(lines.next().unwrap().starts_with("0.0000000000000000e0,"));
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = std::env::temp_dir().join("qlanczos-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        atomic_write(&path, "hello\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "hello\n");
        assert!(!dir.join("out.csv.tmp").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
