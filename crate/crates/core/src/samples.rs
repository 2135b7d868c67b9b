//! Complex sample files.
//!
//! Binary files hold little-endian `f64` pairs `(re, im)`, optionally behind a
//! 16-byte header: the magic `GFDMBLK1`, a `u32` sample count and `u32` flags.
//! CSV files hold `index,re,im` lines under a header line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{GfdmError, Result};
use crate::numerics::{ComplexVec, C64};

pub const MAGIC: &[u8; 8] = b"GFDMBLK1";
pub const HEADER_LEN: usize = 16;

/// Header flag: samples are a spectrum rather than time samples.
pub const FLAG_FREQUENCY: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Bin,
    Csv,
}

impl SampleFormat {
    /// `.csv` files are CSV, anything else binary.
    pub fn from_path(path: &Path) -> SampleFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => SampleFormat::Csv,
            _ => SampleFormat::Bin,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            SampleFormat::Bin => "bin",
            SampleFormat::Csv => "csv",
        }
    }
}

impl FromStr for SampleFormat {
    type Err = GfdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bin" => Ok(SampleFormat::Bin),
            "csv" => Ok(SampleFormat::Csv),
            other => Err(GfdmError::InvalidConfig(format!("unknown sample format '{other}'"))),
        }
    }
}

/// Samples read from a file together with the header flags, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub samples: ComplexVec,
    pub flags: Option<u32>,
}

pub fn encode_bin(samples: &[C64], header: Option<u32>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * samples.len());
    if let Some(flags) = header {
        let count = u32::try_from(samples.len())
            .map_err(|_| GfdmError::Format(format!("{} samples overflow the header", samples.len())))?;
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&count.to_le_bytes());
        out.extend_from_slice(&flags.to_le_bytes());
    }
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_bin(bytes: &[u8]) -> Result<SampleBlock> {
    let (body, flags) = if bytes.len() >= HEADER_LEN && &bytes[..8] == MAGIC {
        let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let flags = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let body = &bytes[HEADER_LEN..];
        if body.len() != 16 * count {
            return Err(GfdmError::Format(format!(
                "header announces {count} samples, body holds {} bytes",
                body.len()
            )));
        }
        (body, Some(flags))
    } else {
        (bytes, None)
    };
    if body.len() % 16 != 0 {
        return Err(GfdmError::Format(format!(
            "{} bytes is not a whole number of complex f64 samples",
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(SampleBlock { samples, flags })
}

pub fn encode_csv(samples: &[C64]) -> String {
    let mut out = String::from("index,re,im\n");
    for (i, s) in samples.iter().enumerate() {
        // Display for f64 prints the shortest string that parses back exactly.
        let _ = writeln!(out, "{i},{},{}", s.re, s.im);
    }
    out
}

pub fn decode_csv(text: &str) -> Result<ComplexVec> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(GfdmError::Format(format!(
                "line {}: expected index,re,im",
                lineno + 1
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| GfdmError::Format(format!("line {}: {e}", lineno + 1)))
        };
        let index: usize = fields[0]
            .parse()
            .map_err(|e| GfdmError::Format(format!("line {}: bad index: {e}", lineno + 1)))?;
        if index != out.len() {
            return Err(GfdmError::Format(format!(
                "line {}: index {index} out of sequence",
                lineno + 1
            )));
        }
        out.push(C64::new(parse(fields[1])?, parse(fields[2])?));
    }
    Ok(out)
}

/// Writes samples; binary files always get a header.
pub fn write_samples(path: &Path, samples: &[C64], format: SampleFormat, flags: u32) -> Result<()> {
    match format {
        SampleFormat::Bin => fs::write(path, encode_bin(samples, Some(flags))?)?,
        SampleFormat::Csv => fs::write(path, encode_csv(samples))?,
    }
    Ok(())
}

pub fn read_samples(path: &Path, format: SampleFormat) -> Result<SampleBlock> {
    match format {
        SampleFormat::Bin => decode_bin(&fs::read(path)?),
        SampleFormat::Csv => Ok(SampleBlock {
            samples: decode_csv(&fs::read_to_string(path)?)?,
            flags: None,
        }),
    }
}
