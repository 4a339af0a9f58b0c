//! Frequency-indexed single-sided power spectral densities and their CSV
//! file format.
//!
//! Canonical file layout:
//!
//! ```text
//! # unit=displacement
//! # n_avg=500
//! # seed=42
//! freq_hz,psd
//! 9356000,1.25e-31
//! ...
//! ```
//!
//! `seed=none` marks a noise-free model spectrum. The reader also accepts
//! the long form with header `freq_hz,psd,unit,n_avg,seed` and the metadata
//! repeated on every row.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical unit of the PSD values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralUnit {
    /// m²/Hz
    Displacement,
    /// rad²/Hz
    Phase,
}

impl SpectralUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectralUnit::Displacement => "displacement",
            SpectralUnit::Phase => "phase",
        }
    }
}

impl fmt::Display for SpectralUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectralUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "displacement" => Ok(SpectralUnit::Displacement),
            "phase" => Ok(SpectralUnit::Phase),
            other => Err(format!("unknown spectral unit `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    freqs: Vec<f64>,
    values: Vec<f64>,
    unit: SpectralUnit,
    n_avg: u64,
    seed: Option<u64>,
}

impl Spectrum {
    pub fn new(
        freqs: Vec<f64>,
        values: Vec<f64>,
        unit: SpectralUnit,
        n_avg: u64,
        seed: Option<u64>,
    ) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} frequencies but {} values",
                freqs.len(),
                values.len()
            )));
        }
        if freqs.is_empty() {
            return Err(Error::InvalidSpectrum("no bins".into()));
        }
        if n_avg == 0 {
            return Err(Error::InvalidSpectrum("n_avg must be positive".into()));
        }
        if let Some(k) = freqs
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite())
        {
            return Err(Error::InvalidSpectrum(format!(
                "frequencies not strictly increasing at bin {}",
                k + 1
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidSpectrum(format!(
                "value at bin {k} is {} (must be finite and >= 0)",
                values[k]
            )));
        }
        Ok(Self { freqs, values, unit, n_avg, seed })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn unit(&self) -> SpectralUnit {
        self.unit
    }
    pub fn n_avg(&self) -> u64 {
        self.n_avg
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn len(&self) -> usize {
        self.freqs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Same bins, values multiplied by `factor`, relabelled as `unit`.
    pub(crate) fn rescaled(&self, factor: f64, unit: SpectralUnit) -> Self {
        Self {
            freqs: self.freqs.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            unit,
            n_avg: self.n_avg,
            seed: self.seed,
        }
    }

    /// Trapezoidal integral of `values - floor` over frequency.
    pub fn integrate_above(&self, floor: f64) -> f64 {
        self.freqs
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(f, v)| 0.5 * (f[1] - f[0]) * (v[0] + v[1] - 2.0 * floor))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# unit={}", self.unit)?;
        writeln!(out, "# n_avg={}", self.n_avg)?;
        match self.seed {
            Some(s) => writeln!(out, "# seed={s}")?,
            None => writeln!(out, "# seed=none")?,
        }
        writeln!(out, "freq_hz,psd")?;
        for (f, v) in self.freqs.iter().zip(&self.values) {
            writeln!(out, "{f:e},{v:e}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        CsvReader::default().read(input)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::read_csv(s.as_bytes())
    }
}

#[derive(Default)]
struct CsvReader {
    unit: Option<SpectralUnit>,
    n_avg: Option<u64>,
    seed: Option<Option<u64>>,
    long_form: bool,
    header_seen: bool,
    freqs: Vec<f64>,
    values: Vec<f64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_seed(s: &str) -> std::result::Result<Option<u64>, String> {
    match s.trim() {
        "" | "none" => Ok(None),
        t => t.parse().map(Some).map_err(|e| format!("bad seed `{t}`: {e}")),
    }
}

impl CsvReader {
    fn set_meta<T: PartialEq + fmt::Debug>(
        slot: &mut Option<T>,
        value: T,
        key: &str,
        line: usize,
    ) -> Result<()> {
        match slot {
            Some(prev) if *prev != value => Err(parse_err(
                line,
                format!("conflicting {key}: {prev:?} vs {value:?}"),
            )),
            _ => {
                *slot = Some(value);
                Ok(())
            }
        }
    }

    fn comment(&mut self, body: &str, line: usize) -> Result<()> {
        let Some((key, value)) = body.split_once('=') else {
            return Ok(());
        };
        let value = value.trim();
        match key.trim() {
            "unit" => {
                let u = value.parse().map_err(|e: String| parse_err(line, e))?;
                Self::set_meta(&mut self.unit, u, "unit", line)
            }
            "n_avg" => {
                let n = value
                    .parse()
                    .map_err(|e| parse_err(line, format!("bad n_avg `{value}`: {e}")))?;
                Self::set_meta(&mut self.n_avg, n, "n_avg", line)
            }
            "seed" => {
                let s = parse_seed(value).map_err(|e| parse_err(line, e))?;
                Self::set_meta(&mut self.seed, s, "seed", line)
            }
            _ => Ok(()),
        }
    }

    fn header(&mut self, text: &str, line: usize) -> Result<()> {
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        match cols.as_slice() {
            ["freq_hz", "psd"] => self.long_form = false,
            ["freq_hz", "psd", "unit", "n_avg", "seed"] => self.long_form = true,
            _ => return Err(parse_err(line, format!("unexpected header `{text}`"))),
        }
        self.header_seen = true;
        Ok(())
    }

    fn row(&mut self, text: &str, line: usize) -> Result<()> {
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        let expected = if self.long_form { 5 } else { 2 };
        if cols.len() != expected {
            return Err(parse_err(
                line,
                format!("expected {expected} columns, found {}", cols.len()),
            ));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| parse_err(line, format!("bad {what} `{s}`: {e}")))
        };
        self.freqs.push(num(cols[0], "freq_hz")?);
        self.values.push(num(cols[1], "psd")?);
        if self.long_form {
            let u = cols[2].parse().map_err(|e: String| parse_err(line, e))?;
            Self::set_meta(&mut self.unit, u, "unit", line)?;
            let n = cols[3]
                .parse()
                .map_err(|e| parse_err(line, format!("bad n_avg `{}`: {e}", cols[3])))?;
            Self::set_meta(&mut self.n_avg, n, "n_avg", line)?;
            let s = parse_seed(cols[4]).map_err(|e| parse_err(line, e))?;
            Self::set_meta(&mut self.seed, s, "seed", line)?;
        }
        Ok(())
    }

    fn read<R: BufRead>(mut self, input: R) -> Result<Spectrum> {
        let mut last_line = 0;
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(body) = text.strip_prefix('#') {
                self.comment(body, line_no)?;
            } else if !self.header_seen {
                self.header(text, line_no)?;
            } else {
                self.row(text, line_no)?;
            }
        }
        let end = last_line.max(1);
        if !self.header_seen {
            return Err(parse_err(end, "missing `freq_hz,psd` header"));
        }
        if self.freqs.is_empty() {
            return Err(parse_err(end, "no data rows"));
        }
        let unit = self.unit.ok_or_else(|| parse_err(end, "spectral unit not given"))?;
        let n_avg = self.n_avg.ok_or_else(|| parse_err(end, "n_avg not given"))?;
        Spectrum::new(self.freqs, self.values, unit, n_avg, self.seed.flatten())
    }
}
