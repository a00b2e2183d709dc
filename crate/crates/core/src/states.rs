//! Target states: Dicke, `C^{n-1}Z` magic, `|T>^n`, GHZ, and amplitude files.
//!
//! Amplitude files hold one `bitstring re im` triple per line; `#` starts a
//! comment and missing bitstrings have amplitude zero.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extent::norm2;
use crate::gf2::BitVec;

/// Largest qubit count for dense state vectors.
pub const MAX_STATE_QUBITS: usize = 24;

/// Accepted deviation of a file state's norm from 1; within it the vector is
/// rescaled to unit norm. Beyond it `normalize` is required.
pub const FILE_NORM_TOLERANCE: f64 = 1e-6;

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_STATE_QUBITS {
        return Err(Error::InvalidState(format!("qubit count {n} outside {min}..={MAX_STATE_QUBITS}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn dicke(n: usize, k: usize) -> Result<Vec<Complex64>> {
    check_n(n, 1)?;
    if k > n {
        return Err(Error::InvalidState(format!("Dicke weight {k} exceeds n = {n}")));
    }
    let amp = binomial(n, k).sqrt().recip();
    Ok((0u64..1 << n)
        .map(|z| if z.count_ones() as usize == k { Complex64::new(amp, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect())
}

/// `C^{n-1}Z |+>^n`.
pub fn ckz_magic(n: usize) -> Result<Vec<Complex64>> {
    check_n(n, 2)?;
    let amp = (-(n as f64) / 2.0).exp2();
    let mut v = vec![Complex64::new(amp, 0.0); 1 << n];
    v[(1 << n) - 1] = Complex64::new(-amp, 0.0);
    Ok(v)
}

/// `(T|+>)^n`: amplitude `2^(-n/2) e^(i pi wt(z)/4)`.
pub fn t_tensor(n: usize) -> Result<Vec<Complex64>> {
    check_n(n, 1)?;
    let amp = (-(n as f64) / 2.0).exp2();
    Ok((0u64..1 << n)
        .map(|z| Complex64::from_polar(amp, std::f64::consts::FRAC_PI_4 * z.count_ones() as f64))
        .collect())
}

/// `(|0...0> + |1...1>)/sqrt 2`.
pub fn ghz(n: usize) -> Result<Vec<Complex64>> {
    check_n(n, 1)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    v[0] = Complex64::new(r, 0.0);
    v[(1 << n) - 1] += Complex64::new(r, 0.0);
    Ok(v)
}

/// Reads an amplitude file. Without `normalize` the norm must be within
/// [`FILE_NORM_TOLERANCE`] of 1; the result always has unit norm.
pub fn from_file(path: &Path, normalize: bool) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)?;
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut entries: Vec<(BitVec, Complex64, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(i + 1, format!("expected `bitstring re im`, got {} fields", fields.len())));
        }
        let z = BitVec::parse(fields[0]).map_err(|e| err(i + 1, e.to_string()))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(i + 1, format!("{s:?}: {e}")));
        let (re, im) = (num(fields[1])?, num(fields[2])?);
        if !(re.is_finite() && im.is_finite()) {
            return Err(err(i + 1, "amplitude is not finite".into()));
        }
        entries.push((z, Complex64::new(re, im), i + 1));
    }
    let Some(&(first, _, _)) = entries.first() else {
        return Err(err(0, "no amplitudes".into()));
    };
    let n = first.len();
    check_n(n, 1).map_err(|e| err(entries[0].2, e.to_string()))?;
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    let mut seen = vec![false; 1 << n];
    for (z, a, line) in entries {
        if z.len() != n {
            return Err(err(line, format!("bitstring has {} qubits, expected {n}", z.len())));
        }
        let idx = z.bits() as usize;
        if seen[idx] {
            return Err(err(line, format!("duplicate bitstring {z}")));
        }
        seen[idx] = true;
        v[idx] = a;
    }
    let norm = norm2(&v);
    if norm == 0.0 {
        return Err(Error::InvalidState(format!("{}: zero vector", path.display())));
    }
    if !normalize && (norm - 1.0).abs() > FILE_NORM_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "{}: norm {norm} is not 1 (use normalize to rescale)",
            path.display()
        )));
    }
    v.iter_mut().for_each(|a| *a /= norm);
    Ok(v)
}

/// `dicke:n,k | czk:n | t:n | ghz:n | file:path`
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateSpec {
    Dicke { n: usize, k: usize },
    Ckz { n: usize },
    T { n: usize },
    Ghz { n: usize },
    File(PathBuf),
}

impl StateSpec {
    /// Qubit count, when it is known without reading a file.
    pub fn qubits(&self) -> Option<usize> {
        match self {
            Self::Dicke { n, .. } | Self::Ckz { n } | Self::T { n } | Self::Ghz { n } => Some(*n),
            Self::File(_) => None,
        }
    }

    pub fn build(&self, normalize: bool) -> Result<Vec<Complex64>> {
        match self {
            Self::Dicke { n, k } => dicke(*n, *k),
            Self::Ckz { n } => ckz_magic(*n),
            Self::T { n } => t_tensor(*n),
            Self::Ghz { n } => ghz(*n),
            Self::File(p) => from_file(p, normalize),
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidState(format!("state spec {s:?}: {msg}"));
        let (tag, args) = s.split_once(':').ok_or_else(|| bad("expected family:parameters"))?;
        let int = |a: &str| a.trim().parse::<usize>().map_err(|_| bad("parameters must be integers"));
        let spec = match tag {
            "dicke" => {
                let (n, k) = args.split_once(',').ok_or_else(|| bad("expected dicke:n,k"))?;
                let (n, k) = (int(n)?, int(k)?);
                if k > n {
                    return Err(bad("k must not exceed n"));
                }
                Self::Dicke { n, k }
            }
            "czk" => Self::Ckz { n: int(args)? },
            "t" => Self::T { n: int(args)? },
            "ghz" => Self::Ghz { n: int(args)? },
            "file" if !args.is_empty() => Self::File(PathBuf::from(args)),
            "file" => return Err(bad("missing path")),
            _ => return Err(bad("unknown family (dicke, czk, t, ghz, file)")),
        };
        if let Some(n) = spec.qubits() {
            let min = if matches!(spec, Self::Ckz { .. }) { 2 } else { 1 };
            check_n(n, min).map_err(|e| bad(&e.to_string()))?;
        }
        Ok(spec)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dicke { n, k } => write!(f, "dicke:{n},{k}"),
            Self::Ckz { n } => write!(f, "czk:{n}"),
            Self::T { n } => write!(f, "t:{n}"),
            Self::Ghz { n } => write!(f, "ghz:{n}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}
