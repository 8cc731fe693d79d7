//! Projection matrices produced by every solver, and their text file format.
//!
//! File layout: one header line
//! `# blda-projection n=<n> d=<d> method=<tag> seed=<seed> objective=<value>`
//! followed by `n` comma-separated rows of `d` values. Values are written in
//! shortest round-trip decimal form, so a save/load cycle is bit-exact.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Lda,
    L2blda,
    L1blda,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pca, Method::Lda, Method::L2blda, Method::L1blda];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Lda => "lda",
            Method::L2blda => "l2blda",
            Method::L1blda => "l1blda",
        }
    }

    /// Whether the leading `d` columns of a `d_max` fit are the `d`-dimensional fit.
    pub fn is_nested(self) -> bool {
        !matches!(self, Method::L1blda)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Method::Pca),
            "lda" => Ok(Method::Lda),
            "l2blda" => Ok(Method::L2blda),
            "l1blda" => Ok(Method::L1blda),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    /// `n x d`, column-orthonormal.
    pub w: DMatrix<f64>,
    pub method: Method,
    /// Method-specific objective at `w`.
    pub objective: f64,
    /// Eigenvalues matched to the columns, for the spectral methods.
    pub spectrum: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn d(&self) -> usize {
        self.w.ncols()
    }

    /// The first `d` columns. The objective is carried over unchanged unless
    /// a spectrum is present, in which case it is re-summed.
    pub fn prefix(&self, d: usize) -> ProjectionMatrix {
        let d = d.min(self.d());
        let spectrum = self.spectrum.iter().take(d).copied().collect::<Vec<_>>();
        let objective = if spectrum.is_empty() || self.method == Method::Lda {
            self.objective
        } else {
            spectrum.iter().sum()
        };
        ProjectionMatrix {
            w: self.w.columns(0, d).into_owned(),
            method: self.method,
            objective,
            spectrum,
        }
    }

    /// Projected samples `W^T X`, `d x N`.
    pub fn project(&self, data: &LabeledDataset) -> Result<DMatrix<f64>> {
        if data.num_features() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "projection expects {} features, data has {}",
                self.n(),
                data.num_features()
            )));
        }
        Ok(self.w.transpose() * data.features())
    }

    pub fn to_text(&self, seed: u64) -> String {
        let mut out = format!(
            "# blda-projection n={} d={} method={} seed={} objective={}\n",
            self.n(),
            self.d(),
            self.method,
            seed,
            self.objective
        );
        for row in self.w.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>, seed: u64) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text(seed)).map_err(|e| Error::io(path, e))
    }

    /// Parses the text format, returning the matrix and the recorded seed.
    pub fn from_text(text: &str) -> Result<(ProjectionMatrix, u64)> {
        let bad = |m: &str| Error::BadProjectionFile(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let header = header
            .strip_prefix("# blda-projection")
            .ok_or_else(|| bad("missing header"))?;
        let (mut n, mut d, mut method, mut seed, mut objective) = (None, None, None, None, None);
        for tok in header.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(tok))?;
            match k {
                "n" => n = v.parse::<usize>().ok(),
                "d" => d = v.parse::<usize>().ok(),
                "method" => method = Some(v.parse::<Method>()?),
                "seed" => seed = v.parse::<u64>().ok(),
                "objective" => objective = v.parse::<f64>().ok(),
                _ => {}
            }
        }
        let (n, d, method) = match (n, d, method) {
            (Some(n), Some(d), Some(m)) => (n, d, m),
            _ => return Err(bad("header needs n, d and method")),
        };
        let mut values = Vec::with_capacity(n * d);
        let mut rows = 0;
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != d {
                return Err(bad(&format!(
                    "row {} has {} values, expected {d}",
                    rows + 1,
                    cells.len()
                )));
            }
            for c in cells {
                values.push(
                    c.parse::<f64>()
                        .map_err(|_| bad(&format!("bad value {c:?}")))?,
                );
            }
            rows += 1;
        }
        if rows != n {
            return Err(bad(&format!("expected {n} rows, found {rows}")));
        }
        Ok((
            ProjectionMatrix {
                w: DMatrix::from_row_slice(n, d, &values),
                method,
                objective: objective.unwrap_or(f64::NAN),
                spectrum: Vec::new(),
            },
            seed.unwrap_or(0),
        ))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(ProjectionMatrix, u64)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 6),
            seed in any::<u64>(),
        ) {
            let p = ProjectionMatrix {
                w: DMatrix::from_row_slice(3, 2, &vals),
                method: Method::L1blda,
                objective: vals[0],
                spectrum: vec![],
            };
            let (q, s) = ProjectionMatrix::from_text(&p.to_text(seed)).unwrap();
            prop_assert_eq!(s, seed);
            prop_assert_eq!(q.method, p.method);
            for (a, b) in p.w.iter().zip(q.w.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(ProjectionMatrix::from_text("").is_err());
        assert!(ProjectionMatrix::from_text("# blda-projection n=2 d=1 method=pca\n1\n").is_err());
        assert!(ProjectionMatrix::from_text("# blda-projection n=1 d=1 method=foo\n1\n").is_err());
    }
}
