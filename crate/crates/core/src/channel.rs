//! Wiretap channel data model.
//!
//! A [`ChannelPair`] holds the legitimate channel `H` (`N_r x N_t`) and the
//! eavesdropper channel `G` (`N_e x N_t`). Random ensembles draw every entry
//! i.i.d. from `CN(0, 1)`: real and imaginary parts are independent normals with
//! variance 1/2 each. The generator is ChaCha20 seeded through
//! `SeedableRng::seed_from_u64`, filling `H` row-major, then `G` row-major, real
//! part before imaginary part, so a seed reproduces the same channel on every
//! platform.
//!
//! On disk a channel is JSON: `{"H": [[[re, im], ...], ...], "G": [...]}` with
//! rows listed in order.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Result};
use crate::linalg::{all_finite, c, eigvalsh_desc, CMatrix};

/// Relative tolerance for the sign classification of `H^H H - G^H G`.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    h: CMatrix,
    g: CMatrix,
}

impl ChannelPair {
    pub fn new(h: CMatrix, g: CMatrix) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 || g.nrows() == 0 {
            return Err(invalid("channel dimensions must be at least 1"));
        }
        if h.ncols() != g.ncols() {
            return Err(invalid(format!(
                "H has {} transmit antennas but G has {}",
                h.ncols(),
                g.ncols()
            )));
        }
        if !all_finite(&h) || !all_finite(&g) {
            return Err(invalid("channel entries must be finite"));
        }
        Ok(Self { h, g })
    }

    /// Scalar channel `h`, `g` (all dimensions 1).
    pub fn scalar(h: num_complex::Complex64, g: num_complex::Complex64) -> Result<Self> {
        Self::new(
            CMatrix::from_element(1, 1, h),
            CMatrix::from_element(1, 1, g),
        )
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn g(&self) -> &CMatrix {
        &self.g
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_e(&self) -> usize {
        self.g.nrows()
    }

    /// Same legitimate channel, eavesdropper replaced by `scale * H`.
    pub fn with_degraded_eve(&self, scale: f64) -> Self {
        Self {
            h: self.h.clone(),
            g: self.h.scale(scale),
        }
    }

    /// `H^H H - G^H G`.
    pub fn gram_difference(&self) -> CMatrix {
        self.h.adjoint() * &self.h - self.g.adjoint() * &self.g
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(s)?;
        Self::new(decode_matrix("H", &file.h)?, decode_matrix("G", &file.g)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ChannelFile {
            h: encode_matrix(&self.h),
            g: encode_matrix(&self.g),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    #[serde(rename = "H")]
    h: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "G")]
    g: Vec<Vec<[f64; 2]>>,
}

/// Row-major `[[[re, im], ...], ...]` representation of a complex matrix.
pub fn encode_matrix(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Inverse of [`encode_matrix`]; rejects empty, ragged or non-finite input and
/// names the offending row.
pub fn decode_matrix(name: &str, rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n_rows = rows.len();
    if n_rows == 0 {
        return Err(invalid(format!("{name} has no rows")));
    }
    let n_cols = rows[0].len();
    if n_cols == 0 {
        return Err(invalid(format!("{name} row 0 is empty")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_cols {
            return Err(invalid(format!(
                "{name} row {i} has {} entries, expected {n_cols}",
                row.len()
            )));
        }
        if let Some(j) = row
            .iter()
            .position(|z| !z[0].is_finite() || !z[1].is_finite())
        {
            return Err(invalid(format!("{name} row {i} entry {j} is not finite")));
        }
    }
    Ok(CMatrix::from_fn(n_rows, n_cols, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

/// `rows x cols` matrix of i.i.d. `CN(0, 1)` entries, drawn row-major.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        entries.push(c(scale * re, scale * im));
    }
    CMatrix::from_row_slice(rows, cols, &entries)
}

pub fn generate_channel(n_t: usize, n_r: usize, n_e: usize, seed: u64) -> Result<ChannelPair> {
    if n_t == 0 || n_r == 0 || n_e == 0 {
        return Err(invalid(format!("invalid dimensions {n_t}x{n_r}x{n_e}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = complex_gaussian_matrix(n_r, n_t, &mut rng);
    let g = complex_gaussian_matrix(n_e, n_t, &mut rng);
    ChannelPair::new(h, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    NegativeSemidefinite,
    PositiveSemidefinite,
    Indefinite,
}

/// Sign classification of `H^H H - G^H G` with its extreme eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceClass {
    pub kind: Definiteness,
    pub min_eig: f64,
    pub max_eig: f64,
}

impl DifferenceClass {
    pub fn is_degraded_zero(&self) -> bool {
        self.kind == Definiteness::NegativeSemidefinite
    }
}

/// Classifies `H^H H - G^H G`. The threshold is `rel_tol * max(1, max|eig|)`;
/// a zero difference counts as negative semidefinite.
pub fn classify_difference(ch: &ChannelPair, rel_tol: f64) -> Result<DifferenceClass> {
    let eig = eigvalsh_desc(&ch.gram_difference())?;
    let max_eig = eig[0];
    let min_eig = eig[eig.len() - 1];
    if !max_eig.is_finite() || !min_eig.is_finite() {
        return Err(numeric("non-finite eigenvalues in channel difference"));
    }
    let tol = rel_tol * max_eig.abs().max(min_eig.abs()).max(1.0);
    let kind = if max_eig <= tol {
        Definiteness::NegativeSemidefinite
    } else if min_eig >= -tol {
        Definiteness::PositiveSemidefinite
    } else {
        Definiteness::Indefinite
    };
    Ok(DifferenceClass {
        kind,
        min_eig,
        max_eig,
    })
}

pub fn classify(ch: &ChannelPair) -> Result<DifferenceClass> {
    classify_difference(ch, DEFAULT_PSD_TOL)
}
