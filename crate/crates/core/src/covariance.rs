//! Covariance construction and spectral reduction.
//!
//! Builds the exponentially decaying Toeplitz covariance family, decomposes
//! model matrices by SVD and reduces them to the spectral profiles
//! (singular values plus rotated signal) that all closed-form risk
//! expressions consume.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a direction counts as null.
pub const RANK_CUTOFF: f64 = 1e-10;

/// How a covariance square root is constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovKind {
    /// `scale * (I + T(q))` with `T(q)_{ij} = q^{|i-j|}`.
    ToeplitzPlusIdentity { q: f64 },
    /// `scale * I`.
    Identity,
    /// Dense matrix loaded from a CSV file, multiplied by `scale`.
    UserMatrix { path: String },
    /// Diagonal matrix from a single-column CSV of values, times `scale`.
    UserSpectrum { path: String },
}

/// Specification of one covariance square-root matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovSpec {
    #[serde(flatten)]
    pub kind: CovKind,
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub dim: usize,
}

fn default_scale() -> f64 {
    1.0
}

impl CovSpec {
    pub fn toeplitz(q: f64, scale: f64, dim: usize) -> Self {
        CovSpec {
            kind: CovKind::ToeplitzPlusIdentity { q },
            scale,
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        CovSpec {
            kind: CovKind::Identity,
            scale: 1.0,
            dim,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.scale <= 0.0 || !self.scale.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "scale must be a positive finite real, got {}",
                self.scale
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be at least 1".into()));
        }
        if let CovKind::ToeplitzPlusIdentity { q } = self.kind {
            // q = 1 is allowed: I + all-ones stays full rank.
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidSpec(format!(
                    "toeplitz decay parameter q must lie in [0, 1], got {q}"
                )));
            }
        }
        Ok(())
    }
}

/// Materialize the matrix described by `spec`.
pub fn build_cov(spec: &CovSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let d = spec.dim;
    let m = match &spec.kind {
        CovKind::ToeplitzPlusIdentity { q } => DMatrix::from_fn(d, d, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            let k = i.abs_diff(j) as i32;
            spec.scale * (delta + q.powi(k))
        }),
        CovKind::Identity => DMatrix::identity(d, d) * spec.scale,
        CovKind::UserMatrix { path } => {
            let m = read_csv_matrix(path)?;
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "user matrix from {path} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            m * spec.scale
        }
        CovKind::UserSpectrum { path } => {
            let s = read_csv_spectrum(path)?;
            if s.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "user spectrum from {path} has {} entries, expected {d}",
                    s.len()
                )));
            }
            DMatrix::from_diagonal(&DVector::from_vec(s)) * spec.scale
        }
    };
    Ok(m)
}

/// Spectral reduction of the feature covariance root `A` together with the
/// signal `beta_bar`: `s` holds the singular values of `A` (descending) and
/// `c = V^T beta_bar` with `V` from the same SVD.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    pub n: usize,
    /// Fraction of singular values above the relative rank cutoff.
    pub kappa: f64,
}

impl SpectralProfile {
    /// Constant spectrum `s = value` with the signal mass on the first
    /// coordinate; used for isotropic closed-form checks.
    pub fn isotropic(n: usize, value: f64) -> Self {
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        SpectralProfile {
            s: vec![value; n],
            c,
            n,
            kappa: 1.0,
        }
    }

    pub fn signal_norm_sq(&self) -> f64 {
        self.c.iter().map(|c| c * c).sum()
    }
}

/// Reduce `(A, beta_bar)` to the spectral profile all theory formulas use.
///
/// Columns of `V` are oriented so that their largest-magnitude entry is
/// positive, which makes `c` reproducible across platforms (the closed forms
/// only ever use `c_i^2`).
pub fn spectral_profile(
    a: &DMatrix<f64>,
    beta_bar: &DVector<f64>,
    rank_cutoff: f64,
) -> Result<SpectralProfile> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "A must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.ncols() != beta_bar.len() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but beta_bar has length {}",
            a.nrows(),
            a.ncols(),
            beta_bar.len()
        )));
    }
    if !(0.0..1.0).contains(&rank_cutoff) {
        return Err(Error::InvalidParameter(format!(
            "rank_cutoff must lie in [0, 1), got {rank_cutoff}"
        )));
    }
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not produce V^T".into()))?;

    // Sort descending and orient each row of V^T (column of V).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let mut s = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for &idx in &order {
        s.push(svd.singular_values[idx]);
        let row = v_t.row(idx);
        let mut sign = 1.0;
        let mut best = 0.0;
        for &x in row.iter() {
            if x.abs() > best {
                best = x.abs();
                sign = if x >= 0.0 { 1.0 } else { -1.0 };
            }
        }
        c.push(sign * row.dot(&beta_bar.transpose()));
    }
    let s_max = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > rank_cutoff * s_max).count();
    Ok(SpectralProfile {
        s,
        c,
        n,
        kappa: rank as f64 / n as f64,
    })
}

/// Row-correlation reduction: per-sample weights `q_j` and the row
/// covariance spectrum `os_j`, index-aligned to the same SVD of `rowcov_a`.
#[derive(Debug, Clone)]
pub struct RowCorrProfile {
    pub q: Vec<f64>,
    pub os_spectrum: Vec<f64>,
}

/// Noise-side summary: the noise spectrum, its scalar aggregation
/// `sigma_bar`, and the optional row-correlation weights.
#[derive(Debug, Clone)]
pub struct NoiseProfile {
    pub sigma: f64,
    pub sbar_spectrum: Vec<f64>,
    pub sigma_bar: f64,
    pub row_corr: Option<RowCorrProfile>,
}

impl NoiseProfile {
    /// Build from the noise root and, optionally, the feature-row root.
    pub fn build(
        noise_a: &DMatrix<f64>,
        rowcov_a: Option<&DMatrix<f64>>,
        sigma: f64,
    ) -> Result<NoiseProfile> {
        let sbar_spectrum = singular_values(noise_a)?;
        match rowcov_a {
            None => Ok(NoiseProfile {
                sigma,
                sigma_bar: sigma_bar(noise_a, sigma)?,
                sbar_spectrum,
                row_corr: None,
            }),
            Some(rc) => {
                let profile = row_corr_profile(noise_a, rc)?;
                Ok(NoiseProfile {
                    sigma,
                    sigma_bar: sigma_bar_rowcorr(noise_a, rc, sigma)?,
                    sbar_spectrum,
                    row_corr: Some(profile),
                })
            }
        }
    }
}

/// Effective noise scale `sigma * sqrt(tr(Sbar^2)/m)`, i.e.
/// `sigma * ||noise_a||_F / sqrt(m)`.
pub fn sigma_bar(noise_a: &DMatrix<f64>, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if noise_a.nrows() != noise_a.ncols() {
        return Err(Error::DimensionMismatch(
            "noise covariance root must be square".into(),
        ));
    }
    let m = noise_a.nrows() as f64;
    Ok(sigma * noise_a.norm() / m.sqrt())
}

/// Effective noise scale when feature rows are correlated:
/// `sigma * sqrt(tr(Sbar U^T Uy Sy^-2 Uy^T U Sbar)/m)` with `(U, Sbar)` from
/// the SVD of `noise_a` and `(Uy, Sy)` from the SVD of `rowcov_a`.
///
/// The inverse powers come from reducing the interpolation constraint
/// `Rc Z A beta = Rc Z A beta_bar + sigma noise_a v` by `Rc^-1`, which maps
/// the noise through the inverse row mixing; this is also why a singular
/// row covariance is a hard error.
pub fn sigma_bar_rowcorr(
    noise_a: &DMatrix<f64>,
    rowcov_a: &DMatrix<f64>,
    sigma: f64,
) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    let (u_bar, sbar) = left_svd(noise_a)?;
    let (u_rows, os) = left_svd_full_rank(rowcov_a)?;
    let m = noise_a.nrows();
    if rowcov_a.nrows() != m {
        return Err(Error::DimensionMismatch(
            "noise and row covariance roots must share the dimension".into(),
        ));
    }
    // tr(Sbar U^T Uy Sy^-2 Uy^T U Sbar) = ||Sy^-1 Uy^T U Sbar||_F^2.
    let mut u = u_rows.transpose() * u_bar;
    for j in 0..m {
        for i in 0..m {
            u[(i, j)] *= sbar[j] / os[i];
        }
    }
    Ok(sigma * u.norm() / (m as f64).sqrt())
}

/// Per-sample coupling weights `q_j = (1/os_j^2) * sum_l U_{jl}^2 sbar_l^2`
/// with `U = Uy^T Ubar`.
pub fn q_profile(noise_a: &DMatrix<f64>, rowcov_a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(row_corr_profile(noise_a, rowcov_a)?.q)
}

/// Compute `q` together with the row covariance spectrum it is paired with.
pub fn row_corr_profile(
    noise_a: &DMatrix<f64>,
    rowcov_a: &DMatrix<f64>,
) -> Result<RowCorrProfile> {
    let m = noise_a.nrows();
    if rowcov_a.nrows() != m || rowcov_a.ncols() != m || noise_a.ncols() != m {
        return Err(Error::DimensionMismatch(
            "noise and row covariance roots must be square of the same size".into(),
        ));
    }
    let (u_bar, sbar) = left_svd(noise_a)?;
    let (u_rows, os) = left_svd_full_rank(rowcov_a)?;
    let u = u_rows.transpose() * u_bar;
    let q = (0..m)
        .map(|j| {
            let mut acc = 0.0;
            for l in 0..m {
                let ujl = u[(j, l)];
                acc += ujl * ujl * sbar[l] * sbar[l];
            }
            acc / (os[j] * os[j])
        })
        .collect();
    Ok(RowCorrProfile {
        q,
        os_spectrum: os,
    })
}

/// Singular values of a square matrix, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(s)
}

fn left_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd = a.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not produce U".into()))?;
    let vals: Vec<f64> = svd.singular_values.iter().copied().collect();
    // Permute to descending order so callers can align spectra.
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let u_sorted = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, order[j])]);
    let s_sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    Ok((u_sorted, s_sorted))
}

fn left_svd_full_rank(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (u, s) = left_svd(a)?;
    let s_max = s.first().copied().unwrap_or(0.0);
    if s.iter().any(|&x| x <= RANK_CUTOFF * s_max) || s_max == 0.0 {
        return Err(Error::Rank(
            "row covariance root is numerically singular".into(),
        ));
    }
    Ok((u, s))
}

/// Read a dense matrix from CSV: one row per line, comma separated.
/// A header row is detected by a non-numeric first cell and skipped.
pub fn read_csv_matrix(path: &str) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let rows = parse_csv_rows(&text, path)?;
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Config(format!("{path}: no data rows")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{path}: ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Read a spectrum from a single-column CSV.
pub fn read_csv_spectrum(path: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let rows = parse_csv_rows(&text, path)?;
    rows.into_iter()
        .map(|r| {
            if r.len() == 1 {
                Ok(r[0])
            } else {
                Err(Error::Config(format!(
                    "{path}: expected a single column, got {} cells",
                    r.len()
                )))
            }
        })
        .collect()
}

fn parse_csv_rows(text: &str, path: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && cells[0].parse::<f64>().is_err() {
            continue; // header row
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) => {
                return Err(Error::Config(format!(
                    "{path}:{}: non-numeric cell",
                    lineno + 1
                )))
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn toeplitz(q: f64, scale: f64, dim: usize) -> DMatrix<f64> {
        build_cov(&CovSpec::toeplitz(q, scale, dim)).unwrap()
    }

    #[test]
    fn toeplitz_entries_match_definition() {
        let m = toeplitz(0.5, 1.0, 3);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.5, 0.25, 0.5, 2.0, 0.5, 0.25, 0.5, 2.0],
        );
        assert!((m - expected).norm() < 1e-15);
    }

    #[test]
    fn toeplitz_q_zero_is_twice_identity() {
        let m = toeplitz(0.0, 1.0, 7);
        assert!((m - DMatrix::identity(7, 7) * 2.0).norm() < 1e-15);
    }

    #[test]
    fn toeplitz_scales_linearly() {
        let a = toeplitz(0.5, 1.0, 3);
        let b = toeplitz(0.5, 0.5, 3);
        assert!((a * 0.5 - b).norm() < 1e-15);
    }

    #[test]
    fn toeplitz_is_symmetric() {
        let m = toeplitz(0.7, 2.0, 20);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn q_above_one_rejected() {
        assert!(build_cov(&CovSpec::toeplitz(1.5, 1.0, 3)).is_err());
        // The q = 1 boundary is allowed.
        assert!(build_cov(&CovSpec::toeplitz(1.0, 1.0, 3)).is_ok());
    }

    #[test]
    fn bad_scale_or_dim_rejected() {
        assert!(build_cov(&CovSpec::toeplitz(0.5, 0.0, 3)).is_err());
        assert!(build_cov(&CovSpec::toeplitz(0.5, -1.0, 3)).is_err());
        assert!(build_cov(&CovSpec::toeplitz(0.5, 1.0, 0)).is_err());
    }

    #[test]
    fn identity_profile() {
        let a = DMatrix::identity(4, 4);
        let beta = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let p = spectral_profile(&a, &beta, RANK_CUTOFF).unwrap();
        assert!(p.s.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!((p.kappa - 1.0).abs() < 1e-15);
        let c_norm: f64 = p.c.iter().map(|c| c * c).sum();
        assert!((c_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_profile() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let beta = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let p = spectral_profile(&a, &beta, RANK_CUTOFF).unwrap();
        assert_eq!(p.s, vec![3.0, 2.0, 1.0]);
        assert!((p.c[0].abs() - 1.0).abs() < 1e-12);
        assert!(p.c[1].abs() < 1e-12 && p.c[2].abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_consistency() {
        // sum s_i^2 c_i^2 must reproduce beta^T A^T A beta.
        let a = toeplitz(0.5, 1.0, 3);
        let beta = DVector::from_vec(vec![1.0, 1.0, 1.0]) / 3f64.sqrt();
        let p = spectral_profile(&a, &beta, RANK_CUTOFF).unwrap();
        let lhs: f64 = p.s.iter().zip(&p.c).map(|(s, c)| s * s * c * c).sum();
        let rhs = (beta.transpose() * a.transpose() * &a * &beta)[(0, 0)];
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn sigma_bar_identity_and_zero() {
        let eye = DMatrix::identity(5, 5);
        assert!((sigma_bar(&eye, 0.7).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(sigma_bar(&toeplitz(0.4, 1.0, 6), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sigma_bar_matches_svd_oracle() {
        let m = 60;
        let a = toeplitz(0.4, 1.0, m);
        let s = singular_values(&a).unwrap();
        let oracle = (s.iter().map(|x| x * x).sum::<f64>() / m as f64).sqrt();
        let got = sigma_bar(&a, 1.0).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn rowcorr_sigma_bar_reduces_to_plain() {
        let m = 30;
        let a = toeplitz(0.4, 1.0, m);
        let eye = DMatrix::identity(m, m);
        let plain = sigma_bar(&a, 0.9).unwrap();
        let rc = sigma_bar_rowcorr(&a, &eye, 0.9).unwrap();
        assert!((plain - rc).abs() < 1e-10, "{plain} vs {rc}");
    }

    #[test]
    fn rowcorr_sigma_bar_matches_trace_oracle() {
        let m = 40;
        let a = toeplitz(0.4, 1.0, m);
        let rc = toeplitz(0.7, 1.0, m);
        // Evaluate the defining trace directly from the SVD factors.
        let (u_bar, sbar) = left_svd(&a).unwrap();
        let (u_rows, os) = left_svd(&rc).unwrap();
        let sbar_m = DMatrix::from_diagonal(&DVector::from_vec(sbar));
        let os_inv =
            DMatrix::from_diagonal(&DVector::from_vec(os.iter().map(|x| 1.0 / x).collect()));
        let inner = &sbar_m
            * u_bar.transpose()
            * &u_rows
            * &os_inv
            * &os_inv
            * u_rows.transpose()
            * &u_bar
            * &sbar_m;
        let oracle = (inner.trace() / m as f64).sqrt();
        let got = sigma_bar_rowcorr(&a, &rc, 1.0).unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }

    #[test]
    fn q_profile_identity_case() {
        let m = 12;
        let eye = DMatrix::identity(m, m);
        let q = q_profile(&eye, &eye).unwrap();
        assert!(q.iter().all(|&x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn q_profile_matches_double_sum_oracle() {
        let m = 24;
        let a = toeplitz(0.4, 1.0, m);
        let rc = toeplitz(0.7, 1.0, m);
        let got = q_profile(&a, &rc).unwrap();
        let (u_bar, sbar) = left_svd(&a).unwrap();
        let (u_rows, os) = left_svd(&rc).unwrap();
        let u = u_rows.transpose() * u_bar;
        for j in 0..m {
            let mut acc = 0.0;
            for l in 0..m {
                acc += u[(j, l)].powi(2) * sbar[l].powi(2);
            }
            let oracle = acc / os[j].powi(2);
            assert!((got[j] - oracle).abs() < 1e-10);
            assert!(got[j] >= 0.0);
        }
    }

    #[test]
    fn csv_round_trip_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "a,b\n1.0,2.0\n3.0,4.0\n").unwrap();
        let m = read_csv_matrix(p.to_str().unwrap()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));

        let p2 = dir.path().join("s.csv");
        std::fs::write(&p2, "2.0\n1.0\n").unwrap();
        assert_eq!(read_csv_spectrum(p2.to_str().unwrap()).unwrap(), vec![2.0, 1.0]);
    }
}
