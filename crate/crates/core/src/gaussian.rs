//! Zero-mean Gaussian states: covariance matrices, probe states, GPI channel
//! action and the multimode Bures fidelity.
//!
//! Quadratures are ordered mode by mode as `(x_1, p_1, x_2, p_2, ...)` and the
//! vacuum has variance 1/2.

use nalgebra::linalg::Schur;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Tolerance on `|V - V^T|` accepted by [`CovarianceMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Most negative eigenvalue of `V + iΩ/2` accepted as physical.
pub const UNCERTAINTY_TOL: f64 = 1e-10;
/// Eigenvalue floor used when taking square roots of PSD matrices.
pub const EIGEN_CLIP: f64 = 1e-14;
/// Relative floor below which a fidelity factor `4a^2 - 1` is treated as zero.
///
/// The factor enters through a square root, so rounding noise of size `e`
/// turns into an error of order `sqrt(e)` in the fidelity. Pure arguments
/// produce an exact zero that float evaluation only reaches to about
/// `1e-13` relative, hence the floor sits above that noise.
pub const FIDELITY_CLIP: f64 = 1e-11;

/// The standard symplectic form on `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

/// Covariance matrix of a zero-mean `m`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates `entries` and wraps them. The stored matrix is the exact
    /// symmetric part of the input.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return invalid(format!("covariance matrix must be 2m x 2m with m >= 1, got {r} x {c}"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return invalid("covariance matrix has non-finite entries");
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return invalid(format!("covariance matrix is not symmetric (max |V - V^T| = {asym:e})"));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        if Cholesky::new(entries.clone()).is_none() {
            return invalid("covariance matrix is not positive definite");
        }
        let min = uncertainty_min_eigenvalue(&entries);
        if min < -UNCERTAINTY_TOL {
            return invalid(format!(
                "covariance matrix violates the uncertainty relation (min eigenvalue of V + iΩ/2 is {min:e})"
            ));
        }
        Ok(Self { modes: r / 2, entries })
    }

    /// Thermal product state with the given per-mode variances, each ≥ 1/2.
    pub fn thermal(variances: &[f64]) -> Result<Self> {
        if variances.is_empty() {
            return invalid("thermal state needs at least one mode");
        }
        let diag: Vec<f64> = variances.iter().flat_map(|&v| [v, v]).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// The `m`-mode vacuum.
    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::thermal(&vec![0.5; modes])
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// `S V S^T`, revalidated.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.shape() != self.entries.shape() {
            return invalid("transformation has the wrong shape");
        }
        Self::new(s * &self.entries * s.transpose())
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        Self::direct_sum_all([self, other])
    }

    /// Direct sum of any number of states, in order.
    pub fn direct_sum_all<'a>(parts: impl IntoIterator<Item = &'a Self>) -> Self {
        let parts: Vec<&Self> = parts.into_iter().collect();
        let dim: usize = parts.iter().map(|p| 2 * p.modes).sum();
        let mut out = DMatrix::zeros(dim, dim);
        let mut off = 0;
        for p in parts {
            let d = 2 * p.modes;
            out.view_mut((off, off), (d, d)).copy_from(&p.entries);
            off += d;
        }
        Self { modes: dim / 2, entries: out }
    }

    /// Reorders modes so that output mode `j` is input mode `perm[j]`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        let n = self.modes;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return invalid(format!("not a permutation of {n} modes"));
        }
        let out =
            DMatrix::from_fn(2 * n, 2 * n, |r, c| self.entries[(2 * perm[r / 2] + r % 2, 2 * perm[c / 2] + c % 2)]);
        Ok(Self { modes: n, entries: out })
    }

    /// Symplectic eigenvalues in ascending order.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let root = psd_sqrt(&self.entries);
        let k = &root * omega(self.modes) * &root;
        let sq = k.transpose() * &k;
        let mut ev: Vec<f64> =
            SymmetricEigen::new((&sq + sq.transpose()) * 0.5).eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect();
        ev.sort_by(f64::total_cmp);
        ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    }

    /// True when every symplectic eigenvalue is within `tol` of 1/2.
    pub fn is_pure(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues().iter().all(|v| (v - 0.5).abs() <= tol)
    }

    /// The `2 x 2` block of mode `j` (0-based).
    pub fn mode_block(&self, j: usize) -> DMatrix<f64> {
        self.entries.view((2 * j, 2 * j), (2, 2)).into_owned()
    }
}

fn uncertainty_min_eigenvalue(v: &DMatrix<f64>) -> f64 {
    // V + iΩ/2 is Hermitian; its real embedding [[V, -Ω/2], [Ω/2, V]] has
    // the same spectrum with doubled multiplicity.
    let d = v.nrows();
    let half_w = omega(d / 2) * 0.5;
    let mut emb = DMatrix::zeros(2 * d, 2 * d);
    emb.view_mut((0, 0), (d, d)).copy_from(v);
    emb.view_mut((d, d), (d, d)).copy_from(v);
    emb.view_mut((0, d), (d, d)).copy_from(&(-&half_w));
    emb.view_mut((d, 0), (d, d)).copy_from(&half_w);
    SymmetricEigen::new(emb).eigenvalues.min()
}

fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let roots = eig.eigenvalues.map(|x| if x < EIGEN_CLIP { 0.0 } else { x.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Mean photon number per signal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeEnergy {
    n_s: f64,
}

impl ProbeEnergy {
    pub fn new(n_s: f64) -> Result<Self> {
        if !n_s.is_finite() || n_s < 0.0 {
            return invalid(format!("mean photon number must be finite and >= 0, got {n_s}"));
        }
        Ok(Self { n_s })
    }

    pub fn n_s(&self) -> f64 {
        self.n_s
    }

    /// `mu = n_s + 1/2`, the diagonal variance of each probe mode.
    pub fn mu(&self) -> f64 {
        self.n_s + 0.5
    }

    /// `sqrt(mu^2 - 1/4)`, evaluated as `sqrt(n_s (n_s + 1))` to avoid cancellation.
    pub fn max_correlation(&self) -> f64 {
        (self.n_s * (self.n_s + 1.0)).sqrt()
    }
}

/// Single-mode phase-insensitive channel `V -> tau V + nu I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpiChannelParams {
    pub tau: f64,
    pub nu: f64,
}

impl GpiChannelParams {
    /// General GPI channel; requires `tau > 0` and `nu >= |1 - tau| / 2`.
    pub fn new(tau: f64, nu: f64) -> Result<Self> {
        if !(tau.is_finite() && nu.is_finite()) || tau <= 0.0 || nu < 0.0 {
            return invalid(format!("GPI channel needs tau > 0 and nu >= 0, got tau={tau}, nu={nu}"));
        }
        if nu < (1.0 - tau).abs() / 2.0 - 1e-12 {
            return invalid(format!("GPI channel tau={tau}, nu={nu} is not completely positive"));
        }
        Ok(Self { tau, nu })
    }

    /// Pure loss with transmissivity `eta` in (0, 1].
    pub fn pure_loss(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return invalid(format!("transmissivity must lie in (0, 1], got {eta}"));
        }
        Ok(Self { tau: eta, nu: (1.0 - eta) / 2.0 })
    }

    /// Additive Gaussian noise of variance `nu >= 0`.
    pub fn additive(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 0.0) {
            return invalid(format!("added noise must be finite and >= 0, got {nu}"));
        }
        Ok(Self { tau: 1.0, nu })
    }

    pub fn identity() -> Self {
        Self { tau: 1.0, nu: 0.0 }
    }
}

/// Two-mode squeezed vacuum with `n_s` photons per mode.
pub fn tmsv_cm(energy: ProbeEnergy) -> CovarianceMatrix {
    cvghz_cm(2, energy).expect("two modes is always valid")
}

/// Fully symmetric `m`-mode CV-GHZ state with maximal pairwise correlation.
pub fn cvghz_cm(m: usize, energy: ProbeEnergy) -> Result<CovarianceMatrix> {
    if m < 2 {
        return invalid(format!("CV-GHZ state needs m >= 2 modes, got {m}"));
    }
    let mu = energy.mu();
    let c = energy.max_correlation() / (m - 1) as f64;
    let v = DMatrix::from_fn(2 * m, 2 * m, |r, col| {
        if r % 2 != col % 2 {
            0.0
        } else if r / 2 == col / 2 {
            mu
        } else if r % 2 == 0 {
            c
        } else {
            -c
        }
    });
    CovarianceMatrix::new(v)
}

/// Applies one GPI channel per mode.
pub fn apply_gpi_pattern(cm: &CovarianceMatrix, params: &[GpiChannelParams]) -> Result<CovarianceMatrix> {
    if params.len() != cm.modes() {
        return invalid(format!("{} channel parameters supplied for a {}-mode state", params.len(), cm.modes()));
    }
    for p in params {
        GpiChannelParams::new(p.tau, p.nu)?;
    }
    let scale: Vec<f64> = params.iter().map(|p| p.tau.sqrt()).collect();
    let v = cm.matrix();
    let out = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| {
        let x = scale[r / 2] * scale[c / 2] * v[(r, c)];
        if r == c {
            x + params[r / 2].nu
        } else {
            x
        }
    });
    CovarianceMatrix::new(out)
}

/// Bures fidelity `||sqrt(rho) sqrt(sigma)||_1` of two zero-mean Gaussian states.
///
/// With `X_j = V_j Ω`, the matrix `G = (X_1 + X_2)^{-1} (X_2 X_1 - I/4)` has
/// eigenvalues `±i a_k`, and
/// `F^4 = prod_k (2 a_k + sqrt(4 a_k^2 - 1)) / det(V_1 + V_2)` over all `2n`
/// eigenvalues. The product is accumulated in logarithms.
pub fn gaussian_fidelity(a: &CovarianceMatrix, b: &CovarianceMatrix) -> Result<f64> {
    if a.modes() != b.modes() {
        return invalid(format!("fidelity between {}-mode and {}-mode states", a.modes(), b.modes()));
    }
    let n = a.modes();
    let dim = 2 * n;
    let w = omega(n);
    let sum = a.matrix() + b.matrix();
    let chol = Cholesky::new(sum.clone()).ok_or_else(|| Error::Numerical("V1 + V2 is not positive definite".into()))?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().take(dim).map(|x| 2.0 * x.ln()).sum();

    let x1 = a.matrix() * &w;
    let x2 = b.matrix() * &w;
    let rhs = &x2 * &x1 - DMatrix::identity(dim, dim) * 0.25;
    let g =
        (&sum * &w).lu().solve(&rhs).ok_or_else(|| Error::Numerical("singular matrix in fidelity kernel".into()))?;

    let mut log_num = 0.0;
    for a in eigenvalue_moduli(&g)? {
        let mut delta = (2.0 * a - 1.0) * (2.0 * a + 1.0);
        if delta < FIDELITY_CLIP * (1.0 + 4.0 * a * a) {
            delta = 0.0;
        }
        log_num += (2.0 * a + delta.sqrt()).ln();
    }
    let f = ((log_num - log_det) / 4.0).exp();
    if !f.is_finite() {
        return Err(Error::Numerical("fidelity is not finite".into()));
    }
    Ok(f.min(1.0))
}

/// Moduli of the eigenvalues of a general real matrix.
///
/// The unshifted QR iteration can cycle on matrices with highly structured
/// spectra (CV-GHZ outputs with repeated eigenvalues), so the iteration count
/// is capped and fixed orthogonal similarity transforms are tried next.
fn eigenvalue_moduli(g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = g.nrows();
    let max_iter = 200 * dim.max(1);
    if let Some(s) = Schur::try_new(g.clone(), f64::EPSILON, max_iter) {
        return Ok(s.complex_eigenvalues().iter().map(|z| z.norm()).collect());
    }
    for seed in 1..=3usize {
        let q = DMatrix::from_fn(dim, dim, |i, j| ((seed * (7 * i + 13 * j + 1)) as f64).sin()).qr().q();
        if let Some(s) = Schur::try_new(q.transpose() * g * &q, f64::EPSILON, max_iter) {
            return Ok(s.complex_eigenvalues().iter().map(|z| z.norm()).collect());
        }
    }
    Err(Error::Numerical("eigenvalue iteration did not converge in the fidelity kernel".into()))
}

/// Overlap `|<psi|phi>|` of two pure zero-mean Gaussian states, `det(V_1 + V_2)^{-1/4}`.
pub fn pure_state_overlap(a: &CovarianceMatrix, b: &CovarianceMatrix) -> Result<f64> {
    if a.modes() != b.modes() {
        return invalid("overlap between states of different mode counts");
    }
    let sum = a.matrix() + b.matrix();
    let chol = Cholesky::new(sum).ok_or_else(|| Error::Numerical("V1 + V2 is not positive definite".into()))?;
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|x| 2.0 * x.ln()).sum();
    Ok((-log_det / 4.0).exp())
}

/// Symplectic building blocks used to generate arbitrary Gaussian states.
pub mod symplectic {
    use nalgebra::DMatrix;

    /// Single-mode squeezer `diag(e^{-r}, e^{r})` on mode `j` of `n`.
    pub fn squeezer(n: usize, j: usize, r: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * n, 2 * n);
        s[(2 * j, 2 * j)] = (-r).exp();
        s[(2 * j + 1, 2 * j + 1)] = r.exp();
        s
    }

    /// Phase rotation by `theta` on mode `j` of `n`.
    pub fn rotation(n: usize, j: usize, theta: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * n, 2 * n);
        let (sn, cs) = theta.sin_cos();
        s[(2 * j, 2 * j)] = cs;
        s[(2 * j, 2 * j + 1)] = sn;
        s[(2 * j + 1, 2 * j)] = -sn;
        s[(2 * j + 1, 2 * j + 1)] = cs;
        s
    }

    /// Beam splitter with mixing angle `theta` between modes `j` and `k`.
    pub fn beam_splitter(n: usize, j: usize, k: usize, theta: f64) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * n, 2 * n);
        let (sn, cs) = theta.sin_cos();
        for q in 0..2 {
            let (a, b) = (2 * j + q, 2 * k + q);
            s[(a, a)] = cs;
            s[(b, b)] = cs;
            s[(a, b)] = sn;
            s[(b, a)] = -sn;
        }
        s
    }
}
