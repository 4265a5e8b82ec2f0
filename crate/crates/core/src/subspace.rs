//! Signal / orthogonal subspace partition of an MDM.

use nalgebra::linalg::QR;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::{CMatrix, CVector, Mdm};

/// Relative gap `(sigma_m - sigma_{m+1}) / sigma_m` under which the
/// partition is flagged as ambiguous.
pub const GAP_TOLERANCE: f64 = 1e-9;

/// Collapse of the signal/noise singular-value gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapWarning {
    pub sigma_m: f64,
    pub sigma_next: f64,
}

/// Partitioned SVD `K = [U_s U_n] diag(Sigma_s, Sigma_n) [V_s V_n]^H`.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    pub u_s: CMatrix,
    pub u_n: CMatrix,
    pub v_s: CMatrix,
    pub v_n: CMatrix,
    /// Leading `M` singular values, descending and positive.
    pub sigma_s: Vec<f64>,
    /// Remaining singular values (at most `min(N_R, N_T) - M` of them).
    pub sigma_n: Vec<f64>,
    /// Whether the decomposed matrix was noise-free.
    pub noise_free: bool,
    pub gap_warning: Option<GapWarning>,
}

impl SubspaceDecomposition {
    pub fn m(&self) -> usize {
        self.sigma_s.len()
    }

    pub fn n_rx(&self) -> usize {
        self.u_s.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.v_s.nrows()
    }

    /// `N_Rdof = N_R - M`.
    pub fn n_rdof(&self) -> usize {
        self.u_n.ncols()
    }

    /// `N_Tdof = N_T - M`.
    pub fn n_tdof(&self) -> usize {
        self.v_n.ncols()
    }

    pub fn n_dof(&self) -> usize {
        self.n_rdof() + self.n_tdof()
    }

    /// Left orthogonal projector `U_n U_n^H`.
    pub fn projector_rx(&self) -> CMatrix {
        &self.u_n * self.u_n.adjoint()
    }

    /// Right orthogonal projector `V_n V_n^H`.
    pub fn projector_tx(&self) -> CMatrix {
        &self.v_n * self.v_n.adjoint()
    }

    /// `U Sigma V^H` over all retained singular triplets.
    pub fn reconstruct(&self) -> CMatrix {
        let mut k = scale_columns(&self.u_s, &self.sigma_s) * self.v_s.adjoint();
        let r = self.sigma_n.len();
        if r > 0 {
            let un = self.u_n.columns(0, r).into_owned();
            let vn = self.v_n.columns(0, r).into_owned();
            k += scale_columns(&un, &self.sigma_n) * vn.adjoint();
        }
        k
    }

    /// Truncated pseudo-inverse `V_s Sigma_s^-1 U_s^H`, shape `N_T x N_R`.
    pub fn truncated_pseudo_inverse(&self) -> CMatrix {
        let inv: Vec<f64> = self.sigma_s.iter().map(|s| 1.0 / s).collect();
        scale_columns(&self.v_s, &inv) * self.u_s.adjoint()
    }
}

/// Same as [`SubspaceDecomposition::truncated_pseudo_inverse`].
pub fn truncated_pseudo_inverse(d: &SubspaceDecomposition) -> CMatrix {
    d.truncated_pseudo_inverse()
}

fn scale_columns(a: &CMatrix, s: &[f64]) -> CMatrix {
    let mut out = a.clone();
    for (j, &v) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(v);
    }
    out
}

/// Sweep limit of the Jacobi SVD; typical matrices converge in under ten.
pub const MAX_JACOBI_SWEEPS: usize = 60;

/// Thin SVD `A = U diag(sigma) V^H` of a matrix with at least as many rows
/// as columns, in descending order of `sigma`. `V` is square and unitary;
/// columns of `U` with `sigma = 0` are zero.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// One-sided (Hestenes) Jacobi SVD. Column pairs are rotated until every
/// pair is orthogonal to `rows * eps` relative to their norms, which keeps
/// tiny singular values and their vectors accurate in rank-deficient input.
pub fn jacobi_svd(a: &CMatrix) -> Result<ThinSvd> {
    let (rows, n) = a.shape();
    if rows < n {
        return Err(Error::Dimension(format!(
            "jacobi_svd needs rows >= cols, got {rows}x{n}"
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("matrix has non-finite entries".into()));
    }
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    let tol = rows.max(1) as f64 * f64::EPSILON;
    let mut converged = n < 2;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                rotate(&mut w, p, q, c, c * t, phase);
                rotate(&mut v, p, q, c, c * t, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Degenerate(format!(
            "Jacobi SVD did not converge in {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = CMatrix::zeros(rows, n);
    for (j, &i) in order.iter().enumerate() {
        if norms[i] > 0.0 {
            u.set_column(j, &w.column(i).unscale(norms[i]));
        }
    }
    Ok(ThinSvd {
        u,
        sigma: order.iter().map(|&i| norms[i]).collect(),
        v: v.select_columns(&order),
    })
}

/// Columns `p`, `q` <- `[x, y] [[c, s], [-s, c]]` with `y = conj(phase) col_q`.
fn rotate(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)] * phase.conj();
        m[(i, p)] = x * c - y * s;
        m[(i, q)] = x * s + y * c;
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.nrows() >= a.ncols() {
        jacobi_svd(a).map(|s| s.sigma)
    } else {
        jacobi_svd(&a.adjoint()).map(|s| s.sigma)
    }
}

/// `x` orthonormalised against the first `j` columns of `q` (two Gram-Schmidt
/// passes), with the norm left after projection.
fn project_out(q: &CMatrix, j: usize, x: &CVector) -> (CVector, f64) {
    let mut y = x.clone();
    for _ in 0..2 {
        for i in 0..j {
            let c = q.column(i).dotc(&y);
            y -= q.column(i) * c;
        }
    }
    let n = y.norm();
    (y, n)
}

/// Square unitary matrix whose leading columns follow `first` in order.
/// Columns of `first` that are zero or not independent of the earlier ones,
/// and all columns past `first`, are filled from the orthogonal complement
/// (Householder QR of `[kept | I]`).
fn unitary_completion(first: &CMatrix) -> CMatrix {
    let n = first.nrows();
    let mut q = CMatrix::zeros(n, n);
    let mut kept = Vec::new();
    let mut missing = Vec::new();
    for j in 0..first.ncols() {
        let x = first.column(j);
        let nrm = x.norm();
        let (y, r) = if nrm > 0.0 {
            project_out(&q, j, &x.unscale(nrm))
        } else {
            (CVector::zeros(n), 0.0)
        };
        if r > 0.5 {
            q.set_column(j, &y.unscale(r));
            kept.push(j);
        } else {
            missing.push(j);
        }
    }
    missing.extend(first.ncols()..n);
    if missing.is_empty() {
        return q;
    }
    let k = kept.len();
    let mut aug = CMatrix::zeros(n, k + n);
    aug.columns_mut(0, k).copy_from(&q.select_columns(&kept));
    aug.columns_mut(k, n).fill_with_identity();
    let comp = QR::new(aug).q().columns(k, n - k).into_owned();
    for (i, &slot) in missing.iter().enumerate() {
        let (y, r) = project_out(&q, n, &comp.column(i).into_owned());
        q.set_column(slot, &y.unscale(r));
    }
    q
}

/// Partitions the SVD of `k` into the `m` leading (signal) triplets and the
/// orthogonal remainder.
pub fn svd_partition(k: &Mdm, m: usize) -> Result<SubspaceDecomposition> {
    partition_matrix(&k.entries, m, k.noise_free)
}

pub fn partition_matrix(k: &CMatrix, m: usize, noise_free: bool) -> Result<SubspaceDecomposition> {
    let (nr, nt) = k.shape();
    let r = nr.min(nt);
    if m >= r {
        return Err(Error::Dimension(format!(
            "signal dimension {m} must be below min(N_R, N_T) = {r}"
        )));
    }
    if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("MDM has non-finite entries".into()));
    }
    // Tall: K = U S V^H directly. Wide: K^H = V S U^H.
    let (u, v, sigma) = if nr >= nt {
        let s = jacobi_svd(k)?;
        (unitary_completion(&s.u), s.v, s.sigma)
    } else {
        let s = jacobi_svd(&k.adjoint())?;
        (s.v, unitary_completion(&s.u), s.sigma)
    };

    if let Some(bad) = sigma[..m].iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Degenerate(format!(
            "singular value {bad} of the signal block is zero"
        )));
    }
    let gap_warning = (m > 0)
        .then(|| GapWarning {
            sigma_m: sigma[m - 1],
            sigma_next: sigma[m],
        })
        .filter(|g| g.sigma_m - g.sigma_next <= GAP_TOLERANCE * g.sigma_m);

    Ok(SubspaceDecomposition {
        u_s: u.columns(0, m).into_owned(),
        u_n: u.columns(m, nr - m).into_owned(),
        v_s: v.columns(0, m).into_owned(),
        v_n: v.columns(m, nt - m).into_owned(),
        sigma_s: sigma[..m].to_vec(),
        sigma_n: sigma[m..].to_vec(),
        noise_free,
        gap_warning,
    })
}
