//! First-order perturbation of the null spectra at the scatterer positions.
//!
//! With additive noise `W`, the Rx and Tx null spectra at scatterer `k` are
//! to first order `||xi_r||^2` and `||xi_t||^2`, where
//! `xi_r = -U_n^H W t_r` and `xi_t = -V_n^H W^H t_t`. For circular white
//! noise these are independent complex Gaussian vectors, so each spectrum is
//! a scaled complex chi-square variable.

pub mod pdf;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::Variant;
use crate::scene::{
    build_mdm, unit_green_vector_rx, unit_green_vector_tx, CMatrix, CVector, SceneConfig,
};
use crate::subspace::{svd_partition, SubspaceDecomposition};
use crate::Complex64;

pub use pdf::{GammaComponent, PdfDescriptor};

/// Perturbation vectors of one scatterer.
#[derive(Debug, Clone)]
pub struct TVectors {
    pub k: usize,
    /// `K^- g_r(x_k)`, length `N_T`.
    pub t_rx: CVector,
    /// `(K^-)^H g_t(x_k)^*`, length `N_R`.
    pub t_tx: CVector,
    pub n_rdof: usize,
    pub n_tdof: usize,
}

impl TVectors {
    /// `||t_r||^2`.
    pub fn a(&self) -> f64 {
        self.t_rx.norm_squared()
    }

    /// `||t_t||^2`.
    pub fn b(&self) -> f64 {
        self.t_tx.norm_squared()
    }

    pub fn dof(&self, v: Variant) -> usize {
        match v {
            Variant::RxMode => self.n_rdof,
            Variant::TxMode => self.n_tdof,
            Variant::Generalized => self.n_rdof + self.n_tdof,
        }
    }
}

/// t-vectors of scatterer `k` from a noise-free decomposition.
pub fn t_vectors(d: &SubspaceDecomposition, scene: &SceneConfig, k: usize) -> Result<TVectors> {
    if !d.noise_free {
        return Err(Error::NoisyDecomposition);
    }
    if k >= scene.m() {
        return Err(Error::Dimension(format!(
            "scatterer index {k} out of range for {} scatterers",
            scene.m()
        )));
    }
    if d.n_rx() != scene.n_rx() || d.n_tx() != scene.n_tx() {
        return Err(Error::Dimension(
            "decomposition does not match scene arrays".into(),
        ));
    }
    let x = scene.scatterers()[k].position;
    let pinv = d.truncated_pseudo_inverse();
    let g_r = unit_green_vector_rx(scene, x)?;
    let g_t = unit_green_vector_tx(scene, x)?;
    Ok(TVectors {
        k,
        t_rx: &pinv * g_r,
        t_tx: pinv.adjoint() * g_t.conjugate(),
        n_rdof: d.n_rdof(),
        n_tdof: d.n_tdof(),
    })
}

/// Noise-free decomposition of `scene` and t-vectors of every scatterer.
pub fn scene_t_vectors(scene: &SceneConfig) -> Result<(SubspaceDecomposition, Vec<TVectors>)> {
    let d = svd_partition(&build_mdm(scene)?, scene.m())?;
    let tv = (0..scene.m())
        .map(|k| t_vectors(&d, scene, k))
        .collect::<Result<Vec<_>>>()?;
    Ok((d, tv))
}

/// First-order null-space coordinates of the perturbed steering vectors.
#[derive(Debug, Clone)]
pub struct Xi {
    /// `-U_n^H W t_r`, length `N_Rdof`.
    pub rx: CVector,
    /// `-V_n^H W^H t_t`, length `N_Tdof`.
    pub tx: CVector,
}

impl Xi {
    /// First-order approximation of the null spectrum.
    pub fn spectrum(&self, v: Variant) -> f64 {
        match v {
            Variant::RxMode => self.rx.norm_squared(),
            Variant::TxMode => self.tx.norm_squared(),
            Variant::Generalized => self.rx.norm_squared() + self.tx.norm_squared(),
        }
    }
}

pub fn first_order_xi(d: &SubspaceDecomposition, tv: &TVectors, w: &CMatrix) -> Result<Xi> {
    if w.shape() != (d.n_rx(), d.n_tx()) {
        return Err(Error::Dimension(format!(
            "noise is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            d.n_rx(),
            d.n_tx()
        )));
    }
    Ok(Xi {
        rx: -(d.u_n.adjoint() * (w * &tv.t_rx)),
        tx: -(d.v_n.adjoint() * (w.adjoint() * &tv.t_tx)),
    })
}

/// Covariance of `[xi_r; xi_t]`: block diagonal `diag(c_r I, c_t I)` with a
/// vanishing pseudo-covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiCovariance {
    /// `sigma_w^2 ||t_r||^2`
    pub rx_variance: f64,
    /// `sigma_w^2 ||t_t||^2`
    pub tx_variance: f64,
    pub n_rdof: usize,
    pub n_tdof: usize,
}

impl XiCovariance {
    pub fn dense(&self) -> CMatrix {
        let n = self.n_rdof + self.n_tdof;
        DMatrix::from_fn(n, n, |i, j| {
            if i != j {
                Complex64::new(0.0, 0.0)
            } else if i < self.n_rdof {
                Complex64::new(self.rx_variance, 0.0)
            } else {
                Complex64::new(self.tx_variance, 0.0)
            }
        })
    }

    pub fn pseudo(&self) -> CMatrix {
        let n = self.n_rdof + self.n_tdof;
        CMatrix::zeros(n, n)
    }
}

fn check_sigma(sigma_w2: f64) -> Result<()> {
    if !(sigma_w2 >= 0.0) || !sigma_w2.is_finite() {
        return Err(Error::Config(format!(
            "noise variance {sigma_w2} must be >= 0"
        )));
    }
    Ok(())
}

pub fn xi_covariance(tv: &TVectors, sigma_w2: f64) -> Result<XiCovariance> {
    check_sigma(sigma_w2)?;
    Ok(XiCovariance {
        rx_variance: sigma_w2 * tv.a(),
        tx_variance: sigma_w2 * tv.b(),
        n_rdof: tv.n_rdof,
        n_tdof: tv.n_tdof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// High-SNR mean and variance of the null spectrum at the scatterer.
pub fn theoretical_moments(tv: &TVectors, sigma_w2: f64, v: Variant) -> Result<Moments> {
    let d = pdf_descriptor(tv, sigma_w2, v)?;
    Ok(Moments {
        mean: d.mean(),
        variance: d.variance(),
    })
}

/// Normalised standard deviation `std / mean`; independent of the noise level.
pub fn nsd(tv: &TVectors, v: Variant) -> Result<f64> {
    let (a, b) = (tv.a(), tv.b());
    let (r, t) = (tv.n_rdof as f64, tv.n_tdof as f64);
    let (num, den) = match v {
        Variant::RxMode => (a * a * r, a * r),
        Variant::TxMode => (b * b * t, b * t),
        Variant::Generalized => (a * a * r + b * b * t, a * r + b * t),
    };
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "{v} null spectrum has zero mean at scatterer {}",
            tv.k
        )));
    }
    Ok(num.sqrt() / den)
}

/// When the generalized spectrum is at least as stable (NSD-wise) as each
/// single-mode spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    /// `(1 - N_Rdof / N_Tdof) / 2`
    pub tx_lhs: f64,
    /// `||t_t||^2 / ||t_r||^2`
    pub tx_rhs: f64,
    /// `(1 - N_Tdof / N_Rdof) / 2`
    pub rx_lhs: f64,
    /// `||t_r||^2 / ||t_t||^2`
    pub rx_rhs: f64,
    /// Generalized beats Tx mode.
    pub tx_holds: bool,
    /// Generalized beats Rx mode.
    pub rx_holds: bool,
}

pub fn stability_inequalities(tv: &TVectors) -> Result<Stability> {
    let (a, b) = (tv.a(), tv.b());
    if a == 0.0 && b == 0.0 {
        return Err(Error::Degenerate(format!(
            "both t-vectors vanish at scatterer {}",
            tv.k
        )));
    }
    if tv.n_rdof == 0 || tv.n_tdof == 0 {
        return Err(Error::Degenerate(
            "stability needs both orthogonal subspaces".into(),
        ));
    }
    let (r, t) = (tv.n_rdof as f64, tv.n_tdof as f64);
    let tx_lhs = 0.5 * (1.0 - r / t);
    let rx_lhs = 0.5 * (1.0 - t / r);
    let tx_rhs = if a == 0.0 { f64::INFINITY } else { b / a };
    let rx_rhs = if b == 0.0 { f64::INFINITY } else { a / b };
    Ok(Stability {
        tx_lhs,
        tx_rhs,
        rx_lhs,
        rx_rhs,
        tx_holds: tx_lhs <= tx_rhs,
        rx_holds: rx_lhs <= rx_rhs,
    })
}

/// First-order law of the null spectrum at the scatterer.
pub fn pdf_descriptor(tv: &TVectors, sigma_w2: f64, v: Variant) -> Result<PdfDescriptor> {
    check_sigma(sigma_w2)?;
    let rx = GammaComponent {
        shape: tv.n_rdof as u64,
        scale: sigma_w2 * tv.a(),
    };
    let tx = GammaComponent {
        shape: tv.n_tdof as u64,
        scale: sigma_w2 * tv.b(),
    };
    match v {
        Variant::RxMode => PdfDescriptor::new(&[rx]),
        Variant::TxMode => PdfDescriptor::new(&[tx]),
        Variant::Generalized => PdfDescriptor::new(&[rx, tx]),
    }
}

/// One row of the theory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryEntry {
    pub k: usize,
    pub variant: Variant,
    pub mean: f64,
    pub variance: f64,
    pub nsd: f64,
    pub dof: usize,
    /// Scale of the Rx component (0 when absent).
    pub scale_rx: f64,
    /// Scale of the Tx component (0 when absent).
    pub scale_tx: f64,
}

/// Theory rows for every scatterer and variant, scatterer-major.
pub fn theory_table(tvs: &[TVectors], sigma_w2: f64) -> Result<Vec<TheoryEntry>> {
    let mut out = Vec::with_capacity(tvs.len() * 3);
    for tv in tvs {
        for v in Variant::ALL {
            let m = theoretical_moments(tv, sigma_w2, v)?;
            let (scale_rx, scale_tx) = match v {
                Variant::RxMode => (sigma_w2 * tv.a(), 0.0),
                Variant::TxMode => (0.0, sigma_w2 * tv.b()),
                Variant::Generalized => (sigma_w2 * tv.a(), sigma_w2 * tv.b()),
            };
            out.push(TheoryEntry {
                k: tv.k,
                variant: v,
                mean: m.mean,
                variance: m.variance,
                nsd: nsd(tv, v)?,
                dof: tv.dof(v),
                scale_rx,
                scale_tx,
            });
        }
    }
    Ok(out)
}
