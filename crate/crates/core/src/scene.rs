//! Scene description and forward synthesis of the multistatic data matrix.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::specfun::green2d;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Reciprocal condition number below which the Foldy-Lax system is treated
/// as resonant.
pub const RESONANCE_RCOND: f64 = 1e-12;

/// A point in the imaging plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self::new(x, y)
    }
}

/// Unit in which geometry is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthUnit {
    /// Lengths in wavelengths; `kappa = 2 pi`.
    #[default]
    Wavelength,
    /// Lengths in an arbitrary absolute unit; `kappa` in rad per that unit.
    Absolute,
}

/// Ordered element positions of a transmit or receive array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    elements: Vec<Point2>,
}

impl ArrayGeometry {
    pub fn new(elements: Vec<Point2>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidScene("array has no elements".into()));
        }
        for (i, a) in elements.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidScene(format!("element {i} is not finite")));
            }
            if let Some(j) = elements[..i].iter().position(|b| b == a) {
                return Err(Error::InvalidScene(format!(
                    "elements {j} and {i} coincide at {a}"
                )));
            }
        }
        Ok(Self { elements })
    }

    /// Uniform linear array along `x`, centred on `center`.
    pub fn linear(count: usize, spacing: f64, center: Point2) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidScene(format!(
                "spacing {spacing} must be positive"
            )));
        }
        let half = (count as f64 - 1.0) / 2.0;
        Self::new(
            (0..count)
                .map(|i| center.translate((i as f64 - half) * spacing, 0.0))
                .collect(),
        )
    }

    pub fn elements(&self) -> &[Point2] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            elements: self.elements.iter().map(|p| p.translate(dx, dy)).collect(),
        }
    }
}

/// Point scatterer with complex scattering potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: Point2,
    pub tau: Complex64,
}

impl Scatterer {
    pub fn new(position: Point2, tau: Complex64) -> Self {
        Self { position, tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatteringModel {
    /// Single scattering: scattering matrix `diag(tau)`.
    #[serde(rename = "born", alias = "ba", alias = "born-approximated")]
    BornApproximated,
    /// Multiple scattering: `[diag(tau)^-1 - S]^-1`.
    #[serde(alias = "fl")]
    FoldyLax,
}

impl fmt::Display for ScatteringModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BornApproximated => "born",
            Self::FoldyLax => "foldy-lax",
        })
    }
}

/// A validated imaging scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    kappa: f64,
    unit: LengthUnit,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    scatterers: Vec<Scatterer>,
    model: ScatteringModel,
}

impl SceneConfig {
    pub fn new(
        kappa: f64,
        unit: LengthUnit,
        tx: ArrayGeometry,
        rx: ArrayGeometry,
        scatterers: Vec<Scatterer>,
        model: ScatteringModel,
    ) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidScene(format!(
                "wavenumber {kappa} must be positive"
            )));
        }
        if scatterers.is_empty() {
            return Err(Error::InvalidScene("scene has no scatterers".into()));
        }
        for (k, s) in scatterers.iter().enumerate() {
            if !s.position.is_finite() || !s.tau.re.is_finite() || !s.tau.im.is_finite() {
                return Err(Error::InvalidScene(format!("scatterer {k} is not finite")));
            }
            if s.tau == Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidScene(format!("scatterer {k} has zero tau")));
            }
            if let Some(j) = scatterers[..k]
                .iter()
                .position(|o| o.position == s.position)
            {
                return Err(Error::InvalidScene(format!(
                    "scatterers {j} and {k} coincide at {}",
                    s.position
                )));
            }
            for (name, array) in [("tx", &tx), ("rx", &rx)] {
                if let Some(i) = array.elements().iter().position(|&e| e == s.position) {
                    return Err(Error::InvalidScene(format!(
                        "scatterer {k} coincides with {name} element {i}"
                    )));
                }
            }
        }
        Ok(Self {
            kappa,
            unit,
            tx,
            rx,
            scatterers,
            model,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.kappa
    }

    pub fn unit(&self) -> LengthUnit {
        self.unit
    }

    pub fn tx(&self) -> &ArrayGeometry {
        &self.tx
    }

    pub fn rx(&self) -> &ArrayGeometry {
        &self.rx
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn model(&self) -> ScatteringModel {
        self.model
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    /// Number of scatterers `M`.
    pub fn m(&self) -> usize {
        self.scatterers.len()
    }

    pub fn with_model(&self, model: ScatteringModel) -> Self {
        Self {
            model,
            ..self.clone()
        }
    }

    pub fn with_scatterers(&self, scatterers: Vec<Scatterer>) -> Result<Self> {
        Self::new(
            self.kappa,
            self.unit,
            self.tx.clone(),
            self.rx.clone(),
            scatterers,
            self.model,
        )
    }

    /// Rigid shift of all scatterers by `-d` along `x`, leaving the arrays.
    pub fn shift_scatterers(&self, d: f64) -> Result<Self> {
        self.with_scatterers(
            self.scatterers
                .iter()
                .map(|s| Scatterer::new(s.position.translate(-d, 0.0), s.tau))
                .collect(),
        )
    }

    /// Rigid translation of the whole scene.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            tx: self.tx.translated(dx, dy),
            rx: self.rx.translated(dx, dy),
            scatterers: self
                .scatterers
                .iter()
                .map(|s| Scatterer::new(s.position.translate(dx, dy), s.tau))
                .collect(),
            ..self.clone()
        }
    }

    /// Scales every `tau_k` by `c`.
    pub fn scale_tau(&self, c: Complex64) -> Result<Self> {
        self.with_scatterers(
            self.scatterers
                .iter()
                .map(|s| Scatterer::new(s.position, s.tau * c))
                .collect(),
        )
    }
}

/// Half-wavelength spacing of the preset arrays.
pub const PRESET_SPACING: f64 = 0.5;

/// Lateral offset of the preset array centres. The Tx array is centred at
/// `(-offset, 0)` and the Rx array at `(+offset, 0)`; this value makes the
/// multiple-scattering index of the two-target preset equal 0.7445.
pub const PRESET_CALIBRATED_OFFSET: f64 = 4.580_938_608_480_39;

/// Two-target scene with linear Tx/Rx arrays, in wavelengths.
///
/// Defaults: 11 Tx and 17 Rx elements at half-wavelength spacing, targets at
/// `(-1, -6)` and `(1, -6)` with `tau = [3, 4]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoTargetPreset {
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing: f64,
    pub tx_center: [f64; 2],
    pub rx_center: [f64; 2],
    pub targets: Vec<[f64; 2]>,
    pub tau: Vec<[f64; 2]>,
    pub model: ScatteringModel,
}

impl Default for TwoTargetPreset {
    fn default() -> Self {
        Self {
            n_tx: 11,
            n_rx: 17,
            spacing: PRESET_SPACING,
            tx_center: [-PRESET_CALIBRATED_OFFSET, 0.0],
            rx_center: [PRESET_CALIBRATED_OFFSET, 0.0],
            targets: vec![[-1.0, -6.0], [1.0, -6.0]],
            tau: vec![[3.0, 0.0], [4.0, 0.0]],
            model: ScatteringModel::FoldyLax,
        }
    }
}

impl TwoTargetPreset {
    pub fn with_model(model: ScatteringModel) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<SceneConfig> {
        if self.targets.len() != self.tau.len() {
            return Err(Error::InvalidScene(format!(
                "{} targets but {} tau values",
                self.targets.len(),
                self.tau.len()
            )));
        }
        let tx = ArrayGeometry::linear(self.n_tx, self.spacing, self.tx_center.into())?;
        let rx = ArrayGeometry::linear(self.n_rx, self.spacing, self.rx_center.into())?;
        let scatterers = self
            .targets
            .iter()
            .zip(&self.tau)
            .map(|(p, t)| Scatterer::new((*p).into(), Complex64::new(t[0], t[1])))
            .collect();
        SceneConfig::new(
            2.0 * PI,
            LengthUnit::Wavelength,
            tx,
            rx,
            scatterers,
            self.model,
        )
    }
}

/// Multistatic data matrix, `N_R x N_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdm {
    pub entries: CMatrix,
    pub noise_free: bool,
    pub sigma_w2: Option<f64>,
    pub seed: Option<u64>,
}

impl Mdm {
    pub fn noise_free(entries: CMatrix) -> Self {
        Self {
            entries,
            noise_free: true,
            sigma_w2: None,
            seed: None,
        }
    }

    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.entries.ncols()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }
}

fn green_vector(elements: &[Point2], x: Point2, kappa: f64) -> Result<CVector> {
    let values = elements
        .iter()
        .map(|&r| green2d(r, x, kappa))
        .collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(values))
}

fn normalized(mut v: CVector) -> CVector {
    let n = v.norm();
    v.unscale_mut(n);
    v
}

/// Tx Green vector `g_t(x)`, entry `i` = `G(r_i, x)`.
pub fn green_vector_tx(scene: &SceneConfig, x: Point2) -> Result<CVector> {
    green_vector(scene.tx.elements(), x, scene.kappa)
}

/// Rx Green vector `g_r(x)`.
pub fn green_vector_rx(scene: &SceneConfig, x: Point2) -> Result<CVector> {
    green_vector(scene.rx.elements(), x, scene.kappa)
}

/// Unit-norm Tx Green vector.
pub fn unit_green_vector_tx(scene: &SceneConfig, x: Point2) -> Result<CVector> {
    green_vector_tx(scene, x).map(normalized)
}

/// Unit-norm Rx Green vector.
pub fn unit_green_vector_rx(scene: &SceneConfig, x: Point2) -> Result<CVector> {
    green_vector_rx(scene, x).map(normalized)
}

fn green_matrix(elements: &[Point2], scene: &SceneConfig) -> Result<CMatrix> {
    let mut g = CMatrix::zeros(elements.len(), scene.m());
    for (j, s) in scene.scatterers.iter().enumerate() {
        g.set_column(j, &green_vector(elements, s.position, scene.kappa)?);
    }
    Ok(g)
}

/// `G_t`, `N_T x M`.
pub fn green_matrix_tx(scene: &SceneConfig) -> Result<CMatrix> {
    green_matrix(scene.tx.elements(), scene)
}

/// `G_r`, `N_R x M`.
pub fn green_matrix_rx(scene: &SceneConfig) -> Result<CMatrix> {
    green_matrix(scene.rx.elements(), scene)
}

/// Scatterer interaction matrix `S`, zero on the diagonal.
pub fn interaction_matrix(scene: &SceneConfig) -> Result<CMatrix> {
    let m = scene.m();
    let mut s = CMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            if a != b {
                s[(a, b)] = green2d(
                    scene.scatterers[a].position,
                    scene.scatterers[b].position,
                    scene.kappa,
                )?;
            }
        }
    }
    Ok(s)
}

/// Reciprocal 2-norm condition number of a square matrix.
pub(crate) fn rcond(a: &CMatrix) -> f64 {
    match crate::subspace::singular_values(a) {
        Ok(sv) if sv[0] > 0.0 => sv[sv.len() - 1] / sv[0],
        _ => 0.0,
    }
}

/// Scattering matrix for the scene's model.
pub fn scattering_matrix(scene: &SceneConfig, model: ScatteringModel) -> Result<CMatrix> {
    let tau = CVector::from_iterator(scene.m(), scene.scatterers.iter().map(|s| s.tau));
    match model {
        ScatteringModel::BornApproximated => Ok(CMatrix::from_diagonal(&tau)),
        ScatteringModel::FoldyLax => {
            let inv_tau = tau.map(|t| Complex64::new(1.0, 0.0) / t);
            let a = CMatrix::from_diagonal(&inv_tau) - interaction_matrix(scene)?;
            let rc = rcond(&a);
            if !(rc >= RESONANCE_RCOND) {
                return Err(Error::Resonance { rcond: rc });
            }
            a.lu().try_inverse().ok_or(Error::Resonance { rcond: rc })
        }
    }
}

fn synthesize(scene: &SceneConfig, model: ScatteringModel) -> Result<CMatrix> {
    let gr = green_matrix_rx(scene)?;
    let gt = green_matrix_tx(scene)?;
    Ok(&gr * scattering_matrix(scene, model)? * gt.transpose())
}

/// Noise-free MDM `K = G_r M G_t^T` under the scene's scattering model.
pub fn build_mdm(scene: &SceneConfig) -> Result<Mdm> {
    synthesize(scene, scene.model).map(Mdm::noise_free)
}

/// `||K_FL - K_BA||_F / ||K_BA||_F`.
pub fn multiple_scattering_index(scene: &SceneConfig) -> Result<f64> {
    let kb = synthesize(scene, ScatteringModel::BornApproximated)?;
    let kf = synthesize(scene, ScatteringModel::FoldyLax)?;
    Ok((kf - &kb).norm() / kb.norm())
}

fn nonzero_norm2(k: &Mdm) -> Result<f64> {
    let n2 = k.entries.norm_squared();
    if n2 > 0.0 && n2.is_finite() {
        Ok(n2)
    } else {
        Err(Error::Degenerate("MDM has zero Frobenius norm".into()))
    }
}

/// `SNR = ||K||_F^2 / (sigma_w^2 N_T N_R)`, linear scale.
pub fn snr_of(k: &Mdm, sigma_w2: f64) -> Result<f64> {
    let n2 = nonzero_norm2(k)?;
    if !(sigma_w2 > 0.0) {
        return Err(Error::Degenerate(format!(
            "noise variance {sigma_w2} must be positive"
        )));
    }
    Ok(n2 / (sigma_w2 * k.entries.len() as f64))
}

/// Noise variance giving linear SNR `snr`.
pub fn sigma_for_snr(k: &Mdm, snr: f64) -> Result<f64> {
    let n2 = nonzero_norm2(k)?;
    if !(snr > 0.0) {
        return Err(Error::Degenerate(format!("SNR {snr} must be positive")));
    }
    Ok(n2 / (snr * k.entries.len() as f64))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Proper complex Gaussian matrix with per-entry variance `sigma_w2`.
///
/// Entries are drawn row by row, real part first.
pub fn noise_matrix(n_rx: usize, n_tx: usize, sigma_w2: f64, seed: u64) -> CMatrix {
    let mut rng = rng::stream(seed);
    let s = (0.5 * sigma_w2).sqrt();
    let mut w = CMatrix::zeros(n_rx, n_tx);
    for i in 0..n_rx {
        for j in 0..n_tx {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            w[(i, j)] = Complex64::new(s * re, s * im);
        }
    }
    w
}

/// `K_n = K + W` with `vec(W) ~ CN(0, sigma_w2 I)` drawn from `seed`.
pub fn add_noise(k: &Mdm, sigma_w2: f64, seed: u64) -> Result<Mdm> {
    if !(sigma_w2 >= 0.0 && sigma_w2.is_finite()) {
        return Err(Error::Degenerate(format!(
            "noise variance {sigma_w2} must be >= 0"
        )));
    }
    let entries = if sigma_w2 == 0.0 {
        k.entries.clone()
    } else {
        &k.entries + noise_matrix(k.n_rx(), k.n_tx(), sigma_w2, seed)
    };
    Ok(Mdm {
        entries,
        noise_free: sigma_w2 == 0.0 && k.noise_free,
        sigma_w2: Some(sigma_w2),
        seed: Some(seed),
    })
}
