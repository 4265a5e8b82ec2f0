//! TR-MUSIC null spectra and grid-based scatterer localisation.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{unit_green_vector_rx, unit_green_vector_tx, CVector, Point2, SceneConfig};
use crate::subspace::SubspaceDecomposition;

/// TR-MUSIC variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `||U_n^H g_r(x)||^2`
    #[serde(alias = "rx")]
    RxMode,
    /// `||V_n^H g_t(x)^*||^2`
    #[serde(alias = "tx")]
    TxMode,
    /// Sum of the two.
    Generalized,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::RxMode, Variant::TxMode, Variant::Generalized];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::RxMode => "rx",
            Variant::TxMode => "tx",
            Variant::Generalized => "generalized",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rx" | "rx-mode" => Ok(Variant::RxMode),
            "tx" | "tx-mode" => Ok(Variant::TxMode),
            "generalized" | "gen" => Ok(Variant::Generalized),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Unit Green vectors of one probe point: `g_r(x)` and `g_t(x)^*`.
#[derive(Debug, Clone)]
pub struct Steering {
    pub g_rx: CVector,
    pub g_tx_conj: CVector,
}

impl Steering {
    pub fn at(scene: &SceneConfig, x: Point2) -> Result<Self> {
        Ok(Self {
            g_rx: unit_green_vector_rx(scene, x)?,
            g_tx_conj: unit_green_vector_tx(scene, x)?.conjugate(),
        })
    }
}

/// Rx and Tx null-spectrum values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumValue {
    pub rx: f64,
    pub tx: f64,
}

impl SpectrumValue {
    pub fn get(&self, v: Variant) -> f64 {
        match v {
            Variant::RxMode => self.rx,
            Variant::TxMode => self.tx,
            Variant::Generalized => self.rx + self.tx,
        }
    }
}

fn check_dims(d: &SubspaceDecomposition, scene: &SceneConfig) -> Result<()> {
    if d.n_rx() != scene.n_rx() || d.n_tx() != scene.n_tx() {
        return Err(Error::Dimension(format!(
            "decomposition is {}x{}, scene arrays are {}x{}",
            d.n_rx(),
            d.n_tx(),
            scene.n_rx(),
            scene.n_tx()
        )));
    }
    Ok(())
}

/// Both single-mode spectra for precomputed steering vectors.
pub fn spectrum_value(d: &SubspaceDecomposition, s: &Steering) -> SpectrumValue {
    SpectrumValue {
        rx: (d.u_n.adjoint() * &s.g_rx).norm_squared(),
        tx: (d.v_n.adjoint() * &s.g_tx_conj).norm_squared(),
    }
}

/// Null spectrum of variant `v` at probe point `x`.
pub fn null_spectrum(
    d: &SubspaceDecomposition,
    scene: &SceneConfig,
    x: Point2,
    v: Variant,
) -> Result<f64> {
    check_dims(d, scene)?;
    let s = Steering::at(scene, x)?;
    Ok(match v {
        Variant::RxMode => (d.u_n.adjoint() * &s.g_rx).norm_squared(),
        Variant::TxMode => (d.v_n.adjoint() * &s.g_tx_conj).norm_squared(),
        Variant::Generalized => spectrum_value(d, &s).get(v),
    })
}

/// Rectangular probe lattice, row-major with `x` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Point2,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(origin: Point2, dx: f64, dy: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config("grid must be nonempty".into()));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) || !origin.is_finite() {
            return Err(Error::Config(
                "grid spacing must be positive and finite".into(),
            ));
        }
        Ok(Self {
            origin,
            dx,
            dy,
            nx,
            ny,
        })
    }

    /// Square-celled grid covering `center +- half_extent` on both axes.
    pub fn centered(center: Point2, half_x: f64, half_y: f64, spacing: f64) -> Result<Self> {
        let nx = (2.0 * half_x / spacing).round() as usize + 1;
        let ny = (2.0 * half_y / spacing).round() as usize + 1;
        let origin = center.translate(
            -(nx as f64 - 1.0) * spacing / 2.0,
            -(ny as f64 - 1.0) * spacing / 2.0,
        );
        Self::new(origin, spacing, spacing, nx, ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, ix: usize, iy: usize) -> Point2 {
        self.origin
            .translate(ix as f64 * self.dx, iy as f64 * self.dy)
    }

    pub fn point_at(&self, index: usize) -> Point2 {
        self.point(index % self.nx, index / self.nx)
    }
}

/// Steering vectors of every grid point; reused across noise realisations.
#[derive(Debug, Clone)]
pub struct SteeringGrid {
    pub grid: Grid,
    pub steering: Vec<Option<Steering>>,
}

impl SteeringGrid {
    /// Points coinciding with an array element are stored as `None`.
    pub fn new(scene: &SceneConfig, grid: Grid) -> Result<Self> {
        let steering = (0..grid.len())
            .into_par_iter()
            .map(|i| match Steering::at(scene, grid.point_at(i)) {
                Ok(s) => Ok(Some(s)),
                Err(Error::Singularity { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, steering })
    }

    pub fn evaluate(&self, d: &SubspaceDecomposition) -> Result<SpectrumMap> {
        if let Some(s) = self.steering.iter().flatten().next() {
            if s.g_rx.len() != d.n_rx() || s.g_tx_conj.len() != d.n_tx() {
                return Err(Error::Dimension(
                    "steering grid does not match decomposition".into(),
                ));
            }
        }
        let values = self
            .steering
            .par_iter()
            .map(|s| s.as_ref().map(|s| spectrum_value(d, s)))
            .collect();
        Ok(SpectrumMap {
            grid: self.grid,
            values,
        })
    }
}

/// Null spectra over a grid.
#[derive(Debug, Clone)]
pub struct SpectrumMap {
    pub grid: Grid,
    /// `None` where the probe point coincides with an array element.
    pub values: Vec<Option<SpectrumValue>>,
}

impl SpectrumMap {
    pub fn values(&self, v: Variant) -> Vec<Option<f64>> {
        self.values.iter().map(|x| x.map(|s| s.get(v))).collect()
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.is_none().then_some(i))
            .collect()
    }
}

/// Evaluates all variants over `grid`, in row-major order.
pub fn spectrum_map(
    d: &SubspaceDecomposition,
    scene: &SceneConfig,
    grid: Grid,
) -> Result<SpectrumMap> {
    check_dims(d, scene)?;
    SteeringGrid::new(scene, grid)?.evaluate(d)
}

/// A located null-spectrum minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub position: Point2,
    pub ix: usize,
    pub iy: usize,
    pub value: f64,
}

/// The `m` deepest strict local minima (8-neighbourhood, boundary cells
/// excluded), ascending by value, ties broken by row-major index.
pub fn locate_scatterers(map: &SpectrumMap, v: Variant, m: usize) -> Result<Vec<Detection>> {
    let g = map.grid;
    if g.nx < 3 || g.ny < 3 {
        return Err(Error::Config(format!(
            "grid {}x{} is smaller than 3x3",
            g.nx, g.ny
        )));
    }
    let vals = map.values(v);
    let mut minima = Vec::new();
    for iy in 1..g.ny - 1 {
        for ix in 1..g.nx - 1 {
            let Some(c) = vals[iy * g.nx + ix] else {
                continue;
            };
            let mut strict = true;
            'nb: for jy in iy - 1..=iy + 1 {
                for jx in ix - 1..=ix + 1 {
                    if (jx, jy) == (ix, iy) {
                        continue;
                    }
                    if let Some(n) = vals[jy * g.nx + jx] {
                        if n <= c {
                            strict = false;
                            break 'nb;
                        }
                    }
                }
            }
            if strict {
                minima.push(Detection {
                    position: g.point(ix, iy),
                    ix,
                    iy,
                    value: c,
                });
            }
        }
    }
    if minima.len() < m {
        return Err(Error::UnderDetection {
            found: minima.len(),
            wanted: m,
        });
    }
    minima.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then((a.iy, a.ix).cmp(&(b.iy, b.ix)))
    });
    minima.truncate(m);
    Ok(minima)
}
