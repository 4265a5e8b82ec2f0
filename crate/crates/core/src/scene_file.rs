//! TOML scene documents.
//!
//! ```toml
//! lambda = 1.0            # or kappa = 6.283185307179586
//! unit = "wavelength"
//! model = "foldy-lax"     # or "born"
//!
//! [tx.linear]
//! count = 11
//! spacing = 0.5
//! center = [-4.58, 0.0]
//!
//! [rx]
//! elements = [[4.0, 0.0], [4.5, 0.0], [5.0, 0.0]]
//!
//! [[scatterers]]
//! position = [-1.0, -6.0]
//! tau_re = 3.0
//! tau_im = 0.0
//! ```
//!
//! Unknown keys are rejected. Validation errors carry the line of the
//! offending table.

use std::f64::consts::PI;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::scene::{ArrayGeometry, LengthUnit, Point2, Scatterer, ScatteringModel, SceneConfig};
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearDoc {
    pub count: usize,
    pub spacing: f64,
    pub center: [f64; 2],
}

/// Either an explicit element list or a linear generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererDoc {
    pub position: [f64; 2],
    pub tau_re: f64,
    #[serde(default)]
    pub tau_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub unit: LengthUnit,
    pub model: ScatteringModel,
    pub tx: Spanned<ArrayDoc>,
    pub rx: Spanned<ArrayDoc>,
    pub scatterers: Vec<Spanned<ScattererDoc>>,
}

/// 1-based line of byte `offset` in `source`.
pub fn line_of(source: &str, offset: usize) -> usize {
    source.as_bytes()[..offset.min(source.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn at(source: &str, span: Range<usize>, msg: impl std::fmt::Display) -> Error {
    if source.is_empty() {
        Error::Config(msg.to_string())
    } else {
        Error::Config(format!("line {}: {msg}", line_of(source, span.start)))
    }
}

/// Maps a TOML deserialisation error to a configuration error with its line.
pub fn toml_error(source: &str, e: &toml::de::Error) -> Error {
    match e.span() {
        Some(span) => at(source, span, e.message().trim()),
        None => Error::Config(e.message().trim().to_string()),
    }
}

impl ArrayDoc {
    fn build(&self, name: &str) -> std::result::Result<ArrayGeometry, String> {
        match (&self.elements, &self.linear) {
            (Some(els), None) => ArrayGeometry::new(els.iter().map(|&p| p.into()).collect()),
            (None, Some(l)) => ArrayGeometry::linear(l.count, l.spacing, l.center.into()),
            (Some(_), Some(_)) => {
                return Err(format!(
                    "{name}: give either `elements` or `linear`, not both"
                ))
            }
            (None, None) => return Err(format!("{name}: missing `elements` or `linear`")),
        }
        .map_err(|e| format!("{name}: {e}"))
    }
}

impl SceneDoc {
    /// Validates the document; `source` is the text it was parsed from (used
    /// for line numbers, may be empty).
    pub fn build(&self, source: &str) -> Result<SceneConfig> {
        let kappa = match (self.kappa, self.lambda) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `kappa` or `lambda`, not both".into(),
                ))
            }
            (Some(k), None) => k,
            (None, Some(l)) => 2.0 * PI / l,
            (None, None) if self.unit == LengthUnit::Wavelength => 2.0 * PI,
            (None, None) => {
                return Err(Error::Config(
                    "`kappa` or `lambda` is required for absolute units".into(),
                ))
            }
        };
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Config(format!(
                "wavenumber {kappa} must be positive and finite"
            )));
        }
        let tx = self
            .tx
            .get_ref()
            .build("tx")
            .map_err(|m| at(source, self.tx.span(), m))?;
        let rx = self
            .rx
            .get_ref()
            .build("rx")
            .map_err(|m| at(source, self.rx.span(), m))?;
        if self.scatterers.is_empty() {
            return Err(Error::Config(
                "scene needs at least one [[scatterers]] entry".into(),
            ));
        }
        let mut scatterers: Vec<Scatterer> = Vec::with_capacity(self.scatterers.len());
        for (k, s) in self.scatterers.iter().enumerate() {
            let err = |m: String| at(source, s.span(), format!("scatterers[{k}]: {m}"));
            let doc = s.get_ref();
            let p: Point2 = doc.position.into();
            let tau = Complex64::new(doc.tau_re, doc.tau_im);
            if !p.is_finite() || !tau.re.is_finite() || !tau.im.is_finite() {
                return Err(err("non-finite value".into()));
            }
            if tau == Complex64::new(0.0, 0.0) {
                return Err(err("tau must be nonzero".into()));
            }
            if let Some(j) = scatterers.iter().position(|o| o.position == p) {
                return Err(err(format!("position coincides with scatterers[{j}]")));
            }
            for (name, a) in [("tx", &tx), ("rx", &rx)] {
                if let Some(i) = a.elements().iter().position(|&e| e == p) {
                    return Err(err(format!("position coincides with {name} element {i}")));
                }
            }
            scatterers.push(Scatterer::new(p, tau));
        }
        SceneConfig::new(kappa, self.unit, tx, rx, scatterers, self.model)
    }

    /// Document listing every element explicitly.
    pub fn from_scene(scene: &SceneConfig) -> Self {
        let arr = |a: &ArrayGeometry| {
            Spanned::new(
                0..0,
                ArrayDoc {
                    elements: Some(a.elements().iter().map(|p| [p.x, p.y]).collect()),
                    linear: None,
                },
            )
        };
        Self {
            kappa: Some(scene.kappa()),
            lambda: None,
            unit: scene.unit(),
            model: scene.model(),
            tx: arr(scene.tx()),
            rx: arr(scene.rx()),
            scatterers: scene
                .scatterers()
                .iter()
                .map(|s| {
                    Spanned::new(
                        0..0,
                        ScattererDoc {
                            position: [s.position.x, s.position.y],
                            tau_re: s.tau.re,
                            tau_im: s.tau.im,
                        },
                    )
                })
                .collect(),
        }
    }
}

pub fn parse_scene(text: &str) -> Result<SceneConfig> {
    let doc: SceneDoc = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    doc.build(text)
}

pub fn load_scene(path: &Path) -> Result<SceneConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scene(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn scene_to_toml(scene: &SceneConfig) -> String {
    toml::to_string(&SceneDoc::from_scene(scene)).expect("scene documents always serialise")
}
