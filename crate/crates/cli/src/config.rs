//! Experiment configuration files.
//!
//! ```toml
//! version = 1
//! seed = 7
//! trials = 10000
//! scene_file = "scene.toml"   # or an inline [scene] table, or [preset]
//!
//! [mc]
//! snr_db = 30.0
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use toml::Spanned;
use trmusic_core::imaging::{Grid, Variant};
use trmusic_core::mc::{CI_TRIALS, DEFAULT_BINS};
use trmusic_core::scene::{Point2, SceneConfig, TwoTargetPreset};
use trmusic_core::scene_file::{load_scene, toml_error, SceneDoc};
use trmusic_core::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Synth,
    Image,
    Theory,
    Mc,
    SweepSnr,
    SweepShift,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Synth => "synth",
            Experiment::Image => "image",
            Experiment::Theory => "theory",
            Experiment::Mc => "mc",
            Experiment::SweepSnr => "sweep-snr",
            Experiment::SweepShift => "sweep-shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    /// Also write one noisy draw at this SNR.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub origin: [f64; 2],
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            origin: [-3.0, -8.0],
            dx: 0.05,
            dy: 0.05,
            nx: 121,
            ny: 81,
        }
    }
}

impl GridParams {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(
            Point2::from(self.origin),
            self.dx,
            self.dy,
            self.nx,
            self.ny,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageParams {
    /// `inf` for a noise-free image.
    pub snr_db: f64,
    pub variant: Variant,
    pub grid: GridParams,
}

impl Default for ImageParams {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            variant: Variant::Generalized,
            grid: GridParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryParams {
    /// Sets the noise variance for means, variances and scales.
    pub snr_db: f64,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self { snr_db: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McParams {
    pub snr_db: f64,
    pub variants: Vec<Variant>,
    pub bins: usize,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            variants: Variant::ALL.to_vec(),
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSnrParams {
    pub snr_db: Vec<f64>,
    pub variants: Vec<Variant>,
}

impl Default for SweepSnrParams {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 20.0, 30.0],
            variants: Variant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepShiftParams {
    pub d: Vec<f64>,
}

impl Default for SweepShiftParams {
    fn default() -> Self {
        Self {
            d: (0..=80).map(|i| -10.0 + 0.25 * i as f64).collect(),
        }
    }
}

/// The file as written by the user.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    version: Spanned<u32>,
    #[serde(default)]
    experiment: Option<Spanned<Experiment>>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    scene_file: Option<Spanned<String>>,
    #[serde(default)]
    scene: Option<SceneDoc>,
    #[serde(default)]
    preset: Option<TwoTargetPreset>,
    #[serde(default)]
    synth: Option<SynthParams>,
    #[serde(default)]
    image: Option<ImageParams>,
    #[serde(default)]
    theory: Option<TheoryParams>,
    #[serde(default)]
    mc: Option<McParams>,
    #[serde(default)]
    sweep_snr: Option<SweepSnrParams>,
    #[serde(default)]
    sweep_shift: Option<SweepShiftParams>,
}

/// Fully resolved run configuration. Its TOML form is the config snapshot,
/// which is itself a valid config file.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_snr: Option<SweepSnrParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_shift: Option<SweepShiftParams>,
    pub scene: SceneDoc,
    #[serde(skip)]
    pub scene_config: Option<SceneConfig>,
}

impl RunConfig {
    pub fn scene(&self) -> &SceneConfig {
        self.scene_config.as_ref().expect("resolved scene")
    }

    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("run configs always serialise")
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

fn config_err(text: &str, span: std::ops::Range<usize>, msg: String) -> Error {
    Error::Config(format!(
        "line {}: {msg}",
        trmusic_core::scene_file::line_of(text, span.start)
    ))
}

/// Parses `text` (read from `path`, if any) for experiment `e`.
pub fn resolve(text: Option<(&str, &Path)>, e: Experiment, ov: &Overrides) -> Result<RunConfig> {
    let (file, text, base) = match text {
        Some((t, p)) => {
            let f: ConfigFile = toml::from_str(t).map_err(|err| toml_error(t, &err))?;
            (
                Some(f),
                t,
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
            )
        }
        None => (None, "", PathBuf::new()),
    };
    if let Some(f) = &file {
        if *f.version.get_ref() != CONFIG_VERSION {
            return Err(config_err(
                text,
                f.version.span(),
                format!(
                    "unsupported config version {} (expected {CONFIG_VERSION})",
                    f.version.get_ref()
                ),
            ));
        }
        if let Some(x) = &f.experiment {
            if *x.get_ref() != e {
                return Err(config_err(
                    text,
                    x.span(),
                    format!("config is for `{}`, not `{}`", x.get_ref().name(), e.name()),
                ));
            }
        }
    }
    let scene = match &file {
        None => TwoTargetPreset::default().build()?,
        Some(f) => match (&f.scene_file, &f.scene, &f.preset) {
            (None, None, None) => TwoTargetPreset::default().build()?,
            (Some(p), None, None) => load_scene(&base.join(p.get_ref()))?,
            (None, Some(doc), None) => doc.build(text)?,
            (None, None, Some(pr)) => pr.build()?,
            _ => {
                return Err(Error::Config(
                    "give at most one of `scene_file`, [scene] and [preset]".into(),
                ))
            }
        },
    };
    let f = file.as_ref();
    let seed = ov.seed.or(f.and_then(|f| f.seed)).unwrap_or(0);
    let trials = ov.trials.or(f.and_then(|f| f.trials)).unwrap_or(CI_TRIALS);
    if trials < 2 {
        return Err(Error::Config(format!("trials = {trials} must be >= 2")));
    }
    let mut rc = RunConfig {
        version: CONFIG_VERSION,
        experiment: e,
        seed,
        trials,
        synth: None,
        image: None,
        theory: None,
        mc: None,
        sweep_snr: None,
        sweep_shift: None,
        scene: SceneDoc::from_scene(&scene),
        scene_config: Some(scene),
    };
    match e {
        Experiment::Synth => rc.synth = Some(f.and_then(|f| f.synth.clone()).unwrap_or_default()),
        Experiment::Image => {
            let p = f.and_then(|f| f.image.clone()).unwrap_or_default();
            p.grid.grid()?;
            rc.image = Some(p);
        }
        Experiment::Theory => {
            rc.theory = Some(f.and_then(|f| f.theory.clone()).unwrap_or_default())
        }
        Experiment::Mc => {
            let p = f.and_then(|f| f.mc.clone()).unwrap_or_default();
            if p.variants.is_empty() || p.bins == 0 {
                return Err(Error::Config(
                    "mc: need at least one variant and one bin".into(),
                ));
            }
            rc.mc = Some(p);
        }
        Experiment::SweepSnr => {
            let p = f.and_then(|f| f.sweep_snr.clone()).unwrap_or_default();
            if p.snr_db.is_empty() || p.variants.is_empty() {
                return Err(Error::Config(
                    "sweep_snr: need SNR points and variants".into(),
                ));
            }
            rc.sweep_snr = Some(p);
        }
        Experiment::SweepShift => {
            let p = f.and_then(|f| f.sweep_shift.clone()).unwrap_or_default();
            if p.d.is_empty() {
                return Err(Error::Config("sweep_shift: empty shift grid".into()));
            }
            rc.sweep_shift = Some(p);
        }
    }
    Ok(rc)
}

pub fn load(path: Option<&Path>, e: Experiment, ov: &Overrides) -> Result<RunConfig> {
    match path {
        None => resolve(None, e, ov),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|err| Error::Config(format!("cannot read {}: {err}", p.display())))?;
            resolve(Some((&text, p)), e, ov).map_err(|err| match err {
                Error::Config(m) => Error::Config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}
