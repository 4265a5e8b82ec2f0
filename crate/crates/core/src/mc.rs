//! Seeded Monte Carlo harness for the null spectrum at the true scatterer
//! positions, plus the SNR and rigid-shift sweeps.
//!
//! Trial `t` draws its noise from `trial_seed(master_seed, t)` only. Trials
//! may run on a thread pool; their results are collected in trial order and
//! reduced serially, so serial and parallel runs agree bit for bit. The same
//! master seed at different SNRs reuses the same normalised noise draws.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::{spectrum_value, SpectrumValue, Steering, Variant};
use crate::perturb::{nsd, scene_t_vectors, stability_inequalities, theoretical_moments};
use crate::rng::trial_seed;
use crate::scene::{build_mdm, db_to_linear, noise_matrix, sigma_for_snr, Mdm, SceneConfig};
use crate::stats::{mean_var, Histogram};
use crate::subspace::partition_matrix;

/// Trial count for CI-scale runs.
pub const CI_TRIALS: usize = 10_000;
/// Trial count for full replication runs.
pub const REPLICATION_TRIALS: usize = 100_000;
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone)]
pub struct McConfig {
    pub scene: SceneConfig,
    /// `+inf` means noise-free.
    pub snr_db: f64,
    pub n_trials: usize,
    pub master_seed: u64,
    pub variants: Vec<Variant>,
    pub parallel: bool,
    pub histogram_bins: usize,
}

impl McConfig {
    pub fn new(scene: SceneConfig, snr_db: f64, n_trials: usize, master_seed: u64) -> Self {
        Self {
            scene,
            snr_db,
            n_trials,
            master_seed,
            variants: Variant::ALL.to_vec(),
            parallel: true,
            histogram_bins: DEFAULT_BINS,
        }
    }

    pub fn ci(scene: SceneConfig, snr_db: f64, master_seed: u64) -> Self {
        Self::new(scene, snr_db, CI_TRIALS, master_seed)
    }

    pub fn replication(scene: SceneConfig, snr_db: f64, master_seed: u64) -> Self {
        Self::new(scene, snr_db, REPLICATION_TRIALS, master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 2 {
            return Err(Error::Config(format!(
                "n_trials = {} must be >= 2",
                self.n_trials
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid snr_db {}", self.snr_db)));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants requested".into()));
        }
        if self.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be positive".into()));
        }
        Ok(())
    }
}

/// Null spectra of one trial, one entry per scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub spectra: Vec<SpectrumValue>,
    pub gap_warning: bool,
}

/// Empirical statistics of one (scatterer, variant) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McStat {
    pub k: usize,
    pub variant: Variant,
    pub mean: f64,
    /// Unbiased (n - 1) estimator.
    pub variance: f64,
    /// `sqrt(variance) / mean`; NaN when the mean is zero.
    pub nsd: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub snr_db: f64,
    pub sigma_w2: f64,
    pub n_trials: usize,
    pub master_seed: u64,
    pub gap_warnings: usize,
    pub stats: Vec<McStat>,
}

impl McReport {
    pub fn stat(&self, k: usize, v: Variant) -> Option<&McStat> {
        self.stats.iter().find(|s| s.k == k && s.variant == v)
    }

    /// Long-format rows `(scatterer, variant, statistic, value)`.
    pub fn long_rows(&self) -> Vec<(usize, Variant, &'static str, f64)> {
        let mut rows = Vec::with_capacity(self.stats.len() * 5);
        for s in &self.stats {
            rows.push((s.k, s.variant, "mean", s.mean));
            rows.push((s.k, s.variant, "variance", s.variance));
            rows.push((s.k, s.variant, "nsd", s.nsd));
            rows.push((s.k, s.variant, "trials", self.n_trials as f64));
            rows.push((s.k, s.variant, "gap_warnings", self.gap_warnings as f64));
        }
        rows
    }
}

/// Raw samples and their summary.
#[derive(Debug, Clone)]
pub struct McRun {
    pub trials: Vec<TrialOutcome>,
    pub report: McReport,
}

impl McRun {
    /// Samples of one (scatterer, variant) pair in trial order.
    pub fn samples(&self, k: usize, v: Variant) -> Vec<f64> {
        self.trials.iter().map(|t| t.spectra[k].get(v)).collect()
    }
}

/// Noise variance for `snr_db` relative to `k`; zero for `+inf`.
pub fn sigma_w2_for_db(k: &Mdm, snr_db: f64) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    sigma_for_snr(k, db_to_linear(snr_db))
}

struct Prepared {
    k: Mdm,
    steering: Vec<Steering>,
}

fn prepare(scene: &SceneConfig) -> Result<Prepared> {
    let k = build_mdm(scene)?;
    let steering = scene
        .scatterers()
        .iter()
        .map(|s| Steering::at(scene, s.position))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { k, steering })
}

fn one_trial(p: &Prepared, m: usize, sigma_w2: f64, seed: u64, t: usize) -> Result<TrialOutcome> {
    let kn = if sigma_w2 == 0.0 {
        p.k.entries.clone()
    } else {
        &p.k.entries + noise_matrix(p.k.n_rx(), p.k.n_tx(), sigma_w2, trial_seed(seed, t as u64))
    };
    let d = partition_matrix(&kn, m, sigma_w2 == 0.0)?;
    Ok(TrialOutcome {
        spectra: p.steering.iter().map(|s| spectrum_value(&d, s)).collect(),
        gap_warning: d.gap_warning.is_some(),
    })
}

fn run_prepared(cfg: &McConfig, p: &Prepared, sigma_w2: f64) -> Result<McRun> {
    let m = cfg.scene.m();
    let trials: Vec<TrialOutcome> = if cfg.parallel {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| one_trial(p, m, sigma_w2, cfg.master_seed, t))
            .collect::<Result<_>>()?
    } else {
        (0..cfg.n_trials)
            .map(|t| one_trial(p, m, sigma_w2, cfg.master_seed, t))
            .collect::<Result<_>>()?
    };
    let mut stats = Vec::new();
    for k in 0..m {
        for &v in &cfg.variants {
            let xs: Vec<f64> = trials.iter().map(|t| t.spectra[k].get(v)).collect();
            let (mean, variance) = mean_var(&xs)?;
            stats.push(McStat {
                k,
                variant: v,
                mean,
                variance,
                nsd: if mean > 0.0 {
                    variance.sqrt() / mean
                } else {
                    f64::NAN
                },
                histogram: Histogram::from_samples(&xs, cfg.histogram_bins)?,
            });
        }
    }
    let report = McReport {
        snr_db: cfg.snr_db,
        sigma_w2,
        n_trials: cfg.n_trials,
        master_seed: cfg.master_seed,
        gap_warnings: trials.iter().filter(|t| t.gap_warning).count(),
        stats,
    };
    Ok(McRun { trials, report })
}

/// Runs `cfg.n_trials` noisy realisations.
pub fn run_trials(cfg: &McConfig) -> Result<McRun> {
    cfg.validate()?;
    let p = prepare(&cfg.scene)?;
    let sigma_w2 = sigma_w2_for_db(&p.k, cfg.snr_db)?;
    run_prepared(cfg, &p, sigma_w2)
}

/// One row of the SNR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrRow {
    pub snr_db: f64,
    pub k: usize,
    pub variant: Variant,
    pub theory_mean: f64,
    pub empirical_mean: f64,
    pub theory_nsd: f64,
    pub empirical_nsd: f64,
    /// `|empirical - theory| / theory` for the NSD.
    pub nsd_rel_gap: f64,
}

/// Runs `cfg` at every SNR of the grid (ascending order of the grid as
/// given). The theory NSD is computed once; it does not depend on SNR.
pub fn sweep_snr(cfg: &McConfig, snr_grid: &[f64]) -> Result<Vec<SnrRow>> {
    if snr_grid.is_empty() {
        return Err(Error::Config("empty SNR grid".into()));
    }
    cfg.validate()?;
    let p = prepare(&cfg.scene)?;
    let (_, tvs) = scene_t_vectors(&cfg.scene)?;
    let mut rows = Vec::new();
    for &snr_db in snr_grid {
        let sigma_w2 = sigma_w2_for_db(&p.k, snr_db)?;
        let run = run_prepared(
            &McConfig {
                snr_db,
                ..cfg.clone()
            },
            &p,
            sigma_w2,
        )?;
        for s in &run.report.stats {
            let tv = &tvs[s.k];
            let theory_nsd = nsd(tv, s.variant)?;
            rows.push(SnrRow {
                snr_db,
                k: s.k,
                variant: s.variant,
                theory_mean: theoretical_moments(tv, sigma_w2, s.variant)?.mean,
                empirical_mean: s.mean,
                theory_nsd,
                empirical_nsd: s.nsd,
                nsd_rel_gap: (s.nsd - theory_nsd).abs() / theory_nsd,
            });
        }
    }
    Ok(rows)
}

/// Theory NSDs of one scatterer at one rigid shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftRow {
    pub d: f64,
    pub k: usize,
    pub nsd_rx: f64,
    pub nsd_tx: f64,
    pub nsd_gen: f64,
    /// Generalized no worse than Tx mode.
    pub vs_tx: bool,
    /// Generalized no worse than Rx mode.
    pub vs_rx: bool,
    /// Shifted scatterer met an array element; NSD columns are NaN.
    pub skipped: bool,
}

/// Theory-only NSD table versus a rigid shift `d` of all scatterers along
/// `-x`.
pub fn sweep_shift(base: &SceneConfig, d_grid: &[f64]) -> Result<Vec<ShiftRow>> {
    if d_grid.is_empty() {
        return Err(Error::Config("empty shift grid".into()));
    }
    let mut rows = Vec::new();
    for &d in d_grid {
        let hits_element = base.scatterers().iter().any(|s| {
            let p = s.position.translate(-d, 0.0);
            base.tx()
                .elements()
                .iter()
                .chain(base.rx().elements())
                .any(|&e| e == p)
        });
        if hits_element {
            for k in 0..base.m() {
                rows.push(ShiftRow {
                    d,
                    k,
                    nsd_rx: f64::NAN,
                    nsd_tx: f64::NAN,
                    nsd_gen: f64::NAN,
                    vs_tx: false,
                    vs_rx: false,
                    skipped: true,
                });
            }
            continue;
        }
        let scene = base.shift_scatterers(d)?;
        let (_, tvs) = scene_t_vectors(&scene)?;
        for tv in &tvs {
            let st = stability_inequalities(tv)?;
            rows.push(ShiftRow {
                d,
                k: tv.k,
                nsd_rx: nsd(tv, Variant::RxMode)?,
                nsd_tx: nsd(tv, Variant::TxMode)?,
                nsd_gen: nsd(tv, Variant::Generalized)?,
                vs_tx: st.tx_holds,
                vs_rx: st.rx_holds,
                skipped: false,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{
        ArrayGeometry, LengthUnit, Point2, Scatterer, ScatteringModel, TwoTargetPreset,
    };
    use crate::Complex64;

    fn small(n: usize, seed: u64) -> McConfig {
        McConfig::new(TwoTargetPreset::default().build().unwrap(), 20.0, n, seed)
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(run_trials(&small(1, 0)), Err(Error::Config(_))));
        let mut c = small(10, 0);
        c.variants.clear();
        assert!(matches!(run_trials(&c), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let mut a = small(64, 11);
        let r1 = run_trials(&a).unwrap();
        let r2 = run_trials(&a).unwrap();
        a.parallel = false;
        let r3 = run_trials(&a).unwrap();
        assert_eq!(r1.report, r2.report);
        assert_eq!(r1.report, r3.report);
        assert_eq!(r1.trials, r3.trials);
        let other = run_trials(&small(64, 12)).unwrap();
        assert_ne!(r1.report.stats[0].mean, other.report.stats[0].mean);
    }

    #[test]
    fn noise_free_trials_vanish() {
        let c = small(4, 3);
        let run = run_trials(&McConfig {
            snr_db: f64::INFINITY,
            ..c
        })
        .unwrap();
        assert_eq!(run.report.sigma_w2, 0.0);
        for s in &run.report.stats {
            assert!(s.mean <= 1e-18, "{s:?}");
        }
    }

    #[test]
    fn report_invariants() {
        let run = run_trials(&small(200, 5)).unwrap();
        assert_eq!(run.report.stats.len(), 6);
        for s in &run.report.stats {
            assert_eq!(s.histogram.total(), 200);
            assert!((s.nsd - s.variance.sqrt() / s.mean).abs() == 0.0);
        }
        let g = run.samples(0, Variant::Generalized);
        let r = run.samples(0, Variant::RxMode);
        let t = run.samples(0, Variant::TxMode);
        for i in 0..g.len() {
            assert_eq!(g[i], r[i] + t[i]);
        }
        assert_eq!(run.report.long_rows().len(), 30);
    }

    #[test]
    fn snr_sweep_shape() {
        let rows = sweep_snr(&small(20, 1), &[30.0, 10.0]).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].snr_db, 30.0);
        assert_eq!(rows[11].snr_db, 10.0);
        for v in Variant::ALL {
            let th: Vec<f64> = rows
                .iter()
                .filter(|r| r.variant == v && r.k == 0)
                .map(|r| r.theory_nsd)
                .collect();
            assert_eq!(th[0], th[1]);
        }
        assert!(sweep_snr(&small(20, 1), &[]).is_err());
    }

    #[test]
    fn common_random_numbers_scale_noise() {
        // same seed at two SNRs draws the same normalised noise, so at high SNR
        // the spectra scale with sigma^2
        let c = small(8, 2);
        let a = run_trials(&McConfig {
            snr_db: 80.0,
            ..c.clone()
        })
        .unwrap();
        let b = run_trials(&McConfig { snr_db: 90.0, ..c }).unwrap();
        for (x, y) in a
            .samples(1, Variant::RxMode)
            .iter()
            .zip(b.samples(1, Variant::RxMode))
        {
            assert!((x / y - 10.0).abs() < 1e-3, "{x} {y}");
        }
    }

    #[test]
    fn shift_sweep_constants_and_skip() {
        let base = TwoTargetPreset::default().build().unwrap();
        let rows = sweep_shift(&base, &[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!((r.nsd_rx - 1.0 / 15f64.sqrt()).abs() < 1e-12);
            assert!((r.nsd_tx - 1.0 / 3.0).abs() < 1e-12);
            assert!(r.vs_tx);
        }
        // shift one scatterer onto a transmitter
        let tx = ArrayGeometry::linear(3, 0.5, Point2::new(0.0, 0.0)).unwrap();
        let rx = ArrayGeometry::linear(4, 0.5, Point2::new(0.0, -10.0)).unwrap();
        let scene = SceneConfig::new(
            2.0 * std::f64::consts::PI,
            LengthUnit::Wavelength,
            tx,
            rx,
            vec![Scatterer::new(
                Point2::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
            )],
            ScatteringModel::BornApproximated,
        )
        .unwrap();
        let rows = sweep_shift(&scene, &[0.25, 1.0]).unwrap();
        assert!(!rows[0].skipped);
        assert!(rows[1].skipped && rows[1].nsd_gen.is_nan());
    }
}
