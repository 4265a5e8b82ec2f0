use anyhow::Result;
use serde_json::json;
use trmusic_core::imaging::{locate_scatterers, spectrum_map, Variant};
use trmusic_core::mc::{run_trials, sigma_w2_for_db, sweep_shift, sweep_snr, McConfig};
use trmusic_core::perturb::{
    pdf_descriptor, scene_t_vectors, stability_inequalities, theory_table,
};
use trmusic_core::scene::{add_noise, build_mdm, multiple_scattering_index, snr_of, CMatrix};
use trmusic_core::subspace::svd_partition;

use crate::columns;
use crate::config::RunConfig;
use crate::output::{fmt_f64, RunDir};

fn matrix_rows(k: &CMatrix) -> Vec<Vec<String>> {
    (0..k.nrows())
        .map(|i| {
            let mut r = vec![i.to_string()];
            for j in 0..k.ncols() {
                r.push(fmt_f64(k[(i, j)].re));
                r.push(fmt_f64(k[(i, j)].im));
            }
            r
        })
        .collect()
}

pub fn synth(cfg: &RunConfig, out: &RunDir) -> Result<()> {
    let scene = cfg.scene();
    let k = build_mdm(scene)?;
    let eta = multiple_scattering_index(scene)?;
    out.write_csv(&columns::MDM, k.n_tx(), &matrix_rows(&k.entries))?;
    let mut noisy = json!(null);
    if let Some(snr_db) = cfg.synth.as_ref().and_then(|s| s.snr_db) {
        let s2 = sigma_w2_for_db(&k, snr_db)?;
        let kn = add_noise(&k, s2, cfg.seed)?;
        out.write_csv(&columns::MDM_NOISY, k.n_tx(), &matrix_rows(&kn.entries))?;
        noisy = json!({ "snr_db": snr_db, "sigma_w2": s2, "seed": cfg.seed });
    }
    out.write_summary(
        "synth",
        json!({
            "n_rx": k.n_rx(),
            "n_tx": k.n_tx(),
            "m": scene.m(),
            "model": scene.model().to_string(),
            "frobenius_norm": k.frobenius_norm(),
            "eta": eta,
            "noisy": noisy,
        }),
    )
}

pub fn image(cfg: &RunConfig, out: &RunDir) -> Result<()> {
    let p = cfg.image.as_ref().expect("image params");
    let scene = cfg.scene();
    let k = build_mdm(scene)?;
    let s2 = sigma_w2_for_db(&k, p.snr_db)?;
    let kn = add_noise(&k, s2, cfg.seed)?;
    let d = svd_partition(&kn, scene.m())?;
    let grid = p.grid.grid()?;
    let map = spectrum_map(&d, scene, grid)?;
    let rows: Vec<Vec<String>> = map
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let pt = grid.point_at(i);
            let mut r = vec![fmt_f64(pt.x), fmt_f64(pt.y)];
            match v {
                Some(v) => r.extend(Variant::ALL.iter().map(|&x| fmt_f64(v.get(x)))),
                None => r.extend(std::iter::repeat_n(String::new(), 3)),
            }
            r
        })
        .collect();
    out.write_csv(&columns::SPECTRUM, 0, &rows)?;
    let found = locate_scatterers(&map, p.variant, scene.m())?;
    let mut det_rows = Vec::new();
    let mut det_json = Vec::new();
    for (rank, f) in found.iter().enumerate() {
        let (k, dist) = scene
            .scatterers()
            .iter()
            .enumerate()
            .map(|(k, s)| (k, s.position.distance(f.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("scene has scatterers");
        det_rows.push(vec![
            rank.to_string(),
            p.variant.to_string(),
            fmt_f64(f.position.x),
            fmt_f64(f.position.y),
            fmt_f64(f.value),
            k.to_string(),
            fmt_f64(dist),
        ]);
        det_json.push(json!({ "x": f.position.x, "y": f.position.y, "value": f.value, "nearest_k": k, "distance": dist }));
    }
    out.write_csv(&columns::DETECTIONS, 0, &det_rows)?;
    out.write_summary(
        "image",
        json!({
            "snr_db": p.snr_db,
            "sigma_w2": s2,
            "variant": p.variant,
            "grid": { "nx": grid.nx, "ny": grid.ny, "dx": grid.dx, "dy": grid.dy },
            "flagged_points": map.flagged().len(),
            "gap_warning": d.gap_warning.is_some(),
            "detections": det_json,
        }),
    )
}

pub fn theory(cfg: &RunConfig, out: &RunDir) -> Result<()> {
    let p = cfg.theory.as_ref().expect("theory params");
    let scene = cfg.scene();
    let (d, tvs) = scene_t_vectors(scene)?;
    let k = build_mdm(scene)?;
    let s2 = sigma_w2_for_db(&k, p.snr_db)?;
    let table = theory_table(&tvs, s2)?;
    let mut rows = Vec::new();
    let mut stab = Vec::new();
    for e in &table {
        let tv = &tvs[e.k];
        let st = stability_inequalities(tv)?;
        let pd = pdf_descriptor(tv, s2, e.variant)?;
        rows.push(vec![
            e.k.to_string(),
            e.variant.to_string(),
            fmt_f64(e.mean),
            fmt_f64(e.variance),
            fmt_f64(e.nsd),
            e.dof.to_string(),
            fmt_f64(e.scale_rx),
            fmt_f64(e.scale_tx),
            pd.method().to_string(),
            st.tx_holds.to_string(),
            st.rx_holds.to_string(),
        ]);
        if e.variant == Variant::Generalized {
            stab.push(
                json!({ "k": e.k, "stability": st, "t_rx_norm2": tv.a(), "t_tx_norm2": tv.b() }),
            );
        }
    }
    out.write_csv(&columns::THEORY, 0, &rows)?;
    out.write_summary(
        "theory",
        json!({
            "snr_db": p.snr_db,
            "sigma_w2": s2,
            "snr_linear": if s2 > 0.0 { snr_of(&k, s2)? } else { f64::INFINITY },
            "n_rdof": d.n_rdof(),
            "n_tdof": d.n_tdof(),
            "eta": multiple_scattering_index(scene)?,
            "rows": table,
            "scatterers": stab,
        }),
    )
}

pub fn mc(cfg: &RunConfig, out: &RunDir) -> Result<()> {
    let p = cfg.mc.as_ref().expect("mc params");
    let mc = McConfig {
        variants: p.variants.clone(),
        histogram_bins: p.bins,
        ..McConfig::new(cfg.scene().clone(), p.snr_db, cfg.trials, cfg.seed)
    };
    let run = run_trials(&mc)?;
    let rows: Vec<Vec<String>> = run
        .report
        .long_rows()
        .into_iter()
        .map(|(k, v, stat, x)| vec![k.to_string(), v.to_string(), stat.to_string(), fmt_f64(x)])
        .collect();
    out.write_csv(&columns::MC_LONG, 0, &rows)?;
    let mut hist = Vec::new();
    for s in &run.report.stats {
        for (b, c) in s.histogram.counts.iter().enumerate() {
            hist.push(vec![
                s.k.to_string(),
                s.variant.to_string(),
                b.to_string(),
                fmt_f64(s.histogram.edges[b]),
                fmt_f64(s.histogram.edges[b + 1]),
                c.to_string(),
            ]);
        }
    }
    out.write_csv(&columns::MC_HIST, 0, &hist)?;
    let stats: Vec<_> = run
        .report
        .stats
        .iter()
        .map(|s| json!({ "k": s.k, "variant": s.variant, "mean": s.mean, "variance": s.variance, "nsd": s.nsd }))
        .collect();
    out.write_summary(
        "mc",
        json!({
            "snr_db": run.report.snr_db,
            "sigma_w2": run.report.sigma_w2,
            "trials": run.report.n_trials,
            "gap_warnings": run.report.gap_warnings,
            "stats": stats,
        }),
    )
}

pub fn sweep_snr_cmd(cfg: &RunConfig, out: &RunDir) -> Result<()> {
    let p = cfg.sweep_snr.as_ref().expect("sweep-snr params");
    let mc = McConfig {
        variants: p.variants.clone(),
        ..McConfig::new(cfg.scene().clone(), p.snr_db[0], cfg.trials, cfg.seed)
    };
    let table = sweep_snr(&mc, &p.snr_db)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.snr_db),
                r.k.to_string(),
                r.variant.to_string(),
                fmt_f64(r.theory_nsd),
                fmt_f64(r.empirical_nsd),
                fmt_f64(r.nsd_rel_gap),
                fmt_f64(r.theory_mean),
                fmt_f64(r.empirical_mean),
            ]
        })
        .collect();
    out.write_csv(&columns::SWEEP_SNR, 0, &rows)?;
    out.write_summary("sweep-snr", json!({ "trials": cfg.trials, "rows": table }))
}

pub fn sweep_shift_cmd(cfg: &RunConfig, out: &RunDir) -> Result<()> {
    let p = cfg.sweep_shift.as_ref().expect("sweep-shift params");
    let table = sweep_shift(cfg.scene(), &p.d)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.d),
                r.k.to_string(),
                fmt_f64(r.nsd_rx),
                fmt_f64(r.nsd_tx),
                fmt_f64(r.nsd_gen),
                r.vs_tx.to_string(),
                r.vs_rx.to_string(),
                r.skipped.to_string(),
            ]
        })
        .collect();
    out.write_csv(&columns::SWEEP_SHIFT, 0, &rows)?;
    let computed: Vec<_> = table.iter().filter(|r| !r.skipped).collect();
    out.write_summary(
        "sweep-shift",
        json!({
            "points": p.d.len(),
            "skipped": table.iter().filter(|r| r.skipped).count(),
            "gen_never_above_tx": computed.iter().all(|r| r.vs_tx),
            "min_nsd_gen": computed.iter().map(|r| r.nsd_gen).fold(f64::INFINITY, f64::min),
        }),
    )
}
