//! Column registry shared by the CSV writers and `--describe`.

use crate::config::Experiment;

pub struct Column {
    pub name: &'static str,
    pub doc: &'static str,
}

pub struct Table {
    pub file: &'static str,
    pub doc: &'static str,
    pub columns: &'static [Column],
    /// Columns repeated once per index `j`, with `<j>` in the name.
    pub repeated: &'static [Column],
}

impl Table {
    /// Header row for `repeat` copies of the repeated group.
    pub fn header(&self, repeat: usize) -> Vec<String> {
        let mut h: Vec<String> = self.columns.iter().map(|c| c.name.to_string()).collect();
        for j in 0..repeat {
            h.extend(
                self.repeated
                    .iter()
                    .map(|c| c.name.replace("<j>", &j.to_string())),
            );
        }
        h
    }
}

macro_rules! cols {
    ($($name:literal => $doc:literal),* $(,)?) => {
        &[$(Column { name: $name, doc: $doc }),*]
    };
}

pub const MDM: Table = Table {
    file: "mdm.csv",
    doc: "noise-free multistatic data matrix, one row per receiver",
    columns: cols!["row" => "receiver index"],
    repeated: cols![
        "re_<j>" => "real part of the entry for transmitter j",
        "im_<j>" => "imaginary part of the entry for transmitter j",
    ],
};

pub const MDM_NOISY: Table = Table {
    file: "mdm_noisy.csv",
    doc: "one noisy draw of the data matrix (only with synth.snr_db)",
    columns: MDM.columns,
    repeated: MDM.repeated,
};

pub const SPECTRUM: Table = Table {
    file: "spectrum.csv",
    doc: "null spectra on the probe grid, row-major with x fastest; empty where the probe hits an array element",
    columns: cols![
        "x" => "probe x",
        "y" => "probe y",
        "value_rx" => "Rx-mode null spectrum",
        "value_tx" => "Tx-mode null spectrum",
        "value_gen" => "generalized null spectrum",
    ],
    repeated: &[],
};

pub const DETECTIONS: Table = Table {
    file: "detections.csv",
    doc: "deepest local minima of the selected variant",
    columns: cols![
        "rank" => "0 = deepest",
        "variant" => "rx, tx or generalized",
        "x" => "grid x of the minimum",
        "y" => "grid y of the minimum",
        "value" => "null spectrum at the minimum",
        "nearest_k" => "index of the nearest true scatterer",
        "distance" => "distance to that scatterer",
    ],
    repeated: &[],
};

pub const THEORY: Table = Table {
    file: "theory.csv",
    doc: "first-order null-spectrum statistics at each scatterer",
    columns: cols![
        "k" => "scatterer index",
        "variant" => "rx, tx or generalized",
        "mean" => "mean of the null spectrum",
        "variance" => "variance of the null spectrum",
        "nsd" => "normalised standard deviation (independent of noise level)",
        "dof" => "degrees of freedom of the variant",
        "scale_rx" => "sigma_w^2 ||t_r||^2 (0 if not part of the variant)",
        "scale_tx" => "sigma_w^2 ||t_t||^2 (0 if not part of the variant)",
        "pdf_method" => "CDF evaluation scheme",
        "vs_tx" => "generalized NSD <= Tx-mode NSD",
        "vs_rx" => "generalized NSD <= Rx-mode NSD",
    ],
    repeated: &[],
};

pub const MC_LONG: Table = Table {
    file: "mc.csv",
    doc: "empirical statistics in long format",
    columns: cols![
        "scatterer" => "scatterer index",
        "variant" => "rx, tx or generalized",
        "statistic" => "mean, variance, nsd, trials or gap_warnings",
        "value" => "value of the statistic",
    ],
    repeated: &[],
};

pub const MC_HIST: Table = Table {
    file: "histogram.csv",
    doc: "histograms of the null spectrum over [0, max]",
    columns: cols![
        "scatterer" => "scatterer index",
        "variant" => "rx, tx or generalized",
        "bin" => "bin index",
        "lower" => "lower edge",
        "upper" => "upper edge",
        "count" => "samples in the bin",
    ],
    repeated: &[],
};

pub const SWEEP_SNR: Table = Table {
    file: "sweep_snr.csv",
    doc: "theoretical versus empirical NSD per SNR",
    columns: cols![
        "snr_db" => "signal-to-noise ratio in dB",
        "scatterer" => "scatterer index",
        "variant" => "rx, tx or generalized",
        "theory_nsd" => "first-order NSD",
        "empirical_nsd" => "Monte Carlo NSD",
        "nsd_rel_gap" => "|empirical - theory| / theory",
        "theory_mean" => "first-order mean",
        "empirical_mean" => "Monte Carlo mean",
    ],
    repeated: &[],
};

pub const SWEEP_SHIFT: Table = Table {
    file: "sweep_shift.csv",
    doc: "theoretical NSD versus rigid shift d of the scatterers along -x",
    columns: cols![
        "d" => "shift in wavelengths",
        "scatterer" => "scatterer index",
        "nsd_rx" => "Rx-mode NSD",
        "nsd_tx" => "Tx-mode NSD",
        "nsd_gen" => "generalized NSD",
        "vs_tx" => "generalized NSD <= Tx-mode NSD",
        "vs_rx" => "generalized NSD <= Rx-mode NSD",
        "skipped" => "shifted scatterer met an array element",
    ],
    repeated: &[],
};

pub fn tables(e: Experiment) -> &'static [Table] {
    match e {
        Experiment::Synth => &[MDM, MDM_NOISY],
        Experiment::Image => &[SPECTRUM, DETECTIONS],
        Experiment::Theory => &[THEORY],
        Experiment::Mc => &[MC_LONG, MC_HIST],
        Experiment::SweepSnr => &[SWEEP_SNR],
        Experiment::SweepShift => &[SWEEP_SHIFT],
    }
}

/// Text printed by `--describe`: one `file` line per table, then one line
/// per column as `  name<TAB>description`.
pub fn describe(e: Experiment) -> String {
    let mut out = String::new();
    for t in tables(e) {
        out.push_str(&format!("{}: {}\n", t.file, t.doc));
        for c in t.columns.iter().chain(t.repeated) {
            out.push_str(&format!("  {}\t{}\n", c.name, c.doc));
        }
    }
    out
}
