//! Synthetic benchmarks with independently and jointly predictive features.
//!
//! Every feature is drawn i.i.d. uniform on `[0, 1)`. The label is 1 when
//! an independent-mode feature falls inside one of its intervals, or when a
//! strict majority of the combined-mode features exceed the threshold.
//!
//! Sampling is reproducible across platforms: a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)` yields one `u64` per cell in row-major order, mapped
//! to `(u >> 11) · 2⁻⁵³`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, Value};
use crate::error::{Error, Result};

pub const SUITE_SAMPLES: usize = 2000;
pub const SUITE_FEATURES: usize = 8;
pub const SUITE_SEEDS: u64 = 10;
pub const TARGET_NAME: &str = "y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Independent,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteMode {
    Independent,
    Combined,
    Mixed,
}

impl SuiteMode {
    pub const ALL: [SuiteMode; 3] = [SuiteMode::Independent, SuiteMode::Combined, SuiteMode::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            SuiteMode::Independent => "independent",
            SuiteMode::Combined => "combined",
            SuiteMode::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantFeature {
    pub index: usize,
    pub mode: FeatureMode,
    /// Closed sub-intervals of `[0, 1]`; used in independent mode only.
    #[serde(default)]
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_features")]
    pub n_features: usize,
    pub relevant: Vec<RelevantFeature>,
    /// Combined-mode threshold.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    SUITE_SAMPLES
}
fn default_features() -> usize {
    SUITE_FEATURES
}
fn default_threshold() -> f64 {
    0.5
}

impl SynthSpec {
    /// Checks indices, interval bounds and disjointness, reporting the
    /// offending field path.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: String, msg: String| Err(Error::InvalidSpec(format!("{path}: {msg}")));
        if self.n_samples == 0 {
            return bad("n_samples".into(), "must be at least 1".into());
        }
        if self.n_features == 0 {
            return bad("n_features".into(), "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold".into(), format!("{} outside [0, 1]", self.threshold));
        }
        for (k, rf) in self.relevant.iter().enumerate() {
            if rf.index >= self.n_features {
                return bad(format!("relevant[{k}].index"), format!("{} >= n_features {}", rf.index, self.n_features));
            }
            if self.relevant[..k].iter().any(|o| o.index == rf.index) {
                return bad(format!("relevant[{k}].index"), format!("feature {} listed twice", rf.index));
            }
            let mut sorted: Vec<(usize, (f64, f64))> = rf.intervals.iter().copied().enumerate().collect();
            for &(i, (lo, hi)) in &sorted {
                let path = format!("relevant[{k}].intervals[{i}]");
                if !(lo <= hi) {
                    return bad(path, format!("hi {hi} < lo {lo}"));
                }
                if lo < 0.0 || hi > 1.0 {
                    return bad(path, format!("[{lo}, {hi}] not within [0, 1]"));
                }
            }
            sorted.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0));
            for w in sorted.windows(2) {
                if w[1].1 .0 <= w[0].1 .1 {
                    return bad(
                        format!("relevant[{k}].intervals[{}]", w[1].0),
                        format!("overlaps intervals[{}]", w[0].0),
                    );
                }
            }
        }
        Ok(())
    }

    fn has_mode(&self, mode: FeatureMode) -> bool {
        self.relevant.iter().any(|r| r.mode == mode)
    }

    /// Label of one sample under this spec.
    pub fn label(&self, row: &[f64]) -> bool {
        let independent = self.relevant.iter().any(|r| {
            r.mode == FeatureMode::Independent
                && r.intervals.iter().any(|&(lo, hi)| lo <= row[r.index] && row[r.index] <= hi)
        });
        let combined: Vec<usize> = self
            .relevant
            .iter()
            .filter(|r| r.mode == FeatureMode::Combined)
            .map(|r| r.index)
            .collect();
        let above = combined.iter().filter(|&&i| row[i] > self.threshold).count();
        independent || (!combined.is_empty() && 2 * above > combined.len())
    }

    pub fn relevant_indices(&self) -> Vec<usize> {
        self.relevant.iter().map(|r| r.index).collect()
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Raw uniform feature matrix for a spec.
pub fn sample_features(spec: &SynthSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_samples)
        .map(|_| (0..spec.n_features).map(|_| uniform(&mut rng)).collect())
        .collect()
}

pub fn feature_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("f{i}")).collect()
}

/// Generates a dataset under any mix of modes.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let x = sample_features(spec);
    let targets = x.iter().map(|row| if spec.label(row) { "1" } else { "0" }.to_string()).collect();
    Dataset::new(
        feature_names(spec.n_features),
        vec![ColumnKind::Numeric; spec.n_features],
        x.into_iter().map(|r| r.into_iter().map(Value::Num).collect()).collect(),
        targets,
    )
}

pub fn gen_independent(spec: &SynthSpec) -> Result<Dataset> {
    if spec.has_mode(FeatureMode::Combined) {
        return Err(Error::InvalidSpec("relevant: independent generator given combined-mode features".into()));
    }
    generate(spec)
}

pub fn gen_combined(spec: &SynthSpec) -> Result<Dataset> {
    if spec.has_mode(FeatureMode::Independent) {
        return Err(Error::InvalidSpec("relevant: combined generator given independent-mode features".into()));
    }
    generate(spec)
}

pub fn gen_mixed(spec: &SynthSpec) -> Result<Dataset> {
    if !(spec.has_mode(FeatureMode::Independent) && spec.has_mode(FeatureMode::Combined)) {
        return Err(Error::InvalidSpec("relevant: mixed generator needs both modes".into()));
    }
    generate(spec)
}

/// P(strictly more than half of `n` uniforms exceed `threshold`).
pub fn majority_rate(n: usize, threshold: f64) -> f64 {
    let p = 1.0 - threshold;
    let mut total = 0.0;
    for k in (n / 2 + 1)..=n {
        total += binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
    }
    total
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Threshold giving a majority rate of `target` over `n` features.
pub fn calibrate_threshold(n: usize, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if majority_rate(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Total interval length per feature giving a positive rate of `target`
/// over `n` independent features.
pub fn calibrate_interval_length(n: usize, target: f64) -> f64 {
    1.0 - (1.0 - target).powf(1.0 / n as f64)
}

/// Two equal, disjoint intervals of total length `total`, staggered by feature.
fn preset_intervals(slot: usize, total: f64) -> Vec<(f64, f64)> {
    let half = total / 2.0;
    let a = 0.05 + 0.03 * slot as f64;
    let b = 0.55 + 0.03 * slot as f64;
    vec![(a, a + half), (b, b + half)]
}

/// Calibrated spec with `n_relevant` relevant features (the first ones),
/// targeting a 50% positive rate.
pub fn preset_spec(mode: SuiteMode, n_relevant: usize, seed: u64) -> SynthSpec {
    let (n_ind, n_comb, target) = match mode {
        SuiteMode::Independent => (n_relevant, 0, 0.5),
        SuiteMode::Combined => (0, n_relevant, 0.5),
        // Each half contributes equally: (1 − p)² = 0.5.
        SuiteMode::Mixed => (n_relevant / 2, n_relevant - n_relevant / 2, 1.0 - 0.5f64.sqrt()),
    };
    let mut relevant = Vec::new();
    if n_ind > 0 {
        let len = calibrate_interval_length(n_ind, target);
        for i in 0..n_ind {
            relevant.push(RelevantFeature { index: i, mode: FeatureMode::Independent, intervals: preset_intervals(i, len) });
        }
    }
    let threshold = if n_comb > 0 { calibrate_threshold(n_comb, target) } else { 0.5 };
    for i in n_ind..n_ind + n_comb {
        relevant.push(RelevantFeature { index: i, mode: FeatureMode::Combined, intervals: Vec::new() });
    }
    SynthSpec { n_samples: SUITE_SAMPLES, n_features: SUITE_FEATURES, relevant, threshold, seed }
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: String,
    pub mode: SuiteMode,
    pub n_relevant: usize,
    pub spec: SynthSpec,
    pub dataset: Dataset,
}

/// Manifest record for one generated file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub mode: SuiteMode,
    pub n_relevant: usize,
    pub spec: SynthSpec,
}

/// The full grid: modes × relevant counts 2..=6 × seeds `seed_base..seed_base+10`.
pub fn preset_suite(seed_base: u64) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    for mode in SuiteMode::ALL {
        for n_relevant in 2..=6 {
            for s in 0..SUITE_SEEDS {
                let seed = seed_base + s;
                let spec = preset_spec(mode, n_relevant, seed);
                let dataset = generate(&spec)?;
                out.push(SuiteEntry {
                    name: format!("{}_r{n_relevant}_s{seed}", mode.name()),
                    mode,
                    n_relevant,
                    spec,
                    dataset,
                });
            }
        }
    }
    Ok(out)
}
