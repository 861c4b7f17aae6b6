use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::hex_prefix;
use crate::label_gen::{CleaningConfig, UnderfitGuard};
use crate::meta_classifier::{RunOptions, TreeParams};
use crate::models::{Family, GbtConfig, MlpConfig, ModelConfig};

/// One experiment: datasets, model capacities per family, and every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds of the repeated meta-classifier runs.
    pub seeds: Vec<u64>,
    /// Output directory, relative to the config file.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Neighbourhood size; `max(5, n/20)` of the training split when unset.
    #[serde(default)]
    pub k: Option<usize>,
    /// Seed of the train/test halves used for label generation and diagnosis.
    #[serde(default)]
    pub label_seed: u64,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default)]
    pub guard: UnderfitGuard,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub meta: MetaSection,
    /// Cleaning models, one per family.
    pub strong: StrongSection,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    /// Datasets held out in turn by `cross_dataset_small`; empty means all.
    #[serde(default)]
    pub held_out: Vec<String>,
    #[serde(default = "yes")]
    pub rebalance_test: bool,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    /// Rules printed for leaves with at least this many training profiles.
    #[serde(default = "default_support")]
    pub min_support: usize,
}

fn yes() -> bool {
    true
}

fn default_fraction() -> f64 {
    0.75
}

fn default_support() -> usize {
    5
}

impl Default for MetaSection {
    fn default() -> Self {
        Self {
            held_out: Vec::new(),
            rebalance_test: true,
            train_fraction: default_fraction(),
            min_support: default_support(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrongSection {
    pub gbt: Option<GbtConfig>,
    pub mlp: Option<MlpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Also the output sub-directory; letters, digits, `-` and `_`.
    pub name: String,
    /// CSV file, relative to the config file. Exactly one of `path` and
    /// `generator` must be given.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub gbt: Option<FamilySection<GbtConfig>>,
    #[serde(default)]
    pub mlp: Option<FamilySection<MlpConfig>>,
}

fn default_label() -> String {
    "label".into()
}

/// Capacities of one family on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection<C> {
    /// Model under diagnosis in the weak-model generator.
    pub base: C,
    /// Reduced-capacity model whose errors become WeakModel labels.
    pub weak: C,
    /// Model trained after the component cut; must underfit there.
    pub cut: C,
    /// Components dropped; chosen from the accuracy curve when unset.
    #[serde(default)]
    pub n_drop: Option<usize>,
}

/// Per-family model configs of one dataset, as [`ModelConfig`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPlan {
    pub family: Family,
    pub strong: ModelConfig,
    pub base: ModelConfig,
    pub weak: ModelConfig,
    pub cut: ModelConfig,
    pub n_drop: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Overlap,
    Curved,
    BanknoteLike,
    WaterLike,
    Blobs,
    NoisyBlobs,
    Xor,
    Circles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Row count; ignored by the two fixed-size benchmark stand-ins.
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    /// CSV text with a `label` column.
    pub fn csv(&self) -> String {
        use crate::synth;
        let n = self.rows.unwrap_or(1000);
        let table = |d: &crate::data::Dataset| {
            let rows: Vec<Vec<Option<f64>>> = d.rows().map(|r| r.iter().copied().map(Some).collect()).collect();
            synth::table_to_csv(d.feature_names(), &rows, d.labels(), "label")
        };
        match self.kind {
            GeneratorKind::Overlap => table(&synth::overlap(n, self.seed).dataset),
            GeneratorKind::Curved => table(&synth::curved(n, self.seed).0),
            GeneratorKind::BanknoteLike => table(&synth::banknote_like(self.seed)),
            GeneratorKind::WaterLike => {
                let (names, rows, labels) = synth::water_like(self.seed);
                synth::table_to_csv(&names, &rows, &labels, "label")
            }
            GeneratorKind::Blobs => table(&synth::blobs(n, 0.5, self.seed)),
            GeneratorKind::NoisyBlobs => table(&synth::noisy_blobs(n, 0.1, self.seed).0),
            GeneratorKind::Xor => table(&synth::xor(n, self.seed)),
            GeneratorKind::Circles => table(&synth::circles(n, 0.1, self.seed)),
        }
    }
}

impl DatasetConfig {
    pub fn families(&self, strong: &StrongSection) -> Vec<FamilyPlan> {
        let mut out = Vec::new();
        if let (Some(s), Some(f)) = (&strong.gbt, &self.gbt) {
            out.push(FamilyPlan {
                family: Family::Gbt,
                strong: ModelConfig::Gbt(s.clone()),
                base: ModelConfig::Gbt(f.base.clone()),
                weak: ModelConfig::Gbt(f.weak.clone()),
                cut: ModelConfig::Gbt(f.cut.clone()),
                n_drop: f.n_drop,
            });
        }
        if let (Some(s), Some(f)) = (&strong.mlp, &self.mlp) {
            out.push(FamilyPlan {
                family: Family::Mlp,
                strong: ModelConfig::Mlp(s.clone()),
                base: ModelConfig::Mlp(f.base.clone()),
                weak: ModelConfig::Mlp(f.weak.clone()),
                cut: ModelConfig::Mlp(f.cut.clone()),
                n_drop: f.n_drop,
            });
        }
        out
    }
}

impl ExperimentConfig {
    /// Parses `path`, resolves relative paths against its directory and
    /// validates. Every error here is a configuration error.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        for d in &mut cfg.datasets {
            if let Some(p) = &mut d.path {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("`seeds` must list at least one seed".into());
        }
        if self.datasets.is_empty() {
            return Err("no [[dataset]] entries".into());
        }
        if self.strong.gbt.is_none() && self.strong.mlp.is_none() {
            return Err("[strong] must configure gbt, mlp or both".into());
        }
        if self.k == Some(0) {
            return Err("k must be at least 1".into());
        }
        if !(self.cleaning.acc_threshold > 0.5 && self.cleaning.acc_threshold <= 1.0) {
            return Err(format!("cleaning.acc_threshold {} outside (0.5, 1]", self.cleaning.acc_threshold));
        }
        if self.cleaning.max_rounds == 0 {
            return Err("cleaning.max_rounds must be at least 1".into());
        }
        if !(self.guard.gap_max.is_finite() && self.guard.drop_min.is_finite()) {
            return Err("guard thresholds must be finite".into());
        }
        if self.tree.max_depth == 0 {
            return Err("tree.max_depth must be at least 1".into());
        }
        if !(self.meta.train_fraction > 0.0 && self.meta.train_fraction < 1.0) {
            return Err(format!("meta.train_fraction {} outside (0, 1)", self.meta.train_fraction));
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            let ok = !d.name.is_empty()
                && d.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !ok {
                return Err(format!("dataset name `{}` must use letters, digits, `-` or `_`", d.name));
            }
            if d.name == "meta" {
                return Err("`meta` is reserved for meta-classifier outputs".into());
            }
            if !names.insert(d.name.as_str()) {
                return Err(format!("dataset `{}` listed twice", d.name));
            }
            match (&d.path, &d.generator) {
                (Some(p), None) => {
                    if !p.is_file() {
                        return Err(format!("dataset `{}`: file not found: {}", d.name, p.display()));
                    }
                }
                (None, Some(_)) => {}
                _ => return Err(format!("dataset `{}`: give exactly one of `path` and `generator`", d.name)),
            }
            let plans = d.families(&self.strong);
            if plans.is_empty() {
                return Err(format!("dataset `{}` configures no family that has a [strong] model", d.name));
            }
            for p in &plans {
                let ctx = |what: &str, e: crate::models::ModelError| format!("dataset `{}` {} {what}: {e}", d.name, p.family);
                p.strong.validate().map_err(|e| ctx("strong", e))?;
                p.base.validate().map_err(|e| ctx("base", e))?;
                p.weak.validate().map_err(|e| ctx("weak", e))?;
                p.cut.validate().map_err(|e| ctx("cut", e))?;
                if !p.weak.is_weaker_than(&p.base) {
                    return Err(format!(
                        "dataset `{}` {}: weak config `{}` is not strictly weaker than base `{}`",
                        d.name,
                        p.family,
                        p.weak.describe(),
                        p.base.describe()
                    ));
                }
                if p.n_drop == Some(0) {
                    return Err(format!("dataset `{}` {}: n_drop must be at least 1", d.name, p.family));
                }
            }
        }
        for h in &self.meta.held_out {
            if !names.contains(h.as_str()) {
                return Err(format!("meta.held_out names unknown dataset `{h}`"));
            }
        }
        Ok(())
    }

    /// Short content hash of the effective configuration.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        hex_prefix(&Sha256::digest(text.as_bytes()), 8)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            params: self.tree,
            seeds: self.seeds.clone(),
            held_out: self.meta.held_out.clone(),
            rebalance_test: self.meta.rebalance_test,
            train_fraction: self.meta.train_fraction,
        }
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetConfig> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn dataset_dir(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn family_dir(&self, name: &str, family: Family) -> PathBuf {
        self.out.join(name).join(family.to_string())
    }

    pub fn meta_dir(&self) -> PathBuf {
        self.out.join("meta")
    }
}
