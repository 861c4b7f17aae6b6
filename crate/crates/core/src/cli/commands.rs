use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{DatasetConfig, ExperimentConfig, FamilyPlan};
use super::CliError;
use crate::data::{dataset_to_csv, load_csv, read_dataset_csv, split_random, standardize, write_atomic, Dataset, RowId};
use crate::label_gen::{
    build_pool, choose_n_drop, clean_dataset, gen_mixed_labels, gen_weak_labels, CleaningRound, CurvePoint,
    GenOptions, LabelGenError, LabeledPool, UnderfitVerdict,
};
use crate::meta_classifier::{
    ablation, extract_rules, feature_importance, rebalance, run_configuration, summarize, train_tree,
    AblationStep, Configuration, DecisionRule, EvalReport, EvalSummary, MetaTree,
};
use crate::meta_features::{profiles_to_csv, DiagnosisLabel, Feature, ProfileContext};
use crate::models::{label_from_proba, Family};

/// A validated configuration and its hash, shared by every command.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub hash: String,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Self {
        let hash = cfg.hash();
        Self { cfg, hash }
    }

    fn comment(&self) -> String {
        format!("config_hash={}", self.hash)
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        log::debug!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, path: &Path, body: &T) -> Result<(), CliError> {
        let stamped = Stamped {
            config_hash: &self.hash,
            body,
        };
        let mut text = serde_json::to_string_pretty(&stamped).map_err(runtime)?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    fn write_csv(&self, path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let mut text = format!("# {}\n{header}\n", self.comment());
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.write(path, text.as_bytes())
    }

    fn selected(&self, only: &[String]) -> Result<Vec<&DatasetConfig>, CliError> {
        for name in only {
            if self.cfg.dataset(name).is_none() {
                return Err(CliError::Config(format!("unknown dataset `{name}`")));
            }
        }
        Ok(self
            .cfg
            .datasets
            .iter()
            .filter(|d| only.is_empty() || only.contains(&d.name))
            .collect())
    }

    fn gen_options(&self, dataset: &str) -> GenOptions {
        GenOptions {
            dataset: dataset.to_string(),
            seed: self.cfg.label_seed,
            k: self.cfg.k,
        }
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_to_string(path: &Path, hint: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {} ({e}); {hint}", path.display())))
}

/// Loads a dataset's source table. Generated sources are first written to
/// `<out>/<name>/source.csv` so every later stage reads files only.
fn load_source(ctx: &Context, d: &DatasetConfig) -> Result<Dataset, CliError> {
    let (path, label) = match (&d.path, &d.generator) {
        (Some(p), _) => (p.clone(), d.label.as_str()),
        (None, Some(g)) => {
            let p = ctx.cfg.dataset_dir(&d.name).join("source.csv");
            let text = format!("# {}\n{}", ctx.comment(), g.csv());
            ctx.write(&p, text.as_bytes())?;
            (p, "label")
        }
        (None, None) => return Err(CliError::Config(format!("dataset `{}` has no source", d.name))),
    };
    let loaded = load_csv(&path, label).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    if loaded.dropped_rows > 0 {
        log::info!("{}: {} rows with missing cells dropped", d.name, loaded.dropped_rows);
    }
    Ok(loaded.dataset)
}

#[derive(Serialize)]
struct CleaningSummary<'a> {
    dataset: &'a str,
    family: Family,
    strong: String,
    source_rows: usize,
    retained_rows: usize,
    converged: bool,
    rounds: &'a [CleaningRound],
}

/// Writes `easy.csv` (original feature scale), `cleaning.csv` and
/// `cleaning.json` for every selected dataset and family.
pub fn cmd_clean(ctx: &Context, only: &[String]) -> Result<(), CliError> {
    for d in ctx.selected(only)? {
        let raw = load_source(ctx, d)?;
        let (scaled, _) = standardize(&raw).map_err(runtime)?;
        for plan in d.families(&ctx.cfg.strong) {
            let dir = ctx.cfg.family_dir(&d.name, plan.family);
            let report = match clean_dataset(&scaled, &plan.strong, &ctx.cfg.cleaning) {
                Ok(r) => r,
                Err(LabelGenError::Collapsed { report, .. }) => {
                    ctx.write(&dir.join("cleaning.csv"), format!("# {}\n{}", ctx.comment(), report.to_csv()).as_bytes())?;
                    return Err(CliError::Runtime(format!(
                        "{} {}: cleaning collapsed to {} rows (floor {}); see {}",
                        d.name,
                        plan.family,
                        report.final_dataset.n_rows(),
                        ctx.cfg.cleaning.min_rows,
                        dir.join("cleaning.csv").display()
                    )));
                }
                Err(e) => return Err(CliError::Runtime(format!("{} {}: {e}", d.name, plan.family))),
            };
            let kept: Vec<usize> = report
                .final_dataset
                .row_ids()
                .iter()
                .map(|&id| raw.position_of(id).expect("cleaning keeps source ids"))
                .collect();
            let easy = raw.subset(&kept);
            ctx.write(&dir.join("easy.csv"), &dataset_to_csv(&easy, Some(&ctx.comment())).map_err(runtime)?)?;
            ctx.write(&dir.join("cleaning.csv"), format!("# {}\n{}", ctx.comment(), report.to_csv()).as_bytes())?;
            ctx.write_json(
                &dir.join("cleaning.json"),
                &CleaningSummary {
                    dataset: &d.name,
                    family: plan.family,
                    strong: plan.strong.describe(),
                    source_rows: raw.n_rows(),
                    retained_rows: easy.n_rows(),
                    converged: report.converged,
                    rounds: &report.rounds,
                },
            )?;
            println!(
                "{} {}: {} -> {} rows in {} round(s){}",
                d.name,
                plan.family,
                raw.n_rows(),
                easy.n_rows(),
                report.rounds.len(),
                if report.converged { "" } else { " (not converged)" }
            );
        }
    }
    Ok(())
}

/// Labelled profiles of one (dataset, family) with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolFile {
    pub config_hash: String,
    pub pool: LabeledPool,
}

#[derive(Serialize)]
struct GenSummary<'a> {
    dataset: &'a str,
    family: Family,
    easy_rows: usize,
    weak: String,
    base: String,
    weak_test_acc: f64,
    base_test_acc: f64,
    weak_ineffective: bool,
    cut: String,
    n_drop: usize,
    n_drop_chosen: bool,
    variance_removed: f64,
    verdict: &'a UnderfitVerdict,
    counts: BTreeMap<DiagnosisLabel, usize>,
}

fn curve_rows(curve: &[CurvePoint]) -> Vec<String> {
    curve
        .iter()
        .map(|c| format!("{},{:?},{:?},{:?}", c.n_drop, c.variance_removed, c.train_acc, c.test_acc))
        .collect()
}

const CURVE_HEADER: &str = "n_drop,variance_removed,train_acc,test_acc";

fn counts_map(pool: &LabeledPool) -> BTreeMap<DiagnosisLabel, usize> {
    let c = pool.class_counts();
    DiagnosisLabel::ALL.into_iter().map(|l| (l, c[l.index()])).collect()
}

fn read_easy(ctx: &Context, name: &str, family: Family) -> Result<Dataset, CliError> {
    let path = ctx.cfg.family_dir(name, family).join("easy.csv");
    if !path.is_file() {
        return Err(CliError::Runtime(format!("{} not found; run `clean` first", path.display())));
    }
    read_dataset_csv(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn gen_one(ctx: &Context, d: &DatasetConfig, plan: &FamilyPlan) -> Result<(), CliError> {
    let easy = read_easy(ctx, &d.name, plan.family)?;
    let dir = ctx.cfg.family_dir(&d.name, plan.family);
    let opts = ctx.gen_options(&d.name);
    let guard = &ctx.cfg.guard;
    let label = format!("{} {}", d.name, plan.family);

    let weak = gen_weak_labels(&easy, &plan.base, &plan.weak, &opts)
        .map_err(|e| CliError::Runtime(format!("{label}: {e}")))?;

    let (n_drop, chosen) = match plan.n_drop {
        Some(n) => (n, false),
        None => {
            let (choice, curve) =
                choose_n_drop(&easy, &plan.cut, guard, &opts).map_err(|e| CliError::Runtime(format!("{label}: {e}")))?;
            ctx.write_csv(&dir.join("curve.csv"), CURVE_HEADER, curve_rows(&curve))?;
            match choice {
                Some(n) => (n, true),
                None => {
                    let verdict = crate::label_gen::underfit_check(&curve, guard)
                        .map_err(|e| CliError::Runtime(format!("{label}: {e}")))?;
                    return Err(CliError::Refused {
                        context: format!("{label}: no component cut both passes the guard and lowers test accuracy"),
                        verdict: Box::new(verdict),
                    });
                }
            }
        }
    };
    let mixed = match gen_mixed_labels(&easy, &plan.cut, n_drop, guard, &opts) {
        Ok(m) => m,
        Err(LabelGenError::Refused(verdict)) => {
            ctx.write_csv(&dir.join("curve.csv"), CURVE_HEADER, curve_rows(&verdict.curve))?;
            return Err(CliError::Refused {
                context: format!("{label}: cut model `{}` with {n_drop} component(s) dropped", plan.cut.describe()),
                verdict,
            });
        }
        Err(e) => return Err(CliError::Runtime(format!("{label}: {e}"))),
    };
    if !chosen {
        ctx.write_csv(&dir.join("curve.csv"), CURVE_HEADER, curve_rows(&mixed.verdict.curve))?;
    }

    let comment = ctx.comment();
    ctx.write(
        &dir.join("weak_profiles.csv"),
        &profiles_to_csv(&weak.pool.profiles, Some(&comment)).map_err(runtime)?,
    )?;
    ctx.write(
        &dir.join("cut_profiles.csv"),
        &profiles_to_csv(&mixed.pool.profiles, Some(&comment)).map_err(runtime)?,
    )?;
    let mut pool = weak.pool.clone();
    pool.extend(mixed.pool.clone());
    let file = PoolFile {
        config_hash: ctx.hash.clone(),
        pool: pool.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(runtime)?;
    text.push('\n');
    ctx.write(&dir.join("pool.json"), text.as_bytes())?;
    ctx.write_json(
        &dir.join("genlabels.json"),
        &GenSummary {
            dataset: &d.name,
            family: plan.family,
            easy_rows: easy.n_rows(),
            weak: plan.weak.describe(),
            base: plan.base.describe(),
            weak_test_acc: weak.weak_test_acc,
            base_test_acc: weak.base_test_acc,
            weak_ineffective: weak.ineffective,
            cut: plan.cut.describe(),
            n_drop,
            n_drop_chosen: chosen,
            variance_removed: mixed.variance_removed,
            verdict: &mixed.verdict,
            counts: counts_map(&pool),
        },
    )?;
    let c = pool.class_counts();
    println!(
        "{label}: {} profiles ({} {}, {} {}, {} {}); cut {n_drop} component(s), {:.0}% variance",
        pool.len(),
        c[0],
        DiagnosisLabel::ALL[0].code(),
        c[1],
        DiagnosisLabel::ALL[1].code(),
        c[2],
        DiagnosisLabel::ALL[2].code(),
        100.0 * mixed.variance_removed
    );
    Ok(())
}

/// Weak-model and component-cut contributions for every selected dataset
/// and family; refuses (exit 3) when a cut does not underfit.
pub fn cmd_genlabels(ctx: &Context, only: &[String]) -> Result<(), CliError> {
    for d in ctx.selected(only)? {
        for plan in d.families(&ctx.cfg.strong) {
            gen_one(ctx, d, &plan)?;
        }
    }
    Ok(())
}

/// Reads a `pool.json` written by `genlabels`.
pub fn read_pool_file(path: &Path) -> Result<LabeledPool, CliError> {
    let text = read_to_string(path, "run `genlabels` first")?;
    let file: PoolFile = serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    file.pool
        .validate()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(file.pool)
}

/// Every configured contribution merged into one pool.
pub fn load_pools(ctx: &Context) -> Result<LabeledPool, CliError> {
    let mut parts = Vec::new();
    for d in &ctx.cfg.datasets {
        for plan in d.families(&ctx.cfg.strong) {
            parts.push(read_pool_file(&ctx.cfg.family_dir(&d.name, plan.family).join("pool.json"))?);
        }
    }
    build_pool(parts).map_err(runtime)
}

#[derive(Serialize)]
struct GroupSummary {
    train: String,
    test: String,
    summary: EvalSummary,
    macro_precision: f64,
    macro_recall: f64,
}

#[derive(Serialize)]
struct ReportsFile<'a> {
    configuration: Configuration,
    groups: Vec<GroupSummary>,
    reports: &'a [EvalReport],
}

#[derive(Serialize)]
struct TreeFileOut<'a> {
    tree: &'a MetaTree,
}

#[derive(Deserialize)]
struct TreeFileIn {
    tree: MetaTree,
}

/// Mean/std summaries per (train, test) assembly, in first-seen order.
pub fn group_reports(reports: &[EvalReport]) -> Vec<(String, String, EvalSummary)> {
    let mut groups: Vec<(String, String, Vec<EvalReport>)> = Vec::new();
    for r in reports {
        match groups.iter_mut().find(|g| g.0 == r.meta.train && g.1 == r.meta.test) {
            Some(g) => g.2.push(r.clone()),
            None => groups.push((r.meta.train.clone(), r.meta.test.clone(), vec![r.clone()])),
        }
    }
    groups.into_iter().map(|(a, b, rs)| (a, b, summarize(&rs))).collect()
}

/// Evaluates `configuration` over the seeds, then trains the reference tree
/// on the whole rebalanced pool and writes its rules and importances.
pub fn cmd_trainmeta(ctx: &Context, configuration: Configuration) -> Result<(), CliError> {
    let pool = load_pools(ctx)?;
    let opts = ctx.cfg.run_options();
    let reports = run_configuration(&pool, configuration, &opts).map_err(runtime)?;
    let dir = ctx.cfg.meta_dir().join(configuration.name());
    let groups: Vec<GroupSummary> = group_reports(&reports)
        .into_iter()
        .map(|(train, test, summary)| GroupSummary {
            macro_precision: summary.precision.iter().map(|m| m.mean).sum::<f64>() / 3.0,
            macro_recall: summary.recall.iter().map(|m| m.mean).sum::<f64>() / 3.0,
            train,
            test,
            summary,
        })
        .collect();
    for g in &groups {
        println!("{configuration} [{} -> {}] {}", g.train, g.test, g.summary);
    }
    ctx.write_json(
        &dir.join("reports.json"),
        &ReportsFile {
            configuration,
            groups,
            reports: &reports,
        },
    )?;
    ctx.write_csv(&dir.join("reports.csv"), EvalReport::CSV_HEADER, reports.iter().map(EvalReport::csv_row))?;

    let seed = ctx.cfg.seeds[0];
    let balanced = rebalance(&pool, seed).map_err(runtime)?;
    let tree = train_tree(&balanced, &ctx.cfg.tree, seed).map_err(runtime)?;
    write_tree_outputs(ctx, &tree)?;
    Ok(())
}

fn write_tree_outputs(ctx: &Context, tree: &MetaTree) -> Result<(), CliError> {
    let dir = ctx.cfg.meta_dir();
    ctx.write_json(&dir.join("tree.json"), &TreeFileOut { tree })?;
    let rules = extract_rules(tree, ctx.cfg.meta.min_support);
    let mut text = format!(
        "# {}\n# depth {}, {} leaves, {} training profiles\n",
        ctx.comment(),
        tree.depth,
        tree.n_leaves,
        tree.n_train
    );
    for r in &rules {
        text.push_str(&format!("{r}  [support {}, confidence {:.3}]\n", r.support, r.confidence));
    }
    ctx.write(&dir.join("rules.txt"), text.as_bytes())?;
    ctx.write_json(&dir.join("rules.json"), &RulesOut { rules: &rules })?;
    let mut imp = feature_importance(tree);
    imp.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.index().cmp(&b.0.index())));
    ctx.write_csv(
        &dir.join("importance.csv"),
        "feature,display,importance",
        imp.iter().map(|(f, v)| format!("{},{},{v:?}", f.name(), f.display())),
    )
}

#[derive(Serialize)]
struct RulesOut<'a> {
    rules: &'a [DecisionRule],
}

/// Reads a tree written by `trainmeta` (or a bare serialized tree).
pub fn read_tree_file(path: &Path) -> Result<MetaTree, CliError> {
    let text = read_to_string(path, "run `trainmeta` first")?;
    if let Ok(f) = serde_json::from_str::<TreeFileIn>(&text) {
        return Ok(f.tree);
    }
    MetaTree::from_json(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct AblationOut<'a> {
    steps: &'a [AblationStep],
}

pub fn cmd_ablate(ctx: &Context) -> Result<(), CliError> {
    let pool = load_pools(ctx)?;
    let steps = ablation(&pool, &ctx.cfg.run_options()).map_err(runtime)?;
    let dir = ctx.cfg.meta_dir();
    ctx.write_csv(&dir.join("ablation.csv"), AblationStep::CSV_HEADER, steps.iter().map(AblationStep::csv_row))?;
    ctx.write_json(&dir.join("ablation.json"), &AblationOut { steps: &steps })?;
    for s in &steps {
        println!(
            "{:>2} removed ({:<27}) {:>2} left: accuracy {}",
            s.n_removed,
            s.removed.map_or("-", |f| f.name()),
            s.n_remaining(),
            s.accuracy
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestedValue {
    pub feature: String,
    pub value: f64,
    pub condition: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnosis {
    pub row_id: RowId,
    pub true_label: u8,
    pub predicted_label: u8,
    pub diagnosis: DiagnosisLabel,
    pub rule: String,
    pub tested: Vec<TestedValue>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub dataset: String,
    pub family: Family,
    pub model: String,
    pub diagnoses: Vec<Diagnosis>,
}

/// Profiles query rows of the held-out half against the base model and
/// routes them through a trained tree.
pub fn cmd_diagnose(
    ctx: &Context,
    tree_path: &Path,
    dataset: &str,
    family: Family,
    rows: &[u64],
    report: Option<PathBuf>,
) -> Result<(), CliError> {
    let tree = read_tree_file(tree_path)?;
    let d = ctx
        .cfg
        .dataset(dataset)
        .ok_or_else(|| CliError::Config(format!("unknown dataset `{dataset}`")))?;
    let plan = d
        .families(&ctx.cfg.strong)
        .into_iter()
        .find(|p| p.family == family)
        .ok_or_else(|| CliError::Config(format!("dataset `{dataset}` has no {family} configuration")))?;
    let easy = read_easy(ctx, dataset, family)?;
    let halves = split_random(&easy, 0.5, ctx.cfg.label_seed).map_err(runtime)?;
    let (train, scaler) = standardize(&halves.part_a).map_err(runtime)?;
    let test = scaler.transform(&halves.part_b).map_err(runtime)?;
    let mut positions = Vec::with_capacity(rows.len());
    for &id in rows {
        match test.position_of(RowId(id)) {
            Some(p) => positions.push(p),
            None if train.position_of(RowId(id)).is_some() => {
                return Err(CliError::Runtime(format!(
                    "row {id} belongs to the training half of `{dataset}`; only held-out rows can be diagnosed"
                )))
            }
            None => return Err(CliError::Runtime(format!("row {id} is not in the cleaned `{dataset}` set"))),
        }
    }
    let model = plan.base.train(&train).map_err(runtime)?;
    let profile_ctx = ProfileContext::new(&model, &train, ctx.cfg.k, ctx.cfg.label_seed).map_err(runtime)?;
    let rules = extract_rules(&tree, 0);
    let mut diagnoses = Vec::with_capacity(positions.len());
    for p in positions {
        let x = test.row(p);
        let profile = profile_ctx.extract(test.row_id(p), x, test.label(p)).map_err(runtime)?;
        let diagnosis = tree.predict(&profile).map_err(runtime)?;
        let leaf = tree.leaf_of(&profile.values);
        let rule = rules.iter().find(|r| r.leaf == leaf).expect("every leaf has a rule");
        let tested = rule
            .conditions
            .iter()
            .map(|c| {
                let f = Feature::from_name(&c.feature).expect("rules name known features");
                TestedValue {
                    feature: c.feature.clone(),
                    value: profile.get(f),
                    condition: c.to_string(),
                }
            })
            .collect();
        diagnoses.push(Diagnosis {
            row_id: profile.row_id,
            true_label: test.label(p),
            predicted_label: label_from_proba(model.predict_proba(x).map_err(runtime)?),
            diagnosis,
            rule: rule.to_string(),
            tested,
        });
    }
    for g in &diagnoses {
        println!("row {}: {} ({})", g.row_id, g.diagnosis, g.rule);
    }
    let path = report.unwrap_or_else(|| ctx.cfg.out.join("diagnose").join(format!("{dataset}_{family}.json")));
    ctx.write_json(
        &path,
        &DiagnosisReport {
            dataset: dataset.to_string(),
            family,
            model: plan.base.describe(),
            diagnoses,
        },
    )
}
