//! End-to-end training and the persisted rule-base artifact.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{impute, load_table, split, DecisionTable, ImputePolicy, LoadOptions, Schema};
use crate::discretize::{discretize, select_cuts, CutSet};
use crate::error::{Error, Result};
use crate::fuzzy::{build_variables, fuzzify_ruleset, majority_label, FuzzyRuleBase, SpreadPolicy, DEFAULT_THRESHOLD};
use crate::inference::{FallbackPolicy, InferenceOptions};
use crate::rules::{filter_by_support, generate_rules, RuleSet};
use crate::selection::{select_important_rules, SelectionOptions};

pub const ARTIFACT_VERSION: &str = "fdss-artifact/1";

/// Which objects the rule-selection applicability table is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionTable {
    /// Rows of the loaded data without any missing cell.
    #[default]
    CompleteCases,
    /// The (imputed) training split.
    Training,
}

impl std::str::FromStr for SelectionTable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "complete-cases" | "complete" => Ok(SelectionTable::CompleteCases),
            "training" | "train" => Ok(SelectionTable::Training),
            other => Err(format!("unknown selection table `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub data: PathBuf,
    /// Preset name or path to a JSON schema file.
    pub schema: String,
    pub header: bool,
    pub impute: ImputePolicy,
    /// Training fraction; `None` trains on every object.
    pub split: Option<f64>,
    pub seed: u64,
    pub min_support: usize,
    pub selection_table: SelectionTable,
    pub selection: SelectionOptions,
    pub spread: SpreadPolicy,
    pub threshold: f64,
    pub inference: InferenceOptions,
    pub fallback: FallbackPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: PathBuf::new(),
            schema: "uci-heart-14".into(),
            header: false,
            impute: ImputePolicy::default(),
            split: None,
            seed: 42,
            min_support: 2,
            selection_table: SelectionTable::default(),
            selection: SelectionOptions::default(),
            spread: SpreadPolicy::default(),
            threshold: DEFAULT_THRESHOLD,
            inference: InferenceOptions::default(),
            fallback: FallbackPolicy::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.split {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::BadFraction(f));
            }
        }
        if !(0.0..=100.0).contains(&self.threshold) {
            return Err(Error::Input {
                attribute: "threshold".into(),
                message: format!("{} is outside [0, 100]", self.threshold),
            });
        }
        if self.inference.samples < 2 {
            return Err(Error::Input {
                attribute: "samples".into(),
                message: "at least two grid points are required".into(),
            });
        }
        if !(self.spread.factor > 0.0) {
            return Err(Error::Input {
                attribute: "spread".into(),
                message: format!("factor {} must be positive", self.spread.factor),
            });
        }
        Ok(())
    }
}

/// A preset name, else a JSON schema file.
pub fn resolve_schema(spec: &str) -> Result<Schema> {
    if let Some(s) = Schema::preset(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Schema(format!("`{spec}` is neither a preset nor a file")));
    }
    Schema::from_json(&std::fs::read_to_string(path)?)
}

pub fn load_path(path: &Path, schema: &Schema, header: bool) -> Result<DecisionTable> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_table(BufReader::new(file), schema, LoadOptions { header })
}

/// Object and rule counts recorded at each training stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub loaded: usize,
    pub imputed: usize,
    pub training: usize,
    pub holdout: usize,
    pub cuts: BTreeMap<String, usize>,
    pub generated_raw: usize,
    pub generated: usize,
    pub filtered: usize,
    pub selection_objects: usize,
    pub selected: usize,
    pub exhaustive_selection: bool,
}

impl fmt::Display for TrainStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "load       {} objects", self.loaded)?;
        writeln!(f, "impute     {} objects", self.imputed)?;
        writeln!(f, "split      {} training, {} holdout", self.training, self.holdout)?;
        let cuts: Vec<String> = self.cuts.iter().map(|(a, n)| format!("{a}={n}")).collect();
        writeln!(f, "discretize {} cuts ({})", self.cuts.values().sum::<usize>(), cuts.join(" "))?;
        writeln!(f, "generate   {} rules ({} before merging duplicates)", self.generated, self.generated_raw)?;
        writeln!(f, "filter     {} rules", self.filtered)?;
        write!(
            f,
            "select     {} rules over {} objects ({})",
            self.selected,
            self.selection_objects,
            if self.exhaustive_selection { "exhaustive" } else { "greedy" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub version: String,
    pub schema: Schema,
    pub config: PipelineConfig,
    /// SHA-256 of the training table.
    pub fingerprint: String,
    pub cuts: CutSet,
    /// Selected crisp rules.
    pub rules: RuleSet,
    pub rulebase: FuzzyRuleBase,
    pub stats: TrainStats,
}

impl Artifact {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Artifact(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: Artifact = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported version `{}` (expected `{ARTIFACT_VERSION}`)",
                artifact.version
            )));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Everything a training run produced, including intermediate rule sets.
#[derive(Debug, Clone)]
pub struct Trained {
    pub artifact: Artifact,
    pub loaded: DecisionTable,
    pub training: DecisionTable,
    pub holdout: Option<DecisionTable>,
    pub selection_table: DecisionTable,
    pub generated: RuleSet,
    pub filtered: RuleSet,
}

/// Load `config.data` and train.
pub fn train(config: &PipelineConfig) -> Result<Trained> {
    config.validate()?;
    let schema = resolve_schema(&config.schema).map_err(|e| e.at_stage("load"))?;
    let loaded = load_path(&config.data, &schema, config.header).map_err(|e| e.at_stage("load"))?;
    train_table(loaded, config)
}

/// Train on an already loaded table.
pub fn train_table(loaded: DecisionTable, config: &PipelineConfig) -> Result<Trained> {
    config.validate()?;
    if loaded.is_empty() {
        return Err(Error::EmptyTable.at_stage("load"));
    }
    let imputed = impute(&loaded, config.impute).map_err(|e| e.at_stage("impute"))?;
    let (training, holdout) = match config.split {
        Some(f) => {
            let (a, b) = split(&imputed, f, config.seed).map_err(|e| e.at_stage("split"))?;
            (a, Some(b))
        }
        None => (imputed.clone(), None),
    };
    if training.is_empty() {
        return Err(Error::EmptyTable.at_stage("split"));
    }

    let cuts = select_cuts(&training);
    let discrete = discretize(&training, &cuts).map_err(|e| e.at_stage("discretize"))?;
    let fingerprint = training.fingerprint();

    let generated = generate_rules(&discrete).map_err(|e| e.at_stage("generate"))?;
    let mut rules = generated.rules;
    rules.provenance = fingerprint.clone();
    rules.cuts = cuts.clone();
    let filtered = filter_by_support(&rules, config.min_support);
    if filtered.is_empty() {
        return Err(Error::NoRules.at_stage("filter"));
    }

    let selection_table = match config.selection_table {
        SelectionTable::CompleteCases => loaded.complete_cases(),
        SelectionTable::Training => training.clone(),
    };
    let selection = select_important_rules(&filtered, &selection_table, config.selection)
        .map_err(|e| e.at_stage("select"))?;

    let variables = build_variables(&training, &cuts, &config.spread).map_err(|e| e.at_stage("fuzzify"))?;
    let mut rulebase = fuzzify_ruleset(&selection.rules, variables, majority_label(&training))
        .map_err(|e| e.at_stage("fuzzify"))?;
    rulebase.threshold = config.threshold;

    let stats = TrainStats {
        loaded: loaded.len(),
        imputed: imputed.len(),
        training: training.len(),
        holdout: holdout.as_ref().map_or(0, |h| h.len()),
        cuts: cuts.iter().map(|(a, t)| (a.to_string(), t.len())).collect(),
        generated_raw: generated.raw_count,
        generated: rules.len(),
        filtered: filtered.len(),
        selection_objects: selection_table.len(),
        selected: selection.rules.len(),
        exhaustive_selection: selection.exhaustive,
    };
    let artifact = Artifact {
        version: ARTIFACT_VERSION.into(),
        schema: loaded.schema().clone(),
        config: config.clone(),
        fingerprint,
        cuts,
        rules: selection.rules,
        rulebase,
        stats,
    };
    Ok(Trained {
        artifact,
        loaded,
        training,
        holdout,
        selection_table,
        generated: rules,
        filtered,
    })
}
