//! Key = value configuration files for the CLI.
//!
//! One assignment per line; `#` starts a comment. Training keys mirror the
//! training recipe; generator keys use a `gen.` prefix inside experiment
//! configs and no prefix in generator configs; experiment files add
//! `dataset`, `train_patients`, and `test_patients`.

use anyhow::{anyhow, bail, Context, Result};
use kglink_core::connectivity::Preset;
use kglink_core::datagen::GenConfig;
use kglink_core::eval::{DataSource, ExperimentConfig};
use kglink_core::nn::LrSchedule;
use kglink_core::train::{LossEdgeFilter, PolicyChoice, TrainConfig};
use std::collections::BTreeMap;
use std::path::Path;

/// Parses `key = value` lines into an ordered map.
pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", i + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow!("{key}: cannot parse `{value}`: {e}"))
}

/// Applies training keys from `map`, consuming the ones it understands.
pub fn apply_train_keys(config: &mut TrainConfig, map: &mut BTreeMap<String, String>) -> Result<()> {
    if let Some(v) = map.remove("embedding_dim") {
        config.embedding_dim = parse_number("embedding_dim", &v)?;
    }
    if let Some(v) = map.remove("layers") {
        config.layers = parse_number("layers", &v)?;
    }
    if let Some(v) = map.remove("epochs") {
        config.epochs = parse_number("epochs", &v)?;
    }
    if let Some(v) = map.remove("weight_decay") {
        config.weight_decay = parse_number("weight_decay", &v)?;
    }
    if let Some(v) = map.remove("confidence_threshold") {
        config.confidence_threshold = parse_number("confidence_threshold", &v)?;
    }
    if let Some(v) = map.remove("seed") {
        config.seed = parse_number("seed", &v)?;
    }
    if let Some(v) = map.remove("frozen_types") {
        config.frozen_types = split_list(&v);
    }
    if let Some(v) = map.remove("loss_relations") {
        config.loss_filter = if v == "all" {
            LossEdgeFilter::All
        } else {
            LossEdgeFilter::Relations(split_list(&v))
        };
    }
    if let Some(v) = map.remove("policy") {
        config.policy = parse_policy_value(&v)?;
    }
    if let Some(v) = map.remove("lr_schedule") {
        config.lr_schedule = parse_schedule(&v)?;
    }
    Ok(())
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// `C1`…`C4` select a preset; `@path` loads a policy file.
pub fn parse_policy_value(value: &str) -> Result<PolicyChoice> {
    if let Some(path) = value.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("policy file `{path}`"))?;
        return Ok(PolicyChoice::File(text));
    }
    let preset = Preset::parse(value)?;
    Ok(PolicyChoice::Preset(preset))
}

/// `boundary:lr` pairs, comma separated, e.g. `100:0.1,700:0.01,1000:0.001`.
fn parse_schedule(value: &str) -> Result<LrSchedule> {
    let mut stages = Vec::new();
    for part in value.split(',') {
        let (epoch, lr) = part
            .trim()
            .split_once(':')
            .ok_or_else(|| anyhow!("lr_schedule: expected `epoch:lr`, got `{part}`"))?;
        stages.push((
            parse_number::<usize>("lr_schedule epoch", epoch.trim())?,
            parse_number::<f64>("lr_schedule rate", lr.trim())?,
        ));
    }
    if stages.is_empty() {
        bail!("lr_schedule: no stages");
    }
    Ok(LrSchedule::new(stages))
}

/// Applies generator keys (optionally under a prefix like `gen.`).
pub fn apply_gen_keys(
    config: &mut GenConfig,
    prefix: &str,
    map: &mut BTreeMap<String, String>,
) -> Result<()> {
    let take = |map: &mut BTreeMap<String, String>, key: &str| map.remove(&format!("{prefix}{key}"));
    if let Some(v) = take(map, "patients") {
        config.patients = parse_number("patients", &v)?;
    }
    if let Some(v) = take(map, "mean_encounters_per_patient") {
        config.mean_encounters_per_patient = parse_number("mean_encounters_per_patient", &v)?;
    }
    if let Some(v) = take(map, "observation_vocab") {
        config.observation_vocab = parse_number("observation_vocab", &v)?;
    }
    if let Some(v) = take(map, "condition_vocab") {
        config.condition_vocab = parse_number("condition_vocab", &v)?;
    }
    if let Some(v) = take(map, "signature_observations") {
        config.signature_observations = parse_number("signature_observations", &v)?;
    }
    if let Some(v) = take(map, "signature_conditions") {
        config.signature_conditions = parse_number("signature_conditions", &v)?;
    }
    if let Some(v) = take(map, "p_sig") {
        config.p_sig = parse_number("p_sig", &v)?;
    }
    if let Some(v) = take(map, "min_items_per_encounter") {
        config.min_items_per_encounter = parse_number("min_items_per_encounter", &v)?;
    }
    if let Some(v) = take(map, "max_items_per_encounter") {
        config.max_items_per_encounter = parse_number("max_items_per_encounter", &v)?;
    }
    if let Some(v) = take(map, "seed") {
        config.seed = parse_number("seed", &v)?;
    }
    if let Some(v) = take(map, "care_action_prior") {
        let parts: Vec<f64> = v
            .split(',')
            .map(|p| parse_number("care_action_prior", p.trim()))
            .collect::<Result<_>>()?;
        if parts.len() != 5 {
            bail!("care_action_prior: expected 5 values, got {}", parts.len());
        }
        config.care_action_prior = [parts[0], parts[1], parts[2], parts[3], parts[4]];
    }
    Ok(())
}

fn reject_unknown(map: &BTreeMap<String, String>) -> Result<()> {
    if let Some(key) = map.keys().next() {
        bail!("unknown config key `{key}`");
    }
    Ok(())
}

pub fn load_train_config(path: Option<&Path>) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("config file `{}`", path.display()))?;
        let mut map = parse_assignments(&text)?;
        apply_train_keys(&mut config, &mut map)?;
        reject_unknown(&map)?;
    }
    Ok(config)
}

pub fn load_gen_config(path: Option<&Path>) -> Result<GenConfig> {
    let mut config = GenConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("config file `{}`", path.display()))?;
        let mut map = parse_assignments(&text)?;
        apply_gen_keys(&mut config, "", &mut map)?;
        reject_unknown(&map)?;
    }
    Ok(config)
}

pub fn load_experiment_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("config file `{}`", path.display()))?;
        let mut map = parse_assignments(&text)?;
        if let Some(v) = map.remove("train_patients") {
            config.train_patients = parse_number("train_patients", &v)?;
        }
        if let Some(v) = map.remove("test_patients") {
            config.test_patients = parse_number("test_patients", &v)?;
        }
        if let Some(path) = map.remove("dataset") {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("dataset `{path}`"))?;
            config.data = DataSource::Dataset(text);
        } else {
            let mut gen_config = match &config.data {
                DataSource::Generate(g) => g.clone(),
                DataSource::Dataset(_) => GenConfig::default(),
            };
            apply_gen_keys(&mut gen_config, "gen.", &mut map)?;
            config.data = DataSource::Generate(gen_config);
        }
        // Remaining `train.` keys configure the base recipe.
        let mut train_map: BTreeMap<String, String> = map
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("train.").map(|k| (k.to_string(), v.clone())))
            .collect();
        map.retain(|k, _| !k.starts_with("train."));
        apply_train_keys(&mut config.train, &mut train_map)?;
        reject_unknown(&train_map)?;
        reject_unknown(&map)?;
    }
    Ok(config)
}
