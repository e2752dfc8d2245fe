//! Depth-stratified benchmark datasets, end-to-end scoring of model
//! responses, and per-depth accuracy.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exec::{execute_sequence, ExecutionTrace, ToolBackend};
use crate::ir::{parse_any, parse_model_response, ParseOutcome, ReturnMode};
use crate::reward::{compute_simple_reward, compute_tier_reward, GoldSpec, RewardBreakdown, RewardConfig};
use crate::scalar::Weight;
use crate::schema::{Dtype, ToolRegistry};
use crate::verify::{verify_sequence, VerificationReport};

pub const MAX_DEPTH: u8 = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("malformed dataset, line {line}: {reason}")]
    MalformedDataset { line: usize, reason: String },
    #[error("item `{item}` references unregistered tool `{tool}`")]
    UnknownToolReference { item: String, tool: String },
    #[error("item `{item}`: depth 0 must coincide with a no-call gold (depth {depth}, no_call {no_call})")]
    DepthGoldConflict { item: String, depth: u8, no_call: bool },
    #[error("malformed rollout file, line {line}: {reason}")]
    MalformedRollouts { line: usize, reason: String },
    #[error("rollouts and dataset disagree: items without a rollout {missing:?}, rollouts for unknown items {unknown:?}")]
    OrphanRollouts { missing: Vec<String>, unknown: Vec<String> },
    #[error("no results to aggregate")]
    EmptyResults,
    #[error("need {needed} distractors but only {available} non-target tools exist")]
    InsufficientPool { needed: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    None,
    Single,
    Chain,
    Funnel,
    Tree,
    Conjunctive,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchItem {
    pub id: String,
    pub query: String,
    pub depth: u8,
    pub structure: Structure,
    /// Targets and distractors offered to the model.
    pub tool_names: Vec<String>,
    pub gold: GoldSpec,
    /// One reference solution as an IR payload; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_trajectory: Option<String>,
    #[serde(default)]
    pub return_mode: ReturnMode,
}

impl BenchItem {
    /// The registry the model sees for this item.
    pub fn offered_registry(&self, registry: &ToolRegistry) -> ToolRegistry {
        registry.restrict(self.tool_names.iter().map(String::as_str))
    }

    fn validate(&self, line: usize, registry: &ToolRegistry) -> Result<(), BenchError> {
        let malformed = |reason: String| Err(BenchError::MalformedDataset { line, reason });
        if self.depth > MAX_DEPTH {
            return malformed(format!("depth {} exceeds {MAX_DEPTH}", self.depth));
        }
        if (self.depth == 0) != self.gold.no_call || (self.gold.no_call && self.gold.answer.is_some()) {
            return Err(BenchError::DepthGoldConflict {
                item: self.id.clone(),
                depth: self.depth,
                no_call: self.gold.no_call,
            });
        }
        if !self.gold.no_call && self.gold.answer.is_none() {
            return malformed(format!("item `{}` has neither a gold answer nor no_call", self.id));
        }
        match (self.depth, self.structure) {
            (0, Structure::None) => {}
            (0, s) => return malformed(format!("item `{}`: depth 0 needs structure none, got {s}", self.id)),
            (_, Structure::None) => return malformed(format!("item `{}`: structure none needs depth 0", self.id)),
            (d, Structure::Single) if d >= 2 => {
                return malformed(format!("item `{}`: depth {d} cannot be single", self.id))
            }
            _ => {}
        }
        for tool in &self.tool_names {
            if !registry.contains(tool) {
                return Err(BenchError::UnknownToolReference {
                    item: self.id.clone(),
                    tool: tool.clone(),
                });
            }
        }
        if let Some(traj) = &self.gold_trajectory {
            if let Err(e) = parse_any(traj, None) {
                return malformed(format!("item `{}`: gold trajectory does not parse: {e}", self.id));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string tag"))
    }
}

fn jsonl_lines(source: &str) -> impl Iterator<Item = (usize, &str)> {
    source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Reads a line-delimited dataset and checks every item against `registry`.
pub fn load_dataset(source: &str, registry: &ToolRegistry) -> Result<Vec<BenchItem>, BenchError> {
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for (line, text) in jsonl_lines(source) {
        let item: BenchItem = serde_json::from_str(text).map_err(|e| BenchError::MalformedDataset {
            line,
            reason: e.to_string(),
        })?;
        if !seen.insert(item.id.clone()) {
            return Err(BenchError::MalformedDataset {
                line,
                reason: format!("duplicate item id `{}`", item.id),
            });
        }
        item.validate(line, registry)?;
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rollout {
    pub item_id: String,
    pub response_text: String,
}

pub fn load_rollouts(source: &str) -> Result<Vec<Rollout>, BenchError> {
    jsonl_lines(source)
        .map(|(line, text)| {
            serde_json::from_str(text).map_err(|e| BenchError::MalformedRollouts {
                line,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardMode {
    #[default]
    Tier,
    Simple,
}

impl FromStr for RewardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tier" => Ok(RewardMode::Tier),
            "simple" => Ok(RewardMode::Simple),
            other => Err(format!("unknown reward mode `{other}` (expected tier or simple)")),
        }
    }
}

/// Every intermediate artifact of scoring one response.
#[derive(Debug, Clone)]
pub struct ScoredResponse<T: Weight> {
    pub parse: ParseOutcome,
    pub report: Option<VerificationReport>,
    pub trace: Option<ExecutionTrace>,
    pub breakdown: RewardBreakdown<T>,
}

/// Extracts the tool-call block from a raw response, then parses, verifies,
/// executes and scores it.
pub fn score_response<T: Weight>(
    response: &str,
    registry: &ToolRegistry,
    backend: &dyn ToolBackend,
    gold: &GoldSpec,
    config: &RewardConfig<T>,
    mode: RewardMode,
) -> ScoredResponse<T> {
    let parse = parse_model_response(response);
    let report = parse.as_ref().ok().map(|seq| verify_sequence(seq, registry));
    let trace = match (&parse, &report) {
        // Calls to tools the model was not offered are never run.
        (Ok(seq), Some(r)) if r.all_names_valid => Some(execute_sequence(seq, backend)),
        _ => None,
    };
    let breakdown = match mode {
        RewardMode::Tier => compute_tier_reward(&parse, report.as_ref(), trace.as_ref(), gold, config),
        RewardMode::Simple => compute_simple_reward(&parse, trace.as_ref(), gold, config),
    };
    ScoredResponse {
        parse,
        report,
        trace,
        breakdown,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemResult<T: Weight> {
    pub item_id: String,
    pub depth: u8,
    /// Answer-level accuracy: the answer component was credited.
    pub correct: bool,
    pub breakdown: RewardBreakdown<T>,
}

pub fn evaluate_item<T: Weight>(
    item: &BenchItem,
    response: &str,
    registry: &ToolRegistry,
    backend: &dyn ToolBackend,
    config: &RewardConfig<T>,
) -> ItemResult<T> {
    let offered = item.offered_registry(registry);
    let scored = score_response(response, &offered, backend, &item.gold, config, RewardMode::Tier);
    ItemResult {
        item_id: item.id.clone(),
        depth: item.depth,
        correct: scored.breakdown.answer_correct(),
        breakdown: scored.breakdown,
    }
}

/// Scores one rollout per item. Every item needs exactly one rollout.
pub fn evaluate_dataset<T: Weight>(
    items: &[BenchItem],
    rollouts: &[Rollout],
    registry: &ToolRegistry,
    backend: &dyn ToolBackend,
    config: &RewardConfig<T>,
) -> Result<Vec<ItemResult<T>>, BenchError> {
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    let mut unknown = BTreeSet::new();
    let ids: HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    for (i, r) in rollouts.iter().enumerate() {
        if !ids.contains(r.item_id.as_str()) {
            unknown.insert(r.item_id.clone());
        } else if by_id.insert(&r.item_id, &r.response_text).is_some() {
            return Err(BenchError::MalformedRollouts {
                line: i + 1,
                reason: format!("second rollout for `{}`", r.item_id),
            });
        }
    }
    let missing: Vec<String> = items
        .iter()
        .filter(|i| !by_id.contains_key(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    if !missing.is_empty() || !unknown.is_empty() {
        return Err(BenchError::OrphanRollouts {
            missing,
            unknown: unknown.into_iter().collect(),
        });
    }
    Ok(items
        .iter()
        .map(|item| evaluate_item(item, by_id[item.id.as_str()], registry, backend, config))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthStats {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthReport {
    pub per_depth: BTreeMap<u8, DepthStats>,
    /// Population-weighted: total correct over total items.
    pub overall: f64,
    pub n: usize,
    pub correct: usize,
}

impl DepthReport {
    /// Overall accuracy plus one column per depth 0–6 (null where a depth has no items).
    pub fn to_document(&self) -> Value {
        let columns: serde_json::Map<String, Value> = (0..=MAX_DEPTH)
            .map(|d| {
                let cell = self
                    .per_depth
                    .get(&d)
                    .map_or(Value::Null, |s| json!({"n": s.n, "correct": s.correct, "accuracy": s.accuracy}));
                (d.to_string(), cell)
            })
            .collect();
        json!({"overall": self.overall, "n": self.n, "correct": self.correct, "per_depth": columns})
    }
}

pub fn aggregate_by_depth(results: &[(u8, bool)]) -> Result<DepthReport, BenchError> {
    if results.is_empty() {
        return Err(BenchError::EmptyResults);
    }
    let mut counts: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    for &(depth, correct) in results {
        let e = counts.entry(depth).or_default();
        e.0 += 1;
        e.1 += usize::from(correct);
    }
    let per_depth = counts
        .into_iter()
        .map(|(d, (n, correct))| {
            (
                d,
                DepthStats {
                    n,
                    correct,
                    accuracy: correct as f64 / n as f64,
                },
            )
        })
        .collect::<BTreeMap<_, _>>();
    let n = results.len();
    let correct = per_depth.values().map(|s| s.correct).sum::<usize>();
    Ok(DepthReport {
        per_depth,
        overall: correct as f64 / n as f64,
        n,
        correct,
    })
}

pub fn report_for<T: Weight>(results: &[ItemResult<T>]) -> Result<DepthReport, BenchError> {
    aggregate_by_depth(&results.iter().map(|r| (r.depth, r.correct)).collect::<Vec<_>>())
}

/// Picks `k` non-target tools, seeded. Tools whose return type matches some
/// target's return type are drawn first; the rest fill any remainder.
pub fn sample_distractors(
    registry: &ToolRegistry,
    targets: &[&str],
    k: usize,
    seed: u64,
) -> Result<Vec<String>, BenchError> {
    let target_set: HashSet<&str> = targets.iter().copied().collect();
    let target_types: HashSet<Dtype> = targets
        .iter()
        .filter_map(|t| registry.lookup(t).and_then(|s| s.returns_dtype))
        .collect();
    let (mut preferred, mut rest): (Vec<&str>, Vec<&str>) = registry
        .iter()
        .filter(|s| !target_set.contains(s.name.as_str()))
        .map(|s| s.name.as_str())
        .partition(|n| {
            registry
                .lookup(n)
                .and_then(|s| s.returns_dtype)
                .is_some_and(|d| target_types.contains(&d))
        });
    let available = preferred.len() + rest.len();
    if k > available {
        return Err(BenchError::InsufficientPool { needed: k, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    preferred.shuffle(&mut rng);
    rest.shuffle(&mut rng);
    Ok(preferred.into_iter().chain(rest).take(k).map(str::to_string).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitReport {
    pub disjoint: bool,
    /// Tools offered in both splits.
    pub shared_tools: Vec<String>,
}

/// Checks that no tool offered in `train` is offered in `eval`, in any role.
pub fn check_split(train: &[BenchItem], eval: &[BenchItem]) -> SplitReport {
    let seen: BTreeSet<&str> = train.iter().flat_map(|i| i.tool_names.iter().map(String::as_str)).collect();
    let shared: BTreeSet<&str> = eval
        .iter()
        .flat_map(|i| i.tool_names.iter().map(String::as_str))
        .filter(|t| seen.contains(t))
        .collect();
    SplitReport {
        disjoint: shared.is_empty(),
        shared_tools: shared.into_iter().map(str::to_string).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Fixtures;

    fn registry() -> ToolRegistry {
        Fixtures::builtin_registry()
    }

    const ITEM: &str = r#"{"id": "q1", "query": "Where am I?", "depth": 1, "structure": "single", "tool_names": ["Get_current_location"], "gold": {"answer": "San Diego"}}"#;

    #[test]
    fn load_checks() {
        assert_eq!(load_dataset(ITEM, &registry()).unwrap().len(), 1);
        let d0 = r#"{"id": "z", "query": "q", "depth": 0, "structure": "none", "tool_names": [], "gold": {"no_call": true}}"#;
        assert_eq!(load_dataset(d0, &registry()).unwrap()[0].return_mode, ReturnMode::One);
        let conflict = r#"{"id": "z", "query": "q", "depth": 0, "structure": "none", "tool_names": [], "gold": {"answer": 42}}"#;
        assert!(matches!(load_dataset(conflict, &registry()), Err(BenchError::DepthGoldConflict { .. })));
        let unknown = ITEM.replace("\"Get_current_location\"]", "\"Get_current_location\", \"Teleport\"]");
        assert!(matches!(load_dataset(&unknown, &registry()), Err(BenchError::UnknownToolReference { .. })));
        let single = ITEM.replace("\"depth\": 1", "\"depth\": 3");
        assert!(matches!(load_dataset(&single, &registry()), Err(BenchError::MalformedDataset { .. })));
        let dup = format!("{ITEM}\n{ITEM}");
        assert!(matches!(load_dataset(&dup, &registry()), Err(BenchError::MalformedDataset { line: 2, .. })));
    }

    #[test]
    fn aggregation() {
        let r = aggregate_by_depth(&[(0, true), (0, true), (1, false)]).unwrap();
        assert_eq!(r.per_depth[&0].accuracy, 1.0);
        assert_eq!(r.per_depth[&1].accuracy, 0.0);
        assert_eq!(r.overall, 2.0 / 3.0);
        let mut weighted = vec![(1u8, true); 10];
        weighted.extend((0..20).map(|i| (2u8, i % 2 == 0)));
        assert_eq!(aggregate_by_depth(&weighted).unwrap().overall, 20.0 / 30.0);
        assert_eq!(aggregate_by_depth(&[]), Err(BenchError::EmptyResults));
    }

    #[test]
    fn distractors() {
        let reg = registry();
        assert!(sample_distractors(&reg, &["Get_weather"], 0, 1).unwrap().is_empty());
        let a = sample_distractors(&reg, &["Get_weather", "Get_Crypto_Price"], 3, 7).unwrap();
        assert_eq!(a, sample_distractors(&reg, &["Get_weather", "Get_Crypto_Price"], 3, 7).unwrap());
        assert!(a.iter().all(|n| n != "Get_weather" && n != "Get_Crypto_Price"));
        assert!(matches!(
            sample_distractors(&reg, &[], reg.len() + 1, 0),
            Err(BenchError::InsufficientPool { .. })
        ));
    }

    #[test]
    fn preference_for_matching_return_types() {
        let reg = crate::schema::load_registry(
            r#"[{"name": "T", "parameters": [], "returns": {"type": "float"}},
                {"name": "A", "parameters": [], "returns": {"type": "string"}},
                {"name": "B", "parameters": [], "returns": {"type": "float"}},
                {"name": "C", "parameters": [], "returns": {"type": "array"}},
                {"name": "D", "parameters": []}]"#,
            crate::schema::Dialect::Native,
        )
        .unwrap();
        for seed in 0..20 {
            assert!(sample_distractors(&reg, &["T"], 2, seed).unwrap().contains(&"B".to_string()));
        }
    }

    #[test]
    fn evaluate_and_orphans() {
        let reg = registry();
        let items = load_dataset(ITEM, &reg).unwrap();
        let backend = crate::exec::fixture_backend(Fixtures::builtin());
        let cfg = RewardConfig::<f64>::default();
        let good = r#"<tool_call return="one">{"0": {"Get_current_location": {}}}</tool_call>"#;
        let r = evaluate_item(&items[0], good, &reg, &backend, &cfg);
        assert!(r.correct);
        assert_eq!(r.breakdown.total, 1.0);
        let bad = evaluate_item(&items[0], "{\"0\":", &reg, &backend, &cfg);
        assert!(!bad.correct);
        assert_eq!(bad.breakdown.total, 0.0);
        // A tool the item does not offer is an invalid name here.
        let off = r#"<tool_call return="one">{"0": {"Get_current_time": {}}}</tool_call>"#;
        assert_eq!(evaluate_item(&items[0], off, &reg, &backend, &cfg).breakdown.total, 0.1);
        let orphans = vec![Rollout {
            item_id: "nope".into(),
            response_text: good.into(),
        }];
        assert_eq!(
            evaluate_dataset(&items, &orphans, &reg, &backend, &cfg),
            Err(BenchError::OrphanRollouts {
                missing: vec!["q1".into()],
                unknown: vec!["nope".into()]
            })
        );
    }

    #[test]
    fn split_check() {
        let reg = registry();
        let a = load_dataset(ITEM, &reg).unwrap();
        let b = load_dataset(&ITEM.replace("Get_current_location", "GetTime").replace("q1", "q2"), &reg).unwrap();
        assert!(check_split(&a, &b).disjoint);
        let r = check_split(&a, &a);
        assert_eq!(r.shared_tools, vec!["Get_current_location"]);
    }
}
