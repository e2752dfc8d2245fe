//! Reward decomposition for a single generated tool-call sequence.
//!
//! ```text
//! total = (format + [name + param + dtype] + exec + answer) / active maximum
//! ```
//!
//! Format failure zeroes everything. An unregistered tool name zeroes the
//! parse block and, since such a call cannot run, execution and answer
//! credit too. The answer is credited only through a fully successful run.
//! Components outside the mask report zero and leave the maximum.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exec::{ExecutionTrace, FinalAnswer};
use crate::ir::{ParseOutcome, ToolCallSequence};
use crate::scalar::{clamp01, Weight};
use crate::schema::ToolRegistry;
use crate::verify::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewardError {
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error("unreadable reward config: {0}")]
    MalformedConfig(String),
    #[error("unknown reward component `{0}`")]
    UnknownComponent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Format,
    Parse,
    Exec,
    Answer,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::Format, Component::Parse, Component::Exec, Component::Answer];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Format => "format",
            Component::Parse => "parse",
            Component::Exec => "exec",
            Component::Answer => "answer",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = RewardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| RewardError::UnknownComponent(s.to_string()))
    }
}

/// Enabled reward components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentMask(BTreeSet<Component>);

impl ComponentMask {
    pub fn full() -> Self {
        ComponentMask(Component::ALL.into_iter().collect())
    }

    /// Format and answer only.
    pub fn simple() -> Self {
        ComponentMask([Component::Format, Component::Answer].into_iter().collect())
    }

    pub fn of(components: impl IntoIterator<Item = Component>) -> Self {
        ComponentMask(components.into_iter().collect())
    }

    /// The full mask minus one component, as in an ablation run.
    pub fn without(c: Component) -> Self {
        let mut m = Self::full();
        m.0.remove(&c);
        m
    }

    pub fn contains(&self, c: Component) -> bool {
        self.0.contains(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = Component> + '_ {
        self.0.iter().copied()
    }
}

impl Default for ComponentMask {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardConfig<T: Weight> {
    pub lambda_p: T,
    pub answer_weight: T,
    pub mask: ComponentMask,
    pub name_weight: T,
    pub param_weight: T,
    pub dtype_weight: T,
    /// Absolute-or-relative tolerance for numeric answer comparison.
    pub answer_tolerance: f64,
}

impl<T: Weight> Default for RewardConfig<T> {
    fn default() -> Self {
        RewardConfig {
            lambda_p: T::lit(0.25),
            answer_weight: T::lit(5.0),
            mask: ComponentMask::full(),
            name_weight: T::one(),
            param_weight: T::one(),
            dtype_weight: T::one(),
            answer_tolerance: 1e-9,
        }
    }
}

/// On-disk form; every field is optional and falls back to the default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    lambda_p: Option<f64>,
    answer_weight: Option<f64>,
    components: Option<Vec<String>>,
    name_weight: Option<f64>,
    param_weight: Option<f64>,
    dtype_weight: Option<f64>,
    answer_tolerance: Option<f64>,
}

impl<T: Weight> RewardConfig<T> {
    /// Format + answer baseline with the same weights.
    pub fn simple() -> Self {
        RewardConfig {
            mask: ComponentMask::simple(),
            ..Self::default()
        }
    }

    pub fn with_mask(mut self, mask: ComponentMask) -> Self {
        self.mask = mask;
        self
    }

    pub fn parse_max(&self) -> T {
        self.name_weight + self.param_weight + self.dtype_weight
    }

    /// Sum of the maxima of the enabled components.
    pub fn active_max(&self) -> T {
        self.mask.iter().fold(T::zero(), |acc, c| {
            acc + match c {
                Component::Format | Component::Exec => T::one(),
                Component::Parse => self.parse_max(),
                Component::Answer => self.answer_weight,
            }
        })
    }

    // Negated comparisons so that NaN is rejected as well.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |what: &str| Err(RewardError::InvalidConfig(what.to_string()));
        for (name, v) in [
            ("lambda_p", self.lambda_p),
            ("answer_weight", self.answer_weight),
            ("name_weight", self.name_weight),
            ("param_weight", self.param_weight),
            ("dtype_weight", self.dtype_weight),
        ] {
            if !(v >= T::zero()) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        if !self.mask.contains(Component::Format) || !self.mask.contains(Component::Answer) {
            return bad("format and answer components cannot be disabled");
        }
        if !(self.active_max() > T::zero()) {
            return bad("active maximum must be positive");
        }
        if !(self.answer_tolerance >= 0.0) {
            return bad("answer_tolerance must be non-negative");
        }
        Ok(())
    }

    /// Reads a JSON config document; absent fields keep their defaults.
    pub fn from_json(source: &str) -> Result<Self, RewardError> {
        let file: ConfigFile =
            serde_json::from_str(source).map_err(|e| RewardError::MalformedConfig(e.to_string()))?;
        let mut cfg = Self::default();
        let conv = |name: &str, v: f64| {
            T::from_f64(v).ok_or_else(|| RewardError::InvalidConfig(format!("{name} = {v} is not representable")))
        };
        if let Some(v) = file.lambda_p {
            cfg.lambda_p = conv("lambda_p", v)?;
        }
        if let Some(v) = file.answer_weight {
            cfg.answer_weight = conv("answer_weight", v)?;
        }
        if let Some(v) = file.name_weight {
            cfg.name_weight = conv("name_weight", v)?;
        }
        if let Some(v) = file.param_weight {
            cfg.param_weight = conv("param_weight", v)?;
        }
        if let Some(v) = file.dtype_weight {
            cfg.dtype_weight = conv("dtype_weight", v)?;
        }
        if let Some(v) = file.answer_tolerance {
            cfg.answer_tolerance = v;
        }
        if let Some(names) = file.components {
            cfg.mask = ComponentMask::of(names.iter().map(|n| n.parse()).collect::<Result<Vec<_>, _>>()?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_document(&self) -> Value {
        json!({
            "lambda_p": self.lambda_p.as_f64(),
            "answer_weight": self.answer_weight.as_f64(),
            "components": self.mask.iter().map(Component::as_str).collect::<Vec<_>>(),
            "name_weight": self.name_weight.as_f64(),
            "param_weight": self.param_weight.as_f64(),
            "dtype_weight": self.dtype_weight.as_f64(),
            "answer_tolerance": self.answer_tolerance,
        })
    }
}

/// Expected outcome of a benchmark item.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoldSpec {
    #[serde(default)]
    pub answer: Option<Value>,
    #[serde(default)]
    pub no_call: bool,
    /// JSON pointers (into the gold answer) of arrays compared as multisets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unordered: Vec<String>,
}

impl GoldSpec {
    pub fn answer(v: Value) -> Self {
        GoldSpec {
            answer: Some(v),
            ..Default::default()
        }
    }

    pub fn no_call() -> Self {
        GoldSpec {
            no_call: true,
            ..Default::default()
        }
    }

    pub fn unordered_at(mut self, pointer: impl Into<String>) -> Self {
        self.unordered.push(pointer.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingNote {
    None,
    FormatFailed,
    NamesInvalid,
    ExecutionFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardBreakdown<T: Weight> {
    pub r_format: T,
    pub r_name: T,
    pub r_param: T,
    pub r_dtype: T,
    pub r_parse: T,
    pub r_exec: T,
    pub r_answer: T,
    pub raw_total: T,
    pub total: T,
    pub gating_note: GatingNote,
    pub mask: ComponentMask,
}

impl<T: Weight> RewardBreakdown<T> {
    fn zero(mask: &ComponentMask, note: GatingNote) -> Self {
        RewardBreakdown {
            r_format: T::zero(),
            r_name: T::zero(),
            r_param: T::zero(),
            r_dtype: T::zero(),
            r_parse: T::zero(),
            r_exec: T::zero(),
            r_answer: T::zero(),
            raw_total: T::zero(),
            total: T::zero(),
            gating_note: note,
            mask: mask.clone(),
        }
    }

    pub fn answer_correct(&self) -> bool {
        self.r_answer > T::zero()
    }

    pub fn to_document(&self) -> Value {
        json!({
            "components": {
                "format": self.r_format.as_f64(),
                "name": self.r_name.as_f64(),
                "param": self.r_param.as_f64(),
                "dtype": self.r_dtype.as_f64(),
                "parse": self.r_parse.as_f64(),
                "exec": self.r_exec.as_f64(),
                "answer": self.r_answer.as_f64(),
            },
            "raw_total": self.raw_total.as_f64(),
            "total": self.total.as_f64(),
            "gating_note": self.gating_note,
            "mask": self.mask.iter().map(Component::as_str).collect::<Vec<_>>(),
        })
    }
}

/// `clip(1 − λ·p, 0, 1)`.
pub fn clip_linear<T: Weight>(p: usize, lambda_p: T) -> T {
    clamp01(T::one() - lambda_p * T::from_count(p))
}

/// Scores one sequence. `report` and `trace` are expected whenever parsing
/// succeeded; a missing report counts as unverifiable and a missing trace
/// as a failed run.
pub fn compute_tier_reward<T: Weight>(
    parse: &ParseOutcome,
    report: Option<&VerificationReport>,
    trace: Option<&ExecutionTrace>,
    gold: &GoldSpec,
    config: &RewardConfig<T>,
) -> RewardBreakdown<T> {
    let mask = &config.mask;
    if parse.is_err() {
        return RewardBreakdown::zero(mask, GatingNote::FormatFailed);
    }
    let mut b = RewardBreakdown::zero(mask, GatingNote::None);
    b.r_format = T::one();

    let names_valid = report.is_some_and(|r| r.all_names_valid);
    if !names_valid {
        b.gating_note = GatingNote::NamesInvalid;
    } else if let Some(report) = report {
        if mask.contains(Component::Parse) {
            b.r_name = config.name_weight;
            b.r_param = config.param_weight * clip_linear(report.param_mismatches, config.lambda_p);
            b.r_dtype = config.dtype_weight * clip_linear(report.dtype_mismatches, config.lambda_p);
            b.r_parse = b.r_name + b.r_param + b.r_dtype;
        }
        match trace.filter(|t| t.all_succeeded) {
            None => b.gating_note = GatingNote::ExecutionFailed,
            Some(t) => {
                if mask.contains(Component::Exec) {
                    b.r_exec = T::one();
                }
                let correct = t
                    .final_answer
                    .as_ref()
                    .is_some_and(|a| answers_equal(a, gold, config.answer_tolerance));
                if correct && mask.contains(Component::Answer) {
                    b.r_answer = config.answer_weight;
                }
            }
        }
    }
    b.raw_total = b.r_format + b.r_parse + b.r_exec + b.r_answer;
    b.total = b.raw_total / config.active_max();
    b
}

/// Format + answer baseline: no intermediate supervision. Whatever mask
/// `config` carries is replaced by the simple one.
pub fn compute_simple_reward<T: Weight>(
    parse: &ParseOutcome,
    trace: Option<&ExecutionTrace>,
    gold: &GoldSpec,
    config: &RewardConfig<T>,
) -> RewardBreakdown<T> {
    let cfg = config.clone().with_mask(ComponentMask::simple());
    // No schema supervision: an unregistered name surfaces as a failed run.
    let report = parse.as_ref().ok().map(|_| VerificationReport {
        all_names_valid: true,
        invalid_names: vec![],
        param_mismatches: 0,
        dtype_mismatches: 0,
        per_call: vec![],
    });
    compute_tier_reward(parse, report.as_ref(), trace, gold, &cfg)
}

fn numbers_close(a: f64, b: f64, tol: f64) -> bool {
    let diff = (a - b).abs();
    diff <= tol || diff <= tol * a.abs().max(b.abs())
}

fn values_equal(cand: &Value, gold: &Value, path: &str, unordered: &[String], tol: f64) -> bool {
    match (cand, gold) {
        (Value::Number(a), Value::Number(b)) => {
            if let (Some(x), Some(y)) = (a.as_i64(), b.as_i64()) {
                if x == y {
                    return true;
                }
            }
            match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => numbers_close(x, y, tol),
                _ => false,
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            a.len() == b.len()
                && b.iter().all(|(k, gv)| {
                    let child = format!("{path}/{}", k.replace('~', "~0").replace('/', "~1"));
                    a.get(k).is_some_and(|cv| values_equal(cv, gv, &child, unordered, tol))
                })
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return false;
            }
            let child = |i: usize| format!("{path}/{i}");
            if unordered.iter().any(|p| p == path) {
                // Gold element j may match candidate i; need a perfect matching.
                let adj: Vec<Vec<usize>> = b
                    .iter()
                    .enumerate()
                    .map(|(j, gv)| {
                        (0..a.len())
                            .filter(|&i| values_equal(&a[i], gv, &child(j), unordered, tol))
                            .collect()
                    })
                    .collect();
                perfect_matching(&adj, a.len())
            } else {
                a.iter()
                    .zip(b)
                    .enumerate()
                    .all(|(i, (cv, gv))| values_equal(cv, gv, &child(i), unordered, tol))
            }
        }
        _ => cand == gold,
    }
}

/// Kuhn's augmenting-path matching; true when every left vertex is matched.
fn perfect_matching(adj: &[Vec<usize>], right: usize) -> bool {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; right];
    (0..adj.len()).all(|u| augment(u, adj, &mut vec![false; right], &mut owner))
}

/// Whether a final answer matches the gold. Numbers compare at `tolerance`
/// (absolute or relative), object key order is ignored, arrays are ordered
/// unless their pointer is listed in `gold.unordered`, and NO-CALL matches
/// only a no-call gold.
pub fn answers_equal(candidate: &FinalAnswer, gold: &GoldSpec, tolerance: f64) -> bool {
    match (candidate, gold.no_call) {
        (FinalAnswer::NoCall, no_call) => no_call,
        (_, true) => false,
        (c, false) => match (c.to_value(), &gold.answer) {
            (Some(v), Some(g)) => values_equal(&v, g, "", &gold.unordered, tolerance),
            _ => false,
        },
    }
}

/// Trajectory comparison that scores required parameters only: calls are
/// paired in id order, names must agree pairwise, and every required
/// parameter must carry equal values on both sides. Optional parameters are
/// ignored, so omitting one and passing its default are indistinguishable.
pub fn relaxed_trajectory_match(seq: &ToolCallSequence, gold: &ToolCallSequence, registry: &ToolRegistry) -> bool {
    seq.len() == gold.len()
        && seq.calls().iter().zip(gold.calls()).all(|(c, g)| {
            if c.tool_name != g.tool_name {
                return false;
            }
            let Some(schema) = registry.lookup(&g.tool_name) else {
                return false;
            };
            schema.required_params().all(|p| match (c.args.get(&p.name), g.args.get(&p.name)) {
                (Some(x), Some(y)) => x.numeric_eq(y),
                (None, None) => true,
                _ => false,
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{execute_sequence, fixture_backend, Fixtures};
    use crate::ir::{parse_json_ast, FormatError, FormatErrorKind};
    use crate::verify::verify_sequence;
    use num_rational::Ratio;

    fn report(names: bool, p: usize, d: usize) -> VerificationReport {
        VerificationReport {
            all_names_valid: names,
            invalid_names: vec![],
            param_mismatches: p,
            dtype_mismatches: d,
            per_call: vec![],
        }
    }

    fn trace(ok: bool, answer: Value) -> ExecutionTrace {
        ExecutionTrace {
            steps: vec![],
            all_succeeded: ok,
            final_answer: ok.then_some(FinalAnswer::Value(answer)),
        }
    }

    fn parsed() -> ParseOutcome {
        Ok(ToolCallSequence::no_call())
    }

    #[test]
    fn clip_table() {
        let got: Vec<f64> = (0..6).map(|p| clip_linear(p, 0.25)).collect();
        assert_eq!(got, vec![1.0, 0.75, 0.5, 0.25, 0.0, 0.0]);
        assert_eq!(clip_linear(2, Ratio::new(1i64, 4)), Ratio::new(1, 2));
    }

    #[test]
    fn partial_param_credit() {
        let cfg = RewardConfig::<f64>::default();
        let b = compute_tier_reward(&parsed(), Some(&report(true, 1, 0)), Some(&trace(true, json!(1))), &GoldSpec::answer(json!(1)), &cfg);
        assert_eq!((b.r_parse, b.raw_total, b.total), (2.75, 9.75, 0.975));
    }

    #[test]
    fn ladder_exact_with_rationals() {
        let cfg = RewardConfig::<Ratio<i64>>::default();
        let gold = GoldSpec::answer(json!("x"));
        let r = |parse: &ParseOutcome, rep: Option<VerificationReport>, t: Option<ExecutionTrace>| {
            compute_tier_reward(parse, rep.as_ref(), t.as_ref(), &gold, &cfg).total
        };
        let broken: ParseOutcome = Err(FormatError::new(FormatErrorKind::Syntax, "x"));
        assert_eq!(r(&broken, None, None), Ratio::from_integer(0));
        assert_eq!(r(&parsed(), Some(report(true, 0, 0)), Some(trace(false, json!(null)))), Ratio::new(2, 5));
        assert_eq!(r(&parsed(), Some(report(true, 0, 0)), Some(trace(true, json!("y")))), Ratio::new(1, 2));
        assert_eq!(r(&parsed(), Some(report(true, 0, 0)), Some(trace(true, json!("x")))), Ratio::from_integer(1));
        assert_eq!(r(&parsed(), Some(report(false, 0, 0)), Some(trace(false, json!(null)))), Ratio::new(1, 10));
    }

    #[test]
    fn simple_baseline() {
        let cfg = RewardConfig::<f64>::default();
        let gold = GoldSpec::answer(json!(3));
        let wrong = compute_simple_reward(&parsed(), Some(&trace(true, json!(4))), &gold, &cfg);
        assert_eq!(wrong.total, 1.0 / 6.0);
        let right = compute_simple_reward(&parsed(), Some(&trace(true, json!(3.0))), &gold, &cfg);
        assert_eq!(right.total, 1.0);
        let failed = compute_simple_reward(&parsed(), Some(&trace(false, json!(null))), &gold, &cfg);
        assert_eq!((failed.total, failed.gating_note), (1.0 / 6.0, GatingNote::ExecutionFailed));
    }

    #[test]
    fn ablation_renormalises() {
        let cfg = RewardConfig::<f64>::default().with_mask(ComponentMask::without(Component::Parse));
        assert_eq!(cfg.active_max(), 7.0);
        let gold = GoldSpec::answer(json!(1));
        let b = compute_tier_reward(&parsed(), Some(&report(true, 3, 3)), Some(&trace(true, json!(1))), &gold, &cfg);
        assert_eq!(b.total, 1.0);
        let fail = compute_tier_reward(&parsed(), Some(&report(true, 0, 0)), Some(&trace(false, json!(1))), &gold, &cfg);
        assert_eq!(fail.total, 1.0 / 7.0);
        assert!(RewardConfig::<f64>::default().with_mask(ComponentMask::without(Component::Answer)).validate().is_err());
    }

    #[test]
    fn config_file() {
        let cfg = RewardConfig::<f64>::from_json(r#"{"lambda_p": 0.5, "components": ["format", "exec", "answer"]}"#).unwrap();
        assert_eq!((cfg.lambda_p, cfg.active_max()), (0.5, 7.0));
        assert!(RewardConfig::<f64>::from_json(r#"{"lambda": 1}"#).is_err());
        assert!(RewardConfig::<f64>::from_json(r#"{"answer_weight": -1}"#).is_err());
        assert!(RewardConfig::<f64>::from_json(r#"{"components": ["format", "vibes", "answer"]}"#).is_err());
    }

    #[test]
    fn answer_matching() {
        let v = |x: Value| FinalAnswer::Value(x);
        assert!(answers_equal(&v(json!({"a": 1, "b": 2})), &GoldSpec::answer(json!({"b": 2, "a": 1})), 1e-9));
        assert!(answers_equal(&v(json!(0.30000000000001)), &GoldSpec::answer(json!(0.3)), 1e-9));
        assert!(!answers_equal(&v(json!(0.31)), &GoldSpec::answer(json!(0.3)), 1e-9));
        assert!(answers_equal(&FinalAnswer::NoCall, &GoldSpec::no_call(), 1e-9));
        assert!(!answers_equal(&FinalAnswer::NoCall, &GoldSpec::answer(json!(null)), 1e-9));
        assert!(!answers_equal(&v(json!(1)), &GoldSpec::no_call(), 1e-9));
        assert!(!answers_equal(&v(json!([1, 2])), &GoldSpec::answer(json!([2, 1])), 1e-9));
        let unordered = GoldSpec::answer(json!({"xs": [2, 1, 1]})).unordered_at("/xs");
        assert!(answers_equal(&v(json!({"xs": [1, 2, 1]})), &unordered, 1e-9));
        assert!(!answers_equal(&v(json!({"xs": [1, 2, 2]})), &unordered, 1e-9));
        let all = FinalAnswer::All(vec![(0, json!(1)), (1, json!("b"))]);
        assert!(answers_equal(&all, &GoldSpec::answer(json!([1, "b"])), 1e-9));
    }

    #[test]
    fn relaxed_match() {
        let reg = crate::schema::load_registry(
            r#"[{"name": "Find", "parameters": [
                {"name": "city", "type": "string", "required": true},
                {"name": "limit", "type": "integer", "required": false, "default": 10}]},
               {"name": "Now", "parameters": []}]"#,
            crate::schema::Dialect::Native,
        )
        .unwrap();
        let s = |p: &str| parse_json_ast(p).unwrap();
        let gold = s(r#"{"0": {"Find": {"city": "LA", "limit": 10}}, "1": {"Now": {}}}"#);
        assert!(relaxed_trajectory_match(&s(r#"{"0": {"Find": {"city": "LA"}}, "1": {"Now": {}}}"#), &gold, &reg));
        assert!(!relaxed_trajectory_match(&s(r#"{"0": {"Find": {"city": "SF"}}, "1": {"Now": {}}}"#), &gold, &reg));
        assert!(!relaxed_trajectory_match(&s(r#"{"0": {"Now": {}}, "1": {"Find": {"city": "LA"}}}"#), &gold, &reg));
    }

    #[test]
    fn end_to_end_on_fixtures() {
        let backend = fixture_backend(Fixtures::builtin());
        let reg = Fixtures::builtin_registry();
        let parse = parse_json_ast(
            r#"{"0": {"Get_current_time": {}}, "1": {"Get_current_location": {}},
                "2": {"Get_weather": {"time": "API_RESPONSE_0", "location": "API_RESPONSE_1"}}}"#,
        );
        let seq = parse.as_ref().unwrap();
        let rep = verify_sequence(seq, &reg);
        let tr = execute_sequence(seq, &backend);
        let b = compute_tier_reward(&parse, Some(&rep), Some(&tr), &GoldSpec::answer(json!("Clear, 64F")), &RewardConfig::<f64>::default());
        assert_eq!(b.total, 1.0);
    }
}
