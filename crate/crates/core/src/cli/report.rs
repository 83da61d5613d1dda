//! Report documents written by the command-line tool.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

use super::format::Probability;
use crate::bsi::{EvalMode, SiConfig};
use crate::bvi::{BoundsResult, BviConfig, Termination};
use crate::game::{Game, MixedStrategy, Player, StateSet, Valuation};
use crate::graph::MecDecomposition;
use crate::oracle::McEstimate;

/// A float printed with 17 significant digits, which round-trips every f64.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num17(pub f64);

impl fmt::Display for Num17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_g17(self.0))
    }
}

impl Serialize for Num17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(format_g17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

/// `%.17g` formatting: shortest of fixed or exponent notation, trailing
/// zeros removed.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if !(-5..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{head}{frac}e{esign}{:02}", exp.abs());
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{digits}");
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
    }
}

/// A map serialized in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordered<T>(pub Vec<(String, T)>);

impl<T: Serialize> Serialize for Ordered<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn num_seq<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(values.len()))?;
    for &v in values {
        seq.serialize_element(&Num17(v))?;
    }
    seq.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    pub lower: Num17,
    pub upper: Num17,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigEcho {
    pub max_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_tol: Option<Num17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_exit_tol: Option<Num17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub improve_tol: Option<Num17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive_upper: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_mode: Option<&'static str>,
    pub trace: bool,
}

impl ConfigEcho {
    pub fn from_bvi(cfg: &BviConfig) -> Self {
        ConfigEcho {
            max_iters: cfg.max_iters,
            lp_tol: Some(Num17(cfg.lp_tol)),
            best_exit_tol: Some(Num17(cfg.best_exit_tol)),
            improve_tol: None,
            naive_upper: Some(cfg.naive_upper),
            threads: Some(cfg.threads),
            eval_mode: None,
            trace: cfg.trace,
        }
    }

    pub fn from_si(cfg: &SiConfig) -> Self {
        ConfigEcho {
            max_iters: cfg.max_iters,
            lp_tol: None,
            best_exit_tol: None,
            improve_tol: Some(Num17(cfg.improve_tol)),
            naive_upper: None,
            threads: None,
            eval_mode: Some(match cfg.eval_mode {
                EvalMode::Exact => "exact",
                EvalMode::Iterative => "iterative",
            }),
            trace: cfg.trace,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRow {
    pub iteration: usize,
    #[serde(serialize_with = "num_seq")]
    pub lower: Vec<f64>,
    #[serde(serialize_with = "num_seq")]
    pub upper_swept: Vec<f64>,
    #[serde(serialize_with = "num_seq")]
    pub upper: Vec<f64>,
}

type StrategyMap = Ordered<Ordered<Num17>>;

#[derive(Debug, Clone, Serialize)]
pub struct Strategies {
    pub reach: StrategyMap,
    pub safe: StrategyMap,
}

fn strategy_map(game: &Game, strategy: &MixedStrategy) -> StrategyMap {
    let player = strategy.owner();
    Ordered(
        (0..game.num_states())
            .map(|s| {
                let moves = game.moves(player, s);
                let probs = strategy.probs(s);
                let entries = moves.iter().zip(probs).map(|(m, &p)| (m.clone(), Num17(p))).collect();
                (game.state_name(s).to_string(), Ordered(entries))
            })
            .collect(),
    )
}

fn names(game: &Game, set: &StateSet) -> Vec<String> {
    set.iter().map(|&s| game.state_name(s).to_string()).collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub version: &'static str,
    pub method: &'static str,
    pub objective: &'static str,
    pub epsilon: Num17,
    pub states: Ordered<Bounds>,
    pub iterations: usize,
    pub termination: Termination,
    pub strategies: Strategies,
    pub mecs: Vec<Vec<String>>,
    pub winning_region: Vec<String>,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRow>>,
    /// Written to stderr, never into the document.
    #[serde(skip)]
    pub diagnostics: Vec<String>,
}

impl SolveReport {
    /// With `safety`, bounds are those of the complementary safety objective.
    pub fn new(
        game: &Game,
        result: &BoundsResult,
        method: &'static str,
        safety: bool,
        epsilon: f64,
        config: ConfigEcho,
    ) -> Self {
        let flip = |v: &[f64]| -> Vec<f64> {
            if safety {
                v.iter().map(|x| 1.0 - x).collect()
            } else {
                v.to_vec()
            }
        };
        let (lo, hi) = if safety {
            (result.upper.complement(), result.lower.complement())
        } else {
            (result.lower.clone(), result.upper.clone())
        };
        let states = Ordered(
            (0..game.num_states())
                .map(|s| (game.state_name(s).to_string(), Bounds { lower: Num17(lo[s]), upper: Num17(hi[s]) }))
                .collect(),
        );
        let trace = result.trace.as_ref().map(|rows| {
            rows.iter()
                .map(|r| {
                    // For safety, the roles of the lower and upper sequences swap.
                    let (lower, upper_swept, upper) = if safety {
                        (flip(&r.upper), flip(&r.upper_swept), flip(&r.lower))
                    } else {
                        (r.lower.clone(), r.upper_swept.clone(), r.upper.clone())
                    };
                    TraceRow { iteration: r.iteration, lower, upper_swept, upper }
                })
                .collect()
        });
        SolveReport {
            version: env!("CARGO_PKG_VERSION"),
            method,
            objective: if safety { "safety" } else { "reach" },
            epsilon: Num17(epsilon),
            states,
            iterations: result.iterations,
            termination: result.termination,
            strategies: Strategies {
                reach: strategy_map(game, &result.reach_strategy),
                safe: strategy_map(game, &result.safe_strategy),
            },
            mecs: result.mecs.components.iter().map(|c| names(game, &c.states)).collect(),
            winning_region: names(game, &result.winning),
            config,
            trace,
            diagnostics: result.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalyzeReport {
    pub mecs: Vec<Vec<String>>,
    pub winning_region: Vec<String>,
    /// Per state of some end component: its `[reach move, safe move]` pairs.
    pub stay_pairs: Ordered<Vec<[String; 2]>>,
}

impl AnalyzeReport {
    pub fn new(game: &Game, mecs: &MecDecomposition, winning: &StateSet) -> Self {
        let mut pairs: BTreeMap<usize, Vec<[String; 2]>> = BTreeMap::new();
        for c in &mecs.components {
            for (&s, list) in &c.stay_pairs {
                pairs.insert(
                    s,
                    list.iter()
                        .map(|&(a, b)| {
                            [game.moves(Player::Reach, s)[a].clone(), game.moves(Player::Safe, s)[b].clone()]
                        })
                        .collect(),
                );
            }
        }
        AnalyzeReport {
            mecs: mecs.components.iter().map(|c| names(game, &c.states)).collect(),
            winning_region: names(game, winning),
            stay_pairs: Ordered(pairs.into_iter().map(|(s, v)| (game.state_name(s).to_string(), v)).collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct McRow {
    pub estimate: Num17,
    pub half_width: Num17,
    pub samples: u64,
    pub hits: u64,
    pub truncated: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluateReport {
    pub exact: Ordered<Num17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<Ordered<McRow>>,
}

impl EvaluateReport {
    pub fn new(game: &Game, exact: &Valuation, monte_carlo: Option<Vec<(usize, McEstimate)>>) -> Self {
        let exact = Ordered((0..game.num_states()).map(|s| (game.state_name(s).to_string(), Num17(exact[s]))).collect());
        let monte_carlo = monte_carlo.map(|rows| {
            Ordered(
                rows.into_iter()
                    .map(|(s, e)| {
                        let row = McRow {
                            estimate: Num17(e.estimate),
                            half_width: Num17(e.half_width),
                            samples: e.samples,
                            hits: e.hits,
                            truncated: e.truncated,
                        };
                        (game.state_name(s).to_string(), row)
                    })
                    .collect(),
            )
        });
        EvaluateReport { exact, monte_carlo }
    }
}

/// The `strategies` object of a solve report. States may be omitted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategiesFile {
    #[serde(default)]
    pub reach: BTreeMap<String, BTreeMap<String, Probability>>,
    #[serde(default)]
    pub safe: BTreeMap<String, BTreeMap<String, Probability>>,
}

impl StrategiesFile {
    pub fn apply(&self, game: &Game, sigma: &mut MixedStrategy, tau: &mut MixedStrategy) -> Result<(), String> {
        for (player, table, strategy) in [(Player::Reach, &self.reach, sigma), (Player::Safe, &self.safe, tau)] {
            for (state, dist) in table {
                let s = game.state_index(state).ok_or_else(|| format!("strategy names unknown state {state:?}"))?;
                let mut probs = vec![0.0; game.num_moves(player, s)];
                for (mv, p) in dist {
                    let a = game
                        .move_index(player, s, mv)
                        .ok_or_else(|| format!("move {mv:?} is not available at state {state:?}"))?;
                    probs[a] = p.to_f64().ok_or_else(|| format!("bad probability at state {state:?}, move {mv:?}"))?;
                }
                strategy.set(game, s, probs).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt() - 1.0, 1e-20, -2.5e30, 123456.0, 1.0, 0.0, 1e16, 1e17, 0.0001] {
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
    }
}
