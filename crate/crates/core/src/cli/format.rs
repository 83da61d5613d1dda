//! JSON game files.
//!
//! ```json
//! {
//!   "states": ["s0", "s1"],
//!   "moves1": {"s0": ["a"], "s1": ["_"]},
//!   "moves2": {"s0": ["_"], "s1": ["_"]},
//!   "transitions": [
//!     {"from": "s0", "m1": "a", "m2": "_", "to": {"s0": "1/2", "s1": 0.5}},
//!     {"from": "s1", "m1": "_", "m2": "_", "to": {"s1": 1}}
//!   ],
//!   "target": ["s1"],
//!   "init": "s0"
//! }
//! ```
//!
//! Probabilities are JSON numbers, decimal strings or exact `"p/q"` strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::game::{GameDef, TransitionDef};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown key '{key}' in {context}")]
    UnknownKey { key: String, context: String },
    #[error("bad probability {text:?} in transition from '{from}'")]
    Probability { text: String, from: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probability {
    Number(f64),
    Text(String),
}

impl Probability {
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Probability::Number(x) => Some(*x),
            Probability::Text(t) => parse_probability(t),
        }
    }
}

/// Parses `"p/q"` with integer `p`, `q` or a plain decimal.
pub fn parse_probability(text: &str) -> Option<f64> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p: u64 = p.trim().parse().ok()?;
            let q: u64 = q.trim().parse().ok()?;
            (q != 0).then(|| p as f64 / q as f64)
        }
        None => text.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionFile {
    pub from: String,
    pub m1: String,
    pub m2: String,
    pub to: BTreeMap<String, Probability>,
}

/// Serialized form of a [`GameDef`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub states: Vec<String>,
    pub moves1: BTreeMap<String, Vec<String>>,
    pub moves2: BTreeMap<String, Vec<String>>,
    pub transitions: Vec<TransitionFile>,
    pub target: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
}

const TOP_KEYS: &[&str] = &["states", "moves1", "moves2", "transitions", "target", "init"];
const TRANSITION_KEYS: &[&str] = &["from", "m1", "m2", "to"];

fn check_keys(value: &Value) -> Result<(), FormatError> {
    let unknown = |obj: &serde_json::Map<String, Value>, allowed: &[&str], context: &str| {
        obj.keys()
            .find(|k| !allowed.contains(&k.as_str()))
            .map(|k| FormatError::UnknownKey { key: k.clone(), context: context.into() })
    };
    if let Some(obj) = value.as_object() {
        if let Some(e) = unknown(obj, TOP_KEYS, "game") {
            return Err(e);
        }
        for t in obj.get("transitions").and_then(Value::as_array).into_iter().flatten() {
            if let Some(e) = t.as_object().and_then(|o| unknown(o, TRANSITION_KEYS, "transition")) {
                return Err(e);
            }
        }
    }
    Ok(())
}

/// Parses a game file. `strict` rejects unknown keys. Semantic problems are
/// left to [`crate::validate_game`].
pub fn parse_game(src: &str, strict: bool) -> Result<GameDef, FormatError> {
    let value: Value = serde_json::from_str(src)?;
    if strict {
        check_keys(&value)?;
    }
    let file: GameFile = serde_json::from_value(value)?;
    file.into_def()
}

impl GameFile {
    pub fn into_def(self) -> Result<GameDef, FormatError> {
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for t in self.transitions {
            let mut to = Vec::with_capacity(t.to.len());
            for (state, p) in t.to {
                let x = p.to_f64().ok_or_else(|| FormatError::Probability {
                    text: match &p {
                        Probability::Number(x) => x.to_string(),
                        Probability::Text(s) => s.clone(),
                    },
                    from: t.from.clone(),
                })?;
                to.push((state, x));
            }
            transitions.push(TransitionDef { from: t.from, m1: t.m1, m2: t.m2, to });
        }
        Ok(GameDef {
            states: self.states,
            moves1: self.moves1,
            moves2: self.moves2,
            transitions,
            target: self.target,
            init: self.init,
        })
    }

    pub fn from_def(def: &GameDef) -> GameFile {
        GameFile {
            states: def.states.clone(),
            moves1: def.moves1.clone(),
            moves2: def.moves2.clone(),
            transitions: def
                .transitions
                .iter()
                .map(|t| TransitionFile {
                    from: t.from.clone(),
                    m1: t.m1.clone(),
                    m2: t.m2.clone(),
                    to: t.to.iter().map(|(s, p)| (s.clone(), Probability::Number(*p))).collect(),
                })
                .collect(),
            target: def.target.clone(),
            init: def.init.clone(),
        }
    }
}

/// Pretty-printed game file.
pub fn game_to_json(def: &GameDef) -> String {
    serde_json::to_string_pretty(&GameFile::from_def(def)).expect("game files always serialize")
}
