//! Game files, profile literals and run manifests.
//!
//! A game file is a JSON document:
//!
//! ```json
//! {"version": 1, "players": 2, "strategies": [["C", "D"], 2],
//!  "payoffs": [[[3, 0], [5, 1]], [[3, 5], [0, 1]]]}
//! ```
//!
//! `strategies` lists either a count or the labels for each player.
//! `payoffs[i]` is player `i`'s tensor nested in player order, so the last
//! player's index is innermost.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::game::{Game, Profile};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySet {
    Count(usize),
    Labels(Vec<String>),
}

impl StrategySet {
    pub fn len(&self) -> usize {
        match self {
            StrategySet::Count(n) => *n,
            StrategySet::Labels(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub version: u32,
    pub players: usize,
    pub strategies: Vec<StrategySet>,
    pub payoffs: Vec<Value>,
}

impl GameFile {
    pub fn from_game(game: &Game) -> Self {
        let strategies = match game.labels() {
            Some(labels) => labels.iter().cloned().map(StrategySet::Labels).collect(),
            None => game
                .strategy_counts()
                .iter()
                .map(|&s| StrategySet::Count(s))
                .collect(),
        };
        let payoffs = (0..game.n_players())
            .map(|i| nest(game.payoffs(i), game.strategy_counts()))
            .collect();
        GameFile {
            version: FORMAT_VERSION,
            players: game.n_players(),
            strategies,
            payoffs,
        }
    }

    pub fn to_game(&self) -> Result<Game> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported game file version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        if self.strategies.len() != self.players || self.payoffs.len() != self.players {
            return Err(Error::Parse(format!(
                "{} players declared but {} strategy sets and {} payoff tensors given",
                self.players,
                self.strategies.len(),
                self.payoffs.len()
            )));
        }
        let counts: Vec<usize> = self.strategies.iter().map(StrategySet::len).collect();
        let mut tensors = Vec::with_capacity(self.players);
        for (i, nested) in self.payoffs.iter().enumerate() {
            let mut flat = Vec::with_capacity(counts.iter().product());
            flatten(nested, &counts, i, &mut Vec::new(), &mut flat)?;
            tensors.push(flat);
        }
        let game = Game::new(counts, tensors)?;
        if self
            .strategies
            .iter()
            .any(|s| matches!(s, StrategySet::Labels(_)))
        {
            let labels = self
                .strategies
                .iter()
                .map(|s| match s {
                    StrategySet::Labels(l) => l.clone(),
                    StrategySet::Count(n) => (0..*n).map(|a| a.to_string()).collect(),
                })
                .collect();
            return game.with_labels(labels);
        }
        Ok(game)
    }
}

fn nest(flat: &[f64], counts: &[usize]) -> Value {
    match counts.split_first() {
        None => Value::from(flat[0]),
        Some((&s, rest)) => {
            let block: usize = rest.iter().product();
            Value::Array(
                (0..s)
                    .map(|a| nest(&flat[a * block..(a + 1) * block], rest))
                    .collect(),
            )
        }
    }
}

fn flatten(
    v: &Value,
    counts: &[usize],
    player: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<f64>,
) -> Result<()> {
    let depth = path.len();
    if depth == counts.len() {
        return match v.as_f64() {
            Some(x) if x.is_finite() => {
                out.push(x);
                Ok(())
            }
            _ => Err(Error::Parse(format!(
                "player {player} payoff at index {path:?} is not a finite number: {v}"
            ))),
        };
    }
    let Some(items) = v.as_array() else {
        return Err(Error::Parse(format!(
            "player {player} payoffs at index {path:?} should be an array of {} entries",
            counts[depth]
        )));
    };
    if items.len() != counts[depth] {
        return Err(Error::Parse(format!(
            "player {player} payoffs at index {path:?} have {} entries, expected {} (strategies of player {depth})",
            items.len(),
            counts[depth]
        )));
    }
    for (a, item) in items.iter().enumerate() {
        path.push(a);
        flatten(item, counts, player, path, out)?;
        path.pop();
    }
    Ok(())
}

pub fn load_game_str(text: &str) -> Result<Game> {
    let file: GameFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("game file: {e}")))?;
    file.to_game()
}

/// Reads a game file; `-` reads standard input.
pub fn load_game_path(path: &Path) -> Result<Game> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path)?
    };
    load_game_str(&text)
}

pub fn save_game(game: &Game) -> String {
    serde_json::to_string_pretty(&GameFile::from_game(game)).expect("game files serialize")
}

/// Parses `0.5,0.5;1,0`: players separated by `;`, coordinates by `,`.
pub fn parse_profile(text: &str) -> Result<Profile> {
    let parts = text
        .split(';')
        .enumerate()
        .map(|(i, block)| {
            block
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("player {i}: `{}` is not a number", t.trim()))
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Profile::new(parts)
}

pub fn format_profile(x: &Profile) -> String {
    x.parts()
        .iter()
        .map(|xi| xi.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

/// Everything needed to reproduce an output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub game_source: String,
    pub incentive: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(game_source: &str, incentive: &str, config: &impl Serialize, seed: Option<u64>) -> Self {
        RunManifest {
            game_source: game_source.into(),
            incentive: incentive.into(),
            config: serde_json::to_value(config).expect("configs serialize"),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}
