//! Built-in games. The payoff numbers are fixture constants picked to give
//! each game its usual ordinal structure.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::io::load_game_path;

/// Directory searched for `<name>.json` when a game name is neither a file
/// nor a built-in.
pub const CATALOG_DIR_ENV: &str = "INCENTIVE_CATALOG_DIR";

pub const BUILTIN_NAMES: [&str; 6] = [
    "prisoners_dilemma",
    "matching_pennies",
    "rock_paper_scissors",
    "coordination_2x2",
    "travelers_dilemma_small",
    "three_player_majority",
];

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn two_player(row: [&[f64]; 2], col: [&[f64]; 2], names: &[&str]) -> Game {
    let a: Vec<Vec<f64>> = row.iter().map(|r| r.to_vec()).collect();
    let b: Vec<Vec<f64>> = col.iter().map(|r| r.to_vec()).collect();
    Game::bimatrix(&a, &b)
        .and_then(|g| g.with_labels(vec![labels(names), labels(names)]))
        .expect("fixture shapes are consistent")
}

/// T = 5, R = 3, P = 1, S = 0; strategy 0 cooperates.
pub fn prisoners_dilemma() -> Game {
    two_player([&[3.0, 0.0], &[5.0, 1.0]], [&[3.0, 5.0], &[0.0, 1.0]], &["C", "D"])
}

/// Player 0 wins 1 on a match, player 1 on a mismatch.
pub fn matching_pennies() -> Game {
    two_player([&[1.0, -1.0], &[-1.0, 1.0]], [&[-1.0, 1.0], &[1.0, -1.0]], &["H", "T"])
}

pub fn rock_paper_scissors() -> Game {
    let beats = |a: usize, b: usize| (a + 3 - b) % 3 == 1;
    Game::from_fn(vec![3, 3], |i, p| {
        let (me, other) = if i == 0 { (p[0], p[1]) } else { (p[1], p[0]) };
        if beats(me, other) {
            1.0
        } else if beats(other, me) {
            -1.0
        } else {
            0.0
        }
    })
    .and_then(|g| g.with_labels(vec![labels(&["R", "P", "S"]); 2]))
    .expect("fixture shapes are consistent")
}

/// Both players get 2 on (A, A), 1 on (B, B) and 0 otherwise.
pub fn coordination_2x2() -> Game {
    two_player([&[2.0, 0.0], &[0.0, 1.0]], [&[2.0, 0.0], &[0.0, 1.0]], &["A", "B"])
}

/// Claims 2 to 5. Equal claims are paid out; otherwise both receive the
/// lower claim, plus 2 for the lower claimant and minus 2 for the other.
pub fn travelers_dilemma_small() -> Game {
    const BONUS: f64 = 2.0;
    let claim = |a: usize| (a + 2) as f64;
    Game::from_fn(vec![4, 4], |i, p| {
        let (me, other) = if i == 0 { (claim(p[0]), claim(p[1])) } else { (claim(p[1]), claim(p[0])) };
        if me == other {
            me
        } else if me < other {
            me + BONUS
        } else {
            other - BONUS
        }
    })
    .and_then(|g| g.with_labels(vec![labels(&["2", "3", "4", "5"]); 2]))
    .expect("fixture shapes are consistent")
}

/// Three players pick L or R; a player earns 1 when at least one other
/// player makes the same choice.
pub fn three_player_majority() -> Game {
    Game::from_fn(vec![2, 2, 2], |i, p| {
        let agree = p.iter().filter(|&&s| s == p[i]).count();
        if agree >= 2 {
            1.0
        } else {
            0.0
        }
    })
    .and_then(|g| g.with_labels(vec![labels(&["L", "R"]); 3]))
    .expect("fixture shapes are consistent")
}

fn canonical(name: &str) -> Option<&'static str> {
    let n = name.to_ascii_lowercase().replace('-', "_");
    Some(match n.as_str() {
        "prisoners_dilemma" | "pd" => "prisoners_dilemma",
        "matching_pennies" | "mp" => "matching_pennies",
        "rock_paper_scissors" | "rps" => "rock_paper_scissors",
        "coordination_2x2" | "coordination" => "coordination_2x2",
        "travelers_dilemma_small" | "travelers_dilemma" | "td" => "travelers_dilemma_small",
        "three_player_majority" | "majority" => "three_player_majority",
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Option<Game> {
    Some(match canonical(name)? {
        "prisoners_dilemma" => prisoners_dilemma(),
        "matching_pennies" => matching_pennies(),
        "rock_paper_scissors" => rock_paper_scissors(),
        "coordination_2x2" => coordination_2x2(),
        "travelers_dilemma_small" => travelers_dilemma_small(),
        _ => three_player_majority(),
    })
}

pub fn builtin_catalog() -> Vec<(&'static str, Game)> {
    BUILTIN_NAMES
        .iter()
        .map(|&n| (n, builtin(n).expect("every listed name resolves")))
        .collect()
}

/// Resolves a game argument: `-` or an existing path is read as a game
/// file, then built-in names and aliases are tried, then
/// `$INCENTIVE_CATALOG_DIR/<name>.json`.
pub fn resolve_game(arg: &str) -> Result<Game> {
    let path = Path::new(arg);
    if arg == "-" || path.is_file() {
        return load_game_path(path);
    }
    if let Some(g) = builtin(arg) {
        return Ok(g);
    }
    if let Some(dir) = std::env::var_os(CATALOG_DIR_ENV) {
        let candidate = PathBuf::from(dir).join(format!("{arg}.json"));
        if candidate.is_file() {
            return load_game_path(&candidate);
        }
    }
    Err(Error::Config(format!(
        "`{arg}` is neither a game file nor a catalog game ({})",
        BUILTIN_NAMES.join(", ")
    )))
}
