use std::fmt;
use std::str::FromStr;

use super::{check_discrete, Action, ActionSpace, Env, EnvSpec, StepResult};
use crate::error::{Error, Result};
use crate::FeatureVector;

const MAX_STEPS: usize = 100;

/// Rows of the default 7x7 layout, top to bottom.
pub const DEFAULT_GRID_MAP: &str = "S....H./.H..P../..P.H../.H...P./...H.../.P...H./.....PG";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cell {
    Empty,
    Goal,
    Hazard,
    Pellet,
}

/// Grid layout: `S` start, `G` goal, `H` hazard, `P` pellet, `.` empty.
///
/// Textual form lists rows separated by `/` (newlines are accepted too).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    start: usize,
}

impl GridMap {
    pub fn default_map() -> Self {
        DEFAULT_GRID_MAP.parse().expect("default map is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn pellet_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| self.cells[i] == Cell::Pellet).collect()
    }
}

impl FromStr for GridMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::config("grid.map", msg);
        let rows: Vec<&str> = s
            .split(['/', '\n'])
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if height == 0 || width == 0 {
            return Err(bad("map is empty".into()));
        }
        let mut cells = Vec::with_capacity(width * height);
        let mut start = None;
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(bad(format!("row {r} has {} cells, expected {width}", row.chars().count())));
            }
            for ch in row.chars() {
                let cell = match ch {
                    '.' => Cell::Empty,
                    'S' => {
                        if start.replace(cells.len()).is_some() {
                            return Err(bad("more than one start cell".into()));
                        }
                        Cell::Empty
                    }
                    'G' => Cell::Goal,
                    'H' => Cell::Hazard,
                    'P' => Cell::Pellet,
                    other => return Err(bad(format!("unknown cell {other:?}"))),
                };
                cells.push(cell);
            }
        }
        let start = start.ok_or_else(|| bad("no start cell".into()))?;
        if !cells.contains(&Cell::Goal) {
            return Err(bad("no goal cell".into()));
        }
        Ok(GridMap {
            width,
            height,
            cells,
            start,
        })
    }
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.cells.chunks(self.width).enumerate() {
            if r > 0 {
                f.write_str("/")?;
            }
            for (c, cell) in row.iter().enumerate() {
                let ch = if r * self.width + c == self.start {
                    'S'
                } else {
                    match cell {
                        Cell::Empty => '.',
                        Cell::Goal => 'G',
                        Cell::Hazard => 'H',
                        Cell::Pellet => 'P',
                    }
                };
                write!(f, "{ch}")?;
            }
        }
        Ok(())
    }
}

/// Gridworld with an absorbing goal, hazards and one-shot pellets.
///
/// Actions are N, E, S, W; moves off the grid leave the agent in place.
/// Features are `(goal, pellet, hazard, step)` = `(+1 on reaching the
/// goal, +1 per pellet, -1 on entering a hazard, -1 every step)`.
/// Observations are the one-hot position followed by the remaining-pellet
/// bitmap.
#[derive(Clone, Debug)]
pub struct GridCollect {
    map: GridMap,
    pellets: Vec<usize>,
    spec: EnvSpec,
    pos: usize,
    remaining: Vec<bool>,
    t: usize,
    done: bool,
}

impl GridCollect {
    pub fn new(map: GridMap) -> Self {
        let pellets = map.pellet_cells();
        let spec = EnvSpec {
            obs_dim: map.cells.len() + pellets.len(),
            feature_names: vec!["goal".into(), "pellet".into(), "hazard".into(), "time".into()],
            action_space: ActionSpace::Discrete(4),
            max_episode_steps: MAX_STEPS,
        };
        GridCollect {
            pos: map.start,
            remaining: vec![true; pellets.len()],
            map,
            pellets,
            spec,
            t: 0,
            done: false,
        }
    }

    pub fn position(&self) -> (usize, usize) {
        (self.pos / self.map.width, self.pos % self.map.width)
    }

    fn observation(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.spec.obs_dim];
        obs[self.pos] = 1.0;
        let base = self.map.cells.len();
        for (i, left) in self.remaining.iter().enumerate() {
            if *left {
                obs[base + i] = 1.0;
            }
        }
        obs
    }

    fn target(&self, action: usize) -> usize {
        let (r, c) = self.position();
        let (w, h) = (self.map.width, self.map.height);
        let (r, c) = match action {
            0 if r > 0 => (r - 1, c),
            1 if c + 1 < w => (r, c + 1),
            2 if r + 1 < h => (r + 1, c),
            3 if c > 0 => (r, c - 1),
            _ => (r, c),
        };
        r * w + c
    }
}

impl Env for GridCollect {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.pos = self.map.start;
        self.remaining.fill(true);
        self.t = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeOver);
        }
        let a = check_discrete(action, 4)?;
        let next = self.target(a);
        let mut phi = [0.0, 0.0, 0.0, -1.0];
        let moved = next != self.pos;
        match self.map.cells[next] {
            Cell::Goal => phi[0] = 1.0,
            Cell::Hazard if moved => phi[2] = -1.0,
            Cell::Pellet => {
                let slot = self.pellets.iter().position(|&p| p == next).expect("pellet cell is indexed");
                if self.remaining[slot] {
                    self.remaining[slot] = false;
                    phi[1] = 1.0;
                }
            }
            _ => {}
        }
        self.pos = next;
        self.t += 1;
        let terminated = self.map.cells[next] == Cell::Goal;
        let truncated = !terminated && self.t >= MAX_STEPS;
        self.done = terminated || truncated;
        Ok(StepResult {
            observation: self.observation(),
            features: FeatureVector(phi.to_vec()),
            terminated,
            truncated,
            clamped: false,
        })
    }
}
