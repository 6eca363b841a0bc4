//! The grid-world Environment.

mod command;
pub mod search;

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use command::{parse_command, EnvCommand, EnvResponse, Sight};
pub use search::{plan_pattern, reachable, shortest_path_to};

pub const DEFAULT_SIZE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("world literal: {0}")]
    Literal(String),
    #[error("world generation: {0}")]
    Generate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Apple,
    Pear,
    Banana,
    Mug,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] = [ObjectKind::Apple, ObjectKind::Pear, ObjectKind::Banana, ObjectKind::Mug];

    pub fn word(self) -> &'static str {
        match self {
            ObjectKind::Apple => "apple",
            ObjectKind::Pear => "pear",
            ObjectKind::Banana => "banana",
            ObjectKind::Mug => "mug",
        }
    }

    pub fn from_word(word: &str) -> Option<ObjectKind> {
        Self::ALL.into_iter().find(|o| o.word() == word)
    }

    /// "a" or "an" by the initial-vowel rule.
    pub fn article(self) -> &'static str {
        if self.word().starts_with(['a', 'e', 'i', 'o', 'u']) {
            "an"
        } else {
            "a"
        }
    }

    pub fn glyph(self) -> char {
        match self {
            ObjectKind::Apple => 'a',
            ObjectKind::Pear => 'p',
            ObjectKind::Banana => 'b',
            ObjectKind::Mug => 'm',
        }
    }

    pub fn from_glyph(c: char) -> Option<ObjectKind> {
        Self::ALL.into_iter().find(|o| o.glyph() == c)
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terrain {
    Grass,
    Wall,
    Water,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn right(self) -> Heading {
        self.left().left().left()
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    fn glyph(self) -> char {
        match self {
            Heading::North => '^',
            Heading::East => '>',
            Heading::South => 'v',
            Heading::West => '<',
        }
    }

    fn from_glyph(c: char) -> Option<Heading> {
        Self::ALL.into_iter().find(|h| h.glyph() == c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    width: usize,
    height: usize,
    terrain: Vec<Terrain>,
    objects: Vec<Option<ObjectKind>>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Grid {
            width,
            height,
            terrain: vec![Terrain::Grass; width * height],
            objects: vec![None; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn idx(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Neighbour of `c` along `h`, or `None` when it falls off the grid.
    pub fn step(&self, c: Cell, h: Heading) -> Option<Cell> {
        let (dx, dy) = h.delta();
        let x = c.x as i64 + dx;
        let y = c.y as i64 + dy;
        if x < 0 || y < 0 {
            return None;
        }
        let n = Cell::new(x as usize, y as usize);
        self.in_bounds(n).then_some(n)
    }

    pub fn terrain(&self, c: Cell) -> Terrain {
        self.terrain[self.idx(c)]
    }

    pub fn set_terrain(&mut self, c: Cell, t: Terrain) {
        let i = self.idx(c);
        self.terrain[i] = t;
    }

    pub fn object(&self, c: Cell) -> Option<ObjectKind> {
        self.objects[self.idx(c)]
    }

    pub fn set_object(&mut self, c: Cell, o: Option<ObjectKind>) {
        let i = self.idx(c);
        self.objects[i] = o;
    }

    /// Grass without an object.
    pub fn walkable(&self, c: Cell) -> bool {
        self.terrain(c) == Terrain::Grass && self.object(c).is_none()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    pub fn object_count(&self) -> usize {
        self.objects.iter().filter(|o| o.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LearnerBody {
    pub position: Cell,
    pub heading: Heading,
    pub inventory: BTreeMap<ObjectKind, u32>,
}

impl LearnerBody {
    pub fn new(position: Cell, heading: Heading) -> Self {
        LearnerBody { position, heading, inventory: BTreeMap::new() }
    }

    pub fn holding(&self, o: ObjectKind) -> u32 {
        self.inventory.get(&o).copied().unwrap_or(0)
    }

    pub fn holding_total(&self) -> u32 {
        self.inventory.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct World {
    pub grid: Grid,
    pub body: LearnerBody,
    /// When false, Look is answered with silence.
    pub look_enabled: bool,
    /// Report sightings as "there is an X." instead of "you see an X."
    pub legacy_look: bool,
}

impl World {
    pub fn new(grid: Grid, body: LearnerBody) -> Result<Self, WorldError> {
        if !grid.in_bounds(body.position) || !grid.walkable(body.position) {
            return Err(WorldError::Literal("learner must stand on an empty grass cell".into()));
        }
        Ok(World { grid, body, look_enabled: true, legacy_look: false })
    }

    /// Parse the literal format: `grid W H` followed by `H` rows of `W` glyphs.
    pub fn from_literal(text: &str) -> Result<Self, WorldError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| WorldError::Literal("missing `grid W H` header".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 3 || dims[0] != "grid" {
            return Err(WorldError::Literal(format!("bad header {header:?}")));
        }
        let parse_dim = |s: &str| s.parse::<usize>().ok().filter(|n| *n > 0);
        let (w, h) = match (parse_dim(dims[1]), parse_dim(dims[2])) {
            (Some(w), Some(h)) => (w, h),
            _ => return Err(WorldError::Literal(format!("bad dimensions in {header:?}"))),
        };
        let rows: Vec<&str> = lines.collect();
        Self::from_rows(w, h, &rows)
    }

    pub fn from_rows(w: usize, h: usize, rows: &[&str]) -> Result<Self, WorldError> {
        if rows.len() != h {
            return Err(WorldError::Literal(format!("expected {h} rows, found {}", rows.len())));
        }
        let mut grid = Grid::new(w, h);
        let mut learner = None;
        for (y, row) in rows.iter().enumerate() {
            let glyphs: Vec<char> = row.chars().collect();
            if glyphs.len() != w {
                return Err(WorldError::Literal(format!("row {y} has {} cells, expected {w}", glyphs.len())));
            }
            for (x, g) in glyphs.into_iter().enumerate() {
                let c = Cell::new(x, y);
                match g {
                    '.' => {}
                    '#' => grid.set_terrain(c, Terrain::Wall),
                    '~' => grid.set_terrain(c, Terrain::Water),
                    _ => {
                        if let Some(o) = ObjectKind::from_glyph(g) {
                            grid.set_object(c, Some(o));
                        } else if let Some(hd) = Heading::from_glyph(g) {
                            if learner.replace(LearnerBody::new(c, hd)).is_some() {
                                return Err(WorldError::Literal("more than one learner start".into()));
                            }
                        } else {
                            return Err(WorldError::Literal(format!("unknown glyph {g:?} at ({x},{y})")));
                        }
                    }
                }
            }
        }
        let body = learner.ok_or_else(|| WorldError::Literal("no learner start pose".into()))?;
        World::new(grid, body)
    }

    pub fn to_literal(&self) -> String {
        let mut out = format!("grid {} {}\n", self.grid.width, self.grid.height);
        for row in self.rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    fn rows(&self) -> Vec<String> {
        (0..self.grid.height)
            .map(|y| {
                (0..self.grid.width)
                    .map(|x| {
                        let c = Cell::new(x, y);
                        if c == self.body.position {
                            return self.body.heading.glyph();
                        }
                        if let Some(o) = self.grid.object(c) {
                            return o.glyph();
                        }
                        match self.grid.terrain(c) {
                            Terrain::Grass => '.',
                            Terrain::Wall => '#',
                            Terrain::Water => '~',
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn faced_cell(&self) -> Option<Cell> {
        self.grid.step(self.body.position, self.body.heading)
    }

    pub fn faced_object(&self) -> Option<ObjectKind> {
        self.faced_cell().and_then(|c| self.grid.object(c))
    }

    /// What Look would report, ignoring darkness.
    pub fn sight(&self) -> Sight {
        match self.faced_cell() {
            None => Sight::Wall,
            Some(c) => match (self.grid.object(c), self.grid.terrain(c)) {
                (Some(o), _) => Sight::Object(o),
                (None, Terrain::Grass) => Sight::Grass,
                (None, Terrain::Wall) => Sight::Wall,
                (None, Terrain::Water) => Sight::Water,
            },
        }
    }

    /// Objects on the grid plus objects carried.
    pub fn total_objects(&self) -> usize {
        self.grid.object_count() + self.body.holding_total() as usize
    }

    /// Run one command in place and return the response.
    pub fn apply(&mut self, cmd: &EnvCommand) -> EnvResponse {
        match cmd {
            EnvCommand::Move => match self.faced_cell() {
                Some(c) if self.grid.walkable(c) => {
                    self.body.position = c;
                    EnvResponse::Moved
                }
                _ => EnvResponse::CantMove,
            },
            EnvCommand::TurnLeft => {
                self.body.heading = self.body.heading.left();
                EnvResponse::TurnedLeft
            }
            EnvCommand::TurnRight => {
                self.body.heading = self.body.heading.right();
                EnvResponse::TurnedRight
            }
            EnvCommand::Look => {
                if !self.look_enabled {
                    return EnvResponse::Silence;
                }
                match self.sight() {
                    Sight::Object(o) if self.legacy_look => EnvResponse::ThereIs(o),
                    s => EnvResponse::See(s),
                }
            }
            EnvCommand::Pick(o) => match self.faced_cell() {
                Some(c) if self.grid.object(c) == Some(*o) => {
                    self.grid.set_object(c, None);
                    *self.body.inventory.entry(*o).or_insert(0) += 1;
                    EnvResponse::Picked(*o)
                }
                _ => EnvResponse::Silence,
            },
            EnvCommand::Underspecified(_) | EnvCommand::Unknown(_) => EnvResponse::Silence,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.body.position,
            heading: self.body.heading,
            faced: self.faced_object(),
            inventory: self.body.inventory.clone(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let faced = match self.faced_cell() {
            None => Faced::OutOfBounds,
            Some(c) => Faced::Cell { x: c.x, y: c.y, sight: self.sight() },
        };
        let mut rows = self.rows();
        // the learner glyph hides what is under it; it always stands on grass
        let p = self.body.position;
        rows[p.y].replace_range(p.x..p.x + 1, ".");
        Snapshot {
            width: self.grid.width,
            height: self.grid.height,
            rows,
            learner: SnapshotPose { x: p.x, y: p.y, heading: self.body.heading },
            faced,
            inventory: self.body.inventory.iter().map(|(k, v)| (k.word().to_string(), *v)).collect(),
        }
    }
}

/// Execute `cmd` on a copy of `world`.
pub fn execute(cmd: &EnvCommand, world: &World) -> (World, EnvResponse) {
    let mut next = world.clone();
    let resp = next.apply(cmd);
    (next, resp)
}

/// Learner state recorded after each Environment command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Cell,
    pub heading: Heading,
    pub faced: Option<ObjectKind>,
    pub inventory: BTreeMap<ObjectKind, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotPose {
    pub x: usize,
    pub y: usize,
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Faced {
    OutOfBounds,
    Cell { x: usize, y: usize, sight: Sight },
}

/// Structured grid description for renderers and hashing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub width: usize,
    pub height: usize,
    /// Terrain and objects, one string per row, using the literal glyphs.
    pub rows: Vec<String>,
    pub learner: SnapshotPose,
    pub faced: Faced,
    pub inventory: BTreeMap<String, u32>,
}

impl Snapshot {
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("snapshot serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Parameters for random world generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub width: usize,
    pub height: usize,
    pub walls: usize,
    pub water: usize,
    /// Objects dropped on random free cells.
    pub place: Vec<ObjectKind>,
    /// An object straight ahead at a distance in the inclusive range, with grass in between.
    pub ahead: Option<(ObjectKind, usize, usize)>,
    /// Number of free cells guaranteed straight ahead of the learner.
    pub clear: usize,
    /// Free cells guaranteed to the learner's right (for turn-and-move tasks).
    pub clear_side: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            walls: 0,
            water: 0,
            place: Vec::new(),
            ahead: None,
            clear: 0,
            clear_side: 0,
        }
    }
}

impl World {
    /// One random draw; callers retry when the result fails their checks.
    pub fn generate<R: Rng>(spec: &GenSpec, rng: &mut R) -> Result<World, WorldError> {
        let (w, h) = (spec.width, spec.height);
        if w == 0 || h == 0 {
            return Err(WorldError::Generate("empty grid".into()));
        }
        let dist = spec.ahead.map(|(_, min, max)| rng.gen_range(min.max(1)..=max.max(min.max(1))));
        let mut grid = Grid::new(w, h);
        let start = Cell::new(rng.gen_range(0..w), rng.gen_range(0..h));
        let heading = *Heading::ALL.choose(rng).expect("four headings");
        let mut reserved = vec![start];
        let mut cur = start;
        let need = dist.unwrap_or(0).max(spec.clear);
        for i in 1..=need {
            cur = grid
                .step(cur, heading)
                .ok_or_else(|| WorldError::Generate("no room ahead of the learner".into()))?;
            if let (Some(d), Some((obj, _, _))) = (dist, spec.ahead) {
                if i == d {
                    grid.set_object(cur, Some(obj));
                }
            }
            reserved.push(cur);
        }
        let mut side = start;
        for _ in 0..spec.clear_side {
            side = grid
                .step(side, heading.right())
                .ok_or_else(|| WorldError::Generate("no room beside the learner".into()))?;
            reserved.push(side);
        }
        let mut free: Vec<Cell> = grid.cells().filter(|c| !reserved.contains(c)).collect();
        free.shuffle(rng);
        let needed = spec.walls + spec.water + spec.place.len();
        if free.len() < needed {
            return Err(WorldError::Generate(format!("{needed} cells requested, {} free", free.len())));
        }
        let mut it = free.into_iter();
        for _ in 0..spec.walls {
            grid.set_terrain(it.next().expect("counted"), Terrain::Wall);
        }
        for _ in 0..spec.water {
            grid.set_terrain(it.next().expect("counted"), Terrain::Water);
        }
        for obj in &spec.place {
            grid.set_object(it.next().expect("counted"), Some(*obj));
        }
        World::new(grid, LearnerBody::new(start, heading)).map_err(|e| WorldError::Generate(e.to_string()))
    }
}
