//! A naive grid interpreter written straight from the rules, and an
//! exhaustive comparison against the library's world model.
//!
//! Cell contents are decided lazily: a cell gets a value (branching over
//! every glyph) the first time a command looks at it. Cells never looked at
//! keep a background glyph in both models, so every observationally distinct
//! world up to the size limit is visited exactly once per command sequence.

use kindergarten::world::{parse_command, Cell, Heading, ObjectKind, Terrain, World};

pub const COMMANDS: [&str; 10] = [
    "I move",
    "I turn left",
    "I turn right",
    "I look",
    "I pick the apple",
    "I pick the pear",
    "I pick the banana",
    "I pick the mug",
    "I turn",
    "I jump",
];

const GLYPHS: [char; 7] = ['.', '#', '~', 'a', 'p', 'b', 'm'];
const OBJECTS: [(char, &str, &str); 4] = [('a', "apple", "an"), ('p', "pear", "a"), ('b', "banana", "a"), ('m', "mug", "a")];
const ARROWS: [char; 4] = ['^', '>', 'v', '<'];

#[derive(Clone, Copy, PartialEq)]
pub enum Mode {
    Plain,
    Dark,
    Legacy,
}

#[derive(Clone)]
struct Naive {
    w: i64,
    h: i64,
    cells: Vec<Option<char>>,
    background: char,
    x: i64,
    y: i64,
    /// 0 north, 1 east, 2 south, 3 west
    dir: usize,
    held: [u32; 4],
    mode: Mode,
}

impl Naive {
    fn ahead(&self) -> Option<usize> {
        let (dx, dy) = [(0, -1), (1, 0), (0, 1), (-1, 0)][self.dir];
        let (x, y) = (self.x + dx, self.y + dy);
        (x >= 0 && y >= 0 && x < self.w && y < self.h).then(|| (y * self.w + x) as usize)
    }

    fn looks_ahead(cmd: &str) -> bool {
        cmd == "I move" || cmd == "I look" || cmd.starts_with("I pick the ")
    }

    fn run(&mut self, cmd: &str) -> Option<String> {
        let ahead = match Self::looks_ahead(cmd) {
            true => self.ahead().map(|i| (i, self.cells[i].expect("decided before use"))),
            false => None,
        };
        match cmd {
            "I move" => match ahead {
                Some((i, '.')) => {
                    self.x = i as i64 % self.w;
                    self.y = i as i64 / self.w;
                    Some("you moved".into())
                }
                _ => Some("you can't move".into()),
            },
            "I turn left" => {
                self.dir = (self.dir + 3) % 4;
                Some("you turned left".into())
            }
            "I turn right" => {
                self.dir = (self.dir + 1) % 4;
                Some("you turned right".into())
            }
            "I look" => {
                if self.mode == Mode::Dark {
                    return None;
                }
                Some(match ahead.map(|(_, g)| g) {
                    None | Some('#') => "you see a wall".into(),
                    Some('~') => "you see water".into(),
                    Some('.') => "you see grass".into(),
                    Some(g) => {
                        let (_, word, art) = OBJECTS.iter().find(|o| o.0 == g).unwrap();
                        if self.mode == Mode::Legacy {
                            format!("there is {art} {word}")
                        } else {
                            format!("you see {art} {word}")
                        }
                    }
                })
            }
            _ => {
                let word = cmd.strip_prefix("I pick the ")?;
                let k = OBJECTS.iter().position(|o| o.1 == word)?;
                match ahead {
                    Some((i, g)) if g == OBJECTS[k].0 => {
                        self.cells[i] = Some('.');
                        self.held[k] += 1;
                        Some(format!("you picked the {word}"))
                    }
                    _ => None,
                }
            }
        }
    }

    fn render(&self) -> String {
        let mut out = format!("grid {} {}\n", self.w, self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                if (x, y) == (self.x, self.y) {
                    out.push(ARROWS[self.dir]);
                } else {
                    out.push(self.cells[(y * self.w + x) as usize].unwrap_or(self.background));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn set_cell(world: &mut World, w: i64, i: usize, g: char) {
    let c = Cell::new(i % w as usize, i / w as usize);
    let terrain = match g {
        '#' => Terrain::Wall,
        '~' => Terrain::Water,
        _ => Terrain::Grass,
    };
    world.grid.set_terrain(c, terrain);
    world.grid.set_object(c, ObjectKind::from_glyph(g));
}

fn agree(naive: &Naive, world: &World, got: Option<String>, want: &Option<String>, path: &[&str]) -> Result<(), String> {
    let fail = |what: &str| Err(format!("{path:?}: {what}; ended in\n{}expected\n{}", world.to_literal(), naive.render()));
    if &got != want {
        return fail(&format!("response {got:?}, expected {want:?}"));
    }
    let b = &world.body;
    if (b.position.x as i64, b.position.y as i64) != (naive.x, naive.y) || b.heading != Heading::ALL[naive.dir] {
        return fail("pose differs");
    }
    for (i, g) in naive.cells.iter().enumerate() {
        let g = g.unwrap_or(naive.background);
        if i as i64 == naive.y * naive.w + naive.x {
            continue;
        }
        let c = Cell::new(i % naive.w as usize, i / naive.w as usize);
        let terrain = match g {
            '#' => Terrain::Wall,
            '~' => Terrain::Water,
            _ => Terrain::Grass,
        };
        if world.grid.terrain(c) != terrain || world.grid.object(c) != ObjectKind::from_glyph(g) {
            return fail(&format!("cell ({}, {}) differs", c.x, c.y));
        }
    }
    for (k, (_, word, _)) in OBJECTS.iter().enumerate() {
        let o = ObjectKind::from_word(word).unwrap();
        if b.holding(o) != naive.held[k] {
            return fail(&format!("holding {} {word}, expected {}", b.holding(o), naive.held[k]));
        }
    }
    Ok(())
}

fn explore<'a>(naive: &Naive, world: &World, path: &mut Vec<&'a str>, depth: usize, count: &mut u64) -> Result<(), String> {
    if path.len() == depth {
        return Ok(());
    }
    for cmd in COMMANDS {
        let undecided = Naive::looks_ahead(cmd).then(|| naive.ahead()).flatten().filter(|i| naive.cells[*i].is_none());
        let choices: Vec<Option<char>> = match undecided {
            Some(_) => GLYPHS.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        for g in choices {
            let (mut n, mut w) = (naive.clone(), world.clone());
            if let (Some(i), Some(g)) = (undecided, g) {
                n.cells[i] = Some(g);
                set_cell(&mut w, n.w, i, g);
            }
            path.push(cmd);
            let want = n.run(cmd);
            let got = w.apply(&parse_command(cmd)).text();
            *count += 1;
            agree(&n, &w, got, &want, path)?;
            explore(&n, &w, path, depth, count)?;
            path.pop();
        }
    }
    Ok(())
}

/// Every start pose in a `w`x`h` grid under one look mode and background.
pub fn exhaust_grid(w: usize, h: usize, mode: Mode, background: char, depth: usize) -> Result<u64, String> {
    let mut count = 0;
    for start in 0..w * h {
        for dir in 0..4 {
            let mut cells = vec![None; w * h];
            cells[start] = Some('.');
            let naive = Naive {
                w: w as i64,
                h: h as i64,
                cells,
                background,
                x: (start % w) as i64,
                y: (start / w) as i64,
                dir,
                held: [0; 4],
                mode,
            };
            let rows: Vec<String> = naive.render().lines().skip(1).map(str::to_string).collect();
            let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
            let mut world = World::from_rows(w, h, &rows).map_err(|e| e.to_string())?;
            world.look_enabled = mode != Mode::Dark;
            world.legacy_look = mode == Mode::Legacy;
            debug_assert_eq!(world.body.heading, Heading::ALL[dir]);
            explore(&naive, &world, &mut Vec::new(), depth, &mut count)?;
        }
    }
    Ok(count)
}

/// All grids up to `max`x`max`, all poses and look modes, in parallel. Each
/// mode gets a different background for the cells it never inspects.
pub fn exhaustive(max: usize, depth: usize) -> Result<u64, String> {
    let mut jobs = Vec::new();
    for w in 1..=max {
        for h in 1..=max {
            for (mode, bg) in [(Mode::Plain, '.'), (Mode::Dark, 'a'), (Mode::Legacy, '#')] {
                jobs.push((w, h, mode, bg));
            }
        }
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs.into_iter().map(|(w, h, m, bg)| s.spawn(move || exhaust_grid(w, h, m, bg, depth))).collect();
        handles.into_iter().map(|h| h.join().expect("worker")).sum()
    })
}
