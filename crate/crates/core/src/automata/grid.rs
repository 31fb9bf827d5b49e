use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AutomataError, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Cells beyond the edge count as dead.
    #[default]
    Dead,
    /// Edges wrap around.
    Toroidal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub width: usize,
    pub height: usize,
    /// Row-major cell states.
    pub cells: Vec<u8>,
    pub boundary: Boundary,
}

impl GridState {
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Self {
        GridState {
            width,
            height,
            cells: vec![0; width * height],
            boundary,
        }
    }

    /// Each cell independently alive with probability `density`.
    pub fn random<R: Rng + ?Sized>(width: usize, height: usize, density: f64, boundary: Boundary, rng: &mut R) -> Self {
        let cells = (0..width * height).map(|_| u8::from(rng.gen_bool(density))).collect();
        GridState {
            width,
            height,
            cells,
            boundary,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, state: u8) {
        self.cells[y * self.width + x] = state;
    }

    pub fn live_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn live_fraction(&self) -> f64 {
        self.live_count() as f64 / self.cells.len().max(1) as f64
    }

    /// Index lists of each cell's Moore neighbors under the boundary rule.
    pub fn moore_neighbors(&self) -> Vec<Vec<usize>> {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = Vec::with_capacity(self.cells.len());
        for y in 0..h {
            for x in 0..w {
                let mut list = Vec::with_capacity(8);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x + dx, y + dy);
                        match self.boundary {
                            Boundary::Toroidal => {
                                list.push((ny.rem_euclid(h) * w + nx.rem_euclid(w)) as usize);
                            }
                            Boundary::Dead => {
                                if (0..w).contains(&nx) && (0..h).contains(&ny) {
                                    list.push((ny * w + nx) as usize);
                                }
                            }
                        }
                    }
                }
                out.push(list);
            }
        }
        out
    }

    pub(crate) fn check(&self, states: u8) -> Result<(), AutomataError> {
        if self.width == 0 || self.height == 0 || self.cells.len() != self.width * self.height {
            return Err(AutomataError::EmptyGrid);
        }
        match self.cells.iter().find(|&&c| c >= states) {
            Some(&c) => Err(AutomataError::StateOutOfRange(c, states)),
            None => Ok(()),
        }
    }
}

/// One synchronous update over the Moore 8-neighborhood.
pub fn step_grid(g: &GridState, rule: &RuleSet) -> Result<GridState, AutomataError> {
    let RuleSet::GridTotalistic { born, survive } = rule else {
        return Err(AutomataError::WrongMode("grid-totalistic"));
    };
    rule.validate()?;
    g.check(2)?;
    let mut born_mask = [false; 9];
    let mut survive_mask = [false; 9];
    for &b in born {
        born_mask[b as usize] = true;
    }
    for &s in survive {
        survive_mask[s as usize] = true;
    }
    let (w, h) = (g.width, g.height);
    let toroidal = g.boundary == Boundary::Toroidal;
    let alive = |x: isize, y: isize| -> u8 {
        if toroidal {
            let xx = x.rem_euclid(w as isize) as usize;
            let yy = y.rem_euclid(h as isize) as usize;
            g.cells[yy * w + xx]
        } else if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            g.cells[y as usize * w + x as usize]
        }
    };
    let mut cells = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let n = alive(x - 1, y - 1)
                + alive(x, y - 1)
                + alive(x + 1, y - 1)
                + alive(x - 1, y)
                + alive(x + 1, y)
                + alive(x - 1, y + 1)
                + alive(x, y + 1)
                + alive(x + 1, y + 1);
            let idx = y as usize * w + x as usize;
            let mask = if g.cells[idx] == 0 { &born_mask } else { &survive_mask };
            cells[idx] = u8::from(mask[n as usize]);
        }
    }
    Ok(GridState {
        width: w,
        height: h,
        cells,
        boundary: g.boundary,
    })
}
