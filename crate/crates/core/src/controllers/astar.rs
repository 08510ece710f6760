use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::world::Scenario;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanFailure {
    #[error("goal cell blocked or outside the workspace")]
    GoalBlocked,
    #[error("start outside the workspace or enclosed")]
    StartBlocked,
    #[error("goal unreachable")]
    Unreachable,
}

/// Occupancy grid over the workspace. A cell is blocked when its center is
/// within the planning inflation of a navigation obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct NavGrid {
    pub origin: Vec2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    blocked: Vec<bool>,
}

impl NavGrid {
    pub fn new(scenario: &Scenario) -> Self {
        let ws = scenario.sim.workspace;
        let cell = scenario.sim.astar_cell;
        let size = ws.size();
        let nx = (size.x / cell).ceil().max(1.0) as usize;
        let ny = (size.y / cell).ceil().max(1.0) as usize;
        let inflation = scenario.nav_inflation();
        let mut grid = Self { origin: ws.min, cell, nx, ny, blocked: vec![false; nx * ny] };
        for j in 0..ny {
            for i in 0..nx {
                grid.blocked[j * nx + i] = scenario.sdf_nav(grid.center((i, j)), inflation) <= 0.0;
            }
        }
        grid
    }

    /// Grid with an explicit occupancy, row-major (`blocked[j * nx + i]`).
    pub fn from_blocked(origin: Vec2, cell: f64, nx: usize, ny: usize, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), nx * ny);
        Self { origin, cell, nx, ny, blocked }
    }

    pub fn center(&self, (i, j): Cell) -> Vec2 {
        self.origin + Vec2::new((i as f64 + 0.5) * self.cell, (j as f64 + 0.5) * self.cell)
    }

    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        let rel = (p - self.origin) / self.cell;
        if rel.x < 0.0 || rel.y < 0.0 {
            return None;
        }
        let (i, j) = (rel.x.floor() as usize, rel.y.floor() as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    pub fn is_blocked(&self, (i, j): Cell) -> bool {
        self.blocked[j * self.nx + i]
    }

    fn index(&self, (i, j): Cell) -> usize {
        j * self.nx + i
    }

    /// Axis moves first, then diagonals. Diagonals may not cut corners.
    fn neighbors(&self, (i, j): Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        STEPS.iter().filter_map(move |&(di, dj)| {
            let ni = i as i64 + di;
            let nj = j as i64 + dj;
            if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
                return None;
            }
            let n = (ni as usize, nj as usize);
            if self.is_blocked(n) {
                return None;
            }
            if di != 0 && dj != 0 && (self.is_blocked((ni as usize, j)) || self.is_blocked((i, nj as usize))) {
                return None;
            }
            Some((n, if di != 0 && dj != 0 { SQRT_2 } else { 1.0 }))
        })
    }
}

fn octile((ai, aj): Cell, (bi, bj): Cell) -> f64 {
    let dx = ai.abs_diff(bi) as f64;
    let dy = aj.abs_diff(bj) as f64;
    dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    seq: usize,
    cell: Cell,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (f, h, seq)
        other.f.total_cmp(&self.f).then(other.h.total_cmp(&self.h)).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cell path and its cost in cell units (1 per axis move, sqrt 2 per
/// diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub cost: f64,
}

/// 8-connected A* with the octile heuristic.
pub fn grid_astar(grid: &NavGrid, start: Cell, goal: Cell) -> Option<GridPath> {
    if grid.is_blocked(start) || grid.is_blocked(goal) {
        return None;
    }
    let n = grid.nx * grid.ny;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[grid.index(start)] = 0.0;
    let h0 = octile(start, goal);
    open.push(Entry { f: h0, h: h0, seq: 0, cell: start });
    let mut seq = 1;
    while let Some(Entry { cell, .. }) = open.pop() {
        let ci = grid.index(cell);
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if cell == goal {
            let mut cells = vec![cell];
            let mut cur = ci;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                cells.push((cur % grid.nx, cur / grid.nx));
            }
            cells.reverse();
            return Some(GridPath { cells, cost: g[ci] });
        }
        for (nb, step) in grid.neighbors(cell) {
            let ni = grid.index(nb);
            let ng = g[ci] + step;
            if !closed[ni] && ng < g[ni] {
                g[ni] = ng;
                parent[ni] = ci;
                let h = octile(nb, goal);
                open.push(Entry { f: ng + h, h, seq, cell: nb });
                seq += 1;
            }
        }
    }
    None
}

/// Nearest free cell by breadth-first search over 4-neighbors.
fn nearest_free(grid: &NavGrid, from: Cell) -> Option<Cell> {
    let mut seen = vec![false; grid.nx * grid.ny];
    let mut queue = VecDeque::from([from]);
    seen[grid.index(from)] = true;
    while let Some(c) = queue.pop_front() {
        if !grid.is_blocked(c) {
            return Some(c);
        }
        let (i, j) = c;
        let cands = [(i.wrapping_add(1), j), (i.wrapping_sub(1), j), (i, j.wrapping_add(1)), (i, j.wrapping_sub(1))];
        for n in cands {
            if n.0 < grid.nx && n.1 < grid.ny && !seen[grid.index(n)] {
                seen[grid.index(n)] = true;
                queue.push_back(n);
            }
        }
    }
    None
}

fn segment_clear(scenario: &Scenario, a: Vec2, b: Vec2, inflation: f64) -> bool {
    scenario.shapes.iter().filter(|s| s.nav_obstacle).all(|s| !s.footprint.segment_hits(a, b, inflation))
}

/// Base path from `start` to `goal`: grid A* followed by greedy
/// line-of-sight shortcutting. The result starts at `start` and ends at
/// `goal`. A start inside the inflated region (e.g. after a reach pressed the
/// base against a table) leaves through the nearest free cell.
pub fn astar_plan(scenario: &Scenario, grid: &NavGrid, start: Vec2, goal: Vec2) -> Result<Vec<Vec2>, PlanFailure> {
    let goal_cell = grid.cell_of(goal).ok_or(PlanFailure::GoalBlocked)?;
    if grid.is_blocked(goal_cell) {
        return Err(PlanFailure::GoalBlocked);
    }
    let start_cell = grid.cell_of(start).ok_or(PlanFailure::StartBlocked)?;
    let free_start = nearest_free(grid, start_cell).ok_or(PlanFailure::StartBlocked)?;
    let path = grid_astar(grid, free_start, goal_cell).ok_or(PlanFailure::Unreachable)?;

    let inflation = scenario.nav_inflation();
    let mut pts = vec![start];
    let n_cells = path.cells.len();
    // the start and goal cell centers are replaced by the exact endpoints,
    // except that an escape cell is kept when the start is inside padding
    let start_free = scenario.sdf_nav(start, inflation) > 0.0;
    for (k, c) in path.cells.iter().enumerate() {
        if (k == 0 && start_free) || (k == n_cells - 1 && k > 0) {
            continue;
        }
        pts.push(grid.center(*c));
    }
    pts.push(goal);

    let mut out = vec![pts[0]];
    let mut i = 0;
    if !start_free && pts.len() > 2 {
        out.push(pts[1]);
        i = 1;
    }
    while i < pts.len() - 1 {
        let mut next = i + 1;
        for j in (i + 2..pts.len()).rev() {
            if segment_clear(scenario, pts[i], pts[j], inflation) {
                next = j;
                break;
            }
        }
        out.push(pts[next]);
        i = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::testing::open_scenario;
    use crate::world::{HeightProfile, StaticShape};
    use crate::geometry::ConvexPolygon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path_length(pts: &[Vec2]) -> f64 {
        pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Plain Dijkstra over the same move set.
    fn dijkstra(grid: &NavGrid, start: Cell, goal: Cell) -> Option<f64> {
        let n = grid.nx * grid.ny;
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[grid.index(start)] = 0.0;
        loop {
            let mut best = None;
            for k in 0..n {
                if !done[k] && dist[k].is_finite() && best.is_none_or(|b: usize| dist[k] < dist[b]) {
                    best = Some(k);
                }
            }
            let k = best?;
            done[k] = true;
            let c = (k % grid.nx, k / grid.nx);
            if c == goal {
                return Some(dist[k]);
            }
            for (nb, w) in grid.neighbors(c) {
                let ni = grid.index(nb);
                dist[ni] = dist[ni].min(dist[k] + w);
            }
        }
    }

    #[test]
    fn straight_line_in_empty_world() {
        let sc = open_scenario();
        let grid = NavGrid::new(&sc);
        let pts = astar_plan(&sc, &grid, Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0)).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((path_length(&pts) - 3.0).abs() <= grid.cell);
    }

    fn with_square(center: Vec2) -> Scenario {
        let mut sc = open_scenario();
        sc.shapes.push(StaticShape {
            id: "square".into(),
            footprint: ConvexPolygon::rectangle(center, Vec2::new(1.0, 1.0)),
            height: HeightProfile::Constant(0.7),
            nav_obstacle: true,
        });
        sc
    }

    #[test]
    fn goal_inside_padding_fails() {
        let sc = with_square(Vec2::new(1.5, 0.0));
        let grid = NavGrid::new(&sc);
        let r = astar_plan(&sc, &grid, Vec2::new(0.0, 0.0), Vec2::new(1.5, 0.6));
        assert_eq!(r, Err(PlanFailure::GoalBlocked));
    }

    #[test]
    fn detour_close_to_grid_optimum() {
        let sc = with_square(Vec2::new(1.5, 0.0));
        let grid = NavGrid::new(&sc);
        let (s, g) = (Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0));
        let pts = astar_plan(&sc, &grid, s, g).unwrap();
        let opt = dijkstra(&grid, grid.cell_of(s).unwrap(), grid.cell_of(g).unwrap()).unwrap() * grid.cell;
        let len = path_length(&pts);
        assert!(len <= opt * 1.05, "len {len} vs grid optimum {opt}");
        let inflation = sc.nav_inflation();
        for w in pts.windows(2) {
            assert!(segment_clear(&sc, w[0], w[1], inflation));
        }
    }

    #[test]
    fn matches_dijkstra_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..50 {
            let (nx, ny) = (100, 100);
            let density = rng.random_range(0.1..0.35);
            let blocked: Vec<bool> = (0..nx * ny).map(|_| rng.random::<f64>() < density).collect();
            let mut grid = NavGrid::from_blocked(Vec2::zeros(), 1.0, nx, ny, blocked);
            let start = (rng.random_range(0..nx), rng.random_range(0..ny));
            let goal = (rng.random_range(0..nx), rng.random_range(0..ny));
            grid.blocked[start.1 * nx + start.0] = false;
            grid.blocked[goal.1 * nx + goal.0] = false;
            let a = grid_astar(&grid, start, goal);
            let d = dijkstra(&grid, start, goal);
            match (a, d) {
                (Some(p), Some(c)) => {
                    assert!((p.cost - c).abs() < 1e-9, "case {case}: {} vs {c}", p.cost);
                    assert_eq!(p.cells.first(), Some(&start));
                    assert_eq!(p.cells.last(), Some(&goal));
                    assert!(p.cells.iter().all(|c| !grid.is_blocked(*c)));
                }
                (None, None) => {}
                other => panic!("case {case}: reachability mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn path_cells_keep_clearance() {
        let sc = with_square(Vec2::new(1.5, 0.3));
        let grid = NavGrid::new(&sc);
        let inflation = sc.nav_inflation();
        let s = grid.cell_of(Vec2::new(0.0, 0.0)).unwrap();
        let g = grid.cell_of(Vec2::new(3.0, 0.5)).unwrap();
        let p = grid_astar(&grid, s, g).unwrap();
        for c in p.cells {
            assert!(sc.sdf_nav(grid.center(c), inflation) > 0.0);
        }
    }

    #[test]
    fn escapes_from_padding() {
        let sc = with_square(Vec2::new(1.5, 0.0));
        let grid = NavGrid::new(&sc);
        // 0.3 m from the square edge: inside the planning inflation
        let start = Vec2::new(0.7, 0.0);
        let pts = astar_plan(&sc, &grid, start, Vec2::new(-1.0, 0.0)).unwrap();
        assert_eq!(pts[0], start);
        assert_eq!(*pts.last().unwrap(), Vec2::new(-1.0, 0.0));
    }
}
