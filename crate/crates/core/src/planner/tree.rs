use nalgebra::Vector2;

use super::polygon::{no_collision_2d, PlanarObstacle};

#[derive(Clone, Debug, PartialEq)]
pub struct PlanNode {
    pub coords: Vector2<f64>,
    pub parent: Option<usize>,
    /// Cost-to-come; `+∞` inside an orphaned subtree.
    pub cost: f64,
    pub children: Vec<usize>,
    pub alive: bool,
}

/// Rooted planning tree. Node indices are stable: removal only clears the
/// `alive` flag.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanTree {
    pub nodes: Vec<PlanNode>,
    pub start: Vector2<f64>,
    pub goal: Vector2<f64>,
    pub goal_radius: f64,
    /// Nodes within `goal_radius` of the goal with a free closing segment.
    pub soln: Vec<usize>,
    c_best: f64,
    best: Option<usize>,
}

pub const ROOT: usize = 0;

impl PlanTree {
    pub fn new(start: Vector2<f64>, goal: Vector2<f64>, goal_radius: f64) -> Self {
        let mut tree = Self {
            nodes: vec![PlanNode {
                coords: start,
                parent: None,
                cost: 0.0,
                children: Vec::new(),
                alive: true,
            }],
            start,
            goal,
            goal_radius,
            soln: Vec::new(),
            c_best: f64::INFINITY,
            best: None,
        };
        tree.consider_solution(ROOT, &[]);
        tree
    }

    pub fn c_best(&self) -> f64 {
        self.c_best
    }

    pub fn len_alive(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn is_connected(&self, i: usize) -> bool {
        let n = &self.nodes[i];
        n.alive && n.cost.is_finite()
    }

    pub fn orphan_roots(&self) -> Vec<usize> {
        (1..self.nodes.len())
            .filter(|&i| self.nodes[i].alive && self.nodes[i].parent.is_none())
            .collect()
    }

    pub fn has_orphans(&self) -> bool {
        (1..self.nodes.len()).any(|i| self.nodes[i].alive && self.nodes[i].parent.is_none())
    }

    /// Adds `coords` under `parent` and returns its index.
    pub fn insert(&mut self, coords: Vector2<f64>, parent: usize) -> usize {
        let cost = self.nodes[parent].cost + (coords - self.nodes[parent].coords).norm();
        let idx = self.nodes.len();
        self.nodes.push(PlanNode {
            coords,
            parent: Some(parent),
            cost,
            children: Vec::new(),
            alive: true,
        });
        self.nodes[parent].children.push(idx);
        idx
    }

    fn detach(&mut self, i: usize) {
        if let Some(p) = self.nodes[i].parent.take() {
            self.nodes[p].children.retain(|&c| c != i);
        }
    }

    /// Sets cost of `i` and shifts its whole subtree consistently.
    fn set_cost(&mut self, i: usize, cost: f64) {
        let mut stack = vec![(i, cost)];
        while let Some((n, c)) = stack.pop() {
            self.nodes[n].cost = c;
            for &ch in &self.nodes[n].children {
                let d = (self.nodes[ch].coords - self.nodes[n].coords).norm();
                stack.push((ch, c + d));
            }
        }
    }

    /// Re-parents `i` under `parent`, recomputing the subtree costs.
    pub fn reparent(&mut self, i: usize, parent: usize) {
        self.detach(i);
        self.nodes[i].parent = Some(parent);
        self.nodes[parent].children.push(i);
        let cost = self.nodes[parent].cost + (self.nodes[i].coords - self.nodes[parent].coords).norm();
        self.set_cost(i, cost);
    }

    /// Cuts `i` from its parent; its subtree becomes an orphan subtree.
    pub fn orphan(&mut self, i: usize) {
        self.detach(i);
        self.set_cost(i, f64::INFINITY);
    }

    /// Removes `i`; its children become orphan roots.
    pub fn remove(&mut self, i: usize) {
        assert_ne!(i, ROOT, "the root cannot be removed");
        self.detach(i);
        let children = std::mem::take(&mut self.nodes[i].children);
        for ch in children {
            self.nodes[ch].parent = None;
            self.set_cost(ch, f64::INFINITY);
        }
        self.nodes[i].alive = false;
        self.nodes[i].cost = f64::INFINITY;
    }

    /// Removes every orphan subtree. Returns the number of nodes removed.
    pub fn prune_orphans(&mut self) -> usize {
        let mut removed = 0;
        for i in 1..self.nodes.len() {
            let n = &self.nodes[i];
            if n.alive && !n.cost.is_finite() {
                self.nodes[i].alive = false;
                self.nodes[i].children.clear();
                self.nodes[i].parent = None;
                removed += 1;
            }
        }
        removed
    }

    /// Adds `i` to the solution set if it reaches the goal disk with a free
    /// closing segment.
    pub fn consider_solution(&mut self, i: usize, obstacles: &[PlanarObstacle]) {
        let n = &self.nodes[i];
        if n.alive
            && (n.coords - self.goal).norm() <= self.goal_radius
            && !self.soln.contains(&i)
            && no_collision_2d(&n.coords, &self.goal, obstacles)
        {
            self.soln.push(i);
        }
        self.refresh_best();
    }

    /// Recomputes `c_best` from the current solution set.
    pub fn refresh_best(&mut self) {
        self.c_best = f64::INFINITY;
        self.best = None;
        for &i in &self.soln {
            let n = &self.nodes[i];
            if !n.alive {
                continue;
            }
            let c = n.cost + (n.coords - self.goal).norm();
            if c < self.c_best {
                self.c_best = c;
                self.best = Some(i);
            }
        }
    }

    /// Rebuilds the solution set from scratch against `obstacles`.
    pub fn rebuild_solutions(&mut self, obstacles: &[PlanarObstacle]) {
        self.soln.clear();
        for i in 0..self.nodes.len() {
            if self.nodes[i].alive && (self.nodes[i].coords - self.goal).norm() <= self.goal_radius {
                if no_collision_2d(&self.nodes[i].coords, &self.goal, obstacles) {
                    self.soln.push(i);
                }
            }
        }
        self.refresh_best();
    }

    /// Root-to-goal waypoints of the incumbent, goal appended unless the
    /// best node sits on it.
    pub fn best_path(&self) -> Option<Vec<Vector2<f64>>> {
        let best = self.best?;
        if !self.nodes[best].cost.is_finite() {
            return None;
        }
        let mut path = vec![];
        let mut cur = Some(best);
        while let Some(i) = cur {
            path.push(self.nodes[i].coords);
            cur = self.nodes[i].parent;
        }
        path.reverse();
        if (path.last().unwrap() - self.goal).norm() > 0.0 {
            path.push(self.goal);
        }
        Some(path)
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_consistency(&self) -> Result<(), String> {
        let root = &self.nodes[ROOT];
        if !root.alive || root.parent.is_some() || root.cost != 0.0 {
            return Err("root must be alive, parentless and at cost 0".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.alive {
                continue;
            }
            for &c in &n.children {
                if !self.nodes[c].alive || self.nodes[c].parent != Some(i) {
                    return Err(format!("child list of {i} names {c} which does not point back"));
                }
            }
            match n.parent {
                None if i != ROOT => {
                    if n.cost.is_finite() {
                        return Err(format!("orphan root {i} has finite cost"));
                    }
                }
                None => {}
                Some(p) => {
                    let pn = &self.nodes[p];
                    if !pn.alive || !pn.children.contains(&i) {
                        return Err(format!("parent {p} of {i} is dead or does not list it"));
                    }
                    let want = pn.cost + (n.coords - pn.coords).norm();
                    let ok = if want.is_finite() {
                        (n.cost - want).abs() <= 1e-9 * (1.0 + want)
                    } else {
                        n.cost.is_infinite()
                    };
                    if !ok {
                        return Err(format!("cost of {i} is {} but parent implies {want}", n.cost));
                    }
                }
            }
            // acyclic: following parents terminates within the node count
            let mut cur = n.parent;
            let mut steps = 0;
            while let Some(p) = cur {
                steps += 1;
                if steps > self.nodes.len() {
                    return Err(format!("cycle through node {i}"));
                }
                cur = self.nodes[p].parent;
            }
        }
        let mut expect = f64::INFINITY;
        for &i in &self.soln {
            let n = &self.nodes[i];
            if n.alive && (n.coords - self.goal).norm() <= self.goal_radius {
                expect = expect.min(n.cost + (n.coords - self.goal).norm());
            }
        }
        if expect != self.c_best && !(expect.is_infinite() && self.c_best.is_infinite()) {
            return Err(format!("c_best {} but solution set gives {expect}", self.c_best));
        }
        Ok(())
    }
}
