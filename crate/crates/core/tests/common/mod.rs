//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubeplan::geometry::CuboidObstacle;
use nalgebra::DMatrix;
use tubeplan::planner::{
    add_node, cleanup_and_regrow, planar_obstacles, AddResult, Bounds, PlanProblem, PlanTree, PlanarObstacle,
    PlannerConfig,
};
use tubeplan::vehicle::{QuadrotorParams, Vehicle};
use tubeplan::scenario::{Scenario, TIMINGS_FILE};
use tubeplan::sim::{integrate_nominal, linearize};
use tubeplan::uncertainty::{propagate_covariance, CovarianceHistory};

pub fn scenario_path(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(file)
}

pub fn load_scenario(file: &str) -> Scenario {
    Scenario::from_path(&scenario_path(file)).unwrap()
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation3<f64> {
    let axis = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break Unit::new_normalize(v);
        }
    };
    Rotation3::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::TAU))
}

/// SPD matrix with log-uniform eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Matrix3<f64> {
    let r = random_rotation(rng);
    let eig = Vector3::from_fn(|_, _| (rng.random_range(lo.ln()..hi.ln())).exp());
    r.matrix() * Matrix3::from_diagonal(&eig) * r.matrix().transpose()
}

/// An arbitrarily oriented box kept in both local and half-space form.
#[derive(Clone, Debug)]
pub struct RotatedBox {
    pub center: Vector3<f64>,
    pub rotation: Rotation3<f64>,
    pub half: Vector3<f64>,
}

impl RotatedBox {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            center: Vector3::from_fn(|_, _| rng.random_range(-5.0..5.0)),
            rotation: random_rotation(rng),
            half: Vector3::from_fn(|_, _| rng.random_range(0.3..3.0)),
        }
    }

    pub fn halfspaces(&self) -> (Vec<[f64; 3]>, Vec<f64>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..3 {
            let n = self.rotation * Vector3::ith(i, 1.0);
            for s in [1.0, -1.0] {
                let ns = n * s;
                a.push([ns.x, ns.y, ns.z]);
                b.push(ns.dot(&self.center) + self.half[i]);
            }
        }
        (a, b)
    }

    pub fn obstacle(&self) -> CuboidObstacle {
        let (a, b) = self.halfspaces();
        CuboidObstacle::from_halfspaces("box", &a, &b).unwrap()
    }

    /// Point at local coordinates `u ∈ [-1, 1]³`.
    pub fn point(&self, u: &Vector3<f64>) -> Vector3<f64> {
        self.center + self.rotation * u.component_mul(&self.half)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let local = self.rotation.inverse() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half[i])
    }

    /// Distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        let local = self.rotation.inverse() * (p - self.center);
        Vector3::from_fn(|i, _| (local[i].abs() - self.half[i]).max(0.0)).norm()
    }
}

fn quad(w: &Matrix3<f64>, d: &Vector3<f64>) -> f64 {
    d.dot(&(w * d))
}

/// Exact minimum of `(z − r)ᵀ Σ⁻¹ (z − r)` over `{A z ≤ b}` by enumerating
/// every face subset of size 0..=3 and keeping feasible stationary points.
pub fn enumeration_oracle(sigma: &Matrix3<f64>, r: &Vector3<f64>, a: &[Vector3<f64>], b: &[f64]) -> f64 {
    let feasible = |z: &Vector3<f64>| {
        let scale = 1.0 + z.amax();
        a.iter().zip(b).all(|(ai, bi)| ai.dot(z) <= bi + 1e-9 * scale)
    };
    if feasible(r) {
        return 0.0;
    }
    let m = a.len();
    let mut best = f64::INFINITY;
    let mut consider = |rows: &[usize]| {
        let k = rows.len();
        let g = nalgebra::DMatrix::from_fn(k, k, |i, j| a[rows[i]].dot(&(sigma * a[rows[j]])));
        let res = nalgebra::DVector::from_fn(k, |i, _| b[rows[i]] - a[rows[i]].dot(r));
        let Some(lu) = g.clone().lu().solve(&res) else { return };
        if g.determinant().abs() < 1e-12 {
            return;
        }
        let mut z = *r;
        for (i, &row) in rows.iter().enumerate() {
            z += sigma * a[row] * lu[i];
        }
        if feasible(&z) {
            best = best.min(res.dot(&lu));
        }
    };
    for i in 0..m {
        consider(&[i]);
        for j in (i + 1)..m {
            consider(&[i, j]);
            for k in (j + 1)..m {
                consider(&[i, j, k]);
            }
        }
    }
    best
}

/// Minimum of the Mahalanobis form over a `n³` lattice spanning the box.
pub fn grid_oracle(bx: &RotatedBox, sigma: &Matrix3<f64>, r: &Vector3<f64>, n: usize) -> f64 {
    let w = sigma.try_inverse().unwrap();
    let u = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let z = bx.point(&Vector3::new(u(i), u(j), u(k)));
                best = best.min(quad(&w, &(z - r)));
            }
        }
    }
    best
}

/// Vertices of a convex cross-section, counter-clockwise.
pub fn polygon_vertices(poly: &PlanarObstacle) -> Vec<Vector2<f64>> {
    let hp = &poly.halfplanes;
    let mut out: Vec<Vector2<f64>> = Vec::new();
    for i in 0..hp.len() {
        for j in (i + 1)..hp.len() {
            let m = nalgebra::Matrix2::new(hp[i].0.x, hp[i].0.y, hp[j].0.x, hp[j].0.y);
            let Some(inv) = m.try_inverse() else { continue };
            let v = inv * Vector2::new(hp[i].1, hp[j].1);
            if hp.iter().all(|(n, c)| n.dot(&v) <= c + 1e-9) && !out.iter().any(|w| (w - v).norm() < 1e-9) {
                out.push(v);
            }
        }
    }
    let c = out.iter().sum::<Vector2<f64>>() / out.len() as f64;
    out.sort_by(|p, q| (p.y - c.y).atan2(p.x - c.x).total_cmp(&(q.y - c.y).atan2(q.x - c.x)));
    out
}

/// Separating-axis test: does segment `pq` meet the open interior of the
/// convex polygon?
pub fn segment_enters_interior(p: &Vector2<f64>, q: &Vector2<f64>, verts: &[Vector2<f64>]) -> bool {
    let mut axes: Vec<Vector2<f64>> = (0..verts.len())
        .map(|i| {
            let e = verts[(i + 1) % verts.len()] - verts[i];
            Vector2::new(-e.y, e.x)
        })
        .collect();
    let d = q - p;
    if d.norm() > 0.0 {
        axes.push(Vector2::new(-d.y, d.x));
    }
    for ax in axes {
        let ax = ax.normalize();
        let (pmin, pmax) = verts
            .iter()
            .map(|v| ax.dot(v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
        let (a, b) = (ax.dot(p), ax.dot(q));
        let (smin, smax) = (a.min(b), a.max(b));
        if smax <= pmin + 1e-9 || smin >= pmax - 1e-9 {
            return false;
        }
    }
    true
}

/// Shortest start–goal path around convex polygons by Dijkstra over the
/// visibility graph of their corners.
pub fn visibility_graph_length(start: Vector2<f64>, goal: Vector2<f64>, polygons: &[Vec<Vector2<f64>>]) -> f64 {
    let mut nodes = vec![start, goal];
    for poly in polygons {
        nodes.extend(poly.iter().copied());
    }
    let visible = |i: usize, j: usize| {
        polygons
            .iter()
            .all(|poly| !segment_enters_interior(&nodes[i], &nodes[j], poly))
    };
    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            break;
        };
        if dist[u].is_infinite() {
            break;
        }
        done[u] = true;
        for v in 0..n {
            if !done[v] && visible(u, v) {
                dist[v] = dist[v].min(dist[u] + (nodes[u] - nodes[v]).norm());
            }
        }
    }
    dist[1]
}

/// Exact symmetry and PSD up to RK4 truncation. Starting from `P0 = 0`,
/// directions reached only through a chain of integrators have true
/// eigenvalues far below the O(dt⁵) local error, so the first few steps can
/// show negative eigenvalues of relative size O(dt⁴).
pub fn assert_symmetric_psd(hist: &CovarianceHistory) {
    let tol = 10.0 * hist.grid.dt.powi(4);
    for (k, p) in hist.p.iter().enumerate() {
        assert_eq!(p, &p.transpose(), "asymmetric at step {k}");
        let scale = p.amax().max(1e-300);
        let lmin = p.clone().symmetric_eigen().eigenvalues.min();
        assert!(lmin >= -tol * scale, "eigenvalue {lmin} at step {k} (scale {scale})");
    }
}

pub fn scenario_history(file: &str) -> CovarianceHistory {
    let scenario = load_scenario(file);
    let (sys, x0, grid) = scenario.closed_loop().unwrap();
    let nominal = integrate_nominal(&sys, &x0, &grid).unwrap();
    let lin = linearize(&sys, &nominal).unwrap();
    propagate_covariance(&lin, &scenario.initial_covariance()).unwrap()
}


/// Every artifact except the wall-clock timings, sorted by name.
pub fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != TIMINGS_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}


pub fn square(size: f64) -> Bounds {
    Bounds {
        min: [0.0, 0.0],
        max: [size, size],
    }
}

pub fn column(id: &str, x: f64, y: f64, hx: f64, hy: f64) -> CuboidObstacle {
    CuboidObstacle::from_box(id, [x, y, 25.0], [hx, hy, 25.0], 0.0).unwrap()
}

/// Every live edge avoids the interior of every obstacle.
pub fn assert_edges_free(tree: &PlanTree, planar: &[PlanarObstacle]) {
    let polys: Vec<_> = planar.iter().map(polygon_vertices).collect();
    for (i, n) in tree.nodes.iter().enumerate() {
        let Some(p) = n.parent.filter(|_| n.alive) else { continue };
        for poly in &polys {
            assert!(
                !segment_enters_interior(&tree.nodes[p].coords, &n.coords, poly),
                "edge {p} -> {i} crosses an obstacle"
            );
        }
    }
}

/// Random interleaving of node insertions, buffer growth with cleanup and
/// regrowth, and buffer shrinking. Panics on the first broken invariant and
/// returns the number of buffer growths.
pub fn tree_fuzz(seed: u64, count: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = PlannerConfig::new([2.0, 2.0], [58.0, 58.0], square(60.0), 20.0, 5.0);
    cfg.max_iterations = 200;
    let mut obstacles = vec![
        column("a", 20.0, 20.0, 4.0, 6.0),
        column("b", 40.0, 35.0, 6.0, 3.0),
        column("c", 25.0, 45.0, 3.0, 3.0),
    ];
    let mut tree = PlanTree::new(cfg.start(), cfg.goal(), cfg.goal_radius);
    let mut mutations = 0;
    let mut growths = 0;
    while mutations < count {
        let planar = planar_obstacles(&obstacles, cfg.altitude);
        if rng.random_bool(0.02) {
            let j = rng.random_range(0..obstacles.len());
            let grown = obstacles[j].buffer() + rng.random_range(0.2..2.0);
            obstacles[j].set_buffer(grown);
            let planar = planar_obstacles(&obstacles, cfg.altitude);
            if planar.iter().any(|p| p.contains(&cfg.start()) || p.contains(&cfg.goal())) {
                obstacles[j].set_buffer(0.0);
                continue;
            }
            let stats = cleanup_and_regrow(&mut tree, &obstacles[j], &planar, &cfg, &mut rng);
            assert!(stats.regrow_iterations <= cfg.max_iterations / 4);
            let poly = &planar_obstacles(std::slice::from_ref(&obstacles[j]), cfg.altitude)[0];
            assert!(tree.nodes.iter().skip(1).all(|n| !n.alive || !poly.contains(&n.coords)));
            assert!(!tree.has_orphans());
            assert_edges_free(&tree, &planar);
            growths += 1;
        } else if rng.random_bool(0.01) {
            // shrinking a buffer never invalidates the tree
            let j = rng.random_range(0..obstacles.len());
            obstacles[j].set_buffer(0.0);
            tree.rebuild_solutions(&planar_obstacles(&obstacles, cfg.altitude));
        } else {
            let before = tree.c_best();
            let added = add_node(&mut tree, &planar, &cfg, &mut rng);
            assert!(tree.c_best() <= before, "c_best rose without buffer growth");
            if let AddResult::Added(i) = added {
                let p = tree.nodes[i].parent.unwrap();
                for poly in &planar {
                    assert!(!poly.intersects_segment(&tree.nodes[p].coords, &tree.nodes[i].coords));
                }
            }
        }
        mutations += 1;
        tree.check_consistency().unwrap_or_else(|e| panic!("after mutation {mutations}: {e}"));
        if tree.len_alive() > 1500 {
            tree = PlanTree::new(cfg.start(), cfg.goal(), cfg.goal_radius);
        }
    }
    growths
}


pub fn straight_problem(sigma: [f64; 3], obstacle: CuboidObstacle) -> PlanProblem {
    let mut cfg = PlannerConfig::new([5.0, 50.0], [95.0, 50.0], square(100.0), 20.0, 5.0);
    cfg.check_stride = 1;
    PlanProblem {
        vehicle: Vehicle::Quadrotor(QuadrotorParams {
            gust_sigma: sigma,
            ..Default::default()
        }),
        obstacles: vec![obstacle],
        initial_covariance: DMatrix::zeros(9, 9),
        beta: 0.999,
        dt: 0.01,
        config: cfg,
        seed: 0,
    }
}

/// A tree whose best path is the straight start–goal segment.
pub fn straight_tree(problem: &PlanProblem) -> PlanTree {
    let cfg = &problem.config;
    let mut tree = PlanTree::new(cfg.start(), cfg.goal(), cfg.goal_radius);
    let near_goal = tree.insert(Vector2::new(94.5, 50.0), 0);
    tree.consider_solution(near_goal, &[]);
    tree
}

