use nalgebra::{Matrix3, Matrix4, Vector2, Vector3, Vector4};

use crate::{Error, Result};

/// Feasibility slack used when classifying points against faces.
const FACE_TOL: f64 = 1e-9;

/// Convex polytope `{z : a_i·z ≤ b_i + buffer}` with unit-norm rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CuboidObstacle {
    pub id: String,
    a: Vec<Vector3<f64>>,
    b: Vec<f64>,
    buffer: f64,
    centroid: Vector3<f64>,
    chebyshev_center: Vector3<f64>,
    inradius: f64,
    /// Circumradius about `centroid` of the buffered polytope (0 if empty).
    buffered_radius: f64,
}

fn vertices_of(a: &[Vector3<f64>], b: &[f64], d: f64) -> Vec<Vector3<f64>> {
    let m = a.len();
    let mut out: Vec<Vector3<f64>> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                let mat = Matrix3::from_rows(&[a[i].transpose(), a[j].transpose(), a[k].transpose()]);
                if mat.determinant().abs() < 1e-12 {
                    continue;
                }
                let Some(v) = mat.lu().solve(&Vector3::new(b[i] + d, b[j] + d, b[k] + d)) else {
                    continue;
                };
                let scale = 1.0 + v.amax();
                if a.iter().zip(b).all(|(ai, bi)| ai.dot(&v) <= bi + d + FACE_TOL * scale)
                    && !out.iter().any(|w| (w - v).norm() <= 1e-9 * scale)
                {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Largest inscribed ball by enumerating basic solutions of the 4-variable
/// LP `max r s.t. a_i·x + r ≤ b_i`.
pub(crate) fn chebyshev(a: &[Vector3<f64>], b: &[f64]) -> Option<(Vector3<f64>, f64)> {
    let m = a.len();
    let mut best: Option<(Vector3<f64>, f64)> = None;
    let idx: Vec<usize> = (0..m).collect();
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate().skip(p + 1) {
            for (s, &k) in idx.iter().enumerate().skip(q + 1) {
                for &l in idx.iter().skip(s + 1) {
                    let rows = [i, j, k, l];
                    let mat = Matrix4::from_fn(|r, c| if c < 3 { a[rows[r]][c] } else { 1.0 });
                    if mat.determinant().abs() < 1e-12 {
                        continue;
                    }
                    let rhs = Vector4::from_fn(|r, _| b[rows[r]]);
                    let Some(sol) = mat.lu().solve(&rhs) else { continue };
                    let x = Vector3::new(sol[0], sol[1], sol[2]);
                    let r = sol[3];
                    let scale = 1.0 + x.amax();
                    let feasible = a.iter().zip(b).all(|(ai, bi)| ai.dot(&x) + r <= bi + FACE_TOL * scale);
                    if feasible && best.is_none_or(|(_, rb)| r > rb) {
                        best = Some((x, r));
                    }
                }
            }
        }
    }
    best
}

/// True when `{d : A d ≤ 0}` is only the origin. Extreme rays of that cone
/// lie along pairwise face-normal cross products.
fn is_bounded(a: &[Vector3<f64>]) -> bool {
    let mut rank_mat = nalgebra::DMatrix::zeros(a.len(), 3);
    for (i, ai) in a.iter().enumerate() {
        rank_mat.set_row(i, &ai.transpose());
    }
    if rank_mat.rank(1e-9) < 3 {
        return false;
    }
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let c = a[i].cross(&a[j]);
            if c.norm() < 1e-12 {
                continue;
            }
            for dir in [c, -c] {
                if a.iter().all(|ak| ak.dot(&dir) <= 1e-12) {
                    return false;
                }
            }
        }
    }
    true
}

impl CuboidObstacle {
    /// Builds from raw half-spaces; rows are normalised to unit length.
    pub fn from_halfspaces(id: impl Into<String>, a: &[[f64; 3]], b: &[f64]) -> Result<Self> {
        let id = id.into();
        if a.len() != b.len() {
            return Err(Error::Dimension(format!("obstacle {id}: {} rows but {} offsets", a.len(), b.len())));
        }
        if a.len() < 4 {
            return Err(Error::InvalidInput(format!("obstacle {id}: need at least 4 faces")));
        }
        let mut rows = Vec::with_capacity(a.len());
        let mut offs = Vec::with_capacity(a.len());
        for (r, &bi) in a.iter().zip(b) {
            let v = Vector3::from(*r);
            let n = v.norm();
            if !(n > 0.0 && n.is_finite() && bi.is_finite()) {
                return Err(Error::InvalidInput(format!("obstacle {id}: degenerate face row {r:?}")));
            }
            rows.push(v / n);
            offs.push(bi / n);
        }
        if !is_bounded(&rows) {
            return Err(Error::InvalidInput(format!("obstacle {id}: polytope is unbounded")));
        }
        let Some((cc, r)) = chebyshev(&rows, &offs) else {
            return Err(Error::InvalidInput(format!("obstacle {id}: polytope is empty")));
        };
        if r < 0.0 {
            return Err(Error::InvalidInput(format!("obstacle {id}: polytope is empty")));
        }
        let verts = vertices_of(&rows, &offs, 0.0);
        let centroid = verts.iter().sum::<Vector3<f64>>() / verts.len() as f64;
        let mut obs = Self {
            id,
            a: rows,
            b: offs,
            buffer: 0.0,
            centroid,
            chebyshev_center: cc,
            inradius: r,
            buffered_radius: 0.0,
        };
        obs.set_buffer(0.0);
        Ok(obs)
    }

    /// Box with the given centre, half-extents and yaw about the vertical.
    pub fn from_box(id: impl Into<String>, center: [f64; 3], half_extents: [f64; 3], yaw: f64) -> Result<Self> {
        if half_extents.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidInput("box half-extents must be > 0".into()));
        }
        let (s, c) = yaw.sin_cos();
        let axes = [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]];
        let mut a = Vec::with_capacity(6);
        let mut b = Vec::with_capacity(6);
        for (ax, h) in axes.iter().zip(half_extents) {
            let n = Vector3::from(*ax);
            let proj = n.dot(&Vector3::from(center));
            a.push(*ax);
            b.push(proj + h);
            a.push([-ax[0], -ax[1], -ax[2]]);
            b.push(-proj + h);
        }
        Self::from_halfspaces(id, &a, &b)
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.a
    }

    /// Offsets of the true (unbuffered) obstacle.
    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn buffer(&self) -> f64 {
        self.buffer
    }

    pub fn set_buffer(&mut self, d: f64) {
        self.buffer = d;
        self.buffered_radius = vertices_of(&self.a, &self.b, d)
            .iter()
            .map(|v| (v - self.centroid).norm())
            .fold(0.0, f64::max);
    }

    pub fn with_buffer(mut self, d: f64) -> Self {
        self.set_buffer(d);
        self
    }

    /// Offsets expanded by `d`.
    pub fn offsets_with(&self, d: f64) -> Vec<f64> {
        self.b.iter().map(|bi| bi + d).collect()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.centroid
    }

    pub fn chebyshev_center(&self) -> Vector3<f64> {
        self.chebyshev_center
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Circumradius of the true obstacle about its vertex centroid.
    pub fn circumradius(&self) -> f64 {
        self.vertices_with(0.0)
            .iter()
            .map(|v| (v - self.centroid).norm())
            .fold(0.0, f64::max)
    }

    /// Circumradius about the centroid with the current buffer applied.
    pub fn buffered_radius(&self) -> f64 {
        self.buffered_radius
    }

    pub fn vertices_with(&self, d: f64) -> Vec<Vector3<f64>> {
        vertices_of(&self.a, &self.b, d)
    }

    /// Whether the polytope expanded by `d` is nonempty. Uniform expansion
    /// keeps the Chebyshev centre and grows the radius by `d`.
    pub fn nonempty_with(&self, d: f64) -> bool {
        self.inradius + d >= 0.0
    }

    /// Smallest expansion `d` with `p` inside: `max_i (a_i·p − b_i)`.
    pub fn expansion_to_contain(&self, p: &Vector3<f64>) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(ai, bi)| ai.dot(p) - bi)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains_with(&self, p: &Vector3<f64>, d: f64) -> bool {
        self.expansion_to_contain(p) <= d
    }

    /// Half-planes `n·(x, y) ≤ c` of the buffered cross-section at
    /// `altitude`. `None` when the slice misses the polytope.
    pub fn cross_section(&self, altitude: f64, d: f64) -> Option<Vec<(Vector2<f64>, f64)>> {
        let mut out = Vec::with_capacity(self.a.len());
        for (ai, bi) in self.a.iter().zip(&self.b) {
            let n = Vector2::new(ai.x, ai.y);
            let c = bi + d - ai.z * altitude;
            let norm = n.norm();
            if norm < 1e-12 {
                if c < 0.0 {
                    return None;
                }
                continue;
            }
            out.push((n / norm, c / norm));
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_geometry() {
        let o = CuboidObstacle::from_box("b", [1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(o.vertices_with(0.0).len(), 8);
        assert_relative_eq!(o.centroid(), Vector3::new(1.0, 2.0, 3.0), epsilon = 1e-12);
        assert_relative_eq!(o.circumradius(), 14f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(o.inradius(), 1.0, epsilon = 1e-12);
        assert!(o.contains_with(&o.chebyshev_center(), -0.999));
        let big = o.clone().with_buffer(1.0);
        assert_relative_eq!(big.buffered_radius(), (4.0f64 + 9.0 + 16.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn rows_are_normalised() {
        let o = CuboidObstacle::from_halfspaces(
            "h",
            &[[2.0, 0.0, 0.0], [-3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 5.0], [0.0, 0.0, -5.0]],
            &[2.0, 3.0, 1.0, 1.0, 5.0, 5.0],
        )
        .unwrap();
        for n in o.normals() {
            assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-15);
        }
        assert_eq!(o.offsets(), &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn unbounded_and_empty_sets_are_rejected() {
        let open = CuboidObstacle::from_halfspaces(
            "o",
            &[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
            &[1.0; 5],
        );
        assert!(open.is_err());
        let empty = CuboidObstacle::from_halfspaces(
            "e",
            &[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
            &[-1.0, -1.0, 1.0, 1.0, 1.0, 1.0],
        );
        assert!(empty.is_err());
    }

    #[test]
    fn tetrahedron_is_accepted() {
        let s = 1.0 / 3f64.sqrt();
        let o = CuboidObstacle::from_halfspaces(
            "t",
            &[[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [s, s, s]],
            &[0.0, 0.0, 0.0, s],
        )
        .unwrap();
        assert_eq!(o.vertices_with(0.0).len(), 4);
        assert!(o.inradius() > 0.0);
    }

    #[test]
    fn yawed_box_cross_section() {
        let o = CuboidObstacle::from_box("y", [0.0, 0.0, 10.0], [1.0, 1.0, 10.0], std::f64::consts::FRAC_PI_4).unwrap();
        let hp = o.cross_section(5.0, 0.0).unwrap();
        assert_eq!(hp.len(), 4);
        // the corner of a 45-degree square lies on the x axis at sqrt 2
        let corner = Vector2::new(2f64.sqrt(), 0.0);
        assert!(hp.iter().all(|(n, c)| n.dot(&corner) <= c + 1e-12));
        assert!(o.cross_section(25.0, 0.0).is_none());
        assert!(o.cross_section(25.0, 6.0).is_some());
    }

    #[test]
    fn expansion_to_contain() {
        let o = CuboidObstacle::from_box("b", [0.0; 3], [1.0; 3], 0.0).unwrap();
        assert_relative_eq!(o.expansion_to_contain(&Vector3::new(3.0, 0.5, 0.0)), 2.0);
        assert_relative_eq!(o.expansion_to_contain(&Vector3::zeros()), -1.0);
    }
}
