use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};

/// Planar projective map with `h33 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    /// Scales `m` so its bottom-right entry is 1. Fails on singular or non-normalizable input.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let h33 = m[(2, 2)];
        if !h33.is_finite() || h33.abs() < 1e-12 {
            return Err(Error::Fit("homography has h33 = 0".into()));
        }
        let m = m / h33;
        if m.iter().any(|v| !v.is_finite()) || m.determinant().abs() <= 1e-12 {
            return Err(Error::Fit("homography is singular".into()));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let v = self.0 * Vector3::new(p[0], p[1], 1.0);
        if v.z.abs() < 1e-12 {
            return None;
        }
        Some([v.x / v.z, v.y / v.z])
    }

    /// `||H pa - pb||`, infinite when `pa` maps to infinity.
    pub fn transfer_error(&self, pa: [f64; 2], pb: [f64; 2]) -> f64 {
        match self.apply(pa) {
            Some(q) => (q[0] - pb[0]).hypot(q[1] - pb[1]),
            None => f64::INFINITY,
        }
    }
}

/// Similarity transform sending the centroid to the origin and the mean distance to sqrt(2).
fn normalizer(points: &[[f64; 2]]) -> Option<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = points.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / n;
    if !(mean > 1e-12) {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = t * Vector3::new(p[0], p[1], 1.0);
    [v.x / v.z, v.y / v.z]
}

/// True when some three of the four points are (nearly) collinear.
pub fn degenerate_sample(points: &[[f64; 2]; 4]) -> bool {
    let scale = points
        .iter()
        .flat_map(|p| points.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1])))
        .fold(0.0f64, f64::max);
    if scale < 1e-9 {
        return true;
    }
    let tol = 1e-6 * scale * scale;
    for skip in 0..4 {
        let tri: Vec<_> = (0..4).filter(|&i| i != skip).map(|i| points[i]).collect();
        let area = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[1][1] - tri[0][1]) * (tri[2][0] - tri[0][0]);
        if area.abs() < tol {
            return true;
        }
    }
    false
}

/// Normalized direct linear transform over `n >= 4` correspondences `a[i] -> b[i]`.
pub fn fit_homography(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<Homography> {
    if a.len() != b.len() {
        return Err(Error::arg("correspondence lists differ in length"));
    }
    if a.len() < 4 {
        return Err(Error::Fit(format!("need 4 correspondences, got {}", a.len())));
    }
    let degenerate = || Error::Fit("degenerate point configuration".into());
    let ta = normalizer(a).ok_or_else(degenerate)?;
    let tb = normalizer(b).ok_or_else(degenerate)?;

    let rows = (2 * a.len()).max(9);
    let mut m = DMatrix::<f64>::zeros(rows, 9);
    for (i, (pa, pb)) in a.iter().zip(b).enumerate() {
        let [x, y] = transform(&ta, *pa);
        let [u, v] = transform(&tb, *pb);
        let r = 2 * i;
        m.row_mut(r).copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        m.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Fit("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let (smallest, second) = (order[0], order[1]);
    let largest = sv[order[sv.len() - 1]];
    if sv[second] <= 1e-10 * largest {
        // Null space of dimension > 1: the solution is not unique.
        return Err(degenerate());
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let tb_inv = tb.try_inverse().ok_or_else(degenerate)?;
    Homography::new(tb_inv * hn * ta)
}

/// Exact homography through four correspondences, solved with `h33 = 1` in
/// normalized coordinates. Cheaper than [`fit_homography`] and equal to it on
/// minimal samples; `None` when the system is singular.
pub fn fit_minimal(a: &[[f64; 2]; 4], b: &[[f64; 2]; 4]) -> Option<Homography> {
    let ta = normalizer(a)?;
    let tb = normalizer(b)?;
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    let mut rhs = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let [x, y] = transform(&ta, a[i]);
        let [u, v] = transform(&tb, b[i]);
        let r = 2 * i;
        m.row_mut(r).copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        m.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        rhs[r] = u;
        rhs[r + 1] = v;
    }
    let h = m.lu().solve(&rhs)?;
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0);
    Homography::new(tb.try_inverse()? * hn * ta).ok()
}
