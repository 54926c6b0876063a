//! Collapsed Gauss-Jacobi rules on triangles and tetrahedra.
//!
//! The reference simplex is mapped from the unit cube by the Duffy
//! transform; the Jacobian factors `(1-a)^2 (1-b)` (tet) and `(1-a)` (tri)
//! are absorbed into Gauss-Jacobi weights, so `m` points per direction are
//! exact for total degree `2m - 1`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result, Vec3};

/// Quadrature rule on a simplex in barycentric coordinates. Weights are
/// normalised to sum to 1, so `integral_T f ~ |T| sum_i w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates; only the first `dim + 1` entries are used.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Jacobi nodes and weights on `[0, 1]` for the weight `(1-a)^alpha`.
pub fn gauss_jacobi(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for n in 0..m {
        let nf = n as f64;
        let diag = if n == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        jac[(n, n)] = diag;
        if n + 1 < m {
            let k = nf + 1.0;
            let s = 2.0 * k + ab;
            let off = (4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            jac[(n, n + 1)] = off;
            jac[(n + 1, n)] = off;
        }
    }
    // mu0 = int_{-1}^{1} (1-x)^alpha dx
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            // map to [0,1]: (1-x)^alpha dx = 2^(alpha+1) (1-a)^alpha da
            ((1.0 + x) / 2.0, mu0 * v0 * v0 / 2f64.powf(alpha + 1.0))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

impl QuadratureRule {
    /// Tetrahedron rule exact for total degree `degree`.
    pub fn tetrahedron(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (xa, wa) = gauss_jacobi(m, 2.0);
        let (xb, wb) = gauss_jacobi(m, 1.0);
        let (xc, wc) = gauss_jacobi(m, 0.0);
        let mut points = Vec::with_capacity(m * m * m);
        let mut weights = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let x = xa[i];
                    let y = (1.0 - xa[i]) * xb[j];
                    let z = (1.0 - xa[i]) * (1.0 - xb[j]) * xc[k];
                    points.push([1.0 - x - y - z, x, y, z]);
                    weights.push(6.0 * wa[i] * wb[j] * wc[k]);
                }
            }
        }
        Self { points, weights, degree }
    }

    /// Triangle rule exact for total degree `degree`.
    pub fn triangle(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (xa, wa) = gauss_jacobi(m, 1.0);
        let (xb, wb) = gauss_jacobi(m, 0.0);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let x = xa[i];
                let y = (1.0 - xa[i]) * xb[j];
                points.push([1.0 - x - y, x, y, 0.0]);
                weights.push(2.0 * wa[i] * wb[j]);
            }
        }
        Self { points, weights, degree }
    }
}

/// Straight line along which integrands may be singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularEdge {
    pub point: Vec3,
    /// Unit direction.
    pub direction: Vec3,
}

impl SingularEdge {
    /// Line parallel to the z axis through `(x, y)`.
    pub fn vertical(x: f64, y: f64) -> Self {
        Self { point: Vec3::new(x, y, 0.0), direction: Vec3::z() }
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = p - self.point;
        (d - self.direction * d.dot(&self.direction)).norm()
    }

    fn touches(&self, corners: &[Vec3]) -> bool {
        let scale = (corners[0] - corners[1]).norm();
        corners.iter().any(|c| self.distance(c) <= 1e-10 * scale)
    }
}

/// Integrator over mesh cells and faces. Cells and faces with a corner on a
/// singular edge are split once uniformly (8 or 4 children) before the rule
/// is applied.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub tet: QuadratureRule,
    pub tri: QuadratureRule,
    pub singular: Vec<SingularEdge>,
}

pub const DEFAULT_DEGREE: usize = 4;

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(DEFAULT_DEGREE, vec![])
    }
}

impl Quadrature {
    pub fn new(degree: usize, singular: Vec<SingularEdge>) -> Self {
        Self { tet: QuadratureRule::tetrahedron(degree), tri: QuadratureRule::triangle(degree), singular }
    }

    pub fn with_singular(mut self, singular: Vec<SingularEdge>) -> Self {
        self.singular = singular;
        self
    }

    fn is_singular(&self, corners: &[Vec3]) -> bool {
        self.singular.iter().any(|s| s.touches(corners))
    }

    /// `integral_T f`.
    pub fn integrate_cell<T, F>(&self, corners: &[Vec3; 4], f: F) -> T
    where
        T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
        F: Fn(Vec3) -> T,
    {
        if self.is_singular(corners) {
            subdivide_tet(corners).iter().map(|c| integrate_tet(&self.tet, c, &f)).sum()
        } else {
            integrate_tet(&self.tet, corners, &f)
        }
    }

    /// `integral_F f`.
    pub fn integrate_face<T, F>(&self, corners: &[Vec3; 3], f: F) -> T
    where
        T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
        F: Fn(Vec3) -> T,
    {
        if self.is_singular(corners) {
            subdivide_triangle(corners).iter().map(|c| integrate_tri(&self.tri, c, &f)).sum()
        } else {
            integrate_tri(&self.tri, corners, &f)
        }
    }
}

pub fn tet_volume(c: &[Vec3; 4]) -> f64 {
    ((c[1] - c[0]).cross(&(c[2] - c[0])).dot(&(c[3] - c[0])) / 6.0).abs()
}

pub fn triangle_area(c: &[Vec3; 3]) -> f64 {
    0.5 * (c[1] - c[0]).cross(&(c[2] - c[0])).norm()
}

/// Applies `rule` on one tetrahedron.
pub fn integrate_tet<T, F>(rule: &QuadratureRule, c: &[Vec3; 4], f: &F) -> T
where
    T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    F: Fn(Vec3) -> T,
{
    let vol = tet_volume(c);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(b, &w)| {
            let x = c[0] * b[0] + c[1] * b[1] + c[2] * b[2] + c[3] * b[3];
            f(x) * (w * vol)
        })
        .sum()
}

/// Applies `rule` on one triangle.
pub fn integrate_tri<T, F>(rule: &QuadratureRule, c: &[Vec3; 3], f: &F) -> T
where
    T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
    F: Fn(Vec3) -> T,
{
    let area = triangle_area(c);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(b, &w)| {
            let x = c[0] * b[0] + c[1] * b[1] + c[2] * b[2];
            f(x) * (w * area)
        })
        .sum()
}

/// Red refinement: four corner tetrahedra plus the inner octahedron split
/// along one diagonal.
pub fn subdivide_tet(c: &[Vec3; 4]) -> [[Vec3; 4]; 8] {
    let m = |i: usize, j: usize| (c[i] + c[j]) * 0.5;
    let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
    [
        [c[0], m01, m02, m03],
        [m01, c[1], m12, m13],
        [m02, m12, c[2], m23],
        [m03, m13, m23, c[3]],
        [m02, m13, m01, m12],
        [m02, m13, m12, m23],
        [m02, m13, m23, m03],
        [m02, m13, m03, m01],
    ]
}

pub fn subdivide_triangle(c: &[Vec3; 3]) -> [[Vec3; 3]; 4] {
    let m = |i: usize, j: usize| (c[i] + c[j]) * 0.5;
    let (m01, m02, m12) = (m(0, 1), m(0, 2), m(1, 2));
    [[c[0], m01, m02], [m01, c[1], m12], [m02, m12, c[2]], [m01, m12, m02]]
}

/// Validates a requested exactness degree.
pub fn check_degree(degree: usize) -> Result<usize> {
    if (1..=30).contains(&degree) {
        Ok(degree)
    } else {
        Err(Error::InvalidParameter(format!("quadrature degree {degree} outside 1..=30")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    fn ref_tet() -> [Vec3; 4] {
        [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
    }

    #[test]
    fn jacobi_rule_moments() {
        for alpha in [0.0, 1.0, 2.0] {
            let (x, w) = gauss_jacobi(4, alpha);
            for k in 0..8 {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                // int_0^1 (1-a)^alpha a^k da = B(k+1, alpha+1)
                let a = alpha as u32;
                let exact = factorial(k as u32) * factorial(a) / factorial(k as u32 + a + 1);
                assert!((got - exact).abs() < 1e-14, "alpha={alpha} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn tet_rule_exact_to_degree() {
        for degree in 1..=8 {
            let rule = QuadratureRule::tetrahedron(degree);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            for i in 0..=degree as u32 {
                for j in 0..=(degree as u32 - i) {
                    for k in 0..=(degree as u32 - i - j) {
                        let got = integrate_tet(&rule, &ref_tet(), &|p: Vec3| {
                            p.x.powi(i as i32) * p.y.powi(j as i32) * p.z.powi(k as i32)
                        });
                        let exact = factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 3);
                        assert!((got - exact).abs() <= 1e-13 * exact, "deg {degree}: x^{i} y^{j} z^{k}");
                    }
                }
            }
        }
    }

    #[test]
    fn tri_rule_exact_to_degree() {
        let tri = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        for degree in 1..=8 {
            let rule = QuadratureRule::triangle(degree);
            for i in 0..=degree as u32 {
                for j in 0..=(degree as u32 - i) {
                    let got = integrate_tri(&rule, &tri, &|p: Vec3| p.x.powi(i as i32) * p.y.powi(j as i32));
                    let exact = factorial(i) * factorial(j) / factorial(i + j + 2);
                    assert!((got - exact).abs() <= 1e-13 * exact);
                }
            }
        }
    }

    #[test]
    fn subdivisions_partition_the_parent() {
        let c = [Vec3::new(0.1, 0.2, 0.0), Vec3::new(1.3, 0.1, 0.2), Vec3::new(0.4, 1.1, 0.3), Vec3::new(0.2, 0.3, 0.9)];
        let vols: Vec<f64> = subdivide_tet(&c).iter().map(tet_volume).collect();
        assert!((vols.iter().sum::<f64>() - tet_volume(&c)).abs() < 1e-14);
        // a quadratic is integrated identically either way
        let q = Quadrature::default();
        let f = |p: Vec3| p.x * p.y + p.z * p.z;
        let direct = integrate_tet(&q.tet, &c, &f);
        let split: f64 = subdivide_tet(&c).iter().map(|s| integrate_tet(&q.tet, s, &f)).sum();
        assert!((direct - split).abs() < 1e-14);

        let t = [c[0], c[1], c[2]];
        let areas: f64 = subdivide_triangle(&t).iter().map(triangle_area).sum();
        assert!((areas - triangle_area(&t)).abs() < 1e-14);
    }

    #[test]
    fn singular_cells_are_split() {
        let q = Quadrature::new(4, vec![SingularEdge::vertical(0.0, 0.0)]);
        let c = ref_tet();
        // r^{-1/2} is integrable; splitting changes the value relative to the plain rule
        let f = |p: Vec3| (p.x * p.x + p.y * p.y).sqrt().powf(-0.5);
        let plain = integrate_tet(&q.tet, &c, &f);
        let split = q.integrate_cell(&c, f);
        assert!(plain != split);
        let far = [c[0] + Vec3::new(2.0, 2.0, 0.0), c[1] + Vec3::new(2.0, 2.0, 0.0), c[2] + Vec3::new(2.0, 2.0, 0.0), c[3] + Vec3::new(2.0, 2.0, 0.0)];
        assert_eq!(q.integrate_cell(&far, f), integrate_tet(&q.tet, &far, &f));
    }
}
