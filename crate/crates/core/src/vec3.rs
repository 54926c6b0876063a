/// Spatial vector used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Componentwise product `diag(d) * v`.
#[inline]
pub(crate) fn diag_mul(d: &[f64; 3], v: &Vec3) -> Vec3 {
    Vec3::new(d[0] * v.x, d[1] * v.y, d[2] * v.z)
}
