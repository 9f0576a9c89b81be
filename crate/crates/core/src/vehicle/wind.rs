use nalgebra::Vector3;

/// Expresses a body-axis vector `(u, w, v)` (longitudinal, lateral,
/// vertical) in inertial `(x, y, h)` components given heading `psi`, flight
/// path angle `gamma` and velocity roll `mu`.
///
/// Used for both the gust velocity and, under the slow-rotation
/// assumption, the gust acceleration.
pub fn wind_rotation(w_body: &Vector3<f64>, psi: f64, gamma: f64, mu: f64) -> Vector3<f64> {
    let (wu, ww, wv) = (w_body.x, w_body.y, w_body.z);
    let (sp, cp) = psi.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    let (sm, cm) = mu.sin_cos();
    let wx = wu * cg * cp - ww * (cm * sp + cp * sg * sm) - wv * (sm * sp - cm * cp * sg);
    let wy = wv * (cp * sm + cm * sg * sp) + ww * (cm * cp - sg * sm * sp) + wu * cg * sp;
    let wh = wv * cg * cm - wu * sg - ww * cg * sm;
    Vector3::new(wx, wy, wh)
}
