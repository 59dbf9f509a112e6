//! Quaternion helpers shared by the state representation, the task frames and
//! the IK orientation feedback. Quaternions travel as `[w, x, y, z]` whenever
//! they leave nalgebra types.

use nalgebra::{Matrix4, Quaternion, UnitQuaternion, Vector4};
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Quat, Vec3};

pub fn to_wxyz(q: &Quat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Builds a unit quaternion from `[w, x, y, z]`, normalizing on the way.
pub fn from_wxyz(v: [f64; 4]) -> Quat {
    UnitQuaternion::from_quaternion(Quaternion::new(v[0], v[1], v[2], v[3]))
}

pub fn wxyz_vector(q: &Quat) -> Vector4<f64> {
    Vector4::new(q.w, q.i, q.j, q.k)
}

/// Matrix of the linear map `p -> q ⊗ p` acting on `[w, x, y, z]` vectors.
///
/// Orthonormal for unit `q`; its transpose applies `q⁻¹ ⊗ p`.
pub fn left_mult_matrix(q: &Quat) -> Matrix4<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix4::new(
        w, -x, -y, -z, //
        x, w, -z, y, //
        y, z, w, -x, //
        z, -y, x, w,
    )
}

/// Returns `q` or `-q`, whichever has a non-negative dot product with `reference`.
pub fn same_hemisphere(reference: &Quat, q: Quat) -> Quat {
    if reference.coords.dot(&q.coords) < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

/// Rotation vector (axis times angle) of `desired ⊗ actual⁻¹`, with the
/// angle wrapped to `(-π, π]`.
pub fn orientation_error(desired: &Quat, actual: &Quat) -> Vec3 {
    let e = desired * actual.inverse();
    let (mut w, mut v) = (e.w, e.imag());
    if w < 0.0 {
        w = -w;
        v = -v;
    }
    let s = v.norm();
    if s < 1e-15 {
        // small-angle limit of 2·atan2(s, w)/s
        return v * 2.0;
    }
    let angle = 2.0 * Float::atan2(s, w);
    v * (angle / s)
}

/// Angle in radians between two orientations, in `[0, π]`.
pub fn angle_between(a: &Quat, b: &Quat) -> f64 {
    orientation_error(a, b).norm()
}
