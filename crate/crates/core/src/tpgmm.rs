//! Task-parameterized Gaussian mixture model.
//!
//! Every demonstration point is observed in `J` task frames. EM fits one
//! Gaussian per component and frame with responsibilities shared across the
//! frames. For a new task the local Gaussians are mapped into the base frame
//! by `(A μ + b, A Σ Aᵀ)` and multiplied per component, and Gaussian mixture
//! regression on the time dimension produces the trajectory.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::allocator::Allocator;
use nalgebra::{DefaultAllocator, Dim, Matrix3, OMatrix, OVector, SMatrix, SVector};
// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::demonstrations::{DemoSet, StatePoint, StateVector, STATE_DIM};
use crate::kinematics::Pose;
use crate::quat::left_mult_matrix;
use crate::{Error, Quat, Result};

pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Default number of mixture components.
pub const DEFAULT_COMPONENTS: usize = 6;
/// Default diagonal regularization added to every covariance.
pub const DEFAULT_REG: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Affine task frame `ξ = A ξ' + b` on the state space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskFrame {
    pub a: StateMatrix,
    pub b: StateVector,
}

impl TaskFrame {
    /// Checks the block structure: time block 1, orthonormal position and
    /// quaternion blocks, no coupling between blocks.
    pub fn new(a: StateMatrix, b: StateVector) -> Result<Self> {
        let frame = Self { a, b };
        frame.validate()?;
        Ok(frame)
    }

    pub fn identity() -> Self {
        Self {
            a: StateMatrix::identity(),
            b: StateVector::zeros(),
        }
    }

    /// Frame attached to a Cartesian pose: positions are rotated and
    /// translated, quaternions left-multiplied by the pose orientation.
    pub fn from_pose(pose: &Pose) -> Self {
        let mut a = StateMatrix::zeros();
        a[(0, 0)] = 1.0;
        let r: Matrix3<f64> = pose.orientation.to_rotation_matrix().into_inner();
        a.fixed_view_mut::<3, 3>(1, 1).copy_from(&r);
        a.fixed_view_mut::<4, 4>(4, 4).copy_from(&left_mult_matrix(&pose.orientation));
        let mut b = StateVector::zeros();
        b.fixed_rows_mut::<3>(1).copy_from(&pose.position);
        Self { a, b }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !self.a.iter().chain(self.b.iter()).all(|v| v.is_finite()) {
            return bad("task frame is not finite");
        }
        if (self.a[(0, 0)] - 1.0).abs() > 1e-10 || self.b[0] != 0.0 {
            return bad("task frame must leave time unchanged");
        }
        for r in 0..STATE_DIM {
            for c in 0..STATE_DIM {
                if block_of(r) != block_of(c) && self.a[(r, c)] != 0.0 {
                    return bad("task frame couples time, position and orientation");
                }
            }
        }
        if (self.a.transpose() * self.a - StateMatrix::identity()).abs().max() > 1e-10 {
            return bad("task frame rotation blocks must be orthonormal");
        }
        if self.b.fixed_rows::<4>(4).iter().any(|v| *v != 0.0) {
            return bad("task frame cannot offset quaternions");
        }
        Ok(())
    }

    /// `A⁻¹ (ξ − b)`; `A` is orthonormal so its inverse is its transpose.
    pub fn project(&self, xi: &StateVector) -> StateVector {
        self.a.tr_mul(&(xi - self.b))
    }

    /// `A ξ' + b`.
    pub fn unproject(&self, local: &StateVector) -> StateVector {
        self.a * local + self.b
    }
}

fn block_of(i: usize) -> usize {
    match i {
        0 => 0,
        1..=3 => 1,
        _ => 2,
    }
}

pub fn project_to_frame(point: &StatePoint, frame: &TaskFrame) -> StateVector {
    frame.project(&point.to_vector())
}

/// Training data: each point seen in every frame, `points[n][j]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameData {
    pub points: Vec<Vec<StateVector>>,
}

impl FrameData {
    pub fn frame_count(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Projects every sample of demonstration `m` into `frames[m]`.
    pub fn from_demos(set: &DemoSet, frames: &[Vec<TaskFrame>]) -> Result<Self> {
        if frames.len() != set.len() {
            return Err(Error::LengthMismatch {
                left: set.len(),
                right: frames.len(),
            });
        }
        let j = frames.first().map_or(0, Vec::len);
        if j == 0 || frames.iter().any(|f| f.len() != j) {
            return Err(Error::InvalidParameter("every demonstration needs the same non-zero frame count".into()));
        }
        let mut points = Vec::with_capacity(set.demos.iter().map(|d| d.cart_traj.len()).sum());
        for (demo, fr) in set.demos.iter().zip(frames) {
            for p in &demo.cart_traj {
                points.push(fr.iter().map(|f| project_to_frame(p, f)).collect());
            }
        }
        Ok(Self { points })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmOptions {
    pub components: usize,
    pub reg: f64,
    pub max_iter: usize,
    /// Stop once an iteration gains less log-likelihood than this.
    pub tolerance: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            reg: DEFAULT_REG,
            max_iter: DEFAULT_MAX_ITER,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Fitted model; `mu[k][j]` and `sigma[k][j]` are component `k` in frame `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TpgmmModel {
    pub priors: Vec<f64>,
    pub mu: Vec<Vec<StateVector>>,
    pub sigma: Vec<Vec<StateMatrix>>,
    /// Names of the frames in order, e.g. `start` and `target`.
    pub frames: Vec<String>,
    pub reg: f64,
    /// Log-likelihood after initialization and after every EM iteration.
    pub log_likelihood: Vec<f64>,
}

impl TpgmmModel {
    pub fn components(&self) -> usize {
        self.priors.len()
    }

    pub fn frame_count(&self) -> usize {
        self.mu.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, j) = (self.components(), self.frame_count());
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if k == 0 || j == 0 {
            return bad("model has no components or frames");
        }
        if self.mu.len() != k || self.sigma.len() != k || self.frames.len() != j {
            return bad("model arrays disagree on K or J");
        }
        if self.mu.iter().any(|m| m.len() != j) || self.sigma.iter().any(|s| s.len() != j) {
            return bad("model arrays disagree on J");
        }
        if self.priors.iter().any(|p| !(*p >= 0.0)) || (self.priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("priors must be non-negative and sum to 1");
        }
        for (k, row) in self.sigma.iter().enumerate() {
            for s in row {
                if (s - s.transpose()).abs().max() > 1e-9 * s.abs().max().max(1.0) || s.cholesky().is_none() {
                    return Err(Error::SingularCovariance { component: k });
                }
            }
        }
        Ok(())
    }
}

/// Component Gaussians expressed in the base frame.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalGmm {
    pub priors: Vec<f64>,
    pub mu: Vec<StateVector>,
    pub sigma: Vec<StateMatrix>,
}

/// Precomputed Cholesky factor of a covariance for repeated log-density
/// evaluation.
struct LogDensity {
    mean: StateVector,
    l: StateMatrix,
    log_norm: f64,
}

impl LogDensity {
    fn new(mean: &StateVector, cov: &StateMatrix, component: usize) -> Result<Self> {
        let chol = cov.cholesky().ok_or(Error::SingularCovariance { component })?;
        let l = chol.l();
        let log_det: f64 = (0..STATE_DIM).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
        Ok(Self {
            mean: *mean,
            l,
            log_norm: -0.5 * (STATE_DIM as f64 * LN_2PI + log_det),
        })
    }

    fn eval(&self, x: &StateVector) -> f64 {
        let mut z = x - self.mean;
        self.l.solve_lower_triangular_mut(&mut z);
        self.log_norm - 0.5 * z.norm_squared()
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// EM with responsibilities shared across frames. Components start from
/// equal slices of the time-sorted data.
pub fn fit_em(data: &FrameData, frame_names: &[String], opts: &EmOptions) -> Result<TpgmmModel> {
    let (n, j, k) = (data.len(), data.frame_count(), opts.components);
    if k == 0 {
        return Err(Error::InvalidParameter("component count must be >= 1".into()));
    }
    if !(opts.reg > 0.0) {
        return Err(Error::InvalidParameter("reg must be > 0".into()));
    }
    if n == 0 || j == 0 {
        return Err(Error::EmptyDataset);
    }
    if frame_names.len() != j {
        return Err(Error::LengthMismatch {
            left: j,
            right: frame_names.len(),
        });
    }
    if data.points.iter().any(|p| p.len() != j || p.iter().any(|x| !x.iter().all(|v| v.is_finite()))) {
        return Err(Error::InvalidParameter("training points must be finite and seen in every frame".into()));
    }
    let distinct = count_distinct(data);
    if distinct < k {
        return Err(Error::DegenerateData { distinct, components: k });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.points[a][0][0].total_cmp(&data.points[b][0][0]));
    let mut gamma = vec![vec![0.0; k]; n];
    for (rank, &idx) in order.iter().enumerate() {
        gamma[idx][(rank * k / n).min(k - 1)] = 1.0;
    }

    let mut model = TpgmmModel {
        priors: vec![0.0; k],
        mu: vec![vec![StateVector::zeros(); j]; k],
        sigma: vec![vec![StateMatrix::zeros(); j]; k],
        frames: frame_names.to_vec(),
        reg: opts.reg,
        log_likelihood: Vec::new(),
    };
    m_step(data, &gamma, &mut model);
    let mut ll = e_step(data, &model, &mut gamma)?;
    model.log_likelihood.push(ll);
    for _ in 0..opts.max_iter {
        m_step(data, &gamma, &mut model);
        let next = e_step(data, &model, &mut gamma)?;
        model.log_likelihood.push(next);
        let gain = next - ll;
        ll = next;
        if gain < opts.tolerance {
            break;
        }
    }
    Ok(model)
}

fn count_distinct(data: &FrameData) -> usize {
    let mut keys: Vec<&[f64]> = data.points.iter().map(|p| p[0].as_slice()).collect();
    keys.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    keys.dedup();
    keys.len()
}

fn m_step(data: &FrameData, gamma: &[Vec<f64>], model: &mut TpgmmModel) {
    let n = data.len() as f64;
    let reg = StateMatrix::identity() * model.reg;
    for k in 0..model.components() {
        let nk: f64 = gamma.iter().map(|g| g[k]).sum();
        model.priors[k] = nk / n;
        if nk <= f64::MIN_POSITIVE {
            // dead component: keep its Gaussians, it no longer takes data
            for s in &mut model.sigma[k] {
                if s.cholesky().is_none() {
                    *s = reg;
                }
            }
            continue;
        }
        for j in 0..model.frame_count() {
            let mut mu = StateVector::zeros();
            for (g, p) in gamma.iter().zip(&data.points) {
                mu += p[j] * g[k];
            }
            mu /= nk;
            let mut sigma = StateMatrix::zeros();
            for (g, p) in gamma.iter().zip(&data.points) {
                let d = p[j] - mu;
                sigma.ger(g[k], &d, &d, 1.0);
            }
            sigma /= nk;
            model.mu[k][j] = mu;
            model.sigma[k][j] = symmetrize(&sigma) + reg;
        }
    }
    let total: f64 = model.priors.iter().sum();
    model.priors.iter_mut().for_each(|p| *p /= total);
}

/// Fills `gamma` with responsibilities and returns the log-likelihood.
fn e_step(data: &FrameData, model: &TpgmmModel, gamma: &mut [Vec<f64>]) -> Result<f64> {
    let k = model.components();
    let mut dens = Vec::with_capacity(k);
    for c in 0..k {
        let row = (0..model.frame_count())
            .map(|j| LogDensity::new(&model.mu[c][j], &model.sigma[c][j], c))
            .collect::<Result<Vec<_>>>()?;
        dens.push(row);
    }
    let log_prior: Vec<f64> = model.priors.iter().map(|p| p.ln()).collect();
    let mut ll = 0.0;
    let mut logs = vec![0.0; k];
    for (p, g) in data.points.iter().zip(gamma.iter_mut()) {
        for c in 0..k {
            logs[c] = if log_prior[c] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                log_prior[c] + dens[c].iter().zip(p).map(|(d, x)| d.eval(x)).sum::<f64>()
            };
        }
        let total = log_sum_exp(&logs);
        ll += total;
        for c in 0..k {
            g[c] = (logs[c] - total).exp();
        }
    }
    Ok(ll)
}

fn symmetrize(m: &StateMatrix) -> StateMatrix {
    (m + m.transpose()) * 0.5
}

/// Precision-weighted product of Gaussians: `Σ = (Σⱼ Σⱼ⁻¹)⁻¹`,
/// `μ = Σ Σⱼ Σⱼ⁻¹ μⱼ`.
pub fn gaussian_product<D: Dim>(
    parts: &[(OVector<f64, D>, OMatrix<f64, D, D>)],
) -> Option<(OVector<f64, D>, OMatrix<f64, D, D>)>
where
    DefaultAllocator: Allocator<D> + Allocator<D, D>,
{
    let (_, first_sigma) = parts.first()?;
    let (rows, _) = first_sigma.shape_generic();
    let mut precision = OMatrix::<f64, D, D>::zeros_generic(rows, rows);
    let mut weighted = OVector::<f64, D>::zeros_generic(rows, nalgebra::Const::<1>);
    for (mu, sigma) in parts {
        let inv = sigma.clone().cholesky()?.inverse();
        weighted += &inv * mu;
        precision += inv;
    }
    let sigma = precision.cholesky()?.inverse();
    let mu = &sigma * weighted;
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    Some((mu, sigma))
}

/// Maps every local Gaussian into the base frame and multiplies across
/// frames, component by component.
pub fn combine_frames(model: &TpgmmModel, frames: &[TaskFrame]) -> Result<GlobalGmm> {
    if frames.len() != model.frame_count() {
        return Err(Error::LengthMismatch {
            left: model.frame_count(),
            right: frames.len(),
        });
    }
    for f in frames {
        f.validate()?;
    }
    let mut mu = Vec::with_capacity(model.components());
    let mut sigma = Vec::with_capacity(model.components());
    for k in 0..model.components() {
        let parts: Vec<(StateVector, StateMatrix)> = frames
            .iter()
            .enumerate()
            .map(|(j, f)| (f.unproject(&model.mu[k][j]), f.a * model.sigma[k][j] * f.a.transpose()))
            .collect();
        let (m, s) = gaussian_product(&parts).ok_or(Error::SingularCovariance { component: k })?;
        mu.push(m);
        sigma.push(s);
    }
    Ok(GlobalGmm {
        priors: model.priors.clone(),
        mu,
        sigma,
    })
}

/// Conditional mean of the state given the time dimension; the quaternion
/// part is renormalized.
pub fn gmr_query(g: &GlobalGmm, t: f64) -> StatePoint {
    let k = g.priors.len();
    let mut logs = Vec::with_capacity(k);
    for c in 0..k {
        let var = g.sigma[c][(0, 0)];
        let d = t - g.mu[c][0];
        logs.push(if g.priors[c] > 0.0 {
            g.priors[c].ln() - 0.5 * (LN_2PI + var.ln() + d * d / var)
        } else {
            f64::NEG_INFINITY
        });
    }
    let total = log_sum_exp(&logs);
    let mut out = SVector::<f64, 7>::zeros();
    for c in 0..k {
        let h = (logs[c] - total).exp();
        if h == 0.0 {
            continue;
        }
        let var = g.sigma[c][(0, 0)];
        let cross = g.sigma[c].fixed_view::<7, 1>(1, 0);
        let mean = g.mu[c].fixed_rows::<7>(1) + cross * ((t - g.mu[c][0]) / var);
        out += mean * h;
    }
    let q = nalgebra::Quaternion::new(out[3], out[4], out[5], out[6]);
    let orientation = if q.norm() > 0.0 {
        Quat::new_normalize(q)
    } else {
        Quat::identity()
    };
    StatePoint::new(t, out.fixed_rows::<3>(0).into_owned(), orientation)
}

/// `samples` states at uniform phases `k / (samples − 1)`.
pub fn generate_trajectory(model: &TpgmmModel, frames: &[TaskFrame], samples: usize) -> Result<Vec<StatePoint>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("trajectory needs at least 2 samples".into()));
    }
    let g = combine_frames(model, frames)?;
    Ok((0..samples)
        .map(|i| gmr_query(&g, i as f64 / (samples - 1) as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;
    use alloc::string::ToString;
    use nalgebra::{Matrix2, UnitQuaternion, Vector2};
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    fn names(j: usize) -> Vec<String> {
        (0..j).map(|i| i.to_string()).collect()
    }

    fn random_frame(rng: &mut ChaCha8Rng) -> TaskFrame {
        let u = Uniform::new(-1.0, 1.0).unwrap();
        let q = UnitQuaternion::from_euler_angles(u.sample(rng) * 3.0, u.sample(rng) * 1.5, u.sample(rng) * 3.0);
        TaskFrame::from_pose(&Pose::new(Vec3::new(u.sample(rng), u.sample(rng), u.sample(rng)), q))
    }

    fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
        StateVector::from_fn(|_, _| StandardNormal.sample(rng))
    }

    fn random_spd(rng: &mut ChaCha8Rng) -> StateMatrix {
        let m = StateMatrix::from_fn(|_, _| StandardNormal.sample(rng));
        m * m.transpose() + StateMatrix::identity() * 0.1
    }

    #[test]
    fn frame_projection_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_frame(&mut rng);
            f.validate().unwrap();
            let xi = random_state(&mut rng);
            assert!((f.unproject(&f.project(&xi)) - xi).abs().max() < 1e-12);
            let at = TaskFrame { a: StateMatrix::identity(), b: xi };
            assert!(at.project(&xi).norm() == 0.0);
        }
        let xi = random_state(&mut rng);
        assert_eq!(TaskFrame::identity().project(&xi), xi);
    }

    #[test]
    fn frame_validation_rejects_coupling() {
        let mut a = StateMatrix::identity();
        a[(0, 3)] = 0.1;
        assert!(TaskFrame::new(a, StateVector::zeros()).is_err());
        let mut b = StateVector::zeros();
        b[5] = 1.0;
        assert!(TaskFrame::new(StateMatrix::identity(), b).is_err());
    }

    #[test]
    fn pose_frame_maps_quaternions_by_left_multiplication() {
        let pose = Pose::new(Vec3::new(0.1, 0.2, 0.3), UnitQuaternion::from_euler_angles(0.4, -0.2, 1.0));
        let f = TaskFrame::from_pose(&pose);
        let local = UnitQuaternion::from_euler_angles(-0.3, 0.5, 0.2);
        let p = StatePoint::new(0.5, Vec3::new(0.0, 0.1, 0.0), local);
        let global = StatePoint::from_vector(&f.unproject(&p.to_vector()));
        assert!((global.position - pose.transform_point(&p.position)).norm() < 1e-12);
        assert!(global.orientation.angle_to(&(pose.orientation * local)) < 1e-9);
    }

    fn single_frame_data(points: &[StateVector]) -> FrameData {
        FrameData {
            points: points.iter().map(|p| vec![*p]).collect(),
        }
    }

    #[test]
    fn single_component_is_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<StateVector> = (0..50).map(|_| random_state(&mut rng)).collect();
        let opts = EmOptions { components: 1, ..EmOptions::default() };
        let model = fit_em(&single_frame_data(&pts), &names(1), &opts).unwrap();
        let n = pts.len() as f64;
        let mean = pts.iter().fold(StateVector::zeros(), |a, p| a + p) / n;
        let mut cov = StateMatrix::zeros();
        for p in &pts {
            cov += (p - mean) * (p - mean).transpose();
        }
        cov = cov / n + StateMatrix::identity() * opts.reg;
        assert!((model.priors[0] - 1.0).abs() < 1e-15);
        assert!((model.mu[0][0] - mean).abs().max() < 1e-10);
        assert!((model.sigma[0][0] - cov).abs().max() < 1e-10);
    }

    #[test]
    fn two_separated_gaussians_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = StateVector::zeros();
        a[0] = 0.25;
        a[1] = -1.0;
        let mut b = StateVector::zeros();
        b[0] = 0.75;
        b[1] = 1.0;
        b[4] = 0.5;
        let mut pts = Vec::new();
        for center in [a, b] {
            for _ in 0..200 {
                pts.push(center + random_state(&mut rng) * 0.05);
            }
        }
        let opts = EmOptions { components: 2, ..EmOptions::default() };
        let model = fit_em(&single_frame_data(&pts), &names(1), &opts).unwrap();
        let mut found: Vec<StateVector> = model.mu.iter().map(|m| m[0]).collect();
        found.sort_by(|x, y| x[0].total_cmp(&y[0]));
        assert!((found[0] - a).abs().max() < 0.05);
        assert!((found[1] - b).abs().max() < 0.05);
        for w in model.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn duplicated_frame_gives_identical_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_frame(&mut rng);
        let data = FrameData {
            points: (0..120)
                .map(|i| {
                    let mut p = random_state(&mut rng) * 0.1;
                    p[0] = i as f64 / 119.0;
                    vec![f.project(&p), f.project(&p)]
                })
                .collect(),
        };
        let model = fit_em(&data, &names(2), &EmOptions { components: 3, ..EmOptions::default() }).unwrap();
        for k in 0..3 {
            assert!((model.mu[k][0] - model.mu[k][1]).abs().max() < 1e-9);
            assert!((model.sigma[k][0] - model.sigma[k][1]).abs().max() < 1e-9);
        }
    }

    #[test]
    fn too_few_distinct_points_is_degenerate() {
        let p = StateVector::repeat(0.5);
        let data = single_frame_data(&[p, p, p, p]);
        let err = fit_em(&data, &names(1), &EmOptions { components: 2, ..EmOptions::default() }).unwrap_err();
        assert_eq!(err, Error::DegenerateData { distinct: 1, components: 2 });
    }

    fn model_from(priors: Vec<f64>, comps: Vec<Vec<(StateVector, StateMatrix)>>) -> TpgmmModel {
        let j = comps[0].len();
        TpgmmModel {
            priors,
            mu: comps.iter().map(|c| c.iter().map(|g| g.0).collect()).collect(),
            sigma: comps.iter().map(|c| c.iter().map(|g| g.1).collect()).collect(),
            frames: names(j),
            reg: DEFAULT_REG,
            log_likelihood: Vec::new(),
        }
    }

    #[test]
    fn single_identity_frame_is_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let comps = (0..3).map(|_| vec![(random_state(&mut rng), random_spd(&mut rng))]).collect();
        let model = model_from(vec![0.2, 0.3, 0.5], comps);
        let g = combine_frames(&model, &[TaskFrame::identity()]).unwrap();
        for k in 0..3 {
            assert!((g.mu[k] - model.mu[k][0]).abs().max() < 1e-12);
            assert!((g.sigma[k] - model.sigma[k][0]).abs().max() < 1e-12 * model.sigma[k][0].abs().max());
        }
        assert_eq!(g.priors, model.priors);
    }

    #[test]
    fn product_of_equal_gaussians_halves_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (mu, sigma) = (random_state(&mut rng), random_spd(&mut rng));
        let model = model_from(vec![1.0], vec![vec![(mu, sigma), (mu, sigma)]]);
        let g = combine_frames(&model, &[TaskFrame::identity(), TaskFrame::identity()]).unwrap();
        assert!((g.mu[0] - mu).abs().max() < 1e-10);
        assert!((g.sigma[0] - sigma * 0.5).abs().max() < 1e-10);
    }

    #[test]
    fn product_is_commutative_in_frame_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let comps = vec![vec![(random_state(&mut rng), random_spd(&mut rng)), (random_state(&mut rng), random_spd(&mut rng))]];
        let model = model_from(vec![1.0], comps.clone());
        let swapped = model_from(vec![1.0], vec![vec![comps[0][1], comps[0][0]]]);
        let (f1, f2) = (random_frame(&mut rng), random_frame(&mut rng));
        let g = combine_frames(&model, &[f1, f2]).unwrap();
        let h = combine_frames(&swapped, &[f2, f1]).unwrap();
        assert!((g.mu[0] - h.mu[0]).abs().max() < 1e-10);
        assert!((g.sigma[0] - h.sigma[0]).abs().max() < 1e-10);
    }

    #[test]
    fn generic_product_matches_two_dimensional_closed_form() {
        let a = (Vector2::new(0.0, 0.0), Matrix2::new(1.0, 0.0, 0.0, 1.0));
        let b = (Vector2::new(2.0, 0.0), Matrix2::new(1.0, 0.0, 0.0, 3.0));
        let (mu, sigma) = gaussian_product(&[a, b]).unwrap();
        assert!((mu - Vector2::new(1.0, 0.0)).norm() < 1e-14);
        assert!((sigma - Matrix2::new(0.5, 0.0, 0.0, 0.75)).norm() < 1e-14);
    }

    fn block_diag(mu: StateVector, var_t: f64, out: f64) -> (StateVector, StateMatrix) {
        let mut s = StateMatrix::identity() * out;
        s[(0, 0)] = var_t;
        (mu, s)
    }

    #[test]
    fn uncoupled_component_returns_its_mean() {
        let mut mu = StateVector::zeros();
        mu[1] = 0.3;
        mu[2] = -0.2;
        mu[4] = 1.0;
        let model = model_from(vec![1.0], vec![vec![block_diag(mu, 0.1, 0.01)]]);
        let g = combine_frames(&model, &[TaskFrame::identity()]).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let p = gmr_query(&g, t);
            assert!((p.position - Vec3::new(0.3, -0.2, 0.0)).norm() < 1e-15);
            assert!(p.orientation.angle() < 1e-12);
        }
    }

    #[test]
    fn gmr_matches_conditional_mean_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mu, sigma) = (random_state(&mut rng), random_spd(&mut rng));
        let g = GlobalGmm { priors: vec![1.0], mu: vec![mu], sigma: vec![sigma] };
        let t = 0.37;
        // conditional mean via the partitioned inverse of Σ: μ_o − Λ_oo⁻¹ Λ_ot (t − μ_t)
        let lambda = sigma.try_inverse().unwrap();
        let l_oo: SMatrix<f64, 7, 7> = lambda.fixed_view::<7, 7>(1, 1).into_owned();
        let l_ot: SVector<f64, 7> = lambda.fixed_view::<7, 1>(1, 0).into_owned();
        let expected = mu.fixed_rows::<7>(1) - l_oo.try_inverse().unwrap() * l_ot * (t - mu[0]);
        let p = gmr_query(&g, t);
        assert!((p.position - expected.fixed_rows::<3>(0)).norm() < 1e-10);
        let q = expected.fixed_rows::<4>(3).normalize();
        let got = crate::quat::wxyz_vector(&p.orientation);
        assert!((got - q).norm() < 1e-10);
    }

    #[test]
    fn mirrored_components_meet_in_the_middle() {
        let mut a = StateVector::zeros();
        a[0] = 0.2;
        a[1] = -0.4;
        a[4] = 1.0;
        let mut b = a;
        b[0] = 0.8;
        b[1] = 0.6;
        let model = model_from(vec![0.5, 0.5], vec![vec![block_diag(a, 0.02, 0.01)], vec![block_diag(b, 0.02, 0.01)]]);
        let g = combine_frames(&model, &[TaskFrame::identity()]).unwrap();
        let p = gmr_query(&g, 0.5);
        assert!((p.position.x - 0.1).abs() < 1e-9);
    }

    #[test]
    fn generated_quaternions_are_unit_and_endpoints_match_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let comps = (0..2).map(|_| vec![(random_state(&mut rng), random_spd(&mut rng))]).collect();
        let model = model_from(vec![0.4, 0.6], comps);
        let traj = generate_trajectory(&model, &[TaskFrame::identity()], 2).unwrap();
        let g = combine_frames(&model, &[TaskFrame::identity()]).unwrap();
        assert_eq!(traj, vec![gmr_query(&g, 0.0), gmr_query(&g, 1.0)]);
        let traj = generate_trajectory(&model, &[TaskFrame::identity()], 50).unwrap();
        assert!(traj.iter().all(|p| (p.orientation.quaternion().norm() - 1.0).abs() < 1e-9));
        assert!(generate_trajectory(&model, &[TaskFrame::identity()], 1).is_err());
    }

    #[test]
    fn mismatched_frame_count_is_rejected() {
        let model = model_from(vec![1.0], vec![vec![block_diag(StateVector::zeros(), 1.0, 1.0)]]);
        assert!(combine_frames(&model, &[TaskFrame::identity(), TaskFrame::identity()]).is_err());
    }
}
