use lfdq_core::clik::{null_projector, sr_inverse};
use lfdq_core::demonstrations::{dtw_align, DemoMeta, DemoSet, Demonstration, FaceId, JointSample};
use lfdq_core::geometry::Capsule;
use lfdq_core::kinematics::{Jacobian, JointConfig, KinematicChain, Pose};
use lfdq_core::quat::orientation_error;
use lfdq_core::tpgmm::{gaussian_product, TaskFrame};
use lfdq_core::{Quat, Vec3, DOF};
use nalgebra::{Matrix2, SMatrix, UnitQuaternion, Vector2, Vector3};
use proptest::prelude::*;

fn config_in_limits(chain: &KinematicChain) -> impl Strategy<Value = JointConfig> {
    let limits = *chain.limits();
    proptest::collection::vec(0.0..1.0f64, DOF).prop_map(move |u| {
        let mut q = [0.0; DOF];
        for i in 0..DOF {
            q[i] = limits[i].0 + u[i] * (limits[i].1 - limits[i].0);
        }
        JointConfig(q)
    })
}

fn matrix6x7() -> impl Strategy<Value = Jacobian> {
    proptest::collection::vec(-1.0..1.0f64, 42).prop_map(|v| Jacobian::from_row_slice(&v))
}

fn spd2() -> impl Strategy<Value = Matrix2<f64>> {
    (0.2..2.0f64, 0.2..2.0f64, -0.8..0.8f64).prop_map(|(a, b, c)| {
        let l = Matrix2::new(a, 0.0, c, b);
        l * l.transpose()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobian_matches_central_differences(q in config_in_limits(&KinematicChain::reference())) {
        let chain = KinematicChain::reference();
        let jac = chain.jacobian(&q);
        let h = 1e-6;
        for i in 0..DOF {
            let (mut qp, mut qm) = (q, q);
            qp.0[i] += h;
            qm.0[i] -= h;
            let (pp, pm) = (chain.forward_kinematics(&qp), chain.forward_kinematics(&qm));
            let lin = (pp.position - pm.position) / (2.0 * h);
            let ang = (pp.orientation * pm.orientation.inverse()).scaled_axis() / (2.0 * h);
            for r in 0..3 {
                prop_assert!((jac[(r, i)] - lin[r]).abs() < 1e-5);
                prop_assert!((jac[(r + 3, i)] - ang[r]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn forward_kinematics_gives_unit_quaternions(q in config_in_limits(&KinematicChain::reference())) {
        let pose = KinematicChain::reference().forward_kinematics(&q);
        prop_assert!((pose.orientation.quaternion().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_projector_annihilates_the_jacobian(jac in matrix6x7()) {
        prop_assume!(jac.svd(false, false).singular_values.min() > 1e-3);
        let n = null_projector(&jac);
        prop_assert!((jac * n).norm() <= 1e-8);
        prop_assert!((n * n - n).abs().max() <= 1e-10);
    }

    #[test]
    fn undamped_sr_inverse_is_the_pseudoinverse(jac in matrix6x7()) {
        prop_assume!(jac.svd(false, false).singular_values.min() > 1e-2);
        let ours = sr_inverse(&jac, 0.0).unwrap();
        let oracle: SMatrix<f64, DOF, 6> = jac.pseudo_inverse(1e-12).unwrap();
        prop_assert!((ours - oracle).abs().max() < 1e-8);
    }

    #[test]
    fn frame_projection_round_trips(
        t in 0.0..1.0f64,
        p in proptest::array::uniform3(-1.0..1.0f64),
        axis in proptest::array::uniform3(-1.0..1.0f64),
        origin in proptest::array::uniform3(-1.0..1.0f64),
    ) {
        let rot = UnitQuaternion::from_scaled_axis(Vector3::from(axis));
        let frame = TaskFrame::from_pose(&Pose::new(Vec3::from(origin), rot));
        let q: Quat = UnitQuaternion::from_scaled_axis(Vector3::new(axis[2], axis[0], axis[1]));
        let point = lfdq_core::demonstrations::StatePoint::new(t, Vec3::from(p), q);
        let v = point.to_vector();
        prop_assert!((frame.unproject(&frame.project(&v)) - v).abs().max() < 1e-12);
    }

    #[test]
    fn product_of_two_dimensional_gaussians_is_symmetric(
        m1 in proptest::array::uniform2(-1.0..1.0f64), s1 in spd2(),
        m2 in proptest::array::uniform2(-1.0..1.0f64), s2 in spd2(),
    ) {
        let a = (Vector2::from(m1), s1);
        let b = (Vector2::from(m2), s2);
        let (mu_ab, sig_ab) = gaussian_product(&[a, b]).unwrap();
        let (mu_ba, sig_ba) = gaussian_product(&[b, a]).unwrap();
        prop_assert!((mu_ab - mu_ba).abs().max() < 1e-12);
        prop_assert!((sig_ab - sig_ba).abs().max() < 1e-12);
        // the product is never wider than either factor
        prop_assert!(sig_ab.determinant() <= s1.determinant().min(s2.determinant()) + 1e-12);
    }

    #[test]
    fn capsule_distance_is_symmetric(
        a in proptest::array::uniform3(-1.0..1.0f64), b in proptest::array::uniform3(-1.0..1.0f64),
        c in proptest::array::uniform3(-1.0..1.0f64), d in proptest::array::uniform3(-1.0..1.0f64),
    ) {
        let x = Capsule::new(Vec3::from(a), Vec3::from(b), 0.05);
        let y = Capsule::new(Vec3::from(c), Vec3::from(d), 0.02);
        prop_assert!((x.distance(&y) - y.distance(&x)).abs() < 1e-12);
    }

    #[test]
    fn orientation_error_vanishes_for_equal_orientations(axis in proptest::array::uniform3(-2.0..2.0f64)) {
        let q = UnitQuaternion::from_scaled_axis(Vector3::from(axis));
        prop_assert!(orientation_error(&q, &q).norm() < 1e-12);
    }
}

fn wobbly_demo(chain: &KinematicChain, phase: f64, len: usize, target_id: usize) -> Demonstration {
    let q0 = chain.start_config();
    let samples = (0..len)
        .map(|i| {
            let s = i as f64 / (len - 1) as f64;
            let mut q = q0;
            q.0[0] += 0.4 * (s + 0.05 * (6.0 * s + phase).sin());
            q.0[1] += 0.3 * s * s;
            JointSample { t: 0.05 * i as f64, q }
        })
        .collect();
    let meta = DemoMeta {
        target_id,
        face: FaceId::Low,
        session: 1,
        trial: 1,
        demonstrator: "p01".into(),
    };
    Demonstration::from_joints(chain, samples, meta).unwrap()
}

#[test]
fn alignment_is_idempotent() {
    let chain = KinematicChain::reference();
    let set = DemoSet::new(vec![
        wobbly_demo(&chain, 0.0, 80, 0),
        wobbly_demo(&chain, 1.0, 120, 1),
        wobbly_demo(&chain, 2.0, 95, 2),
    ]);
    let once = dtw_align(&set, 100).unwrap();
    assert!(once.is_phase_aligned(100));
    let twice = dtw_align(&once, 100).unwrap();
    assert_eq!(once, twice);
    for (demo, orig) in once.demos.iter().zip(&set.demos) {
        assert_eq!(demo.meta, orig.meta);
        assert_eq!(demo.joint_traj[0].q, orig.joint_traj[0].q);
        assert_eq!(demo.joint_traj.last().unwrap().q, orig.joint_traj.last().unwrap().q);
    }
}
