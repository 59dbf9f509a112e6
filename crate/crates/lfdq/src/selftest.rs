//! Oracle checks run by `lfdq selftest`: each compares a library routine
//! against an independent computation on seeded random cases.

use std::f64::consts::PI;
use std::time::Instant;

use lfdq_core::assessment::{classify_quality, evaluate_trial, pearson, EvalParams, QualityLabel};
use lfdq_core::clik::{null_projector, track_trajectory, ClikParams};
use lfdq_core::demonstrations::{FaceId, StatePoint};
use lfdq_core::kinematics::{Jacobian, JointConfig, KinematicChain};
use lfdq_core::nalgebra::{Matrix2, Vector2};
use lfdq_core::quat::angle_between;
use lfdq_core::synthcohort::{
    generate_demonstrator, plan_all_references, Demonstrator, DemonstratorProfile, Group, PlannerConfig,
};
use lfdq_core::taskworld::TaskWorld;
use lfdq_core::tpgmm::gaussian_product;
use lfdq_core::DOF;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demo::DemoFile;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Runs every check on the given setup.
pub fn run(chain: &KinematicChain, world: &TaskWorld) -> Vec<Check> {
    vec![
        jacobian_vs_differences(chain),
        null_space_contract(),
        gaussian_product_vs_grid(),
        pearson_formula(),
        threshold_semantics(),
        clik_convergence(chain),
        demo_round_trip(chain),
        clean_trial(chain, world),
    ]
}

pub fn random_config(chain: &KinematicChain, rng: &mut impl Rng) -> JointConfig {
    let mut q = [0.0; DOF];
    for (v, &(lo, hi)) in q.iter_mut().zip(chain.limits()) {
        *v = rng.random_range(lo..hi);
    }
    JointConfig(q)
}

fn jacobian_vs_differences(chain: &KinematicChain) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = random_config(chain, &mut rng);
        let jac = chain.jacobian(&q);
        for i in 0..DOF {
            let (mut qp, mut qm) = (q, q);
            qp.0[i] += h;
            qm.0[i] -= h;
            let (p, m) = (chain.forward_kinematics(&qp), chain.forward_kinematics(&qm));
            let lin = (p.position - m.position) / (2.0 * h);
            let ang = (p.orientation * m.orientation.inverse()).scaled_axis() / (2.0 * h);
            for r in 0..3 {
                worst = worst.max((jac[(r, i)] - lin[r]).abs()).max((jac[(r + 3, i)] - ang[r]).abs());
            }
        }
    }
    Check::new("jacobian_vs_finite_differences", worst <= 1e-5, format!("max error {worst:.2e}"))
}

fn null_space_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut annihilation, mut idempotence): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let jac = Jacobian::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = null_projector(&jac);
        annihilation = annihilation.max((jac * n).norm());
        idempotence = idempotence.max((n * n - n).abs().max());
    }
    Check::new(
        "null_space_projector",
        annihilation <= 1e-8 && idempotence <= 1e-10,
        format!("|J N| {annihilation:.2e}, |N N - N| {idempotence:.2e}"),
    )
}

fn density(x: &Vector2<f64>, mu: &Vector2<f64>, sigma: &Matrix2<f64>) -> f64 {
    let d = x - mu;
    let det = sigma.determinant();
    let inv = Matrix2::new(sigma[(1, 1)], -sigma[(0, 1)], -sigma[(1, 0)], sigma[(0, 0)]) / det;
    (-0.5 * d.dot(&(inv * d))).exp() / (2.0 * PI * det.sqrt())
}

pub fn random_spd2(rng: &mut impl Rng) -> Matrix2<f64> {
    let angle = rng.random_range(0.0..PI);
    let (s, c) = angle.sin_cos();
    let r = Matrix2::new(c, -s, s, c);
    let d = Matrix2::new(rng.random_range(0.3..2.0), 0.0, 0.0, rng.random_range(0.3..2.0));
    r * d * r.transpose()
}

/// Largest relative error between the Gaussian product and the normalized
/// pointwise product of the factor densities on a grid.
pub fn product_grid_error(a: (Vector2<f64>, Matrix2<f64>), b: (Vector2<f64>, Matrix2<f64>), n: usize) -> f64 {
    let (mu, sigma) = gaussian_product(&[a, b]).expect("SPD factors");
    let spread = a.1.trace().max(b.1.trace()).sqrt();
    let center = (a.0 + b.0) * 0.5;
    let half = 8.0 * spread + (a.0 - b.0).norm() * 0.5;
    let h = 2.0 * half / (n - 1) as f64;
    let mut raw = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = center + Vector2::new(-half + h * i as f64, -half + h * j as f64);
            raw.push((x, density(&x, &a.0, &a.1) * density(&x, &b.0, &b.1)));
        }
    }
    let mass: f64 = raw.iter().map(|(_, p)| p).sum::<f64>() * h * h;
    raw.iter()
        .filter_map(|(x, p)| {
            let exact = density(x, &mu, &sigma);
            (exact > 1e-200).then(|| (p / mass - exact).abs() / exact)
        })
        .fold(0.0, f64::max)
}

fn gaussian_product_vs_grid() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut part = || {
            let mu = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (mu, random_spd2(&mut rng))
        };
        let (a, b) = (part(), part());
        worst = worst.max(product_grid_error(a, b, 301));
    }
    Check::new("gaussian_product_vs_grid", worst <= 1e-6, format!("max relative error {worst:.2e}"))
}

fn pearson_formula() -> Check {
    let x = [0.2, 0.5, 0.9];
    let y = [0.3, 0.4, 0.95];
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let oracle = sxy / (sxx * syy).sqrt();
    match pearson(&x, &y) {
        Ok(r) => Check::new("pearson_formula", (r - oracle).abs() <= 1e-12, format!("rho {r:.6}, oracle {oracle:.6}")),
        Err(e) => Check::new("pearson_formula", false, e.to_string()),
    }
}

fn threshold_semantics() -> Check {
    let cases = [(0.80, QualityLabel::Low), (0.90, QualityLabel::High), (0.49, QualityLabel::Low)];
    let ok = cases.iter().all(|&(rate, label)| classify_quality(rate, 0.8) == label);
    Check::new("threshold_semantics", ok, "0.80 low, 0.90 high, 0.49 low at delta 0.8".into())
}

/// Cartesian reach from the pose at `from` to the pose at `to`: eased
/// straight line in position, slerp in orientation.
pub fn straight_reach(chain: &KinematicChain, from: &JointConfig, to: &JointConfig, samples: usize, dt: f64) -> Vec<StatePoint> {
    let (a, b) = (chain.forward_kinematics(from), chain.forward_kinematics(to));
    (0..samples)
        .map(|k| {
            let s = k as f64 / (samples - 1) as f64;
            let e = s * s * (3.0 - 2.0 * s);
            StatePoint::new(
                k as f64 * dt,
                a.position.lerp(&b.position, e),
                a.orientation.slerp(&b.orientation, e),
            )
        })
        .collect()
}

/// A goal configuration near the start configuration, away from the limits.
pub fn nearby_goal(chain: &KinematicChain, rng: &mut impl Rng) -> JointConfig {
    let mut q = chain.start_config();
    for (v, &(lo, hi)) in q.0.iter_mut().zip(chain.limits()) {
        *v = (*v + rng.random_range(-0.3..0.3)).clamp(lo + 0.15, hi - 0.15);
    }
    q
}

fn clik_convergence(chain: &KinematicChain) -> Check {
    let params = ClikParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = chain.start_config();
    let (mut pos, mut ang): (f64, f64) = (0.0, 0.0);
    let mut failed = 0;
    for _ in 0..5 {
        let goal = nearby_goal(chain, &mut rng);
        let cart = straight_reach(chain, &start, &goal, 60, params.dt);
        match track_trajectory(chain, &start, &cart, &[start], &params) {
            Ok(traj) if traj.feasible => {
                let last = traj.samples.last().expect("feasible tracking has samples");
                let reached = chain.forward_kinematics(&last.q);
                let target = cart.last().expect("non-empty reach");
                pos = pos.max((reached.position - target.position).norm());
                ang = ang.max(angle_between(&reached.orientation, &target.orientation));
            }
            _ => failed += 1,
        }
    }
    let mut far = straight_reach(chain, &start, &start, 60, params.dt);
    for (k, s) in far.iter_mut().enumerate() {
        s.position.x += 2.0 * k as f64 / 59.0;
    }
    let unreachable = matches!(track_trajectory(chain, &start, &far, &[start], &params), Ok(t) if !t.feasible);
    Check::new(
        "clik_convergence",
        failed == 0 && pos <= 0.002 && ang <= 1f64.to_radians() && unreachable,
        format!("{failed} failed, max position error {pos:.2e} m, max angle error {ang:.2e} rad, unreachable rejected: {unreachable}"),
    )
}

fn demo_round_trip(chain: &KinematicChain) -> Check {
    let world = TaskWorld::reference();
    let cfg = PlannerConfig::default();
    let result = plan_all_references(chain, &world, &cfg).and_then(|refs| {
        let who = Demonstrator {
            name: "p01".into(),
            group: Group::Slow,
            profile: DemonstratorProfile::slow_default(),
        };
        generate_demonstrator(chain, &world, &refs, &who, 5, &cfg)
    });
    let demo = match result {
        Ok(trials) => trials[0].set.demos[0].clone(),
        Err(e) => return Check::new("demo_round_trip", false, e.to_string()),
    };
    let text = serde_json::to_string(&DemoFile::from_demo(&demo)).expect("demo serializes");
    let back = serde_json::from_str::<DemoFile>(&text)
        .map_err(|e| e.to_string())
        .and_then(|f| f.to_demo(chain, std::path::Path::new("<memory>")).map_err(|e| e.to_string()));
    match back {
        Ok(d) => Check::new("demo_round_trip", d == demo, format!("{} samples", demo.len())),
        Err(e) => Check::new("demo_round_trip", false, e),
    }
}

fn clean_trial(chain: &KinematicChain, world: &TaskWorld) -> Check {
    let started = Instant::now();
    let cfg = PlannerConfig::default();
    let who = Demonstrator {
        name: "p01".into(),
        group: Group::Fast,
        profile: DemonstratorProfile::zero(),
    };
    let trials = plan_all_references(chain, world, &cfg).and_then(|refs| generate_demonstrator(chain, world, &refs, &who, 1, &cfg));
    let trial = match trials {
        Ok(t) => t.into_iter().find(|t| t.key.face == FaceId::Low).expect("low-face trial"),
        Err(e) => return Check::new("clean_low_face_trial", false, e.to_string()),
    };
    match evaluate_trial(chain, world, &trial.set, FaceId::Low, &EvalParams::default()) {
        Ok(r) => Check::new(
            "clean_low_face_trial",
            r.task_rate == 1.0 && r.gen_rate >= 45.0 / 49.0,
            format!("task {:.3}, generalization {:.3} in {:.1?}", r.task_rate, r.gen_rate, started.elapsed()),
        ),
        Err(e) => Check::new("clean_low_face_trial", false, e.to_string()),
    }
}
