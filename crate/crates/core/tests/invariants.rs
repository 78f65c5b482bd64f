//! Property-based invariants over the public API surface.

use artopen::artiest::mix_alpha;
use artopen::geometry::{gripper_handle_angle, wrap_angle, Cuboid, Pose};
use artopen::policy::reward::{compute_reward, RewardConfig, RewardInput};
use artopen::safe::ShapeFeature;
use artopen::sim::ACTION_DIM;
use nalgebra::{Unit, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quat(roll: f64, pitch: f64, yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(roll, pitch, yaw)
}

prop_compose! {
    fn arb_axis()(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64)
        -> Option<Unit<Vector3<f64>>>
    {
        Unit::try_new(Vector3::new(x, y, z), 1e-6)
    }
}

proptest! {
    /// The handle's long axis is undirected: negating it cannot change the
    /// measured misalignment, and the folded angle stays in [0, pi/2].
    #[test]
    fn alignment_angle_folds_axis_sign(
        roll in -3.2..3.2f64, pitch in -1.5..1.5f64, yaw in -3.2..3.2f64,
        axis in arb_axis(),
    ) {
        prop_assume!(axis.is_some());
        let axis = axis.unwrap();
        let q = quat(roll, pitch, yaw);
        let a = gripper_handle_angle(&q, &axis);
        let b = gripper_handle_angle(&q, &Unit::new_normalize(-axis.into_inner()));
        prop_assert!((a - b).abs() < 1e-12, "fold broke: {a} vs {b}");
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&a));
    }

    /// The blended estimate is a per-dimension convex combination: exact at
    /// the endpoints, inside the [ext, prop] interval everywhere else.
    #[test]
    fn mixture_is_convex_per_dimension(
        e0 in -10.0..10.0f64, e1 in -10.0..10.0f64, e2 in -10.0..10.0f64,
        p0 in -10.0..10.0f64, p1 in -10.0..10.0f64, p2 in -10.0..10.0f64,
        gamma in 0.0..=1.0f64,
    ) {
        let e = [e0, e1, e2];
        let p = [p0, p1, p2];
        prop_assert_eq!(mix_alpha(&e, &p, 0.0), e);
        prop_assert_eq!(mix_alpha(&e, &p, 1.0), p);
        let m = mix_alpha(&e, &p, gamma);
        for d in 0..3 {
            let (lo, hi) = (e[d].min(p[d]), e[d].max(p[d]));
            prop_assert!((lo - 1e-12..=hi + 1e-12).contains(&m[d]),
                "dim {d}: {} outside [{lo}, {hi}]", m[d]);
        }
    }

    /// Reward terms carry their defined signs, the total is their sum, and
    /// a zero success average switches every action penalty hard off.
    #[test]
    fn reward_signs_and_total(
        xi in 0.0..=1.0f64,
        ex in -1.0..2.0f64, ey in -1.0..1.0f64, ez in 0.0..2.0f64,
        angle in 0.0..1.57f64,
        grasped in any::<bool>(),
        collision in any::<bool>(),
        lambda in 0.0..=1.0f64,
        c in -1.0..1.0f64, pc in -1.0..1.0f64, ppc in -1.0..1.0f64,
    ) {
        let cfg = RewardConfig::default();
        let input = RewardInput {
            xi_norm: xi,
            ee_pos: Vector3::new(ex, ey, ez),
            handle_pos: Vector3::new(1.0, 0.0, 1.0),
            align_angle: angle,
            grasped,
            collision,
            cmd: [c; ACTION_DIM],
            prev_cmd: [pc; ACTION_DIM],
            prev_prev_cmd: [ppc; ACTION_DIM],
            lambda,
        };
        let terms = compute_reward(&input, &cfg);
        let arr = terms.as_array();
        prop_assert!(arr.iter().all(|v| v.is_finite()));
        // Positive shaping terms and negative penalties by construction.
        prop_assert!(terms.opening >= 0.0 && terms.approach >= 0.0);
        prop_assert!(terms.alignment >= 0.0 && terms.grasping >= 0.0);
        prop_assert!(terms.cmd_rate <= 0.0 && terms.ee_cmd_rate <= 0.0);
        prop_assert!(terms.cmd_smooth <= 0.0 && terms.collision <= 0.0);
        let sum: f64 = arr.iter().sum();
        prop_assert_eq!(terms.total(), sum);
        if lambda == 0.0 {
            prop_assert_eq!(terms.cmd_rate, 0.0);
            prop_assert_eq!(terms.ee_cmd_rate, 0.0);
            prop_assert_eq!(terms.cmd_smooth, 0.0);
        }
    }

    /// Captured shape features hold interior points in nondecreasing order
    /// along the capture-time lateral axis.
    #[test]
    fn shape_features_stay_inside_and_sorted(
        px in -1.0..1.0f64, py in -1.0..1.0f64, pz in 0.0..2.0f64,
        roll in -3.0..3.0f64, pitch in -1.5..1.5f64, yaw in -3.0..3.0f64,
        hx in 0.01..0.5f64, hy in 0.01..0.5f64, hz in 0.01..0.5f64,
        seed in 0..u64::MAX,
    ) {
        let pose = Pose::new(Vector3::new(px, py, pz), quat(roll, pitch, yaw));
        let cuboid = Cuboid::new(pose, Vector3::new(hx, hy, hz)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feature = ShapeFeature::capture(&cuboid, 8, &mut rng);
        let axis = cuboid.world_axis(cuboid.lateral_axis_index()).into_inner();
        let mut prev = f64::NEG_INFINITY;
        for p in feature.points() {
            prop_assert!(cuboid.contains(p), "{p:?} escaped the cuboid");
            let t = p.dot(&axis);
            prop_assert!(t >= prev, "sort order broken: {t} after {prev}");
            prev = t;
        }
        prop_assert_eq!(feature.feature_dim(), 24);
    }

    /// Angle wrapping lands in (-pi, pi] and is 2-pi periodic.
    #[test]
    fn wrap_angle_is_canonical(a in -50.0..50.0f64, k in -3i32..=3) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        let shifted = wrap_angle(a + k as f64 * std::f64::consts::TAU);
        prop_assert!((w - shifted).abs() < 1e-7, "{w} vs {shifted} (k={k})");
    }
}
