use fbd_core::benchmark::{random_forward_input, random_motion};
use fbd_core::tilthex::{build_tilthex, TiltHexParams};
use fbd_core::{forward_kinematics, hgabi, hgrne, LoadInput, PropellerWrench, RobotModel, Twist, Wrench};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(gravity: f64) -> RobotModel {
    build_tilthex(&TiltHexParams {
        gravity,
        ..TiltHexParams::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_dynamics_of_forward_result_reproduces_inputs(seed in any::<u64>(), r in 0usize..4) {
        let m = model(9.81);
        let input = random_forward_input(&m, r, &mut ChaCha8Rng::seed_from_u64(seed));
        let fd = hgabi(&m, &input, r).unwrap();
        let id = hgrne(&m, &fd.cache, &LoadInput::none(&m), r).unwrap();
        let PropellerWrench::Spatial(w) = &input.propeller else { unreachable!() };
        for k in 0..=r {
            prop_assert!((id.base_wrench[k] - w[k]).amax() < 1e-9);
            for j in 0..6 {
                prop_assert!((id.tau.get(j, k) - input.tau[j][k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rest_velocity_gives_no_order_one_bias(seed in any::<u64>()) {
        // Zero joint and base velocities give zero bias terms at order 1.
        let m = model(9.81);
        let mut motion = random_motion(&m, 2, &mut ChaCha8Rng::seed_from_u64(seed));
        motion.base_twist[0] = Twist::zeros();
        for q in &mut motion.joints {
            q[1] = 0.0;
        }
        let cache = forward_kinematics(&m, &motion, 1).unwrap();
        for j in 0..m.n_bodies() {
            prop_assert!(cache.bias_momentum(j, 1).amax() < 1e-12);
            prop_assert!(cache.inertia(j, 1).amax() < 1e-12);
        }
    }
}

/// Without gravity, torques or thrust the kinetic energy is conserved:
/// `d/dt ½ΣVᵀMV = Σ(VᵀMV̇ + ½VᵀṀV) = 0` with `V̇` from forward dynamics.
#[test]
fn free_motion_conserves_kinetic_energy() {
    let m = model(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut input = random_forward_input(&m, 0, &mut rng);
        input.propeller = PropellerWrench::Spatial(vec![Wrench::zeros()]);
        input.tau = vec![vec![0.0]; 6];
        let fd = hgabi(&m, &input, 0).unwrap();
        let (mut power, mut energy) = (0.0, 0.0);
        for j in 0..m.n_bodies() {
            let v = fd.cache.twist(j, 0);
            let mv = fd.cache.inertia(j, 0) * v;
            power += mv.dot(&fd.cache.twist(j, 1)) + 0.5 * v.dot(&(fd.cache.inertia(j, 1) * v));
            energy += 0.5 * v.dot(&mv);
        }
        assert!(power.abs() < 1e-12 * (1.0 + energy), "power {power}");
    }
}
