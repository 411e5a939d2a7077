use fbd_core::benchmark::random_motion;
use fbd_core::closed_form::{assemble_operators, eom_order0, eom_order1, skew_defect};
use fbd_core::inverse::{hgrne, LoadInput, WrenchFrame};
use fbd_core::kinematics::forward_kinematics;
use fbd_core::tilthex::{build_tilthex, TiltHexParams};
use fbd_core::Wrench;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_loads(n: usize, frame: WrenchFrame, rng: &mut impl Rng) -> LoadInput {
    LoadInput {
        frame,
        applied: (0..n)
            .map(|_| (0..2).map(|_| Wrench::from_fn(|_, _| rng.random_range(-1.0..=1.0))).collect())
            .collect(),
        tau_ext: Vec::new(),
    }
}

#[test]
fn closed_form_matches_recursive_inverse_dynamics() {
    let model = build_tilthex(&TiltHexParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let motion = random_motion(&model, 3, &mut rng);
        let frame = if case % 2 == 0 { WrenchFrame::Body } else { WrenchFrame::Spatial };
        let loads = random_loads(model.n_bodies(), frame, &mut rng);
        let cache = forward_kinematics(&model, &motion, 1).unwrap();
        let id = hgrne(&model, &cache, &loads, 1).unwrap();
        let ops = assemble_operators(&model, &cache).unwrap();
        let expected = |k: usize| {
            let mut v = DVector::zeros(12);
            v.rows_mut(0, 6).copy_from(&id.base_wrench[k]);
            for j in 0..6 {
                v[6 + j] = id.generalized.get(j, k);
            }
            v
        };
        let r0 = eom_order0(&model, &cache, &ops, &loads).unwrap().residual(&ops.nudot);
        let e0 = expected(0);
        assert!((&r0 - &e0).amax() <= 1e-10 * (1.0 + e0.norm()), "case {case}: {}", (&r0 - &e0).amax());
        let r1 = eom_order1(&model, &cache, &ops, &loads).unwrap().residual(&ops.nuddot);
        let e1 = expected(1);
        assert!((&r1 - &e1).amax() <= 1e-10 * (1.0 + e1.norm()), "case {case}: {}", (&r1 - &e1).amax());
    }
}

#[test]
fn coriolis_matrix_is_admissible() {
    let model = build_tilthex(&TiltHexParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let cache = forward_kinematics(&model, &random_motion(&model, 3, &mut rng), 1).unwrap();
        let ops = assemble_operators(&model, &cache).unwrap();
        assert!(skew_defect(&ops) <= 1e-9);
    }
}

#[test]
fn mass_matrix_is_symmetric_positive_definite() {
    let model = build_tilthex(&TiltHexParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cache = forward_kinematics(&model, &random_motion(&model, 3, &mut rng), 1).unwrap();
    let ops = assemble_operators(&model, &cache).unwrap();
    let mbar = eom_order0(&model, &cache, &ops, &LoadInput::none(&model)).unwrap().mbar;
    assert!((&mbar - mbar.transpose()).amax() < 1e-14);
    assert!(mbar.cholesky().is_some());
}
