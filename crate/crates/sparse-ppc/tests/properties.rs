//! Property tests over the public API.

use proptest::prelude::*;

use sparse_ppc::controllers::{solve_l0_omp, synthesize_l0, OMP_FEASIBILITY_SLACK};
use sparse_ppc::model::{
    build_lifted, predict_states, sample_disturbance, DisturbanceMode, PlantModel,
};
use sparse_ppc::numerics::{norm2, sigma_max, Mat, SymMatrix};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn planar_plant(entries: [f64; 4], b: [f64; 2]) -> Option<PlantModel> {
    let a = Mat::from_rows(&[vec![entries[0], entries[1]], vec![entries[2], entries[3]]]);
    PlantModel::new(a, Mat::column(&b), 0.0, DisturbanceMode::None).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifted_identity_matches_rollout(
        a in proptest::array::uniform4(-1.2f64..1.2),
        b in proptest::array::uniform2(-2.0f64..2.0),
        x in proptest::array::uniform2(-5.0f64..5.0),
        u in proptest::collection::vec(-3.0f64..3.0, 5),
    ) {
        let Some(plant) = planar_plant(a, b) else { return Ok(()) };
        let q = SymMatrix::identity(2);
        let p = SymMatrix::from_diag(&[2.0, 0.5]);
        let Ok(lifted) = build_lifted(&plant, 5, &q, &p) else { return Ok(()) };

        // Stacked nominal predictions equal ΓU + Λx entrywise.
        let preds = predict_states(&plant, &x, &u);
        let stacked: Vec<f64> = preds.iter().flatten().copied().collect();
        let mut expect = lifted.gamma().matvec(&u);
        for (e, l) in expect.iter_mut().zip(lifted.lambda().matvec(&x)) {
            *e += l;
        }
        for (s, e) in stacked.iter().zip(&expect) {
            prop_assert!((s - e).abs() <= 1e-12 * e.abs().max(1.0));
        }

        // The weighted residual reproduces the stage-cost rollout.
        let cost = lifted.prediction_cost(&x, &u);
        let mut rollout = 0.0;
        for (i, state) in preds.iter().enumerate() {
            rollout += if i < 4 { q.quad_form(state) } else { p.quad_form(state) };
        }
        prop_assert!((cost - rollout).abs() <= 1e-10 * rollout.max(1.0));
    }

    #[test]
    fn omp_packets_always_feasible(
        x in proptest::array::uniform4(-20.0f64..20.0),
    ) {
        let plant = PlantModel::paper_example(0.0, DisturbanceMode::None).unwrap();
        let design = synthesize_l0(&plant, 10, &SymMatrix::identity(4), None).unwrap();
        let (packet, report) = solve_l0_omp(&design, &x, 0).unwrap();
        prop_assert!(report.support_size <= 10);
        let cost = design.lifted().prediction_cost(&x, packet.inputs());
        let budget = design.pi().quad_form(&x);
        prop_assert!(cost <= budget + OMP_FEASIBILITY_SLACK * (1.0 + budget));
    }

    #[test]
    fn spectral_norm_is_subadditive(
        a in proptest::collection::vec(-4.0f64..4.0, 12),
        b in proptest::collection::vec(-4.0f64..4.0, 12),
    ) {
        let ma = Mat::from_vec(4, 3, a);
        let mb = Mat::from_vec(4, 3, b);
        let lhs = sigma_max(&(&ma + &mb)).unwrap();
        let rhs = sigma_max(&ma).unwrap() + sigma_max(&mb).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * rhs.max(1.0));
    }

    #[test]
    fn disturbances_stay_in_support(w_m in 0.0f64..5.0, seed in any::<u64>()) {
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![0.2, 0.1]]);
        let b = Mat::column(&[0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let ball = PlantModel::new(a.clone(), b.clone(), w_m, DisturbanceMode::L2BallUniform)
            .unwrap();
        for _ in 0..50 {
            prop_assert!(norm2(&sample_disturbance(&ball, &mut rng)) <= w_m + 1e-12);
        }

        let per = PlantModel::new(a, b, w_m, DisturbanceMode::PerComponentUniform).unwrap();
        for _ in 0..50 {
            let w = sample_disturbance(&per, &mut rng);
            prop_assert!(w.iter().all(|v| v.abs() <= w_m + 1e-12));
        }
    }
}
