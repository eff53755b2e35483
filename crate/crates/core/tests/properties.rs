//! Property tests across the public API.

use std::f64::consts::PI;

use hybrid_core::ecp::{branch_average, run_ecp, success_probability_closed_form, AngleParams, ECPParams, PipelineMode};
use hybrid_core::exec::Execution;
use hybrid_core::hqis::{hierarchy_witness, run_protocol, InputSecret, ProtocolConfig, Recoverer, SecretChoice};
use hybrid_core::optics::FidelityMode;
use hybrid_core::sweep::{sweep_with, to_csv, Axis, SweepParam, SweepSpec};
use hybrid_core::C64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ECPParams> {
    (prop::array::uniform4(-1.0f64..1.0), 0.3f64..3.0)
        .prop_filter("well away from zero", |(c, _)| c.iter().all(|x| x.abs() > 1e-3))
        .prop_map(|(c, a)| {
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            ECPParams::new(c[0] / n, c[1] / n, c[2] / n, c[3] / n, a).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ideal_pipeline_reproduces_the_closed_form(p in params()) {
        let r = run_ecp(&p, FidelityMode::Ideal, None).unwrap();
        prop_assert!((r.success_probability_ideal - success_probability_closed_form(&p)).abs() < 1e-10);
        prop_assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn parity_corrected_branches_equal_the_ideal_output(p in params()) {
        let mode = PipelineMode { vacuum: FidelityMode::Ideal, parity: FidelityMode::Exact };
        let b = branch_average(&p, mode).unwrap();
        prop_assert!(b.min_fidelity > 1.0 - 1e-10);
        let weights: f64 = b.leaves.iter().map(|l| l.parity_weight).sum();
        prop_assert!((weights - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_mode_probabilities_are_physical(p in params()) {
        let b = branch_average(&p, PipelineMode::EXACT).unwrap();
        prop_assert!(b.success_probability >= 0.0 && b.success_probability <= 1.0 + 1e-12);
        prop_assert!(b.mean_fidelity <= 1.0 + 1e-12);
    }

    #[test]
    fn angle_params_are_normalized(t1 in 0.0..PI, t2 in 0.0..PI, t3 in 0.0..PI) {
        let c = AngleParams::new(t1, t2, t3).coefficients();
        prop_assert!((c.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_recoverer_gets_the_secret(re in -1.0f64..1.0, im in -1.0f64..1.0, phase in 0.0..2.0 * PI, alpha in 0.3f64..3.0, seed: u64) {
        let l = C64::new(re, im);
        prop_assume!(l.norm() < 1.0);
        let secret = InputSecret::new(l, C64::from_polar((1.0 - l.norm_sqr()).sqrt(), phase)).unwrap();
        for r in Recoverer::ALL {
            let cfg = ProtocolConfig::new(SecretChoice::Fixed(secret), r, alpha, seed, 4);
            for t in run_protocol(&cfg).unwrap() {
                prop_assert!((t.fidelity - 1.0).abs() < 1e-10);
                prop_assert!((t.branch_probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bob_alone_learns_nothing(seed: u64, alpha in 0.3f64..3.0) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w = hierarchy_witness(&InputSecret::random(&mut rng), alpha).unwrap();
        prop_assert!(w.bob_max_deviation_from_mixed < 1e-10);
        prop_assert_eq!(w.diana_case_helpers_agree, w.diana_case_branches);
    }
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_execution() {
    let spec = SweepSpec {
        axes: vec![Axis::linspace(SweepParam::Theta1, 0.0, PI, 19), Axis::linspace(SweepParam::Theta2, 0.0, PI, 11)],
        base: AngleParams::default(),
        alphas: vec![1.0],
    };
    let a = to_csv(&sweep_with(&spec, Execution::Sequential).unwrap());
    let b = to_csv(&sweep_with(&spec, Execution::Parallel).unwrap());
    let c = to_csv(&sweep_with(&spec, Execution::Parallel).unwrap());
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert_eq!(a.lines().count(), 1 + 19 * 11);
}

#[test]
fn protocol_transcripts_are_seed_stable() {
    let cfg = ProtocolConfig::new(SecretChoice::Random, Recoverer::Diana, 1.0, 7, 32);
    let a = serde_json::to_string(&run_protocol(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_protocol(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}
