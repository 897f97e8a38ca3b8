use approx::relative_eq;
use iongrad::cli_io::scenario::ScenarioFile;
use iongrad::constants::DEBYE;
use iongrad::electrostatics::{
    delta_ex, delta_ex_by_differencing, DipoleMoment, GradiometerGeometry, InterfaceModel, Vec3,
};
use iongrad::feasibility::{
    integration_time, snr, sweep, AveragingPlan, FeasibilityScenario, SweepAxis, SweepGrid, SweepOptions,
};
use iongrad::noise_model::{
    differential_psd, slowdown_from_asds, total_asd, CorrelationShape, NoiseBudget, SampleNoiseModel, SensorMode,
    SensorSensitivity, GATE_MAX_SLOWDOWN,
};
use proptest::prelude::*;

fn base() -> FeasibilityScenario {
    ScenarioFile::published().feasibility().unwrap()
}

fn shape() -> impl Strategy<Value = CorrelationShape> {
    prop_oneof![
        Just(CorrelationShape::Exponential),
        Just(CorrelationShape::Gaussian),
        Just(CorrelationShape::None)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_differencing(h in 1.0f64..50.0, d in 0.1f64..20.0, debye in -200.0f64..200.0) {
        let g = GradiometerGeometry::from_micrometers(h, d).unwrap();
        let p = DipoleMoment::new(debye.abs() * DEBYE, Vec3::new(0.0, 0.0, debye.signum())).unwrap();
        let closed = delta_ex(&g, &p, &InterfaceModel::Vacuum).unwrap();
        let brute = delta_ex_by_differencing(&g, &p).unwrap();
        prop_assert!(relative_eq!(closed, brute, max_relative = 1e-12, epsilon = 1e-300), "{} {}", closed, brute);
    }

    #[test]
    fn field_scaling_laws(h in 1.0f64..50.0, d in 0.1f64..20.0, debye in 0.1f64..200.0, k in 0.2f64..5.0) {
        let g = GradiometerGeometry::from_micrometers(h, d).unwrap();
        let p = DipoleMoment::normal_debye(debye).unwrap();
        let e = delta_ex(&g, &p, &InterfaceModel::Vacuum).unwrap();
        // linear in the dipole moment
        let pk = DipoleMoment::normal_debye(debye * k).unwrap();
        prop_assert!(relative_eq!(delta_ex(&g, &pk, &InterfaceModel::Vacuum).unwrap(), k * e, max_relative = 1e-12));
        // homogeneous of degree −3 in length
        let gk = GradiometerGeometry::from_micrometers(h * k, d * k).unwrap();
        prop_assert!(relative_eq!(delta_ex(&gk, &p, &InterfaceModel::Vacuum).unwrap(), e / k.powi(3), max_relative = 1e-12));
        // interface enters through η only
        let eps = 1.0 + k;
        let die = delta_ex(&g, &p, &InterfaceModel::planar_dielectric(eps).unwrap()).unwrap();
        prop_assert!(relative_eq!(die, e * 2.0 / (eps + 1.0), max_relative = 1e-12));
        prop_assert!(relative_eq!(delta_ex(&g, &p, &InterfaceModel::MetalUnderlayer).unwrap(), 2.0 * e, max_relative = 1e-12));
    }

    #[test]
    fn differential_psd_bounds(
        a in 0.0f64..1e-5, alpha in 0.0f64..3.0, l in 0.1f64..100.0, f in 1e-3f64..1e3,
        d in 0.1f64..50.0, s in shape()
    ) {
        let m = SampleNoiseModel::new(a, alpha, l * 1e-6, s).unwrap();
        let psd = differential_psd(&m, f, d * 1e-6).unwrap();
        prop_assert!(psd >= 0.0);
        prop_assert!(psd <= 2.0 * m.single_point_psd(f) * (1.0 + 1e-15));
        let longer = SampleNoiseModel::new(a, alpha, 2.0 * l * 1e-6, s).unwrap();
        prop_assert!(differential_psd(&longer, f, d * 1e-6).unwrap() <= psd * (1.0 + 1e-15));
    }

    #[test]
    fn quadrature_bounds(s_sens in 1e-5f64..1e-2, a in 0.0f64..1e-5, f in 0.01f64..100.0) {
        let budget = NoiseBudget {
            sensor: SensorSensitivity::new(s_sens, s_sens, 5.8).unwrap(),
            sample: SampleNoiseModel::new(a, 1.0, 0.0, CorrelationShape::None).unwrap(),
            mode: SensorMode::Ac,
        };
        let d = 3.45e-6;
        let tot = total_asd(&budget, f, d).unwrap();
        let ss = budget.sample_asd(f, d).unwrap();
        prop_assert!(tot >= s_sens.max(ss) * (1.0 - 1e-15));
        prop_assert!(tot <= (s_sens + ss) * (1.0 + 1e-15));
    }

    #[test]
    fn gate_semantics(r in 0.0f64..2.0, s in 1e-5f64..1e-2) {
        let sd = slowdown_from_asds(r * s, s);
        prop_assert_eq!(sd.gate_pass, sd.factor <= GATE_MAX_SLOWDOWN);
        prop_assert!(sd.factor >= 1.0);
    }

    #[test]
    fn time_then_snr_is_consistent(
        target in 0.1f64..100.0, duty in 0.05f64..1.0, s_sample in 0.0f64..2e-3, dc in any::<bool>()
    ) {
        let mut s = base();
        s.snr_target = target;
        s.plan = AveragingPlan::from_duty_cycle(0.172, duty, 5.8).unwrap();
        s.sample_asd_override = Some(s_sample);
        s.budget.mode = if dc { SensorMode::Dc } else { SensorMode::Ac };
        let tau = integration_time(&s).unwrap();
        prop_assert!(relative_eq!(snr(&s, tau).unwrap().value, target, max_relative = 1e-9));
    }

    #[test]
    fn integration_time_monotonicity(k in 1.01f64..3.0) {
        let s = base();
        let tau = integration_time(&s).unwrap();
        let mut more_p = s.clone();
        more_p.dipole = DipoleMoment::normal_debye(20.0 * k).unwrap();
        prop_assert!(integration_time(&more_p).unwrap() < tau);
        // d/h stays below 1
        let mut wider = s.clone();
        wider.geometry = GradiometerGeometry::new(s.geometry.height(), (s.geometry.baseline() * k).min(9.9e-6)).unwrap();
        prop_assert!(integration_time(&wider).unwrap() < tau);
        let mut higher = s.clone();
        higher.geometry = GradiometerGeometry::new(s.geometry.height() * k, s.geometry.baseline()).unwrap();
        prop_assert!(integration_time(&higher).unwrap() > tau);
        let mut noisier = s.clone();
        noisier.sample_asd_override = Some(1e-4 * k);
        let mut quieter = s.clone();
        quieter.sample_asd_override = Some(1e-4);
        prop_assert!(integration_time(&noisier).unwrap() > integration_time(&quieter).unwrap());
        let mut less_duty = s.clone();
        less_duty.plan = AveragingPlan::from_duty_cycle(0.172, 1.0 / k, 5.8).unwrap();
        prop_assert!(integration_time(&less_duty).unwrap() > tau);
    }

    #[test]
    fn single_point_sweep_is_direct_evaluation(h in 2.0f64..40.0, target in 0.5f64..20.0) {
        let s = base();
        let rows = sweep(&s, &[
            SweepGrid { axis: SweepAxis::HeightUm, values: vec![h] },
            SweepGrid { axis: SweepAxis::SnrTarget, values: vec![target] },
        ], &SweepOptions::default()).unwrap();
        let mut direct = s.clone();
        direct.geometry = GradiometerGeometry::from_micrometers(h, s.geometry.baseline() * 1e6).unwrap();
        direct.snr_target = target;
        prop_assert_eq!(rows.len(), 1);
        prop_assert_eq!(rows[0].evaluation, direct.evaluate().unwrap());
    }

    #[test]
    fn scenario_round_trip(h in 1.0f64..100.0, eps in 1.0f64..20.0, loops in 1u32..8, dc in any::<bool>()) {
        let mode = if dc { "dc" } else { "ac" };
        let s = ScenarioFile::published().with_overrides(&[
            format!("geometry.h_um={h:?}"),
            format!("interface.epsilon_r={eps:?}"),
            format!("sdf.loops={loops}"),
            format!("sensor.mode=\"{mode}\""),
        ]).unwrap();
        let again = ScenarioFile::parse(&s.normalized()).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(again.normalized(), s.normalized());
    }
}
