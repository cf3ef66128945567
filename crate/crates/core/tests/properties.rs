use std::f64::consts::PI;

use proptest::prelude::*;

use crit::analysis::{classify, find_extrema, ExtremumKind};
use crit::checks::oracle_variances;
use crit::config::{load_config, RunConfig};
use crit::optics::{to_polar, CoupledCavityConfig, ModelVariant, PhasePair, PolarResponse, Topology};
use crit::quantum::{
    apply_detection, variance_at_angle, variance_x, variance_y, DetectionModel, InputGaussianState,
    SidebandResponsePair,
};

fn cavity() -> impl Strategy<Value = CoupledCavityConfig> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.5..=1.0f64, 0.5..=1.0f64, any::<bool>()).prop_map(
        |(r0, r1, r2, t1, t2, single)| {
            let mut c = CoupledCavityConfig::from_power(r0, r1, r2).with_transmissions(t1, t2);
            if single {
                c = c.with_topology(Topology::SingleCavity);
            }
            c
        },
    )
}

fn phases() -> impl Strategy<Value = PhasePair> {
    (-PI..PI, -PI..PI).prop_map(|(a, b)| PhasePair::new(a, b))
}

fn polar() -> impl Strategy<Value = PolarResponse> {
    (0.0..=1.0f64, -PI..=PI).prop_map(|(rho, theta)| PolarResponse { rho, theta })
}

fn pair() -> impl Strategy<Value = SidebandResponsePair> {
    (polar(), polar()).prop_map(|(p, m)| SidebandResponsePair::from_responses(p, m))
}

/// Physical input states, from strongly squeezed to thermal-like.
fn input() -> impl Strategy<Value = InputGaussianState> {
    (-1.5..1.5f64, 0.0..1.0f64).prop_map(|(lx, excess)| {
        let var_x = 10f64.powf(lx);
        InputGaussianState::new(var_x, 10f64.powf(excess) / var_x).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn reflection_is_passive(cfg in cavity(), p in phases()) {
        if let Ok(r) = cfg.response(p) {
            prop_assert!(r.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn reflection_is_conjugate_symmetric(cfg in cavity(), p in phases()) {
        if let (Ok(a), Ok(b)) = (cfg.response(p), cfg.response(PhasePair::new(-p.phi1, -p.phi2))) {
            prop_assert!((a - b.conj()).norm() <= 1e-12);
        }
    }

    #[test]
    fn polar_branch(cfg in cavity(), p in phases()) {
        if let Ok(r) = cfg.response(p) {
            let polar = to_polar(r);
            prop_assert!(polar.theta > -PI && polar.theta <= PI);
            prop_assert!((polar.to_complex() - r).norm() <= 1e-12);
        }
    }

    #[test]
    fn uncertainty_bound(pair in pair(), input in input()) {
        prop_assert!(variance_x(&pair, &input) * variance_y(&pair, &input) >= 1.0 - 1e-9);
    }

    #[test]
    fn vacuum_in_vacuum_out(pair in pair()) {
        let vac = InputGaussianState::vacuum();
        prop_assert!((variance_x(&pair, &vac) - 1.0).abs() <= 1e-12);
        prop_assert!((variance_y(&pair, &vac) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn matches_covariance_oracle(pair in pair(), input in input()) {
        let (ox, oy) = oracle_variances(&pair, &input);
        prop_assert!((variance_x(&pair, &input) - ox).abs() <= 1e-10);
        prop_assert!((variance_y(&pair, &input) - oy).abs() <= 1e-10);
    }

    #[test]
    fn quadrature_angle_has_period_pi(pair in pair(), input in input(), angle in -PI..PI) {
        let a = variance_at_angle(&pair, &input, angle);
        let b = variance_at_angle(&pair, &input, angle + PI);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn inefficiency_pulls_toward_shot_noise(v in 0.01..100.0f64, eta in 0.01..=1.0f64) {
        let det = DetectionModel::new(eta, 0.0).unwrap();
        prop_assert!((apply_detection(v, &det) - 1.0).abs() <= (v - 1.0).abs() + 1e-15);
    }

    #[test]
    fn config_round_trips(
        r0 in 0.0..=1.0f64, r1 in 0.0..=1.0f64, r2 in 0.0..=1.0f64,
        loss in 0.0..0.5f64, s in -2.0..2.0f64, points in 3usize..5000,
        span_fsr in 0.0..2.0f64, omega in 0.0..1e8f64, symmetric in any::<bool>(),
    ) {
        let variant = if symmetric { "symmetric_numerator" } else { "as_printed" };
        let doc = format!(
            "[cavity]\nr0_sq = {r0:?}\nr1_sq = {r1:?}\nr2_sq = {r2:?}\nloss1 = {loss:?}\nvariant = \"{variant}\"\n\
             [input]\ns = {s:?}\n[sideband]\nomega_hz = {omega:?}\n[scan]\npoints = {points}\nspan_fsr = {span_fsr:?}\n"
        );
        let cfg: RunConfig = load_config(&doc).unwrap();
        prop_assert_eq!(cfg.cavity.variant == ModelVariant::SymmetricNumerator, symmetric);
        prop_assert_eq!(load_config(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn extrema_are_ordered_and_prominent(
        values in prop::collection::vec(-10.0..10.0f64, 3..200),
        threshold in 0.0..5.0f64,
    ) {
        let series: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        let ext = find_extrema(&series, threshold).unwrap();
        prop_assert!(ext.windows(2).all(|w| w[0].index < w[1].index));
        for e in &ext {
            prop_assert!(e.prominence >= threshold);
            prop_assert!(e.index > 0 && e.index + 1 < series.len());
        }
        let label = classify(&series).unwrap();
        let kinds: Vec<ExtremumKind> = label.extrema.iter().map(|e| e.kind).collect();
        prop_assert!(kinds.windows(2).all(|w| w[0] != w[1]));
    }
}
