use std::path::Path;

use proptest::prelude::*;

use pedalshare::powersplit::YTilde;
use pedalshare::sim::{run, ConfigError, ScenarioConfig, SessionRecord};

const CLEAN_LOOP: &str = r#"
[controller]
mode = "open_loop"

[controller.policy]
non_polluted = 8

[rider]
torque_feedforward = 70.0
torque_gain = 0.0

[route]
[[route.zone]]
kind = "non_polluted"
start = 0.0
end = 100000.0
concentration = 5.0

[sim]
duration = 600.0
"#;

fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    ScenarioConfig::load(&path).unwrap()
}

fn all_finite(r: &SessionRecord) -> bool {
    [
        r.t,
        r.position,
        r.v,
        r.tau_p,
        r.p_hp,
        r.p_me,
        r.p_hw,
        r.p_mw,
        r.m_star,
        r.hr,
        r.ve,
        r.dose,
        r.battery_ah,
    ]
    .iter()
    .chain(r.m.iter())
    .chain(r.m_bar.iter())
    .chain(r.e.iter())
    .all(|x| x.is_finite())
}

/// Speed where wheel power balances road load, with the road load and human
/// wheel power written out longhand.
fn steady_speed_oracle(cfg: &ScenarioConfig, torque: f64, yt: YTilde) -> f64 {
    let env = &cfg.environment;
    let mass = cfg.mass.rider_mass + cfg.mass.bike_mass;
    let angle = env.road_gradient.atan();
    let ps = &cfg.powersplit;
    let surplus = |v: f64| {
        let drag = 0.5 * env.air_density * env.drag_coefficient * env.frontal_area * v * v;
        let load = drag
            + env.rolling_coefficient * mass * env.gravity * angle.cos()
            + mass * env.gravity * angle.sin();
        let omega = v / (cfg.rider.wheel_radius * cfg.rider.gear_ratio);
        let human = (ps.scaling * ps.crank_efficiency * (torque - ps.torque_bias) * omega).max(0.0);
        let pe = cfg.motor.electrical_power(yt, v * 3.6, ps).unwrap();
        let motor =
            ps.motor_efficiency * pe - (ps.noload_slope * yt.as_f64() + ps.noload_intercept);
        human + motor.max(0.0) - load * v
    };
    let (mut lo, mut hi) = (0.5, 25.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if surplus(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn settles_at_power_balance_speed() {
    let cfg = ScenarioConfig::from_toml_str(CLEAN_LOOP).unwrap();
    let log = run(&cfg).unwrap();
    let v = log.last().unwrap().v;
    let oracle = steady_speed_oracle(&cfg, 70.0, YTilde::new(8).unwrap());
    assert!((v - oracle).abs() < 1e-3, "simulated {v}, oracle {oracle}");
}

#[test]
fn zero_duration_is_empty() {
    let text = CLEAN_LOOP.replace("duration = 600.0", "duration = 0.0");
    let log = run(&ScenarioConfig::from_toml_str(&text).unwrap()).unwrap();
    assert!(log.is_empty());
}

#[test]
fn standstill_has_no_nan() {
    let text = CLEAN_LOOP
        .replace("torque_feedforward = 70.0", "torque_feedforward = 45.0")
        .replace(
            "[route]",
            "[[rider.input]]\nstart = 0.0\nend = 1000.0\nleft_brake = true\nright_brake = false\nthrottle_voltage = 0.0\n\n[route]",
        )
        .replace("[sim]", "[environment]\nroad_gradient = 0.1\n\n[sim]\ninitial_speed = 0.0");
    let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
    let log = run(&cfg).unwrap();
    assert!(log.records.iter().all(all_finite));
    assert!(log.records.iter().all(|r| r.v >= 0.0));
    assert!(log.records.iter().any(|r| r.m.is_none()));
}

#[test]
fn battery_never_recharges() {
    let log = run(&scenario("closed_loop.toml")).unwrap();
    assert!(log
        .records
        .windows(2)
        .all(|w| w[1].battery_ah <= w[0].battery_ah));
    assert!(log.records.windows(2).all(|w| w[1].dose >= w[0].dose));
}

#[test]
fn flat_battery_cuts_motor() {
    let text = CLEAN_LOOP.replace("[sim]", "[battery]\ncapacity = 0.01\n\n[sim]");
    let log = run(&ScenarioConfig::from_toml_str(&text).unwrap()).unwrap();
    let empty = log
        .records
        .iter()
        .position(|r| r.battery_ah <= 0.0)
        .expect("battery drains");
    assert!(log.records[empty + 1..].iter().all(|r| r.p_me == 0.0));
    assert_eq!(log.events.len(), 1);
}

#[test]
fn toml_round_trip() {
    for name in ["closed_loop.toml", "open_loop.toml"] {
        let cfg = scenario(name);
        let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }
}

#[test]
fn rejects_unknown_keys_and_bad_rates() {
    let typo = CLEAN_LOOP.replace("torque_gain", "torque_gian");
    assert!(matches!(
        ScenarioConfig::from_toml_str(&typo),
        Err(ConfigError::Parse(_))
    ));
    let rate = CLEAN_LOOP.replace("duration = 600.0", "duration = 600.0\nrate_hz = 2");
    assert!(matches!(
        ScenarioConfig::from_toml_str(&rate),
        Err(ConfigError::Invalid(_))
    ));
    let gap = CLEAN_LOOP.replace("start = 0.0", "start = 10.0");
    assert!(matches!(
        ScenarioConfig::from_toml_str(&gap),
        Err(ConfigError::Route(_))
    ));
}

#[test]
fn closed_loop_holds_inside_deadband() {
    let text = CLEAN_LOOP
        .replace("mode = \"open_loop\"", "mode = \"closed_loop\"")
        .replace(
            "torque_feedforward = 70.0\ntorque_gain = 0.0",
            "cruise_speed = 22.0",
        )
        .replace("duration = 600.0", "duration = 300.0");
    let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
    let log = run(&cfg).unwrap();
    let tail: Vec<_> = log.controller_ticks().filter(|r| r.t >= 200.0).collect();
    assert!(!tail.is_empty());
    let held = tail[0].ytilde;
    for r in &tail {
        assert_eq!(r.ytilde, held, "t={}", r.t);
        assert!(r.e.unwrap().abs() <= cfg.controller.tolerance);
    }
}

#[test]
fn rate_changes_tick_count() {
    let mut cfg = ScenarioConfig::from_toml_str(CLEAN_LOOP).unwrap();
    cfg.sim.duration = Some(60.0);
    assert_eq!(run(&cfg).unwrap().len(), 300);
    cfg.sim.rate_hz = 1;
    let log = run(&cfg).unwrap();
    assert_eq!(log.len(), 60);
    assert!(log.records.iter().all(|r| r.is_controller_tick()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fuzzed_scenarios_stay_finite(
        gradient in -0.05f64..0.12,
        rider_mass in 40.0f64..130.0,
        gain in 1.0f64..60.0,
        noise in 0.0f64..20.0,
        cruise in 5.0f64..35.0,
        initial in 0.0f64..40.0,
        seed in any::<u64>(),
        closed in any::<bool>(),
    ) {
        let mut cfg = scenario(if closed { "closed_loop.toml" } else { "open_loop.toml" });
        cfg.environment.road_gradient = gradient;
        cfg.mass.rider_mass = rider_mass;
        cfg.controller.gain = gain;
        cfg.rider.torque_noise = noise;
        cfg.rider.cruise_speed = cruise;
        cfg.sim.initial_speed = Some(initial);
        cfg.sim.seed = seed;
        cfg.sim.duration = Some(120.0);
        let log = run(&cfg).unwrap();
        prop_assert_eq!(log.len(), 600);
        for r in &log.records {
            prop_assert!(all_finite(r), "non-finite record at t={}", r.t);
            prop_assert!(r.v >= 0.0);
            if let Some(m) = r.m {
                prop_assert!((0.0..=1.0).contains(&m));
            }
        }
    }
}
