use polaron_demo::{ladder_spectrum, pekar_profile, series_coefficients};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).unwrap()
}

#[test]
fn profile_is_normalized_on_the_interval() {
    let v = parse(pekar_profile("interval", 6.0, 8, 4));
    assert_eq!(v["dims"], 1);
    let pts: Vec<f64> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_f64().unwrap())
        .collect();
    let psi: Vec<f64> = v["psi"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_f64().unwrap())
        .collect();
    assert_eq!(pts.len(), psi.len());
    assert!(pts.windows(2).all(|w| w[1] > w[0]));
    assert!(psi.iter().all(|p| *p > -1e-12));
    // trapezoid over the nodes plus the zero boundary values
    let mut xs = vec![0.0];
    xs.extend(&pts);
    xs.push(6.0);
    let mut ys = vec![0.0];
    ys.extend(psi.iter().map(|p| p * p));
    ys.push(0.0);
    let norm: f64 = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum();
    assert!((norm - 1.0).abs() < 1e-2, "{norm}");
    assert!(v["e_pek"].as_f64().unwrap() < (std::f64::consts::PI / 6.0).powi(2));
}

#[test]
fn square_profile_is_two_dimensional() {
    let v = parse(pekar_profile("square", 6.0, 6, 3));
    assert_eq!(v["dims"], 2);
}

#[test]
fn ladder_starts_at_the_ground_energy() {
    let v = parse(ladder_spectrum(
        "interval",
        3.0 * std::f64::consts::PI,
        10,
        4,
        8,
    ));
    let tau: Vec<f64> = v["tau"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_f64().unwrap())
        .collect();
    assert_eq!(tau.len(), 4);
    assert!(tau.iter().all(|t| *t > 0.0 && *t <= 1.0 + 1e-10));
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 8);
    assert_eq!(levels[0]["energy"], v["ground_energy"]);
    let e1 = levels[1]["energy"].as_f64().unwrap() - levels[0]["energy"].as_f64().unwrap();
    assert!((e1 - tau[0].sqrt()).abs() < 1e-12);
}

#[test]
fn ground_series_odd_orders_vanish() {
    let v = parse(series_coefficients(
        "interval",
        3.0 * std::f64::consts::PI,
        8,
        3,
        6,
        1,
        4,
    ));
    let b = &v.as_array().unwrap()[0];
    let c: Vec<f64> = b["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(c.len(), 5);
    assert_eq!(c[1], 0.0);
    assert_eq!(c[3], 0.0);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(pekar_profile("torus", 3.0, 6, 3).is_err());
    assert!(pekar_profile("interval", -1.0, 6, 3).is_err());
    assert!(series_coefficients("interval", 3.0, 6, 3, 6, 1, 11).is_err());
    assert!(series_coefficients("interval", 3.0, 6, 8, 12, 1, 2).is_err());
    assert!(series_coefficients("interval", 3.0, 6, 3, 6, 0, 2).is_err());
}
