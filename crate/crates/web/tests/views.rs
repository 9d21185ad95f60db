use birkhoff_web::{gibbs_view, pressure_view, spectrum_view};

#[test]
fn pressure_matches_closed_form_for_thue_morse() {
    let v = pressure_view("thue-morse", 4096, 2.0, 9).unwrap();
    assert_eq!(v.lambda.len(), 9);
    for (a, b) in v.finite_n.iter().zip(&v.closed_form) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn spectrum_peaks_at_one() {
    let v = spectrum_view("moebius", 41).unwrap();
    let top = v.dim.iter().cloned().fold(f64::MIN, f64::max);
    assert!((top - 1.0).abs() < 1e-12);
    assert!((v.dim[20] - 1.0).abs() < 1e-12);
    assert!(v.dim.iter().all(|d| (0.0..=1.0 + 1e-12).contains(d)));
}

#[test]
fn gibbs_view_is_consistent() {
    let v = gibbs_view("moebius", 1.0, 1000, 200, 7).unwrap();
    assert_eq!(v.mean_xx.len(), 999);
    assert_eq!(v.depths, vec![10, 100, 1000]);
    assert!((v.running_average - v.analytic_running_average).abs() < 0.05);
    assert!(v.dimension_closed_form > 0.0 && v.dimension_closed_form < 1.0);
}

#[test]
fn bad_input_is_reported() {
    assert!(pressure_view("nope", 10, 1.0, 3).is_err());
    assert!(pressure_view("moebius", 0, 1.0, 3).is_err());
    assert!(gibbs_view("moebius", 1.0, 3_000_000, 1, 0).is_err());
}
