use signseg_web::{null_quantiles_value, segment_demo_value, single_scan_value};

#[test]
fn quantiles_are_ordered_and_histogram_is_consistent() {
    let v = null_quantiles_value(20, 500, 1).unwrap();
    let q: Vec<f64> = v["quantiles"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(q.len(), 4);
    assert!(q.windows(2).all(|w| w[0] <= w[1]));
    let counted: u64 = v["histogram"]["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert!((480..=500).contains(&counted), "{counted}");
}

#[test]
fn short_window_is_an_error() {
    assert!(null_quantiles_value(5, 100, 1).unwrap_err().contains("n must be ≥ 8"));
}

#[test]
fn scan_profile_covers_every_admissible_split() {
    let v = single_scan_value("gauss_iid", 40, 20, 4.0, "sign", 3, 500).unwrap();
    assert_eq!(v["ratios"].as_array().unwrap().len(), 33);
    assert_eq!(v["row_means"].as_array().unwrap().len(), 40);
    assert_eq!(v["true_change"][0], 20);
    assert!(v["p_value"].as_f64().unwrap() < 0.01);
}

#[test]
fn unknown_inputs_are_reported() {
    assert!(single_scan_value("cauchy", 40, 20, 0.0, "sign", 3, 100).is_err());
    assert!(single_scan_value("gauss_iid", 40, 20, 0.0, "median", 3, 100).is_err());
}

#[test]
fn segmentation_demo_reports_detections() {
    let v = segment_demo_value("i", 6.0, 50, std::f64::consts::FRAC_1_SQRT_2, 0.001, "sign", 5, 1000).unwrap();
    assert_eq!(v["true_changes"], serde_json::json!([30, 60, 90]));
    let found = v["locations"].as_array().unwrap().len();
    assert_eq!(v["detections"].as_array().unwrap().len(), found);
    assert!(found >= 1);
    assert!(v["ari"].as_f64().unwrap() > 0.0);
}
