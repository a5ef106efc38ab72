use serde_json::json;

use weakforms::duality::duality_check;
use weakforms::genfun::{genfun_params, Variant};
use weakforms::qseries::{rat, rat_from_str, rat_to_string, QSeries};
use weakforms::spaces::gap_sets;
use weakforms::weak::{weak_basis, WeakBasis};
use weakforms::spaces::Space;

#[test]
fn rationals_are_strings() {
    assert_eq!(rat_to_string(&rat(-6, 4)), "-3/2");
    assert_eq!(rat_to_string(&rat(8, 2)), "4");
    assert_eq!(rat_from_str("10/-4").unwrap(), rat(-5, 2));
    assert!(rat_from_str("1/0").is_err());
    assert!(rat_from_str("x").is_err());
}

#[test]
fn series_layout_round_trips() {
    let s = QSeries::new(-1, vec![rat(1, 1), rat(0, 1), rat(-2, 3)]).unwrap();
    let v = serde_json::to_value(&s).unwrap();
    assert_eq!(v, json!({"minExp": -1, "precCap": 2, "coeffs": ["1", "0", "-2/3"]}));
    let back: QSeries = serde_json::from_value(v).unwrap();
    assert_eq!(back, s);
}

#[test]
fn gap_report_keys() {
    let v = serde_json::to_value(gap_sets(23, 12).unwrap()).unwrap();
    for key in ["missM", "missS", "cM", "cS", "mMax", "sMax", "dimM", "dimS"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["missS"], json!([21, 22]));
}

#[test]
fn reports_round_trip() {
    let r = duality_check(11, 2, (-1, 4), (0, 5)).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"checkedPairs\":36"));
    assert_eq!(serde_json::from_str::<weakforms::duality::DualityReport>(&text).unwrap(), r);

    let params = genfun_params(17, 4).unwrap();
    let v = serde_json::to_value(&params).unwrap();
    assert!(v["aCoeffs"][0].is_string());
    assert_eq!(serde_json::to_value(Variant::G).unwrap(), json!("g"));

    let b = weak_basis(11, 0, Space::M, 3, 8).unwrap();
    let text = serde_json::to_string(&b).unwrap();
    let back: WeakBasis = serde_json::from_str(&text).unwrap();
    assert_eq!(back, b);
}
