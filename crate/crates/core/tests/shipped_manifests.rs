use std::path::PathBuf;

use maxlab::experiments::{run, ExperimentManifest};

fn shipped() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../manifests");
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_manifests_are_canonical() {
    let all = shipped();
    assert!(all.len() >= 8);
    for (stem, text) in all {
        let m = ExperimentManifest::from_json(&text).unwrap();
        assert_eq!(m.name, stem);
        assert_eq!(m.to_json().unwrap(), text, "{stem} is not in canonical form");
        assert!(m.description.is_some());
    }
}

#[test]
fn theta_suite_columns_agree() {
    let (_, text) = shipped().into_iter().find(|(s, _)| s == "theta-suite").unwrap();
    let out = run(&ExperimentManifest::from_json(&text).unwrap()).unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&out.files["summary.json"]).unwrap();
    for entry in summary["result"].as_array().unwrap() {
        for (pair, z) in entry["discrepancy_z"].as_object().unwrap() {
            if let Some(z) = z.as_f64() {
                assert!(z <= 3.0, "{}: {pair} z = {z}", entry["label"]);
            }
        }
    }
}
