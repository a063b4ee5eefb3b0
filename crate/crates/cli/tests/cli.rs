use std::process::Command;

fn pepfrag() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pepfrag"))
}

fn data(rel: &str) -> String {
    format!("{}/../../data/{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn bundled_goldens_match() {
    let out = pepfrag().args(["report", "--golden", "--data", &data("")]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn dry_run_prints_the_plan() {
    let out = pepfrag()
        .args(["fragment", &data("peptides/ser_gly_glu.sdf"), "--mode", "peptide-level", "--dry-run"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(plan["fragments"].as_array().unwrap().len(), 3);
    assert_eq!(plan["corrections"][0]["label"], "H2O");
    assert_eq!(plan["corrections"][0]["count"], 2);
}

#[test]
fn energy_of_water() {
    let out = pepfrag().args(["energy", &data("species/h2o.sdf"), "--json"]).output().unwrap();
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["total_energy"].as_f64().unwrap() + 74.9659012).abs() < 1e-6);
}

#[test]
fn bad_input_is_reported() {
    let out = pepfrag().args(["energy", "/nonexistent.sdf"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent.sdf"));
}
