//! The committed configuration files must stay in sync with the built-in
//! scenario catalog.

use std::path::PathBuf;

use cnls_pml::experiments::{load_config, scenario, SCENARIO_NAMES};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn committed_configs_match_catalog() {
    for name in SCENARIO_NAMES {
        let path = configs_dir().join(format!("{name}.toml"));
        let from_file = load_config(&path)
            .unwrap_or_else(|e| panic!("configs/{name}.toml failed to load: {e}"));
        let from_catalog = scenario(name).unwrap();
        assert_eq!(
            from_file, from_catalog,
            "configs/{name}.toml drifted from the scenario catalog"
        );
    }
}

#[test]
fn no_stray_configs() {
    let mut found: Vec<String> = std::fs::read_dir(configs_dir())
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.strip_suffix(".toml").map(str::to_owned)
        })
        .collect();
    found.sort();
    let mut expected: Vec<String> = SCENARIO_NAMES.iter().map(|s| s.to_string()).collect();
    expected.sort();
    assert_eq!(found, expected);
}
