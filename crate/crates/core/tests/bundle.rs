use std::fs;
use std::path::Path;

use redcap_core::io::{
    default_bundle_dir, load_bundle, parse_sinr_csv, parse_toml, sinr_to_csv, to_toml, CalibrationFile, ProfilesFile,
    ScenarioFile, TargetsFile,
};
use redcap_core::model::{validate_dataset, Channel, ProfileLabel, ScenarioName};
use redcap_core::Error;

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn shipped_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&default_bundle_dir(), dir.path());
    dir
}

fn bundle_problems(dir: &Path) -> Vec<String> {
    match load_bundle(dir) {
        Err(Error::Bundle(problems)) => problems,
        other => panic!("expected a bundle error, got {other:?}"),
    }
}

#[test]
fn shipped_bundle_loads_complete() {
    let d = load_bundle(&default_bundle_dir()).unwrap();
    assert_eq!(d.scenarios.len(), 3);
    assert_eq!(d.profiles.len(), 3);
    let names: Vec<_> = d.scenarios.iter().map(|s| s.name).collect();
    assert_eq!(names, ScenarioName::ALL);

    // every channel for every profile that has data in a scenario
    assert_eq!(
        d.sinr.profiles_in(ScenarioName::Rural),
        [ProfileLabel::Reference, ProfileLabel::RedCap1Rx]
    );
    assert_eq!(d.sinr.profiles_in(ScenarioName::Urban), ProfileLabel::ALL);
    assert_eq!(
        d.sinr.profiles_in(ScenarioName::Indoor),
        [ProfileLabel::Reference, ProfileLabel::RedCap1Rx]
    );
    assert_eq!(d.sinr.len(), 11 * (2 + 3 + 2));
    for s in ScenarioName::ALL {
        for p in d.sinr.profiles_in(*s) {
            for c in Channel::ALL {
                assert!(d.sinr.get(*s, p, c).is_some(), "{s}/{p}/{c}");
            }
        }
    }
    assert_eq!(
        d.sinr.get(ScenarioName::Urban, ProfileLabel::RedCap1Rx, Channel::Msg4),
        Some(0.9)
    );
}

#[test]
fn shipped_bundle_validates_cleanly() {
    let d = load_bundle(&default_bundle_dir()).unwrap();
    let violations = validate_dataset(&d);
    assert!(violations.is_empty(), "{violations:#?}");
}

#[test]
fn canonical_files_round_trip_byte_identically() {
    let root = default_bundle_dir();
    for name in ["rural", "urban", "indoor"] {
        let text = fs::read_to_string(root.join(format!("scenarios/{name}.toml"))).unwrap();
        let parsed: ScenarioFile = parse_toml(&text).unwrap();
        assert_eq!(to_toml(&parsed).unwrap(), text, "{name}.toml");

        let text = fs::read_to_string(root.join(format!("sinr/{name}.csv"))).unwrap();
        let rows = parse_sinr_csv(&text).unwrap();
        assert_eq!(sinr_to_csv(&rows).unwrap(), text, "{name}.csv");
    }
    let text = fs::read_to_string(root.join("profiles.toml")).unwrap();
    assert_eq!(to_toml(&parse_toml::<ProfilesFile>(&text).unwrap()).unwrap(), text);
    let text = fs::read_to_string(root.join("calibration.toml")).unwrap();
    assert_eq!(to_toml(&parse_toml::<CalibrationFile>(&text).unwrap()).unwrap(), text);
    let text = fs::read_to_string(root.join("targets.toml")).unwrap();
    assert_eq!(to_toml(&parse_toml::<TargetsFile>(&text).unwrap()).unwrap(), text);
}

#[test]
fn empty_directory_has_no_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let problems = bundle_problems(dir.path());
    assert!(
        problems.iter().any(|p| p.ends_with("no scenarios found")),
        "{problems:?}"
    );
}

#[test]
fn duplicate_sinr_triple_is_named() {
    let dir = shipped_copy();
    let path = dir.path().join("sinr/rural.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("Rural,Reference,PUSCH,-2.4\n");
    fs::write(&path, text).unwrap();
    let problems = bundle_problems(dir.path());
    assert_eq!(problems, ["duplicate SINR row (Rural, Reference, PUSCH)"]);
}

#[test]
fn duplicates_across_files_are_caught() {
    let dir = shipped_copy();
    fs::write(
        dir.path().join("sinr/extra.csv"),
        "scenario,profile,channel,sinr_db\nUrban,RedCap2Rx,SSB,-8.0\n",
    )
    .unwrap();
    let problems = bundle_problems(dir.path());
    assert_eq!(problems, ["duplicate SINR row (Urban, RedCap2Rx, SSB)"]);
}

#[test]
fn all_problems_are_reported_together() {
    let dir = shipped_copy();
    let rural = dir.path().join("scenarios/rural.toml");
    let text = fs::read_to_string(&rural)
        .unwrap()
        .replacen("schema = 1", "schema = 2", 1);
    fs::write(&rural, text).unwrap();

    let urban = dir.path().join("scenarios/urban.toml");
    let text = fs::read_to_string(&urban)
        .unwrap()
        .replacen("carrier_hz = 2600000000.0\n", "", 1);
    fs::write(&urban, text).unwrap();

    let profiles = dir.path().join("profiles.toml");
    let text = fs::read_to_string(&profiles).unwrap().replacen("schema = 1\n", "", 1);
    fs::write(&profiles, text).unwrap();

    let sinr = dir.path().join("sinr/indoor.csv");
    let mut text = fs::read_to_string(&sinr).unwrap();
    text.push_str("Indoor,Reference,SSB,-8.2\n");
    fs::write(&sinr, text).unwrap();

    let problems = bundle_problems(dir.path());
    let joined = problems.join("\n");
    assert!(joined.contains("rural.toml: unknown schema version 2"), "{joined}");
    assert!(joined.contains("urban.toml: missing field `carrier_hz`"), "{joined}");
    assert!(
        joined.contains("profiles.toml: missing required field `schema`"),
        "{joined}"
    );
    assert!(
        joined.contains("duplicate SINR row (Indoor, Reference, SSB)"),
        "{joined}"
    );
    assert_eq!(problems.len(), 4, "{joined}");
}

#[test]
fn calibration_must_cover_every_scenario() {
    let dir = shipped_copy();
    let path = dir.path().join("calibration.toml");
    let text = fs::read_to_string(&path).unwrap();
    let cut = text.find("[[scenario]]\nname = \"Indoor\"").unwrap();
    fs::write(&path, &text[..cut]).unwrap();
    let problems = bundle_problems(dir.path());
    assert_eq!(problems, ["calibration.toml: no entry for scenario Indoor"]);
}

#[test]
fn bad_sinr_header_is_rejected() {
    let dir = shipped_copy();
    fs::write(dir.path().join("sinr/extra.csv"), "scenario,profile,sinr\n").unwrap();
    let problems = bundle_problems(dir.path());
    assert_eq!(problems.len(), 1);
    assert!(problems[0].contains("header must be scenario,profile,channel,sinr_db"));
}

#[test]
fn mcs_tables_in_bundle_override_builtins() {
    let dir = shipped_copy();
    fs::create_dir(dir.path().join("tables")).unwrap();
    fs::write(
        dir.path().join("tables/custom.csv"),
        "index,qm,r_x1024\n0,2,60\n1,4,340\n",
    )
    .unwrap();
    let d = load_bundle(dir.path()).unwrap();
    let e = d.mcs_tables.lookup("custom", 1).unwrap();
    assert_eq!((e.modulation_order(), e.index()), (4, 1));
    assert!(d.mcs_tables.get("pdsch-qam64").is_some());
}

#[test]
fn calibration_values_are_loaded() {
    let d = load_bundle(&default_bundle_dir()).unwrap();
    let indoor = d.scenario(ScenarioName::Indoor).unwrap();
    assert_eq!(indoor.radio.ue_antenna_gain_db, 5.0);
    assert_eq!(indoor.radio.gnb_noise_figure_db, 7.0);
    assert_eq!(indoor.ue_power_dbm, 12.0);
}
