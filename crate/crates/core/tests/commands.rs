use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dual_lcs::commands::{run_command, Command};
use dual_lcs::config::{parse_config, RunConfig};

const BASE: &str = r#"
[field]
name = "steady-abc"

[horizon]
t0 = 0.0
t1 = 1.0

[seeds]
points = [[1.0, 2.0, 0.5]]
grid = { x = [0.0, 6.283185307179586, 3], y = [0.0, 6.283185307179586, 2], z = [0.0, 0.0, 1] }

[line]
s_max = 12.0
degeneracy = "pass-through"

[section]
window = [0.0, 12.0]
epsilon = 0.05
rule = "interpolated"

[classical]
t_total = 60.0
window = [0.0, 60.0]

[classify]
plane_radius = 0.5
sphere_points = 60
elliptic = true
mesh = [4, 4]

[sphere]
radius = 1e-3
n_points = 60
"#;

fn config() -> RunConfig {
    parse_config(BASE, &[]).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dual-lcs-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run_twice(command: Command, workers: [usize; 2]) -> (BTreeMap<String, Vec<u8>>, BTreeMap<String, Vec<u8>>) {
    let cfg = config();
    let a = scratch(&format!("{command}-a-{}", workers[0]));
    let b = scratch(&format!("{command}-b-{}", workers[1]));
    let ra = run_command(&cfg, command, &a, workers[0]).unwrap();
    let rb = run_command(&cfg, command, &b, workers[1]).unwrap();
    assert_eq!(ra.config_hash, rb.config_hash);
    let out = (read_all(&a), read_all(&b));
    fs::remove_dir_all(&a).unwrap();
    fs::remove_dir_all(&b).unwrap();
    out
}

#[test]
fn every_command_reruns_bit_identically_on_one_worker() {
    for command in Command::ALL {
        let (a, b) = run_twice(command, [1, 1]);
        assert!(a.contains_key("manifest.json"), "{command}");
        assert!(a.len() >= 2, "{command}: {:?}", a.keys());
        assert_eq!(a, b, "{command}");
    }
}

#[test]
fn artifacts_do_not_depend_on_worker_count() {
    for command in Command::ALL {
        let (mut a, mut b) = run_twice(command, [1, 3]);
        a.remove("manifest.json");
        b.remove("manifest.json");
        assert_eq!(a, b, "{command}");
    }
}

#[test]
fn manifest_records_config_and_artifact_digests() {
    use sha2::{Digest, Sha256};
    let dir = scratch("manifest");
    let report = run_command(&config(), Command::Sphere, &dir, 1).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sphere");
    assert_eq!(manifest["config_hash"], report.config_hash.as_str());
    let recorded: RunConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(recorded, config());
    for artifact in manifest["artifacts"].as_array().unwrap() {
        let bytes = fs::read(dir.join(artifact["path"].as_str().unwrap())).unwrap();
        assert_eq!(artifact["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_headers_follow_the_documented_schemas() {
    let cases = [
        (Command::Ftle, "ftle.csv", "seed_id,x,y,z,ftle,sigma1,sigma2,sigma3,gap"),
        (Command::LineSweep, "lines.csv", "seed_id,s,x,y,z,term_reason"),
        (Command::ClassicalPoincare, "section.csv", "seed_id,stamp,x,y"),
        (Command::DualPoincare, "section.csv", "seed_id,stamp,x,y"),
        (Command::FdCompare, "fd_compare.csv", "seed_id,x,y,z,angle_deg,ftle"),
    ];
    for (command, file, header) in cases {
        let dir = scratch(&format!("header-{command}"));
        run_command(&config(), command, &dir, 1).unwrap();
        let text = fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header, "{command}");
        fs::remove_dir_all(&dir).unwrap();
    }
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = parse_config(&fs::read_to_string(&path).unwrap(), &[])
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.velocity_field().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 1);
}
