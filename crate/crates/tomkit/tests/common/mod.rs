//! Helpers shared by the command line tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub const TOMKIT: &str = env!("CARGO_BIN_EXE_tomkit");
pub const SCALE_CODEC: &str = env!("CARGO_BIN_EXE_tomkit-scale-codec");

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

/// Runs the CLI with `TOMKIT_JOBS` cleared.
pub fn tomkit<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    Command::new(TOMKIT)
        .args(args)
        .env_remove("TOMKIT_JOBS")
        .output()
        .expect("the tomkit binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[track_caller]
pub fn assert_success(out: &Output) {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), stderr(out));
}

/// Validator for `docs/schemas/<name>.schema.json`, with every sibling
/// schema registered under its `urn:tomkit:schema:*` id.
pub fn validator(name: &str) -> jsonschema::Validator {
    let mut options = jsonschema::options();
    let mut root = None;
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let path = entry.unwrap().path();
        let schema: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        let id = schema["$id"].as_str().unwrap().to_owned();
        if path.file_name().unwrap() == format!("{name}.schema.json").as_str() {
            root = Some(schema.clone());
        }
        options.with_resource(id, jsonschema::Resource::from_contents(schema).unwrap());
    }
    options.build(&root.unwrap_or_else(|| panic!("no schema named {name}"))).unwrap()
}

pub fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[track_caller]
pub fn assert_valid(schema: &str, document: &Value) {
    let v = validator(schema);
    let errors: Vec<String> = v.iter_errors(document).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}\n{document:#}");
}

/// Every file below `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_owned(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Writes the default synthetic scene (plus a few exposures and batch lists)
/// into `dir` and returns `dir`.
pub fn fixtures(dir: &Path) -> PathBuf {
    let scene = dir.join("scene");
    assert_success(&tomkit([OsStr::new("synth"), OsStr::new("--out"), scene.as_os_str()]));
    let noisy = dir.join("noisy");
    assert_success(&tomkit([
        OsStr::new("synth"),
        OsStr::new("--out"),
        noisy.as_os_str(),
        OsStr::new("--noise"),
        OsStr::new("0.05"),
        OsStr::new("--seed"),
        OsStr::new("9"),
    ]));
    std::fs::write(
        dir.join("pairs.csv"),
        "pred,gt,mask\nnoisy/contaminated.pfm,scene/gt.pfm,scene/mask.png\nscene/contaminated.pfm,scene/gt.pfm,scene/mask.png\nscene/gt.pfm,scene/gt.pfm,scene/mask.png\n",
    )
    .unwrap();

    let hdr = dir.join("hdr");
    std::fs::create_dir_all(&hdr).unwrap();
    let mut names = Vec::new();
    for k in 0..4 {
        let img = tomkit_core::Grid::from_fn(24, 32, |r, c| {
            let base = 0.05 + (r * 32 + c) as f32 / 200.0;
            base * (1.0 + k as f32) + if (r / 4 + c / 4) % 5 == 0 { 8.0 } else { 0.0 }
        })
        .unwrap();
        let rgb = tomkit_core::Grid::new(
            24,
            32,
            3,
            img.data().iter().flat_map(|&v| [v, v * 0.8, v * 1.1]).collect(),
        )
        .unwrap();
        let name = format!("exp{k}.pfm");
        tomkit::pfm::write_pfm(&rgb, hdr.join(&name)).unwrap();
        names.push(name);
    }
    names.reverse();
    std::fs::write(hdr.join("list.txt"), names.join("\n") + "\n").unwrap();
    dir.to_owned()
}

/// Command lines (relative to a fixtures directory) for every subcommand,
/// each writing below `out/`.
pub fn subcommand_invocations(fixtures: &Path, out: &Path, codec: &str) -> Vec<(&'static str, Vec<String>)> {
    let f = |p: &str| fixtures.join(p).to_string_lossy().into_owned();
    let o = |p: &str| out.join(p).to_string_lossy().into_owned();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut cases = vec![
        ("synth", [s(&["synth", "--seed", "5", "--noise", "0.02", "--out"]), vec![o("synth")]].concat()),
        ("maskgen", [s(&["maskgen", "--erode", "1", "--reflectance"]), vec![f("scene/reflectance.pfm"), "--out".into(), o("mask.png")]].concat()),
        (
            "loss",
            [s(&["loss", "--pred"]), vec![f("noisy/contaminated.pfm"), "--gt".into(), f("scene/gt.pfm"), "--tom-mask".into(), f("scene/mask.png"), "--out".into(), o("loss.json")]].concat(),
        ),
        (
            "eval",
            [s(&["eval", "--align", "lstsq", "--list"]), vec![f("pairs.csv"), "--out".into(), o("summary.json"), "--csv".into(), o("summary.csv")]].concat(),
        ),
        (
            "augment",
            [s(&["augment", "--seed", "11", "--list"]), vec![f("hdr/list.txt"), "--out-dir".into(), o("aug")]].concat(),
        ),
        (
            "fuse",
            [
                s(&["fuse", "--codec", codec, "--images"]),
                vec![f("hdr/exp0.pfm"), f("hdr/exp1.pfm"), f("hdr/exp2.pfm"), f("hdr/exp3.pfm")],
                vec!["--workdir".into(), o("codec-work"), "--out".into(), o("fused.pfm")],
            ]
            .concat(),
        ),
    ];
    cases.sort_by_key(|(name, _)| *name);
    cases
}
