#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use fidt_core::io::save_map;
use fidt_core::{DenseMap, MapKind};

pub fn fidt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fidt"))
        .args(args)
        .env_remove("FIDT_JOBS")
        .output()
        .expect("spawn fidt")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn write_annotation(
    path: &Path,
    id: &str,
    w: usize,
    h: usize,
    points: &[(f64, f64)],
    boxes: Option<&[(f64, f64)]>,
) {
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("[{x},{y}]")).collect();
    let mut json = format!(
        r#"{{"image_id":"{id}","width":{w},"height":{h},"points":[{}]"#,
        pts.join(",")
    );
    if let Some(b) = boxes {
        let bs: Vec<String> = b.iter().map(|(w, h)| format!("[{w},{h}]")).collect();
        json.push_str(&format!(r#","boxes":[{}]"#, bs.join(",")));
    }
    json.push('}');
    std::fs::write(path, json).unwrap();
}

pub fn write_map(path: &Path, map: &DenseMap) {
    save_map(path, map, MapKind::Predicted).unwrap();
}
