//! Input discovery, output naming and per-file failure reporting.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fidt_core::io::{load_annotations, ReadOptions};
use fidt_core::AnnotationDocument;

#[derive(Clone, Debug)]
pub struct Input {
    /// File stem; doubles as the image id.
    pub stem: String,
    pub path: PathBuf,
}

/// A single file, or every `*.ext` file in a directory sorted by stem.
pub struct Inputs {
    pub items: Vec<Input>,
    pub is_dir: bool,
}

pub fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .with_context(|| format!("cannot derive an image id from {}", path.display()))
}

pub fn discover(path: &Path, ext: &str) -> Result<Inputs> {
    if path.is_dir() {
        let mut items = Vec::new();
        for entry in fs::read_dir(path).with_context(|| format!("reading {}", path.display()))? {
            let p = entry?.path();
            if p.is_file() && p.extension().and_then(|e| e.to_str()) == Some(ext) {
                items.push(Input {
                    stem: stem_of(&p)?,
                    path: p,
                });
            }
        }
        items.sort_by(|a, b| a.stem.cmp(&b.stem));
        Ok(Inputs { items, is_dir: true })
    } else if path.is_file() {
        Ok(Inputs {
            items: vec![Input {
                stem: stem_of(path)?,
                path: path.to_path_buf(),
            }],
            is_dir: false,
        })
    } else {
        bail!("{} does not exist", path.display())
    }
}

/// Where the output for `stem` goes. Directory inputs (or an existing output
/// directory) get `<out>/<stem>.<ext>`; otherwise `out` is the file itself.
pub struct OutputTarget {
    root: PathBuf,
    as_dir: bool,
}

impl OutputTarget {
    pub fn prepare(out: &Path, input_is_dir: bool) -> Result<Self> {
        let as_dir = input_is_dir || out.is_dir();
        if input_is_dir {
            fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        } else if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !as_dir && !parent.is_dir() {
                bail!("output directory {} does not exist", parent.display());
            }
        }
        Ok(Self {
            root: out.to_path_buf(),
            as_dir,
        })
    }

    pub fn path_for(&self, stem: &str, ext: &str) -> PathBuf {
        if self.as_dir {
            self.root.join(format!("{stem}.{ext}"))
        } else {
            self.root.clone()
        }
    }
}

/// Per-file failures, printed in input order.
#[derive(Default)]
pub struct Failures(Vec<(String, String)>);

impl Failures {
    pub fn push(&mut self, name: impl Into<String>, err: impl std::fmt::Display) {
        self.0.push((name.into(), err.to_string()));
    }

    pub fn push_anyhow(&mut self, name: impl Into<String>, err: &anyhow::Error) {
        self.0.push((name.into(), format!("{err:#}")));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn report(&self) {
        for (name, msg) in &self.0 {
            eprintln!("error: {name}: {msg}");
        }
        if !self.0.is_empty() {
            eprintln!("{} input(s) failed", self.0.len());
        }
    }
}

/// Annotation documents keyed by stem, from a JSON file or a directory of them.
pub fn load_truth(path: &Path, options: ReadOptions) -> Result<(BTreeMap<String, AnnotationDocument>, Failures)> {
    let inputs = discover(path, "json")?;
    let mut docs = BTreeMap::new();
    let mut failures = Failures::default();
    for input in inputs.items {
        match load_annotations(&input.path, options) {
            Ok(doc) => {
                docs.insert(input.stem, doc);
            }
            Err(e) => failures.push(input.path.display().to_string(), e),
        }
    }
    Ok((docs, failures))
}
