use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fidt_core::eval::{average_scores, match_points_with, sweep_tallies};
use fidt_core::io::{self as fio, load_annotations, load_map, read_points_csv, save_map, ReadOptions};
use fidt_core::lmds::{detect as lmds_detect, LmdsParams};
use fidt_core::loss::{gradient_check, total_loss, SsimParams};
use fidt_core::{
    counting_errors, distance_transform, fidt_map, fidt_profile, generate_boxes, idt_map, scene_level_report,
    BoxParams, FidtParams, MapKind, Matching, Point, PointSet, SigmaPolicy, SweepRange, Tally,
};
use rayon::prelude::*;

use crate::batch::{discover, load_truth, Failures, OutputTarget};
use crate::{
    BoxesArgs, DetectArgs, EvalCountArgs, EvalLocArgs, GenGtArgs, GtMode, LossArgs, MatchingArg, ProfileArgs, SigmaMode,
};

pub const MAP_EXT: &str = "fidt";

/// Relative gradient error above which `loss --grad-check` fails.
const GRAD_CHECK_LIMIT: f64 = 1e-3;

fn writer_for(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn gen_gt(args: &GenGtArgs, options: ReadOptions) -> Result<bool> {
    let params = FidtParams {
        alpha: args.alpha,
        beta: args.beta,
        c: args.c,
    };
    match args.mode {
        GtMode::Fidt => params.validate()?,
        GtMode::Idt => FidtParams {
            c: args.c,
            ..FidtParams::IDT
        }
        .validate()?,
        GtMode::Dt => {}
    }
    let inputs = discover(&args.ann, "json")?;
    let target = OutputTarget::prepare(&args.out, inputs.is_dir)?;

    let results: Vec<Result<()>> = inputs
        .items
        .par_iter()
        .map(|input| {
            let doc = load_annotations(&input.path, options)?;
            let dt = distance_transform(&doc.points)?;
            let (map, kind) = match args.mode {
                GtMode::Dt => (dt, MapKind::Distance),
                GtMode::Idt => (idt_map(&dt, args.c)?, MapKind::Idt),
                GtMode::Fidt => (fidt_map(&dt, &params)?, MapKind::Fidt),
            };
            let path = target.path_for(&input.stem, MAP_EXT);
            save_map(&path, &map, kind).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        })
        .collect();

    let mut failures = Failures::default();
    for (input, r) in inputs.items.iter().zip(&results) {
        if let Err(e) = r {
            failures.push_anyhow(input.path.display().to_string(), e);
        }
    }
    failures.report();
    Ok(failures.is_empty())
}

pub fn detect(args: &DetectArgs) -> Result<bool> {
    let params = LmdsParams {
        threshold_ratio: args.threshold_ratio,
        negative_cutoff: args.negative_cutoff,
        pool_size: args.pool_size,
        dedup_plateaus: args.dedup_plateaus,
    };
    params.validate()?;
    let inputs = discover(&args.map, MAP_EXT)?;
    let target = OutputTarget::prepare(&args.out, inputs.is_dir)?;

    let results: Vec<Result<String>> = inputs
        .items
        .par_iter()
        .map(|input| {
            let (map, _) = load_map(&input.path)?;
            let r = lmds_detect(&map, &params)?;
            let points: Vec<Point> = r
                .coordinates
                .iter()
                .map(|&(x, y)| Point::new(x as f64, y as f64))
                .collect();
            let path = target.path_for(&input.stem, "csv");
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            fio::write_points_csv(&points, BufWriter::new(file))?;
            Ok(format!("{},{},{}\n", input.stem, r.count, r.is_negative))
        })
        .collect();

    let mut summary = String::new();
    let mut failures = Failures::default();
    for (input, r) in inputs.items.iter().zip(results) {
        match r {
            Ok(line) => summary.push_str(&line),
            Err(e) => failures.push_anyhow(input.path.display().to_string(), &e),
        }
    }
    print!("{summary}");
    if let Some(path) = &args.summary {
        fs::write(path, &summary).with_context(|| format!("writing {}", path.display()))?;
    }
    failures.report();
    Ok(failures.is_empty())
}

pub fn boxes(args: &BoxesArgs) -> Result<bool> {
    let file = File::open(&args.points).with_context(|| format!("opening {}", args.points.display()))?;
    let points = read_points_csv(file).with_context(|| args.points.display().to_string())?;
    let ps = PointSet::new(args.img_w, args.img_h, points)?;
    let params = BoxParams {
        k: args.k,
        f: args.f,
        ..Default::default()
    };
    let boxes = if ps.is_empty() {
        params.validate()?;
        Vec::new()
    } else {
        generate_boxes(&ps, &params)?
    };
    fio::write_boxes_csv(&boxes, writer_for(args.out.as_deref())?)?;
    Ok(true)
}

pub fn loss(args: &LossArgs, options: ReadOptions) -> Result<bool> {
    let (pred, _) = load_map(&args.pred).with_context(|| args.pred.display().to_string())?;
    let (gt, _) = load_map(&args.gt).with_context(|| args.gt.display().to_string())?;
    let doc = load_annotations(&args.ann, options).with_context(|| args.ann.display().to_string())?;
    let params = SsimParams {
        window: args.window,
        ..Default::default()
    };
    let report = total_loss(&pred, &gt, &doc.points, &params, false)?;
    let issim = match report.issim {
        Some(v) => v.to_string(),
        None => "skipped(N=0)".to_string(),
    };
    println!("mse={} issim={} total={}", report.mse, issim, report.total);
    if args.grad_check {
        let err = gradient_check(&pred, &gt, &doc.points, &params, 1e-4, 1e-8)?;
        println!("grad_check_max_rel_err={err}");
        if err > GRAD_CHECK_LIMIT {
            eprintln!("error: gradient check failed ({err} > {GRAD_CHECK_LIMIT})");
            return Ok(false);
        }
    }
    Ok(true)
}

fn parse_sweep(s: &str) -> Result<SweepRange> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("--sweep expects A:B, got {s:?}"))?;
    Ok(SweepRange::new(a.trim().parse()?, b.trim().parse()?)?)
}

/// Predictions on the ground-truth grid, widened if a prediction lies past it.
fn prediction_set(points: Vec<Point>, truth: &PointSet) -> Result<PointSet> {
    let w = points
        .iter()
        .map(|p| p.x.floor() as usize + 1)
        .fold(truth.width(), usize::max);
    let h = points
        .iter()
        .map(|p| p.y.floor() as usize + 1)
        .fold(truth.height(), usize::max);
    if let Some(p) = points.iter().find(|p| p.x < 0.0 || p.y < 0.0) {
        bail!("negative prediction coordinate ({}, {})", p.x, p.y);
    }
    Ok(PointSet::new(w, h, points)?)
}

pub fn eval_loc(args: &EvalLocArgs, options: ReadOptions) -> Result<bool> {
    let matching = match args.matching {
        MatchingArg::Optimal => Matching::Optimal,
        MatchingArg::Greedy => Matching::Greedy,
    };
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    let policy = match (args.sigma, args.sigma_mode) {
        (Some(s), _) => Some(SigmaPolicy::Fixed(s)),
        (None, Some(SigmaMode::BoxSmall)) => Some(SigmaPolicy::BoxSmall),
        (None, Some(SigmaMode::BoxLarge)) => Some(SigmaPolicy::BoxLarge),
        (None, None) => None,
    };

    let preds = discover(&args.pred, "csv")?;
    let (truth, mut failures) = load_truth(&args.gt, options)?;
    let mut pairs = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for input in &preds.items {
        seen.insert(input.stem.clone());
        match truth.get(&input.stem) {
            Some(doc) => pairs.push((input, doc)),
            None => failures.push(input.path.display().to_string(), "no ground truth with this stem"),
        }
    }
    for stem in truth.keys().filter(|s| !seen.contains(*s)) {
        failures.push(stem.clone(), "no prediction file with this stem");
    }

    // Per image: one tally per threshold (a single one outside sweep mode).
    let results: Vec<Result<Vec<Tally>>> = pairs
        .par_iter()
        .map(|(input, doc)| {
            let pts = read_points_csv(File::open(&input.path)?)?;
            let pred = prediction_set(pts, &doc.points)?;
            Ok(match (sweep, policy) {
                (Some(range), _) => sweep_tallies(&pred, &doc.points, range, matching)?,
                (None, Some(policy)) => vec![match_points_with(&pred, &doc.points, policy, matching)?.tally()],
                (None, None) => unreachable!("clap requires a threshold"),
            })
        })
        .collect();

    let mut out = String::new();
    let mut totals: Vec<Tally> = Vec::new();
    if sweep.is_some() {
        out.push_str("image_id,precision,recall,f1\n");
    } else {
        out.push_str("image_id,tp,fp,fn,precision,recall,f1\n");
    }
    for ((input, _), r) in pairs.iter().zip(results) {
        let tallies = match r {
            Ok(t) => t,
            Err(e) => {
                failures.push_anyhow(input.path.display().to_string(), &e);
                continue;
            }
        };
        if totals.is_empty() {
            totals = vec![Tally::default(); tallies.len()];
        }
        for (acc, t) in totals.iter_mut().zip(&tallies) {
            *acc += *t;
        }
        if sweep.is_some() {
            let s = average_scores(&tallies);
            writeln!(out, "{},{},{},{}", input.stem, s.precision, s.recall, s.f1)?;
        } else {
            let t = tallies[0];
            let s = t.scores();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                input.stem, t.true_positives, t.false_positives, t.false_negatives, s.precision, s.recall, s.f1
            )?;
        }
    }
    if !totals.is_empty() {
        let s = average_scores(&totals);
        if sweep.is_none() {
            let t = totals[0];
            writeln!(
                out,
                "tp={} fp={} fn={}",
                t.true_positives, t.false_positives, t.false_negatives
            )?;
        }
        writeln!(out, "precision={} recall={} f1={}", s.precision, s.recall, s.f1)?;
    }
    print!("{out}");
    failures.report();
    Ok(failures.is_empty())
}

/// `image_id,count[,...]` lines; blank lines skipped.
fn read_counts(path: &Path) -> Result<BTreeMap<String, f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut counts = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (Some(id), Some(count)) = (fields.next(), fields.next()) else {
            bail!("{}:{}: expected image_id,count", path.display(), i + 1);
        };
        let count: f64 = count
            .parse()
            .ok()
            .filter(|c: &f64| c.is_finite() && *c >= 0.0)
            .ok_or_else(|| anyhow!("{}:{}: bad count {count:?}", path.display(), i + 1))?;
        if counts.insert(id.to_string(), count).is_some() {
            bail!("{}:{}: duplicate image id {id:?}", path.display(), i + 1);
        }
    }
    Ok(counts)
}

pub fn eval_count(args: &EvalCountArgs, options: ReadOptions) -> Result<bool> {
    let preds = read_counts(&args.pred)?;
    let is_csv = args.gt.is_file() && args.gt.extension().and_then(|e| e.to_str()) == Some("csv");
    let (truth, mut failures) = if is_csv {
        (read_counts(&args.gt)?, Failures::default())
    } else {
        let (docs, failures) = load_truth(&args.gt, options)?;
        let counts = docs.into_iter().map(|(k, d)| (k, d.points.len() as f64)).collect();
        (counts, failures)
    };

    let mut matched = Vec::new();
    for (id, &p) in &preds {
        match truth.get(id) {
            Some(&g) => matched.push((p, g)),
            None => failures.push(id.clone(), "no ground truth for this image id"),
        }
    }
    for id in truth.keys().filter(|k| !preds.contains_key(*k)) {
        failures.push(id.clone(), "no prediction for this image id");
    }
    if matched.is_empty() {
        failures.report();
        bail!("no image ids shared between predictions and ground truth");
    }

    let (p, g): (Vec<f64>, Vec<f64>) = matched.iter().copied().unzip();
    let e = counting_errors(&p, &g)?;
    let mut out = format!("images={}\nmae={}\nmse={}\n", matched.len(), e.mae, e.mse);
    if args.scene_report {
        let per_image: Vec<(f64, usize)> = matched.iter().map(|&(p, g)| (p, g.round() as usize)).collect();
        let report = scene_level_report(&per_image)?;
        out.push_str("scene,images,mae\n");
        for (bucket, n, mae) in &report.buckets {
            writeln!(out, "{},{},{}", bucket.label(), n, mae)?;
        }
        writeln!(out, "avg,{},{}", matched.len(), report.average)?;
    }
    print!("{out}");
    failures.report();
    Ok(failures.is_empty())
}

pub fn profile(args: &ProfileArgs) -> Result<bool> {
    let params = FidtParams {
        alpha: args.alpha,
        beta: args.beta,
        c: args.c,
    };
    let samples = fidt_profile(&params, args.max_d, args.step)?;
    let mut w = writer_for(args.out.as_deref())?;
    writeln!(w, "distance,idt,fidt")?;
    for s in samples {
        writeln!(w, "{},{},{}", s.distance, s.idt, s.fidt)?;
    }
    w.flush()?;
    Ok(true)
}
