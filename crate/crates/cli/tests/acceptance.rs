//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::HashSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fidt_core::io::{
    decode_map, encode_map, parse_annotations, read_boxes_csv, read_points_csv, write_annotations, write_boxes_csv,
    write_points_csv, ReadOptions,
};
use fidt_core::{
    counting_errors, detect, distance_transform, distance_transform_bruteforce, fidt_map, ground_truth_map, idt_map,
    issim_loss, match_points, scene_level_report, ssim, total_loss, AnnotationDocument, DenseMap, Error, FidtParams,
    HeadBox, LmdsParams, MapKind, Point, PointSet, PseudoBox, SceneBucket, SigmaPolicy, SsimParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = fn() -> Result<String, String>;
type ErrorCheck = fn(&Error) -> bool;

fn main() -> ExitCode {
    let criteria: [(&str, &str, Check); 8] = [
        (
            "AC1",
            "distance transform matches brute force; 2048x2048 / 10k points under 1 s",
            ac1_distance,
        ),
        ("AC2", "FIDT analytic values; (0,1) reproduces IDT", ac2_fidt),
        ("AC3", "gen-gt -> detect round trip; negative samples", ac3_lmds),
        (
            "AC4",
            "SSIM / I-SSIM identities and finite-difference gradient",
            ac4_loss,
        ),
        (
            "AC5",
            "matching equals exhaustive optimum; threshold monotonicity",
            ac5_matching,
        ),
        ("AC6", "counting metrics and scene buckets", ac6_counting),
        ("AC7", "file format round trips and typed errors", ac7_formats),
        (
            "AC8",
            "CLI output byte-identical across runs and --jobs",
            ac8_determinism,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panic".into())));
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name} ({detail})"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {why}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_points(rng: &mut StdRng, w: usize, h: usize, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64)))
        .collect()
}

fn ac1_distance() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let w = rng.gen_range(1..=256);
        let h = rng.gen_range(1..=256);
        let n = rng.gen_range(0..=50);
        let ps = PointSet::new(w, h, random_points(&mut rng, w, h, n)).unwrap();
        let fast = distance_transform(&ps).unwrap();
        let brute = distance_transform_bruteforce(&ps).unwrap();
        for (a, b) in fast.values().iter().zip(brute.values()) {
            worst = worst.max((a - b).abs());
        }
        ensure!(worst <= 1e-6, "case {case} ({w}x{h}, {n} points): error {worst}");
    }

    let ps = PointSet::new(2048, 2048, random_points(&mut rng, 2048, 2048, 10_000)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut best = Duration::MAX;
    for _ in 0..3 {
        let start = Instant::now();
        let map = pool.install(|| distance_transform(&ps)).unwrap();
        best = best.min(start.elapsed());
        std::hint::black_box(map);
    }
    ensure!(best < Duration::from_secs(1), "2048x2048 took {best:?} on one thread");
    Ok(format!("max error {worst:e}, 2048x2048 in {best:.2?} on one thread"))
}

fn ac2_fidt() -> Result<String, String> {
    let params = FidtParams::default();
    let ps = PointSet::from_pixels(64, 64, &[(10, 10), (40, 50)]).unwrap();
    let dist = distance_transform(&ps).unwrap();
    let map = fidt_map(&dist, &params).unwrap();
    let expected = [
        ((10, 10), 1.0),
        ((40, 50), 1.0),
        ((11, 10), 0.5),
        ((40, 49), 0.5),
        ((20, 10), 1.0 / (10f64.powf(0.95) + 1.0)),
        ((40, 40), 1.0 / (10f64.powf(0.95) + 1.0)),
    ];
    for ((x, y), want) in expected {
        let got = map.get(x, y);
        ensure!(
            (got - want).abs() <= 1e-6,
            "value at ({x},{y}) is {got}, expected {want}"
        );
    }

    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..20 {
        let n = rng.gen_range(0..=20);
        let ps = PointSet::new(80, 60, random_points(&mut rng, 80, 60, n)).unwrap();
        let dist = distance_transform(&ps).unwrap();
        let degenerate = fidt_map(
            &dist,
            &FidtParams {
                alpha: 0.0,
                beta: 1.0,
                c: 1.0,
            },
        )
        .unwrap();
        let idt = idt_map(&dist, 1.0).unwrap();
        ensure!(degenerate == idt, "(alpha, beta) = (0, 1) differs from IDT");
    }
    Ok("analytic values within 1e-6, IDT exact".into())
}

fn ac3_lmds() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(3);
    let params = LmdsParams::default();
    for case in 0..100 {
        let (w, h) = (rng.gen_range(8..=96), rng.gen_range(8..=96));
        let mut pixels: Vec<(usize, usize)> = Vec::new();
        for _ in 0..rng.gen_range(0..=60) {
            let c = (rng.gen_range(0..w), rng.gen_range(0..h));
            if pixels.iter().all(|p| p.0.abs_diff(c.0).max(p.1.abs_diff(c.1)) >= 2) {
                pixels.push(c);
            }
        }
        let points: Vec<Point> = pixels
            .iter()
            .map(|&(x, y)| {
                let mut jitter = |v: usize, max: usize| {
                    let lo = if v == 0 { 0.0 } else { -0.49 };
                    let hi = if v + 1 == max { 0.0 } else { 0.49 };
                    v as f64 + rng.gen_range(lo..=hi)
                };
                Point::new(jitter(x, w), jitter(y, h))
            })
            .collect();
        let truth = PointSet::new(w, h, points).unwrap();

        let gt = ground_truth_map(&truth, &FidtParams::default()).unwrap();
        let (stored, kind) = decode_map(&encode_map(&gt, MapKind::Fidt).unwrap()).unwrap();
        ensure!(kind == MapKind::Fidt, "map kind lost");
        let found = detect(&stored, &params).unwrap();
        ensure!(
            found.is_negative == pixels.is_empty(),
            "case {case}: is_negative = {}",
            found.is_negative
        );

        let detected = PointSet::from_pixels(w, h, &found.coordinates).unwrap();
        let rounded = PointSet::from_pixels(w, h, &truth.pixels()).unwrap();
        let report = match_points(&detected, &rounded, SigmaPolicy::Fixed(0.0)).unwrap();
        ensure!(
            report.precision == 1.0 && report.recall == 1.0,
            "case {case}: precision {} recall {}",
            report.precision,
            report.recall
        );
    }

    let zero = detect(&DenseMap::zeros(32, 32).unwrap(), &params).unwrap();
    ensure!(zero.is_negative && zero.count == 0, "all-zero map not negative");
    for _ in 0..20 {
        let ps = PointSet::new(40, 40, random_points(&mut rng, 40, 40, 5)).unwrap();
        let gt = ground_truth_map(&ps, &FidtParams::default()).unwrap();
        let factor = rng.gen_range(0.0..0.1 / gt.max());
        let r = detect(&gt.scaled(factor).unwrap(), &params).unwrap();
        ensure!(
            r.is_negative && r.count == 0,
            "map scaled to max {} not negative",
            gt.max() * factor
        );
    }
    Ok("100 sets recovered exactly, negatives flagged".into())
}

/// Clipped `window`-sized square around each rounded annotation.
fn local_regions(ann: &PointSet, window: usize) -> Vec<(usize, usize, usize, usize)> {
    let (w, h) = (ann.width(), ann.height());
    let half = window / 2;
    ann.pixels()
        .into_iter()
        .map(|(cx, cy)| {
            let x0 = cx.saturating_sub(half);
            let y0 = cy.saturating_sub(half);
            let x1 = (cx + window - half).min(w);
            let y1 = (cy + window - half).min(h);
            (x0, y0, x1, y1)
        })
        .collect()
}

fn local_ssim(e: &[f64], g: &[f64], w: usize, r: (usize, usize, usize, usize)) -> f64 {
    let (l1, l2) = (1e-4, 9e-4);
    let idx: Vec<usize> = (r.1..r.3).flat_map(|y| (r.0..r.2).map(move |x| y * w + x)).collect();
    let n = idx.len() as f64;
    let me = idx.iter().map(|&i| e[i]).sum::<f64>() / n;
    let mg = idx.iter().map(|&i| g[i]).sum::<f64>() / n;
    let ve = idx.iter().map(|&i| (e[i] - me).powi(2)).sum::<f64>() / n;
    let vg = idx.iter().map(|&i| (g[i] - mg).powi(2)).sum::<f64>() / n;
    let cov = idx.iter().map(|&i| (e[i] - me) * (g[i] - mg)).sum::<f64>() / n;
    (2.0 * me * mg + l1) * (2.0 * cov + l2) / ((me * me + mg * mg + l1) * (ve + vg + l2))
}

fn local_total(e: &[f64], g: &[f64], w: usize, regions: &[(usize, usize, usize, usize)]) -> f64 {
    let mse = e.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / e.len() as f64;
    let issim = regions.iter().map(|&r| 1.0 - local_ssim(e, g, w, r)).sum::<f64>() / regions.len() as f64;
    mse + issim
}

fn ac4_loss() -> Result<String, String> {
    let params = SsimParams::default();
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..20 {
        let a = DenseMap::new(24, 24, (0..576).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let s = ssim(&a, &a, &params).unwrap();
        ensure!((s - 1.0).abs() <= 1e-9, "SSIM(A,A) = {s}");
    }

    for _ in 0..20 {
        let (w, h) = (96, 80);
        let ann = PointSet::new(w, h, random_points(&mut rng, 30, 30, 3)).unwrap();
        let gt = ground_truth_map(&ann, &FidtParams::default()).unwrap();
        let same = issim_loss(&gt, &gt, &ann, &params).unwrap();
        ensure!(same == 0.0, "I-SSIM of identical maps = {same}");

        let est = DenseMap::new(w, h, gt.values().iter().map(|v| v * rng.gen_range(0.5..1.5)).collect()).unwrap();
        let base = issim_loss(&est, &gt, &ann, &params).unwrap();
        let regions = local_regions(&ann, params.window);
        let mut moved = est.clone();
        for y in 0..h {
            for x in 0..w {
                let inside = regions.iter().any(|r| x >= r.0 && x < r.2 && y >= r.1 && y < r.3);
                if !inside {
                    moved.set(x, y, rng.gen()).unwrap();
                }
            }
        }
        let after = issim_loss(&moved, &gt, &ann, &params).unwrap();
        ensure!(after == base, "background change moved I-SSIM from {base} to {after}");
    }

    let step = 1e-4;
    let mut worst = 0.0f64;
    for case in 0..20 {
        let (w, h) = (32, 32);
        let ann = PointSet::new(w, h, random_points(&mut rng, w, h, 3)).unwrap();
        let gt = ground_truth_map(&ann, &FidtParams::default()).unwrap();
        let est = DenseMap::new(w, h, (0..w * h).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let report = total_loss(&est, &gt, &ann, &params, true).unwrap();
        let grad = report.gradient.ok_or("no gradient returned")?;

        let regions = local_regions(&ann, params.window);
        let g = gt.values();
        let mut e = est.values().to_vec();
        let local = local_total(&e, g, w, &regions);
        ensure!(
            (local - report.total).abs() <= 1e-12,
            "case {case}: loss {} vs oracle {local}",
            report.total
        );

        for i in 0..e.len() {
            let orig = e[i];
            e[i] = orig + step;
            let up = local_total(&e, g, w, &regions);
            e[i] = orig - step;
            let down = local_total(&e, g, w, &regions);
            e[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grad.values()[i];
            let scale = analytic.abs().max(numeric.abs());
            if scale > 0.0 {
                worst = worst.max((analytic - numeric).abs() / scale);
            }
        }
        ensure!(worst <= 1e-4, "case {case}: max relative gradient error {worst:e}");
    }
    Ok(format!("max relative gradient error {worst:e}"))
}

/// Largest number of disjoint pairs within `sigma`.
fn exhaustive(pred: &[Point], gt: &[Point], sigma: f64) -> usize {
    fn go(i: usize, pred: &[Point], gt: &[Point], sigma: f64, used: &mut Vec<bool>) -> usize {
        if i == pred.len() {
            return 0;
        }
        let mut best = go(i + 1, pred, gt, sigma, used);
        for j in 0..gt.len() {
            if !used[j] && pred[i].distance(&gt[j]) <= sigma {
                used[j] = true;
                best = best.max(1 + go(i + 1, pred, gt, sigma, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, pred, gt, sigma, &mut vec![false; gt.len()])
}

fn ac5_matching() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(5);
    for case in 0..500 {
        let (np, ng) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
        let pred = random_points(&mut rng, 24, 24, np);
        let gt = random_points(&mut rng, 24, 24, ng);
        let sigma = rng.gen_range(0.5..8.0);
        let ps_pred = PointSet::new(24, 24, pred.clone()).unwrap();
        let ps_gt = PointSet::new(24, 24, gt.clone()).unwrap();
        let report = match_points(&ps_pred, &ps_gt, SigmaPolicy::Fixed(sigma)).unwrap();
        let best = exhaustive(&pred, &gt, sigma);
        ensure!(
            report.true_positives == best,
            "case {case}: {} matches, optimum {best}",
            report.true_positives
        );
        let (mut ps, mut gs) = (HashSet::new(), HashSet::new());
        for p in &report.pairs {
            ensure!(
                ps.insert(p.pred_index) && gs.insert(p.gt_index),
                "case {case}: not one-to-one"
            );
            ensure!(p.distance <= sigma, "case {case}: pair beyond sigma");
        }
        ensure!(
            report.false_positives == pred.len() - best && report.false_negatives == gt.len() - best,
            "case {case}: inconsistent tallies"
        );

        let mut last = 0;
        for s in 1..=20 {
            let tp = match_points(&ps_pred, &ps_gt, SigmaPolicy::Fixed(s as f64))
                .unwrap()
                .true_positives;
            ensure!(tp >= last, "case {case}: TP fell from {last} to {tp} at sigma {s}");
            last = tp;
        }
    }

    let gt = PointSet::new(64, 64, vec![Point::new(0.0, 0.0), Point::new(10.0, 10.0)]).unwrap();
    let pred = PointSet::new(64, 64, vec![Point::new(1.0, 0.0), Point::new(50.0, 50.0)]).unwrap();
    let r = match_points(&pred, &gt, SigmaPolicy::Fixed(4.0)).unwrap();
    ensure!(
        r.precision == 0.5 && r.recall == 0.5 && r.f1 == 0.5,
        "worked example gave {} / {} / {}",
        r.precision,
        r.recall,
        r.f1
    );
    Ok("500 instances optimal, monotone over sigma 1..20".into())
}

fn ac6_counting() -> Result<String, String> {
    let e = counting_errors(&[10.0, 20.0], &[12.0, 16.0]).unwrap();
    ensure!((e.mae - 3.0).abs() <= 1e-12, "MAE {}", e.mae);
    ensure!((e.mse - 10f64.sqrt()).abs() <= 1e-12, "MSE {}", e.mse);

    let expected = [
        (0, SceneBucket::S0),
        (1, SceneBucket::S1),
        (100, SceneBucket::S1),
        (101, SceneBucket::S2),
        (500, SceneBucket::S2),
        (501, SceneBucket::S3),
        (5000, SceneBucket::S3),
        (5001, SceneBucket::S4),
    ];
    for (count, bucket) in expected {
        let got = SceneBucket::from_count(count);
        ensure!(got == bucket, "count {count} went to {}", got.label());
    }
    let report = scene_level_report(&[(98.0, 100), (105.0, 101)]).unwrap();
    ensure!(
        report.buckets == vec![(SceneBucket::S1, 1, 2.0), (SceneBucket::S2, 1, 4.0)] && report.average == 3.0,
        "scene report {report:?}"
    );
    Ok("MAE 3, MSE sqrt(10), boundaries exact".into())
}

fn ac7_formats() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..100 {
        let (w, h) = (rng.gen_range(1..=64), rng.gen_range(1..=64));
        let values: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1e3f32..1e3) as f64).collect();
        let map = DenseMap::new(w, h, values).unwrap();
        let bytes = encode_map(&map, MapKind::Predicted).unwrap();
        let (back, kind) = decode_map(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(kind == MapKind::Predicted && back == map, "case {case}: map changed");
        ensure!(
            encode_map(&back, kind).unwrap() == bytes,
            "case {case}: map bytes changed"
        );

        let n = rng.gen_range(0..=40);
        let points = random_points(&mut rng, w, h, n);
        let boxes = rng.gen_bool(0.5).then(|| {
            (0..n)
                .map(|_| HeadBox {
                    w: rng.gen_range(0.1..50.0),
                    h: rng.gen_range(0.1..50.0),
                })
                .collect()
        });
        let doc = AnnotationDocument {
            image_id: format!("img_{case}"),
            points: PointSet::with_boxes(w, h, points.clone(), boxes).unwrap(),
        };
        let mut text = Vec::new();
        write_annotations(&doc, &mut text).unwrap();
        let back = parse_annotations(std::str::from_utf8(&text).unwrap(), ReadOptions::default())
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == doc, "case {case}: annotation changed");

        let mut csv = Vec::new();
        write_points_csv(&points, &mut csv).unwrap();
        ensure!(
            read_points_csv(&csv[..]).unwrap() == points,
            "case {case}: point CSV changed"
        );
        let boxes: Vec<PseudoBox> = points
            .iter()
            .map(|&center| PseudoBox {
                center,
                size: rng.gen_range(0.01..40.0),
            })
            .collect();
        let mut csv = Vec::new();
        write_boxes_csv(&boxes, &mut csv).unwrap();
        ensure!(
            read_boxes_csv(&csv[..]).unwrap() == boxes,
            "case {case}: box CSV changed"
        );
    }

    let good = encode_map(&DenseMap::filled(3, 2, 0.5).unwrap(), MapKind::Fidt).unwrap();
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    let mut bad_version = good.clone();
    bad_version[4] = 9;
    let mut bad_kind = good.clone();
    bad_kind[16] = 7;
    let mut nan = good.clone();
    nan[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
    let mut trailing = good.clone();
    trailing.push(0);
    let cases: Vec<(&str, Vec<u8>, ErrorCheck)> = vec![
        ("truncated", good[..good.len() - 1].to_vec(), |e| {
            matches!(e, Error::Truncated { .. })
        }),
        ("short header", good[..10].to_vec(), |e| {
            matches!(e, Error::Truncated { .. })
        }),
        ("bad magic", bad_magic, |e| matches!(e, Error::BadMagic { .. })),
        ("bad version", bad_version, |e| {
            matches!(e, Error::UnsupportedVersion(9))
        }),
        ("bad kind", bad_kind, |e| matches!(e, Error::UnknownMapKind(7))),
        ("non-finite", nan, |e| matches!(e, Error::NonFinite { .. })),
        ("trailing", trailing, |e| matches!(e, Error::TrailingBytes)),
    ];
    for (name, bytes, expect) in cases {
        match decode_map(&bytes) {
            Ok(_) => return Err(format!("{name} map decoded")),
            Err(e) => ensure!(expect(&e), "{name} map gave {e:?}"),
        }
    }

    let docs: [(&str, ErrorCheck); 5] = [
        (r#"{"image_id":"a","width":4,"height":4}"#, |e| {
            matches!(e, Error::Schema(_) | Error::Json(_))
        }),
        (r#"{"image_id":"a","width":4,"height":4,"points":[[5,1]]}"#, |e| {
            matches!(e, Error::PointOutOfBounds { .. })
        }),
        (
            r#"{"image_id":"a","width":4,"height":4,"points":[[1,1]],"boxes":[]}"#,
            |e| matches!(e, Error::BoxCountMismatch { .. }),
        ),
        (r#"{"image_id":"a","width":4,"height":4,"points":[],"extra":1}"#, |e| {
            matches!(e, Error::Schema(_) | Error::Json(_))
        }),
        (r#"{"image_id":"a","width":4,"height":4,"points":[[1,1]"#, |e| {
            matches!(e, Error::Json(_))
        }),
    ];
    for (text, expect) in docs {
        match parse_annotations(text, ReadOptions::default()) {
            Ok(_) => return Err(format!("accepted {text}")),
            Err(e) => ensure!(expect(&e), "{text} gave {e:?}"),
        }
    }

    for text in ["1,2\n3\n", "1,2\nx,y\n", "1,2,3\n", "1,nan\n"] {
        match read_points_csv(text.as_bytes()) {
            Ok(_) => return Err(format!("accepted point CSV {text:?}")),
            Err(e) => ensure!(matches!(e, Error::Csv { line: 1 | 2, .. }), "{text:?} gave {e:?}"),
        }
    }
    match read_boxes_csv("1,2,3\n4,5\n".as_bytes()) {
        Err(Error::Csv { line: 2, .. }) => {}
        other => return Err(format!("box CSV gave {other:?}")),
    }
    Ok("100 documents round-tripped, malformed inputs rejected".into())
}

/// Stdout plus every file under `out`, in name order.
fn snapshot(args: &[&str], jobs: &str, out: Option<&Path>) -> Vec<u8> {
    if let Some(dir) = out {
        let _ = fs::remove_dir_all(dir);
    }
    let mut full = vec!["--jobs", jobs];
    full.extend_from_slice(args);
    let o = fidt(&full);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    let mut bytes = o.stdout;
    if let Some(dir) = out {
        let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            bytes.extend_from_slice(f.file_name().unwrap().to_str().unwrap().as_bytes());
            bytes.extend(fs::read(f).unwrap());
        }
    }
    bytes
}

fn ac8_determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let ann = root.join("ann");
    fs::create_dir(&ann).unwrap();
    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..12 {
        let (w, h) = (rng.gen_range(64..=160), rng.gen_range(64..=160));
        let n = if i == 0 { 0 } else { rng.gen_range(1..=80) };
        let pts: Vec<(f64, f64)> = random_points(&mut rng, w, h, n).iter().map(|p| (p.x, p.y)).collect();
        let boxes: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(2.0..20.0), rng.gen_range(2.0..20.0)))
            .collect();
        write_annotation(
            &ann.join(format!("img{i:02}.json")),
            &format!("img{i:02}"),
            w,
            h,
            &pts,
            Some(&boxes),
        );
    }
    let maps = root.join("maps");
    let preds = root.join("preds");
    let box_out = root.join("boxes");
    fs::create_dir(&box_out).unwrap();
    let noisy = root.join("noisy.fidt");
    let summary = root.join("summary.csv");

    let max = std::thread::available_parallelism().map_or(4, |n| n.get()).to_string();
    let mut subcommands = 0;
    let mut check = |args: Vec<String>, out: Option<&Path>| -> Result<(), String> {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let reference = snapshot(&args, "1", out);
        for jobs in ["1", "2", max.as_str(), "8"] {
            ensure!(
                snapshot(&args, jobs, out) == reference,
                "{} differs with --jobs {jobs}",
                args[0]
            );
        }
        subcommands += 1;
        Ok(())
    };
    let s = |p: &Path| p.to_str().unwrap().to_string();

    check(
        vec!["gen-gt".into(), "--ann".into(), s(&ann), "--out".into(), s(&maps)],
        Some(&maps),
    )?;
    check(
        vec![
            "detect".into(),
            "--map".into(),
            s(&maps),
            "--out".into(),
            s(&preds),
            "--summary".into(),
            s(&summary),
        ],
        Some(&preds),
    )?;
    check(
        vec![
            "boxes".into(),
            "--points".into(),
            s(&preds.join("img05.csv")),
            "--img-w".into(),
            "160".into(),
            "--img-h".into(),
            "160".into(),
        ],
        None,
    )?;

    let (gt_map, _) = fidt_core::io::load_map(maps.join("img03.fidt")).unwrap();
    let est = DenseMap::new(
        gt_map.width(),
        gt_map.height(),
        gt_map
            .values()
            .iter()
            .map(|v| (v + rng.gen_range(-0.05..0.05f32) as f64).max(0.0))
            .collect(),
    )
    .unwrap();
    write_map(&noisy, &est);
    check(
        vec![
            "loss".into(),
            "--pred".into(),
            s(&noisy),
            "--gt".into(),
            s(&maps.join("img03.fidt")),
            "--ann".into(),
            s(&ann.join("img03.json")),
            "--grad-check".into(),
        ],
        None,
    )?;
    for mode in [
        &["--sigma", "4"][..],
        &["--sigma-mode", "box-large"],
        &["--sweep", "1:100"],
        &["--sigma", "8", "--matching", "greedy"],
    ] {
        let mut args = vec!["eval-loc".into(), "--pred".into(), s(&preds), "--gt".into(), s(&ann)];
        args.extend(mode.iter().map(|m| m.to_string()));
        check(args, None)?;
    }
    check(
        vec![
            "eval-count".into(),
            "--pred".into(),
            s(&summary),
            "--gt".into(),
            s(&ann),
            "--scene-report".into(),
        ],
        None,
    )?;
    check(
        vec![
            "profile".into(),
            "--max-d".into(),
            "50".into(),
            "--step".into(),
            "0.25".into(),
        ],
        None,
    )?;
    Ok(format!(
        "{subcommands} invocations identical over --jobs 1, 2, {max} (max), 8"
    ))
}
