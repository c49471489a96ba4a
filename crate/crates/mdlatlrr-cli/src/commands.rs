//! Subcommand implementations; thin wrappers over the library calls.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mdlatlrr::{
    build_training_set, evaluate, fuse_images, mdlatlrr, solve_latlrr, DetailNorm, Error,
    FusionConfig, LatLrrParams, MetricReport, ProjectionMatrix, Provenance, Result,
};
use ndarray::Array2;

use crate::imgio::{self, named_io};
use crate::report::{self, ReportFormat};
use crate::{BenchArgs, DecomposeArgs, EvalArgs, FuseArgs, SweepArg, TrainArgs};

const IMAGE_EXTENSIONS: [&str; 2] = ["png", "pgm"];
const SWEEP_STRIDES: [usize; 8] = [1, 2, 4, 6, 8, 10, 12, 14];

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Sorted image paths directly under `dir`.
fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| named_io(dir, e))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::Format(format!(
            "no png/pgm images in {}",
            dir.display()
        )));
    }
    Ok(out)
}

fn load_images(paths: &[PathBuf]) -> Result<Vec<Array2<f64>>> {
    paths.iter().map(|p| imgio::load_gray(p)).collect()
}

/// `(id, ir, vis)` from `dir/ir` and `dir/vis`, matched by file name.
fn matched_pairs(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let irs = list_images(&dir.join("ir"))?;
    let vis_dir = dir.join("vis");
    let mut out = Vec::with_capacity(irs.len());
    for ir in irs {
        let name = ir
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Format(format!("unreadable file name {}", ir.display())))?
            .to_string();
        let vis = vis_dir.join(&name);
        if !vis.is_file() {
            return Err(Error::Format(format!(
                "missing visible counterpart {}",
                vis.display()
            )));
        }
        let id = ir
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(&name)
            .to_string();
        out.push((id, ir, vis));
    }
    Ok(out)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let params = LatLrrParams {
        lambda: args.lambda,
        max_iters: args.max_iters,
        tol: args.tol,
        ..LatLrrParams::default()
    };
    let paths = list_images(&args.data)?;
    let images = load_images(&paths)?;
    println!(
        "loaded {} training images from {}",
        images.len(),
        args.data.display()
    );

    let ts = build_training_set(
        &images,
        args.patch_size,
        args.stride,
        args.detail,
        args.smooth,
        args.threshold,
        args.seed,
    )?;
    println!(
        "pools: {} detail, {} smooth; sampled {}+{} columns",
        ts.detail_pool, ts.smooth_pool, args.detail, args.smooth
    );

    let solution = solve_latlrr(ts.x.view(), &params)?;
    println!(
        "solver: {} iterations, residual {:.3e}",
        solution.iterations, solution.final_residual
    );
    if !solution.converged {
        eprintln!(
            "solver did not reach tol {:.1e} within {} iterations",
            params.tol, params.max_iters
        );
        return Err(Error::Divergence {
            iteration: solution.iterations,
        });
    }

    let proj = ProjectionMatrix::new(
        args.patch_size,
        solution.l,
        Provenance {
            lambda: args.lambda,
            seed: args.seed,
            detail_count: args.detail,
            smooth_count: args.smooth,
            threshold: args.threshold,
        },
    )?;
    proj.save(&args.out)?;
    let dim = args.patch_size * args.patch_size;
    println!("wrote {} ({dim}x{dim})", args.out.display());
    Ok(())
}

/// Affine min-max rescale for visualization; constant images map to 0.5.
fn rescale_unit(img: &Array2<f64>) -> Array2<f64> {
    let min = img.iter().copied().fold(f64::INFINITY, f64::min);
    let max = img.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        img.mapv(|v| (v - min) / (max - min))
    } else {
        Array2::from_elem(img.dim(), 0.5)
    }
}

pub fn decompose(args: &DecomposeArgs) -> Result<()> {
    let img = imgio::load_gray(&args.input)?;
    let proj = ProjectionMatrix::load(&args.proj)?;
    let dec = mdlatlrr(img.view(), &proj, args.levels, args.stride)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| named_io(&args.out_dir, e))?;
    for (i, detail) in dec.detail_images.iter().enumerate() {
        let name = format!("detail_{}", i + 1);
        imgio::save_gray(
            &args.out_dir.join(format!("{name}.png")),
            &rescale_unit(detail),
        )?;
        if args.raw {
            imgio::save_raw(&args.out_dir.join(format!("{name}.raw")), detail)?;
        }
    }
    imgio::save_gray(&args.out_dir.join("base.png"), &dec.base)?;
    if args.raw {
        imgio::save_raw(&args.out_dir.join("base.raw"), &dec.base)?;
    }
    println!(
        "decomposed {} at {} levels (n={}, stride {}, seed {}) into {}",
        args.input.display(),
        dec.levels,
        proj.n,
        dec.stride,
        proj.provenance.seed,
        args.out_dir.display()
    );
    Ok(())
}

pub fn fuse(args: &FuseArgs) -> Result<()> {
    let a = imgio::load_gray(&args.a)?;
    let b = imgio::load_gray(&args.b)?;
    let proj = ProjectionMatrix::load(&args.proj)?;
    let cfg = FusionConfig {
        levels: args.levels,
        stride: args.stride,
        detail_norm: args.norm.into(),
        ..FusionConfig::default()
    };
    let fused = fuse_images(a.view(), b.view(), &proj, &cfg)?;
    if let Some(raw) = &args.raw {
        imgio::save_raw(raw, &fused)?;
    }
    imgio::save_gray(&args.out, &fused)?;
    println!(
        "fused {} + {} -> {} (levels {}, stride {}, {} norm, seed {})",
        args.a.display(),
        args.b.display(),
        args.out.display(),
        cfg.levels,
        cfg.stride,
        cfg.detail_norm,
        proj.provenance.seed
    );
    Ok(())
}

fn eval_triple(a: &Path, b: &Path, fused: &Path) -> Result<MetricReport> {
    let a = imgio::load_gray(a)?;
    let b = imgio::load_gray(b)?;
    let f = imgio::load_gray(fused)?;
    evaluate(a.view(), b.view(), f.view())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let format = if args.csv {
        ReportFormat::Csv
    } else {
        ReportFormat::Json
    };
    match (&args.dir, &args.a, &args.b, &args.fused) {
        (Some(dir), None, None, None) => eval_batch(dir, format),
        (None, Some(a), Some(b), Some(fused)) => {
            if let Some(header) = report::eval_header(format) {
                println!("{header}");
            }
            let r = eval_triple(a, b, fused)?;
            let id = fused
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("fused");
            println!("{}", report::eval_line(format, id, None, &r));
            Ok(())
        }
        _ => Err(Error::InvalidArgument(
            "pass either --dir or all of --a/--b/--fused".into(),
        )),
    }
}

fn eval_batch(dir: &Path, format: ReportFormat) -> Result<()> {
    let fused_dir = dir.join("fused");
    let mut triples = Vec::new();
    for (id, ir, vis) in matched_pairs(dir)? {
        // Fused images carry the same file name as their sources.
        let fused = fused_dir.join(ir.file_name().expect("matched pair has a file name"));
        if !fused.is_file() {
            return Err(Error::Format(format!(
                "missing fused image {}",
                fused.display()
            )));
        }
        triples.push((id, ir, vis, fused));
    }

    if let Some(header) = report::eval_header(format) {
        println!("{header}");
    }
    let mut reports = Vec::with_capacity(triples.len());
    for (id, ir, vis, fused) in &triples {
        let r = eval_triple(ir, vis, fused)?;
        println!("{}", report::eval_line(format, id, None, &r));
        reports.push(r);
    }
    let mean = report::mean_report(&reports);
    println!(
        "{}",
        report::eval_line(format, "mean", Some(reports.len()), &mean)
    );
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let format = if args.csv {
        ReportFormat::Csv
    } else {
        ReportFormat::Json
    };
    let proj = ProjectionMatrix::load(&args.proj)?;
    let pairs = matched_pairs(&args.data)?;
    let mut loaded = Vec::with_capacity(pairs.len());
    for (_, ir, vis) in &pairs {
        loaded.push((imgio::load_gray(ir)?, imgio::load_gray(vis)?));
    }

    if let Some(header) = report::bench_header(format) {
        println!("{header}");
    }
    if matches!(args.sweep, SweepArg::Levels | SweepArg::All) {
        for levels in 1..=8 {
            for norm in [DetailNorm::Nuclear, DetailNorm::L1] {
                run_cell(format, "levels", &loaded, &proj, levels, 1, norm)?;
            }
        }
    }
    if matches!(args.sweep, SweepArg::Strides | SweepArg::All) {
        for &stride in &SWEEP_STRIDES {
            for levels in 1..=4 {
                run_cell(
                    format,
                    "strides",
                    &loaded,
                    &proj,
                    levels,
                    stride,
                    DetailNorm::Nuclear,
                )?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::type_complexity)]
fn run_cell(
    format: ReportFormat,
    sweep: &str,
    pairs: &[(Array2<f64>, Array2<f64>)],
    proj: &ProjectionMatrix,
    levels: usize,
    stride: usize,
    norm: DetailNorm,
) -> Result<()> {
    let cfg = FusionConfig {
        levels,
        stride,
        detail_norm: norm,
        ..FusionConfig::default()
    };
    let start = Instant::now();
    let mut reports = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let fused = fuse_images(a.view(), b.view(), proj, &cfg)?;
        reports.push(evaluate(a.view(), b.view(), fused.view())?);
    }
    let seconds = start.elapsed().as_secs_f64();
    let mean = report::mean_report(&reports);
    println!(
        "{}",
        report::bench_line(
            format,
            sweep,
            &norm.to_string(),
            levels,
            stride,
            pairs.len(),
            proj.provenance.seed,
            seconds,
            &mean,
        )
    );
    Ok(())
}
