//! Shared fixtures: deterministic images, a synthetic registered
//! infrared/visible corpus, and helpers for driving the binary.

#![allow(dead_code)]

pub mod oracles;

use std::path::Path;
use std::process::{Command, Output};

use mdlatlrr::{ProjectionMatrix, Provenance};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mdlatlrr"))
}

pub fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

pub fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_string)
        .collect()
}

pub fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn random_image(h: usize, w: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((h, w), |_| rng.random_range(0.0..1.0))
}

/// Noisy left half, smooth gradient right half: yields both detail and
/// smooth patches at any threshold below ~1.
pub fn textured_image(h: usize, w: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((h, w), |(r, c)| {
        if c < w / 2 {
            rng.random_range(0.0..1.0)
        } else {
            0.3 + 0.004 * (r + c) as f64
        }
    })
}

/// Random projection scaled so repeated application stays well-behaved.
pub fn random_projection(n: usize, seed: u64) -> ProjectionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = n * n;
    let mat = Array2::from_shape_fn((dim, dim), |_| rng.random_range(-0.5..0.5) / dim as f64);
    ProjectionMatrix::new(
        n,
        mat,
        Provenance {
            lambda: 0.4,
            seed,
            detail_count: 0,
            smooth_count: 0,
            threshold: 0.5,
        },
    )
    .expect("square matrix of the right size")
}

pub fn write_png(path: &Path, img: &Array2<f64>) {
    write_image(path, img);
}

pub fn write_image(path: &Path, img: &Array2<f64>) {
    let (h, w) = img.dim();
    let mut out = image::GrayImage::new(w as u32, h as u32);
    for ((r, c), v) in img.indexed_iter() {
        let byte = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        out.put_pixel(c as u32, r as u32, image::Luma([byte]));
    }
    out.save(path).expect("image written");
}

pub fn read_image(path: &Path) -> Array2<f64> {
    let img = image::open(path).expect("image read").to_luma8();
    let (w, h) = img.dimensions();
    let mut out = Array2::zeros((h as usize, w as usize));
    for (x, y, p) in img.enumerate_pixels() {
        out[[y as usize, x as usize]] = f64::from(p.0[0]) / 255.0;
    }
    out
}

/// Parse the raw dump format: u32-LE height and width, then row-major
/// f64-LE samples.
pub fn read_raw(path: &Path) -> Array2<f64> {
    let bytes = std::fs::read(path).expect("raw dump read");
    assert!(bytes.len() >= 8, "raw dump too short");
    let h = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 8 + h * w * 8, "raw dump length");
    let data: Vec<f64> = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((h, w), data).unwrap()
}

/// One registered infrared/visible pair over a shared scene layout.
pub struct ScenePair {
    pub ir: Array2<f64>,
    pub vis: Array2<f64>,
}

struct Obj {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
    angle: f64,
    vis_amp: f64,
    ir_amp: f64,
    halo: f64,
    tex_freq: f64,
    tex_angle: f64,
}

struct Zone {
    cy: f64,
    cx: f64,
    r: f64,
    freq: f64,
    angle: f64,
    amp: f64,
}

fn rescale_to(img: &mut Array2<f64>, lo: f64, hi: f64) {
    let min = img.iter().copied().fold(f64::INFINITY, f64::min);
    let max = img.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    img.mapv_inplace(|v| lo + (hi - lo) * (v - min) / span);
}

fn gaussian_blur(img: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i as f64) * (i as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    for v in &mut k {
        *v /= s;
    }
    let (h, w) = img.dim();
    let mut tmp = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let xx = (x as i64 + j as i64 - r).clamp(0, w as i64 - 1) as usize;
                acc += kv * img[[y, xx]];
            }
            tmp[[y, x]] = acc;
        }
    }
    let mut out = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let yy = (y as i64 + j as i64 - r).clamp(0, h as i64 - 1) as usize;
                acc += kv * tmp[[yy, x]];
            }
            out[[y, x]] = acc;
        }
    }
    out
}

/// Deterministic registered pair modeling a night scene. Both channels
/// share the scene: object geometry, an illumination gradient, and a
/// mid-frequency terrain texture visible to both sensors. On top of
/// that, per-object contrast is decoupled the way two sensors image one
/// physical surface. Hot objects are bright, smooth plateaus in the
/// infrared channel with a thermal halo bleeding past the silhouette,
/// while the visible channel sees only terrain plus a faint textured
/// silhouette in the same place: the two channels own different
/// frequency bands of the same region. Lit objects carry bright
/// high-frequency texture in the visible channel and a faint same-pattern
/// copy in the infrared; mixed objects appear identically in both; and
/// ground-cover zones (vegetation-like dapple) show fine reflective
/// texture only the visible sensor resolves. Objects and zones occlude
/// the terrain beneath them. Like real rigs, the infrared channel is
/// imperfectly registered (global subpixel offset) and optically softer
/// (Gaussian PSF), so the fine bands of the channels never align exactly.
pub fn scene_pair(seed: u64, h: usize, w: usize) -> ScenePair {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5CE2E000 + seed);
    let obj_count = rng.random_range(4..=6);
    let objs: Vec<Obj> = (0..obj_count)
        .map(|i| {
            // Cycle hot / lit / mixed so every scene holds all three kinds.
            let (ir_amp, vis_amp) = match i % 3 {
                0 => (rng.random_range(0.45..0.60), rng.random_range(0.20..0.28)),
                1 => (0.0, rng.random_range(0.40..0.55)),
                _ => {
                    let a = rng.random_range(0.15..0.25);
                    (a, a)
                }
            };
            let halo = if ir_amp > 0.3 {
                ir_amp * rng.random_range(0.6..0.8)
            } else {
                0.0
            };
            Obj {
                cy: rng.random_range(0.12..0.88) * h as f64,
                cx: rng.random_range(0.12..0.88) * w as f64,
                ry: rng.random_range(6.0..13.0),
                rx: rng.random_range(6.0..13.0),
                angle: rng.random_range(0.0..std::f64::consts::PI),
                vis_amp,
                ir_amp,
                halo,
                tex_freq: rng.random_range(0.55..0.85),
                tex_angle: rng.random_range(0.25..1.30),
            }
        })
        .collect();
    let zones: Vec<Zone> = (0..2)
        .map(|_| Zone {
            cy: rng.random_range(0.15..0.85) * h as f64,
            cx: rng.random_range(0.15..0.85) * w as f64,
            r: rng.random_range(14.0..20.0),
            freq: rng.random_range(0.70..0.90),
            angle: rng.random_range(0.25..1.30),
            amp: rng.random_range(0.30..0.36),
        })
        .collect();

    let vis0 = rng.random_range(0.15..0.25);
    let ir0 = rng.random_range(0.20..0.30);
    let gr = rng.random_range(-0.12..0.12);
    let gc = rng.random_range(-0.12..0.12);
    let terrain_amp = rng.random_range(0.050..0.070);
    let (tf1, ta1) = (
        rng.random_range(0.15..0.25),
        rng.random_range(0.0..std::f64::consts::PI),
    );
    let (tf2, ta2) = (
        rng.random_range(0.25..0.40),
        rng.random_range(0.0..std::f64::consts::PI),
    );
    let reg_dy = rng.random_range(0.5..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let reg_dx = rng.random_range(0.5..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let psf_sigma = rng.random_range(0.9..1.2);

    // The scene model is analytic, so the infrared registration offset is
    // applied exactly by sampling the model on a shifted grid.
    let sample = |rf: f64, cf: f64| -> (f64, f64) {
        let y = rf / h as f64;
        let x = cf / w as f64;
        let g = gr * y + gc * x;
        let terrain = terrain_amp
            * ((tf1 * (ta1.cos() * cf + ta1.sin() * rf)).sin()
                + 0.6 * (tf2 * (ta2.cos() * cf + ta2.sin() * rf)).sin());
        // Objects and ground-cover zones occlude the terrain beneath them.
        let mut occlusion: f64 = 0.0;
        let mut v_obj = 0.0;
        let mut t_obj = 0.0;
        for o in &objs {
            let dy = rf - o.cy;
            let dx = cf - o.cx;
            let (ca, sa) = (o.angle.cos(), o.angle.sin());
            let u = (ca * dx + sa * dy) / o.rx;
            let q = (-sa * dx + ca * dy) / o.ry;
            let d2 = u * u + q * q;
            if d2 <= 1.0 {
                let (cta, sta) = (o.tex_angle.cos(), o.tex_angle.sin());
                let p = (o.tex_freq * (cta * cf + sta * rf)).sin();
                v_obj += o.vis_amp * (1.0 + 0.45 * p);
                if o.ir_amp > 0.0 {
                    t_obj += o.ir_amp * (1.0 + 0.15 * p);
                } else {
                    t_obj += 0.25 * o.vis_amp * (1.0 + 0.45 * p);
                }
            }
            if o.halo > 0.0 {
                t_obj += o.halo * (-1.2 * d2).exp();
            }
            occlusion = occlusion.max(((1.3 - d2) / 0.6).clamp(0.0, 1.0));
        }
        for z in &zones {
            let d2 = ((rf - z.cy) * (rf - z.cy) + (cf - z.cx) * (cf - z.cx)) / (z.r * z.r);
            let cov = ((1.3 - d2) / 0.6).clamp(0.0, 1.0);
            if cov > 0.0 {
                v_obj += z.amp * (z.freq * (z.angle.cos() * cf + z.angle.sin() * rf)).sin() * cov;
                occlusion = occlusion.max(cov);
            }
        }
        let t_shared = terrain * (1.0 - occlusion);
        let v = vis0 + g + t_shared + v_obj;
        let t = ir0 + 0.6 * g + 0.8 * t_shared + t_obj;
        (v, t)
    };

    let mut vis = Array2::zeros((h, w));
    let mut ir = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let (rf, cf) = (r as f64, c as f64);
            vis[[r, c]] = sample(rf, cf).0;
            ir[[r, c]] = sample(rf + reg_dy, cf + reg_dx).1;
        }
    }
    let mut ir = gaussian_blur(&ir, psf_sigma);
    for v in vis.iter_mut() {
        *v += rng.random_range(-0.010..0.010);
    }
    for v in ir.iter_mut() {
        *v += rng.random_range(-0.004..0.004);
    }
    rescale_to(&mut vis, 0.02, 0.98);
    rescale_to(&mut ir, 0.02, 0.98);
    ScenePair { ir, vis }
}

/// Load registered pairs from `dir/ir` and `dir/vis`, matched by name.
pub fn pairs_from_dir(dir: &Path) -> Vec<ScenePair> {
    let names = |sub: &str| -> Vec<String> {
        let mut v: Vec<String> = std::fs::read_dir(dir.join(sub))
            .unwrap_or_else(|e| panic!("read {}/{sub}: {e}", dir.display()))
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| {
                let n = n.to_ascii_lowercase();
                n.ends_with(".png") || n.ends_with(".pgm")
            })
            .collect();
        v.sort();
        v
    };
    let vis_names = names("vis");
    names("ir")
        .into_iter()
        .filter(|n| vis_names.contains(n))
        .map(|n| ScenePair {
            ir: read_image(&dir.join("ir").join(&n)),
            vis: read_image(&dir.join("vis").join(&n)),
        })
        .collect()
}

pub const CORPUS_SIZE: usize = 21;
pub const CORPUS_DIM: usize = 128;

/// The 21 evaluation pairs.
pub fn eval_pairs() -> Vec<ScenePair> {
    (1..=CORPUS_SIZE as u64)
        .map(|i| scene_pair(i, CORPUS_DIM, CORPUS_DIM))
        .collect()
}

/// Both channels of 5 held-out pairs, flattened for pool building.
pub fn training_images() -> Vec<Array2<f64>> {
    (1001..=1005u64)
        .flat_map(|i| {
            let p = scene_pair(i, CORPUS_DIM, CORPUS_DIM);
            [p.ir, p.vis]
        })
        .collect()
}
