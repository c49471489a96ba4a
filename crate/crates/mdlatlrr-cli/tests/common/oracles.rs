//! Naive loop-based metric implementations, written straight from the
//! definitions, used as independent checks on the library values.

use ndarray::Array2;

fn bin(v: f64) -> usize {
    ((v * 255.0).round().clamp(0.0, 255.0)) as usize
}

pub fn entropy(img: &Array2<f64>) -> f64 {
    let mut hist = [0u64; 256];
    for &v in img.iter() {
        hist[bin(v)] += 1;
    }
    let total = img.len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

fn mi_pair(a: &Array2<f64>, f: &Array2<f64>) -> f64 {
    let mut joint = vec![vec![0u64; 256]; 256];
    for (&x, &y) in a.iter().zip(f.iter()) {
        joint[bin(x)][bin(y)] += 1;
    }
    let n = a.len() as f64;
    let row_sums: Vec<u64> = joint.iter().map(|row| row.iter().sum()).collect();
    let mut col_sums = vec![0u64; 256];
    for row in &joint {
        for (slot, &c) in col_sums.iter_mut().zip(row.iter()) {
            *slot += c;
        }
    }
    let mut mi = 0.0;
    for i in 0..256 {
        for j in 0..256 {
            let c = joint[i][j];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            let px = row_sums[i] as f64 / n;
            let py = col_sums[j] as f64 / n;
            mi += pxy * (pxy / (px * py)).log2();
        }
    }
    mi
}

pub fn mutual_information(a: &Array2<f64>, b: &Array2<f64>, f: &Array2<f64>) -> f64 {
    mi_pair(a, f) + mi_pair(b, f)
}

pub fn sd(img: &Array2<f64>) -> f64 {
    let n = img.len() as f64;
    let mean: f64 = img.iter().sum::<f64>() / n;
    let var: f64 = img.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() * 255.0
}

fn grad_at(img: &Array2<f64>, r: isize, c: isize) -> (f64, f64) {
    let (h, w) = img.dim();
    let get = |rr: isize, cc: isize| -> f64 {
        if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
            0.0
        } else {
            img[[rr as usize, cc as usize]]
        }
    };
    let gx = get(r - 1, c + 1) - get(r - 1, c - 1)
        + 2.0 * (get(r, c + 1) - get(r, c - 1))
        + get(r + 1, c + 1)
        - get(r + 1, c - 1);
    let gy = get(r - 1, c - 1) + 2.0 * get(r - 1, c) + get(r - 1, c + 1)
        - get(r + 1, c - 1)
        - 2.0 * get(r + 1, c)
        - get(r + 1, c + 1);
    (gx, gy)
}

fn strength_angle(gx: f64, gy: f64) -> (f64, f64) {
    let g = (gx * gx + gy * gy).sqrt();
    let a = if gx == 0.0 && gy == 0.0 {
        0.0
    } else {
        (gy / gx).atan()
    };
    (g, a)
}

fn preservation(gs: f64, als: f64, gf: f64, alf: f64) -> f64 {
    let g = if gs == gf {
        1.0
    } else if gs > gf {
        gf / gs
    } else {
        gs / gf
    };
    let a = 1.0 - (als - alf).abs() / std::f64::consts::FRAC_PI_2;
    (0.9994 / (1.0 + f64::exp(-15.0 * (g - 0.5)))) * (0.9879 / (1.0 + f64::exp(-22.0 * (a - 0.8))))
}

pub fn qabf(a: &Array2<f64>, b: &Array2<f64>, f: &Array2<f64>) -> f64 {
    let (h, w) = a.dim();
    let mut num = 0.0;
    let mut den = 0.0;
    for r in 0..h as isize {
        for c in 0..w as isize {
            let (gax, gay) = grad_at(a, r, c);
            let (gbx, gby) = grad_at(b, r, c);
            let (gfx, gfy) = grad_at(f, r, c);
            let (ga, aa) = strength_angle(gax, gay);
            let (gb, ab) = strength_angle(gbx, gby);
            let (gf, af) = strength_angle(gfx, gfy);
            num += preservation(ga, aa, gf, af) * ga + preservation(gb, ab, gf, af) * gb;
            den += ga + gb;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == 0.0 || db == 0.0 {
        0.0
    } else {
        num / (da * db).sqrt()
    }
}

pub fn scd(a: &Array2<f64>, b: &Array2<f64>, f: &Array2<f64>) -> f64 {
    let d1: Vec<f64> = f.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let d2: Vec<f64> = f.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
    let av: Vec<f64> = a.iter().copied().collect();
    let bv: Vec<f64> = b.iter().copied().collect();
    corr(&d1, &av) + corr(&d2, &bv)
}

const WIN: usize = 11;
const C1: f64 = 6.5025;
const C2: f64 = 58.5225;

fn gaussian2d() -> [[f64; WIN]; WIN] {
    let sigma = 1.5f64;
    let mut k = [[0.0; WIN]; WIN];
    let mut sum = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let dy = i as f64 - 5.0;
            let dx = j as f64 - 5.0;
            *v = (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp();
            sum += *v;
        }
    }
    for row in &mut k {
        for v in row {
            *v /= sum;
        }
    }
    k
}

/// Mean SSIM and mean contrast-structure term via direct 121-tap windows.
/// Inputs on [0,1]; rescaled to 0-255 here.
fn ssim_cs_means(x: &Array2<f64>, y: &Array2<f64>) -> (f64, f64) {
    let (h, w) = x.dim();
    assert!(h >= WIN && w >= WIN, "oracle needs an 11x11 window");
    let k = gaussian2d();
    let (mut ssim_sum, mut cs_sum) = (0.0, 0.0);
    for r in 0..=h - WIN {
        for c in 0..=w - WIN {
            let (mut mx, mut my) = (0.0, 0.0);
            for (i, row) in k.iter().enumerate() {
                for (j, &kv) in row.iter().enumerate() {
                    mx += kv * x[[r + i, c + j]] * 255.0;
                    my += kv * y[[r + i, c + j]] * 255.0;
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for (i, row) in k.iter().enumerate() {
                for (j, &kv) in row.iter().enumerate() {
                    let dx = x[[r + i, c + j]] * 255.0 - mx;
                    let dy = y[[r + i, c + j]] * 255.0 - my;
                    vx += kv * dx * dx;
                    vy += kv * dy * dy;
                    cxy += kv * dx * dy;
                }
            }
            let lum = (2.0 * mx * my + C1) / (mx * mx + my * my + C1);
            let cs = (2.0 * cxy + C2) / (vx + vy + C2);
            ssim_sum += lum * cs;
            cs_sum += cs;
        }
    }
    let count = ((h - WIN + 1) * (w - WIN + 1)) as f64;
    (ssim_sum / count, cs_sum / count)
}

pub fn ssim_a(a: &Array2<f64>, b: &Array2<f64>, f: &Array2<f64>) -> f64 {
    0.5 * (ssim_cs_means(a, f).0 + ssim_cs_means(b, f).0)
}

fn half(m: &Array2<f64>) -> Array2<f64> {
    let (h, w) = (m.nrows() / 2, m.ncols() / 2);
    Array2::from_shape_fn((h, w), |(r, c)| {
        (m[[2 * r, 2 * c]]
            + m[[2 * r + 1, 2 * c]]
            + m[[2 * r, 2 * c + 1]]
            + m[[2 * r + 1, 2 * c + 1]])
            / 4.0
    })
}

fn ms_ssim_pair(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    const W: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
    let mut d = x.nrows().min(x.ncols());
    let mut scales = 0;
    while scales < W.len() && d >= WIN {
        scales += 1;
        d /= 2;
    }
    assert!(
        scales > 0,
        "oracle image too small for multi-scale analysis"
    );
    let wsum: f64 = W[..scales].iter().sum();
    let mut xs = x.clone();
    let mut ys = y.clone();
    let mut out = 1.0;
    for (s, &weight) in W[..scales].iter().enumerate() {
        let (ssim_mean, cs_mean) = ssim_cs_means(&xs, &ys);
        let term = if s + 1 == scales { ssim_mean } else { cs_mean }.max(0.0);
        out *= term.powf(weight / wsum);
        if s + 1 < scales {
            xs = half(&xs);
            ys = half(&ys);
        }
    }
    out
}

pub fn ms_ssim(a: &Array2<f64>, b: &Array2<f64>, f: &Array2<f64>) -> f64 {
    0.5 * (ms_ssim_pair(a, f) + ms_ssim_pair(b, f))
}
