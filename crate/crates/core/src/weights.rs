//! Edge-vanishing weight maps.
//!
//! Pipeline: Canny edges of the noisy datum, Euclidean distance to the edge
//! set, then a capped linear ramp so that the weight is zero exactly on the
//! edges and constant far from them.

use log::warn;

use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::prior::WeightField;

/// Canny parameters. Thresholds are relative to the maximum gradient
/// magnitude of the smoothed image.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CannyParams {
    pub low: f64,
    pub high: f64,
    pub sigma: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 0.275,
            high: 0.55,
            sigma: 1.8,
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(u: &ScalarField, sigma: f64) -> ScalarField {
    let (h, w) = u.shape();
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let src = u.as_slice();
    let mut tmp = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                let jj = (j as isize + t as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * src[i * w + jj];
            }
            tmp[i * w + j] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                let ii = (i as isize + t as isize - r).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[ii * w + j];
            }
            out[i * w + j] = acc;
        }
    }
    ScalarField::new(h, w, out).expect("blur preserves shape")
}

/// Canny edge detector returning a `{0, 1}` mask.
///
/// An empty edge set is not an error; the caller is warned through the log
/// and receives an all-zero mask.
pub fn detect_edges(f: &ScalarField, params: CannyParams) -> Result<ScalarField> {
    let CannyParams { low, high, sigma } = params;
    if !(0.0..1.0).contains(&low) || !(low < high && high <= 1.0) {
        return Err(invalid(
            "thresholds",
            format!("need 0 <= low < high <= 1, got ({low}, {high})"),
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", "must be positive"));
    }
    let (h, w) = f.shape();
    let b = gaussian_blur(f, sigma);
    let at = |i: isize, j: isize| {
        let i = i.clamp(0, h as isize - 1) as usize;
        let j = j.clamp(0, w as isize - 1) as usize;
        b[(i, j)]
    };

    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    let mut mag = vec![0.0; h * w];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let k = i as usize * w + j as usize;
            gx[k] = 0.5 * (at(i, j + 1) - at(i, j - 1));
            gy[k] = 0.5 * (at(i + 1, j) - at(i - 1, j));
            mag[k] = gx[k].hypot(gy[k]);
        }
    }
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max <= 1e-12 {
        warn!("empty edge set: image has no gradient");
        return Ok(ScalarField::zeros(h, w));
    }
    mag.iter_mut().for_each(|m| *m /= max);

    let m_at = |i: isize, j: isize| {
        if i < 0 || j < 0 || i >= h as isize || j >= w as isize {
            0.0
        } else {
            mag[i as usize * w + j as usize]
        }
    };

    // non-maximum suppression along the quantized gradient direction; ties
    // are broken towards the forward neighbor so plateaus stay one pixel wide
    let mut thin = vec![0.0; h * w];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let k = i as usize * w + j as usize;
            let m = mag[k];
            if m < low {
                continue;
            }
            let angle = gy[k].atan2(gx[k]).to_degrees().rem_euclid(180.0);
            let (di, dj) = if !(22.5..157.5).contains(&angle) {
                (0, 1)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (1, 0)
            } else {
                (1, -1)
            };
            let fwd = m_at(i + di, j + dj);
            let back = m_at(i - di, j - dj);
            if m > fwd && m >= back {
                thin[k] = m;
            }
        }
    }

    // hysteresis: grow 8-connected components of weak pixels from strong seeds
    let mut mask = vec![0.0; h * w];
    let mut stack: Vec<usize> = (0..h * w).filter(|&k| thin[k] >= high).collect();
    for &k in &stack {
        mask[k] = 1.0;
    }
    while let Some(k) = stack.pop() {
        let (i, j) = ((k / w) as isize, (k % w) as isize);
        for di in -1..=1 {
            for dj in -1..=1 {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                    continue;
                }
                let nk = ni as usize * w + nj as usize;
                if mask[nk] == 0.0 && thin[nk] >= low {
                    mask[nk] = 1.0;
                    stack.push(nk);
                }
            }
        }
    }
    if mask.iter().all(|&m| m == 0.0) {
        warn!("empty edge set after hysteresis");
    }
    Ok(ScalarField::new(h, w, mask).expect("mask shape"))
}

const FAR: f64 = 1e20;

/// 1D squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let meet = |p: usize| {
            let pf = p as f64;
            ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
        };
        let mut s = meet(v[k]);
        // z[0] = -inf terminates the loop
        while s <= z[k] {
            k -= 1;
            s = meet(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance (in pixels) to the nearest nonzero pixel of
/// `mask`, computed with two separable passes over squared distances.
///
/// Returns `f64::MAX` everywhere if the mask is empty.
pub fn distance_transform(mask: &ScalarField) -> ScalarField {
    let (h, w) = mask.shape();
    if mask.as_slice().iter().all(|&m| m == 0.0) {
        return ScalarField::constant(h, w, f64::MAX);
    }
    let n = h.max(w);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut col_in = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    let mut sq: Vec<f64> = mask
        .as_slice()
        .iter()
        .map(|&m| if m != 0.0 { 0.0 } else { FAR })
        .collect();
    for j in 0..w {
        for i in 0..h {
            col_in[i] = sq[i * w + j];
        }
        edt_1d(&col_in, &mut col_out, &mut v, &mut z);
        for i in 0..h {
            sq[i * w + j] = col_out[i];
        }
    }
    let mut row_out = vec![0.0; w];
    for i in 0..h {
        edt_1d(&sq[i * w..(i + 1) * w], &mut row_out, &mut v, &mut z);
        sq[i * w..(i + 1) * w].copy_from_slice(&row_out);
    }
    ScalarField::new(h, w, sq.into_iter().map(f64::sqrt).collect()).expect("finite distances")
}

/// `alpha = scale * (min(d, cap) / cap)`, so `alpha == scale` exactly at
/// and beyond the cap.
pub fn weight_from_distance(d: &ScalarField, cap: f64, scale: f64) -> Result<WeightField> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(invalid("cap", "must be positive"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", "must be positive"));
    }
    WeightField::new(d.map(|x| scale * (x.min(cap) / cap)))
}
