//! Brightness maps from visibility samples by direct inverse DFT.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::ImagingError;
use crate::geometry::ArrayGeometry;
use crate::scene::{analytic_visibility_fn, Emitter, Scene};
use crate::visibility::VisibilityFunction;

/// Real image on pixels `i ∈ -half_u..=half_u`, `j ∈ -half_v..=half_v`,
/// stored row-major with `j` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct BrightnessMap {
    half_u: i32,
    half_v: i32,
    /// Pixel spacing in direction cosine, `1 / (N Δu)`.
    pub dl: f64,
    pub dm: f64,
    pixels: Vec<f64>,
}

impl BrightnessMap {
    pub fn cols(&self) -> usize {
        (2 * self.half_u + 1) as usize
    }

    pub fn rows(&self) -> usize {
        (2 * self.half_v + 1) as usize
    }

    pub fn half_extent(&self) -> (i32, i32) {
        (self.half_u, self.half_v)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    fn index(&self, i: i32, j: i32) -> usize {
        (j + self.half_v) as usize * self.cols() + (i + self.half_u) as usize
    }

    pub fn get(&self, i: i32, j: i32) -> f64 {
        assert!(i.abs() <= self.half_u && j.abs() <= self.half_v, "pixel ({i}, {j}) outside map");
        self.pixels[self.index(i, j)]
    }

    /// Pixel coordinates `(l, m)` of bin `(i, j)`.
    pub fn lm(&self, i: i32, j: i32) -> (f64, f64) {
        (i as f64 * self.dl, j as f64 * self.dm)
    }

    fn coords(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (-self.half_v..=self.half_v).flat_map(move |j| (-self.half_u..=self.half_u).map(move |i| (i, j)))
    }

    pub fn max_abs(&self) -> f64 {
        self.pixels.iter().fold(0.0, |a, p| a.max(p.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len().max(1) as f64
    }

    /// Pixelwise `self - other`; the maps must share a grid.
    pub fn sub(&self, other: &BrightnessMap) -> BrightnessMap {
        assert_eq!(self.half_extent(), other.half_extent(), "map grids differ");
        BrightnessMap {
            pixels: self.pixels.iter().zip(&other.pixels).map(|(a, b)| a - b).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Taper {
    #[default]
    Rectangular,
    /// Separable Hann weight `cos²(π u / (2(H+1)))`.
    Hann,
}

impl Taper {
    fn weight(self, u: i32, half: i32) -> f64 {
        match self {
            Taper::Rectangular => 1.0,
            Taper::Hann => (PI * u as f64 / (2.0 * (half as f64 + 1.0))).cos().powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiftOptions {
    /// Divide by the pixel count `N·M`.
    pub normalized: bool,
    pub taper: Taper,
    /// Override the geometry's image half-extent.
    pub half_extent: Option<(i32, i32)>,
}

/// Imaginary residual allowed relative to the peak magnitude.
pub const IMAG_TOLERANCE: f64 = 1e-9;

/// `T(i, j) = Σ_{p,q} V(p, q) e^{-j2π(ip/N + jq/M)}`, unnormalised.
pub fn dift(vis: &VisibilityFunction, geom: &ArrayGeometry) -> Result<BrightnessMap, ImagingError> {
    dift_with(vis, geom, DiftOptions::default())
}

pub fn dift_with(vis: &VisibilityFunction, geom: &ArrayGeometry, opts: DiftOptions) -> Result<BrightnessMap, ImagingError> {
    let (hu, hv) = opts.half_extent.unwrap_or_else(|| geom.image_half_extent());
    let n = 2 * hu + 1;
    let m = 2 * hv + 1;

    let mut missing = Vec::new();
    let mut grid = vec![Complex64::new(0.0, 0.0); (n * m) as usize];
    for q in -hv..=hv {
        for p in -hu..=hu {
            match vis.get((p, q)) {
                Some(v) => {
                    let w = opts.taper.weight(p, hu) * opts.taper.weight(q, hv);
                    grid[((q + hv) * n + p + hu) as usize] = v * w;
                }
                None => missing.push((p, q)),
            }
        }
    }
    if !missing.is_empty() {
        return Err(ImagingError::CoverageHoles { missing });
    }

    let twiddle = |size: i32, half: i32| -> Vec<Complex64> {
        // Index (k + half) * size + (x + half) holds e^{-j2π kx/size}.
        let mut t = Vec::with_capacity((size * size) as usize);
        for k in -half..=half {
            for x in -half..=half {
                t.push(Complex64::from_polar(1.0, -2.0 * PI * (k * x) as f64 / size as f64));
            }
        }
        t
    };
    let tu = twiddle(n, hu);
    let tv = twiddle(m, hv);

    // Transform along u for every v row, then along v.
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|r| {
            let row = &grid[(r * n) as usize..((r + 1) * n) as usize];
            (0..n)
                .map(|i| {
                    let tw = &tu[(i * n) as usize..((i + 1) * n) as usize];
                    row.iter().zip(tw).map(|(a, b)| a * b).sum()
                })
                .collect()
        })
        .collect();
    let scale = if opts.normalized { 1.0 / (n * m) as f64 } else { 1.0 };
    let out: Vec<Complex64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|j| {
            let tw = &tv[(j * m) as usize..((j + 1) * m) as usize];
            let rows = &rows;
            (0..n).map(move |i| rows.iter().zip(tw).map(|(r, w)| r[i as usize] * w).sum::<Complex64>() * scale)
        })
        .collect();

    let peak = out.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    let residual = out.iter().fold(0.0_f64, |a, c| a.max(c.im.abs()));
    let limit = IMAG_TOLERANCE * peak.max(f64::MIN_POSITIVE);
    if residual > limit {
        return Err(ImagingError::ImaginaryResidual { residual, limit });
    }

    Ok(BrightnessMap {
        half_u: hu,
        half_v: hv,
        dl: 1.0 / (n as f64 * geom.pitch_x()),
        dm: 1.0 / (m as f64 * geom.pitch_y()),
        pixels: out.iter().map(|c| c.re).collect(),
    })
}

/// Image of a unit point source at boresight.
pub fn psf(geom: &ArrayGeometry) -> Result<BrightnessMap, ImagingError> {
    let scene = Scene::point(Emitter {
        l: 0.0,
        m: 0.0,
        brightness: 1.0,
    })
    .expect("boresight emitter is valid");
    dift(&analytic_visibility_fn(&scene, geom), geom)
}

/// Largest pixel, ties resolved towards the lowest `(j, i)`.
pub fn peak(map: &BrightnessMap) -> Result<(i32, i32), ImagingError> {
    let mut best: Option<((i32, i32), f64)> = None;
    for (c, v) in map.coords().zip(&map.pixels) {
        if best.is_none_or(|(_, b)| *v > b) {
            best = Some((c, *v));
        }
    }
    best.map(|(c, _)| c).ok_or(ImagingError::Empty)
}

/// Divides by the largest pixel magnitude.
pub fn normalize(map: &BrightnessMap) -> Result<BrightnessMap, ImagingError> {
    if map.is_empty() {
        return Err(ImagingError::Empty);
    }
    let m = map.max_abs();
    if m == 0.0 {
        return Err(ImagingError::AllZero);
    }
    Ok(BrightnessMap {
        pixels: map.pixels.iter().map(|p| p / m).collect(),
        ..map.clone()
    })
}

/// Pixels strictly above all (up to eight) neighbours and at least
/// `threshold · peak`.
pub fn local_maxima(map: &BrightnessMap, threshold: f64) -> Vec<(i32, i32)> {
    let top = map.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (hu, hv) = map.half_extent();
    map.coords()
        .filter(|&(i, j)| {
            let v = map.get(i, j);
            if v < threshold * top {
                return false;
            }
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (ni, nj) = (i + di, j + dj);
                    if (di, dj) != (0, 0) && ni.abs() <= hu && nj.abs() <= hv && map.get(ni, nj) >= v {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

/// Nearest pixel bin of a direction cosine on an axis of `samples` bins.
pub fn predicted_bin(direction_cosine: f64, samples: usize, pitch: f64) -> i32 {
    (direction_cosine * samples as f64 * pitch).round() as i32
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

fn gray_levels(map: &BrightnessMap) -> Vec<u8> {
    let lo = map.pixels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = map.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    // Top row is the largest m.
    let mut out = Vec::with_capacity(map.len());
    for j in (-map.half_v..=map.half_v).rev() {
        for i in -map.half_u..=map.half_u {
            let v = if span > 0.0 { (map.get(i, j) - lo) / span } else { 0.0 };
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

pub fn to_pgm_ascii(map: &BrightnessMap) -> String {
    let g = gray_levels(map);
    let mut s = format!("P2\n{} {}\n255\n", map.cols(), map.rows());
    for row in g.chunks(map.cols()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn to_pgm_binary(map: &BrightnessMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.cols(), map.rows()).into_bytes();
    out.extend(gray_levels(map));
    out
}

/// Raw pixel values, one image row per line, top row = largest m.
pub fn to_csv(map: &BrightnessMap) -> String {
    let mut s = String::new();
    for j in (-map.half_v..=map.half_v).rev() {
        let row: Vec<String> = (-map.half_u..=map.half_u).map(|i| format!("{:?}", map.get(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Axis metadata for the CSV/PGM pair as `key = value` lines.
pub fn sidecar(map: &BrightnessMap) -> String {
    let mut s = String::from("[axes]\n");
    let _ = writeln!(s, "columns = {}", map.cols());
    let _ = writeln!(s, "rows = {}", map.rows());
    let _ = writeln!(s, "l_min = {:?}", -map.half_u as f64 * map.dl);
    let _ = writeln!(s, "l_step = {:?}", map.dl);
    let _ = writeln!(s, "m_max = {:?}", map.half_v as f64 * map.dm);
    let _ = writeln!(s, "m_step = {:?}", -map.dm);
    let _ = writeln!(s, "row_order = \"m descending\"");
    let _ = writeln!(s, "peak_abs = {:?}", map.max_abs());
    s
}
