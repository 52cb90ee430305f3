//! Spatially incoherent scenes and the analytic brightness → visibility map.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::SceneError;
use crate::geometry::{baselines, ArrayGeometry};
use crate::visibility::VisibilityFunction;

/// Point emitter at direction cosines `(l, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub l: f64,
    pub m: f64,
    pub brightness: f64,
}

impl Emitter {
    /// Emitter in the x-z plane at `theta_deg` from boresight.
    pub fn at_angle(theta_deg: f64, brightness: f64) -> Self {
        Self {
            l: theta_deg.to_radians().sin(),
            m: 0.0,
            brightness,
        }
    }

    /// `l = sin θ cos φ`, `m = sin θ sin φ`.
    pub fn at_direction(theta_deg: f64, phi_deg: f64, brightness: f64) -> Self {
        let (st, (sp, cp)) = (theta_deg.to_radians().sin(), phi_deg.to_radians().sin_cos());
        Self {
            l: st * cp,
            m: st * sp,
            brightness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    emitters: Vec<Emitter>,
    background: f64,
}

impl Scene {
    pub fn new(emitters: Vec<Emitter>, background: f64) -> Result<Self, SceneError> {
        for (index, e) in emitters.iter().enumerate() {
            if !(e.l.is_finite() && e.m.is_finite()) || e.l * e.l + e.m * e.m > 1.0 + 1e-12 {
                return Err(SceneError::OutsideUnitCircle { index, l: e.l, m: e.m });
            }
            if !(e.brightness.is_finite() && e.brightness >= 0.0) {
                return Err(SceneError::InvalidBrightness {
                    index,
                    brightness: e.brightness,
                });
            }
        }
        if !(background.is_finite() && background >= 0.0) {
            return Err(SceneError::InvalidBackground(background));
        }
        Ok(Self {
            emitters,
            background,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn point(emitter: Emitter) -> Result<Self, SceneError> {
        Self::new(vec![emitter], 0.0)
    }

    pub fn emitters(&self) -> &[Emitter] {
        &self.emitters
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn total_brightness(&self) -> f64 {
        self.emitters.iter().map(|e| e.brightness).sum::<f64>() + self.background
    }

    /// One `l m brightness` line per emitter, optional `background T` line.
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let mut emitters = Vec::new();
        let mut background = 0.0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SceneError::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("'{s}': {e}")));
            if f[0] == "background" {
                if f.len() != 2 {
                    return Err(err("background needs one value".into()));
                }
                background = num(f[1])?;
                continue;
            }
            if f.len() != 3 {
                return Err(err(format!("expected 'l m brightness', got '{line}'")));
            }
            emitters.push(Emitter {
                l: num(f[0])?,
                m: num(f[1])?,
                brightness: num(f[2])?,
            });
        }
        Self::new(emitters, background)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if self.background != 0.0 {
            let _ = writeln!(s, "background {}", self.background);
        }
        for e in &self.emitters {
            let _ = writeln!(s, "{} {} {}", e.l, e.m, e.brightness);
        }
        s
    }
}

/// `V(u, v) = Σ_k T_k exp(j2π(Δu·u·l_k + Δv·v·m_k))`, plus the background on
/// the zero baseline.
pub fn analytic_visibility(scene: &Scene, uv: (i32, i32), pitch_x: f64, pitch_y: f64) -> Complex64 {
    let (u, v) = (uv.0 as f64 * pitch_x, uv.1 as f64 * pitch_y);
    let mut acc: Complex64 = scene
        .emitters
        .iter()
        .map(|e| Complex64::from_polar(e.brightness, 2.0 * PI * (u * e.l + v * e.m)))
        .sum();
    if uv == (0, 0) {
        acc = Complex64::new(acc.re + scene.background, 0.0);
    }
    acc
}

/// Noise-free visibility function over the geometry's baseline set.
pub fn analytic_visibility_fn(scene: &Scene, geom: &ArrayGeometry) -> VisibilityFunction {
    let b = baselines(geom);
    let mut vis = VisibilityFunction::new();
    for (&uv, &mult) in &b.samples {
        if uv < (0, 0) {
            continue;
        }
        vis.insert_symmetric(uv, analytic_visibility(scene, uv, geom.pitch_x(), geom.pitch_y()), mult);
    }
    vis
}

/// Binary occupancy grid, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> Result<Self, SceneError> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(SceneError::InvalidMask(format!(
                "{rows}x{cols} mask with {} cells",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    /// Rows of `#`/`1` (set) and anything else (clear).
    pub fn from_art(rows: &[&str]) -> Result<Self, SceneError> {
        let cols = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let mut row: Vec<bool> = r.chars().map(|c| c == '#' || c == '1').collect();
            row.resize(cols, false);
            cells.extend(row);
        }
        Self::new(rows.len(), cols, cells)
    }

    /// Plain portable bitmap (`P1`): 1 is a set cell.
    pub fn from_pbm(text: &str) -> Result<Self, SceneError> {
        let mut tokens = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let bad = |m: &str| SceneError::InvalidMask(m.to_owned());
        let mut it = tokens.into_iter();
        if it.next().as_deref() != Some("P1") {
            return Err(bad("missing P1 magic"));
        }
        let cols: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad width"))?;
        let rows: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad height"))?;
        // P1 pixels may be packed without separators.
        let mut cells = Vec::with_capacity(rows * cols);
        for tok in it {
            for ch in tok.chars() {
                match ch {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    _ => return Err(bad("pixel values must be 0 or 1")),
                }
            }
        }
        if cells.len() != rows * cols {
            return Err(bad("pixel count does not match dimensions"));
        }
        Self::new(rows, cols, cells)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// One emitter per set cell, centred on the cell. The mask spans
/// `[-extent_l/2, extent_l/2]` in `l` and likewise in `m`.
pub fn raster_scene(mask: &Mask, extent_l: f64, extent_m: f64, brightness: f64) -> Result<Scene, SceneError> {
    raster_scene_with_density(mask, extent_l, extent_m, brightness, 1)
}

/// As [`raster_scene`] with `density x density` emitters per cell sharing the
/// cell's brightness.
pub fn raster_scene_with_density(
    mask: &Mask,
    extent_l: f64,
    extent_m: f64,
    brightness: f64,
    density: usize,
) -> Result<Scene, SceneError> {
    if mask.count() == 0 {
        return Err(SceneError::EmptyMask);
    }
    let density = density.max(1);
    let sub = (density * density) as f64;
    let cell_l = extent_l / mask.cols as f64;
    let cell_m = extent_m / mask.rows as f64;
    let mut emitters = Vec::with_capacity(mask.count() * density * density);
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if !mask.get(r, c) {
                continue;
            }
            for sr in 0..density {
                for sc in 0..density {
                    let fl = (c as f64 + (sc as f64 + 0.5) / density as f64) * cell_l;
                    let fm = (r as f64 + (sr as f64 + 0.5) / density as f64) * cell_m;
                    emitters.push(Emitter {
                        l: -extent_l / 2.0 + fl,
                        m: extent_m / 2.0 - fm,
                        brightness: brightness / sub,
                    });
                }
            }
        }
    }
    Scene::new(emitters, 0.0)
}
