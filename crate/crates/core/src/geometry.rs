//! Antenna layouts on an integer grid, their baseline sets and the derived
//! field of view, resolution and pixel counts.
//!
//! Element positions are integer multiples of the grid pitch (in wavelengths)
//! along each axis, so every baseline is an exact integer vector `(u, v)` and
//! redundancy counting needs no floating-point tolerance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::GeometryError;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// 60 GHz carrier, the default wavelength for physical spacings.
pub const DEFAULT_WAVELENGTH_M: f64 = SPEED_OF_LIGHT / 60.0e9;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<(i32, i32)>,
    pitch_x: f64,
    pitch_y: f64,
    wavelength: f64,
    window: Option<(i32, i32)>,
}

impl ArrayGeometry {
    /// `pitch_x`/`pitch_y` are the grid spacings Δu, Δv in wavelengths.
    pub fn new(positions: Vec<(i32, i32)>, pitch_x: f64, pitch_y: f64) -> Result<Self, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::Empty);
        }
        for p in [pitch_x, pitch_y] {
            if !(p.is_finite() && p > 0.0) {
                return Err(GeometryError::InvalidPitch(p));
            }
        }
        let mut seen = BTreeSet::new();
        for &(x, y) in &positions {
            if !seen.insert((x, y)) {
                return Err(GeometryError::DuplicatePosition(x, y));
            }
        }
        Ok(Self {
            positions,
            pitch_x,
            pitch_y,
            wavelength: DEFAULT_WAVELENGTH_M,
            window: None,
        })
    }

    pub fn linear(xs: &[i32], pitch: f64) -> Result<Self, GeometryError> {
        Self::new(xs.iter().map(|&x| (x, 0)).collect(), pitch, pitch)
    }

    pub fn uniform_linear(n: usize, pitch: f64) -> Result<Self, GeometryError> {
        let xs: Vec<i32> = (0..n as i32).collect();
        Self::linear(&xs, pitch)
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Result<Self, GeometryError> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(GeometryError::InvalidWavelength(wavelength));
        }
        self.wavelength = wavelength;
        Ok(self)
    }

    /// Restricts imaging to `|u| <= half_u`, `|v| <= half_v`.
    pub fn with_window(mut self, half_u: i32, half_v: i32) -> Self {
        self.window = Some((half_u.max(0), half_v.max(0)));
        self
    }

    pub fn positions(&self) -> &[(i32, i32)] {
        &self.positions
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn pitch_x(&self) -> f64 {
        self.pitch_x
    }

    pub fn pitch_y(&self) -> f64 {
        self.pitch_y
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn window(&self) -> Option<(i32, i32)> {
        self.window
    }

    /// Half-extents of the image grid: the window if set, else the bounding
    /// box of the baseline set.
    pub fn image_half_extent(&self) -> (i32, i32) {
        if let Some(w) = self.window {
            return w;
        }
        let b = baselines(self);
        let hu = b.samples.keys().map(|k| k.0.abs()).max().unwrap_or(0);
        let hv = b.samples.keys().map(|k| k.1.abs()).max().unwrap_or(0);
        (hu, hv)
    }

    /// Baseline between elements `a` and `b` in grid units: `pos[a] - pos[b]`.
    pub fn baseline(&self, a: usize, b: usize) -> (i32, i32) {
        let (xa, ya) = self.positions[a];
        let (xb, yb) = self.positions[b];
        (xa - xb, ya - yb)
    }

    /// Physical extent `(D_min, D_max)` along x in meters, ignoring y.
    pub fn spacing_x_m(&self) -> Option<(f64, f64)> {
        let xs: BTreeSet<i32> = self.positions.iter().map(|p| p.0).collect();
        if xs.len() < 2 {
            return None;
        }
        let v: Vec<i32> = xs.into_iter().collect();
        let dmin = v.windows(2).map(|w| w[1] - w[0]).min().unwrap();
        let dmax = v[v.len() - 1] - v[0];
        let unit = self.pitch_x * self.wavelength;
        Some((dmin as f64 * unit, dmax as f64 * unit))
    }

    /// Stable 64-bit FNV-1a digest of positions, pitches and window.
    pub fn digest(&self) -> u64 {
        let mut s = String::new();
        let _ = write!(s, "{:?}|{}|{}|{:?}", self.positions, self.pitch_x, self.pitch_y, self.window);
        fnv1a(s.as_bytes())
    }

    /// Line-oriented text: a `pitch` header, optional `wavelength` and
    /// `window` headers, then one `x y` pair per element.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pitch {} {}", self.pitch_x, self.pitch_y);
        let _ = writeln!(s, "wavelength {}", self.wavelength);
        if let Some((hu, hv)) = self.window {
            let _ = writeln!(s, "window {hu} {hv}");
        }
        for &(x, y) in &self.positions {
            let _ = writeln!(s, "{x} {y}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let mut pitch: Option<(f64, f64)> = None;
        let mut wavelength = None;
        let mut window = None;
        let mut positions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| GeometryError::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("'{s}': {e}")));
            match fields[0] {
                "pitch" => {
                    let px = num(fields.get(1).ok_or_else(|| err("pitch needs a value".into()))?)?;
                    let py = match fields.get(2) {
                        Some(s) => num(s)?,
                        None => px,
                    };
                    pitch = Some((px, py));
                }
                "wavelength" => {
                    wavelength = Some(num(fields.get(1).ok_or_else(|| err("missing value".into()))?)?);
                }
                "window" => {
                    if fields.len() != 3 {
                        return Err(err("window needs two integers".into()));
                    }
                    let hu = fields[1].parse::<i32>().map_err(|e| err(e.to_string()))?;
                    let hv = fields[2].parse::<i32>().map_err(|e| err(e.to_string()))?;
                    window = Some((hu, hv));
                }
                _ => {
                    if fields.len() != 2 {
                        return Err(err(format!("expected 'x y', got '{line}'")));
                    }
                    let x = fields[0].parse::<i32>().map_err(|e| err(e.to_string()))?;
                    let y = fields[1].parse::<i32>().map_err(|e| err(e.to_string()))?;
                    positions.push((x, y));
                }
            }
        }
        let (px, py) = pitch.ok_or(GeometryError::Parse {
            line: 0,
            msg: "missing 'pitch' header".into(),
        })?;
        let mut g = Self::new(positions, px, py)?;
        if let Some(w) = wavelength {
            g = g.with_wavelength(w)?;
        }
        if let Some((hu, hv)) = window {
            g = g.with_window(hu, hv);
        }
        Ok(g)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Every ordered pair's difference vector with multiplicity. The zero
/// baseline carries one count per element (the autocorrelations).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineSet {
    pub samples: BTreeMap<(i32, i32), usize>,
}

impl BaselineSet {
    pub fn distinct(&self) -> usize {
        self.samples.len()
    }

    pub fn multiplicity(&self, uv: (i32, i32)) -> usize {
        self.samples.get(&uv).copied().unwrap_or(0)
    }

    /// Ordered pairs, i.e. `2·C(N, 2)`.
    pub fn off_zero_total(&self) -> usize {
        self.samples
            .iter()
            .filter(|(k, _)| **k != (0, 0))
            .map(|(_, &m)| m)
            .sum()
    }

    /// Ordered pairs whose vector duplicates another pair's.
    pub fn redundant(&self) -> usize {
        let distinct_off_zero = self.samples.keys().filter(|k| **k != (0, 0)).count();
        self.off_zero_total() - distinct_off_zero
    }

    pub fn is_symmetric(&self) -> bool {
        self.samples
            .iter()
            .all(|(&(u, v), &m)| self.multiplicity((-u, -v)) == m)
    }

    /// Samples inside `|u| <= hu, |v| <= hv`.
    pub fn within(&self, hu: i32, hv: i32) -> usize {
        self.samples
            .keys()
            .filter(|(u, v)| u.abs() <= hu && v.abs() <= hv)
            .count()
    }
}

pub fn baselines(geom: &ArrayGeometry) -> BaselineSet {
    let mut samples = BTreeMap::new();
    let n = geom.len();
    for a in 0..n {
        for b in 0..n {
            *samples.entry(geom.baseline(a, b)).or_insert(0) += 1;
        }
    }
    BaselineSet { samples }
}

// ---------------------------------------------------------------------------
// Builtin layouts
// ---------------------------------------------------------------------------

/// Zero-redundancy four-element linear array at {0, 1, 4, 6} wavelengths.
pub fn min_redundancy_4() -> ArrayGeometry {
    ArrayGeometry::linear(&[0, 1, 4, 6], 1.0).expect("static layout")
}

/// 16 elements on the outer product of {0, 1, 4, 6} with itself.
pub fn grid_13x13_16el() -> ArrayGeometry {
    let axis = [0, 1, 4, 6];
    let positions = axis
        .iter()
        .flat_map(|&y| axis.iter().map(move |&x| (x, y)))
        .collect();
    ArrayGeometry::new(positions, 1.0, 1.0).expect("static layout")
}

/// Eight elements on two rows: λ/2 pitch in x, 2λ pitch in y. Row 0 holds six
/// adjacent patches and row 1 two patches above the row ends, so the
/// difference set is exactly the filled 11 x 3 grid `|u| <= 5, |v| <= 1`.
pub fn two_dim_33pixel_8el() -> ArrayGeometry {
    let positions = vec![(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (0, 1), (5, 1)];
    ArrayGeometry::new(positions, 0.5, 2.0).expect("static layout")
}

/// "T" layout: a centre element plus three arms of `arm_n` elements (left,
/// right and down) on a unit grid. Imaging uses the filled
/// `(2·arm_n + 1)²` window.
pub fn t_config(arm_n: usize, pitch: f64) -> Result<ArrayGeometry, GeometryError> {
    if arm_n == 0 {
        return Err(GeometryError::InvalidArgument("arm length must be >= 1".into()));
    }
    let n = arm_n as i32;
    let mut positions = vec![(0, 0)];
    positions.extend((1..=n).map(|x| (-x, 0)));
    positions.extend((1..=n).map(|x| (x, 0)));
    positions.extend((1..=n).map(|y| (0, -y)));
    Ok(ArrayGeometry::new(positions, pitch, pitch)?.with_window(n, n))
}

/// Backtracking search for `n_elements` integer positions in `0..=u_max`
/// whose pairwise differences cover every value `1..=u_max`. Positions are
/// enumerated in lexicographic order and the first hit is returned.
pub fn find_full_coverage_linear(n_elements: usize, u_max: usize) -> Result<ArrayGeometry, GeometryError> {
    find_full_coverage_linear_with_pitch(n_elements, u_max, 1.0)
}

pub fn find_full_coverage_linear_with_pitch(
    n_elements: usize,
    u_max: usize,
    pitch: f64,
) -> Result<ArrayGeometry, GeometryError> {
    if n_elements < 2 {
        return Err(GeometryError::TooFewElements {
            needed: 2,
            got: n_elements,
        });
    }
    if u_max < 1 {
        return Err(GeometryError::InvalidSpan);
    }
    if let Some(xs) = coverage_search(n_elements, u_max) {
        let xs: Vec<i32> = xs.into_iter().map(|x| x as i32).collect();
        return ArrayGeometry::linear(&xs, pitch);
    }
    let best = (1..u_max)
        .rev()
        .find(|&u| coverage_search(n_elements, u).is_some())
        .unwrap_or(0);
    Err(GeometryError::CoverageInfeasible {
        n_elements,
        u_max,
        best,
    })
}

fn coverage_search(n: usize, u_max: usize) -> Option<Vec<usize>> {
    if n > u_max + 1 || n * (n - 1) / 2 < u_max {
        return None;
    }
    let mut counts = vec![0u32; u_max + 1];
    counts[u_max] = 1;
    let mut chosen = vec![0usize, u_max];
    let covered = 1;
    if extend_coverage(n, u_max, 1, &mut chosen, &mut counts, covered) {
        chosen.sort_unstable();
        Some(chosen)
    } else {
        None
    }
}

fn extend_coverage(
    n: usize,
    u_max: usize,
    next: usize,
    chosen: &mut Vec<usize>,
    counts: &mut [u32],
    covered: usize,
) -> bool {
    let remaining = n - chosen.len();
    if remaining == 0 {
        return covered == u_max;
    }
    // Each new element adds at most (current size + j) differences.
    let k = chosen.len();
    let capacity: usize = (0..remaining).map(|j| k + j).sum();
    if covered + capacity < u_max {
        return false;
    }
    for x in next..u_max {
        if u_max - x < remaining {
            break;
        }
        let mut newly = 0;
        for &c in chosen.iter() {
            let d = x.abs_diff(c);
            if counts[d] == 0 {
                newly += 1;
            }
            counts[d] += 1;
        }
        chosen.push(x);
        if extend_coverage(n, u_max, x + 1, chosen, counts, covered + newly) {
            return true;
        }
        chosen.pop();
        for &c in chosen.iter() {
            counts[x.abs_diff(c)] -= 1;
        }
    }
    false
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "min-redundancy-4",
    "linear-8-31",
    "linear-15",
    "linear-15-lambda",
    "planar-8-33",
    "grid-16-169",
    "t-config-81",
];

pub fn builtin(name: &str) -> Result<ArrayGeometry, GeometryError> {
    match name {
        "min-redundancy-4" => Ok(min_redundancy_4()),
        "linear-8-31" => find_full_coverage_linear_with_pitch(8, 15, 0.5),
        // λ/2 spacing keeps ±90° unaliased for the angle sweep.
        "linear-15" => ArrayGeometry::uniform_linear(15, 0.5),
        "linear-15-lambda" => ArrayGeometry::uniform_linear(15, 1.0),
        "planar-8-33" => Ok(two_dim_33pixel_8el()),
        "grid-16-169" => Ok(grid_13x13_16el()),
        "t-config-81" => t_config(4, 1.0),
        other => Err(GeometryError::UnknownBuiltin(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Field of view, resolution, pixel counts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisFov {
    /// Visibility samples along the axis (N or M).
    pub samples: usize,
    pub pitch: f64,
    /// Half field of view in degrees: `asin(1 / (2Δu))`, clamped at 90°.
    pub fov_deg: f64,
    /// `asin(1 / (N Δu))` in degrees.
    pub resolution_deg: f64,
    pub beamwidth_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovResolution {
    pub x: Option<AxisFov>,
    pub y: Option<AxisFov>,
}

pub fn axis_fov(samples: usize, pitch: f64) -> Option<AxisFov> {
    if samples < 2 || !(pitch > 0.0) {
        return None;
    }
    let fov = (1.0 / (2.0 * pitch)).min(1.0).asin().to_degrees();
    let res = (1.0 / (samples as f64 * pitch)).min(1.0).asin().to_degrees();
    Some(AxisFov {
        samples,
        pitch,
        fov_deg: fov,
        resolution_deg: res,
        beamwidth_deg: 2.0 * res,
    })
}

/// Axes are treated independently; the sample count along x is the number of
/// image-grid columns (`2·half_u + 1`), likewise for y.
pub fn fov_resolution(geom: &ArrayGeometry) -> FovResolution {
    let (hu, hv) = geom.image_half_extent();
    FovResolution {
        x: axis_fov((2 * hu + 1) as usize, geom.pitch_x()),
        y: axis_fov((2 * hv + 1) as usize, geom.pitch_y()),
    }
}

/// Pixels of a "Y" array with `arm_n` elements per arm: `2(3N² + 3N) + 1`.
pub fn pixels_y_config(arm_n: usize) -> usize {
    2 * (3 * arm_n * arm_n + 3 * arm_n) + 1
}

/// Pixels of a "T" or "U" array with `arm_n` elements per arm: `(2N + 1)²`.
pub fn pixels_t_config(arm_n: usize) -> usize {
    (2 * arm_n + 1) * (2 * arm_n + 1)
}

/// Longest baseline (m) that stays coherent over `bandwidth_hz` for sources
/// up to `theta_max_deg` off boresight: `c / (B sin θ)`.
pub fn coherence_limit(bandwidth_hz: f64, theta_max_deg: f64) -> f64 {
    SPEED_OF_LIGHT / (bandwidth_hz * theta_max_deg.to_radians().sin())
}
