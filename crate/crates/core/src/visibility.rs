//! Complex visibility samples on the integer u-v grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::DemodError;
use crate::geometry::ArrayGeometry;

/// Visibility samples keyed by integer baseline. Every insertion writes the
/// sample and its conjugate mirror, so `V(-u,-v) = conj(V(u,v))` holds
/// exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VisibilityFunction {
    samples: BTreeMap<(i32, i32), Complex64>,
    redundancy: BTreeMap<(i32, i32), usize>,
}

fn is_canonical(uv: (i32, i32)) -> bool {
    uv >= (0, 0)
}

fn neg(uv: (i32, i32)) -> (i32, i32) {
    (-uv.0, -uv.1)
}

impl VisibilityFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `value` at `uv` and `conj(value)` at `-uv`. The zero baseline
    /// keeps only the real part.
    pub fn insert_symmetric(&mut self, uv: (i32, i32), value: Complex64, count: usize) {
        if uv == (0, 0) {
            self.samples.insert(uv, Complex64::new(value.re, 0.0));
            self.redundancy.insert(uv, count);
            return;
        }
        let (key, val) = if is_canonical(uv) { (uv, value) } else { (neg(uv), value.conj()) };
        self.samples.insert(key, val);
        self.samples.insert(neg(key), val.conj());
        self.redundancy.insert(key, count);
        self.redundancy.insert(neg(key), count);
    }

    /// Assembles per-pair correlations `V_ab = <x_a conj(x_b)>` (baseline
    /// `pos[a] - pos[b]`) into baseline samples. Pairs sharing a baseline are
    /// averaged without weighting; `autos` are the per-element powers whose
    /// mean becomes `v_0`.
    pub fn from_pairs(geom: &ArrayGeometry, pairs: &[((usize, usize), Complex64)], autos: &[f64]) -> Self {
        let mut acc: BTreeMap<(i32, i32), (Complex64, usize)> = BTreeMap::new();
        for &((a, b), v) in pairs {
            let uv = geom.baseline(a, b);
            if uv == (0, 0) {
                continue;
            }
            let (key, val) = if is_canonical(uv) { (uv, v) } else { (neg(uv), v.conj()) };
            let e = acc.entry(key).or_insert((Complex64::new(0.0, 0.0), 0));
            e.0 += val;
            e.1 += 1;
        }
        let mut vis = Self::new();
        if !autos.is_empty() {
            let mean = autos.iter().sum::<f64>() / autos.len() as f64;
            vis.insert_symmetric((0, 0), Complex64::new(mean, 0.0), autos.len());
        }
        for (key, (sum, n)) in acc {
            vis.insert_symmetric(key, sum / n as f64, n);
        }
        vis
    }

    pub fn get(&self, uv: (i32, i32)) -> Option<Complex64> {
        self.samples.get(&uv).copied()
    }

    pub fn redundancy(&self, uv: (i32, i32)) -> usize {
        self.redundancy.get(&uv).copied().unwrap_or(0)
    }

    pub fn samples(&self) -> &BTreeMap<(i32, i32), Complex64> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn v0(&self) -> f64 {
        self.samples.get(&(0, 0)).map_or(0.0, |v| v.re)
    }

    pub fn set_v0(&mut self, value: f64) {
        let count = self.redundancy((0, 0));
        self.insert_symmetric((0, 0), Complex64::new(value, 0.0), count);
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        self.samples
            .iter()
            .all(|(&uv, &v)| self.samples.get(&neg(uv)).is_some_and(|w| *w == v.conj()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|(&k, &v)| (k, v * factor)).collect(),
            redundancy: self.redundancy.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Text dump: `#`-prefixed header lines (`key value`), then
    /// `u v re im redundancy` records. Floats use shortest round-trip form.
    pub fn to_dump(&self, header: &[(&str, String)]) -> String {
        let mut s = String::from("# cmi-visibility v1\n");
        for (k, v) in header {
            let _ = writeln!(s, "# {k} {v}");
        }
        for (&(u, v), val) in &self.samples {
            let _ = writeln!(s, "{u} {v} {:?} {:?} {}", val.re, val.im, self.redundancy((u, v)));
        }
        s
    }

    /// Parses [`to_dump`](Self::to_dump) output; header lines are returned
    /// as key/value pairs.
    pub fn parse_dump(text: &str) -> Result<(Self, Vec<(String, String)>), DemodError> {
        let mut vis = Self::new();
        let mut header = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some((k, v)) = h.split_once(' ') {
                    header.push((k.to_string(), v.trim().to_string()));
                }
                continue;
            }
            let err = |msg: String| DemodError::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(err(format!("expected 5 fields, got {}", f.len())));
            }
            let u: i32 = f[0].parse().map_err(|e| err(format!("u: {e}")))?;
            let v: i32 = f[1].parse().map_err(|e| err(format!("v: {e}")))?;
            let re: f64 = f[2].parse().map_err(|e| err(format!("re: {e}")))?;
            let im: f64 = f[3].parse().map_err(|e| err(format!("im: {e}")))?;
            let r: usize = f[4].parse().map_err(|e| err(format!("redundancy: {e}")))?;
            vis.samples.insert((u, v), Complex64::new(re, im));
            vis.redundancy.insert((u, v), r);
        }
        Ok((vis, header))
    }
}
