//! Time-domain signal chain: per-element noise synthesis from a scene, code
//! modulation through quantised phase states, power combining and square-law
//! detection.
//!
//! Signals are complex envelopes sampled at `sample_rate`. Every emitter is an
//! independent band-limited complex Gaussian process; element `n` sees each
//! emitter rotated by its geometric phase `2π(Δu·x_n·l + Δv·y_n·m)` plus its
//! own receiver noise. Passband detection is available for small fidelity
//! checks: the combined envelope is up-converted, squared and low-pass
//! filtered.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::codegen::Code;
use crate::error::RfError;
use crate::geometry::{fnv1a, ArrayGeometry};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMode {
    /// `p = |s|²` on the complex envelope.
    Envelope,
    /// `p = LPF{ s_rf² }` with `s_rf = √2 Re(s e^{jω_o t})`.
    Passband,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub sample_rate: f64,
    /// Carrier frequency, used in passband mode only.
    pub carrier_hz: f64,
    /// Two-sided noise bandwidth of every emitter and receiver.
    pub bandwidth_hz: f64,
    pub code_length: usize,
    pub samples_per_chip: usize,
    /// Receiver noise temperature `T_RT` (same units as scene brightness).
    pub t_receiver: f64,
    /// Combiner gain `k_c`.
    pub combiner_gain: f64,
    /// Band-limiting FIR order (taps - 1), rounded up to even.
    pub filter_order: usize,
    /// Multiply each emitter's amplitude by `cos θ` at every element.
    pub element_taper: bool,
    pub mode: DetectionMode,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            sample_rate: 1.0,
            carrier_hz: 0.25,
            bandwidth_hz: 0.5,
            code_length: 256,
            samples_per_chip: 16,
            t_receiver: 0.0,
            combiner_gain: 1.0,
            filter_order: 64,
            element_taper: false,
            mode: DetectionMode::Envelope,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), RfError> {
        let bad = |m: String| Err(RfError::InvalidParams(m));
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad(format!("sample_rate {} must be > 0", self.sample_rate));
        }
        if self.samples_per_chip == 0 {
            return bad("samples_per_chip must be >= 1".into());
        }
        if self.code_length == 0 {
            return bad("code_length must be >= 1".into());
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return bad(format!("bandwidth {} must be > 0", self.bandwidth_hz));
        }
        if !(self.t_receiver.is_finite() && self.t_receiver >= 0.0) {
            return bad(format!("t_receiver {} must be >= 0", self.t_receiver));
        }
        if !self.combiner_gain.is_finite() {
            return bad("combiner_gain must be finite".into());
        }
        if self.mode == DetectionMode::Passband {
            if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
                return bad("passband mode needs a positive carrier".into());
            }
            if self.sample_rate < 4.0 * self.carrier_hz {
                return bad(format!(
                    "passband mode needs sample_rate >= 4 x carrier ({} < {})",
                    self.sample_rate,
                    4.0 * self.carrier_hz
                ));
            }
            if self.bandwidth_hz > self.carrier_hz {
                return bad("passband mode needs bandwidth <= carrier".into());
            }
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.code_length * self.samples_per_chip
    }

    pub fn chip_rate(&self) -> f64 {
        self.sample_rate / self.samples_per_chip as f64
    }

    /// Post-detection integration time `τ_LF = L / chip_rate`.
    pub fn integration_time(&self) -> f64 {
        self.code_length as f64 / self.chip_rate()
    }

    pub fn digest(&self) -> u64 {
        fnv1a(format!("{self:?}").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementStream {
    pub element_id: usize,
    pub samples: Vec<Complex64>,
    /// Static phase offset Θ applied at modulation (radians).
    pub static_offset: f64,
}

impl ElementStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len().max(1) as f64
    }
}

// ---------------------------------------------------------------------------
// Noise generation
// ---------------------------------------------------------------------------

const NO_ID: u64 = u64::MAX;
const BACKGROUND_TAG: u64 = u64::MAX - 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for the (seed, emitter, element) substream.
pub fn substream_rng(seed: u64, emitter: u64, element: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ emitter) ^ element.rotate_left(17));
    ChaCha8Rng::seed_from_u64(key)
}

/// Blackman-windowed sinc low-pass with `order + 1` taps (order rounded up to
/// even) and cutoff `cutoff` as a fraction of the sample rate.
pub fn lowpass_taps(order: usize, cutoff: f64) -> Vec<f64> {
    let order = order + order % 2;
    let mid = (order / 2) as f64;
    (0..=order)
        .map(|i| {
            let x = i as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * x).sin() / (PI * x)
            };
            let w = if order == 0 {
                1.0
            } else {
                let a = 2.0 * PI * i as f64 / order as f64;
                0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos()
            };
            sinc * w
        })
        .collect()
}

/// Unit-power complex Gaussian noise of `len` samples, band-limited to
/// `bandwidth / sample_rate` (two-sided) by a linear-phase FIR.
fn band_limited_noise(rng: &mut ChaCha8Rng, len: usize, params: &SimParams) -> Vec<Complex64> {
    let frac = params.bandwidth_hz / params.sample_rate;
    let gauss = |rng: &mut ChaCha8Rng| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * FRAC_1_SQRT_2
    };
    if frac >= 1.0 || params.filter_order == 0 {
        return (0..len).map(|_| gauss(rng)).collect();
    }
    let mut taps = lowpass_taps(params.filter_order, frac / 2.0);
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let norm = energy.sqrt();
    taps.iter_mut().for_each(|h| *h /= norm);
    let white: Vec<Complex64> = (0..len + taps.len() - 1).map(|_| gauss(rng)).collect();
    (0..len)
        .map(|t| {
            taps.iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, &h)| acc + white[t + k] * h)
        })
        .collect()
}

/// Synthesises one stream per element. Each emitter's waveform depends only
/// on `(seed, emitter)` and each receiver's noise only on `(seed, element)`,
/// so the output is identical for any thread count.
pub fn synthesize(scene: &Scene, geom: &ArrayGeometry, params: &SimParams) -> Result<Vec<ElementStream>, RfError> {
    params.validate()?;
    let len = params.total_samples();
    let seed = params.seed;
    let emitters = scene.emitters();

    let sources: Vec<Vec<Complex64>> = emitters
        .par_iter()
        .enumerate()
        .map(|(k, _)| {
            let mut rng = substream_rng(seed, k as u64, NO_ID);
            band_limited_noise(&mut rng, len, params)
        })
        .collect();

    let (px, py) = (geom.pitch_x(), geom.pitch_y());
    let streams: Vec<ElementStream> = geom
        .positions()
        .par_iter()
        .enumerate()
        .map(|(n, &(x, y))| {
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            for (e, src) in emitters.iter().zip(&sources) {
                let taper = if params.element_taper {
                    (1.0 - e.l * e.l - e.m * e.m).max(0.0).sqrt()
                } else {
                    1.0
                };
                let phase = 2.0 * PI * (px * x as f64 * e.l + py * y as f64 * e.m);
                let w = Complex64::from_polar(e.brightness.sqrt() * taper, phase);
                for (a, s) in acc.iter_mut().zip(src) {
                    *a += s * w;
                }
            }
            if params.t_receiver > 0.0 {
                let mut rng = substream_rng(seed, NO_ID, n as u64);
                let noise = band_limited_noise(&mut rng, len, params);
                let g = params.t_receiver.sqrt();
                for (a, s) in acc.iter_mut().zip(&noise) {
                    *a += s * g;
                }
            }
            if scene.background() > 0.0 {
                let mut rng = substream_rng(seed, BACKGROUND_TAG, n as u64);
                let noise = band_limited_noise(&mut rng, len, params);
                let g = scene.background().sqrt();
                for (a, s) in acc.iter_mut().zip(&noise) {
                    *a += s * g;
                }
            }
            ElementStream {
                element_id: n,
                samples: acc,
                static_offset: 0.0,
            }
        })
        .collect();

    for s in &streams {
        if s.samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(RfError::NonFinite(s.element_id));
        }
    }
    Ok(streams)
}

// ---------------------------------------------------------------------------
// Modulation, combining, detection
// ---------------------------------------------------------------------------

/// Phase-shifter state for one chip.
///
/// With both codes present the state is one of ±45°/±135°, i.e. the complex
/// gain `(i + jq)/√2`. With a single code the state is 0° or 180°. The static
/// offset Θ rotates every chip by `e^{jΘ}`.
fn chip_gain(i: i8, q: Option<i8>) -> Complex64 {
    match q {
        Some(q) => Complex64::new(i as f64, q as f64) * FRAC_1_SQRT_2,
        None => Complex64::new(i as f64, 0.0),
    }
}

/// Applies per-chip phase states to each element. `q_codes = None` selects
/// binary (0°/180°) modulation from `i_codes` alone.
pub fn modulate(
    streams: &[ElementStream],
    i_codes: &[Code],
    q_codes: Option<&[Code]>,
    offsets: &[f64],
    samples_per_chip: usize,
) -> Result<Vec<ElementStream>, RfError> {
    let n = streams.len();
    if i_codes.len() != n {
        return Err(RfError::CodeCountMismatch {
            expected: n,
            got: i_codes.len(),
        });
    }
    if let Some(q) = q_codes {
        if q.len() != n {
            return Err(RfError::CodeCountMismatch {
                expected: n,
                got: q.len(),
            });
        }
    }
    if offsets.len() != n {
        return Err(RfError::CodeCountMismatch {
            expected: n,
            got: offsets.len(),
        });
    }
    if samples_per_chip == 0 {
        return Err(RfError::InvalidParams("samples_per_chip must be >= 1".into()));
    }
    streams
        .par_iter()
        .enumerate()
        .map(|(e, stream)| {
            let chips = stream.len() / samples_per_chip;
            if chips * samples_per_chip != stream.len() {
                return Err(RfError::CodeLengthMismatch {
                    code: i_codes[e].len(),
                    chips,
                });
            }
            let codes = [Some(&i_codes[e]), q_codes.map(|q| &q[e])];
            for c in codes.iter().flatten() {
                if c.len() != chips {
                    return Err(RfError::CodeLengthMismatch { code: c.len(), chips });
                }
            }
            let rot = Complex64::from_polar(1.0, offsets[e]);
            let mut out = Vec::with_capacity(stream.len());
            for (t, block) in stream.samples.chunks(samples_per_chip).enumerate() {
                let g = rot * chip_gain(i_codes[e].chips()[t], q_codes.map(|q| q[e].chips()[t]));
                out.extend(block.iter().map(|s| s * g));
            }
            Ok(ElementStream {
                element_id: stream.element_id,
                samples: out,
                static_offset: offsets[e],
            })
        })
        .collect()
}

/// `s_sum = k_c Σ_n s_n`.
pub fn combine(streams: &[ElementStream], combiner_gain: f64) -> Result<Vec<Complex64>, RfError> {
    let first = streams.first().ok_or(RfError::NoStreams)?;
    let len = first.len();
    for s in streams {
        if s.len() != len {
            return Err(RfError::StreamLengthMismatch(len, s.len()));
        }
    }
    let mut sum = vec![Complex64::new(0.0, 0.0); len];
    for s in streams {
        for (a, x) in sum.iter_mut().zip(&s.samples) {
            *a += x;
        }
    }
    if combiner_gain != 1.0 {
        sum.iter_mut().for_each(|a| *a *= combiner_gain);
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    Envelope,
    Passband {
        carrier_hz: f64,
        sample_rate: f64,
        lpf_order: usize,
    },
}

impl Detector {
    pub fn from_params(p: &SimParams) -> Self {
        match p.mode {
            DetectionMode::Envelope => Detector::Envelope,
            DetectionMode::Passband => Detector::Passband {
                carrier_hz: p.carrier_hz,
                sample_rate: p.sample_rate,
                lpf_order: p.filter_order.max(32),
            },
        }
    }
}

/// Real RF waveform `√2 Re(s e^{j2πf t})`, so its mean square equals the
/// envelope power.
pub fn upconvert(s: &[Complex64], carrier_hz: f64, sample_rate: f64) -> Vec<f64> {
    let w = 2.0 * PI * carrier_hz / sample_rate;
    s.iter()
        .enumerate()
        .map(|(t, x)| std::f64::consts::SQRT_2 * (x * Complex64::from_polar(1.0, w * t as f64)).re)
        .collect()
}

/// Square-law detection.
pub fn detect_power(s_sum: &[Complex64], detector: Detector) -> Vec<f64> {
    match detector {
        Detector::Envelope => s_sum.iter().map(|x| x.norm_sqr()).collect(),
        Detector::Passband {
            carrier_hz,
            sample_rate,
            lpf_order,
        } => {
            let rf = upconvert(s_sum, carrier_hz, sample_rate);
            let squared: Vec<f64> = rf.iter().map(|x| x * x).collect();
            // Cut halfway to the 2ω_o image.
            let taps = lowpass_taps(lpf_order, carrier_hz / sample_rate);
            filter_same(&squared, &taps)
        }
    }
}

/// Centred FIR filtering; taps falling off either end are dropped and the
/// remainder renormalised to the full DC gain.
fn filter_same(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let dc: f64 = taps.iter().sum();
    let n = x.len() as isize;
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            let mut used = 0.0;
            for (k, &h) in taps.iter().enumerate() {
                let idx = t + half - k as isize;
                if (0..n).contains(&idx) {
                    acc += h * x[idx as usize];
                    used += h;
                }
            }
            if used.abs() > 1e-12 {
                acc * dc / used
            } else {
                acc
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Stream dump
// ---------------------------------------------------------------------------

/// Text header (`cmi-streams v1`, `elements`, `length`, `params_hash`) ended
/// by a blank line, then each element's samples as little-endian `f64`
/// `(re, im)` pairs.
pub fn write_stream_dump<W: Write>(mut w: W, streams: &[ElementStream], params_hash: u64) -> Result<(), RfError> {
    let len = streams.first().map_or(0, ElementStream::len);
    writeln!(w, "cmi-streams v1")?;
    writeln!(w, "elements {}", streams.len())?;
    writeln!(w, "length {len}")?;
    writeln!(w, "params_hash {params_hash:016x}")?;
    writeln!(w)?;
    for s in streams {
        if s.len() != len {
            return Err(RfError::StreamLengthMismatch(len, s.len()));
        }
        for x in &s.samples {
            w.write_all(&x.re.to_le_bytes())?;
            w.write_all(&x.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_stream_dump<R: BufRead>(mut r: R) -> Result<(Vec<ElementStream>, u64), RfError> {
    let mut line = String::new();
    let mut elements = None;
    let mut length = None;
    let mut hash = 0;
    let mut first = true;
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(RfError::Dump("unexpected end of header".into()));
        }
        let l = line.trim_end();
        if first {
            if l != "cmi-streams v1" {
                return Err(RfError::Dump(format!("bad magic '{l}'")));
            }
            first = false;
            continue;
        }
        if l.is_empty() {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| RfError::Dump(format!("bad header '{l}'")))?;
        let bad = |e: String| RfError::Dump(format!("{k}: {e}"));
        match k {
            "elements" => elements = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "length" => length = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "params_hash" => hash = u64::from_str_radix(v, 16).map_err(|e| bad(e.to_string()))?,
            _ => {}
        }
    }
    let (n, len) = match (elements, length) {
        (Some(n), Some(l)) => (n, l),
        _ => return Err(RfError::Dump("missing elements/length".into())),
    };
    let mut buf = [0u8; 8];
    let mut read_f64 = |r: &mut R| -> io::Result<f64> {
        r.read_exact(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    };
    let mut streams = Vec::with_capacity(n);
    for e in 0..n {
        let mut samples = Vec::with_capacity(len);
        for _ in 0..len {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            samples.push(Complex64::new(re, im));
        }
        streams.push(ElementStream {
            element_id: e,
            samples,
            static_offset: 0.0,
        });
    }
    Ok((streams, hash))
}
