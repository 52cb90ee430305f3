//! Conventional correlator-bank interferometer used as ground truth.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::OracleError;
use crate::geometry::ArrayGeometry;
use crate::rfchain::ElementStream;
use crate::visibility::VisibilityFunction;

/// `V_nm = <s_n conj(s_m)>` for every pair, mapped to baselines and averaged
/// exactly as the demodulator does.
pub fn correlator_bank(streams: &[ElementStream], geom: &ArrayGeometry) -> VisibilityFunction {
    let n = streams.len();
    let pair_list: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let pairs: Vec<((usize, usize), Complex64)> = pair_list
        .par_iter()
        .map(|&(a, b)| {
            let (x, y) = (&streams[a].samples, &streams[b].samples);
            let sum: Complex64 = x.iter().zip(y).map(|(p, q)| p * q.conj()).sum();
            ((a, b), sum / x.len().max(1) as f64)
        })
        .collect();
    let autos: Vec<f64> = streams.iter().map(ElementStream::mean_power).collect();
    VisibilityFunction::from_pairs(geom, &pairs, &autos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rms_rel_error: f64,
    pub max_rel_error: f64,
    /// `b - a` per baseline.
    pub deltas: BTreeMap<(i32, i32), Complex64>,
}

/// Errors of `b` relative to `max |a|` over the shared coverage.
pub fn compare(a: &VisibilityFunction, b: &VisibilityFunction) -> Result<ComparisonReport, OracleError> {
    for &uv in a.samples().keys() {
        if b.get(uv).is_none() {
            return Err(OracleError::CoverageMismatch(uv.0, uv.1));
        }
    }
    for &uv in b.samples().keys() {
        if a.get(uv).is_none() {
            return Err(OracleError::CoverageMismatch(uv.0, uv.1));
        }
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(OracleError::ZeroReference);
    }
    let deltas: BTreeMap<(i32, i32), Complex64> = a
        .samples()
        .iter()
        .map(|(&uv, &va)| (uv, b.get(uv).unwrap() - va))
        .collect();
    let n = deltas.len().max(1) as f64;
    let sq: f64 = deltas.values().map(|d| d.norm_sqr()).sum();
    let max = deltas.values().map(|d| d.norm()).fold(0.0, f64::max);
    Ok(ComparisonReport {
        rms_rel_error: (sq / n).sqrt() / scale,
        max_rel_error: max / scale,
        deltas,
    })
}
