//! End-to-end CMI acquisition: synthesize, modulate, combine, detect,
//! demodulate.

use std::fmt;
use std::str::FromStr;

use crate::codegen::{select_bocp_with, BocpSearchOptions, BocpSet, Code};
use crate::demod::{demodulate_all, demodulate_concurrent, plan_three_runs, RunPlan};
use crate::error::{DemodError, PipelineError};
use crate::geometry::ArrayGeometry;
use crate::rfchain::{combine, detect_power, modulate, synthesize, Detector, ElementStream, SimParams};
use crate::scene::Scene;
use crate::visibility::VisibilityFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Acquisition {
    /// Binary codes, one in-phase run plus quadrature runs.
    #[default]
    ThreeRun,
    /// Separate in-phase and quadrature codes in a single run.
    Concurrent,
}

impl Acquisition {
    pub fn codes_needed(self, n_elements: usize) -> usize {
        match self {
            Acquisition::ThreeRun => n_elements,
            Acquisition::Concurrent => 2 * n_elements,
        }
    }
}

impl fmt::Display for Acquisition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Acquisition::ThreeRun => "three-run",
            Acquisition::Concurrent => "concurrent",
        })
    }
}

impl FromStr for Acquisition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "three-run" => Ok(Acquisition::ThreeRun),
            "concurrent" => Ok(Acquisition::Concurrent),
            other => Err(format!("unknown acquisition '{other}' (three-run | concurrent)")),
        }
    }
}

/// BOCP codes for the array at the configured code length.
pub fn select_codes(
    n_elements: usize,
    acquisition: Acquisition,
    code_length: usize,
    opts: BocpSearchOptions,
) -> Result<BocpSet, PipelineError> {
    Ok(select_bocp_with(code_length, acquisition.codes_needed(n_elements), opts)?)
}

#[derive(Debug, Clone)]
pub struct CmiOutput {
    pub visibility: VisibilityFunction,
    /// Unmodulated element streams, shared with the oracle.
    pub streams: Vec<ElementStream>,
    /// Detected power per run.
    pub powers: Vec<Vec<f64>>,
    pub plan: Option<RunPlan>,
}

/// Detected power for one acquisition with the given codes and offsets.
pub fn acquire(
    streams: &[ElementStream],
    i_codes: &[Code],
    q_codes: Option<&[Code]>,
    offsets: &[f64],
    params: &SimParams,
) -> Result<Vec<f64>, PipelineError> {
    let modulated = modulate(streams, i_codes, q_codes, offsets, params.samples_per_chip)?;
    let sum = combine(&modulated, params.combiner_gain)?;
    Ok(detect_power(&sum, Detector::from_params(params)))
}

/// Runs the complete chain. Every run of a three-run acquisition sees the
/// same synthesized streams (a static scene).
pub fn run_cmi(
    scene: &Scene,
    geom: &ArrayGeometry,
    params: &SimParams,
    acquisition: Acquisition,
    codes: &[Code],
) -> Result<CmiOutput, PipelineError> {
    let streams = synthesize(scene, geom, params)?;
    run_cmi_on_streams(streams, geom, params, acquisition, codes)
}

pub fn run_cmi_on_streams(
    streams: Vec<ElementStream>,
    geom: &ArrayGeometry,
    params: &SimParams,
    acquisition: Acquisition,
    codes: &[Code],
) -> Result<CmiOutput, PipelineError> {
    let n = geom.len();
    let needed = acquisition.codes_needed(n);
    if codes.len() < needed {
        return Err(DemodError::InsufficientCodes { needed, got: codes.len() }.into());
    }
    let spc = params.samples_per_chip;
    // The combiner gain scales power by k_c²; undo it so visibilities stay in
    // scene units.
    let gain = params.combiner_gain * params.combiner_gain;
    let unscale = |mut p: Vec<f64>| {
        if gain != 1.0 && gain != 0.0 {
            p.iter_mut().for_each(|x| *x /= gain);
        }
        p
    };
    match acquisition {
        Acquisition::ThreeRun => {
            let plan = plan_three_runs(n);
            let i_codes = &codes[..n];
            let powers = plan
                .runs
                .iter()
                .map(|run| acquire(&streams, i_codes, None, &run.offsets(n), params).map(unscale))
                .collect::<Result<Vec<_>, _>>()?;
            let visibility = demodulate_all(&powers, i_codes, &plan, geom, spc)?;
            Ok(CmiOutput {
                visibility,
                streams,
                powers,
                plan: Some(plan),
            })
        }
        Acquisition::Concurrent => {
            let (i_codes, q_codes) = (&codes[..n], &codes[n..2 * n]);
            let p = unscale(acquire(&streams, i_codes, Some(q_codes), &vec![0.0; n], params)?);
            let visibility = demodulate_concurrent(&p, i_codes, q_codes, geom, spc)?;
            Ok(CmiOutput {
                visibility,
                streams,
                powers: vec![p],
                plan: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::select_bocp;
    use crate::geometry::min_redundancy_4;
    use crate::oracle::{compare, correlator_bank};
    use crate::scene::{analytic_visibility_fn, Emitter};

    fn params() -> SimParams {
        SimParams {
            code_length: 64,
            samples_per_chip: 64,
            bandwidth_hz: 1.0,
            seed: 3,
            ..SimParams::default()
        }
    }

    #[test]
    fn three_run_matches_oracle() {
        let g = min_redundancy_4();
        let scene = Scene::new(vec![Emitter::at_angle(0.0, 1.0), Emitter::at_angle(10.0, 0.7)], 0.0).unwrap();
        let codes = select_bocp(64, 4).unwrap().members;
        let out = run_cmi(&scene, &g, &params(), Acquisition::ThreeRun, &codes).unwrap();
        assert_eq!(out.visibility.len(), 13);
        assert!(out.visibility.is_conjugate_symmetric());
        let oracle = correlator_bank(&out.streams, &g);
        let r = compare(&oracle, &out.visibility).unwrap();
        assert!(r.rms_rel_error < 0.05, "{}", r.rms_rel_error);
        let truth = analytic_visibility_fn(&scene, &g);
        assert!(compare(&truth, &out.visibility).unwrap().rms_rel_error < 0.08);
    }

    #[test]
    fn concurrent_matches_oracle() {
        let g = min_redundancy_4();
        let scene = Scene::point(Emitter::at_angle(20.0, 1.0)).unwrap();
        let codes = select_bocp(64, 8).unwrap().members;
        let out = run_cmi(&scene, &g, &params(), Acquisition::Concurrent, &codes).unwrap();
        let r = compare(&correlator_bank(&out.streams, &g), &out.visibility).unwrap();
        assert!(r.rms_rel_error < 0.05, "{}", r.rms_rel_error);
    }

    #[test]
    fn combiner_gain_is_transparent() {
        let g = min_redundancy_4();
        let scene = Scene::point(Emitter::at_angle(5.0, 1.0)).unwrap();
        let codes = select_bocp(64, 4).unwrap().members;
        let a = run_cmi(&scene, &g, &params(), Acquisition::ThreeRun, &codes).unwrap();
        let mut p = params();
        p.combiner_gain = 2.0;
        let b = run_cmi(&scene, &g, &p, Acquisition::ThreeRun, &codes).unwrap();
        assert!(compare(&a.visibility, &b.visibility).unwrap().max_rel_error < 1e-12);
    }

    #[test]
    fn too_few_codes() {
        let g = min_redundancy_4();
        let codes = select_bocp(64, 4).unwrap().members;
        assert!(run_cmi(&Scene::empty(), &g, &params(), Acquisition::Concurrent, &codes).is_err());
        assert_eq!("concurrent".parse::<Acquisition>().unwrap(), Acquisition::Concurrent);
        assert!("x".parse::<Acquisition>().is_err());
    }
}
