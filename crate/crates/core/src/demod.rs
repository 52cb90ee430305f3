//! Code-product demodulation of the detected power stream.
//!
//! Element `n` carries code `c_n`; the squared sum then holds every pair's
//! cross term multiplied by `c_n c_m`. Correlating the chip-averaged power
//! against that product isolates `2 Re(e^{j(Θ_n-Θ_m)} V_nm)`, and
//! [`VIS_SCALE`] removes the factor two.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::codegen::Code;
use crate::error::DemodError;
use crate::geometry::ArrayGeometry;
use crate::visibility::VisibilityFunction;

/// Maps a raw code-product correlation to a visibility component.
pub const VIS_SCALE: f64 = 0.5;

/// Block average over each chip.
pub fn chip_average(p: &[f64], chips: usize, samples_per_chip: usize) -> Result<Vec<f64>, DemodError> {
    if samples_per_chip == 0 {
        return Err(DemodError::InvalidSamplesPerChip);
    }
    if p.len() != chips * samples_per_chip {
        return Err(DemodError::LengthMismatch {
            samples: p.len(),
            chips,
            samples_per_chip,
        });
    }
    Ok(p.chunks(samples_per_chip)
        .map(|c| c.iter().sum::<f64>() / samples_per_chip as f64)
        .collect())
}

fn correlate(avg: &[f64], product: &Code) -> f64 {
    avg.iter().zip(product.chips()).map(|(a, &c)| a * c as f64).sum::<f64>() / avg.len() as f64
}

/// Raw correlation `E(product · p)` after chip averaging (no scale applied).
pub fn demodulate_component(p: &[f64], product: &Code, samples_per_chip: usize) -> Result<f64, DemodError> {
    let avg = chip_average(p, product.len(), samples_per_chip)?;
    Ok(correlate(&avg, product))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Re,
    Im,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Re => "Re",
            Component::Im => "Im",
        })
    }
}

/// One reading: `sign · component(V_{pair.0, pair.1})`, 0-based elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extraction {
    pub pair: (usize, usize),
    pub component: Component,
    pub sign: i8,
}

impl fmt::Display for Extraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "" };
        write!(f, "{s}{}(V{}{})", self.component, self.pair.0 + 1, self.pair.1 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    /// Elements held in the 90° state (0-based).
    pub quadrature: Vec<usize>,
    pub extracted: Vec<Extraction>,
}

impl Run {
    pub fn offsets(&self, n_elements: usize) -> Vec<f64> {
        (0..n_elements)
            .map(|e| {
                if self.quadrature.contains(&e) {
                    std::f64::consts::FRAC_PI_2
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPlan {
    pub n_elements: usize,
    pub runs: Vec<Run>,
}

fn extractions_for(n: usize, quad: &[usize]) -> Vec<Extraction> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let (qa, qb) = (quad.contains(&a), quad.contains(&b));
            let (component, sign) = match (qa, qb) {
                (false, false) | (true, true) => (Component::Re, 1),
                (false, true) => (Component::Im, 1),
                (true, false) => (Component::Im, -1),
            };
            out.push(Extraction {
                pair: (a, b),
                component,
                sign,
            });
        }
    }
    out
}

/// Run 1 holds every element in phase. Each following run puts into
/// quadrature the elements whose index has a given bit set, most significant
/// bit first, so any two elements differ in at least one run. Short plans are
/// padded to three runs with empty runs.
pub fn plan_three_runs(n_elements: usize) -> RunPlan {
    let n = n_elements;
    let mut runs = vec![Run {
        quadrature: Vec::new(),
        extracted: extractions_for(n, &[]),
    }];
    let bits = if n > 1 { (usize::BITS - (n - 1).leading_zeros()) as usize } else { 0 };
    for r in 0..bits {
        let bit = bits - 1 - r;
        let quad: Vec<usize> = (0..n).filter(|e| (e >> bit) & 1 == 1).collect();
        runs.push(Run {
            extracted: extractions_for(n, &quad),
            quadrature: quad,
        });
    }
    while runs.len() < 3 {
        runs.push(Run {
            quadrature: Vec::new(),
            extracted: Vec::new(),
        });
    }
    RunPlan { n_elements: n, runs }
}

impl RunPlan {
    /// Whether every pair has both components extracted somewhere.
    pub fn is_complete(&self) -> bool {
        self.missing().is_none()
    }

    fn missing(&self) -> Option<(usize, usize, Component)> {
        let n = self.n_elements;
        for a in 0..n {
            for b in a + 1..n {
                for comp in [Component::Re, Component::Im] {
                    let found = self
                        .runs
                        .iter()
                        .flat_map(|r| &r.extracted)
                        .any(|x| x.pair == (a, b) && x.component == comp);
                    if !found {
                        return Some((a, b, comp));
                    }
                }
            }
        }
        None
    }
}

/// Theoretical frame time `runs · L / chip_rate`.
pub fn frame_time(runs: usize, code_length: usize, chip_rate: f64) -> f64 {
    runs as f64 * code_length as f64 / chip_rate
}

/// Assembles the visibility function from one power stream per run.
pub fn demodulate_all(
    powers: &[Vec<f64>],
    codes: &[Code],
    plan: &RunPlan,
    geom: &ArrayGeometry,
    samples_per_chip: usize,
) -> Result<VisibilityFunction, DemodError> {
    let n = plan.n_elements;
    if codes.len() < n {
        return Err(DemodError::InsufficientCodes { needed: n, got: codes.len() });
    }
    if geom.len() != n {
        return Err(DemodError::ElementCountMismatch {
            geometry: geom.len(),
            codes: n,
        });
    }
    if powers.len() != plan.runs.len() {
        return Err(DemodError::RunCountMismatch {
            plan: plan.runs.len(),
            powers: powers.len(),
        });
    }
    let len = codes[0].len();

    let mut sums: BTreeMap<((usize, usize), Component), (f64, usize)> = BTreeMap::new();
    let mut dc = Vec::new();
    for (run, p) in plan.runs.iter().zip(powers) {
        if run.extracted.is_empty() {
            continue;
        }
        let avg = chip_average(p, len, samples_per_chip)?;
        dc.push(avg.iter().sum::<f64>() / len as f64 / n as f64);
        let values: Vec<f64> = run
            .extracted
            .par_iter()
            .map(|x| {
                let prod = codes[x.pair.0].product(&codes[x.pair.1]).expect("codes share a length");
                correlate(&avg, &prod) * VIS_SCALE * x.sign as f64
            })
            .collect();
        for (x, v) in run.extracted.iter().zip(values) {
            let e = sums.entry((x.pair, x.component)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }

    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let get = |comp: Component| {
                sums.get(&((a, b), comp))
                    .map(|(s, c)| s / *c as f64)
                    .ok_or(DemodError::IncompleteVisibility {
                        a,
                        b,
                        component: match comp {
                            Component::Re => "Re",
                            Component::Im => "Im",
                        },
                    })
            };
            pairs.push(((a, b), Complex64::new(get(Component::Re)?, get(Component::Im)?)));
        }
    }
    let v0 = if dc.is_empty() { 0.0 } else { dc.iter().sum::<f64>() / dc.len() as f64 };
    let mut vis = VisibilityFunction::from_pairs(geom, &pairs, &[]);
    vis.insert_symmetric((0, 0), Complex64::new(v0, 0.0), n);
    Ok(vis)
}

/// Single-run recovery with element `n` modulated by `(i_n + j q_n)/√2`:
/// `Re V = ½(E[i_n i_m p] + E[q_n q_m p])`, `Im V = ½(E[i_n q_m p] - E[q_n i_m p])`.
pub fn demodulate_concurrent(
    p: &[f64],
    i_codes: &[Code],
    q_codes: &[Code],
    geom: &ArrayGeometry,
    samples_per_chip: usize,
) -> Result<VisibilityFunction, DemodError> {
    let n = geom.len();
    let got = i_codes.len().min(q_codes.len()) * 2;
    if got < 2 * n {
        return Err(DemodError::InsufficientCodes { needed: 2 * n, got });
    }
    let len = i_codes[0].len();
    let avg = chip_average(p, len, samples_per_chip)?;
    let corr = |a: &Code, b: &Code| correlate(&avg, &a.product(b).expect("codes share a length"));
    let pair_list: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let pairs: Vec<((usize, usize), Complex64)> = pair_list
        .par_iter()
        .map(|&(a, b)| {
            let (ia, qa, ib, qb) = (&i_codes[a], &q_codes[a], &i_codes[b], &q_codes[b]);
            let re = VIS_SCALE * (corr(ia, ib) + corr(qa, qb));
            let im = VIS_SCALE * (corr(ia, qb) - corr(qa, ib));
            ((a, b), Complex64::new(re, im))
        })
        .collect();
    let v0 = avg.iter().sum::<f64>() / len as f64 / n as f64;
    let mut vis = VisibilityFunction::from_pairs(geom, &pairs, &[]);
    vis.insert_symmetric((0, 0), Complex64::new(v0, 0.0), n);
    Ok(vis)
}

/// Sets `v_0` to zero, leaving every other sample untouched.
pub fn calibrate_zero_baseline(vis: &VisibilityFunction) -> VisibilityFunction {
    let mut out = vis.clone();
    out.set_v0(0.0);
    out
}

/// Diagnostic check that a plan covers every pair; used before acquisition.
pub fn check_plan(plan: &RunPlan) -> Result<(), DemodError> {
    match plan.missing() {
        None => Ok(()),
        Some((a, b, c)) => Err(DemodError::IncompleteVisibility {
            a,
            b,
            component: match c {
                Component::Re => "Re",
                Component::Im => "Im",
            },
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::select_bocp;

    fn names(run: &Run) -> Vec<String> {
        run.extracted.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn four_element_plan_matches_published_lists() {
        let plan = plan_three_runs(4);
        assert_eq!(plan.runs.len(), 3);
        assert!(plan.runs[0].quadrature.is_empty());
        assert_eq!(plan.runs[1].quadrature, vec![2, 3]);
        assert_eq!(
            names(&plan.runs[1]),
            ["Re(V12)", "Im(V13)", "Im(V14)", "Im(V23)", "Im(V24)", "Re(V34)"]
        );
        assert_eq!(plan.runs[2].quadrature, vec![1, 3]);
        assert!(names(&plan.runs[2]).contains(&"-Im(V23)".to_string()));
        assert!(plan.is_complete());
    }

    #[test]
    fn two_element_plan() {
        let plan = plan_three_runs(2);
        assert_eq!(names(&plan.runs[0]), ["Re(V12)"]);
        assert_eq!(plan.runs[1].quadrature, vec![1]);
        assert_eq!(names(&plan.runs[1]), ["Im(V12)"]);
        assert!(plan.runs[2].extracted.is_empty());
    }

    #[test]
    fn plans_are_complete() {
        for n in 2..40 {
            let plan = plan_three_runs(n);
            assert!(check_plan(&plan).is_ok(), "n={n}");
            assert!(plan.runs.len() >= 3);
        }
        assert_eq!(plan_three_runs(15).runs.len(), 5);
    }

    #[test]
    fn dc_term_is_mean_power() {
        let p = vec![2.0, 4.0, 6.0, 8.0];
        assert_eq!(demodulate_component(&p, &Code::ones(2), 2).unwrap(), 5.0);
        assert!(matches!(
            demodulate_component(&p, &Code::ones(3), 2),
            Err(DemodError::LengthMismatch { .. })
        ));
        assert!(chip_average(&p, 4, 0).is_err());
    }

    #[test]
    fn cross_term_is_twice_power() {
        // Two equal unit-power signals with code products c_1 c_2.
        let set = select_bocp(8, 2).unwrap();
        let (c1, c2) = (&set.members[0], &set.members[1]);
        let p: Vec<f64> = (0..8)
            .map(|t| {
                let s = c1.chip_f64(t) + c2.chip_f64(t);
                s * s
            })
            .collect();
        let v = demodulate_component(&p, &c1.product(c2).unwrap(), 1).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_zeroes_only_v0() {
        let mut v = VisibilityFunction::new();
        v.insert_symmetric((0, 0), Complex64::new(5.0, 0.0), 4);
        v.insert_symmetric((1, 0), Complex64::new(1.0, 2.0), 1);
        let c = calibrate_zero_baseline(&v);
        assert_eq!(c.v0(), 0.0);
        assert_eq!(c.get((1, 0)), v.get((1, 0)));
        assert_eq!(c.get((-1, 0)), v.get((-1, 0)));
    }

    #[test]
    fn errors() {
        let g = ArrayGeometry::uniform_linear(3, 1.0).unwrap();
        let plan = plan_three_runs(3);
        let codes = select_bocp(8, 3).unwrap().members;
        assert!(matches!(
            demodulate_all(&[vec![0.0; 8]], &codes, &plan, &g, 1),
            Err(DemodError::RunCountMismatch { .. })
        ));
        assert!(matches!(
            demodulate_all(&vec![vec![0.0; 8]; 3], &codes[..2], &plan, &g, 1),
            Err(DemodError::InsufficientCodes { .. })
        ));
        assert!(matches!(
            demodulate_concurrent(&[0.0; 8], &codes, &codes, &g, 1),
            Ok(_)
        ));
        assert!(matches!(
            demodulate_concurrent(&[0.0; 8], &codes[..1], &codes[..1], &g, 1),
            Err(DemodError::InsufficientCodes { .. })
        ));
        let mut broken = plan.clone();
        broken.runs[2].extracted.clear();
        broken.runs[1].extracted.retain(|x| x.component == Component::Re);
        assert!(matches!(
            demodulate_all(&vec![vec![0.0; 8]; 3], &codes, &broken, &g, 1),
            Err(DemodError::IncompleteVisibility { .. })
        ));
    }

    #[test]
    fn frame_time_formula() {
        assert_eq!(frame_time(3, 1024, 1e6), 3.072e-3);
    }
}
