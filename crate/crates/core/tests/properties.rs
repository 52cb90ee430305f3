use num_complex::Complex64;
use proptest::prelude::*;

use cmi_core::codegen::{
    gen_rademacher, verify_bocp, walsh_code, walsh_product_index, BocpSet, Code,
};
use cmi_core::demod::{calibrate_zero_baseline, plan_three_runs, Component};
use cmi_core::geometry::{baselines, builtin, ArrayGeometry};
use cmi_core::imaging::{dift, dift_with, peak, DiftOptions};
use cmi_core::oracle::correlator_bank;
use cmi_core::rfchain::{combine, modulate, synthesize};
use cmi_core::scene::analytic_visibility_fn;
use cmi_core::sensitivity::{delta_t_image, delta_t_image_cmi, delta_t_vis};
use cmi_core::{Emitter, Scene, SimParams, VisibilityFunction};

fn small_params(seed: u64) -> SimParams {
    SimParams {
        code_length: 16,
        samples_per_chip: 4,
        t_receiver: 0.5,
        seed,
        ..SimParams::default()
    }
}

fn random_vis(half: i32, values: &[(f64, f64)]) -> VisibilityFunction {
    let mut v = VisibilityFunction::new();
    v.insert_symmetric((0, 0), Complex64::new(values[0].0.abs(), 0.0), 1);
    for u in 1..=half {
        let (re, im) = values[u as usize];
        v.insert_symmetric((u, 0), Complex64::new(re, im), 1);
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walsh_closed_under_product(k in 1usize..9, a in 0usize..256, b in 0usize..256) {
        let len = 1 << k;
        let (a, b) = (a % len, b % len);
        let p = walsh_code(len, a).unwrap().product(&walsh_code(len, b).unwrap()).unwrap();
        prop_assert_eq!(p, walsh_code(len, walsh_product_index(a, b)).unwrap());
    }

    #[test]
    fn distinct_walsh_rows_orthogonal(k in 1usize..9, a in 0usize..256, b in 0usize..256) {
        let len = 1 << k;
        let (a, b) = (a % len, b % len);
        let d = walsh_code(len, a).unwrap().dot(&walsh_code(len, b).unwrap()).unwrap();
        prop_assert_eq!(d, if a == b { len as i64 } else { 0 });
    }

    #[test]
    fn rademacher_subsets_are_bocp(k in 2usize..9, mask in 1u32..256) {
        let r = gen_rademacher(1 << k).unwrap();
        let subset: Vec<Code> = r[1..].iter().enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, c)| c.clone())
            .collect();
        prop_assume!(!subset.is_empty());
        prop_assert!(verify_bocp(&subset).ok);
    }

    #[test]
    fn bocp_set_subsets_stay_bocp(drop in 0usize..22) {
        let set = cmi_core::codegen::select_bocp(512, 22).unwrap();
        let mut idx = set.walsh_indices.clone();
        idx.remove(drop);
        let sub = BocpSet::from_walsh_indices(512, &idx).unwrap();
        prop_assert!(verify_bocp(&sub.members).ok);
    }

    #[test]
    fn run_plan_covers_all_pairs(n in 2usize..40) {
        let plan = plan_three_runs(n);
        prop_assert!(plan.is_complete());
        for run in &plan.runs {
            for x in &run.extracted {
                let mixed = run.quadrature.contains(&x.pair.0) != run.quadrature.contains(&x.pair.1);
                prop_assert_eq!(x.component == Component::Im, mixed);
            }
        }
    }

    #[test]
    fn modulation_preserves_power(seed in any::<u64>(), offs in proptest::collection::vec(-3.2f64..3.2, 3)) {
        let g = ArrayGeometry::uniform_linear(3, 1.0).unwrap();
        let scene = Scene::point(Emitter::at_angle(12.0, 1.0)).unwrap();
        let s = synthesize(&scene, &g, &small_params(seed)).unwrap();
        let codes: Vec<Code> = (1..4).map(|k| walsh_code(16, k).unwrap()).collect();
        let q: Vec<Code> = (5..8).map(|k| walsh_code(16, k).unwrap()).collect();
        for qc in [None, Some(q.as_slice())] {
            let m = modulate(&s, &codes, qc, &offs, 4).unwrap();
            for (a, b) in s.iter().zip(&m) {
                prop_assert!((a.mean_power() - b.mean_power()).abs() < 1e-9 * a.mean_power().max(1.0));
            }
        }
    }

    #[test]
    fn all_ones_power_is_self_plus_cross(seed in any::<u64>()) {
        let g = ArrayGeometry::uniform_linear(3, 1.0).unwrap();
        let s = synthesize(&Scene::empty(), &g, &small_params(seed)).unwrap();
        let sum = combine(&s, 1.0).unwrap();
        for t in 0..sum.len() {
            let self_power: f64 = s.iter().map(|e| e.samples[t].norm_sqr()).sum();
            let mut cross = 0.0;
            for a in 0..3 {
                for b in a + 1..3 {
                    cross += 2.0 * (s[a].samples[t] * s[b].samples[t].conj()).re;
                }
            }
            prop_assert!((sum[t].norm_sqr() - self_power - cross).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_is_bit_identical(seed in any::<u64>()) {
        let g = ArrayGeometry::uniform_linear(4, 0.5).unwrap();
        let scene = Scene::new(vec![Emitter::at_angle(-20.0, 1.0), Emitter::at_angle(35.0, 2.0)], 0.1).unwrap();
        let a = synthesize(&scene, &g, &small_params(seed)).unwrap();
        let b = synthesize(&scene, &g, &small_params(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn oracle_is_conjugate_symmetric(seed in any::<u64>()) {
        let g = builtin("planar-8-33").unwrap();
        let scene = Scene::point(Emitter::at_direction(10.0, 30.0, 1.0)).unwrap();
        let v = correlator_bank(&synthesize(&scene, &g, &small_params(seed)).unwrap(), &g);
        prop_assert!(v.is_conjugate_symmetric());
        prop_assert_eq!(v.len(), 33);
        prop_assert!(v.v0() >= 0.0);
    }

    #[test]
    fn dift_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        v1 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
        v2 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
    ) {
        let g = builtin("min-redundancy-4").unwrap();
        let (x, y) = (random_vis(6, &v1), random_vis(6, &v2));
        let mut combo = VisibilityFunction::new();
        for (&k, &va) in x.samples() {
            if k >= (0, 0) {
                combo.insert_symmetric(k, va * a + y.get(k).unwrap() * b, 1);
            }
        }
        let (mx, my, mc) = (dift(&x, &g).unwrap(), dift(&y, &g).unwrap(), dift(&combo, &g).unwrap());
        for i in 0..mc.len() {
            let expect = a * mx.pixels()[i] + b * my.pixels()[i];
            prop_assert!((mc.pixels()[i] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7)) {
        let g = builtin("min-redundancy-4").unwrap();
        let vis = random_vis(6, &v);
        let opts = DiftOptions { normalized: true, ..DiftOptions::default() };
        let map = dift_with(&vis, &g, opts).unwrap();
        let sv: f64 = vis.samples().values().map(|c| c.norm_sqr()).sum();
        let sp: f64 = map.pixels().iter().map(|p| p * p).sum();
        prop_assert!((sv - 13.0 * sp).abs() < 1e-9 * sv.max(1.0));
    }

    #[test]
    fn calibration_shifts_map_uniformly(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7)) {
        let g = builtin("min-redundancy-4").unwrap();
        let vis = random_vis(6, &v);
        let opts = DiftOptions { normalized: true, ..DiftOptions::default() };
        let diff = dift_with(&vis, &g, opts).unwrap().sub(&dift_with(&calibrate_zero_baseline(&vis), &g, opts).unwrap());
        for d in diff.pixels() {
            prop_assert!((d - vis.v0() / 13.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_round_trip_finds_bin(bin in -14i32..=14) {
        let g = builtin("linear-15").unwrap();
        let l = bin as f64 / 14.5;
        let scene = Scene::point(Emitter { l, m: 0.0, brightness: 1.0 }).unwrap();
        let map = dift(&analytic_visibility_fn(&scene, &g), &g).unwrap();
        prop_assert_eq!(peak(&map).unwrap(), (bin, 0));
    }

    #[test]
    fn planar_round_trip_finds_bin(i in -16i32..=16, j in -16i32..=16) {
        let g = builtin("grid-16-169").unwrap();
        let (hu, hv) = g.image_half_extent();
        let (i, j) = (i.clamp(-hu, hu), j.clamp(-hv, hv));
        let n = (2 * hu + 1) as f64;
        let (l, m) = (i as f64 / n, j as f64 / n);
        let scene = Scene::point(Emitter { l, m, brightness: 2.0 }).unwrap();
        let map = dift(&analytic_visibility_fn(&scene, &g), &g).unwrap();
        prop_assert_eq!(peak(&map).unwrap(), (i, j));
    }

    #[test]
    fn baseline_sets_symmetric(xs in proptest::collection::btree_set(0i32..30, 1..10)) {
        let xs: Vec<i32> = xs.into_iter().collect();
        let g = ArrayGeometry::linear(&xs, 1.0).unwrap();
        let b = baselines(&g);
        prop_assert!(b.is_symmetric());
        prop_assert_eq!(b.multiplicity((0, 0)), xs.len());
        prop_assert_eq!(b.off_zero_total(), xs.len() * (xs.len() - 1));
    }

    #[test]
    fn sensitivity_scaling(
        n in 1.0f64..64.0,
        t in 10.0f64..3000.0,
        np in 1.0f64..1000.0,
        bw in 1e6f64..1e10,
        tau in 1e-3f64..10.0,
    ) {
        let img = delta_t_image(t, np, bw, tau).unwrap();
        let cmi = delta_t_image_cmi(n, t, np, bw, tau).unwrap();
        prop_assert!((cmi / img - n).abs() < 1e-9 * n);
        let v = delta_t_vis(n, t, bw, tau).unwrap();
        prop_assert!(delta_t_vis(n, t, bw * 2.0, tau).unwrap() < v);
        prop_assert!(delta_t_vis(n, t, bw, tau * 2.0).unwrap() < v);
        prop_assert!(delta_t_vis(n, t * 2.0, bw, tau).unwrap() > v);
        prop_assert!((delta_t_image(t, 4.0 * np, bw, tau).unwrap() / img - 2.0).abs() < 1e-12);
    }

    #[test]
    fn text_formats_round_trip(xs in proptest::collection::btree_set(-20i32..20, 1..8), l in -0.9f64..0.9, b in 0.0f64..5.0) {
        let xs: Vec<i32> = xs.into_iter().collect();
        let g = ArrayGeometry::linear(&xs, 0.5).unwrap().with_window(3, 0);
        let back = ArrayGeometry::parse(&g.to_text()).unwrap();
        prop_assert_eq!(back.digest(), g.digest());
        let scene = Scene::new(vec![Emitter { l, m: 0.0, brightness: b }], b / 2.0).unwrap();
        prop_assert_eq!(&Scene::parse(&scene.to_text()).unwrap(), &scene);
        let vis = analytic_visibility_fn(&scene, &g);
        let (parsed, _) = VisibilityFunction::parse_dump(&vis.to_dump(&[])).unwrap();
        prop_assert_eq!(parsed, vis);
    }
}
