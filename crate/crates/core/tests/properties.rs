use std::sync::Arc;

use fitolab::functional::{
    catalog_functional, check_non_anticipativity, second_vertical_derivative, vertical_derivative_into, BumpConfig,
    Centered,
};
use fitolab::pathspace::{read_path_csv, write_path_csv, Path, TimeGrid, WienerGenerator};
use fitolab::representation::{
    build_ladder, hitting_index, integrand_from_functional, stabilization_check, stop_process, ProcessOnGrid,
    ThetaInfinite,
};
use fitolab::stats::Moments;
use proptest::prelude::*;

fn arb_grid() -> impl Strategy<Value = Arc<TimeGrid>> {
    prop::collection::vec(1u32..=32, 2..=20).prop_map(|ticks| {
        let mut t = 0.0;
        let mut times = vec![0.0];
        for d in ticks {
            t += d as f64 / 32.0;
            times.push(t);
        }
        Arc::new(TimeGrid::new(times).unwrap())
    })
}

fn arb_process() -> impl Strategy<Value = ProcessOnGrid> {
    (arb_grid(), 1usize..=5).prop_flat_map(|(grid, p)| {
        prop::collection::vec(-20.0f64..20.0, p * grid.len())
            .prop_map(move |v| ProcessOnGrid::new(grid.clone(), p, v).unwrap())
    })
}

proptest! {
    #[test]
    fn uniform_grid_ends_exactly_at_horizon(horizon in 0.01f64..100.0, steps in 1usize..5000) {
        let g = TimeGrid::uniform(horizon, steps).unwrap();
        prop_assert_eq!(g.horizon(), horizon);
        prop_assert_eq!(g.steps(), steps);
        prop_assert!(g.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn path_csv_round_trips_bitwise(grid in arb_grid(), dim in 1usize..=3, seed in any::<u64>()) {
        let values: Vec<f64> = (0..grid.len() * dim)
            .map(|i| ((seed.wrapping_mul(i as u64 + 1) % 20001) as f64 - 10000.0) / 7.0)
            .collect();
        let p = Path::new(grid, dim, values).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        let q = read_path_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(p, q);
    }

    #[test]
    fn catalog_functionals_are_non_anticipative(seed in any::<u64>(), s in 0usize..50) {
        for (id, dim) in [("quadratic", 1), ("integral", 1), ("anticipated-average", 1), ("running-max-to-t", 1), ("inverse-bessel", 3)] {
            let f = catalog_functional(id, &[]).unwrap();
            let src = WienerGenerator::new(Arc::new(TimeGrid::uniform(1.0, 16).unwrap()), dim, 50, seed).unwrap();
            let check = check_non_anticipativity(f.as_ref(), &src.generate(s), 8, seed).unwrap();
            prop_assert!(check.passed(), "{}: {:?}", id, check.witness);
        }
    }

    #[test]
    fn centering_leaves_integrands_unchanged(seed in any::<u64>()) {
        let grid = Arc::new(TimeGrid::uniform(1.0, 24).unwrap());
        let src = WienerGenerator::new(grid.clone(), 1, 3, seed).unwrap();
        let cfg = BumpConfig::default();
        for id in ["exponential", "conditional-square", "anticipated-average"] {
            let f = catalog_functional(id, &[]).unwrap();
            let centered = Centered::at_origin(f.clone(), &grid).unwrap();
            let a = integrand_from_functional(f.as_ref(), &src, &cfg).unwrap();
            let b = integrand_from_functional(&centered, &src, &cfg).unwrap();
            prop_assert_eq!(a.rows(), b.rows());
        }
    }

    #[test]
    fn second_vertical_derivative_is_exactly_symmetric(seed in any::<u64>(), k in 0usize..16) {
        let f = catalog_functional("inverse-bessel", &[2.0, -1.0, 0.5]).unwrap();
        let src = WienerGenerator::new(Arc::new(TimeGrid::uniform(0.5, 16).unwrap()), 3, 1, seed).unwrap();
        let h = second_vertical_derivative(f.as_ref(), k, &src.generate(0), 1e-4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(h[i * 3 + j].to_bits(), h[j * 3 + i].to_bits());
            }
        }
    }

    #[test]
    fn vertical_derivative_ignores_the_future(seed in any::<u64>(), k in 0usize..20, shift in -3.0f64..3.0) {
        let grid = Arc::new(TimeGrid::uniform(1.0, 20).unwrap());
        let p = WienerGenerator::new(grid.clone(), 1, 1, seed).unwrap().generate(0);
        let mut v = p.values().to_vec();
        for x in &mut v[k + 1..] {
            *x += shift;
        }
        let q = Path::new(grid, 1, v).unwrap();
        let cfg = BumpConfig::default();
        for id in ["exponential", "anticipated-average", "integral"] {
            let f = catalog_functional(id, &[]).unwrap();
            let (mut a, mut b) = ([0.0], [0.0]);
            vertical_derivative_into(f.as_ref(), k, &p.view(), cfg.vertical, cfg.scheme, &mut a).unwrap();
            vertical_derivative_into(f.as_ref(), k, &q.view(), cfg.vertical, cfg.scheme, &mut b).unwrap();
            prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
    }

    #[test]
    fn hitting_index_is_the_first_crossing(m in arb_process(), level in 0.1f64..25.0) {
        for s in 0..m.scenarios() {
            let v = m.scenario(s);
            let k = hitting_index(v, level);
            let last = v.len() - 1;
            prop_assert!(k <= last);
            prop_assert!(v[..k].iter().all(|x| x.abs() < level));
            prop_assert!(k == last || v[k].abs() >= level);
        }
    }

    #[test]
    fn ladder_is_monotone_and_stopped_values_are_bounded(
        m in arb_process(),
        mut levels in prop::collection::btree_set(1u32..30, 1..5),
    ) {
        let levels: Vec<f64> = std::mem::take(&mut levels).into_iter().map(f64::from).collect();
        let ladder = build_ladder(&m, &levels, &ThetaInfinite).unwrap();
        let steps = m.grid().steps();
        for s in 0..m.scenarios() {
            for l in 0..levels.len() {
                let tau = ladder.tau(s, l);
                prop_assert!(tau <= steps);
                if l > 0 {
                    prop_assert!(ladder.tau(s, l - 1) <= tau);
                }
            }
        }
        for (l, &n) in levels.iter().enumerate() {
            let taus = ladder.taus_at(l);
            let stopped = stop_process(&m, &taus).unwrap();
            for s in 0..m.scenarios() {
                let bound = n.max(m.value(s, taus[s]).abs());
                prop_assert!(stopped.scenario(s).iter().all(|x| x.abs() <= bound));
                prop_assert!(stopped.scenario(s)[taus[s]..].iter().all(|x| x.to_bits() == m.value(s, taus[s]).to_bits()));
            }
        }
    }

    #[test]
    fn stabilization_fractions_never_decrease(seed in any::<u64>()) {
        let f = catalog_functional("quadratic", &[]).unwrap();
        let src = WienerGenerator::new(Arc::new(TimeGrid::uniform(4.0, 32).unwrap()), 1, 20, seed).unwrap();
        let m = ProcessOnGrid::from_functional(f.as_ref(), &src).unwrap();
        let phi = integrand_from_functional(f.as_ref(), &src, &BumpConfig::default()).unwrap();
        let ladder = build_ladder(&m, &[0.5, 1.0, 2.0, 4.0, 8.0], &ThetaInfinite).unwrap();
        let fr = stabilization_check(&phi, &ladder).unwrap();
        prop_assert!(fr.windows(2).all(|w| w[0].agreement <= w[1].agreement));
        prop_assert!(fr.iter().all(|l| l.agreement >= l.coverage));
    }

    #[test]
    fn moments_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
        let split = split.min(xs.len());
        let all: Moments = xs.iter().copied().collect();
        let mut a: Moments = xs[..split].iter().copied().collect();
        let b: Moments = xs[split..].iter().copied().collect();
        a.merge(&b);
        prop_assert_eq!(a.n, all.n);
        prop_assert!((a.mean - all.mean).abs() <= 1e-9 * (1.0 + all.mean.abs()));
        prop_assert!((a.variance() - all.variance()).abs() <= 1e-7 * (1.0 + all.variance()));
    }
}
