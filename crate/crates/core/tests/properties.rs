use proptest::prelude::*;
use sms_core::affinity::{knn_sms_run, ScoreMatrix};
use sms_core::clustering::max_cluster_diameter;
use sms_core::state::{
    full_gradient, kde_value, mean_shift_operator, neighborhood, objective_l, partial_gradient, shift_vector,
};
use sms_core::{
    bms_sweep, extract_clusters, sms_run, sms_step, AlgoConfig, Algorithm, Bandwidth, MergePolicy, Profile,
    RandomIndexStream, State, StopReason, TraceOptions,
};

fn h(v: f64) -> Bandwidth {
    Bandwidth::new(v).unwrap()
}

fn states(max_n: usize, extent: f64) -> impl Strategy<Value = State> {
    prop::collection::vec((-extent..extent, -extent..extent), 2..=max_n)
        .prop_map(|pts| State::from_rows(&pts.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>()).unwrap())
}

fn smooth_profiles() -> impl Strategy<Value = Profile> {
    (2u32..=4).prop_map(|a| Profile::poly(a).unwrap())
}

fn any_profile() -> impl Strategy<Value = Profile> {
    prop_oneof![smooth_profiles(), Just(Profile::Epanechnikov)]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unit directions at evenly spaced angles.
fn probes(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|j| {
            let a = std::f64::consts::PI * j as f64 / k as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

fn extent_along(s: &State, u: &[f64]) -> (f64, f64) {
    s.points().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        let v = dot(x, u);
        (lo.min(v), hi.max(v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operator_stays_in_neighbor_hull(s in states(10, 1.5), p in any_profile(), i in 0usize..10) {
        let x = s.point(i % s.len()).to_vec();
        let out = mean_shift_operator(&x, &s, h(1.0), p).unwrap();
        let nbrs = neighborhood(&x, &s, h(1.0)).unwrap();
        for u in probes(16) {
            let v = dot(&out.position, &u);
            let (lo, hi) = nbrs.0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &j| {
                let w = dot(s.point(j), &u);
                (lo.min(w), hi.max(w))
            });
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn partial_gradient_is_a_scaled_shift(s in states(10, 1.5), p in smooth_profiles(), hv in 0.5f64..2.0) {
        let bw = h(hv);
        let scale = full_gradient(&s, bw, p).norm().max(1.0);
        for i in 0..s.len() {
            let g = partial_gradient(&s, bw, p, i).unwrap();
            let x = s.point(i);
            let w: f64 = s.points().map(|xj| {
                let t = x.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (hv * hv);
                p.weight(t)
            }).sum();
            let m = shift_vector(x, &s, bw, p).unwrap();
            let err: Vec<f64> = g.iter().zip(&m).map(|(gi, mi)| gi - 2.0 * w / (hv * hv) * mi).collect();
            prop_assert!(norm(&err) <= 1e-12 * scale, "err {}", norm(&err));
        }
    }

    #[test]
    fn shift_points_along_the_density_gradient(s in states(10, 1.0), p in smooth_profiles(), q in (-1.0f64..1.0, -1.0f64..1.0)) {
        let x = [q.0, q.1];
        let eps = 1e-5;
        let fd: Vec<f64> = (0..2).map(|c| {
            let (mut a, mut b) = (x, x);
            a[c] += eps;
            b[c] -= eps;
            (kde_value(&a, &s, h(1.0), p).unwrap() - kde_value(&b, &s, h(1.0), p).unwrap()) / (2.0 * eps)
        }).collect();
        let m = shift_vector(&x, &s, h(1.0), p).unwrap();
        if norm(&fd) > 1e-8 && norm(&m) > 1e-8 {
            let cos = dot(&fd, &m) / (norm(&fd) * norm(&m));
            prop_assert!(cos >= 1.0 - 1e-6, "cos {cos}");
        }
    }

    #[test]
    fn sms_step_ascends_by_the_explicit_constant(s in states(10, 1.5), p in any_profile(), seed in any::<u64>()) {
        let cfg = AlgoConfig::new(Algorithm::Sms, p, h(1.0));
        let c = 2.0 * p.weight(0.0);
        let mut rng = RandomIndexStream::new(seed, s.len());
        let mut cur = s.clone();
        for _ in 0..20 {
            let before = objective_l(&cur, h(1.0), p);
            let scale = full_gradient(&cur, h(1.0), p).norm().max(1.0);
            let mut next = cur.clone();
            let step = sms_step(&mut next, &cfg, &mut rng);
            let gain = objective_l(&next, h(1.0), p) - before;
            prop_assert!(gain >= c * step.shift * step.shift - 1e-9 * scale);
            // only the drawn point moves
            for j in (0..cur.len()).filter(|&j| j != step.index) {
                prop_assert_eq!(cur.point(j), next.point(j));
            }
            cur = next;
        }
    }

    #[test]
    fn hulls_never_grow(s in states(12, 1.0), p in any_profile(), seed in any::<u64>()) {
        let cfg = AlgoConfig::new(Algorithm::Sms, p, h(1.0));
        let dirs = probes(8);
        let mut blurred = s.clone();
        let mut stochastic = s.clone();
        let mut rng = RandomIndexStream::new(seed, s.len());
        for _ in 0..10 {
            let (b0, s0) = (blurred.clone(), stochastic.clone());
            bms_sweep(&mut blurred, &cfg);
            for _ in 0..s.len() {
                sms_step(&mut stochastic, &cfg, &mut rng);
            }
            for u in &dirs {
                for (old, new) in [(&b0, &blurred), (&s0, &stochastic)] {
                    let (lo0, hi0) = extent_along(old, u);
                    let (lo1, hi1) = extent_along(new, u);
                    prop_assert!(lo1 >= lo0 - 1e-12 && hi1 <= hi0 + 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn seeded_runs_repeat_exactly(s in states(15, 2.0), p in any_profile(), seed in any::<u64>()) {
        let cfg = AlgoConfig::new(Algorithm::Sms, p, h(1.0)).with_seed(seed);
        let (a, ta) = sms_run(&s, &cfg, TraceOptions::full(5)).unwrap();
        let (b, tb) = sms_run(&s, &cfg, TraceOptions::full(5)).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta.records, tb.records);
        prop_assert_eq!(ta.positions, tb.positions);
    }

    #[test]
    fn knn_runs_repeat_exactly(s in states(15, 2.0), k in 1usize..5, seed in any::<u64>()) {
        let k = k.min(s.len() - 1);
        let scores = ScoreMatrix::negative_squared_distances(&s);
        let cfg = AlgoConfig::new(Algorithm::Sms, Profile::Epanechnikov, h(1.0)).with_seed(seed).with_max_updates(2000);
        let (a, ta) = knn_sms_run(&s, &scores, k, &cfg, TraceOptions::default(), None).unwrap();
        let (b, tb) = knn_sms_run(&s, &scores, k, &cfg, TraceOptions::default(), None).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ta.records, tb.records);
    }
}

/// Three tight blobs far apart: a longer run on the same seed continues the
/// shorter one, and cluster diameters can only have shrunk.
#[test]
fn longer_runs_have_smaller_clusters() {
    for seed in 0..5u64 {
        let s0 = sms_core::theory::uniform_ball(30, 2, 0.3, seed).unwrap();
        let rows: Vec<Vec<f64>> = s0
            .points()
            .enumerate()
            .map(|(i, x)| vec![x[0] + 5.0 * (i % 3) as f64, x[1]])
            .collect();
        let s0 = State::from_rows(&rows).unwrap();
        let base = AlgoConfig::new(Algorithm::Sms, Profile::BIWEIGHT, h(1.0))
            .with_seed(seed)
            .with_tolerance(1e-300)
            .with_stop_fraction(1.0);
        let (short, ts) = sms_run(&s0, &base.clone().with_max_updates(300), TraceOptions::minimal()).unwrap();
        let (long, tl) = sms_run(&s0, &base.with_max_updates(3000), TraceOptions::minimal()).unwrap();
        assert_eq!(ts.stop_reason, StopReason::MaxUpdates);
        assert!(tl.total_updates > ts.total_updates);
        let merge = MergePolicy::default();
        let d_short = max_cluster_diameter(&extract_clusters(&short, h(1.0), merge), &short);
        let d_long = max_cluster_diameter(&extract_clusters(&long, h(1.0), merge), &long);
        assert!(d_long <= d_short + 1e-9, "seed {seed}: {d_long} > {d_short}");
    }
}
