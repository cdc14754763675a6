use maxlab::intervals::{exact_mn_law, exact_xi, survivor_set, ExactEngine, IntervalSet};
use maxlab::maps::{radius_from_mu_target, radius_from_mu_target_exact, MapSpec, MeasureModel, MeasureSpec, Observable};
use maxlab::maps::PreimageOptions;
use maxlab::montecarlo::closed_form_theta;
use maxlab::rational::{q, to_f64, Q};
use maxlab::real::Real;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn set_strategy() -> impl Strategy<Value = IntervalSet> {
    (1i64..=24, prop::collection::vec((0i64..=24, 0i64..=24), 0..5)).prop_map(|(d, ends)| {
        IntervalSet::from_intervals(
            ends.into_iter()
                .map(|(a, b)| (q(a.min(b).min(d), d), q(a.max(b).min(d), d)))
                .collect(),
        )
    })
}

/// Union of the level-`k` base-`b` cells whose index bit is set in `mask`.
fn cells(b: i64, k: u32, mask: u64) -> IntervalSet {
    let m = b.pow(k);
    IntervalSet::from_intervals((0..m).filter(|i| mask >> i & 1 == 1).map(|i| (q(i, m), q(i + 1, m))).collect())
}

/// Survivor measure by enumerating cylinders of depth `n + k − 1`: `f^j x` lies in the
/// target iff the `k` digits after position `j` index a marked cell.
fn brute_force_survivor(b: u64, k: u32, mask: u64, n: u32) -> Q {
    let depth = n + k - 1;
    let total = b.pow(depth);
    let window = b.pow(k);
    let mut hits = 0u64;
    for idx in 0..total {
        let mut digits = Vec::with_capacity(depth as usize);
        let mut v = idx;
        for _ in 0..depth {
            digits.push(v % b);
            v /= b;
        }
        digits.reverse();
        let survives = (0..n as usize).all(|j| {
            let cell = digits[j..j + k as usize].iter().fold(0, |acc, d| acc * b + d);
            debug_assert!(cell < window);
            mask >> cell & 1 == 0
        });
        hits += survives as u64;
    }
    Q::new(hits.into(), total.into())
}

fn lebesgue_engine(map: &MapSpec) -> ExactEngine {
    ExactEngine::new(map, &MeasureModel::Lebesgue).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lebesgue_is_preserved_by_preimages(s in set_strategy(), b in 2u32..=5) {
        let map = MapSpec::times_b(b).unwrap();
        let pre = map.branch_preimage(&s, PreimageOptions::default()).unwrap();
        prop_assert_eq!(pre.set.lebesgue(), s.lebesgue());
        prop_assert!(pre.truncation_mass_bound.is_none());
    }

    #[test]
    fn preimage_distributes_over_disjoint_unions(s in set_strategy(), t in set_strategy()) {
        let map = MapSpec::times_b(3).unwrap();
        let t = t.difference(&s).unwrap();
        let pre = |x: &IntervalSet| map.branch_preimage(x, PreimageOptions::default()).unwrap().set;
        prop_assert_eq!(pre(&s.union(&t).unwrap()), pre(&s).union(&pre(&t)).unwrap());
    }

    #[test]
    fn measure_plus_complement_is_one(s in set_strategy(), n in 0u64..5) {
        let map = MapSpec::doubling();
        let surv = survivor_set(&map, &s, n).unwrap();
        for set in [&s, &surv] {
            prop_assert_eq!(set.lebesgue() + set.complement().unwrap().lebesgue(), Q::one());
        }
    }

    #[test]
    fn survivor_sets_shrink(s in set_strategy(), b in 2u32..=3) {
        let map = MapSpec::times_b(b).unwrap();
        let engine = lebesgue_engine(&map);
        let measures = engine.survivor_measures(&s, 6).unwrap();
        let mut prev = IntervalSet::full();
        for n in 0..=6u64 {
            let cur = engine.survivor_set(&s, n).unwrap();
            prop_assert!(cur.is_subset_of(&prev));
            prop_assert_eq!(&cur.lebesgue(), &measures[n as usize]);
            prev = cur;
        }
    }

    #[test]
    fn survivor_law_matches_cylinder_enumeration(k in 1u32..=3, mask in any::<u64>(), b in 2u64..=3) {
        let width = b.pow(k);
        let mask = mask & ((1u64 << width) - 1);
        let map = MapSpec::times_b(b as u32).unwrap();
        let target = cells(b as i64, k, mask);
        let n_max = if b == 2 { 9 } else { 6 };
        let ns: Vec<u64> = (1..=n_max).collect();
        let table = exact_mn_law(&map, &target, &ns, &MeasureModel::Lebesgue).unwrap();
        for row in &table.rows {
            prop_assert_eq!(&row.survivor_measure, &brute_force_survivor(b, k, mask, row.n as u32));
        }
    }

    #[test]
    fn theta_lies_in_unit_interval(k in 1u32..=3, mask in 1u64..255, q_ in 1u64..=3) {
        let mask = mask & ((1u64 << (1 << k)) - 1);
        prop_assume!(mask != 0);
        let engine = lebesgue_engine(&MapSpec::doubling());
        let (_, theta) = engine.exact_aq_theta(&cells(2, k, mask), q_).unwrap();
        prop_assert!(theta >= Q::zero() && theta <= Q::one());
    }

    #[test]
    fn radius_round_trip(t in 1e-6f64..0.5, c in 0.05f64..0.95) {
        let obs = Observable::neglog(Real::rational(maxlab::rational::from_f64(c).unwrap())).unwrap();
        let r = radius_from_mu_target(&MeasureModel::Lebesgue, &obs, t);
        prop_assume!(r.is_ok());
        let mass = MeasureModel::Lebesgue.ball_mass(&obs, r.unwrap());
        prop_assert!((mass - t).abs() <= 1e-12, "{} vs {}", mass, t);
        let gauss = MeasureModel::Gauss;
        if let Ok(r) = radius_from_mu_target(&gauss, &obs, t) {
            prop_assert!((gauss.ball_mass(&obs, r) - t).abs() <= 1e-12);
        }
    }
}

#[test]
fn exact_radius_round_trip() {
    for (c, t) in [(q(1, 3), q(1, 1000)), (q(0, 1), q(1, 8)), (q(2, 5), q(3, 7))] {
        let obs = Observable::neglog(Real::rational(c)).unwrap();
        let r = radius_from_mu_target_exact(&MeasureModel::Lebesgue, &obs, &t).unwrap();
        assert_eq!(obs.ball(&r).unwrap().lebesgue(), t);
    }
}

#[test]
fn theta_at_prime_period_centres_two_routes() {
    // (map, centre, period): 1 − 1/|(f^q)'| from the derivative against μ(A^(q))/μ(B)
    let cases = [
        (MapSpec::doubling(), q(1, 3), 2u64),
        (MapSpec::doubling(), q(1, 7), 3),
        (MapSpec::doubling(), q(1, 5), 4),
        (MapSpec::times_b(3).unwrap(), q(1, 2), 1),
        (MapSpec::times_b(3).unwrap(), q(1, 4), 2),
    ];
    for (map, c, period) in cases {
        let engine = lebesgue_engine(&map);
        let closed = closed_form_theta(&map, &Real::rational(c.clone()), period).unwrap();
        let obs = Observable::neglog(Real::rational(c.clone())).unwrap();
        for k in [8, 10, 12] {
            let ball = obs.ball(&q(1, 1 << k)).unwrap();
            let (_, theta) = engine.exact_aq_theta(&ball, period).unwrap();
            assert_eq!(Some(maxlab::rational::fmt_q(&theta)), closed.exact, "{} centre {c}", map.name());
        }
    }
}

#[test]
fn xi_matches_digit_count() {
    // μ(B ∩ f^{-j}B) for B = [0, 2^-m) fixes zeros in digits 1..m and j+1..j+m
    let map = MapSpec::doubling();
    let engine = lebesgue_engine(&map);
    for m in 1..=5u32 {
        let b = IntervalSet::interval(q(0, 1), q(1, 1 << m));
        for p in 1..=8u64 {
            let want: Q = (1..=p)
                .map(|j| q(1, 1i64 << (m + (j as u32).min(m))))
                .fold(Q::zero(), |a, x| a + x);
            assert_eq!(exact_xi(&map, &b, p).unwrap(), want, "m={m} p={p}");
            assert_eq!(engine.exact_xi_by_sets(&b, p).unwrap(), want);
        }
    }
}

#[test]
fn blocking_bound_holds_on_a_small_grid() {
    let engine = lebesgue_engine(&MapSpec::doubling());
    for (a, m) in [(0i64, 3u32), (1, 3), (5, 4), (3, 2)] {
        let b = IntervalSet::interval(q(a, 1 << m), q(a + 1, 1 << m));
        for l in 6..=10 {
            for (s, t) in [(q(1, 2), 1), (q(1, 3), 2)] {
                let rep = engine.blocking_report(&b, l, &s, t).unwrap();
                assert!(rep.lhs <= rep.rhs && rep.holds, "B={} l={l}", b.describe());
            }
        }
    }
}

#[test]
fn recurrence_approaches_the_ball_integral() {
    let engine = lebesgue_engine(&MapSpec::doubling());
    for k in 3..=8 {
        let r = q(1, 1 << k);
        let limit = &r * q(2, 1) - &r * &r;
        for n in 3..=14u64 {
            let mu = engine.exact_recurrence_measure(&r, n).unwrap();
            let slack = &r * q(8, 1) / Q::from_integer((1i64 << n).into());
            let gap = if mu > limit { &mu - &limit } else { &limit - &mu };
            assert!(gap <= slack, "r={r} n={n}: {mu} vs {limit}");
        }
    }
}

#[test]
fn recurrence_matches_midpoint_quadrature() {
    // f^n(x) − x is piecewise linear with 2^n pieces, so a midpoint grid of N points
    // misclassifies at most a few cells per crossing
    let engine = lebesgue_engine(&MapSpec::doubling());
    let big_n = 1u64 << 22;
    for (r, n) in [(q(1, 8), 1u64), (q(1, 2), 1), (q(1, 8), 4), (q(3, 16), 6)] {
        let rf = to_f64(&r);
        let hits = (0..big_n)
            .filter(|i| {
                let x = (*i as f64 + 0.5) / big_n as f64;
                let y = (x * (1u64 << n) as f64).fract();
                (y - x).abs() < rf
            })
            .count();
        let est = hits as f64 / big_n as f64;
        let exact = to_f64(&engine.exact_recurrence_measure(&r, n).unwrap());
        let tol = 4.0 * (2 * (1u64 << n) + 2) as f64 / big_n as f64;
        assert!((est - exact).abs() <= tol, "r={r} n={n}: {est} vs {exact}");
    }
}

#[test]
fn kac_mean_return_time() {
    let map = MapSpec::lsv(0.25).unwrap();
    let measure = MeasureSpec::Ulam { grid: 4096, max_iter: 20_000 }.resolve(&map).unwrap();
    let lo = measure.cdf(0.5);
    let mass = 1.0 - lo;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let samples = 20_000;
    let rs: Vec<f64> = (0..samples)
        .map(|_| {
            let x = measure.inverse_cdf(lo + rng.gen::<f64>() * mass).clamp(0.5, 1.0);
            map.induced_first_return(x, 1 << 30).unwrap().1 as f64
        })
        .collect();
    let mean = rs.iter().sum::<f64>() / samples as f64;
    let var = rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let se = (var / samples as f64).sqrt() * mass;
    assert!((mean * mass - 1.0).abs() <= 3.0 * se, "E[R] μ(A) = {} ± {se}", mean * mass);
}
