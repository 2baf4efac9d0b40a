use std::collections::BTreeMap;

use approx::assert_relative_eq;
use dyndisc::bounds::*;
use dyndisc::channels::{SubFidelityLabel, UniqueFidelitySet2};
use dyndisc::patterns::*;
use dyndisc::Error;
use proptest::prelude::*;

fn fids(f01: f64, f11: f64, f02: f64, f12: f64) -> UniqueFidelitySet2 {
    UniqueFidelitySet2::new(f01, f11, f02, f12).unwrap()
}

fn sample() -> UniqueFidelitySet2 {
    fids(0.83, 0.61, 0.72, 0.94)
}

fn poly_map(p: &ErrorPolynomial) -> BTreeMap<[u32; 4], u128> {
    p.terms().iter().map(|(k, &v)| (k.exponents, v)).collect()
}

fn map(entries: &[([u32; 4], u128)]) -> BTreeMap<[u32; 4], u128> {
    entries.iter().copied().collect()
}

// Exponents counted directly over every channel pair {j, l}.
fn brute_exponents(a: &ChannelPattern, b: &ChannelPattern) -> [u32; 4] {
    let (a, b) = (a.bits(), b.bits());
    let mut e = [0u32; 4];
    for j in 0..a.len() {
        for l in (j + 1)..a.len() {
            if let Some(label) = SubFidelityLabel::classify([a[j], a[l]], [b[j], b[l]]) {
                e[label.index()] += 1;
            }
        }
    }
    e
}

#[test]
fn polynomial_cpf_disjoint_pairs() {
    let s = ProbeDomainDistribution::parse(4, "1,2;3,4").unwrap();
    let p = build_error_polynomial(&ImageSpace::ucpf(4, 1).unwrap(), &s).unwrap();
    assert_eq!(poly_map(&p), map(&[([0, 1, 0, 0], 4), ([2, 0, 0, 0], 8)]));
    assert_eq!(p.space_size(), 4);
    assert_eq!(p.total_multiplicity(), 12);
}

#[test]
fn polynomial_cpf_all_pairs_m3() {
    let p = build_error_polynomial(&ImageSpace::ucpf(3, 1).unwrap(), &klnn_distribution(3, 2).unwrap()).unwrap();
    assert_eq!(poly_map(&p), map(&[([2, 1, 0, 0], 6)]));
    assert_eq!(p.channel_use(), 2.0);
}

#[test]
fn polynomial_uniform_two_channels() {
    let s = ProbeDomainDistribution::parse(2, "1,2").unwrap();
    let p = build_error_polynomial(&ImageSpace::uniform_all(2).unwrap(), &s).unwrap();
    assert_eq!(poly_map(&p), map(&[([1, 0, 0, 0], 4), ([0, 1, 0, 0], 2), ([0, 0, 1, 0], 2), ([0, 0, 0, 1], 4)]));
}

#[test]
fn polynomial_rejects_wide_domains() {
    let s = ProbeDomainDistribution::parse(3, "1,2,3").unwrap();
    let r = build_error_polynomial(&ImageSpace::uniform_all(3).unwrap(), &s);
    assert!(matches!(r, Err(Error::UnsupportedDomain(_))));
    let mixed = ProbeDomainDistribution::parse(3, "1,2;3").unwrap();
    assert!(matches!(
        build_error_polynomial(&ImageSpace::ucpf(3, 1).unwrap(), &mixed),
        Err(Error::UnsupportedDomain(_))
    ));
    let s4 = ProbeDomainDistribution::parse(4, "1,2;3,4").unwrap();
    assert!(build_error_polynomial(&ImageSpace::ucpf(3, 1).unwrap(), &s4).is_err());
    let big = ImageSpace::uniform_all(22).unwrap();
    let ring = klnn_distribution(22, 2).unwrap();
    assert!(matches!(build_error_polynomial(&big, &ring), Err(Error::ResourceLimit(_))));
}

#[test]
fn singleton_space_has_zero_error() {
    let p = build_error_polynomial(&ImageSpace::ucpf(4, 0).unwrap(), &klnn_distribution(4, 2).unwrap()).unwrap();
    assert!(p.terms().is_empty());
    let r = evaluate_bounds(&p, &sample(), 3.0);
    assert_eq!((r.lower, r.upper_raw, r.upper), (0.0, 0.0, 0.0));
}

#[test]
fn unit_fidelities_saturate_upper_bound() {
    let p = build_error_polynomial(&ImageSpace::ucpf(5, 2).unwrap(), &klnn_distribution(5, 2).unwrap()).unwrap();
    let r = evaluate_bounds(&p, &UniqueFidelitySet2::ones(), 2.5);
    assert_eq!(r.upper_raw, 9.0);
    assert_eq!(r.upper, 1.0);
    assert_eq!(p.evaluate(&UniqueFidelitySet2::ones(), 7.0), p.total_multiplicity() as f64);
}

#[test]
fn polynomial_text_round_trip() {
    let p = build_error_polynomial(&ImageSpace::bcpf(5, [1, 3]).unwrap(), &klnn_distribution(5, 4).unwrap()).unwrap();
    let text = p.to_text();
    assert!(text.starts_with("# space_size 15\n"));
    let back = ErrorPolynomial::from_text(&text).unwrap();
    assert_eq!(back, p);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let mut sorted = lines.clone();
    sorted.sort_by_key(|l| l.split_whitespace().take(4).map(|x| x.parse::<u32>().unwrap()).collect::<Vec<_>>());
    assert_eq!(lines, sorted);
    assert!(ErrorPolynomial::from_text("1 0 0 0 4\n").is_err());
    assert!(ErrorPolynomial::from_text("# space_size 2\n1 0 0 4\n").is_err());
    assert!(ErrorPolynomial::from_text("# space_size 2\n1 0 0 0 9\n").is_err());
    assert!(ErrorPolynomial::from_text("# space_size 2\n0 0 0 0 1\n").is_err());
}

#[test]
fn klnn_cpf_matches_polynomial_symbolically() {
    for m in 2..=10 {
        for k in 1..m {
            if !is_valid_k(m, k) {
                assert!(klnn_cpf_total(m, k, 1.0, &sample()).is_err());
                continue;
            }
            let near = (k * m) as u128;
            let far = (m * (m - 1)) as u128 - near;
            let mut expect = map(&[([2 * k as u32 - 2, 1, 0, 0], near)]);
            if far > 0 {
                expect.insert([2 * k as u32, 0, 0, 0], far);
            }
            let p = klnn_cpf_polynomial(m, k).unwrap();
            assert_eq!(poly_map(&p), expect, "m={m} k={k}");
            let (a, b) = (evaluate_bounds(&p, &sample(), 1.7), klnn_cpf_bound(m, k, 1.7, &sample()).unwrap());
            assert_relative_eq!(a.upper_raw, b.upper_raw, max_relative = 1e-12);
            assert_relative_eq!(a.lower, b.lower, max_relative = 1e-12);
            assert_relative_eq!(a.m_bar, b.m_bar, max_relative = 1e-15);
        }
    }
}

#[test]
fn klnn_cpf_m4_k2_coefficients() {
    let p = klnn_cpf_polynomial(4, 2).unwrap();
    assert_eq!(poly_map(&p), map(&[([2, 1, 0, 0], 8), ([4, 0, 0, 0], 4)]));
}

#[test]
fn klnn_cpf_reduces_to_disjoint_and_all_pairs() {
    let f = sample();
    for m in (2..=10).step_by(2) {
        for copies in [0.3, 1.0, 4.0] {
            let (a, b) = (klnn_cpf_bound(m, 1, copies, &f).unwrap(), cpf_disjoint_bound(m, copies, &f).unwrap());
            assert_relative_eq!(a.upper_raw, b.upper_raw, max_relative = 1e-12);
            assert_relative_eq!(a.lower, b.lower, max_relative = 1e-12);
        }
    }
    for m in 2..=10 {
        for copies in [0.3, 1.0, 4.0] {
            let (a, b) = (klnn_cpf_bound(m, m - 1, copies, &f).unwrap(), cpf_kmax_bound(m, copies, &f).unwrap());
            assert_relative_eq!(a.upper_raw, b.upper_raw, max_relative = 1e-12);
            assert_relative_eq!(a.lower, b.lower, max_relative = 1e-12);
            assert_relative_eq!(a.m_bar, b.m_bar, max_relative = 1e-15);
        }
    }
    assert!(cpf_disjoint_bound(5, 1.0, &f).is_err());
}

#[test]
fn counting_exponent_examples() {
    for m in 2..=9 {
        assert_eq!(counting_exponents(m, 1, 1, 2).unwrap(), [2 * (m as u32 - 2), 1, 0, 0]);
        for u in 0..=m {
            assert_eq!(counting_exponents(m, u, u, 0).unwrap(), [0; 4]);
        }
    }
    assert_eq!(counting_exponents(5, 1, 3, 2).unwrap(), [4, 0, 1, 2]);
    assert_eq!(counting_exponents(5, 3, 1, 2).unwrap(), [4, 0, 1, 2]);
}

#[test]
fn counting_exponents_reject_unattainable_distances() {
    assert!(matches!(counting_exponents(4, 1, 2, 2), Err(Error::InvalidArgument(_))));
    assert!(counting_exponents(4, 1, 3, 0).is_err());
    assert!(counting_exponents(4, 2, 2, 6).is_err());
    assert!(counting_exponents(4, 1, 5, 4).is_err());
}

#[test]
fn counting_exponents_match_pair_counts() {
    for m in 1..=7 {
        let all = ImageSpace::uniform_all(m).unwrap().enumerate().unwrap();
        for a in &all {
            for b in &all {
                let d = hamming_distance(a, b).unwrap();
                let e = counting_exponents(m, target_count(a), target_count(b), d).unwrap();
                assert_eq!(e, brute_exponents(a, b), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn counting_exponent_recursions() {
    for m in 1..=12 {
        for (u, v, d) in valid_triples(m) {
            if v > 6 {
                continue;
            }
            let d_min = v - u;
            let e = counting_exponents(m, u, v, d).unwrap().map(i64::from);
            let (mi, ui, vi, di) = (m as i64, u as i64, v as i64, d as i64);
            if d == d_min {
                assert_eq!(e, [(mi - vi) * (vi - ui), 0, (vi - ui - 1) * (vi - ui) / 2, ui * (vi - ui)]);
                continue;
            }
            let p = counting_exponents(m, u, v, d - 2).unwrap().map(i64::from);
            assert_eq!(e[0] - p[0], 2 * mi - (ui + vi) - 2 * (di - 1), "f01 m={m} u={u} v={v} d={d}");
            assert_eq!(e[1] - p[1], di - 1);
            assert_eq!(e[2] - p[2], di - 2);
            assert_eq!(e[3] - p[3], (ui + vi) - 2 * (di - 1));
            if u == v {
                assert_eq!(e[0] - p[0], 2 * (mi - ui - (di - 1)));
                assert_eq!(e[3] - p[3], 2 * (ui - (di - 1)));
            }
        }
    }
}

#[test]
fn equal_target_exponents_have_closed_solutions() {
    for m in 1..=12u32 {
        for (u, v, d) in valid_triples(m as usize) {
            if u != v {
                continue;
            }
            let (u, d) = (u as u32, d as u32);
            let expect = [d * (2 * (m - u) - d) / 2, d * d / 4, d * (d.max(2) - 2) / 4, d * (2 * u - d) / 2];
            assert_eq!(counting_exponents(m as usize, u as usize, v, d as usize).unwrap(), expect);
        }
    }
}

#[test]
fn printed_exponents_agree_only_in_degenerate_cases() {
    for m in 1..=9 {
        let bad = exponent_mismatches(m, printed_counting_exponents);
        for (u, v, d) in valid_triples(m) {
            let agrees = u == v || (d == v - u && v - u == 1);
            let listed = bad.iter().any(|x| (x.u, x.v, x.d) == (u, v, d));
            assert_eq!(listed, !agrees, "m={m} u={u} v={v} d={d}");
        }
    }
}

#[test]
fn correction_form_disagrees_whenever_targets_differ() {
    for m in 1..=9 {
        let bad = exponent_mismatches(m, correction_form_exponents);
        let expect: Vec<_> = valid_triples(m).into_iter().filter(|&(u, v, _)| u < v).collect();
        let got: Vec<_> = bad.iter().map(|x| (x.u, x.v, x.d)).collect();
        assert_eq!(got, expect, "m={m}");
        for x in &bad {
            let delta = (x.v - x.u) as f64;
            assert_eq!(x.other[3] - x.counted[3] as f64, -delta * delta);
        }
    }
}

#[test]
fn valid_triple_counts() {
    assert_eq!(valid_triples(3).len(), 13);
    assert_eq!(valid_triples(4).len(), 22);
}

#[test]
fn unique_fidelity_examples() {
    let f = sample();
    assert_eq!(unique_fidelity_kmax(6, 2, 2, 0, &f, 3.0).unwrap(), 1.0);
    for m in 2..=8 {
        let q = f.f01.powi(2 * (m as i32 - 2)) * f.f11;
        assert_relative_eq!(unique_fidelity_kmax(m, 1, 1, 2, &f, 1.5).unwrap(), q.powf(1.5), max_relative = 1e-13);
    }
}

#[test]
fn ucpf_total_error_identities() {
    let f = sample();
    for m in 2..=10 {
        let q = f.f01.powi(2 * (m as i32 - 2)) * f.f11;
        for copies in [0.5, 1.0, 3.0] {
            let want = (m * (m - 1)) as f64 * q.powf(copies);
            assert_relative_eq!(ucpf_total_error(m, 1, copies, &f).unwrap(), want, max_relative = 1e-12);
        }
        assert_eq!(ucpf_total_error(m, 0, 1.0, &f).unwrap(), 0.0);
        assert_eq!(ucpf_total_error(m, m, 1.0, &f).unwrap(), 0.0);
    }
    assert!(ucpf_total_error(3, 4, 1.0, &f).is_err());
}

#[test]
fn ucpf_total_error_matches_pair_sum() {
    let f = sample();
    for m in 1..=8 {
        for u in 0..=m {
            let all = ImageSpace::ucpf(m, u).unwrap().enumerate().unwrap();
            let mut direct = 0.0;
            for a in &all {
                for b in &all {
                    let d = hamming_distance(a, b).unwrap();
                    if d > 0 {
                        direct += unique_fidelity_kmax(m, u, u, d, &f, 1.3).unwrap();
                    }
                }
            }
            let closed = ucpf_total_error(m, u, 1.3, &f).unwrap();
            assert!((closed - direct).abs() <= 1e-12 * direct.max(1e-300), "m={m} u={u}: {closed} vs {direct}");
        }
    }
}

#[test]
fn bcpf_matches_engine() {
    let f = sample();
    for m in 2..=6 {
        let s = klnn_distribution(m, m - 1).unwrap();
        let sets: Vec<Vec<usize>> =
            vec![vec![1], vec![0, 1], vec![1, 2], vec![0, m], (0..=m).collect(), vec![1, m - 1]];
        for set in sets {
            let engine = evaluate_bounds(
                &build_error_polynomial(&ImageSpace::bcpf(m, set.iter().copied()).unwrap(), &s).unwrap(),
                &f,
                0.8,
            );
            let closed = bcpf_bounds(m, &set, 0.8, &f).unwrap();
            assert_relative_eq!(closed.upper_raw, engine.upper_raw, max_relative = 1e-12);
            assert_relative_eq!(closed.lower, engine.lower, max_relative = 1e-12);
            assert_relative_eq!(closed.m_bar, engine.m_bar, max_relative = 1e-15);
        }
    }
}

#[test]
fn bcpf_special_cases() {
    let f = sample();
    for m in 3..=8 {
        let one = bcpf_bounds(m, &[1], 2.0, &f).unwrap();
        let cpf = cpf_kmax_bound(m, 2.0, &f).unwrap();
        assert_relative_eq!(one.upper_raw, cpf.upper_raw, max_relative = 1e-12);
        assert_relative_eq!(one.lower, cpf.lower, max_relative = 1e-12);
        let all: Vec<usize> = (0..=m).collect();
        let full = bcpf_bounds(m, &all, 2.0, &UniqueFidelitySet2::ones()).unwrap();
        let size = 2f64.powi(m as i32);
        assert_relative_eq!(full.upper_raw, size - 1.0, max_relative = 1e-12);
    }
    assert!(bcpf_bounds(4, &[], 1.0, &f).is_err());
    assert!(bcpf_bounds(4, &[5], 1.0, &f).is_err());
    assert!(ucpf_cross_error(4, 2, 2, 1.0, &f).is_err());
}

#[test]
fn classical_cpf_examples() {
    for m in 2..=9 {
        assert_eq!(classical_cpf_lower(m, 3.0, 1.0), (m - 1) as f64 / (2 * m) as f64);
    }
    let v = classical_cpf_lower(2, 1.0, (-1f64).exp());
    assert_relative_eq!(v, 0.25 * (-4f64).exp(), max_relative = 1e-14);
    assert!((v - 0.004579).abs() < 1e-6);
    assert!(classical_cpf_lower(5, 2.0, 0.9) < classical_cpf_lower(5, 1.0, 0.9));
}

#[test]
fn hamming_counts_match_enumeration() {
    for m in 1..=8 {
        let mut spaces = vec![ImageSpace::uniform_all(m).unwrap(), ImageSpace::bcpf(m, [0, m / 2, m]).unwrap()];
        spaces.extend((0..=m).map(|u| ImageSpace::ucpf(m, u).unwrap()));
        for space in spaces {
            let explicit = ImageSpace::explicit(space.enumerate().unwrap()).unwrap();
            let a = hamming_pair_counts(&space).unwrap();
            let b = hamming_pair_counts(&explicit).unwrap();
            assert_eq!(a, b, "{space:?}");
        }
    }
}

#[test]
fn classical_lower_reduces_to_cpf_formula() {
    for m in 2..=20 {
        for m_bar in [0.5, 2.0, 11.0] {
            let general = classical_lower(&ImageSpace::ucpf(m, 1).unwrap(), m_bar, 0.93).unwrap();
            assert_relative_eq!(general, classical_cpf_lower(m, m_bar, 0.93), max_relative = 1e-13);
        }
    }
}

#[test]
fn advantage_examples() {
    assert_eq!(advantage(0.3, 0.3).unwrap(), 0.0);
    assert_relative_eq!(advantage(1e-3, 1e-4).unwrap(), 1.0, max_relative = 1e-14);
    assert!(advantage(0.0, 0.1).is_err());
    assert!(advantage(0.1, -1.0).is_err());
}

#[test]
fn threshold_without_advantage() {
    for m in [3, 10, 64] {
        let f = 0.8;
        let r = copies_threshold(m, f, &fids(f, f, f, f));
        assert!(matches!(r, Err(Error::NoThreshold(_))), "m={m}: {r:?}");
        assert!(matches!(copies_threshold(m, 1.0, &UniqueFidelitySet2::ones()), Err(Error::NoThreshold(_))));
    }
    assert!(copies_threshold(2, 0.5, &sample()).is_err());
}

fn kmax_delta(m: usize, m_bar: f64, f_cl: f64, f: &UniqueFidelitySet2) -> f64 {
    let q = cpf_kmax_bound(m, m_bar / (m - 1) as f64, f).unwrap();
    (classical_cpf_lower(m, m_bar, f_cl) / q.upper_raw).log10()
}

#[test]
fn threshold_is_where_advantage_starts() {
    // F01 close to one and F11 small: the all-pairs protocol wins at large M̄.
    let f = fids(0.999, 0.2, 0.9, 0.99);
    for m in [3, 8, 64] {
        let f_cl = 0.999;
        let t = copies_threshold(m, f_cl, &f).unwrap();
        assert!(t.is_finite() && t > 0.0);
        assert!(kmax_delta(m, 1.01 * t, f_cl, &f) >= 0.0);
        assert!(kmax_delta(m, 0.99 * t, f_cl, &f) < 0.0);
        assert!(kmax_delta(m, t, f_cl, &f).abs() < 1e-9);
    }
}

#[test]
fn uniform_bound_examples() {
    // At unit fidelities the bracket is 4, so D = 4^{m/2} - 1 = 2^m - 1.
    let ones = fixed_uniform_bound(6, 2.0, &UniqueFidelitySet2::ones()).unwrap();
    assert_eq!(ones.d_printed, 63.0);
    let f = sample();
    let r = fixed_uniform_bound(2, 1.0, &f).unwrap();
    assert_relative_eq!(r.d_printed, f.f01 + f.f12 + (f.f11 + f.f02) / 2.0, max_relative = 1e-14);
    let s = ProbeDomainDistribution::parse(2, "1,2").unwrap();
    let poly = build_error_polynomial(&ImageSpace::uniform_all(2).unwrap(), &s).unwrap();
    let engine_d = poly.evaluate(&f, 1.0);
    assert_relative_eq!(engine_d, 4.0 * r.d_printed, max_relative = 1e-14);
    assert_relative_eq!(r.d_engine, engine_d, max_relative = 1e-14);
    assert!(fixed_uniform_bound(3, 1.0, &f).is_err());
}

#[test]
fn uniform_engine_matches_polynomial() {
    let f = sample();
    for m in [2, 4, 6, 8] {
        let pairs: Vec<String> = (0..m / 2).map(|j| format!("{},{}", 2 * j + 1, 2 * j + 2)).collect();
        let s = ProbeDomainDistribution::parse(m, &pairs.join(";")).unwrap();
        let poly = build_error_polynomial(&ImageSpace::uniform_all(m).unwrap(), &s).unwrap();
        let r = fixed_uniform_bound(m, 1.4, &f).unwrap();
        let e = evaluate_bounds(&poly, &f, 1.4);
        assert_relative_eq!(r.engine.upper_raw, e.upper_raw, max_relative = 1e-12);
        assert_relative_eq!(r.engine.lower, e.lower, max_relative = 1e-12);
        assert_relative_eq!(r.d_engine, 2f64.powi(m as i32) * r.d_printed, max_relative = 1e-12);
        assert_relative_eq!(r.printed.upper_raw, r.d_engine / 4f64.powi(m as i32), max_relative = 1e-12);
    }
}

#[test]
fn fractional_copies_and_unit_fidelities() {
    let mono = FidelityMonomial::new([3, 0, 2, 0]);
    let f = fids(0.5, 0.7, 1.0, 0.9);
    assert_relative_eq!(mono.evaluate(&f, 0.25), 0.5f64.powf(0.75), max_relative = 1e-14);
    assert_eq!(FidelityMonomial::new([0, 0, 5, 0]).evaluate(&f, 0.3), 1.0);
    assert_eq!(mono.evaluate(&f, 0.0), 1.0);
}

fn arb_fids() -> impl Strategy<Value = UniqueFidelitySet2> {
    [0.05..0.999f64, 0.05..0.999f64, 0.05..0.999f64, 0.05..0.999f64].prop_map(|[a, b, c, d]| fids(a, b, c, d))
}

fn arb_space_and_s() -> impl Strategy<Value = (ImageSpace, ProbeDomainDistribution)> {
    (2usize..=6)
        .prop_flat_map(|m| {
            let ks: Vec<usize> = (1..m).filter(|&k| is_valid_k(m, k)).collect();
            (Just(m), prop::sample::select(ks), prop::collection::btree_set(0..=m, 1..=3))
        })
        .prop_map(|(m, k, set)| (ImageSpace::bcpf(m, set).unwrap(), klnn_distribution(m, k).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_never_exceeds_upper((space, s) in arb_space_and_s(), f in arb_fids(), copies in 0.01..20.0f64) {
        let p = build_error_polynomial(&space, &s).unwrap();
        let r = evaluate_bounds(&p, &f, copies);
        prop_assert!(r.lower <= r.upper_raw + 1e-12);
        prop_assert!(r.upper <= 1.0 && r.upper <= r.upper_raw);
        prop_assert!(r.lower >= 0.0);
        prop_assert!(p.total_multiplicity() <= p.space_size() * (p.space_size() - 1));
    }

    #[test]
    fn totals_decrease_with_copies((space, s) in arb_space_and_s(), f in arb_fids(), a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let p = build_error_polynomial(&space, &s).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.evaluate(&f, hi) <= p.evaluate(&f, lo) * (1.0 + 1e-12));
    }

    #[test]
    fn doubling_copies_squares_terms((space, s) in arb_space_and_s(), f in arb_fids(), copies in 0.0..5.0f64) {
        let p = build_error_polynomial(&space, &s).unwrap();
        let squared = UniqueFidelitySet2::new(f.f01 * f.f01, f.f11 * f.f11, f.f02 * f.f02, f.f12 * f.f12).unwrap();
        let (a, b) = (p.evaluate(&f, 2.0 * copies), p.evaluate(&squared, copies));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn exponent_swap_symmetry(m in 1usize..=12, pick in 0usize..1000) {
        let triples = valid_triples(m);
        let (u, v, d) = triples[pick % triples.len()];
        prop_assert_eq!(counting_exponents(m, u, v, d).unwrap(), counting_exponents(m, v, u, d).unwrap());
    }

    #[test]
    fn klnn_cpf_bounds_ordered(m in 2usize..=64, pick in 0usize..64, f in arb_fids(), copies in 0.01..50.0f64) {
        let ks: Vec<usize> = (1..m).filter(|&k| is_valid_k(m, k)).collect();
        let k = ks[pick % ks.len()];
        let r = klnn_cpf_bound(m, k, copies, &f).unwrap();
        prop_assert!(r.lower <= r.upper_raw + 1e-12);
        prop_assert!(r.lower >= 0.0);
    }
}
