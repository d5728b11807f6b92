use joma_hblt::{
    analytic_cooccur, analytic_cooccur_pair, approx_cooccur, empirical_cooccur, exact_cooccur, read_corpus,
    read_latents, sample, write_corpus, write_latents, HbltSpec, LatentTree,
};
use joma_num::{Exec, RngSeed};

fn tree(classes: usize, probs: Option<Vec<f64>>, rho: f64, layers: Vec<usize>, vocab: usize) -> LatentTree {
    let mut spec = HbltSpec::uniform(classes, rho, layers, 2, vocab, 10);
    if let Some(p) = probs {
        spec.class_probs = p;
    }
    LatentTree::new(&spec).unwrap()
}

#[test]
fn analytic_matches_enumeration_on_depth_three() {
    for rho in [0.3, 0.6, 0.9] {
        for (classes, probs) in [(2, None), (3, Some(vec![0.5, 0.3, 0.2])), (5, None)] {
            let t = tree(classes, probs, rho, vec![2, 4], 8);
            for h in [1, 2] {
                let (l, m) = t.pair_with_cla(h).unwrap();
                let a = analytic_cooccur_pair(&t, l, m).unwrap();
                let e = exact_cooccur(&t, l, m).unwrap();
                assert!((a - e).abs() <= 1e-12, "rho={rho} classes={classes} H={h}: {a} vs {e}");
            }
        }
    }
}

#[test]
fn analytic_matches_enumeration_deeper_and_negative() {
    for rho in [-0.4, 0.8] {
        let t = tree(3, None, rho, vec![2, 3, 6], 12);
        for h in 1..=3 {
            let (l, m) = t.pair_with_cla(h).unwrap();
            let a = analytic_cooccur_pair(&t, l, m).unwrap();
            assert!((a - exact_cooccur(&t, l, m).unwrap()).abs() <= 1e-12, "rho={rho} H={h}");
        }
    }
}

#[test]
fn enumeration_edge_cases() {
    let t = tree(2, None, 0.0, vec![2, 4], 8);
    assert!((exact_cooccur(&t, 0, 1).unwrap() - 0.5).abs() < 1e-15);
    assert!((exact_cooccur(&t, 0, 4).unwrap() - 0.5).abs() < 1e-15);
    assert!((analytic_cooccur(0.0, 3, 1, 0.3).unwrap() - 0.5).abs() < 1e-15);
    let t = tree(1, None, 1.0, vec![2, 4], 8);
    assert!((exact_cooccur(&t, 0, 4).unwrap() - 1.0).abs() < 1e-15);
    let big = tree(2, None, 0.5, vec![10, 20], 40);
    assert!(exact_cooccur(&big, 0, 1).is_err());
}

#[test]
fn shallow_cla_expansion() {
    let a = analytic_cooccur(0.99, 5, 1, 0.99).unwrap();
    assert!((a - 0.8).abs() <= 1e-2);
    assert_eq!(approx_cooccur(5, 5), 0.0);
}

#[test]
fn shallow_cla_error_is_first_order() {
    // Expanding numerator and denominator to second order gives
    // 1 − H/L + ε·H(2H − L)/(2L) + O(ε²).
    for (h, depth) in [(1, 5), (2, 5), (1, 8), (3, 4)] {
        for eps in [1e-2, 1e-3, 1e-4] {
            let a = analytic_cooccur(1.0 - eps, depth, h, 1.0 - eps).unwrap();
            let (h, l) = (h as f64, depth as f64);
            let first = eps * h * (2.0 * h - l) / (2.0 * l);
            let rest = a - approx_cooccur(h as usize, depth) - first;
            assert!(rest.abs() <= 5.0 * l * l * eps * eps, "H={h} L={l} eps={eps}: {rest}");
        }
    }
}

#[test]
fn monte_carlo_matches_formula() {
    let t = tree(4, None, 0.9, vec![2, 4, 8], 16);
    let s = sample(&t, 100_000, RngSeed(11), Exec::Parallel).unwrap();
    for h in 1..=3 {
        let (l, m) = t.pair_with_cla(h).unwrap();
        let st = empirical_cooccur(&s, l, m).unwrap();
        let a = analytic_cooccur_pair(&t, l, m).unwrap();
        assert!((st.estimate() - a).abs() <= 3.0 * st.std_err(), "H={h}: {} ± {} vs {a}", st.estimate(), st.std_err());
    }
}

#[test]
fn independence_at_zero_rho() {
    let t = tree(3, None, 0.0, vec![2, 4], 8);
    let s = sample(&t, 100_000, RngSeed(3), Exec::Parallel).unwrap();
    let n = s.len() as f64;
    let se = (0.25 / n).sqrt();
    for l in 0..8 {
        let p = s.iter().filter(|x| x.leaves()[l]).count() as f64 / n;
        assert!((p - 0.5).abs() <= 3.0 * se, "leaf {l}: {p}");
    }
    let st = empirical_cooccur(&s, 0, 5).unwrap();
    assert!((st.estimate() - 0.5).abs() <= 3.0 * st.std_err());
}

#[test]
fn deterministic_propagation_at_unit_rho() {
    let t = tree(1, None, 1.0, vec![2, 4], 8);
    let s = sample(&t, 200, RngSeed(1), Exec::Serial).unwrap();
    assert!(s.iter().all(|x| x.leaves() == s[0].leaves()));
    assert!(s.iter().all(|x| x.tokens.iter().all(|t| x.leaves()[*t])));
}

#[test]
fn same_seed_same_bytes() {
    let t = tree(3, None, 0.7, vec![3, 6], 12);
    let a = sample(&t, 3000, RngSeed(5), Exec::Serial).unwrap();
    let b = sample(&t, 3000, RngSeed(5), Exec::Parallel).unwrap();
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    write_corpus(&mut ba, &a).unwrap();
    write_corpus(&mut bb, &b).unwrap();
    assert_eq!(ba, bb);
    let back = read_corpus(&ba[..]).unwrap();
    assert_eq!(back.len(), a.len());
    assert_eq!(back[7].tokens, a[7].tokens);
    assert_eq!(back[7].class, a[7].class);
    let mut lat = Vec::new();
    write_latents(&mut lat, &a).unwrap();
    let lat = read_latents(&lat[..]).unwrap();
    assert_eq!(lat[9], a[9].latents[..2].to_vec());
}
