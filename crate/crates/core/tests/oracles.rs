use std::collections::BTreeSet;

use failsafe_core::consistent_spt::verify_consistency;
use failsafe_core::{
    Distance, Failure, FullDso, FullDsoConfig, Permutation, ShortestPathForests, SptConfig,
    TruncatedDso, WeightedDigraph, INF,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn queries(g: &WeightedDigraph) -> Vec<(usize, usize, Failure)> {
    let mut out = Vec::new();
    for f in g.failures() {
        for u in 0..g.n() {
            for v in 0..g.n() {
                if g.check_query(u, v, f).is_ok() {
                    out.push((u, v, f));
                }
            }
        }
    }
    out
}

#[test]
fn truncated_oracle_matches_dijkstra_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for seed in 0..8 {
        let n = rng.gen_range(4..=14);
        let m = rng.gen_range(1..=4);
        let g = WeightedDigraph::random(n, m, 0.25, &mut rng);
        for r in [1, 3, n * m as usize] {
            let dso = TruncatedDso::preprocess(&g, r, seed).unwrap();
            for (u, v, f) in queries(&g) {
                let exact = g.replacement_distance(u, v, f).unwrap();
                assert_eq!(
                    dso.query(u, v, f).unwrap() as Distance,
                    exact.min(r as Distance),
                    "{u} {v} {f} r={r}"
                );
            }
        }
    }
}

#[test]
fn full_oracle_verified_answers_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for seed in 0..4 {
        let g = WeightedDigraph::random(16, 3, 0.18, &mut rng);
        let dso = FullDso::build(
            &g,
            &FullDsoConfig {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        for (u, v, f) in queries(&g) {
            let ans = dso.query_verified(u, v, f).unwrap();
            assert!(ans.agrees(), "{u} {v} {f}: {ans:?}");
            if ans.from_core {
                assert!(ans.answer < dso.radius() as Distance || ans.answer == INF);
            }
        }
    }
}

#[test]
fn subpath_consistency_across_seeds() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let config = SptConfig::default();
    for seed in 0..20 {
        let g = WeightedDigraph::random(25, 3, 0.1, &mut rng);
        let f = ShortestPathForests::compute(&g, &Permutation::random(25, seed), &config);
        let report = verify_consistency(&g, &f, &config, 3, seed);
        assert_eq!(report.subpath_violations, 0);
        assert!(report.is_consistent(), "{report:?}");
    }
}

/// All internal vertices of all shortest paths, by depth-first enumeration.
fn on_some_shortest_path(g: &WeightedDigraph, u: usize, v: usize) -> BTreeSet<usize> {
    let dist = g.apsp();
    let target = dist.get(u, v);
    let mut found = BTreeSet::new();
    let mut stack = vec![(vec![u], 0u64)];
    while let Some((path, spent)) = stack.pop() {
        let x = *path.last().unwrap();
        if x == v {
            found.extend(path[1..path.len() - 1].iter().copied());
            continue;
        }
        for &(y, w) in g.out_edges(x) {
            let s = spent + w as u64;
            if dist.get(y, v) != INF && s + dist.get(y, v) == target {
                let mut next = path.clone();
                next.push(y);
                stack.push((next, s));
            }
        }
    }
    found
}

#[test]
fn witnesses_are_minimum_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for seed in 0..10 {
        let n = rng.gen_range(5..=15);
        // weight 1 only, to get plenty of ties
        let g = WeightedDigraph::random(n, 1, 0.3, &mut rng);
        let pi = Permutation::random(n, seed);
        let f = ShortestPathForests::compute(&g, &pi, &SptConfig::default());
        let dist = g.apsp();
        for u in 0..n {
            for v in 0..n {
                if u == v || dist.get(u, v) == INF {
                    continue;
                }
                let best = on_some_shortest_path(&g, u, v)
                    .into_iter()
                    .min_by_key(|&z| pi.label(z));
                assert_eq!(f.witnesses().get(u, v), best, "pair {u} {v}");
            }
        }
    }
}

#[test]
fn text_round_trip_preserves_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let g = WeightedDigraph::random(10, 4, 0.3, &mut rng);
    let h = WeightedDigraph::parse(&g.to_text()).unwrap();
    assert_eq!(g, h);
    let a = TruncatedDso::preprocess(&g, 12, 9).unwrap();
    let b = TruncatedDso::preprocess(&h, 12, 9).unwrap();
    for (u, v, f) in queries(&g) {
        assert_eq!(a.query(u, v, f).unwrap(), b.query(u, v, f).unwrap());
    }
}
