//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero
//! exit if any hard criterion fails.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use failsafe_core::consistent_spt::verify_consistency;
use failsafe_core::full_dso::DEFAULT_ALPHA;
use failsafe_core::{
    Distance, DistanceMatrix, Failure, Field, FullDso, FullDsoConfig, Permutation, PolyMatrix,
    ShiftVector, ShortestPathForests, SptConfig, TruncatedDso, TruncatedPoly, WeightedDigraph, INF,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    /// Reported but never fails the run.
    advisory: bool,
    detail: String,
}

impl Outcome {
    fn hard(pass: bool, detail: String) -> Self {
        Self {
            pass,
            advisory: false,
            detail,
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, max_weight: u32) -> WeightedDigraph {
    let density = (2.5 / n as f64).min(1.0);
    WeightedDigraph::random(n, max_weight, density, rng)
}

fn all_queries(g: &WeightedDigraph) -> Vec<(usize, usize, Failure)> {
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

/// Exact replacement distances, one Dijkstra per (source, failure).
struct Replacement<'a> {
    g: &'a WeightedDigraph,
    rows: HashMap<(usize, Failure), Vec<Distance>>,
}

impl<'a> Replacement<'a> {
    fn new(g: &'a WeightedDigraph) -> Self {
        Self {
            g,
            rows: HashMap::new(),
        }
    }

    fn get(&mut self, u: usize, v: usize, f: Failure) -> Distance {
        let g = self.g;
        self.rows
            .entry((u, f))
            .or_insert_with(|| g.dijkstra_avoiding(u, Some(f)))[v]
    }
}

fn truncated_corpus() -> Vec<(WeightedDigraph, TruncatedDso)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc1);
    (0..50u64)
        .map(|k| {
            let n = rng.gen_range(10..=40);
            let m = rng.gen_range(1..=4);
            let g = random_graph(&mut rng, n, m);
            let dso = TruncatedDso::preprocess(&g, n * m as usize, k).expect("preprocess");
            (g, dso)
        })
        .collect()
}

fn criterion_1(corpus: &[(WeightedDigraph, TruncatedDso)]) -> Outcome {
    let mut queries = 0usize;
    let mut mismatches = 0usize;
    for (g, dso) in corpus {
        let r = dso.radius() as Distance;
        let mut exact = Replacement::new(g);
        for (u, v, f) in all_queries(g) {
            queries += 1;
            let got = dso.query(u, v, f).expect("valid query") as Distance;
            if got != exact.get(u, v, f).min(r) {
                mismatches += 1;
            }
        }
    }
    Outcome::hard(
        mismatches == 0,
        format!(
            "{} graphs, {queries} queries, {mismatches} mismatches",
            corpus.len()
        ),
    )
}

fn criterion_2(corpus: &[(WeightedDigraph, TruncatedDso)]) -> Outcome {
    let mut pairs = 0usize;
    let mut mismatches = 0usize;
    for (g, dso) in corpus {
        let dist = g.apsp();
        let r = dso.radius() as Distance;
        for u in 0..g.n() {
            for v in 0..g.n() {
                pairs += 1;
                let got = dso.truncated_distance(u, v).expect("valid pair") as Distance;
                if got != dist.get(u, v).min(r) {
                    mismatches += 1;
                }
            }
        }
    }
    Outcome::hard(
        mismatches == 0,
        format!("{pairs} pairs, {mismatches} mismatches"),
    )
}

fn random_poly(rng: &mut ChaCha8Rng, f: Field, order: usize, len: usize) -> TruncatedPoly {
    let coeffs: Vec<u64> = (0..len).map(|_| rng.gen_range(0..f.modulus())).collect();
    TruncatedPoly::new(f, order, &coeffs).expect("valid coefficients")
}

fn criterion_3() -> Outcome {
    let f = Field::goldilocks();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc3);
    let mut failures = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=16);
        let r = rng.gen_range(1..=64);
        let fill = rng.gen_range(0.1..1.0);
        let m = PolyMatrix::from_fn(f, r, n, n, |i, j| {
            let len = if rng.gen_bool(fill) {
                rng.gen_range(0..r)
            } else {
                0
            };
            let x = random_poly(&mut rng, f, r, len).shift(1);
            if i == j {
                x.add(&TruncatedPoly::one(f, r)).expect("same ring")
            } else {
                x
            }
        })
        .expect("matrix");
        let inv = m.invert_mod_xr().expect("I + xM is invertible");
        let identity = PolyMatrix::identity(f, r, n).expect("identity");
        if m.matmul_naive(&inv).expect("product") != identity
            || inv != m.invert_gauss().expect("gauss")
        {
            failures += 1;
        }
    }
    Outcome::hard(failures == 0, format!("200 matrices, {failures} failures"))
}

/// Column degrees drawn log-uniformly over `[0, r - 1]`, some columns zero.
fn skewed_degrees(rng: &mut ChaCha8Rng, count: usize, r: usize) -> Vec<Option<usize>> {
    (0..count)
        .map(|_| {
            if rng.gen_bool(0.1) {
                None
            } else {
                let e = rng.gen_range(0.0..=(r as f64).log2());
                Some(((2f64.powf(e)) as usize - 1).min(r - 1))
            }
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let f = Field::goldilocks();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc4);
    let mut failures = 0;
    let mut max_deg = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=32);
        let k = rng.gen_range(1..=32);
        let m = rng.gen_range(1..=32);
        let r = rng.gen_range(1..=128);
        let a_deg = skewed_degrees(&mut rng, k, r);
        let b_deg = skewed_degrees(&mut rng, m, r);
        let a = PolyMatrix::from_fn(f, r, n, k, |_, j| match a_deg[j] {
            Some(d) => random_poly(&mut rng, f, r, d + 1),
            None => TruncatedPoly::zero(f, r),
        })
        .expect("matrix");
        let b = PolyMatrix::from_fn(f, r, k, m, |_, j| match b_deg[j] {
            Some(d) if rng.gen_bool(0.7) => {
                let len = rng.gen_range(0..=d) + 1;
                random_poly(&mut rng, f, r, len)
            }
            _ => TruncatedPoly::zero(f, r),
        })
        .expect("matrix");
        let shift = ShiftVector(
            a_deg
                .iter()
                .map(|d| d.map_or(0, |d| d as i64 + rng.gen_range(0..3)))
                .collect(),
        );
        max_deg = max_deg.max(a_deg.iter().flatten().copied().max().unwrap_or(0));
        let fast = a
            .matmul_degree_aware(&b, &shift)
            .expect("degree-aware product");
        if fast != a.matmul_naive(&b).expect("naive product") {
            failures += 1;
        }
    }
    Outcome::hard(
        failures == 0,
        format!("100 products, largest column degree {max_deg}, {failures} failures"),
    )
}

/// Internal vertices of every shortest `u -> v` path, by explicit path
/// enumeration.
fn internal_vertices(
    g: &WeightedDigraph,
    dist: &DistanceMatrix,
    u: usize,
    v: usize,
) -> BTreeSet<usize> {
    fn walk(
        g: &WeightedDigraph,
        dist: &DistanceMatrix,
        v: usize,
        path: &mut Vec<usize>,
        spent: Distance,
        target: Distance,
        seen: &mut BTreeSet<usize>,
    ) {
        let x = *path.last().expect("nonempty");
        if x == v {
            seen.extend(path[1..path.len() - 1].iter().copied());
            return;
        }
        for &(y, w) in g.out_edges(x) {
            let s = spent + w as Distance;
            let rest = dist.get(y, v);
            if rest != INF && s + rest == target {
                path.push(y);
                walk(g, dist, v, path, s, target, seen);
                path.pop();
            }
        }
    }
    let mut seen = BTreeSet::new();
    walk(g, dist, v, &mut vec![u], 0, dist.get(u, v), &mut seen);
    seen
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc5);
    let config = SptConfig::default();
    let mut bad = 0usize;
    let mut witness_checks = 0usize;
    let mut witness_errors = 0usize;
    let mut subgraphs = 0usize;
    for t in 0..30u64 {
        let n = if t % 2 == 0 {
            rng.gen_range(6..=15)
        } else {
            rng.gen_range(16..=25)
        };
        let m = rng.gen_range(1..=3);
        let g = random_graph(&mut rng, n, m);
        let pi = Permutation::random(n, t);
        let forests = ShortestPathForests::compute(&g, &pi, &config);
        let report = verify_consistency(&g, &forests, &config, 50, t);
        subgraphs += report.subgraphs_checked;
        if !report.is_consistent() {
            bad += 1;
        }
        if n <= 15 {
            let dist = g.apsp();
            for u in 0..n {
                for v in 0..n {
                    if u == v || dist.get(u, v) == INF {
                        continue;
                    }
                    witness_checks += 1;
                    let expected = internal_vertices(&g, &dist, u, v)
                        .into_iter()
                        .min_by_key(|&z| pi.label(z));
                    if forests.witnesses().get(u, v) != expected {
                        witness_errors += 1;
                    }
                }
            }
        }
    }
    Outcome::hard(
        bad == 0 && witness_errors == 0,
        format!(
            "30 graphs with violations: {bad}; {subgraphs} subgraphs; {witness_checks} witnesses enumerated, {witness_errors} wrong"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc6);
    let config = SptConfig::default();
    let mut pairs = 0usize;
    let mut violations = 0usize;
    let mut escalations = 0usize;
    for t in 0..100u64 {
        let g = random_graph(&mut rng, 50, 2);
        let forests = ShortestPathForests::compute(&g, &Permutation::random(50, t), &config);
        let report = verify_consistency(&g, &forests, &config, 0, t);
        pairs += report.pairs_checked;
        violations += report.hitting_bound_violations;
        escalations += report.escalations;
    }
    Outcome {
        pass: violations == 0,
        advisory: true,
        detail: format!(
            "violation rate {violations}/{pairs} = {:.2e}, hitting-set enlargements {escalations}",
            violations as f64 / pairs.max(1) as f64
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc7);
    let alphas = [0.0, DEFAULT_ALPHA, 1.0];
    let mut mismatches = 0usize;
    let mut queries = 0usize;
    let mut non_monotone = 0usize;
    let mut totals = [0u64; 3];
    for t in 0..20u64 {
        let n = rng.gen_range(10..=40);
        let m = rng.gen_range(1..=4);
        let g = random_graph(&mut rng, n, m);
        let qs = all_queries(&g);
        let mut exact = Replacement::new(&g);
        let mut counts = [0u64; 3];
        for (i, &alpha) in alphas.iter().enumerate() {
            let config = FullDsoConfig {
                alpha,
                seed: t,
                ..Default::default()
            };
            let dso = FullDso::build(&g, &config).expect("build");
            for &(u, v, f) in &qs {
                queries += 1;
                if dso.query_full(u, v, f).expect("valid query") != exact.get(u, v, f) {
                    mismatches += 1;
                }
            }
            counts[i] = dso.fallback_count();
            totals[i] += counts[i];
        }
        if counts.windows(2).any(|w| w[0] < w[1]) {
            non_monotone += 1;
        }
    }
    Outcome::hard(
        mismatches == 0 && non_monotone == 0,
        format!(
            "{queries} queries, {mismatches} mismatches; fallbacks per alpha {totals:?}, {non_monotone} graphs non-monotone"
        ),
    )
}

fn run_cli(args: &[&str], dir: &Path) -> (i32, Vec<u8>) {
    let output = Command::new(env!("CARGO_BIN_EXE_failsafe"))
        .args(args)
        .current_dir(dir)
        .env_remove("FAILSAFE_SEED")
        .output()
        .expect("run cli");
    (output.status.code().unwrap_or(-1), output.stdout)
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc8);
    let g = random_graph(&mut rng, 18, 3);
    std::fs::write(dir.path().join("g.txt"), g.to_text()).expect("write graph");
    let mut queries = String::from("# sampled queries\n");
    for (u, v, f) in all_queries(&g).into_iter().step_by(7) {
        let tail = match f {
            Failure::Edge(a, b) => format!("E {} {}", a + 1, b + 1),
            Failure::Vertex(x) => format!("V {}", x + 1),
        };
        queries.push_str(&format!("{} {} {tail}\n", u + 1, v + 1));
    }
    std::fs::write(dir.path().join("q.txt"), queries).expect("write queries");

    let runs: Vec<Vec<&str>> = vec![
        vec![
            "--mode",
            "truncated",
            "--radius",
            "6",
            "--seed",
            "3",
            "g.txt",
            "q.txt",
        ],
        vec![
            "--mode",
            "truncated",
            "--format",
            "json",
            "--seed",
            "3",
            "g.txt",
            "q.txt",
        ],
        vec![
            "--mode",
            "truncated",
            "--prime",
            "1000000007",
            "--radius",
            "9",
            "g.txt",
            "q.txt",
        ],
        vec!["--mode", "full", "--seed", "4", "g.txt", "q.txt"],
        vec![
            "--mode", "full", "--alpha", "0", "--format", "json", "g.txt",
        ],
        vec!["--mode", "spt", "--seed", "5", "g.txt"],
        vec![
            "--mode",
            "spt",
            "--seed",
            "5",
            "--block-size",
            "2",
            "--out",
            "forest",
            "g.txt",
        ],
        vec!["--mode", "verify", "--alpha", "0.3", "g.txt"],
        vec!["--mode", "bench", "--seed", "6", "g.txt", "q.txt"],
    ];
    let mut differing = Vec::new();
    let mut failed = Vec::new();
    for args in &runs {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let (code, mut stdout) = run_cli(args, dir.path());
            if code != 0 {
                failed.push(args.join(" "));
            }
            if let Some(i) = args.iter().position(|&a| a == "--out") {
                for file in [args[i + 1].to_string(), format!("{}.out", args[i + 1])] {
                    stdout.extend(std::fs::read(dir.path().join(&file)).unwrap_or_default());
                    let _ = std::fs::remove_file(dir.path().join(&file));
                }
            }
            outputs.push(stdout);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args.join(" "));
        }
    }
    Outcome::hard(
        differing.is_empty() && failed.is_empty(),
        format!(
            "{} invocations run twice; differing {differing:?}; nonzero exits {failed:?}",
            runs.len()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let corpus = truncated_corpus();
    let criteria: Vec<(&str, Check)> = vec![
        (
            "truncated oracle exactness",
            Box::new(|| criterion_1(&corpus)),
        ),
        ("adjoint distances", Box::new(|| criterion_2(&corpus))),
        ("series matrix inversion", Box::new(criterion_3)),
        ("degree-aware product", Box::new(criterion_4)),
        ("consistent shortest-path trees", Box::new(criterion_5)),
        ("hitting-set bound", Box::new(criterion_6)),
        ("full oracle exactness", Box::new(criterion_7)),
        ("cli determinism", Box::new(criterion_8)),
    ];
    println!(
        "corpus preprocessed in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    let mut hard_failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let status = match (outcome.pass, outcome.advisory) {
            (true, _) => "PASS",
            (false, true) => "FAIL (advisory)",
            (false, false) => {
                hard_failures += 1;
                "FAIL"
            }
        };
        println!(
            "[{status}] {}. {name}: {} ({:.1}s)",
            i + 1,
            outcome.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if hard_failures > 0 {
        println!("{hard_failures} criteria failed");
        std::process::exit(1);
    }
}
