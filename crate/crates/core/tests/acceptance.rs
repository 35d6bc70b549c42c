//! Acceptance checks. Prints one line per criterion and exits nonzero when
//! any criterion fails. Pass criterion numbers as arguments to run a subset.
//!
//! Criterion 6 needs a real frequency-ordered embedding of at least 50k
//! words: set `ANALOGY_AUDIT_REAL_EMBEDDINGS` to its path and
//! `ANALOGY_AUDIT_REAL_FORMAT` to its format (default `word2vec-bin`).
//! Without it the criterion is reported as NOT RUN.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use analogy_audit::analogy::{solve_additive, Weights};
use analogy_audit::dataset::{parse_str, STANDARD_CATEGORIES};
use analogy_audit::eval::{accuracy, baseline_gap, evaluate, pearson, vanilla_degeneracy};
use analogy_audit::store::{load_store, LoadOptions};
use analogy_audit::synthetic::{
    consistent_offsets_spec, generate, generate_space, tight_neighborhood_spec, Offset, RelationSpec, SynthSpec,
};
use analogy_audit::{parse_dataset, reverse_set, solve, AnalogySet, Format, Method, MethodSpec, Outcome, VectorStore};
use common::{canonical_dataset, fixture_a, random_problems, random_space, Oracle, OracleOutcome};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;

enum Verdict {
    Pass(String),
    Fail(String),
    NotRun(String),
}

use Verdict::{Fail, NotRun, Pass};

fn within(limit: Duration, elapsed: Duration, detail: String) -> Verdict {
    if elapsed <= limit {
        Pass(detail)
    } else {
        Fail(format!("{detail}; over the {}s limit", limit.as_secs()))
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn dataset_fidelity() -> Verdict {
    let start = Instant::now();
    let set = parse_dataset(canonical_dataset(), true).unwrap();
    let elapsed = start.elapsed();
    if set.len() != 19_544 {
        return Fail(format!("{} problems", set.len()));
    }
    for info in &STANDARD_CATEGORIES {
        if set.count(info.key) != Some(info.count) {
            return Fail(format!("{}: {:?} != {}", info.key, set.count(info.key), info.count));
        }
    }
    if set.categories().len() != STANDARD_CATEGORIES.len() {
        return Fail(format!("{} categories", set.categories().len()));
    }
    within(
        Duration::from_secs(1),
        elapsed,
        format!(
            "19544 problems, 14/14 category counts exact, parsed in {}",
            secs(elapsed)
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let spec = SynthSpec {
        vocab_size: 10_000,
        dim: 100,
        seed: 2024,
        relations: (0..5)
            .map(|r| RelationSpec {
                name: format!("rel{r}"),
                pairs: 20,
                offset: Offset::Random { norm: 0.8 },
                offset_noise: 0.3,
                neighbor_gap: 0.5,
                satellites: 2,
            })
            .collect(),
    };
    let space = generate_space(&spec).unwrap();
    let store = space.to_store().unwrap();
    let oracle = Oracle::new(&space.words, &space.raw);
    let mut rng = StdRng::seed_from_u64(7);
    let mut problems: Vec<_> = space.set.problems().choose_multiple(&mut rng, 500).cloned().collect();
    problems.extend(random_problems(&space.words, 500, 8));

    let disagreements: Vec<String> = problems
        .par_iter()
        .flat_map_iter(|p| {
            let store = &store;
            let oracle = &oracle;
            Method::ALL.into_iter().filter_map(move |m| {
                let got = solve(store, p, &MethodSpec::new(m)).unwrap();
                let agree = match (&got, oracle.solve(p, m)) {
                    (Outcome::Predicted(g), OracleOutcome::Predicted { id, correct }) => {
                        g.predicted_id == id && g.is_correct() == correct
                    }
                    (Outcome::Skipped(r), OracleOutcome::Skip(s)) => serde_json::to_value(r).unwrap() == s,
                    _ => false,
                };
                (!agree).then(|| format!("{m} on {} {} {} {}", p.a, p.a_star, p.b, p.b_star))
            })
        })
        .collect();
    let elapsed = start.elapsed();
    let total = problems.len() * Method::ALL.len();
    if !disagreements.is_empty() {
        return Fail(format!(
            "{}/{total} disagree, first: {}",
            disagreements.len(),
            disagreements[0]
        ));
    }
    within(
        Duration::from_secs(60),
        elapsed,
        format!(
            "{total}/{total} predictions agree (1000 problems x 8 methods, 10k x 100) in {}",
            secs(elapsed)
        ),
    )
}

fn additive_equivalence() -> Verdict {
    let spec = SynthSpec {
        vocab_size: 1000,
        dim: 50,
        seed: 99,
        relations: (0..3)
            .map(|r| RelationSpec {
                name: format!("rel{r}"),
                pairs: 10,
                offset: Offset::Random { norm: 0.7 },
                offset_noise: 0.5,
                neighbor_gap: 0.3,
                satellites: 2,
            })
            .collect(),
    };
    let space = generate_space(&spec).unwrap();
    let store = space.to_store().unwrap();
    let oracle = Oracle::new(&space.words, &space.raw);
    let mut problems = space.set.problems().to_vec();
    problems.extend(random_problems(&space.words, 500, 3));

    let argmax = |s: &[f64], skip: [usize; 3]| {
        (0..s.len())
            .filter(|i| !skip.contains(i))
            .fold(None::<usize>, |best, i| match best {
                Some(b) if s[b] >= s[i] => Some(b),
                _ => Some(i),
            })
            .unwrap()
    };
    let (mut same, mut production) = (0, 0);
    for p in &problems {
        let ids = [&p.a, &p.a_star, &p.b].map(|w| oracle.index(w).unwrap());
        let [ra, rs, rb] = ids.map(|i| &oracle.rows[i]);
        let q: Vec<f64> = (0..ra.len()).map(|i| rs[i] - ra[i] + rb[i]).collect();
        let by_query = oracle.cosines(&q);
        let (ca, cs, cb) = (oracle.cosines(ra), oracle.cosines(rs), oracle.cosines(rb));
        let by_sum: Vec<f64> = (0..ca.len()).map(|i| cs[i] - ca[i] + cb[i]).collect();
        let want = argmax(&by_query, ids);
        same += usize::from(argmax(&by_sum, ids) == want);
        if let Outcome::Predicted(pred) = solve(&store, p, &MethodSpec::new(Method::Add)).unwrap() {
            production += usize::from(pred.predicted_id == want);
        }
    }
    let n = problems.len();
    let detail = format!("{same}/{n} exact argmax matches, production add {production}/{n}, 1000-word store");
    if same == n && production == n {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn baseline_invariances() -> Verdict {
    let (_, _, store) = random_space(2000, 32, 17);
    let mut rng = StdRng::seed_from_u64(18);
    let n = store.len();
    let trials = 10_000;
    let (mut only_b_bad, mut ignore_a_bad) = (0, 0);
    for _ in 0..trials {
        let [a, s, b] = [0; 3].map(|_| rng.gen_range(0..n));
        let (a2, s2) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let excl = [a, s, b];
        let only_b = Weights::new(0.0, 0.0, 1.0);
        let x = solve_additive(&store, [a, s, b], only_b, &excl, None).unwrap();
        let y = solve_additive(&store, [a2, s2, b], only_b, &excl, None).unwrap();
        only_b_bad += usize::from(x.predicted_id != y.predicted_id);

        let ignore_a = Weights::new(0.0, 1.0, 1.0);
        let (x, y) = match (
            solve_additive(&store, [a, s, b], ignore_a, &excl, None),
            solve_additive(&store, [a2, s, b], ignore_a, &excl, None),
        ) {
            (Ok(x), Ok(y)) => (x.predicted_id, y.predicted_id),
            // a degenerate query has to be degenerate on both sides
            (x, y) => {
                ignore_a_bad += usize::from(x.is_ok() != y.is_ok());
                continue;
            }
        };
        ignore_a_bad += usize::from(x != y);
    }
    let detail = format!("{trials} trials: only-b violations {only_b_bad}, ignore-a violations {ignore_a_bad}");
    if only_b_bad == 0 && ignore_a_bad == 0 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn reversal_involution() -> Verdict {
    let set = parse_dataset(canonical_dataset(), true).unwrap();
    let once = reverse_set(&set);
    let twice = reverse_set(&once);
    if twice.problems() != set.problems() {
        return Fail("double reversal differs from the parsed set".into());
    }
    if once.categories() != set.categories() || twice.categories() != set.categories() {
        return Fail("category counts changed".into());
    }
    let moved = once
        .problems()
        .iter()
        .zip(set.problems())
        .filter(|(r, p)| r.a == p.a_star && r.a_star == p.a && r.b == p.b_star && r.b_star == p.b)
        .count();
    if moved != set.len() {
        return Fail(format!("only {moved} problems reversed role-for-role"));
    }
    Pass(format!(
        "{} problems restored exactly, 14 category counts unchanged",
        set.len()
    ))
}

fn vanilla_degeneracy_real() -> Verdict {
    let Ok(path) = std::env::var("ANALOGY_AUDIT_REAL_EMBEDDINGS") else {
        return NotRun(
            "needs a public frequency-ordered embedding of >= 50k words; none is available offline here \
             (set ANALOGY_AUDIT_REAL_EMBEDDINGS to run)"
                .into(),
        );
    };
    let format: Format = std::env::var("ANALOGY_AUDIT_REAL_FORMAT")
        .unwrap_or_else(|_| "word2vec-bin".into())
        .parse()
        .unwrap();
    let start = Instant::now();
    let store = load_store(&path, &LoadOptions::new(format)).unwrap();
    if store.len() < 50_000 {
        return Fail(format!("{path} has {} words, fewer than 50k", store.len()));
    }
    let set = parse_dataset(canonical_dataset(), true).unwrap();
    let d = vanilla_degeneracy(&store, &set).unwrap();
    let elapsed = start.elapsed();
    let Some(frac) = d.input_fraction() else {
        return Fail("no problem attempted".into());
    };
    let detail = format!(
        "vanilla answer in {{b, a*, a}} on {:.4} of {} attempted ({} words) in {}",
        frac,
        d.attempted,
        store.len(),
        secs(elapsed)
    );
    if frac < 0.85 {
        return Fail(detail);
    }
    within(Duration::from_secs(600), elapsed, detail)
}

fn conflation_demo() -> Verdict {
    let start = Instant::now();
    let acc = |store: &VectorStore, set: &AnalogySet| {
        let r = evaluate(store, set, &[Method::Add, Method::OnlyB].map(MethodSpec::new)).unwrap();
        (
            r.overall_accuracy(Method::Add).unwrap(),
            r.overall_accuracy(Method::OnlyB).unwrap(),
        )
    };
    let spec_a = consistent_offsets_spec(1);
    let spec_b = tight_neighborhood_spec(1);
    let (sa, qa) = generate(&spec_a).unwrap();
    let (sb, qb) = generate(&spec_b).unwrap();
    let (again, _) = generate(&spec_a).unwrap();
    let deterministic = again.matrix() == sa.matrix();
    let (add_a, only_b_a) = acc(&sa, &qa);
    let (add_b, only_b_b) = acc(&sb, &qb);
    let elapsed = start.elapsed();
    let detail = format!(
        "consistent: add {add_a:.4}, only-b {only_b_a:.4}; tight: only-b {only_b_b:.4}, add {add_b:.4}; {}",
        secs(elapsed)
    );
    if add_a >= 0.95 && only_b_a <= 0.10 && only_b_b >= 0.95 && add_b <= only_b_b && deterministic {
        within(Duration::from_secs(30), elapsed, detail)
    } else {
        Fail(format!("{detail}; deterministic {deterministic}"))
    }
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let bin = env!("CARGO_BIN_EXE_analogy-audit");
    let run = |args: &[&str]| {
        let o = Command::new(bin)
            .args(args)
            .env_remove("SOURCE_DATE_EPOCH")
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&[
        "synth",
        "--preset",
        "tight",
        "--seed",
        "4",
        "--embeddings",
        &p("v.txt"),
        "--dataset",
        &p("q.txt"),
    ]);
    let mut reports = Vec::new();
    for threads in ["1", "8"] {
        let out = p(&format!("r{threads}.json"));
        run(&[
            "--threads",
            threads,
            "eval",
            "--embeddings",
            &p("v.txt"),
            "--format",
            "word2vec-txt",
            "--dataset",
            &p("q.txt"),
            "--methods",
            "all",
            "--reverse",
            "--out",
            &out,
        ]);
        let text = std::fs::read_to_string(&out).unwrap();
        let stamps = text.lines().filter(|l| l.contains("\"generated_at\"")).count();
        assert_eq!(stamps, 1);
        let body: Vec<&str> = text.lines().filter(|l| !l.contains("\"generated_at\"")).collect();
        reports.push(body.join("\n"));
    }
    let detail = format!("eval --methods all --reverse, {} bytes", reports[0].len());
    if reports[0] == reports[1] {
        Pass(format!(
            "threads 1 and 8 byte-identical apart from generated_at ({detail})"
        ))
    } else {
        Fail(format!("reports differ ({detail})"))
    }
}

fn statistics() -> Verdict {
    let cases: [(&[f64], &[f64], f64); 4] = [
        (&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0], 0.8),
        (&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], 1.0),
        (&[1.0, 2.0, 3.0], &[3.0, 1.0, -1.0], -1.0),
        (&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0], 12.0 / 156f64.sqrt()),
    ];
    for (x, y, want) in cases {
        let got = pearson(x, y).unwrap();
        if (got - want).abs() >= 1e-12 {
            return Fail(format!("pearson({x:?}, {y:?}) = {got}, want {want}"));
        }
    }
    if pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_some() {
        return Fail("zero variance gave a value".into());
    }

    let store = fixture_a();
    let set = parse_str(
        ": progressive\ndebug debugging scream screaming\n: other\n\
         scream screaming debug debugging\ndebugging debug screaming dog\n",
        true,
    )
    .unwrap();
    let methods = [Method::Add, Method::OnlyB, Method::Vanilla].map(MethodSpec::new);
    let r = evaluate(&store, &set, &methods).unwrap();
    let gap = baseline_gap(&r, Method::Add, Method::Vanilla).unwrap();
    let checks = [
        (r.accuracies(Method::Add).unwrap(), vec![Some(1.0), Some(0.5)]),
        (r.accuracies(Method::Vanilla).unwrap(), vec![Some(0.0), Some(0.0)]),
        (gap.categories.iter().map(|c| c.1).collect(), vec![Some(1.0), Some(0.5)]),
    ];
    for (got, want) in checks {
        if got != want {
            return Fail(format!("{got:?} != {want:?}"));
        }
    }
    if r.overall_accuracy(Method::Add).unwrap() != 2.0 / 3.0
        || gap.overall != Some(2.0 / 3.0)
        || accuracy(0, 0).is_some()
        || r.macro_accuracy(Method::Add).unwrap() != Some(0.75)
    {
        return Fail("overall / macro / gap arithmetic".into());
    }
    Pass("pearson within 1e-12 on 4 closed forms; accuracy and gaps exact on hand-checked fixture".into())
}

fn throughput() -> Verdict {
    let set = parse_dataset(canonical_dataset(), true).unwrap();
    let mut vocab: Vec<String> = set
        .problems()
        .iter()
        .flat_map(|p| [&p.a, &p.a_star, &p.b, &p.b_star])
        .cloned()
        .collect();
    vocab.sort();
    vocab.dedup();
    let needed = vocab.len();
    let (n, dim) = (50_000, 300);
    let mut rng = StdRng::seed_from_u64(50);
    vocab.extend((needed..n).map(|i| format!("filler{i}")));
    vocab.shuffle(&mut rng);
    let build = Instant::now();
    let store = VectorStore::from_rows(
        dim,
        true,
        vocab.iter().map(|w| {
            let row: Vec<f32> = (0..dim).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
            (w.as_str(), row)
        }),
    )
    .unwrap();
    let build = build.elapsed();
    let start = Instant::now();
    let methods = Method::DEFAULT.map(MethodSpec::new);
    let r = evaluate(&store, &set, &methods).unwrap();
    let elapsed = start.elapsed();
    let attempted = r.total_tally(Method::Add).unwrap().attempted;
    let detail = format!(
        "{} problems x 3 methods ({attempted} attempted) over {} x {dim} in {} on {} thread(s); store built in {}",
        set.len(),
        store.len(),
        secs(elapsed),
        rayon::current_num_threads(),
        secs(build)
    );
    if attempted != set.len() {
        return Fail(detail);
    }
    within(Duration::from_secs(300), elapsed, detail)
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(u32, &str, Check); 10] = [
        (1, "dataset fidelity", dataset_fidelity),
        (2, "oracle equivalence", oracle_equivalence),
        (3, "additive equivalence", additive_equivalence),
        (4, "baseline invariances", baseline_invariances),
        (5, "reversal involution", reversal_involution),
        (6, "vanilla degeneracy on a real space", vanilla_degeneracy_real),
        (7, "conflation demonstration", conflation_demo),
        (8, "determinism across thread counts", cli_determinism),
        (9, "statistics", statistics),
        (10, "throughput", throughput),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match verdict {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            NotRun(d) => ("NOT RUN", d),
        };
        println!("criterion {id:>2} [{tag}] {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
