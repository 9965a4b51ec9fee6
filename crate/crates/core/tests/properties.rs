mod common;

use std::collections::HashSet;

use common::{all_pairs, arb_dataset, brute_max_modularity, brute_scores};
use linkblock::baselines::{
    base_order, canopies, canopy_to_blocks, evaluate_rule, knn_block, levenshtein,
    levenshtein_at_least, rule_block, tnn_block, Atom, NonMatchRule, TfIdfVectors,
};
use linkblock::corpus::{true_pairs, Dataset, Pair};
use linkblock::eval::{score, Blocking, BlockingPartition};
use linkblock::klsh::{kmeans, klsh_block, BlockCount, KlshParams, ProjectedMatrix};
use linkblock::minhash::{band_and_bucket, minhash_signatures, MinHashFamily, SignatureMatrix};
use linkblock::shingle::{build_vocabulary, IncidenceMatrix, ShingleBag};
use linkblock::tlsh::{
    connected_components, greedy_modularity_split, modularity, split_oversized, tlsh_block,
    SimilarityGraph, TlshParams,
};
use proptest::prelude::*;

/// Edit distance straight from the recurrence, over all prefixes.
fn lev_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn first_chars(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Direct evaluation of a rule on two value lists.
fn rule_oracle(rule: &NonMatchRule, names: &[&str], a: &[String], b: &[String]) -> bool {
    let f = |name: &str| names.iter().position(|x| *x == name).unwrap();
    match rule {
        NonMatchRule::Atom(atom) => match atom {
            Atom::Disagree(x) => a[f(x)] != b[f(x)],
            Atom::DisagreeCount(m) => (0..a.len()).filter(|&i| a[i] != b[i]).count() >= *m,
            Atom::LevenshteinAtLeast(x, d) => lev_oracle(&a[f(x)], &b[f(x)]) >= *d,
            Atom::InitialDisagree(x) => first_chars(&a[f(x)], 1) != first_chars(&b[f(x)], 1),
            Atom::PrefixDisagree(x, n) => first_chars(&a[f(x)], *n) != first_chars(&b[f(x)], *n),
        },
        NonMatchRule::And(parts) => parts.iter().all(|p| rule_oracle(p, names, a, b)),
        NonMatchRule::Or(parts) => parts.iter().any(|p| rule_oracle(p, names, a, b)),
    }
}

fn arb_atom() -> impl Strategy<Value = Atom> {
    let field = prop::sample::select(vec!["a", "b", "c"]).prop_map(str::to_string);
    prop_oneof![
        field.clone().prop_map(Atom::Disagree),
        (0usize..4).prop_map(Atom::DisagreeCount),
        (field.clone(), 0usize..4).prop_map(|(f, d)| Atom::LevenshteinAtLeast(f, d)),
        field.clone().prop_map(Atom::InitialDisagree),
        (field, 1usize..4).prop_map(|(f, n)| Atom::PrefixDisagree(f, n)),
    ]
}

fn arb_rule() -> impl Strategy<Value = NonMatchRule> {
    arb_atom().prop_map(NonMatchRule::Atom).prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(NonMatchRule::And),
            prop::collection::vec(inner, 1..4).prop_map(NonMatchRule::Or),
        ]
    })
}

fn rule_pairs(ds: &Dataset, rule: &NonMatchRule) -> HashSet<Pair> {
    let compiled = rule.compile(ds.schema()).unwrap();
    rule_block(ds, &compiled).pairs().iter().copied().collect()
}

fn arb_labels(max_n: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..6, 1..max_n)
}

fn arb_truth(n: usize) -> impl Strategy<Value = Vec<Pair>> {
    prop::collection::vec((0..n as u32, 0..n as u32), 0..12).prop_map(|v| {
        let mut t: Vec<Pair> = v
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        t.sort_unstable();
        t.dedup();
        t
    })
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<Pair>)> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<Pair> = all_pairs(n).collect();
        (Just(n), prop::sample::subsequence(pairs.clone(), 0..=pairs.len()))
    })
}

fn arb_points(max_n: usize, dims: usize) -> impl Strategy<Value = ProjectedMatrix> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dims), 1..max_n)
        .prop_map(move |rows| ProjectedMatrix::from_rows(dims, rows.concat()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn levenshtein_matches_recurrence(a in "[ABÄ]{0,7}", b in "[ABÄ]{0,7}", d in 0usize..9) {
        let want = lev_oracle(&a, &b);
        prop_assert_eq!(levenshtein(&a, &b), want);
        prop_assert_eq!(levenshtein_at_least(&a, &b, d), want >= d);
    }

    #[test]
    fn levenshtein_is_a_metric(a in "[AB]{0,6}", b in "[AB]{0,6}", c in "[AB]{0,6}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }

    #[test]
    fn rule_block_equals_all_pairs_filter(ds in arb_dataset(25), rule in arb_rule()) {
        let names: Vec<&str> = ds.schema().names().collect();
        let compiled = rule.compile(ds.schema()).unwrap();
        let got: HashSet<Pair> = rule_block(&ds, &compiled).pairs().iter().copied().collect();
        let recs = ds.records();
        let want: HashSet<Pair> = all_pairs(ds.n())
            .filter(|&(i, j)| !rule_oracle(&rule, &names, &recs[i as usize].values, &recs[j as usize].values))
            .collect();
        prop_assert_eq!(&got, &want);
        for (i, j) in all_pairs(ds.n()) {
            let (a, b) = (&recs[i as usize], &recs[j as usize]);
            prop_assert_eq!(evaluate_rule(&compiled, a, b), !want.contains(&(i, j)));
        }
    }

    #[test]
    fn rules_are_monotone(ds in arb_dataset(20), r in arb_rule(), s in arb_rule()) {
        let base = rule_pairs(&ds, &r);
        // More ways to eliminate can only remove survivors; fewer can only add.
        let wider = rule_pairs(&ds, &r.clone().or(s.clone()));
        let narrower = rule_pairs(&ds, &r.and(s));
        prop_assert!(wider.is_subset(&base));
        prop_assert!(base.is_subset(&narrower));
    }

    #[test]
    fn merging_blocks_never_lowers_recall(labels in arb_labels(30), pick in any::<(u32, u32)>()) {
        let part = BlockingPartition::from_labels(&labels);
        let truth: Vec<Pair> = all_pairs(labels.len()).filter(|(a, b)| (a ^ b) & 1 == 0).collect();
        let k = part.num_blocks() as u32;
        let (a, b) = (pick.0 % k, pick.1 % k);
        prop_assume!(a != b);
        let merged = part.merge_blocks(a, b);
        let before = score(&part.clone().into(), &truth);
        let after = score(&merged.into(), &truth);
        prop_assert!(after.recall >= before.recall);
        prop_assert!(after.reduction_ratio <= before.reduction_ratio);
    }

    #[test]
    fn partition_score_matches_brute_force(labels in arb_labels(40), seed in any::<u64>()) {
        let n = labels.len();
        let truth: Vec<Pair> = all_pairs(n).filter(|(a, b)| (a * 31 + b * 17 + seed as u32).is_multiple_of(7)).collect();
        let blocking: Blocking = BlockingPartition::from_labels(&labels).into();
        let s = score(&blocking, &truth);
        let (recall, rr, candidates) = brute_scores(&blocking, &truth);
        prop_assert_eq!(s.candidate_pairs, candidates);
        prop_assert!((s.recall - recall).abs() < 1e-9);
        prop_assert!((s.reduction_ratio - rr).abs() < 1e-9);
        prop_assert!((0.0..=100.0).contains(&s.recall));
        prop_assert!((0.0..=100.0).contains(&s.reduction_ratio));
    }

    #[test]
    fn pair_set_score_matches_brute_force((n, truth) in (2usize..20).prop_flat_map(|n| (Just(n), arb_truth(n))),
                                          extra in prop::collection::vec(any::<(u32, u32)>(), 0..20)) {
        let pairs: Vec<Pair> = extra
            .into_iter()
            .map(|(a, b)| (a % n as u32, b % n as u32))
            .filter(|(a, b)| a != b)
            .collect();
        let blocking: Blocking = linkblock::eval::CandidatePairSet::new(n, pairs).unwrap().into();
        let s = score(&blocking, &truth);
        let (recall, rr, candidates) = brute_scores(&blocking, &truth);
        prop_assert_eq!(s.candidate_pairs, candidates);
        prop_assert!((s.recall - recall).abs() < 1e-9);
        prop_assert!((s.reduction_ratio - rr).abs() < 1e-9);
    }

    #[test]
    fn knn_blocks_reach_minimum_size(ds in arb_dataset(30), k_min in 1usize..6, shuffle in any::<Option<u64>>()) {
        let v = TfIdfVectors::from_dataset(&ds, 2).unwrap();
        let part = knn_block(&v, k_min, &base_order(ds.n(), shuffle)).unwrap();
        prop_assert_eq!(part.n(), ds.n());
        if ds.n() >= k_min {
            prop_assert!(part.block_sizes().iter().all(|&s| s as usize >= k_min));
        }
    }

    #[test]
    fn tnn_is_a_partition(ds in arb_dataset(30), t in 0.0f64..1.5) {
        let v = TfIdfVectors::from_dataset(&ds, 2).unwrap();
        let part = tnn_block(&v, t, &base_order(ds.n(), None)).unwrap();
        prop_assert_eq!(part.n(), ds.n());
        prop_assert_eq!(part.block_sizes().iter().map(|&s| s as usize).sum::<usize>(), ds.n());
    }

    #[test]
    fn canopy_pairs_lie_within_blocks(ds in arb_dataset(30), t1 in 0.0f64..1.5, frac in 0.0f64..=1.0,
                                      shuffle in any::<Option<u64>>()) {
        let v = TfIdfVectors::from_dataset(&ds, 2).unwrap();
        let cover = canopies(&v, t1, t1 * frac, &base_order(ds.n(), shuffle)).unwrap();
        let covered: HashSet<u32> = cover.canopies.iter().flatten().copied().collect();
        prop_assert_eq!(covered.len(), ds.n());
        let blocks = canopy_to_blocks(&cover);
        for (a, b) in cover.candidate_pairs() {
            prop_assert!(blocks.same_block(a, b));
        }
        if frac == 1.0 {
            let total: usize = cover.canopies.iter().map(Vec::len).sum();
            prop_assert_eq!(total, ds.n());
        }
    }

    #[test]
    fn kmeans_inertia_never_increases(points in arb_points(40, 3), c in 1usize..6, seed in any::<u64>()) {
        prop_assume!(c <= points.n());
        let r = kmeans(&points, c, 50, seed).unwrap();
        for w in r.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", r.inertia_history);
        }
        prop_assert_eq!(r.assignment.len(), points.n());
        prop_assert!(r.assignment.iter().all(|&a| (a as usize) < c));
    }

    #[test]
    fn klsh_gives_at_most_c_blocks(ds in arb_dataset(40), c in 1usize..8, seed in any::<u64>()) {
        prop_assume!(c <= ds.n());
        let params = KlshParams { projections: 8, blocks: BlockCount::Fixed(c), seed, ..KlshParams::default() };
        let out = klsh_block(&ds, &params).unwrap();
        prop_assert_eq!(out.partition.n(), ds.n());
        prop_assert!(out.partition.num_blocks() <= c);
    }

    #[test]
    fn tlsh_respects_cap(ds in arb_dataset(40), cap in 1usize..6, bands in 1usize..10, k in 1usize..4) {
        let params = TlshParams { shingle_k: k, permutations: 20, bands, max_block: cap, seed: 3 };
        let out = tlsh_block(&ds, &params).unwrap();
        prop_assert_eq!(out.partition.n(), ds.n());
        prop_assert!(out.partition.max_block_size() <= cap);
    }

    #[test]
    fn split_output_is_capped_partition((n, edges) in arb_graph(14), cap in 1usize..8) {
        let g = SimilarityGraph::from_edges(n, &edges);
        let blocks = connected_components(&g).blocks();
        let part = split_oversized(&g, blocks, cap).unwrap();
        prop_assert_eq!(part.n(), n);
        prop_assert!(part.max_block_size() <= cap);
    }

    #[test]
    fn greedy_modularity_bounded_by_optimum((n, edges) in arb_graph(9)) {
        let g = SimilarityGraph::from_edges(n, &edges);
        let nodes: Vec<u32> = (0..n as u32).collect();
        let parts = greedy_modularity_split(&g, &nodes);
        let mut seen: Vec<u32> = parts.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, nodes);
        let q = modularity(&g, &parts);
        prop_assert!(q <= brute_max_modularity(n, &edges) + 1e-9);
        prop_assert!(q >= -1e-12);
    }

    #[test]
    fn greedy_modularity_is_merge_stable_on_planted_groups(
        sizes in prop::collection::vec(2usize..5, 2..4),
        p_in in 0.7f64..=1.0,
        cross in 0usize..3,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n: usize = sizes.iter().sum();
        let group: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| std::iter::repeat_n(g, s)).collect();
        let mut edges: Vec<Pair> = all_pairs(n)
            .filter(|&(a, b)| group[a as usize] == group[b as usize] && rng.random_bool(p_in))
            .collect();
        let between: Vec<Pair> = all_pairs(n).filter(|&(a, b)| group[a as usize] != group[b as usize]).collect();
        for _ in 0..cross {
            edges.push(between[rng.random_range(0..between.len())]);
        }
        edges.sort_unstable();
        edges.dedup();
        let g = SimilarityGraph::from_edges(n, &edges);
        let nodes: Vec<u32> = (0..n as u32).collect();
        let parts = greedy_modularity_split(&g, &nodes);
        let q = modularity(&g, &parts);
        prop_assert!(q <= brute_max_modularity(n, &edges) + 1e-9);
        // Greedy agglomeration carries no approximation bound; it only stops
        // once no merge gains, and it only merges adjacent communities.
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let mut merged = parts.clone();
                let moved = merged.remove(j);
                merged[i].extend(moved);
                prop_assert!(modularity(&g, &merged) <= q + 1e-9);
            }
        }
        for part in &parts {
            let inside: HashSet<u32> = part.iter().copied().collect();
            let mut seen = HashSet::from([part[0]]);
            let mut stack = vec![part[0]];
            while let Some(u) = stack.pop() {
                for &(a, b) in &edges {
                    let v = if a == u { b } else if b == u { a } else { continue };
                    if inside.contains(&v) && seen.insert(v) {
                        stack.push(v);
                    }
                }
            }
            prop_assert_eq!(seen.len(), part.len());
        }
    }

    #[test]
    fn banding_ignores_record_order(cols in prop::collection::vec(prop::collection::vec(0u64..3, 12), 2..25),
                                    b in 1usize..12, rot in 0usize..25) {
        let n = cols.len();
        let sig = SignatureMatrix::from_columns(12, &cols);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(rot % n);
        let moved: Vec<Vec<u64>> = perm.iter().map(|&j| cols[j].clone()).collect();
        let edges = band_and_bucket(&sig, b).unwrap();
        let moved_edges = band_and_bucket(&SignatureMatrix::from_columns(12, &moved), b).unwrap();
        let mut mapped: Vec<Pair> = moved_edges
            .edges()
            .iter()
            .map(|&(x, y)| {
                let (a, c) = (perm[x as usize] as u32, perm[y as usize] as u32);
                (a.min(c), a.max(c))
            })
            .collect();
        mapped.sort_unstable();
        prop_assert_eq!(edges.edges(), &mapped[..]);
    }

    #[test]
    fn shingle_counts_add_up(s in "[A-C ]{0,12}", k in 1usize..5) {
        let bag = ShingleBag::from_text(&s, k);
        let len = s.chars().count();
        if len >= k {
            prop_assert_eq!(bag.total() as usize, len + 1 - k);
            prop_assert!(bag.tokens().all(|t| t.chars().count() == k && s.contains(t)));
        } else {
            // Short non-empty strings are kept whole.
            prop_assert_eq!(bag.total() as usize, usize::from(len > 0));
            prop_assert!(bag.tokens().all(|t| t == s));
        }
    }

    #[test]
    fn identical_sets_share_every_signature_row(tokens in prop::collection::btree_set(0u32..50, 1..10), seed in any::<u64>()) {
        let col: Vec<u32> = tokens.into_iter().collect();
        let inc = IncidenceMatrix::from_columns(50, vec![col.clone(), col]);
        let sig = minhash_signatures(&inc, &MinHashFamily::new(16, seed).unwrap());
        prop_assert_eq!(sig.agreement(0, 1), 1.0);
    }
}

/// Plain greedy merging is not always within 0.8 of the optimum: here the
/// greedy sequence ends at 7/128 against an optimum of 15/128.
#[test]
fn greedy_modularity_known_shortfall() {
    let edges = [(0, 2), (0, 4), (0, 5), (1, 2), (1, 3), (1, 5), (2, 4), (3, 4)];
    let g = SimilarityGraph::from_edges(6, &edges);
    let parts = greedy_modularity_split(&g, &[0, 1, 2, 3, 4, 5]);
    assert!((modularity(&g, &parts) - 7.0 / 128.0).abs() < 1e-12);
    assert!((brute_max_modularity(6, &edges) - 15.0 / 128.0).abs() < 1e-12);
}

#[test]
fn truth_pair_count_of_generated_analog() {
    use linkblock::synthgen::Preset;
    let ds = Preset::Rldata10000Analog.generate(4).unwrap();
    assert_eq!(ds.n(), 10_000);
    assert_eq!(true_pairs(&ds).len(), 1000);
    let small = Preset::Rldata500Analog.generate(4).unwrap();
    assert_eq!(true_pairs(&small).len(), 50);
}

#[test]
fn vocabulary_grows_sublinearly() {
    use linkblock::eval::log_log_slope;
    use linkblock::shingle::shingle_dataset;
    use linkblock::synthgen::Preset;
    let sizes = [1000usize, 2000, 4000, 8000];
    let vocab: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let ds = Preset::Rldata10000Analog.generate_sized(n, n as u64).unwrap();
            let bags = shingle_dataset(&ds, 5).unwrap();
            build_vocabulary(&bags, n).unwrap().len() as f64
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let beta = log_log_slope(&xs, &vocab).unwrap();
    assert!(beta > 0.0 && beta < 1.0, "beta = {beta}");
}
