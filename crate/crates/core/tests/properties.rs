use std::io::BufReader;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;

use sesg_core::encodings::{distances_from, sample_signed_walks, WalkConfig, WalkEncoding};
use sesg_core::explain::{neighbor_context, predict_sign, DecoderConfig};
use sesg_core::graph::{
    degree_profile, generate_balanced_graph, parse_edge_list, write_edges, LoadOptions, Sign,
    SignedEdge, SignedGraph, SyntheticConfig,
};

fn arb_graph(max_nodes: usize) -> impl Strategy<Value = SignedGraph> {
    (2..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, any::<bool>()), 0..(3 * n)).prop_map(move |raw| {
            let mut seen = std::collections::BTreeSet::new();
            let edges: Vec<SignedEdge> = raw
                .into_iter()
                .filter(|&(a, b, _)| a != b && seen.insert((a, b)))
                .map(|(a, b, pos)| {
                    SignedEdge::new(a, b, if pos { Sign::Positive } else { Sign::Negative })
                })
                .collect();
            SignedGraph::from_edges(n, edges).unwrap()
        })
    })
}

fn balanced(nodes_per_block: usize, seed: u64) -> (SignedGraph, SyntheticConfig) {
    let cfg = SyntheticConfig {
        nodes_per_block,
        p_intra: 0.5,
        p_inter: 0.4,
        flip_noise: 0.0,
        seed,
        ..SyntheticConfig::default()
    };
    (generate_balanced_graph(&cfg).unwrap(), cfg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_roundtrip(g in arb_graph(12)) {
        let mut buf = Vec::new();
        write_edges(&mut buf, &g, g.edges()).unwrap();
        let back = parse_edge_list(BufReader::new(buf.as_slice()), Path::new("mem"), LoadOptions::default()).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert!(back.num_nodes() <= g.num_nodes());
    }

    #[test]
    fn degree_profile_sums(g in arb_graph(12)) {
        let p = degree_profile(&g);
        prop_assert_eq!(p.pos_degree.iter().sum::<usize>(), g.num_pos());
        prop_assert_eq!(p.neg_degree.iter().sum::<usize>(), g.num_neg());
        prop_assert_eq!(g.num_pos() + g.num_neg(), g.num_edges());
        for e in g.edges() {
            prop_assert_eq!(g.adjacency(e.src, e.dst), e.sign.value());
        }
    }

    // dyadic coordinates keep every squared distance exact, so the
    // transforms below must leave the decision bit-for-bit unchanged
    #[test]
    fn decoder_is_invariant_under_exact_isometries(
        g in arb_graph(10),
        raw in proptest::collection::vec(-32i32..=32, 40),
        perm_seed in any::<u64>(),
        shift in -16i32..=16,
        scale_pow in -3i32..=3,
    ) {
        let n = g.num_nodes();
        let d = 4;
        let z = Array2::from_shape_fn((n, d), |(i, c)| raw[(i * d + c) % raw.len()] as f64 / 8.0);
        let mut cols: Vec<usize> = (0..d).collect();
        let mut s = perm_seed;
        for i in (1..d).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            cols.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted = Array2::from_shape_fn((n, d), |(i, c)| z[[i, cols[c]]]);
        let reflected = Array2::from_shape_fn((n, d), |(i, c)| if c == 0 { -z[[i, c]] } else { z[[i, c]] });
        let translated = z.mapv(|v| v + shift as f64 / 4.0);
        let scaled = z.mapv(|v| v * 2f64.powi(scale_pow));

        let cfg = DecoderConfig { k: 3, n_sample: 64, ..DecoderConfig::default() };
        let decide = |zv: ArrayView2<f64>, i: usize, j: usize| {
            let ctx = neighbor_context(i, zv, &g, None, &cfg).unwrap();
            let p = predict_sign(i, j, zv, ctx, Sign::Positive);
            (p.predicted_sign, p.context.pos_ids(), p.context.neg_ids(), p.degenerate)
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let base = decide(z.view(), i, j);
                prop_assert_eq!(&decide(permuted.view(), i, j), &base);
                prop_assert_eq!(&decide(reflected.view(), i, j), &base);
                prop_assert_eq!(&decide(translated.view(), i, j), &base);
                prop_assert_eq!(&decide(scaled.view(), i, j), &base);
            }
        }
    }
}

#[test]
fn generator_counts_match_expectation() {
    // 2·C(50,2) intra pairs and 50² inter pairs, each kept with p = 0.2
    let (intra, inter) = (2450.0, 2500.0);
    let p: f64 = 0.2;
    for seed in 0..5 {
        let g = generate_balanced_graph(&SyntheticConfig {
            flip_noise: 0.0,
            seed,
            ..SyntheticConfig::default()
        })
        .unwrap();
        for (count, pairs) in [(g.num_pos(), intra), (g.num_neg(), inter)] {
            let mean = pairs * p;
            let sd = (pairs * p * (1.0 - p)).sqrt();
            assert!(
                (count as f64 - mean).abs() <= 4.0 * sd,
                "seed {seed}: {count} vs {mean} ± {}",
                4.0 * sd
            );
        }
    }
}

#[test]
fn noiseless_generator_has_no_unbalanced_short_cycle() {
    for seed in 0..8 {
        let (g, _) = balanced(6, seed);
        let n = g.num_nodes();
        // every simple cycle of length 3..=6 rooted at its smallest node
        fn dfs(g: &SignedGraph, root: usize, at: usize, sign: i8, path: &mut Vec<usize>, bad: &mut usize) {
            for &(next, s) in g.neighbors(at) {
                let sign = sign * s.value();
                if next == root && path.len() >= 3 {
                    if sign < 0 {
                        *bad += 1;
                    }
                } else if next > root && !path.contains(&next) && path.len() < 6 {
                    path.push(next);
                    dfs(g, root, next, sign, path, bad);
                    path.pop();
                }
            }
        }
        let mut bad = 0;
        for root in 0..n {
            dfs(&g, root, root, 1, &mut vec![root], &mut bad);
        }
        assert_eq!(bad, 0, "seed {seed}");
    }
}

#[test]
fn walk_distance_sign_follows_blocks() {
    for seed in 0..4 {
        let (g, cfg) = balanced(10, seed);
        let wcfg = WalkConfig {
            num_walks: 6,
            walk_length: 12,
            max_path_length: 12,
            seed,
        };
        let walks = sample_signed_walks(&g, &wcfg).unwrap();
        let mut checked = 0;
        for (i, node_walks) in walks.walks.iter().enumerate() {
            for walk in node_walks {
                for (j, psi) in distances_from(walk, i, &g, wcfg.max_path_length).unwrap() {
                    if i == j {
                        continue;
                    }
                    let same = cfg.block_of(i) == cfg.block_of(j);
                    assert_eq!(psi > 0, same, "seed {seed} pair ({i},{j}) ψ = {psi}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn walk_bias_is_permutation_equivariant_in_expectation() {
    let edges = [
        (0, 1, Sign::Positive),
        (1, 2, Sign::Negative),
        (2, 3, Sign::Positive),
        (3, 0, Sign::Negative),
        (1, 4, Sign::Positive),
        (4, 5, Sign::Negative),
        (5, 2, Sign::Positive),
        (0, 6, Sign::Negative),
        (6, 7, Sign::Positive),
        (7, 3, Sign::Positive),
    ];
    let n = 8;
    let perm = [5, 2, 7, 0, 6, 1, 3, 4];
    let g = SignedGraph::from_edges(n, edges.iter().map(|&(a, b, s)| SignedEdge::new(a, b, s))).unwrap();
    let h = SignedGraph::from_edges(
        n,
        edges.iter().map(|&(a, b, s)| SignedEdge::new(perm[a], perm[b], s)),
    )
    .unwrap();

    let seeds = 10_000u64;
    let mean_bias = |graph: &SignedGraph| {
        let mut acc = Array2::<f64>::zeros((n, n));
        for seed in 0..seeds {
            let cfg = WalkConfig {
                num_walks: 1,
                walk_length: 6,
                max_path_length: 6,
                seed,
            };
            let walks = sample_signed_walks(graph, &cfg).unwrap();
            let enc = WalkEncoding::from_walks(&walks, graph).unwrap();
            acc += &enc.bias(&[1.0]).unwrap();
        }
        acc / seeds as f64
    };
    let bg = mean_bias(&g);
    let bh = mean_bias(&h);
    for i in 0..n {
        for j in 0..n {
            let diff = (bg[[i, j]] - bh[[perm[i], perm[j]]]).abs();
            assert!(diff <= 0.05, "({i},{j}): {} vs {}", bg[[i, j]], bh[[perm[i], perm[j]]]);
        }
    }
}
