use matman::graphio::{
    apsp, generators, hop_layers, load_dissimilarity, load_edgelist, max_scale, parse_edgelist,
    read_distance_cache, write_distance_cache, DistanceMatrix, Graph,
};
use matman::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn floyd_warshall(m: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; m * m];
    for i in 0..m {
        d[i * m + i] = 0.0;
    }
    for &(u, v, w) in edges {
        if u != v {
            d[u * m + v] = d[u * m + v].min(w);
            d[v * m + u] = d[v * m + u].min(w);
        }
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                let via = d[i * m + k] + d[k * m + j];
                if via < d[i * m + j] {
                    d[i * m + j] = via;
                }
            }
        }
    }
    d
}

fn random_connected_edges(rng: &mut ChaCha8Rng, m: usize, extra: usize, weighted: bool) -> Vec<(usize, usize, f64)> {
    let w = |rng: &mut ChaCha8Rng| if weighted { rng.gen_range(0.1..5.0) } else { 1.0 };
    let mut e: Vec<_> = (1..m).map(|v| (rng.gen_range(0..v), v, w(rng))).collect();
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..m), rng.gen_range(0..m));
        let x = w(rng);
        e.push((a, b, x));
    }
    e
}

fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
    use std::io::Write;
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn path_from_text() {
    let g = parse_edgelist("0 1\n1 2").unwrap();
    assert_eq!(g.m(), 3);
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    assert!(!g.is_weighted());
}

#[test]
fn relabels_in_first_appearance_order() {
    let g = parse_edgelist("# comment\n% other comment\nc a\na zed\n\nzed c\n").unwrap();
    assert_eq!(g.labels(), &["c", "a", "zed"]);
    assert_eq!(g.edge_count(), 3);
}

#[test]
fn duplicate_edges_merge() {
    let g = parse_edgelist("0 1\n0 1\n1 0\n1 2").unwrap();
    assert_eq!(g.edge_count(), 2);
    let w = parse_edgelist("0 1 3\n1 0 2\n1 2 1").unwrap();
    assert_eq!(w.neighbor_weights(0).unwrap(), &[2.0]);
}

#[test]
fn keeps_largest_component() {
    let g = parse_edgelist("a b\nb c\nc d\nx y\n").unwrap();
    assert_eq!(g.m(), 4);
    assert_eq!(g.dropped_nodes(), 2);
    assert_eq!(g.labels(), &["a", "b", "c", "d"]);
}

#[test]
fn loader_errors() {
    assert!(matches!(parse_edgelist(""), Err(Error::InvalidInput(_))));
    assert!(matches!(parse_edgelist("# only comments\n"), Err(Error::InvalidInput(_))));
    assert!(matches!(parse_edgelist("0 1 -2"), Err(Error::InvalidInput(_))));
    assert!(matches!(parse_edgelist("0 1 0"), Err(Error::InvalidInput(_))));
    assert!(matches!(parse_edgelist("0 1 x"), Err(Error::Format { .. })));
    assert!(matches!(parse_edgelist("0"), Err(Error::Format { .. })));
    assert!(matches!(load_edgelist("/nonexistent/file"), Err(Error::Io { .. })));
}

#[test]
fn loads_from_file() {
    let f = write_tmp("0 1\n1 2\n2 3\n");
    let g = load_edgelist(f.path()).unwrap();
    assert_eq!(g, generators::path(4));
}

#[test]
fn apsp_examples() {
    let d = apsp(&generators::path(3)).unwrap();
    assert_eq!(d.as_slice(), &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
    assert_eq!(apsp(&generators::cycle(4)).unwrap().max(), 2.0);
}

#[test]
fn apsp_rejects_disconnected() {
    let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
    assert!(matches!(apsp(&g), Err(Error::Disconnected(_, _))));
}

#[test]
fn apsp_matches_floyd_warshall() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for weighted in [false, true] {
            let e = random_connected_edges(&mut rng, 20, 25, weighted);
            let g = if weighted {
                Graph::from_weighted_edges(20, &e).unwrap()
            } else {
                let u: Vec<_> = e.iter().map(|&(a, b, _)| (a, b)).collect();
                Graph::from_edges(20, &u).unwrap()
            };
            let d = apsp(&g).unwrap();
            let fw = floyd_warshall(20, &e);
            for (a, b) in d.as_slice().iter().zip(&fw) {
                if weighted {
                    assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
                } else {
                    assert_eq!(a, b);
                }
            }
        }
    }
}

#[test]
fn max_scale_examples() {
    let d = max_scale(&apsp(&generators::path(3)).unwrap()).unwrap();
    assert_eq!(d.max(), 1.0);
    assert_eq!(d.scale(), 2.0);
    let again = max_scale(&d).unwrap();
    assert_eq!(again.as_slice(), d.as_slice());
    assert_eq!(again.scale(), 1.0);

    let c6 = max_scale(&apsp(&generators::cycle(6)).unwrap()).unwrap();
    for &x in c6.as_slice() {
        assert!([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0].iter().any(|v| (x - v).abs() < 1e-15));
    }

    let zero = DistanceMatrix::new(2, vec![0.0; 4], 1.0).unwrap();
    assert!(matches!(max_scale(&zero), Err(Error::InvalidInput(_))));
}

#[test]
fn hop_layer_examples() {
    let star = hop_layers(&generators::star(3)).unwrap();
    assert_eq!(star[0], vec![vec![1, 2, 3]]);

    let p4 = hop_layers(&generators::path(4)).unwrap();
    assert_eq!(p4[0], vec![vec![1], vec![2], vec![3]]);

    let tree = hop_layers(&generators::balanced_tree(2, 3)).unwrap();
    let sizes: Vec<_> = tree[0].iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![2, 4, 8]);

    let w = Graph::from_weighted_edges(2, &[(0, 1, 2.0)]).unwrap();
    assert!(matches!(hop_layers(&w), Err(Error::Unsupported(_))));
}

#[test]
fn distance_cache_round_trip() {
    let d = max_scale(&apsp(&generators::balanced_tree(3, 3)).unwrap()).unwrap();
    let f = tempfile::NamedTempFile::new().unwrap();
    write_distance_cache(f.path(), &d).unwrap();
    let back = read_distance_cache(f.path()).unwrap();
    assert_eq!(back.m(), d.m());
    assert_eq!(back.scale(), d.scale());
    for (a, b) in back.as_slice().iter().zip(d.as_slice()) {
        assert_eq!(*a, *b as f32 as f64);
    }

    let bytes = std::fs::read(f.path()).unwrap();
    assert_eq!(&bytes[0..4], b"MMDM");
    assert_eq!(bytes.len(), 24 + 4 * d.m() * d.m());

    let bad = write_tmp("not a cache at all, definitely");
    assert!(matches!(read_distance_cache(bad.path()), Err(Error::Format { .. })));
    let truncated = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(truncated.path(), &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_distance_cache(truncated.path()), Err(Error::Format { .. })));
}

#[test]
fn dissimilarity_loader() {
    let f = write_tmp("# toy\n0 1 2\n1 0 3\n2.5, 3, 0\n");
    let d = load_dissimilarity(f.path()).unwrap();
    assert_eq!(d.m(), 3);
    assert_eq!(d.get(0, 2), 2.25);
    assert_eq!(d.get(2, 0), 2.25);
    let bad = write_tmp("0 1\n1 0 2\n");
    assert!(matches!(load_dissimilarity(bad.path()), Err(Error::Format { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn apsp_is_a_metric_consistent_with_layers(seed in any::<u64>(), m in 2usize..30, extra in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_connected_edges(&mut rng, m, extra, false);
        let u: Vec<_> = e.iter().map(|&(a, b, _)| (a, b)).collect();
        let g = Graph::from_edges(m, &u).unwrap();
        let d = apsp(&g).unwrap();
        for i in 0..m {
            for j in 0..m {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                for k in 0..m {
                    prop_assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j));
                }
            }
        }
        let layers = hop_layers(&g).unwrap();
        for (s, ls) in layers.iter().enumerate() {
            prop_assert_eq!(ls.iter().map(Vec::len).sum::<usize>(), m - 1);
            for (k, layer) in ls.iter().enumerate() {
                for &v in layer {
                    prop_assert_eq!(d.get(s, v), (k + 1) as f64);
                }
            }
        }
    }

    #[test]
    fn weighted_apsp_triangle_inequality(seed in any::<u64>(), m in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_connected_edges(&mut rng, m, m, true);
        let d = apsp(&Graph::from_weighted_edges(m, &e).unwrap()).unwrap();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    prop_assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j) + 1e-12);
                }
            }
        }
    }
}
