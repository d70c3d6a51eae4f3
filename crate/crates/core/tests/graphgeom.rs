use matman::graphgeom::{
    delta_exhaustive, delta_hyperbolicity, edge_transport, graph_sectional, ollivier_ricci_edge,
    quadruple_delta, ricci_edges, ricci_nodes, sectional_all, sectional_samples, transport_cost,
    CurvatureOptions, CurvatureReport,
};
use matman::graphio::{apsp, generators, DistanceMatrix, Graph};
use matman::Error;
use proptest::prelude::*;

fn hops(g: &Graph) -> DistanceMatrix {
    apsp(g).unwrap()
}

fn scaled_by(d: &DistanceMatrix, c: f64) -> DistanceMatrix {
    DistanceMatrix::new(d.m(), d.as_slice().iter().map(|x| x * c).collect(), 1.0).unwrap()
}

#[test]
fn trees_and_complete_graphs_are_zero_hyperbolic() {
    for g in [generators::balanced_tree(2, 3), generators::star(6), generators::path(9)] {
        assert_eq!(delta_exhaustive(&hops(&g)).unwrap().max, 0.0);
    }
    let k4 = delta_exhaustive(&hops(&generators::complete(4))).unwrap();
    assert_eq!(k4.max, 0.0);
    assert_eq!(k4.samples.len(), 1);
}

#[test]
fn six_cycle_has_delta_one() {
    let s = delta_exhaustive(&hops(&generators::cycle(6))).unwrap();
    assert_eq!(s.samples.len(), 15);
    assert_eq!(s.max, 1.0);
    // brute force over the quadruple (0, 1, 3, 4): sums 6, 4, 2
    assert_eq!(quadruple_delta(&hops(&generators::cycle(6)), 0, 1, 3, 4), 1.0);
}

#[test]
fn delta_scales_linearly_and_sampling_stays_below_the_max() {
    let g = generators::grid(5, 6);
    let d = hops(&g);
    let a = delta_hyperbolicity(&d, 5000, 7).unwrap();
    let b = delta_hyperbolicity(&scaled_by(&d, 3.0), 5000, 7).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((3.0 * x - y).abs() < 1e-12);
        assert!(*x >= 0.0);
    }
    let full = delta_exhaustive(&d).unwrap();
    assert!(a.max <= full.max);
    assert_eq!(a.samples, delta_hyperbolicity(&d, 5000, 7).unwrap().samples);
}

#[test]
fn delta_input_limits() {
    let d = hops(&generators::path(3));
    assert!(delta_hyperbolicity(&d, 10, 0).is_err());
    assert!(delta_exhaustive(&hops(&generators::path(61))).is_err());
}

/// Minimum over the vertices of the transportation polytope, found by
/// solving every square subsystem of the marginal constraints.
fn lp_oracle(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (ns, nt) = (supply.len(), demand.len());
    let cells: Vec<(usize, usize)> = (0..ns).flat_map(|i| (0..nt).map(move |j| (i, j))).collect();
    let k = ns + nt - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        // rows: supply constraints then demand constraints (last one dropped)
        let mut a = vec![vec![0.0; k + 1]; k];
        for (c, &cell) in pick.iter().enumerate() {
            let (i, j) = cells[cell];
            a[i][c] = 1.0;
            if ns + j < k {
                a[ns + j][c] = 1.0;
            }
        }
        for i in 0..ns {
            a[i][k] = supply[i];
        }
        for j in 0..nt - 1 {
            a[ns + j][k] = demand[j];
        }
        if let Some(x) = solve(a) {
            if x.iter().all(|&v| v >= -1e-12) {
                let c: f64 = pick.iter().zip(&x).map(|(&cell, v)| v * cost[cells[cell].0][cells[cell].1]).sum();
                best = best.min(c);
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < cells.len() - k + i {
                pick[i] += 1;
                for j in (i + 1)..k {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn lazy(g: &Graph, x: usize, alpha: f64) -> (Vec<usize>, Vec<f64>) {
    let mut nodes = vec![x];
    nodes.extend_from_slice(g.neighbors(x));
    let k = g.degree(x) as f64;
    let mass = std::iter::once(alpha).chain(std::iter::repeat((1.0 - alpha) / k)).take(nodes.len()).collect();
    (nodes, mass)
}

fn ricci_oracle(g: &Graph, x: usize, y: usize, alpha: f64) -> f64 {
    let d = hops(g);
    let (sx, mx) = lazy(g, x, alpha);
    let (sy, my) = lazy(g, y, alpha);
    let cost: Vec<Vec<f64>> = sx.iter().map(|&a| sy.iter().map(|&b| d.get(a, b)).collect()).collect();
    (1.0 - lp_oracle(&mx, &my, &cost)) / (1.0 - alpha)
}

#[test]
fn two_point_transport() {
    let g = generators::path(2);
    assert!((edge_transport(&g, 0, 1, 0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(ollivier_ricci_edge(&g, 0, 1, 0.0).unwrap().abs() < 1e-15);
}

#[test]
fn ricci_matches_the_lp_oracle() {
    let p4 = generators::path(4);
    let k3 = generators::complete(3);
    let cases = [(&p4, 1, 2), (&p4, 0, 1), (&k3, 0, 1)];
    for (g, x, y) in cases {
        for alpha in [0.0, 0.5, 0.999] {
            let got = ollivier_ricci_edge(g, x, y, alpha).unwrap();
            let want = ricci_oracle(g, x, y, alpha);
            assert!((got - want).abs() < 1e-6, "{x}-{y} α={alpha}: {got} vs {want}");
        }
    }
    assert!(ollivier_ricci_edge(&k3, 0, 1, 0.999).unwrap() > 0.0);
}

#[test]
fn ricci_signs_and_symmetry() {
    let k = generators::complete(5);
    for (u, v, r) in ricci_edges(&k, 0.999).unwrap() {
        assert!(r > 0.0);
        assert!((r - ollivier_ricci_edge(&k, v, u, 0.999).unwrap()).abs() < 1e-9);
    }
    let t = generators::balanced_tree(3, 3);
    for (u, v, r) in ricci_edges(&t, 0.999).unwrap() {
        if t.degree(u) > 1 && t.degree(v) > 1 {
            assert!(r < 0.0, "{u}-{v}: {r}");
        }
        assert!((r - ollivier_ricci_edge(&t, v, u, 0.999).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn node_ricci_is_the_incident_mean() {
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap();
    let e = ricci_edges(&g, 0.5).unwrap();
    let n = ricci_nodes(5, &e);
    for u in 0..5 {
        let inc: Vec<f64> = e.iter().filter(|(a, b, _)| *a == u || *b == u).map(|t| t.2).collect();
        assert_eq!(n[u], inc.iter().sum::<f64>() / inc.len() as f64);
    }
}

#[test]
fn ricci_input_checks() {
    let g = generators::path(3);
    assert!(matches!(edge_transport(&g, 0, 2, 0.5), Err(Error::InvalidInput(_))));
    assert!(edge_transport(&g, 0, 1, 1.0).is_err());
    let w = Graph::from_weighted_edges(2, &[(0, 1, 2.0)]).unwrap();
    assert!(matches!(edge_transport(&w, 0, 1, 0.5), Err(Error::Unsupported(_))));
    assert!(transport_cost(&[1.0], &[0.5], &[vec![1.0]]).is_err());
}

proptest! {
    #[test]
    fn transport_matches_lp(
        s in proptest::collection::vec(0.01f64..1.0, 1..4),
        t in proptest::collection::vec(0.01f64..1.0, 1..4),
        c in proptest::collection::vec(0u8..4, 9),
    ) {
        let (zs, zt): (f64, f64) = (s.iter().sum(), t.iter().sum());
        let s: Vec<f64> = s.iter().map(|x| x / zs).collect();
        let t: Vec<f64> = t.iter().map(|x| x / zt).collect();
        let cost: Vec<Vec<f64>> = (0..s.len()).map(|i| (0..t.len()).map(|j| c[i * 3 + j] as f64).collect()).collect();
        let got = transport_cost(&s, &t, &cost).unwrap();
        prop_assert!((got - lp_oracle(&s, &t, &cost)).abs() < 1e-9);
    }
}

fn sectional_oracle(d: &DistanceMatrix, m: usize, y: usize, z: usize) -> f64 {
    let others: Vec<usize> = (0..d.m()).filter(|&x| x != m).collect();
    others
        .iter()
        .map(|&x| {
            let k = d.get(x, m).powi(2) + d.get(y, z).powi(2) / 4.0
                - (d.get(x, y).powi(2) + d.get(x, z).powi(2)) / 2.0;
            k / (2.0 * d.get(x, m))
        })
        .sum::<f64>()
        / others.len() as f64
}

#[test]
fn sectional_examples() {
    let p = generators::path(7);
    let d = hops(&p);
    assert!(graph_sectional(&p, &d, 3, 2, 4).unwrap().abs() < 1e-15);

    let s = generators::star(3);
    let d = hops(&s);
    let v = graph_sectional(&s, &d, 0, 1, 2).unwrap();
    assert!((v - sectional_oracle(&d, 0, 1, 2)).abs() < 1e-15);
    assert!(v <= 0.0);

    let c = generators::cycle(6);
    let d = hops(&c);
    assert!(graph_sectional(&c, &d, 0, 1, 5).unwrap() >= 0.0);

    // complete graph: x ∉ {y, z} gives 1/8, x ∈ {y, z} gives 3/8
    for n in [3usize, 6, 40] {
        let k = generators::complete(n);
        let want = (n as f64 + 3.0) / (8.0 * (n as f64 - 1.0));
        assert!((graph_sectional(&k, &hops(&k), 0, 1, 2).unwrap() - want).abs() < 1e-15);
    }

    assert!(matches!(graph_sectional(&p, &hops(&p), 3, 2, 5), Err(Error::InvalidInput(_))));
    assert!(graph_sectional(&p, &hops(&p), 3, 2, 2).is_err());
}

#[test]
fn sectional_signs_on_trees_and_even_cycles() {
    for t in [generators::balanced_tree(3, 3), generators::star(5), generators::balanced_tree(2, 4)] {
        assert!(sectional_all(&t, &hops(&t)).unwrap().iter().all(|&v| v <= 1e-12));
    }
    for n in [4, 6, 8, 12] {
        let c = generators::cycle(n);
        assert!(sectional_all(&c, &hops(&c)).unwrap().iter().all(|&v| v >= -1e-12));
    }
    let g = generators::grid(4, 4);
    let d = hops(&g);
    let s = sectional_samples(&g, &d, 200, 3).unwrap();
    assert_eq!(s, sectional_samples(&g, &d, 200, 3).unwrap());
}

#[test]
fn report_and_csv() {
    let g = generators::balanced_tree(2, 3);
    let d = hops(&g);
    let opts = CurvatureOptions {
        n_sectional: 50,
        ..CurvatureOptions::default()
    };
    let r = CurvatureReport::compute(&g, &d, &opts).unwrap();
    assert!(r.delta_exhaustive);
    assert_eq!(r.delta.max, 0.0);
    assert_eq!(r.ricci_edges.len(), 14);
    assert_eq!(r.sectional_samples.len(), 50);
    let csv = r.ricci_edges_csv();
    assert!(csv.starts_with("u,v,ricci\n"));
    assert_eq!(csv.lines().count(), 15);
    assert_eq!(r.ricci_nodes_csv().lines().count(), 16);
}
