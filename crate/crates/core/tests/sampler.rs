use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use matman::eval::angle_sums;
use matman::manifolds::ManifoldSpec;
use matman::sampler::{
    default_thresholds, pairwise_distances, quantile, sample_exp_ball, sample_uniform, sweep,
    threshold_graph, threshold_grid, SweepOptions,
};
use matman::Matrix;

fn spec(s: &str) -> ManifoldSpec {
    s.parse().unwrap()
}

/// Two-sided one-sample KS statistic against a continuous CDF.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the KS statistic for large samples.
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn uniform_samples_lie_on_their_manifolds() {
    for s in ["sphere:3", "grassmann:2,5", "grassmann:1,4", "so:2", "so:3"] {
        let c = sample_uniform(&spec(s), 200, 1).unwrap();
        let m = c.manifold().unwrap();
        for p in &c.points {
            m.check_point(p).unwrap();
        }
        let again = sample_uniform(&spec(s), 200, 1).unwrap();
        assert_eq!(c.points, again.points);
    }
    for s in ["euclidean:2", "lorentz:2", "spd:2", "stein:2"] {
        assert!(sample_uniform(&spec(s), 10, 0).is_err(), "{s}");
    }
}

#[test]
fn sphere_coordinates_have_zero_mean() {
    let n = 100_000;
    let c = sample_uniform(&spec("sphere:2"), n, 7).unwrap();
    // each coordinate of a uniform point on S² has variance 1/3
    let se = (1.0 / 3.0 / n as f64).sqrt();
    for i in 0..3 {
        let mean = c.points.iter().map(|p| p[(i, 0)]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 5.0 * se, "coordinate {i}: {mean}");
    }
}

#[test]
fn lines_in_the_plane_have_uniform_angle() {
    let n = 20_000;
    let c = sample_uniform(&spec("grassmann:1,2"), n, 3).unwrap();
    let m = c.manifold().unwrap();
    let fixed = Matrix::column(&[1.0, 0.0]);
    let d: Vec<f64> = c.points.iter().map(|p| m.distance(&fixed, p).unwrap()).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    // arccos|cos φ| is uniform on [0, π/2]
    let se = FRAC_PI_2 / 12f64.sqrt() / (n as f64).sqrt();
    assert!((mean - FRAC_PI_4).abs() < 3.0 * se, "{mean}");
}

#[test]
fn plane_rotations_have_uniform_angle() {
    let n = 5000;
    let c = sample_uniform(&spec("so:2"), n, 11).unwrap();
    let angles: Vec<f64> = c.points.iter().map(|r| r[(1, 0)].atan2(r[(0, 0)])).collect();
    let ks = ks_statistic(angles, |a| (a + PI) / (2.0 * PI));
    assert!(ks < ks_critical(n), "{ks}");
}

#[test]
fn exp_ball_radius_zero_is_the_base() {
    for s in ["euclidean:3", "lorentz:2", "spd:2", "grassmann:2,4", "so:3"] {
        let c = sample_exp_ball(&spec(s), None, 0.0, 5, 0).unwrap();
        let base = c.manifold().unwrap().base_point();
        assert!(c.points.iter().all(|p| *p == base), "{s}");
    }
    assert!(sample_exp_ball(&spec("euclidean:2"), None, -1.0, 5, 0).is_err());
}

#[test]
fn euclidean_ball_mean_radius() {
    let (n, r, dim) = (20_000, 2.0, 3.0);
    let c = sample_exp_ball(&spec("euclidean:3"), None, r, n, 5).unwrap();
    let radii: Vec<f64> = c.points.iter().map(|p| p.norm()).collect();
    let mean = radii.iter().sum::<f64>() / n as f64;
    let var = radii.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let want = r * dim / (dim + 1.0);
    assert!((mean - want).abs() < 3.0 * (var / n as f64).sqrt(), "{mean} vs {want}");
}

#[test]
fn hyperbolic_ball_distances_follow_tangent_norms() {
    let (n, r) = (4000, 5.0);
    let c = sample_exp_ball(&spec("lorentz:3"), None, r, n, 9).unwrap();
    let m = c.manifold().unwrap();
    let o = m.base_point();
    let d: Vec<f64> = c.points.iter().map(|p| m.distance(&o, p).unwrap()).collect();
    assert!(d.iter().all(|&x| x <= r + 1e-6));
    // tangent norm r·U^{1/3} has CDF (t/r)³
    let ks = ks_statistic(d.clone(), |t| (t / r).powi(3));
    assert!(ks < ks_critical(n), "{ks}");
    let median = {
        let mut s = d;
        s.sort_by(f64::total_cmp);
        quantile(&s, 0.5)
    };
    assert!(median > r / 2.0, "mass should sit near the rim, median {median}");
}

#[test]
fn exp_ball_distance_equals_tangent_norm() {
    let specs = [
        ("euclidean:3", 3.0),
        ("lorentz:3", 4.0),
        ("spd:2", 3.0),
        ("spd:3", 2.0),
        ("sphere:2", 3.0),
        ("grassmann:2,4", 1.5),
        ("so:3", 4.0),
        ("product:(lorentz:2)x(sphere:2)", 2.5),
    ];
    for (s, r) in specs {
        let sp = spec(s);
        let m = sp.build().unwrap();
        let o = m.base_point();
        let c = sample_exp_ball(&sp, None, r, 300, 2).unwrap();
        for p in &c.points {
            m.check_point(p).unwrap();
            let d = m.distance(&o, p).unwrap();
            let v = m.log(&o, p).unwrap();
            assert!((d - m.norm(&o, &v)).abs() < 1e-6, "{s}");
            assert!(d <= r + 1e-6, "{s}: {d}");
        }
    }
}

#[test]
fn exp_ball_around_a_given_base() {
    let sp = spec("spd:2");
    let base = Matrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
    let c = sample_exp_ball(&sp, Some(&base), 1.0, 200, 4).unwrap();
    let m = sp.build().unwrap();
    assert!(c.points.iter().all(|p| m.distance(&base, p).unwrap() <= 1.0 + 1e-6));
}

#[test]
fn threshold_graph_examples() {
    let c = sample_exp_ball(&spec("euclidean:2"), None, 1.5, 10, 21).unwrap();
    let d = pairwise_distances(&c).unwrap();
    let g = threshold_graph(&c, 1.0).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            if i != j {
                let (a, b) = (&c.points[i], &c.points[j]);
                let dist = ((a[(0, 0)] - b[(0, 0)]).powi(2) + (a[(1, 0)] - b[(1, 0)]).powi(2)).sqrt();
                assert_eq!(g.has_edge(i, j), dist < 1.0);
            }
        }
    }
    let full = threshold_graph(&c, d.max() * 1.01).unwrap();
    assert_eq!(full.edge_count(), 45);
    let none = threshold_graph(&c, d.min_positive().unwrap()).unwrap();
    assert_eq!(none.edge_count(), 0);
    assert!(threshold_graph(&c, 0.0).is_err());
}

#[test]
fn sweep_degrees_grow_with_threshold() {
    let c = sample_exp_ball(&spec("lorentz:2"), None, 3.0, 150, 1).unwrap();
    let d = pairwise_distances(&c).unwrap();
    let grid = default_thresholds(&c, &d, 12).unwrap();
    assert_eq!(grid.len(), 12);
    assert!((grid[0] - 0.3).abs() < 1e-12 && (grid[11] - 4.5).abs() < 1e-12);
    let mut taus = vec![1e-9];
    taus.extend(grid);
    taus.push(d.max() + 1.0);
    let opts = SweepOptions {
        n_sectional: 100,
        seed: 0,
    };
    let s = sweep(&c, &taus, &opts).unwrap();
    for w in s.rows.windows(2) {
        for q in 0..3 {
            assert!(w[1].degree[q] >= w[0].degree[q]);
        }
        assert!(w[1].largest_component >= w[0].largest_component || w[0].empty);
    }
    let first = &s.rows[0];
    assert!(first.empty && first.curvature.is_none());
    let last = s.rows.last().unwrap();
    assert_eq!(last.degree[1], 149.0);
    assert!(last.curvature.is_some());
    let csv = s.to_csv();
    assert!(csv.lines().nth(1).unwrap().contains("NA,NA,NA"));
    assert_eq!(csv.lines().count(), taus.len() + 1);
    assert!(sweep(&c, &[1.0], &opts).is_err());
}

#[test]
fn dense_sphere_graph_approaches_complete_graph_curvature() {
    let c = sample_uniform(&spec("sphere:2"), 1000, 0).unwrap();
    let opts = SweepOptions {
        n_sectional: 200,
        seed: 1,
    };
    let s = sweep(&c, &[1.0, PI + 0.1], &opts).unwrap();
    let curv = s.rows[1].curvature.unwrap();
    assert!(curv.iter().all(|&k| (k - 0.125).abs() < 1e-3), "{curv:?}");
}

#[test]
fn grid_and_quantile_helpers() {
    assert_eq!(threshold_grid(1.0, 2.0, 3).unwrap(), vec![1.0, 1.5, 2.0]);
    assert!(threshold_grid(0.0, 1.0, 3).is_err());
    assert!(threshold_grid(1.0, 2.0, 1).is_err());
    assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    assert_eq!(quantile(&[5.0], 0.25), 5.0);
    assert!(quantile(&[], 0.5).is_nan());
}

#[test]
fn spd_ball_degrees_stay_below_euclidean() {
    // same dimension (6), radius and thresholds
    let opts = SweepOptions {
        n_sectional: 0,
        seed: 0,
    };
    let mut curves = Vec::new();
    for s in ["spd:3", "euclidean:6"] {
        let c = sample_exp_ball(&spec(s), None, 5.0, 300, 2).unwrap();
        let d = pairwise_distances(&c).unwrap();
        let grid = default_thresholds(&c, &d, 10).unwrap();
        curves.push(sweep(&c, &grid, &opts).unwrap());
    }
    let (spd, euc) = (&curves[0], &curves[1]);
    let mut strictly = 0;
    for (a, b) in spd.rows.iter().zip(&euc.rows) {
        assert_eq!(a.threshold, b.threshold);
        assert!(a.degree[1] <= b.degree[1], "{} vs {} at {}", a.degree[1], b.degree[1], a.threshold);
        strictly += (a.degree[1] < b.degree[1]) as usize;
    }
    assert!(strictly >= 5);
}

#[test]
fn rotations_and_lines_in_four_space_share_angle_sums() {
    let n = 2000;
    let mut samples = Vec::new();
    for s in ["so:3", "grassmann:1,4"] {
        let c = sample_uniform(&spec(s), 300, 4).unwrap();
        let m = c.manifold().unwrap();
        let mut v = angle_sums(m.as_ref(), &c.points, n, 5).unwrap();
        v.sort_by(f64::total_cmp);
        samples.push(v);
    }
    // two-sample KS statistic on the merged order
    let (a, b) = (&samples[0], &samples[1]);
    let (mut i, mut j, mut ks) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        ks = ks.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    assert!(ks < 1.628 * (2.0 / n as f64).sqrt(), "KS {ks}");
}
