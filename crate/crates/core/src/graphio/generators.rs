//! Small synthetic graphs used by tests, examples and the CLI.

use super::Graph;

fn make(m: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(m, edges).expect("generator edges are in range")
}

/// Path `P_n`: edges i to i+1 for i < n-1.
pub fn path(n: usize) -> Graph {
    let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    make(n, &e)
}

/// Cycle `C_n`.
pub fn cycle(n: usize) -> Graph {
    let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    if n > 2 {
        e.push((n - 1, 0));
    }
    make(n, &e)
}

/// Star `K_{1,k}` with center 0.
pub fn star(k: usize) -> Graph {
    let e: Vec<_> = (1..=k).map(|i| (0, i)).collect();
    make(k + 1, &e)
}

/// Complete graph `K_n`.
pub fn complete(n: usize) -> Graph {
    let e: Vec<_> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    make(n, &e)
}

/// Balanced `r`-ary tree of height `h` (root 0, breadth-first labels).
pub fn balanced_tree(r: usize, h: usize) -> Graph {
    let mut n = 1;
    let mut level = 1;
    for _ in 0..h {
        level *= r;
        n += level;
    }
    let e: Vec<_> = (1..n).map(|v| ((v - 1) / r, v)).collect();
    make(n, &e)
}

/// `rows × cols` grid graph.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                e.push((v, v + 1));
            }
            if r + 1 < rows {
                e.push((v, v + cols));
            }
        }
    }
    make(rows * cols, &e)
}
