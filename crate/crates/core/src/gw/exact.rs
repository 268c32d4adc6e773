//! Near-exact GW values for tiny instances, for checking the proximal solver.
//!
//! The transport polytope of an `n x m` problem with `n * m <= 16` has few
//! enough vertices to list outright: every vertex is supported on a spanning
//! tree of the complete bipartite graph. The quadratic objective is then
//! minimized by Frank-Wolfe with exact line search from every vertex and a
//! set of interior starts, using the vertex list as the linear oracle.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_CELLS: usize = 16;

const FW_ITERS: usize = 400;
const INTERIOR_STARTS: usize = 24;

struct Quadratic {
    /// `q[(i,k),(j,l)] = (a_ij - b_kl)^2`, flattened over cells `i*m + k`.
    q: Vec<f64>,
    cells: usize,
}

impl Quadratic {
    fn new(a: &Array2<f64>, b: &Array2<f64>) -> Self {
        let (n, m) = (a.nrows(), b.nrows());
        let cells = n * m;
        let mut q = vec![0.0; cells * cells];
        for i in 0..n {
            for k in 0..m {
                for j in 0..n {
                    for l in 0..m {
                        q[(i * m + k) * cells + j * m + l] = (a[[i, j]] - b[[k, l]]).powi(2);
                    }
                }
            }
        }
        Quadratic { q, cells }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cells)
            .map(|r| {
                self.q[r * self.cells..(r + 1) * self.cells]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Vertices of the transport polytope with marginals `r` and `c`, flattened
/// row-major.
pub fn polytope_vertices(r: &[f64], c: &[f64]) -> Vec<Vec<f64>> {
    let (n, m) = (r.len(), c.len());
    let cells = n * m;
    let size = n + m - 1;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..size).collect();
    loop {
        if let Some(v) = tree_solution(&subset, r, c) {
            if !out.iter().any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12)) {
                out.push(v);
            }
        }
        // Next combination in lexicographic order.
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < cells - size + i {
                subset[i] += 1;
                for j in i + 1..size {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the marginal equations on a support that must form a spanning
/// tree of the row/column bipartite graph; `None` if it does not or the
/// solution is negative.
fn tree_solution(support: &[usize], r: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let (n, m) = (r.len(), c.len());
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &cell in support {
        let (ra, cb) = (find(&mut parent, cell / m), find(&mut parent, n + cell % m));
        if ra == cb {
            return None;
        }
        parent[ra] = cb;
    }
    let mut remaining: Vec<f64> = r.iter().chain(c).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &cell in support {
        degree[cell / m] += 1;
        degree[n + cell % m] += 1;
    }
    let mut alive = vec![true; support.len()];
    let mut x = vec![0.0; n * m];
    for _ in 0..support.len() {
        let (e, leaf) = support
            .iter()
            .enumerate()
            .filter(|&(e, _)| alive[e])
            .find_map(|(e, &cell)| {
                let (u, v) = (cell / m, n + cell % m);
                if degree[u] == 1 {
                    Some((e, u))
                } else if degree[v] == 1 {
                    Some((e, v))
                } else {
                    None
                }
            })?;
        let cell = support[e];
        let (u, v) = (cell / m, n + cell % m);
        let other = if leaf == u { v } else { u };
        let val = remaining[leaf];
        if val < -1e-12 {
            return None;
        }
        let val = val.max(0.0);
        x[cell] = val;
        remaining[leaf] -= val;
        remaining[other] -= val;
        degree[u] -= 1;
        degree[v] -= 1;
        alive[e] = false;
    }
    if remaining.iter().any(|v| v.abs() > 1e-9) {
        return None;
    }
    Some(x)
}

fn frank_wolfe(quad: &Quadratic, vertices: &[Vec<f64>], mut x: Vec<f64>) -> f64 {
    let mut qx = quad.apply(&x);
    let mut value = dot(&x, &qx);
    for _ in 0..FW_ITERS {
        // Gradient is 2 Q x; the LMO scans the vertex list.
        let best = vertices
            .iter()
            .map(|v| (dot(v, &qx), v))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
            .expect("polytope has at least one vertex");
        let d: Vec<f64> = best.iter().zip(&x).map(|(v, xi)| v - xi).collect();
        let slope = 2.0 * dot(&d, &qx);
        if slope > -1e-15 {
            break;
        }
        let qd = quad.apply(&d);
        let curv = dot(&d, &qd);
        let f = |g: f64| value + g * slope + g * g * curv;
        let mut step = 1.0;
        if curv > 0.0 {
            step = (-slope / (2.0 * curv)).clamp(0.0, 1.0);
        }
        if f(1.0) < f(step) {
            step = 1.0;
        }
        for ((xi, di), (qxi, qdi)) in x.iter_mut().zip(&d).zip(qx.iter_mut().zip(&qd)) {
            *xi += step * di;
            *qxi += step * qdi;
        }
        value = dot(&x, &qx);
    }
    quad.value(&x)
}

/// Smallest GW objective found over the transport polytope of `(mu_a, mu_b)`.
pub fn gw_distance_exact_small(
    a: &Array2<f64>,
    b: &Array2<f64>,
    mu_a: &Array1<f64>,
    mu_b: &Array1<f64>,
) -> Result<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    if a.ncols() != n || b.ncols() != m || mu_a.len() != n || mu_b.len() != m {
        return Err(Error::dims(
            "square relations with matching measures",
            format!("{n}x{m}"),
        ));
    }
    if n * m > MAX_CELLS || n == 0 || m == 0 {
        return Err(Error::domain(format!(
            "exact GW limited to {MAX_CELLS} cells, got {n}x{m}"
        )));
    }
    let quad = Quadratic::new(a, b);
    let vertices = polytope_vertices(mu_a.as_slice().unwrap(), mu_b.as_slice().unwrap());
    let mut best = f64::INFINITY;
    for v in &vertices {
        best = best.min(quad.value(v));
        best = best.min(frank_wolfe(&quad, &vertices, v.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let product: Vec<f64> = (0..n * m).map(|c| mu_a[c / m] * mu_b[c % m]).collect();
    best = best.min(frank_wolfe(&quad, &vertices, product));
    for _ in 0..INTERIOR_STARTS {
        let weights: Vec<f64> = vertices.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = weights.iter().sum();
        let mut x = vec![0.0; n * m];
        for (w, v) in weights.iter().zip(&vertices) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += w / total * vi;
            }
        }
        best = best.min(frank_wolfe(&quad, &vertices, x));
    }
    Ok(best.max(0.0))
}
