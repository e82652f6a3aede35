//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing in here is called by the library proper. The `selftest` command
//! and the test suites compare against these.

/// Direct double-loop Gaussian KDE at each grid point.
pub fn naive_kde(samples: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let n = samples.len() as f64;
    let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    grid.iter()
        .map(|&g| {
            let mut acc = 0.0;
            for &x in samples {
                let u = (g - x) / h;
                acc += c * (-u * u / 2.0).exp();
            }
            acc / (n * h)
        })
        .collect()
}

/// W1 between two empirical measures as an optimal-transport linear program,
/// solved exactly as an integer min-cost flow.
///
/// Atom `a_i` carries `m` units and `b_j` carries `n` units, so total flow is
/// `n·m` and the optimal cost divided by `n·m` is the distance.
pub fn transport_w1(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0, "transport needs nonempty samples");
    let source = 0;
    let sink = n + m + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    for (i, &x) in a.iter().enumerate() {
        net.add_edge(source, 1 + i, m as i64, 0.0);
        for (j, &y) in b.iter().enumerate() {
            net.add_edge(1 + i, 1 + n + j, (n * m) as i64, (x - y).abs());
        }
    }
    for j in 0..m {
        net.add_edge(1 + n + j, sink, n as i64, 0.0);
    }
    let (flow, cost) = net.min_cost_flow(source, sink);
    assert_eq!(flow, (n * m) as i64);
    cost / (n * m) as f64
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct FlowNetwork {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    /// Successive shortest paths with Bellman–Ford.
    fn min_cost_flow(&mut self, s: usize, t: usize) -> (i64, f64) {
        let nodes = self.adj.len();
        let (mut flow, mut cost) = (0i64, 0.0);
        loop {
            let mut dist = vec![f64::INFINITY; nodes];
            let mut via = vec![usize::MAX; nodes];
            dist[s] = 0.0;
            for _ in 0..nodes {
                let mut changed = false;
                for u in 0..nodes {
                    if dist[u].is_infinite() {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let edge = &self.edges[e];
                        if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                            dist[edge.to] = dist[u] + edge.cost;
                            via[edge.to] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t].is_infinite() {
                return (flow, cost);
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                let e = via[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                cost += push as f64 * self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
            flow += push;
        }
    }
}

/// Upper-tail F probabilities `P(F(d1, d2) > f)` evaluated with 50-digit
/// arithmetic: `(f, d1, d2, probability)`.
#[allow(clippy::excessive_precision)]
pub const F_UPPER_TAIL: &[(f64, f64, f64, f64)] = &[
    (1.0, 1.0, 8.0, 0.346_593_507_087_334_3),
    (0.5, 1.0, 8.0, 0.499_575_894_363_259_2),
    (5.0, 1.0, 8.0, 0.055_766_528_900_996_16),
    (1.15827, 1.0, 8.0, 0.313_206_637_065_347_6),
    (4.0, 1.0, 9.0, 0.076_552_823_770_701_04),
    (12.3, 2.0, 5.0, 0.011_727_237_840_788_017),
    (0.01, 3.0, 7.0, 0.998_495_247_040_111_7),
    (2.5, 5.0, 10.0, 0.102_002_276_644_269_8),
    (50.0, 1.0, 8.0, 0.000_104_953_622_479_973_45),
    (250.0, 1.0, 3.0, 0.000_549_973_797_350_436_3),
    (3.3, 10.0, 40.0, 0.003_363_539_200_392_550_7),
    (0.8, 4.0, 4.0, 0.582_990_397_805_212_6),
    (100.0, 2.0, 2.0, 0.009_900_990_099_009_901),
    (1.0e4, 1.0, 8.0, 1.116_780_304_825_597_6e-13),
    (7.7, 1.0, 1.0, 0.220_198_823_815_171_53),
    (0.2, 6.0, 30.0, 0.974_177_071_328_32),
];
