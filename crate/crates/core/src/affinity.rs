//! Affinity propagation over configurations.
//!
//! Responsibilities and availabilities are exchanged with damping until the
//! exemplar set stops changing. There is no randomness anywhere, so equal
//! inputs always give equal exemplars.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workspace::Config;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    /// Median of the off-diagonal similarities.
    Median,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct APConfig {
    pub damping: f64,
    pub max_iterations: usize,
    /// Iterations the exemplar set must stay unchanged. Damped messages move
    /// by a factor `1 − damping` per iteration, so the window has to span
    /// many such time constants or a transient set is taken as final.
    pub convergence_window: usize,
    pub preference: Preference,
}

impl Default for APConfig {
    fn default() -> Self {
        Self {
            damping: 0.9,
            max_iterations: 1000,
            convergence_window: 100,
            preference: Preference::Median,
        }
    }
}

impl APConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::usage(format!("damping {} not in [0.5, 1)", self.damping)));
        }
        if self.convergence_window < 1 || self.max_iterations < self.convergence_window {
            return Err(Error::usage(
                "need max_iterations ≥ convergence_window ≥ 1",
            ));
        }
        if let Preference::Value(p) = self.preference {
            if !p.is_finite() {
                return Err(Error::usage("preference must be finite"));
            }
        }
        Ok(())
    }
}

/// Row-major `n×n` similarities.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    n: usize,
    values: Vec<f64>,
}

impl Similarity {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n + k]
    }
}

/// `s(i,k) = −‖pᵢ − p_k‖²` off the diagonal; the diagonal holds the preference.
pub fn similarity_matrix(points: &[Config], preference: Preference) -> Similarity {
    let n = points.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            if i != k {
                values[i * n + k] = -points[i].distance_sq(&points[k]);
            }
        }
    }
    let pref = match preference {
        Preference::Value(p) => p,
        Preference::Median => {
            let mut off: Vec<f64> = (0..n)
                .flat_map(|i| (0..n).filter(move |&k| k != i).map(move |k| (i, k)))
                .map(|(i, k)| values[i * n + k])
                .collect();
            if off.is_empty() {
                0.0
            } else {
                off.sort_by(f64::total_cmp);
                let m = off.len();
                if m % 2 == 1 {
                    off[m / 2]
                } else {
                    0.5 * (off[m / 2 - 1] + off[m / 2])
                }
            }
        }
    };
    for i in 0..n {
        values[i * n + i] = pref;
    }
    Similarity { n, values }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    /// Input indices of the exemplars, ordered by the smallest input index
    /// assigned to each.
    pub exemplar_indices: Vec<usize>,
    pub exemplars: Vec<Config>,
    /// For every input, the input index of its exemplar.
    pub assignment: Vec<usize>,
    /// False when the exemplar set never stabilized (or never appeared) and
    /// the result was read off the final messages.
    pub converged: bool,
    pub iterations: usize,
}

impl ClusterResult {
    /// Largest distance from an exemplar to one of its members, per exemplar.
    pub fn cluster_radii(&self, points: &[Config]) -> Vec<f64> {
        self.exemplar_indices
            .iter()
            .map(|&e| {
                self.assignment
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a == e)
                    .map(|(i, _)| points[i].distance(&points[e]))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// `Σᵢ s(i, exemplar(i))` without the preference terms, i.e. the negated
    /// sum of squared distances to assigned exemplars.
    pub fn net_similarity(&self, points: &[Config]) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &e)| -points[i].distance_sq(&points[e]))
            .sum()
    }
}

pub fn affinity_propagate(points: &[Config], cfg: &APConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let n = points.len();
    if n == 0 {
        return Err(Error::usage("affinity propagation needs at least one point"));
    }
    let s = similarity_matrix(points, cfg.preference);
    let lam = cfg.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut exemplars: Vec<usize> = Vec::new();
    let mut stable = 0;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iterations {
        iterations += 1;
        for i in 0..n {
            let (mut best, mut second, mut best_k) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = a[i * n + k] + s.get(i, k);
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let other = if k == best_k { second } else { best };
                // With n = 1 there is no competitor; r = s(k,k).
                let other = if other == f64::NEG_INFINITY { 0.0 } else { other };
                let new = s.get(i, k) - other;
                r[i * n + k] = lam * r[i * n + k] + (1.0 - lam) * new;
            }
        }
        for k in 0..n {
            let pos: f64 = (0..n)
                .filter(|&i| i != k)
                .map(|i| r[i * n + k].max(0.0))
                .sum();
            for i in 0..n {
                let new = if i == k {
                    pos
                } else {
                    (r[k * n + k] + pos - r[i * n + k].max(0.0)).min(0.0)
                };
                a[i * n + k] = lam * a[i * n + k] + (1.0 - lam) * new;
            }
        }
        let current: Vec<usize> = (0..n).filter(|&k| r[k * n + k] + a[k * n + k] > 0.0).collect();
        if !current.is_empty() && current == exemplars {
            stable += 1;
        } else {
            stable = 1;
        }
        exemplars = current;
        if !exemplars.is_empty() && stable >= cfg.convergence_window {
            converged = true;
            break;
        }
    }

    if exemplars.is_empty() {
        converged = false;
        let total = |k: usize| -> f64 { (0..n).filter(|&i| i != k).map(|i| s.get(i, k)).sum() };
        let best = (0..n)
            .max_by(|&x, &y| total(x).total_cmp(&total(y)).then(y.cmp(&x)))
            .unwrap();
        exemplars = vec![best];
    }

    let assignment: Vec<usize> = (0..n)
        .map(|i| {
            if exemplars.contains(&i) {
                return i;
            }
            let mut best = exemplars[0];
            for &k in &exemplars[1..] {
                if s.get(i, k) > s.get(i, best) {
                    best = k;
                }
            }
            best
        })
        .collect();

    let mut result = ClusterResult {
        exemplar_indices: exemplars.clone(),
        exemplars: Vec::new(),
        assignment,
        converged,
        iterations,
    };
    let identity: Vec<usize> = (0..n).collect();
    result.exemplar_indices = exemplar_order(&result, &identity);
    result.exemplars = result
        .exemplar_indices
        .iter()
        .map(|&e| points[e].clone())
        .collect();
    Ok(result)
}

/// Exemplar input indices sorted by the smallest `original_order` value among
/// their members, ties broken by the exemplar's own position.
fn exemplar_order(result: &ClusterResult, original_order: &[usize]) -> Vec<usize> {
    let mut keyed: Vec<(usize, usize, usize)> = result
        .exemplar_indices
        .iter()
        .map(|&e| {
            let first = result
                .assignment
                .iter()
                .enumerate()
                .filter(|(_, &a)| a == e)
                .map(|(i, _)| original_order[i])
                .min()
                .unwrap_or(original_order[e]);
            (first, original_order[e], e)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, _, e)| e).collect()
}

/// Exemplars in path order: ascending by the earliest waypoint index assigned
/// to each, `original_order[i]` being the waypoint index of input `i`.
pub fn order_exemplars(result: &ClusterResult, points: &[Config], original_order: &[usize]) -> Result<Vec<Config>> {
    if original_order.len() != result.assignment.len() || points.len() != result.assignment.len() {
        return Err(Error::usage("order/points must cover every clustered input"));
    }
    Ok(exemplar_order(result, original_order)
        .into_iter()
        .map(|e| points[e].clone())
        .collect())
}
