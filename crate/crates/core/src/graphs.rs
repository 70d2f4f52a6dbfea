//! Exhaustive labeled-graph ensembles with triangle-count observables.
//!
//! Graph id `g` on `N` vertices sets bit `k` when the `k`-th vertex pair
//! `(i, j)`, `i < j`, in lexicographic order is an edge: bit 0 is `(0, 1)`,
//! bit 1 is `(0, 2)`, ..., bit `N - 2` is `(0, N - 1)`, then `(1, 2)`, and so on.

use rayon::prelude::*;

use crate::el::{self, Sample};
use crate::maxent;
use crate::{Error, Result};

pub const MIN_VERTICES: usize = 3;
pub const MAX_VERTICES: usize = 8;

/// Vertex pairs in edge-bit order.
pub fn edge_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Bit index of the pair `(i, j)`, `i < j`.
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Counts triangles through adjacency bitsets.
#[derive(Debug, Clone)]
pub struct TriangleCounter {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl TriangleCounter {
    pub fn new(n: usize) -> Result<Self> {
        check_vertices(n)?;
        Ok(Self { n, pairs: edge_pairs(n) })
    }

    pub fn count(&self, graph_id: u64) -> u32 {
        let mut adj = [0u16; MAX_VERTICES];
        let mut bits = graph_id;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            let (i, j) = self.pairs[k];
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
            bits &= bits - 1;
        }
        let mut total = 0;
        for i in 0..self.n {
            // neighbours j > i, then common neighbours beyond j
            let mut higher = adj[i] & !((2u16 << i) - 1);
            while higher != 0 {
                let j = higher.trailing_zeros() as usize;
                let above_j = !((2u16 << j) - 1);
                total += (adj[i] & adj[j] & above_j).count_ones();
                higher &= higher - 1;
            }
        }
        total
    }
}

fn check_vertices(n: usize) -> Result<()> {
    if !(MIN_VERTICES..=MAX_VERTICES).contains(&n) {
        return Err(Error::InvalidInput(format!("vertex count must lie in [{MIN_VERTICES}, {MAX_VERTICES}], got {n}")));
    }
    Ok(())
}

/// Triangle count of one graph. Bits beyond `C(n, 2)` are ignored.
pub fn triangle_count(n: usize, graph_id: u64) -> Result<u32> {
    Ok(TriangleCounter::new(n)?.count(graph_id))
}

/// Every labeled graph on `n_vertices` vertices with its triangle count.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEnsemble {
    n_vertices: usize,
    triangles: Vec<u8>,
}

impl GraphEnsemble {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// `C(N, 2)`
    pub fn edge_slots(&self) -> usize {
        self.n_vertices * (self.n_vertices - 1) / 2
    }

    /// `C(N, 3)`
    pub fn max_triangles(&self) -> u32 {
        let n = self.n_vertices as u32;
        n * (n - 1) * (n - 2) / 6
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangles(&self) -> &[u8] {
        &self.triangles
    }

    /// Realized triangle counts in increasing order with their multiplicities.
    pub fn histogram(&self) -> Vec<(u32, u64)> {
        let mut counts = vec![0u64; self.max_triangles() as usize + 1];
        for &t in &self.triangles {
            counts[t as usize] += 1;
        }
        counts.into_iter().enumerate().filter(|&(_, c)| c > 0).map(|(t, c)| (t as u32, c)).collect()
    }
}

/// Enumerates all `2^C(n,2)` labeled graphs.
pub fn enumerate(n: usize) -> Result<GraphEnsemble> {
    let counter = TriangleCounter::new(n)?;
    let total = 1usize << (n * (n - 1) / 2);
    let mut triangles = vec![0u8; total];
    triangles.par_chunks_mut(1 << 14).enumerate().for_each(|(chunk, out)| {
        let base = (chunk << 14) as u64;
        for (k, t) in out.iter_mut().enumerate() {
            *t = counter.count(base + k as u64) as u8;
        }
    });
    Ok(GraphEnsemble { n_vertices: n, triangles })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    EmpiricalLikelihood,
    MaxEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub t: u32,
    pub multiplicity: u64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleFit {
    pub method: FitMethod,
    pub h0: f64,
    /// `lambda_hat` for empirical likelihood, `kappa` for maximum entropy.
    pub multiplier: f64,
    /// One weight per graph id.
    pub graph_weights: Vec<f64>,
    /// Probability of each realized triangle count.
    pub marginal: Vec<MarginalRow>,
}

impl EnsembleFit {
    pub fn max_graph_weight(&self) -> f64 {
        self.graph_weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn marginal_mean(&self) -> f64 {
        self.marginal.iter().map(|r| f64::from(r.t) * r.p).sum()
    }

    pub fn marginal_probabilities(&self) -> Vec<f64> {
        self.marginal.iter().map(|r| r.p).collect()
    }
}

fn check_target(ensemble: &GraphEnsemble, h0: f64) -> Result<Vec<(u32, u64)>> {
    let hist = ensemble.histogram();
    let lo = f64::from(hist.first().map_or(0, |r| r.0));
    let hi = f64::from(hist.last().map_or(0, |r| r.0));
    if !(h0 > lo && h0 < hi) {
        return Err(Error::Infeasible(format!("h0 = {h0} must lie strictly inside the realized range [{lo}, {hi}]")));
    }
    Ok(hist)
}

/// Fits one weight per graph by solving on all `2^C(N,2)` constraint values.
pub fn fit_ensemble(ensemble: &GraphEnsemble, h0: f64, method: FitMethod, tol: f64) -> Result<EnsembleFit> {
    let hist = check_target(ensemble, h0)?;
    let (multiplier, graph_weights) = match method {
        FitMethod::EmpiricalLikelihood => {
            let sample = Sample::new(ensemble.triangles.iter().map(|&t| f64::from(t) - h0).collect())?;
            let sol = el::solve(&sample, tol)?;
            (sol.lambda_hat, sol.weights)
        }
        FitMethod::MaxEntropy => {
            let sample = Sample::new(ensemble.triangles.iter().map(|&t| f64::from(t)).collect())?;
            let sol = maxent::solve_maxent(&sample, h0, tol)?;
            (sol.kappa, sol.weights)
        }
    };
    let mut mass = vec![0.0; ensemble.max_triangles() as usize + 1];
    for (&t, &w) in ensemble.triangles.iter().zip(&graph_weights) {
        mass[t as usize] += w;
    }
    let marginal =
        hist.into_iter().map(|(t, multiplicity)| MarginalRow { t, multiplicity, p: mass[t as usize] }).collect();
    Ok(EnsembleFit { method, h0, multiplier, graph_weights, marginal })
}

/// Fits on the triangle-count histogram and expands to per-graph weights.
///
/// The dual equations only see the multiset of constraint values, so this
/// matches [`fit_ensemble`] while solving on at most `C(N,3) + 1` points.
pub fn fit_histogram(ensemble: &GraphEnsemble, h0: f64, method: FitMethod, tol: f64) -> Result<EnsembleFit> {
    let hist = check_target(ensemble, h0)?;
    let counts: Vec<u64> = hist.iter().map(|r| r.1).collect();
    let (multiplier, unit, group) = match method {
        FitMethod::EmpiricalLikelihood => {
            let values: Vec<f64> = hist.iter().map(|r| f64::from(r.0) - h0).collect();
            let sol = el::solve_grouped(&values, &counts, tol)?;
            (sol.lambda_hat, sol.unit_weights, sol.group_weights)
        }
        FitMethod::MaxEntropy => {
            let values: Vec<f64> = hist.iter().map(|r| f64::from(r.0)).collect();
            let sol = maxent::solve_maxent_grouped(&values, &counts, h0, tol)?;
            (sol.kappa, sol.unit_weights, sol.group_weights)
        }
    };
    let mut by_t = vec![0.0; ensemble.max_triangles() as usize + 1];
    for (r, &u) in hist.iter().zip(&unit) {
        by_t[r.0 as usize] = u;
    }
    let graph_weights = ensemble.triangles.iter().map(|&t| by_t[t as usize]).collect();
    let marginal = hist.iter().zip(group).map(|(&(t, multiplicity), p)| MarginalRow { t, multiplicity, p }).collect();
    Ok(EnsembleFit { method, h0, multiplier, graph_weights, marginal })
}

/// Number of local maxima of a sequence after dropping zero entries and
/// merging runs of equal values. Endpoints count when they exceed their
/// single neighbour.
pub fn local_maxima(p: &[f64]) -> usize {
    let mut seq: Vec<f64> = p.iter().copied().filter(|&v| v > 0.0).collect();
    seq.dedup();
    match seq.len() {
        0 => 0,
        1 => 1,
        len => (0..len)
            .filter(|&i| {
                let left = i == 0 || seq[i] > seq[i - 1];
                let right = i == len - 1 || seq[i] > seq[i + 1];
                left && right
            })
            .count(),
    }
}

/// Exactly one local maximum in the sense of [`local_maxima`].
pub fn is_unimodal(p: &[f64]) -> bool {
    local_maxima(p) == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_index_matches_pair_order() {
        for n in MIN_VERTICES..=MAX_VERTICES {
            for (k, &(i, j)) in edge_pairs(n).iter().enumerate() {
                assert_eq!(edge_index(n, i, j), k);
            }
        }
    }

    #[test]
    fn triangle_examples() {
        let n = 7;
        assert_eq!(triangle_count(n, 0).unwrap(), 0);
        assert_eq!(triangle_count(n, 1).unwrap(), 0);
        let tri = (1 << edge_index(n, 0, 1)) | (1 << edge_index(n, 0, 2)) | (1 << edge_index(n, 1, 2));
        assert_eq!(triangle_count(n, tri).unwrap(), 1);
        let complete = (1u64 << 21) - 1;
        assert_eq!(triangle_count(n, complete).unwrap(), 35);
        assert_eq!(triangle_count(n, complete & !(1 << edge_index(n, 2, 5))).unwrap(), 30);
        assert!(triangle_count(9, 0).is_err());
        assert!(triangle_count(2, 0).is_err());
    }

    #[test]
    fn small_ensemble() {
        let e = enumerate(4).unwrap();
        assert_eq!(e.len(), 64);
        assert_eq!(e.triangles()[0], 0);
        assert_eq!(e.triangles()[63], 4);
        // brute force over vertex triples
        let pairs = edge_pairs(4);
        for g in 0..64u64 {
            let has = |i: usize, j: usize| {
                let k = pairs.iter().position(|&p| p == (i, j)).unwrap();
                g & (1 << k) != 0
            };
            let mut t = 0;
            for a in 0..4 {
                for b in a + 1..4 {
                    for c in b + 1..4 {
                        if has(a, b) && has(a, c) && has(b, c) {
                            t += 1;
                        }
                    }
                }
            }
            assert_eq!(u32::from(e.triangles()[g as usize]), t, "graph {g}");
        }
    }

    #[test]
    fn histogram_sums_to_total() {
        let e = enumerate(5).unwrap();
        let h = e.histogram();
        assert_eq!(h.iter().map(|r| r.1).sum::<u64>(), 1 << 10);
        assert_eq!(h.first().unwrap().0, 0);
        assert_eq!(h.last().unwrap(), &(10, 1));
    }

    #[test]
    fn unimodality_check() {
        assert!(!is_unimodal(&[0.1, 0.3, 0.2, 0.0, 0.25]));
        assert!(is_unimodal(&[0.1, 0.3, 0.3, 0.2, 0.0, 0.05]));
        assert!(is_unimodal(&[0.5]));
        assert_eq!(local_maxima(&[0.3, 0.1, 0.2, 0.4]), 2);
        assert_eq!(local_maxima(&[0.1, 0.2, 0.3]), 1);
    }

    #[test]
    fn fit_rejects_out_of_range_target() {
        let e = enumerate(4).unwrap();
        assert!(fit_histogram(&e, 0.0, FitMethod::MaxEntropy, 1e-12).is_err());
        assert!(fit_ensemble(&e, 4.0, FitMethod::EmpiricalLikelihood, 1e-12).is_err());
    }

    #[test]
    fn histogram_and_full_fits_agree_small() {
        let e = enumerate(5).unwrap();
        for method in [FitMethod::EmpiricalLikelihood, FitMethod::MaxEntropy] {
            let full = fit_ensemble(&e, 3.0, method, 1e-12).unwrap();
            let hist = fit_histogram(&e, 3.0, method, 1e-12).unwrap();
            for (a, b) in full.marginal.iter().zip(&hist.marginal) {
                assert_eq!(a.t, b.t);
                assert!((a.p - b.p).abs() < 1e-12);
            }
            assert!((full.marginal_mean() - 3.0).abs() < 1e-9);
        }
    }
}
