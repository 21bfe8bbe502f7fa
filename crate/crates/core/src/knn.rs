//! Exact k-nearest-neighbor search under squared L2 distance.
//!
//! Two query paths exist and must return identical results: a naive full
//! scan over the datastore, and an inverted-file layout that groups keys
//! into partitions (coarse k-means clusters) for cache-friendly scanning.
//! Every partition is probed, so the partitioned path is exact by
//! construction; partitioning buys memory locality, not recall trade-offs.
//!
//! Distances accumulate in double precision while keys stay in single
//! precision. Both paths share one distance kernel, so their results agree
//! bit for bit.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::datastore::Datastore;
use crate::error::CoreError;
use crate::prob::{normalize, ProbDist};
use crate::rng::SplitMix64;
use crate::Result;

/// One retrieved entry: datastore id, squared L2 distance, token value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f64,
    pub value: u32,
}

/// Retrieved neighbors sorted by ascending distance, ties by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    entries: Vec<Neighbor>,
    k_requested: usize,
}

impl NeighborSet {
    /// Assemble from pre-sorted entries: ascending distance, equal distances
    /// by ascending id, all distances finite and non-negative.
    pub fn from_entries(entries: Vec<Neighbor>, k_requested: usize) -> Result<Self> {
        for (i, n) in entries.iter().enumerate() {
            if !n.distance.is_finite() || n.distance < 0.0 {
                return Err(CoreError::NonFinite {
                    what: "neighbor distance",
                    index: i,
                });
            }
        }
        for pair in entries.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.distance < a.distance || (b.distance == a.distance && b.id <= a.id) {
                return Err(CoreError::InvalidConfig(
                    "neighbor entries must be sorted by (distance, id)".to_string(),
                ));
            }
        }
        Ok(NeighborSet {
            entries,
            k_requested,
        })
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Search parameters: neighbor count and partition count for the
/// inverted-file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexParams {
    pub k: usize,
    pub n_partitions: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            k: 1024,
            n_partitions: 1,
        }
    }
}

impl IndexParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(CoreError::InvalidConfig("k must be >= 1".to_string()));
        }
        if self.n_partitions == 0 {
            return Err(CoreError::InvalidConfig(
                "n_partitions must be >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Squared Euclidean distance, accumulated in `f64` over four lanes.
///
/// All search paths and the kNN distribution use this single kernel; the
/// fixed lane structure keeps results bit-identical everywhere.
pub fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for lane in 0..4 {
            let d = xa[lane] as f64 - xb[lane] as f64;
            acc[lane] += d * d;
        }
    }
    for (i, (&x, &y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        let d = x as f64 - y as f64;
        acc[i] += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Scored entry ordered by (distance, id).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    distance: f64,
    id: u32,
    value: u32,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        // Distances are finite by construction (keys and queries are
        // validated), so total order is safe.
        self.distance
            .partial_cmp(&other.distance)
            .expect("finite distances")
            .then(self.id.cmp(&other.id))
    }
}

/// Keep the k smallest candidates under the (distance, id) order, sorted
/// ascending. Quickselect first, then sort only the survivors; the result
/// set is unique, so the selection algorithm cannot affect it.
fn select_top_k(mut candidates: Vec<Candidate>, k: usize) -> Vec<Neighbor> {
    if k < candidates.len() {
        candidates.select_nth_unstable(k);
        candidates.truncate(k);
    }
    candidates.sort_unstable();
    candidates
        .into_iter()
        .map(|c| Neighbor {
            id: c.id,
            distance: c.distance,
            value: c.value,
        })
        .collect()
}

fn validate_query(query: &[f32], dim: usize, k: usize, count: usize) -> Result<()> {
    if k == 0 {
        return Err(CoreError::InvalidConfig("k must be >= 1".to_string()));
    }
    if query.len() != dim {
        return Err(CoreError::ShapeMismatch {
            what: "query dimension vs datastore",
            expected: dim,
            got: query.len(),
        });
    }
    for (i, &x) in query.iter().enumerate() {
        if !x.is_finite() {
            return Err(CoreError::NonFinite {
                what: "query",
                index: i,
            });
        }
    }
    if count == 0 {
        return Err(CoreError::EmptyDatastore);
    }
    Ok(())
}

/// Naive full scan over a datastore; the reference path.
pub fn brute_force_search(ds: &Datastore, query: &[f32], k: usize) -> Result<NeighborSet> {
    validate_query(query, ds.dim(), k, ds.count())?;
    let mut candidates = Vec::with_capacity(ds.count());
    for (i, (key, &value)) in ds
        .keys()
        .chunks_exact(ds.dim())
        .zip(ds.values())
        .enumerate()
    {
        candidates.push(Candidate {
            distance: squared_l2(query, key),
            id: i as u32,
            value,
        });
    }
    Ok(NeighborSet {
        entries: select_top_k(candidates, k),
        k_requested: k,
    })
}

const PARTITION_SEED: u64 = 0x1F2E_3D4C_5B6A_7988;
const KMEANS_ITERS: usize = 8;

/// Inverted-file index: keys regrouped by coarse cluster for locality.
///
/// Read-only after construction; concurrent searches share it freely.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    dim: usize,
    count: usize,
    /// Partition-major copies of the keys and values.
    keys: Vec<f32>,
    values: Vec<u32>,
    /// Original datastore entry id per slot.
    ids: Vec<u32>,
    /// Partition boundaries into the arrays above (len = partitions + 1).
    offsets: Vec<usize>,
}

/// Default partition count for a store of `count` entries.
pub fn auto_partitions(count: usize) -> usize {
    (count / 256).clamp(1, 64)
}

impl KnnIndex {
    /// Build with an explicit partition count (clamped to the entry count).
    pub fn build(ds: &Datastore, n_partitions: usize) -> Result<Self> {
        if n_partitions == 0 {
            return Err(CoreError::InvalidConfig(
                "n_partitions must be >= 1".to_string(),
            ));
        }
        let count = ds.count();
        let dim = ds.dim();
        let parts = n_partitions.min(count.max(1));
        let assignment = partition_assignments(ds, parts);

        let mut sizes = vec![0usize; parts];
        for &p in &assignment {
            sizes[p as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(parts + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }

        let mut keys = vec![0.0f32; count * dim];
        let mut values = vec![0u32; count];
        let mut ids = vec![0u32; count];
        let mut cursor = offsets[..parts].to_vec();
        // Entries visited in id order, so slots within a partition keep
        // ascending original ids.
        for i in 0..count {
            let p = assignment[i] as usize;
            let slot = cursor[p];
            cursor[p] += 1;
            keys[slot * dim..(slot + 1) * dim].copy_from_slice(ds.key(i));
            values[slot] = ds.value(i);
            ids[slot] = i as u32;
        }

        Ok(KnnIndex {
            dim,
            count,
            keys,
            values,
            ids,
            offsets,
        })
    }

    /// Build with [`auto_partitions`].
    pub fn from_store(ds: &Datastore) -> Result<Self> {
        Self::build(ds, auto_partitions(ds.count()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn n_partitions(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Exact search: scans every partition, returns the `min(k, count)`
    /// nearest entries ordered by (distance, original id).
    pub fn search(&self, query: &[f32], k: usize) -> Result<NeighborSet> {
        validate_query(query, self.dim, k, self.count)?;
        let mut candidates = Vec::with_capacity(self.count);
        for p in 0..self.n_partitions() {
            let (start, end) = (self.offsets[p], self.offsets[p + 1]);
            let keys = &self.keys[start * self.dim..end * self.dim];
            for (off, key) in keys.chunks_exact(self.dim).enumerate() {
                let slot = start + off;
                candidates.push(Candidate {
                    distance: squared_l2(query, key),
                    id: self.ids[slot],
                    value: self.values[slot],
                });
            }
        }
        Ok(NeighborSet {
            entries: select_top_k(candidates, k),
            k_requested: k,
        })
    }
}

/// Seeded Lloyd k-means over the keys; returns a partition per entry.
/// Deterministic: fixed seed, fixed iteration count, ties toward the lower
/// centroid index.
fn partition_assignments(ds: &Datastore, parts: usize) -> Vec<u32> {
    let count = ds.count();
    if parts <= 1 || count <= parts {
        return vec![0; count];
    }
    let dim = ds.dim();
    let mut rng = SplitMix64::new(PARTITION_SEED ^ (count as u64).rotate_left(17));

    // Initial centroids: distinct random entries.
    let mut chosen = Vec::with_capacity(parts);
    while chosen.len() < parts {
        let idx = rng.next_range(count as u64) as usize;
        if !chosen.contains(&idx) {
            chosen.push(idx);
        }
    }
    let mut centroids: Vec<f64> = Vec::with_capacity(parts * dim);
    for &idx in &chosen {
        centroids.extend(ds.key(idx).iter().map(|&x| x as f64));
    }

    let mut assignment = vec![0u32; count];
    let mut sums = vec![0.0f64; parts * dim];
    let mut counts = vec![0usize; parts];
    for _ in 0..KMEANS_ITERS {
        for i in 0..count {
            let key = ds.key(i);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (p, centroid) in centroids.chunks_exact(dim).enumerate() {
                let mut d = 0.0;
                for (a, &b) in key.iter().zip(centroid) {
                    let diff = *a as f64 - b;
                    d += diff * diff;
                }
                if d < best_d {
                    best_d = d;
                    best = p;
                }
            }
            assignment[i] = best as u32;
        }
        sums.iter_mut().for_each(|x| *x = 0.0);
        counts.iter_mut().for_each(|x| *x = 0);
        for i in 0..count {
            let p = assignment[i] as usize;
            counts[p] += 1;
            for (d, &x) in ds.key(i).iter().enumerate() {
                sums[p * dim + d] += x as f64;
            }
        }
        for p in 0..parts {
            if counts[p] > 0 {
                for d in 0..dim {
                    centroids[p * dim + d] = sums[p * dim + d] / counts[p] as f64;
                }
            }
            // Empty partitions keep their previous centroid.
        }
    }
    assignment
}

/// Softmax-over-negative-distance aggregation of a neighbor set into a
/// distribution over the vocabulary (temperature `tau` divides the squared
/// distance). Tokens absent from the set get zero probability.
///
/// The minimum distance is subtracted before exponentiation; the shift
/// cancels under normalization and keeps the weights away from underflow.
pub fn knn_distribution(ns: &NeighborSet, vocab_size: usize, tau: f64) -> Result<ProbDist> {
    if ns.is_empty() {
        return Err(CoreError::EmptyNeighbors);
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(CoreError::InvalidConfig("tau must be > 0".to_string()));
    }
    let d_min = ns.entries()[0].distance;
    let mut mass = vec![0.0f64; vocab_size];
    for n in ns.entries() {
        let slot = mass
            .get_mut(n.value as usize)
            .ok_or(CoreError::ValueOutOfRange {
                index: n.id as usize,
                value: n.value,
                vocab_size,
            })?;
        *slot += libm::exp(-(n.distance - d_min) / tau);
    }
    normalize(&mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::StoreLang;

    fn store(points: &[(f32, f32)], values: &[u32]) -> Datastore {
        let keys: Vec<f32> = points.iter().flat_map(|&(x, y)| [x, y]).collect();
        Datastore::from_parts(StoreLang::All, 2, keys, values.to_vec()).unwrap()
    }

    #[test]
    fn kernel_hand_values() {
        assert_eq!(squared_l2(&[0.0, 0.0], &[3.0, 4.0]), 25.0);
        assert_eq!(squared_l2(&[1.0], &[1.0]), 0.0);
        // Length 5 exercises the remainder lanes.
        assert_eq!(
            squared_l2(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0, 0.0, 0.0, 0.0, 0.0]),
            55.0
        );
    }

    #[test]
    fn kernel_close_to_naive_order() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let n = 1 + (rng.next_u64() % 64) as usize;
            let a: Vec<f32> = (0..n).map(|_| rng.next_gaussian() as f32).collect();
            let b: Vec<f32> = (0..n).map(|_| rng.next_gaussian() as f32).collect();
            let naive: f64 = a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| {
                    let d = x as f64 - y as f64;
                    d * d
                })
                .sum();
            let fast = squared_l2(&a, &b);
            assert!((fast - naive).abs() <= 1e-10 * naive.max(1.0));
        }
    }

    #[test]
    fn search_exact_match() {
        let ds = store(&[(0.0, 0.0), (3.0, 4.0)], &[7, 9]);
        let ns = brute_force_search(&ds, &[0.0, 0.0], 1).unwrap();
        assert_eq!(ns.len(), 1);
        assert_eq!(ns.entries()[0].id, 0);
        assert_eq!(ns.entries()[0].distance, 0.0);
        assert_eq!(ns.entries()[0].value, 7);
    }

    #[test]
    fn search_k_exceeds_count() {
        let ds = store(&[(0.0, 0.0), (3.0, 4.0)], &[7, 9]);
        let ns = brute_force_search(&ds, &[0.0, 0.0], 5).unwrap();
        assert_eq!(ns.len(), 2);
        assert_eq!(ns.k_requested(), 5);
        // Hand value: 3^2 + 4^2.
        assert_eq!(ns.entries()[1].distance, 25.0);
    }

    #[test]
    fn search_duplicate_keys_tie_by_id() {
        let ds = store(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)], &[5, 6, 7]);
        let ns = brute_force_search(&ds, &[1.0, 1.0], 3).unwrap();
        let ids: Vec<u32> = ns.entries().iter().map(|n| n.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn search_error_paths() {
        let ds = store(&[(0.0, 0.0)], &[1]);
        assert!(matches!(
            brute_force_search(&ds, &[0.0], 1),
            Err(CoreError::ShapeMismatch { .. })
        ));
        assert!(brute_force_search(&ds, &[0.0, 0.0], 0).is_err());
        let empty = Datastore::from_parts(StoreLang::All, 2, vec![], vec![]).unwrap();
        assert!(matches!(
            brute_force_search(&empty, &[0.0, 0.0], 1),
            Err(CoreError::EmptyDatastore)
        ));
        let idx = KnnIndex::from_store(&empty).unwrap();
        assert!(matches!(
            idx.search(&[0.0, 0.0], 1),
            Err(CoreError::EmptyDatastore)
        ));
    }

    #[test]
    fn partitioned_matches_brute_force() {
        let mut rng = SplitMix64::new(0xACE);
        let dim = 8;
        let count = 500;
        let keys: Vec<f32> = (0..count * dim).map(|_| rng.next_gaussian() as f32).collect();
        let values: Vec<u32> = (0..count).map(|_| rng.next_range(20) as u32).collect();
        let ds = Datastore::from_parts(StoreLang::All, dim, keys, values).unwrap();
        for parts in [1, 3, 7] {
            let idx = KnnIndex::build(&ds, parts).unwrap();
            for _ in 0..20 {
                let q: Vec<f32> = (0..dim).map(|_| rng.next_gaussian() as f32).collect();
                for k in [1, 17, 600] {
                    let a = brute_force_search(&ds, &q, k).unwrap();
                    let b = idx.search(&q, k).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn distribution_single_neighbor() {
        let ds = store(&[(0.0, 0.0)], &[2]);
        let ns = brute_force_search(&ds, &[0.1, 0.0], 1).unwrap();
        let p = knn_distribution(&ns, 4, 1.0).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn distribution_equal_distances_split() {
        let ds = store(&[(1.0, 0.0), (-1.0, 0.0)], &[1, 2]);
        let ns = brute_force_search(&ds, &[0.0, 0.0], 2).unwrap();
        let p = knn_distribution(&ns, 3, 1.0).unwrap();
        assert_eq!(p.as_slice()[1], 0.5);
        assert_eq!(p.as_slice()[2], 0.5);
    }

    #[test]
    fn distribution_hand_softmax() {
        // Hand oracle: exp(0) = 1 and exp(-0.6931) = 0.50002; masses
        // normalize to 2/3 and 1/3.
        let entries = vec![
            Neighbor {
                id: 0,
                distance: 0.0,
                value: 0,
            },
            Neighbor {
                id: 1,
                distance: 0.6931,
                value: 1,
            },
        ];
        let ns = NeighborSet {
            entries,
            k_requested: 2,
        };
        let p = knn_distribution(&ns, 2, 1.0).unwrap();
        assert!((p.as_slice()[0] - 2.0 / 3.0).abs() < 1e-4);
        assert!((p.as_slice()[1] - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn distribution_shift_invariant() {
        let base = vec![
            Neighbor {
                id: 0,
                distance: 1.5,
                value: 0,
            },
            Neighbor {
                id: 1,
                distance: 2.25,
                value: 1,
            },
            Neighbor {
                id: 2,
                distance: 4.0,
                value: 1,
            },
        ];
        let shifted: Vec<Neighbor> = base
            .iter()
            .map(|n| Neighbor {
                distance: n.distance + 100.0,
                ..*n
            })
            .collect();
        let a = knn_distribution(
            &NeighborSet {
                entries: base,
                k_requested: 3,
            },
            2,
            0.7,
        )
        .unwrap();
        let b = knn_distribution(
            &NeighborSet {
                entries: shifted,
                k_requested: 3,
            },
            2,
            0.7,
        )
        .unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn distribution_monotone_in_distance() {
        let mk = |d0: f64| NeighborSet {
            entries: vec![
                Neighbor {
                    id: 0,
                    distance: d0,
                    value: 0,
                },
                Neighbor {
                    id: 1,
                    distance: 3.0,
                    value: 1,
                },
            ],
            k_requested: 2,
        };
        let near = knn_distribution(&mk(1.0), 2, 1.0).unwrap();
        let nearer = knn_distribution(&mk(0.5), 2, 1.0).unwrap();
        assert!(nearer.as_slice()[0] > near.as_slice()[0]);
    }

    #[test]
    fn distribution_rejects_empty_and_bad_tau() {
        let empty = NeighborSet {
            entries: vec![],
            k_requested: 4,
        };
        assert!(matches!(
            knn_distribution(&empty, 2, 1.0),
            Err(CoreError::EmptyNeighbors)
        ));
        let ns = NeighborSet {
            entries: vec![Neighbor {
                id: 0,
                distance: 0.0,
                value: 0,
            }],
            k_requested: 1,
        };
        assert!(knn_distribution(&ns, 2, 0.0).is_err());
        assert!(knn_distribution(&ns, 2, -1.0).is_err());
    }
}
