//! Exact top-k cosine search over unit-normalized snippet vectors.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::vector::{norm, MIN_NORM};

/// Ids with L2-normalized vectors stored row-major as `f32`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchIndex {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<f32>,
}

impl SearchIndex {
    /// Normalizes every vector and keeps insertion order.
    ///
    /// All vectors must share one dimension; zero-norm vectors and repeated
    /// ids are rejected. An empty entry list gives an empty index of
    /// dimension 0.
    pub fn build<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut index = SearchIndex::default();
        let mut seen = BTreeSet::new();
        for (id, v) in entries {
            let id: String = id.into();
            if index.ids.is_empty() {
                index.dim = v.len();
            } else if v.len() != index.dim {
                return Err(Error::DimensionMismatch {
                    expected: index.dim,
                    actual: v.len(),
                });
            }
            let n = norm(&v);
            if !(n >= MIN_NORM) || !n.is_finite() {
                return Err(Error::ZeroNormEntry { id });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            index.vectors.extend(v.iter().map(|x| (x / n) as f32));
            index.ids.push(id);
        }
        Ok(index)
    }

    /// Rebuilds an index from stored parts without renormalizing.
    pub fn from_raw(dim: usize, ids: Vec<String>, vectors: Vec<f32>) -> Result<Self> {
        if vectors.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                actual: vectors.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(SearchIndex { dim, ids, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    /// Raw row-major vector block.
    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    /// Cosine of the normalized `query` against every stored row.
    pub fn scores(&self, query: &[f64]) -> Result<Vec<f64>> {
        if !self.is_empty() && query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let q = crate::vector::normalized(query)?;
        Ok((0..self.len())
            .map(|r| {
                self.vector(r)
                    .iter()
                    .zip(&q)
                    .map(|(&x, y)| x as f64 * y)
                    .sum::<f64>()
                    .clamp(-1.0, 1.0)
            })
            .collect())
    }

    /// Top `k` rows by cosine similarity, best first; equal scores keep
    /// insertion order.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<Hit>> {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        let scores = self.scores(query)?;
        let by_rank = |&a: &usize, &b: &usize| -> Ordering {
            scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
        };
        let mut rows: Vec<usize> = (0..scores.len()).collect();
        let k = k.min(rows.len());
        if k < rows.len() {
            rows.select_nth_unstable_by(k - 1, by_rank);
            rows.truncate(k);
        }
        rows.sort_unstable_by(by_rank);
        Ok(rows
            .into_iter()
            .map(|row| Hit {
                row,
                score: scores[row],
            })
            .collect())
    }
}

/// One search result: the row in the index and its cosine score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub row: usize,
    pub score: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_axis() -> SearchIndex {
        SearchIndex::build([("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap()
    }

    #[test]
    fn build_normalizes() {
        let idx = SearchIndex::build([("x", vec![3.0, 4.0])]).unwrap();
        assert_eq!(idx.vector(0), [0.6f32, 0.8f32]);
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            SearchIndex::build([("x", vec![1.0]), ("x", vec![2.0])]),
            Err(Error::DuplicateId("x".into()))
        );
        assert_eq!(
            SearchIndex::build([("z", vec![0.0, 0.0])]),
            Err(Error::ZeroNormEntry { id: "z".into() })
        );
        assert!(matches!(
            SearchIndex::build([("a", vec![1.0]), ("b", vec![1.0, 2.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_vectors_are_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let idx = SearchIndex::build((0..1000).map(|i| {
            let v: Vec<f64> = (0..32).map(|_| rng.random_range(-10.0..10.0)).collect();
            (alloc::format!("{i}"), v)
        }))
        .unwrap();
        for r in 0..idx.len() {
            let n: f64 = idx.vector(r).iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn search_examples() {
        let idx = two_axis();
        let hits = idx.search(&[1.0, 0.0], 1).unwrap();
        assert_eq!(hits, [Hit { row: 0, score: 1.0 }]);

        let hits = idx.search(&[1.0, 1.0], 2).unwrap();
        assert_eq!(hits.iter().map(|h| h.row).collect::<Vec<_>>(), [0, 1]);
        for h in &hits {
            assert!((h.score - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        }

        let all = idx.search(&[-0.3, 0.2], 10).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].row, 1);
    }

    #[test]
    fn search_errors() {
        let idx = two_axis();
        assert_eq!(idx.search(&[0.0, 0.0], 1), Err(Error::ZeroNorm));
        assert_eq!(idx.search(&[1.0, 0.0], 0), Err(Error::ZeroK));
        assert!(matches!(idx.search(&[1.0], 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ties_follow_insertion_order() {
        let idx = SearchIndex::build((0..20).map(|i| (alloc::format!("d{i}"), vec![1.0, 1.0]))).unwrap();
        let rows: Vec<usize> = idx.search(&[1.0, 2.0], 7).unwrap().iter().map(|h| h.row).collect();
        assert_eq!(rows, [0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn empty_index_searches_to_nothing() {
        let idx = SearchIndex::build(Vec::<(String, Vec<f64>)>::new()).unwrap();
        assert!(idx.search(&[1.0, 2.0], 3).unwrap().is_empty());
    }
}
