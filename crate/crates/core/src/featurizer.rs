//! TF-IDF weighted character n-grams.
//!
//! Texts are lowercased and split into overlapping character n-grams for every
//! `n` in `[min_n, max_n]`. Inverse document frequencies use the smoothed form
//! `ln((1 + N) / (1 + df)) + 1`, and transformed vectors are L2-normalized.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfParams {
    pub min_n: usize,
    pub max_n: usize,
    /// Keep only the most document-frequent grams (ties broken lexicographically).
    pub max_features: Option<usize>,
}

impl Default for TfidfParams {
    fn default() -> Self {
        TfidfParams {
            min_n: 2,
            max_n: 5,
            // Dense downstream vectors; an uncapped 2-5 gram vocabulary runs to 10^5 columns.
            max_features: Some(4096),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    params: TfidfParams,
}

/// Character n-grams of the lowercased text, in text order, with repeats.
pub fn char_ngrams(text: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut grams = Vec::new();
    for n in min_n..=max_n {
        if n == 0 || n > chars.len() {
            continue;
        }
        grams.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
    }
    grams
}

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(texts: &[S], params: &TfidfParams) -> Result<TfidfModel> {
        if texts.is_empty() {
            return Err(Error::Empty("no texts to fit the featurizer on"));
        }
        if params.min_n == 0 || params.min_n > params.max_n {
            return Err(Error::InvalidConfig(format!(
                "invalid n-gram range ({}, {})",
                params.min_n, params.max_n
            )));
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for text in texts {
            let unique: HashSet<String> =
                char_ngrams(text.as_ref(), params.min_n, params.max_n).into_iter().collect();
            for gram in unique {
                *df.entry(gram).or_default() += 1;
            }
        }

        let mut grams: Vec<(String, usize)> = df.into_iter().collect();
        if let Some(cap) = params.max_features {
            grams.sort_by(|(ga, da), (gb, db)| db.cmp(da).then_with(|| ga.cmp(gb)));
            grams.truncate(cap);
        }
        grams.sort_by(|(ga, _), (gb, _)| ga.cmp(gb));

        let n_docs = texts.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(grams.len());
        for (col, (gram, doc_freq)) in grams.into_iter().enumerate() {
            idf.push(((1.0 + n_docs) / (1.0 + doc_freq as f64)).ln() + 1.0);
            vocabulary.insert(gram, col);
        }
        Ok(TfidfModel {
            vocabulary,
            idf,
            params: params.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn params(&self) -> &TfidfParams {
        &self.params
    }

    /// Sparse `(column, weight)` pairs sorted by column; unit L2 norm or empty.
    pub fn transform(&self, text: &str) -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for gram in char_ngrams(text, self.params.min_n, self.params.max_n) {
            if let Some(&col) = self.vocabulary.get(&gram) {
                *counts.entry(col).or_default() += 1.0;
            }
        }
        let mut weights: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]))
            .collect();
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut weights {
                *w /= norm;
            }
        }
        weights
    }

    /// Dense form of [`TfidfModel::transform`], padded to `dim` columns.
    pub fn transform_dense(&self, text: &str, dim: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dim.max(self.len())];
        for (col, w) in self.transform(text) {
            dense[col] = w;
        }
        dense
    }
}
