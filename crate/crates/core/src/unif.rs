//! The supervised extension: separate code and query embedding matrices
//! initialized from the same base embeddings, attention pooling over code
//! tokens, averaged query tokens, and a margin-ranking training loop with
//! hand-derived gradients.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AlignedPair;
use crate::embedding::{EmbeddingMatrix, TokenEmbeddings, Vocabulary};
use crate::error::{Error, Result};
use crate::tokenize::TokenBag;
use crate::vector::{axpy, dot, norm, MIN_NORM};
use crate::CodeSearchModel;

/// Trainable state: code matrix `T_c`, query matrix `T_q` and the attention
/// vector `a_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnifParameters {
    code: TokenEmbeddings,
    query: TokenEmbeddings,
    attention: Vec<f64>,
}

impl UnifParameters {
    pub fn from_parts(code: TokenEmbeddings, query: TokenEmbeddings, attention: Vec<f64>) -> Result<Self> {
        let d = code.dim();
        for actual in [query.dim(), attention.len()] {
            if actual != d {
                return Err(Error::DimensionMismatch { expected: d, actual });
            }
        }
        Ok(UnifParameters { code, query, attention })
    }

    /// Copies the rows of `base` for every token used on the code side into
    /// `T_c` and for every description token into `T_q`, so shared tokens
    /// start out identical. Tokens unknown to `base` are left out. `a_c` is
    /// drawn uniformly from `[-1/√d, 1/√d]`.
    pub fn init(
        base: &TokenEmbeddings,
        code_corpus: &[TokenBag],
        query_corpus: &[TokenBag],
        seed: u64,
    ) -> Result<Self> {
        let code = restrict(base, code_corpus)?;
        let query = restrict(base, query_corpus)?;
        let d = base.dim();
        let bound = 1.0 / libm::sqrt(d as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attention = (0..d).map(|_| rng.random_range(-bound..=bound)).collect();
        Self::from_parts(code, query, attention)
    }

    pub fn dim(&self) -> usize {
        self.attention.len()
    }

    pub fn code(&self) -> &TokenEmbeddings {
        &self.code
    }

    pub fn query(&self) -> &TokenEmbeddings {
        &self.query
    }

    pub fn attention(&self) -> &[f64] {
        &self.attention
    }

    pub fn code_mut(&mut self) -> &mut EmbeddingMatrix {
        self.code.matrix_mut()
    }

    pub fn query_mut(&mut self) -> &mut EmbeddingMatrix {
        self.query.matrix_mut()
    }

    pub fn attention_mut(&mut self) -> &mut [f64] {
        &mut self.attention
    }

    pub fn is_finite(&self) -> bool {
        self.code.matrix().is_finite()
            && self.query.matrix().is_finite()
            && crate::vector::is_finite(&self.attention)
    }

    /// Row indices of the known code tokens, sorted by token, repeats kept.
    fn code_rows(&self, bag: &TokenBag) -> Vec<usize> {
        known_rows(bag, self.code.vocab())
    }

    fn query_rows(&self, bag: &TokenBag) -> Vec<usize> {
        known_rows(bag, self.query.vocab())
    }
}

/// Same as [`UnifParameters::init`].
pub fn init_unif(
    base: &TokenEmbeddings,
    code_corpus: &[TokenBag],
    query_corpus: &[TokenBag],
    seed: u64,
) -> Result<UnifParameters> {
    UnifParameters::init(base, code_corpus, query_corpus, seed)
}

fn restrict(base: &TokenEmbeddings, corpus: &[TokenBag]) -> Result<TokenEmbeddings> {
    let used: BTreeSet<usize> = corpus
        .iter()
        .flat_map(|b| b.iter())
        .filter_map(|t| base.vocab().get(t))
        .collect();
    if used.is_empty() {
        return Err(Error::NoKnownTokens);
    }
    let vocab = Vocabulary::from_counted(
        used.iter()
            .map(|&i| (base.vocab().token(i).into(), base.vocab().count(i))),
    )?;
    let rows = used.iter().map(|&i| base.matrix().row(i).to_vec()).collect();
    TokenEmbeddings::new(vocab, EmbeddingMatrix::from_rows(base.dim(), rows)?)
}

fn known_rows(bag: &TokenBag, vocab: &Vocabulary) -> Vec<usize> {
    let mut rows = Vec::new();
    for (token, count) in bag.counts() {
        if let Some(i) = vocab.get(token) {
            rows.extend(core::iter::repeat_n(i, count));
        }
    }
    rows
}

/// Softmax attention over `embs` (max-subtracted), returning the weighted
/// sum and the weights.
pub fn attention_pool(embs: &[&[f64]], attention: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if embs.is_empty() {
        return Err(Error::EmptyPool);
    }
    let logits: Vec<f64> = embs.iter().map(|e| dot(attention, e)).collect();
    let weights = softmax(&logits);
    let mut pooled = vec![0.0; attention.len()];
    for (w, e) in weights.iter().zip(embs) {
        axpy(*w, e, &mut pooled);
    }
    Ok((pooled, weights))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// `E_c`: attention pooling over `T_c` rows of the known code tokens.
pub fn embed_code_unif(code: &TokenBag, p: &UnifParameters) -> Result<Vec<f64>> {
    let rows = p.code_rows(code);
    if rows.is_empty() {
        return Err(Error::NoKnownTokens);
    }
    let embs: Vec<&[f64]> = rows.iter().map(|&r| p.code.matrix().row(r)).collect();
    Ok(attention_pool(&embs, &p.attention)?.0)
}

/// `E_q`: mean of `T_q` rows of the known query tokens.
pub fn embed_query_unif(query: &TokenBag, p: &UnifParameters) -> Result<Vec<f64>> {
    crate::ncs::mean_pool(query, &p.query)
}

impl CodeSearchModel for UnifParameters {
    fn dim(&self) -> usize {
        UnifParameters::dim(self)
    }

    fn embed_code(&self, code: &TokenBag) -> Result<Vec<f64>> {
        embed_code_unif(code, self)
    }

    fn embed_query(&self, query: &TokenBag) -> Result<Vec<f64>> {
        embed_query_unif(query, self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
    /// Per-coordinate Adagrad; row state is only touched for rows in the batch.
    Adagrad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnifTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for UnifTrainConfig {
    fn default() -> Self {
        UnifTrainConfig {
            epochs: 30,
            batch_size: 32,
            // Base skip-gram vectors share a dominant direction, so initial
            // cosines sit near 1 and their gradients are small.
            learning_rate: 10.0,
            margin: 0.05,
            negatives_per_positive: 1,
            optimizer: Optimizer::Sgd,
            seed: 0,
        }
    }
}

impl UnifTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("unif {what}")));
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("margin must be non-negative");
        }
        Ok(())
    }
}

/// Sparse gradient of the loss. Only rows touched by the batch appear.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients {
    pub code: BTreeMap<usize, Vec<f64>>,
    pub query: BTreeMap<usize, Vec<f64>>,
    pub attention: Vec<f64>,
}

/// For each batch position, `per_positive` indices of other positions drawn
/// uniformly. Returns `(positive, negative)` index pairs.
pub fn sample_negatives<R: Rng>(batch_len: usize, per_positive: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if batch_len < 2 && per_positive > 0 {
        return Err(Error::NoNegatives { size: batch_len });
    }
    let mut out = Vec::with_capacity(batch_len * per_positive);
    for i in 0..batch_len {
        for _ in 0..per_positive {
            let mut j = rng.random_range(0..batch_len - 1);
            if j >= i {
                j += 1;
            }
            out.push((i, j));
        }
    }
    Ok(out)
}

struct CodeForward {
    rows: Vec<usize>,
    weights: Vec<f64>,
    pooled: Vec<f64>,
}

struct QueryForward {
    rows: Vec<usize>,
    mean: Vec<f64>,
}

/// Hinge loss `max(0, margin − cos(e_q, e_c⁺) + cos(e_q, e_c⁻))` averaged
/// over `terms` (pairs of batch positions), with exact gradients for `T_c`,
/// `T_q` and `a_c`.
pub fn unif_loss(
    batch: &[AlignedPair],
    terms: &[(usize, usize)],
    p: &UnifParameters,
    margin: f64,
) -> Result<(f64, Gradients)> {
    if terms.is_empty() {
        return Err(Error::NoNegatives { size: batch.len() });
    }
    let d = p.dim();

    let mut codes = Vec::with_capacity(batch.len());
    let mut queries = Vec::with_capacity(batch.len());
    for pair in batch {
        let rows = p.code_rows(&pair.code);
        let embs: Vec<&[f64]> = rows.iter().map(|&r| p.code.matrix().row(r)).collect();
        let (pooled, weights) = attention_pool(&embs, &p.attention).map_err(|_| Error::NoKnownTokens)?;
        codes.push(CodeForward { rows, weights, pooled });

        let rows = p.query_rows(&pair.description);
        let mean = embed_query_unif(&pair.description, p)?;
        queries.push(QueryForward { rows, mean });
    }

    // Gradients with respect to pooled vectors, one per batch position.
    let mut g_code = vec![vec![0.0; d]; batch.len()];
    let mut g_query = vec![vec![0.0; d]; batch.len()];
    let scale = 1.0 / terms.len() as f64;
    let mut loss = 0.0;

    for &(i, j) in terms {
        let q = &queries[i].mean;
        let pos = CosineGrad::new(q, &codes[i].pooled)?;
        let neg = CosineGrad::new(q, &codes[j].pooled)?;
        let value = margin - pos.cos + neg.cos;
        if value <= 0.0 {
            continue;
        }
        loss += value * scale;
        pos.accumulate(q, &codes[i].pooled, -scale, &mut g_query[i], &mut g_code[i]);
        neg.accumulate(q, &codes[j].pooled, scale, &mut g_query[i], &mut g_code[j]);
    }

    let mut grads = Gradients {
        attention: vec![0.0; d],
        ..Default::default()
    };

    for (fwd, g) in codes.iter().zip(&g_code) {
        if g.iter().all(|&x| x == 0.0) {
            continue;
        }
        // pooled = Σ α_i x_i, α = softmax(a·x_i)
        // ∂L/∂s_i = α_i (g·x_i − g·pooled)
        let g_dot_pooled = dot(g, &fwd.pooled);
        for (&row, &alpha) in fwd.rows.iter().zip(&fwd.weights) {
            let x = p.code.matrix().row(row);
            let ds = alpha * (dot(g, x) - g_dot_pooled);
            axpy(ds, x, &mut grads.attention);
            let gx = grads.code.entry(row).or_insert_with(|| vec![0.0; d]);
            axpy(alpha, g, gx);
            axpy(ds, &p.attention, gx);
        }
    }

    for (fwd, g) in queries.iter().zip(&g_query) {
        if g.iter().all(|&x| x == 0.0) {
            continue;
        }
        let w = 1.0 / fwd.rows.len() as f64;
        for &row in &fwd.rows {
            let gx = grads.query.entry(row).or_insert_with(|| vec![0.0; d]);
            axpy(w, g, gx);
        }
    }

    Ok((loss, grads))
}

/// Cosine of `(u, v)` with the pieces needed for its gradient.
struct CosineGrad {
    cos: f64,
    nu: f64,
    nv: f64,
}

impl CosineGrad {
    fn new(u: &[f64], v: &[f64]) -> Result<Self> {
        let (nu, nv) = (norm(u), norm(v));
        if nu < MIN_NORM || nv < MIN_NORM {
            return Err(Error::ZeroNorm);
        }
        Ok(CosineGrad {
            cos: dot(u, v) / (nu * nv),
            nu,
            nv,
        })
    }

    /// Adds `w · ∂cos/∂u` to `gu` and `w · ∂cos/∂v` to `gv`, where
    /// `∂cos/∂u = v/(|u||v|) − cos · u/|u|²`.
    fn accumulate(&self, u: &[f64], v: &[f64], w: f64, gu: &mut [f64], gv: &mut [f64]) {
        let inv = 1.0 / (self.nu * self.nv);
        axpy(w * inv, v, gu);
        axpy(-w * self.cos / (self.nu * self.nu), u, gu);
        axpy(w * inv, u, gv);
        axpy(-w * self.cos / (self.nv * self.nv), v, gv);
    }
}

/// Parameters after training plus the mean loss of every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: UnifParameters,
    pub loss_history: Vec<f64>,
}

/// Trains `p` on `corpus` for `cfg.epochs` epochs of shuffled mini-batches.
///
/// Pairs without a known token on either side are dropped up front. A final
/// batch of one pair is merged into the previous batch so every batch has
/// an in-batch negative.
pub fn train_unif(corpus: &[AlignedPair], mut p: UnifParameters, cfg: &UnifTrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let usable: Vec<&AlignedPair> = corpus
        .iter()
        .filter(|pair| !p.code_rows(&pair.code).is_empty() && !p.query_rows(&pair.description).is_empty())
        .collect();
    if usable.len() < 2 {
        return Err(Error::CorpusTooSmall(usable.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut optimizer = OptimizerState::new(cfg, &p);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..usable.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut bounds: Vec<(usize, usize)> = (0..order.len())
            .step_by(cfg.batch_size)
            .map(|s| (s, (s + cfg.batch_size).min(order.len())))
            .collect();
        if bounds.len() > 1 && bounds[bounds.len() - 1].1 - bounds[bounds.len() - 1].0 == 1 {
            let last = bounds.pop().unwrap();
            bounds.last_mut().unwrap().1 = last.1;
        }

        let mut epoch_loss = 0.0;
        for (step, &(start, end)) in bounds.iter().enumerate() {
            let batch: Vec<AlignedPair> = order[start..end].iter().map(|&i| usable[i].clone()).collect();
            let terms = sample_negatives(batch.len(), cfg.negatives_per_positive, &mut rng)?;
            let (loss, grads) = unif_loss(&batch, &terms, &p, cfg.margin)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            optimizer.apply(&mut p, &grads);
            if !p.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            epoch_loss += loss * (end - start) as f64;
        }
        history.push(epoch_loss / usable.len() as f64);
    }

    Ok(TrainOutcome {
        params: p,
        loss_history: history,
    })
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    code_acc: Vec<f64>,
    query_acc: Vec<f64>,
    attention_acc: Vec<f64>,
}

impl OptimizerState {
    fn new(cfg: &UnifTrainConfig, p: &UnifParameters) -> Self {
        let d = p.dim();
        let sizes = match cfg.optimizer {
            Optimizer::Sgd => (0, 0, 0),
            Optimizer::Adagrad => (p.code.vocab().len() * d, p.query.vocab().len() * d, d),
        };
        OptimizerState {
            kind: cfg.optimizer,
            lr: cfg.learning_rate,
            code_acc: vec![0.0; sizes.0],
            query_acc: vec![0.0; sizes.1],
            attention_acc: vec![0.0; sizes.2],
        }
    }

    fn apply(&mut self, p: &mut UnifParameters, g: &Gradients) {
        let d = p.dim();
        let (kind, lr) = (self.kind, self.lr);
        for (&row, grad) in &g.code {
            let acc = slice_for(&mut self.code_acc, kind, row, d);
            step(kind, lr, p.code.matrix_mut().row_mut(row), grad, acc);
        }
        for (&row, grad) in &g.query {
            let acc = slice_for(&mut self.query_acc, kind, row, d);
            step(kind, lr, p.query.matrix_mut().row_mut(row), grad, acc);
        }
        let acc = slice_for(&mut self.attention_acc, kind, 0, d);
        step(kind, lr, &mut p.attention, &g.attention, acc);
    }
}

fn slice_for(acc: &mut [f64], kind: Optimizer, row: usize, d: usize) -> &mut [f64] {
    match kind {
        Optimizer::Sgd => &mut [],
        Optimizer::Adagrad => &mut acc[row * d..(row + 1) * d],
    }
}

fn step(kind: Optimizer, lr: f64, param: &mut [f64], grad: &[f64], acc: &mut [f64]) {
    match kind {
        Optimizer::Sgd => axpy(-lr, grad, param),
        Optimizer::Adagrad => {
            for ((x, g), a) in param.iter_mut().zip(grad).zip(acc.iter_mut()) {
                *a += g * g;
                *x -= lr * g / (libm::sqrt(*a) + 1e-10);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::{prop_assert, proptest};

    fn bag(t: &[&str]) -> TokenBag {
        TokenBag::from_tokens(t)
    }

    fn table(rows: &[(&str, &[f64])]) -> TokenEmbeddings {
        let vocab = Vocabulary::from_tokens(rows.iter().map(|(t, _)| String::from(*t))).unwrap();
        let d = rows[0].1.len();
        let m = EmbeddingMatrix::from_rows(d, rows.iter().map(|(_, r)| r.to_vec()).collect()).unwrap();
        TokenEmbeddings::new(vocab, m).unwrap()
    }

    fn pair(id: &str, code: &[&str], desc: &[&str]) -> AlignedPair {
        AlignedPair::new(id, bag(code), bag(desc), code.join(" "), None).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn attention_examples() {
        let e = [1.0, 2.0];
        let (pooled, w) = attention_pool(&[&e, &e, &e], &[0.3, -7.0]).unwrap();
        assert!(w.iter().all(|&x| close(x, 1.0 / 3.0, 1e-15)));
        assert!(close(pooled[0], 1.0, 1e-12) && close(pooled[1], 2.0, 1e-12));

        let (_, w) = attention_pool(&[&[5.0, 1.0], &[-2.0, 3.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(w, [0.5, 0.5]);

        let (pooled, w) = attention_pool(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 0.0]).unwrap();
        let e = core::f64::consts::E;
        assert!(close(w[0], e / (e + 1.0), 1e-15));
        assert!(close(pooled[0], 0.7310585786300049, 1e-12));
        assert!(close(pooled[1], 0.2689414213699951, 1e-12));

        assert_eq!(attention_pool(&[], &[1.0]), Err(Error::EmptyPool));
    }

    #[test]
    fn softmax_survives_large_logits() {
        let w = softmax(&[1000.0, 1000.0, -1000.0]);
        assert!(close(w[0], 0.5, 1e-15) && w[2] == 0.0);
    }

    fn base() -> TokenEmbeddings {
        table(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.0, 1.0]),
            ("w", &[0.5, -0.5]),
            ("q", &[2.0, 0.0]),
        ])
    }

    #[test]
    fn init_copies_shared_rows() {
        let t = base();
        let p = init_unif(&t, &[bag(&["a", "w", "zz"])], &[bag(&["w", "q", "b"])], 1).unwrap();
        assert_eq!(p.code().vocab().tokens(), ["a", "w"]);
        assert_eq!(p.query().vocab().tokens(), ["b", "w", "q"]);
        assert_eq!(p.code().get("w"), t.get("w"));
        assert_eq!(p.query().get("w"), t.get("w"));
        let bound = 1.0 / 2f64.sqrt();
        assert!(p.attention().iter().all(|x| x.abs() <= bound));

        let again = init_unif(&t, &[bag(&["a", "w"])], &[bag(&["w", "q", "b"])], 1).unwrap();
        assert_eq!(p.attention(), again.attention());
    }

    #[test]
    fn from_parts_checks_dimensions() {
        let t = base();
        assert_eq!(
            UnifParameters::from_parts(t.clone(), t, vec![0.0; 3]),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        );
    }

    #[test]
    fn code_and_query_embedding() {
        let t = base();
        let p = init_unif(&t, &[bag(&["a", "b", "w"])], &[bag(&["a", "b", "q"])], 1).unwrap();
        assert_eq!(embed_code_unif(&bag(&["w", "unknown"]), &p).unwrap(), [0.5, -0.5]);
        assert_eq!(
            embed_code_unif(&bag(&["a", "b", "a"]), &p).unwrap(),
            embed_code_unif(&bag(&["b", "a", "a"]), &p).unwrap()
        );
        assert_eq!(embed_code_unif(&bag(&["nope"]), &p), Err(Error::NoKnownTokens));

        let mut p2 = p.clone();
        p2.attention_mut().copy_from_slice(&[1.0, 0.0]);
        let e = embed_code_unif(&bag(&["a", "b"]), &p2).unwrap();
        assert!(close(e[0], 0.7310585786300049, 1e-12));

        assert_eq!(embed_query_unif(&bag(&["q"]), &p).unwrap(), [2.0, 0.0]);
        assert_eq!(embed_query_unif(&bag(&["a", "b"]), &p).unwrap(), [0.5, 0.5]);
        let m = embed_query_unif(&bag(&["a", "a", "b"]), &p).unwrap();
        assert!(close(m[0], 2.0 / 3.0, 1e-15) && close(m[1], 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn hinge_examples() {
        // e_q = (1,0); positive code (1,0), negative code (0,1).
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let batch = [pair("1", &["a"], &["a"]), pair("2", &["b"], &["b"])];
        let p = init_unif(&t, &[bag(&["a", "b"])], &[bag(&["a", "b"])], 0).unwrap();
        let (loss, g) = unif_loss(&batch, &[(0, 1)], &p, 0.05).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.code.is_empty() && g.query.is_empty());

        // Positive and negative codes identical: loss is exactly the margin.
        let batch = [pair("1", &["a"], &["b"]), pair("2", &["a"], &["a"])];
        let (loss, _) = unif_loss(&batch, &[(0, 1)], &p, 0.05).unwrap();
        assert!(close(loss, 0.05, 1e-15));
    }

    #[test]
    fn singleton_batch_has_no_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_negatives(1, 1, &mut rng), Err(Error::NoNegatives { size: 1 }));
        let terms = sample_negatives(5, 3, &mut rng).unwrap();
        assert_eq!(terms.len(), 15);
        assert!(terms.iter().all(|&(i, j)| i != j && j < 5));
    }

    fn toy_corpus() -> (TokenEmbeddings, Vec<AlignedPair>) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let names = ["ca", "cb", "cc", "cd", "na", "nb", "nc", "nd"];
        let rows: Vec<(&str, Vec<f64>)> = names
            .iter()
            .map(|n| (*n, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let refs: Vec<(&str, &[f64])> = rows.iter().map(|(n, r)| (*n, r.as_slice())).collect();
        let t = table(&refs);
        let corpus = (0..12)
            .map(|i| {
                let a = i % 4;
                let b = (i / 4 + a + 1) % 4;
                pair(
                    &alloc::format!("p{i}"),
                    &[names[a], names[b]],
                    &[names[a + 4], names[b + 4]],
                )
            })
            .collect();
        (t, corpus)
    }

    fn init_toy(t: &TokenEmbeddings, corpus: &[AlignedPair]) -> UnifParameters {
        let codes: Vec<TokenBag> = corpus.iter().map(|p| p.code.clone()).collect();
        let descs: Vec<TokenBag> = corpus.iter().map(|p| p.description.clone()).collect();
        init_unif(t, &codes, &descs, 4).unwrap()
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (t, corpus) = toy_corpus();
        let p = init_toy(&t, &corpus);
        let cfg = UnifTrainConfig { epochs: 0, ..Default::default() };
        let out = train_unif(&corpus, p.clone(), &cfg).unwrap();
        assert_eq!(out.params, p);
        assert!(out.loss_history.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_decreases_loss() {
        let (t, corpus) = toy_corpus();
        let p = init_toy(&t, &corpus);
        let cfg = UnifTrainConfig {
            epochs: 40,
            batch_size: 4,
            margin: 0.5,
            learning_rate: 0.1,
            seed: 3,
            ..Default::default()
        };
        let a = train_unif(&corpus, p.clone(), &cfg).unwrap();
        let b = train_unif(&corpus, p.clone(), &cfg).unwrap();
        assert_eq!(a, b);
        let h = &a.loss_history;
        assert!(h[h.len() - 1] < h[0], "{h:?}");
        // matrices were initialized equal for shared tokens and drift apart
        assert_ne!(a.params.code().matrix(), p.code().matrix());
    }

    #[test]
    fn training_needs_two_usable_pairs() {
        let (t, corpus) = toy_corpus();
        let p = init_toy(&t, &corpus);
        assert_eq!(
            train_unif(&corpus[..1], p, &UnifTrainConfig::default()),
            Err(Error::CorpusTooSmall(1))
        );
    }

    #[test]
    fn adagrad_trains_too() {
        let (t, corpus) = toy_corpus();
        let p = init_toy(&t, &corpus);
        let cfg = UnifTrainConfig {
            epochs: 30,
            batch_size: 4,
            margin: 0.5,
            optimizer: Optimizer::Adagrad,
            seed: 3,
            ..Default::default()
        };
        let h = train_unif(&corpus, p, &cfg).unwrap().loss_history;
        assert!(h[h.len() - 1] < h[0], "{h:?}");
    }

    #[test]
    fn untouched_rows_are_bitwise_unchanged() {
        let (t, corpus) = toy_corpus();
        let p = init_toy(&t, &corpus);
        let batch = &corpus[..2];
        let (_, grads) = unif_loss(batch, &[(0, 1), (1, 0)], &p, 2.5).unwrap();
        let mut after = p.clone();
        OptimizerState::new(&UnifTrainConfig::default(), &p).apply(&mut after, &grads);
        for r in 0..p.code().vocab().len() {
            if !grads.code.contains_key(&r) {
                assert_eq!(p.code().matrix().row(r), after.code().matrix().row(r));
            }
        }
        for r in 0..p.query().vocab().len() {
            if !grads.query.contains_key(&r) {
                assert_eq!(p.query().matrix().row(r), after.query().matrix().row(r));
            }
        }
        assert!(grads.code.len() < p.code().vocab().len());
    }

    /// Central differences of the loss with respect to every parameter.
    fn numeric_gradients(batch: &[AlignedPair], terms: &[(usize, usize)], p: &UnifParameters, margin: f64) -> Gradients {
        let eps = 1e-4;
        let f = |q: &UnifParameters| unif_loss(batch, terms, q, margin).unwrap().0;
        let d = p.dim();
        let mut out = Gradients { attention: vec![0.0; d], ..Default::default() };
        let mut probe = p.clone();
        for r in 0..p.code().vocab().len() {
            let mut g = vec![0.0; d];
            for k in 0..d {
                let x = probe.code_mut().row(r)[k];
                probe.code_mut().row_mut(r)[k] = x + eps;
                let hi = f(&probe);
                probe.code_mut().row_mut(r)[k] = x - eps;
                let lo = f(&probe);
                probe.code_mut().row_mut(r)[k] = x;
                g[k] = (hi - lo) / (2.0 * eps);
            }
            out.code.insert(r, g);
        }
        for r in 0..p.query().vocab().len() {
            let mut g = vec![0.0; d];
            for k in 0..d {
                let x = probe.query_mut().row(r)[k];
                probe.query_mut().row_mut(r)[k] = x + eps;
                let hi = f(&probe);
                probe.query_mut().row_mut(r)[k] = x - eps;
                let lo = f(&probe);
                probe.query_mut().row_mut(r)[k] = x;
                g[k] = (hi - lo) / (2.0 * eps);
            }
            out.query.insert(r, g);
        }
        for k in 0..d {
            let x = probe.attention()[k];
            probe.attention_mut()[k] = x + eps;
            let hi = f(&probe);
            probe.attention_mut()[k] = x - eps;
            let lo = f(&probe);
            probe.attention_mut()[k] = x;
            out.attention[k] = (hi - lo) / (2.0 * eps);
        }
        out
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        let denom = a.abs().max(b.abs());
        if denom < 1e-8 { (a - b).abs() } else { (a - b).abs() / denom }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let (t, corpus) = toy_corpus();
        let p = init_toy(&t, &corpus);
        let batch = &corpus[2..6];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let terms = sample_negatives(batch.len(), 2, &mut rng).unwrap();
        // margin above 2 keeps every hinge term active
        let (_, analytic) = unif_loss(batch, &terms, &p, 2.5).unwrap();
        let numeric = numeric_gradients(batch, &terms, &p, 2.5);
        let empty = vec![0.0; p.dim()];
        for (r, g) in &numeric.code {
            let a = analytic.code.get(r).unwrap_or(&empty);
            for (x, y) in a.iter().zip(g) {
                assert!(rel_err(*x, *y) < 1e-4, "code row {r}: {x} vs {y}");
            }
        }
        for (r, g) in &numeric.query {
            let a = analytic.query.get(r).unwrap_or(&empty);
            for (x, y) in a.iter().zip(g) {
                assert!(rel_err(*x, *y) < 1e-4, "query row {r}: {x} vs {y}");
            }
        }
        for (x, y) in analytic.attention.iter().zip(&numeric.attention) {
            assert!(rel_err(*x, *y) < 1e-4, "attention: {x} vs {y}");
        }
    }

    proptest! {
        #[test]
        fn attention_weights_form_a_distribution(
            embs in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..8),
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            shift in -50.0f64..50.0,
        ) {
            let refs: Vec<&[f64]> = embs.iter().map(Vec::as_slice).collect();
            let (_, w) = attention_pool(&refs, &a).unwrap();
            prop_assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-6);

            let logits: Vec<f64> = refs.iter().map(|e| dot(&a, e)).collect();
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            for (x, y) in softmax(&logits).iter().zip(softmax(&shifted)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn hinge_is_bounded(seed in 0u64..500, margin in 0.0f64..1.0) {
            let (t, corpus) = toy_corpus();
            let mut p = init_toy(&t, &corpus);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for x in p.attention_mut() {
                *x = rng.random_range(-2.0..2.0);
            }
            let terms = sample_negatives(4, 1, &mut rng).unwrap();
            let (loss, _) = unif_loss(&corpus[..4], &terms, &p, margin).unwrap();
            prop_assert!(loss >= 0.0 && loss <= margin + 2.0);
        }
    }
}
