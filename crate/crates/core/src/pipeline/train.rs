//! Mini-batch Adam training with validation-loss model selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Example;
use super::spec::TrainParams;
use crate::error::{Error, Result};
use crate::nn::{argmax, AdamState, Classifier, Gradients, Mode};
use crate::seed;

/// Per-sample gradients are summed within fixed-size chunks, then chunk sums
/// are added in order, so the result does not depend on thread count.
const CHUNK: usize = 4;

/// Per-epoch losses; `best_epoch` is the 0-based epoch whose weights were kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: Option<usize>,
}

impl LearningCurve {
    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }

    /// `epoch,train_loss,val_loss` with 1-based epochs. Missing validation
    /// losses are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for (e, t) in self.train_loss.iter().enumerate() {
            let v = self.val_loss.get(e).map(|v| format!("{v}")).unwrap_or_default();
            out.push_str(&format!("{},{t},{v}\n", e + 1));
        }
        out
    }

    /// Parses [`LearningCurve::to_csv`] output. The kept epoch is recomputed
    /// as the first validation minimum.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut curve = LearningCurve::default();
        for (n, line) in text.lines().enumerate().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse { line: n + 1, message: format!("bad number '{s}'") })
            };
            if cols.len() != 3 {
                return Err(Error::Parse { line: n + 1, message: "expected 3 columns".into() });
            }
            curve.train_loss.push(parse(cols[1])?);
            if !cols[2].is_empty() {
                curve.val_loss.push(parse(cols[2])?);
            }
        }
        curve.best_epoch = curve
            .val_loss
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
            .or_else(|| curve.train_loss.len().checked_sub(1));
        Ok(curve)
    }
}

fn sample_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let epoch_seed = seed::derive_indexed(seed, "dropout", epoch as u64);
    ChaCha8Rng::seed_from_u64(seed::derive_indexed(epoch_seed, "sample", index as u64))
}

fn chunk_gradients<C: Classifier>(
    model: &C,
    examples: &[Example],
    chunk: &[usize],
    seed: u64,
    epoch: usize,
) -> Result<(f64, Gradients)> {
    let mut total = Gradients::zeros_like(&model.params());
    let mut loss = 0.0;
    for &i in chunk {
        let ex = &examples[i];
        let mut rng = sample_rng(seed, epoch, i);
        let (l, g) = model.loss_and_grad(&ex.input_refs(), ex.label, &mut Mode::Train(&mut rng))?;
        loss += l;
        total.add_assign(&g);
    }
    Ok((loss, total))
}

/// Summed loss and gradients over `batch` (indices into `examples`).
pub fn batch_gradients<C: Classifier>(
    model: &C,
    examples: &[Example],
    batch: &[usize],
    seed: u64,
    epoch: usize,
) -> Result<(f64, Gradients)> {
    let chunks: Vec<&[usize]> = batch.chunks(CHUNK).collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<(f64, Gradients)>> = {
        use rayon::prelude::*;
        chunks.par_iter().map(|c| chunk_gradients(model, examples, c, seed, epoch)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<(f64, Gradients)>> =
        chunks.iter().map(|c| chunk_gradients(model, examples, c, seed, epoch)).collect();
    let mut loss = 0.0;
    let mut grads = Gradients::zeros_like(&model.params());
    for part in parts {
        let (l, g) = part?;
        loss += l;
        grads.add_assign(&g);
    }
    Ok((loss, grads))
}

/// Mean cross-entropy in evaluation mode.
pub fn mean_loss<C: Classifier>(model: &C, examples: &[Example]) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        let p = model.predict_proba(&ex.input_refs())?;
        total += crate::nn::categorical_cross_entropy(&p, ex.label);
    }
    Ok(total / examples.len().max(1) as f64)
}

/// Fraction of `examples` classified correctly, in `[0, 1]`.
pub fn accuracy<C: Classifier>(model: &C, examples: &[Example]) -> Result<f64> {
    let mut hits = 0;
    for ex in examples {
        if argmax(&model.predict_proba(&ex.input_refs())?) == ex.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len().max(1) as f64)
}

fn at_epoch(epoch: usize, e: Error) -> Error {
    match e {
        Error::Training { .. } => e,
        other => Error::Training { epoch, message: other.to_string() },
    }
}

/// Trains `model` for `params.epochs` epochs and returns the weights with the
/// lowest validation loss (the last epoch when `val` is empty). The first
/// epoch reaching the minimum wins ties.
pub fn train<C: Classifier>(
    mut model: C,
    train: &[Example],
    val: &[Example],
    params: &TrainParams,
    seed: u64,
) -> Result<(C, LearningCurve)> {
    let mut curve = LearningCurve::default();
    if params.epochs == 0 {
        return Ok((model, curve));
    }
    if train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    let n = train.len();
    let batch = if params.batch_size == 0 { n } else { params.batch_size.min(n) };
    let mut adam = AdamState::new(params.adam, &model.params());
    let mut best: Option<(f64, C)> = None;
    for epoch in 0..params.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if batch < n {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive_indexed(seed, "shuffle", epoch as u64)));
        }
        let mut epoch_loss = 0.0;
        for b in order.chunks(batch) {
            let (loss, mut grads) = batch_gradients(&model, train, b, seed, epoch).map_err(|e| at_epoch(epoch, e))?;
            grads.scale(1.0 / b.len() as f64);
            adam.update(model.params_mut(), &grads);
            epoch_loss += loss;
        }
        let train_loss = epoch_loss / n as f64;
        if !train_loss.is_finite() {
            return Err(Error::Training { epoch, message: "training loss is not finite".into() });
        }
        curve.train_loss.push(train_loss);
        if val.is_empty() {
            continue;
        }
        let val_loss = mean_loss(&model, val).map_err(|e| at_epoch(epoch, e))?;
        if val_loss.is_nan() {
            return Err(Error::Training { epoch, message: "validation loss is NaN".into() });
        }
        curve.val_loss.push(val_loss);
        if best.as_ref().map_or(true, |(b, _)| val_loss < *b) {
            best = Some((val_loss, model.clone()));
            curve.best_epoch = Some(epoch);
        }
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
    }
    match best {
        Some((_, m)) => Ok((m, curve)),
        None => {
            curve.best_epoch = Some(params.epochs - 1);
            Ok((model, curve))
        }
    }
}
