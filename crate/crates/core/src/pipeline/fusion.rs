//! Decision-level and score-level combination of per-domain classifiers.

use crate::eeg_io::Label;
use crate::error::{Error, Result};
use crate::nn::{Dense, Layer, Network};
use crate::tensor::Tensor;

/// Most frequent label among exactly three binary votes.
pub fn majority_vote(votes: &[Label]) -> Result<Label> {
    if votes.len() != 3 || votes.iter().any(|&v| v > 1) {
        return Err(Error::validation(format!("majority vote needs 3 binary votes, got {votes:?}")));
    }
    let ones = votes.iter().filter(|&&v| v == 1).count();
    Ok(usize::from(ones >= 2))
}

/// Concatenates per-domain probability pairs into the score head's input.
pub fn stack_scores(probs: &[Vec<f64>]) -> Tensor {
    Tensor::from_vec(probs.iter().flatten().copied().collect())
}

/// Second-stage `dense(3 * 2 -> 2) -> softmax` layer whose weights start at
/// the averaging pattern: each class logit is the mean of that class's three
/// probabilities.
pub fn averaging_score_head(domains: usize) -> Result<Network> {
    let inputs = 2 * domains;
    let mut weights = vec![0.0; inputs * 2];
    for d in 0..domains {
        for c in 0..2 {
            weights[(2 * d + c) * 2 + c] = 1.0 / domains as f64;
        }
    }
    let dense = Dense { inputs, outputs: 2, weights, bias: vec![0.0; 2] };
    Network::new(vec![inputs], vec![Layer::Dense(dense), Layer::Softmax])
}

/// Applies a score head to per-domain probability pairs.
pub fn score_fusion_forward(head: &Network, probs: &[Vec<f64>]) -> Result<Vec<f64>> {
    for (i, p) in probs.iter().enumerate() {
        let sum: f64 = p.iter().sum();
        if p.len() != 2 || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("domain {i} scores are not a probability pair")));
        }
    }
    Ok(head.predict(&stack_scores(probs))?.into_data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax;

    #[test]
    fn votes() {
        assert_eq!(majority_vote(&[0, 0, 1]).unwrap(), 0);
        assert_eq!(majority_vote(&[1, 1, 1]).unwrap(), 1);
        assert_eq!(majority_vote(&[0, 1, 0]).unwrap(), 0);
        assert!(majority_vote(&[0, 1]).is_err());
    }

    #[test]
    fn averaging_head_passes_the_mean_row_through_softmax() {
        let head = averaging_score_head(3).unwrap();
        let probs = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.7, 0.3]];
        let out = score_fusion_forward(&head, &probs).unwrap();
        let mean = [0.6, 0.4];
        let expected = softmax(&mean);
        for (o, e) in out.iter().zip(&expected) {
            assert!((o - e).abs() < 1e-12);
        }
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(crate::nn::argmax(&out), 0);
    }
}
