//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use clep::clep::pair_loss_and_grad;
use clep::data::IndexedPair;
use clep::numerics::{
    bce_loss, contrastive_loss, Activation, Gradients, Matrix, MlpNetwork, SeededRng,
};
use clep::predictor::head_loss_and_grad;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Gradients below this magnitude are compared absolutely.
const GRAD_FLOOR: f64 = 1e-6;

/// Largest relative error between `analytic` and central differences of
/// `loss` over every parameter of `net`.
pub fn fd_max_rel_error(
    net: &MlpNetwork,
    analytic: &Gradients,
    loss: impl Fn(&MlpNetwork) -> f64,
) -> f64 {
    let analytic: Vec<Vec<f64>> = analytic.slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (s, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let orig = probe.param_slices_mut()[s][i];
            probe.param_slices_mut()[s][i] = orig + FD_STEP;
            let up = loss(&probe);
            probe.param_slices_mut()[s][i] = orig - FD_STEP;
            let down = loss(&probe);
            probe.param_slices_mut()[s][i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max(err);
        }
    }
    worst
}

/// Glorot weights plus random biases, so no pre-activation sits exactly on
/// the ReLU kink (zero biases put dead rows there).
fn random_net(rng: &mut SeededRng, dims: &[usize], output: Activation) -> MlpNetwork {
    let mut net = MlpNetwork::glorot(dims, Activation::Relu, output, rng).unwrap();
    for layer in net.layers_mut() {
        layer.bias.iter_mut().for_each(|b| *b = 0.1 * rng.normal());
    }
    net
}

fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// Contrastive loss of a small random encoder on a random batch, recomputed
/// from scratch with the plain loss function.
pub fn encoder_case(seed: u64, strategy_positive: impl Fn(usize, usize) -> u8) -> f64 {
    let mut rng = SeededRng::new(seed);
    let d_in = 2 + (rng.next_u64() % 6) as usize;
    let hidden = 2 + (rng.next_u64() % 6) as usize;
    let emb = 2 + (rng.next_u64() % 4) as usize;
    let n = 3 + (rng.next_u64() % 4) as usize;
    let net = random_net(&mut rng, &[d_in, hidden, hidden, emb], Activation::Identity);
    let inputs = random_matrix(&mut rng, n, d_in);
    // A margin near the typical distance exercises both hinge branches.
    let margin = 0.5 + 2.0 * rng.uniform();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            pairs.push(IndexedPair {
                a,
                b,
                y: strategy_positive(a, b),
            });
        }
    }
    let (_, grads) = pair_loss_and_grad(&net, &inputs, &pairs, margin).unwrap();
    fd_max_rel_error(&net, &grads, |m| {
        let e = m.forward(&inputs).unwrap();
        let total: f64 = pairs
            .iter()
            .map(|p| {
                let d: f64 = e
                    .row(p.a)
                    .iter()
                    .zip(e.row(p.b))
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                contrastive_loss(p.y, d, margin).unwrap()
            })
            .sum();
        total / pairs.len() as f64
    })
}

/// BCE of a random head (3 dense layers, sigmoid output) on a random batch.
pub fn head_case(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let d_in = 2 + (rng.next_u64() % 7) as usize;
    let n = 2 + (rng.next_u64() % 8) as usize;
    let net = random_net(&mut rng, &[d_in, 6, 4, 1], Activation::Sigmoid);
    let inputs = random_matrix(&mut rng, n, d_in);
    let labels: Vec<u8> = (0..n).map(|_| (rng.next_u64() % 2) as u8).collect();
    let (_, grads) = head_loss_and_grad(&net, &inputs, &labels).unwrap();
    fd_max_rel_error(&net, &grads, |m| {
        let p = m.forward(&inputs).unwrap();
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| bce_loss(p.get(i, 0), y))
            .sum::<f64>()
            / n as f64
    })
}

/// Pair labels for three strategies over a random class assignment.
pub fn strategy_labeler(seed: u64, strategy: usize) -> impl Fn(usize, usize) -> u8 {
    let mut rng = SeededRng::new(seed ^ 0x5eed);
    let likes: Vec<bool> = (0..16).map(|_| rng.uniform() < 0.5).collect();
    move |a, b| {
        let same = likes[a] == likes[b];
        let attract = match strategy {
            0 => same,
            1 => same && likes[a],
            _ => same && !likes[a],
        };
        u8::from(attract)
    }
}

/// Two-sided signed-rank p by enumerating every sign pattern of `1..=n`.
pub fn brute_force_wilcoxon_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nz[a].abs().total_cmp(&nz[b].abs()));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    let observed: usize = (0..n).filter(|&i| nz[i] > 0.0).map(|i| rank[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: usize = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| rank[i])
            .sum();
        le += u64::from(w <= observed);
        ge += u64::from(w >= observed);
    }
    let total = (1u64 << n) as f64;
    (2.0 * (le.min(ge) as f64) / total).min(1.0)
}

/// Area under the empirical ROC curve by the trapezoid rule, tied scores
/// forming a single diagonal step.
pub fn trapezoid_auroc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let p = positive.iter().filter(|x| **x).count() as f64;
    let n = positive.len() as f64 - p;
    let (mut tp, mut fp, mut area) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let (tp0, fp0) = (tp, fp);
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if positive[idx[j]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        area += (fp - fp0) / n * (tp + tp0) / (2.0 * p);
        i = j;
    }
    area
}
