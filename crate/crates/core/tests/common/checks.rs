//! Finite-difference checks shared by the gradient tests and the acceptance
//! suite. Each returns one report per checked configuration.

use acnn::model::{backward, forward_matrix, init_model, multi_view_loss, Labels, ModelConfig, ModelParams, Variant, ViewWeights};
use acnn::nn::{
    attention_backward, attention_forward, conv_full_height_backward, conv_full_height_forward, dropout_backward,
    dropout_forward, grad_check, linear_backward, linear_forward, maxpool1d_backward, maxpool1d_forward,
    relu_backward, relu_forward, softmax_cross_entropy, GradCheckOptions, GradCheckReport,
};
use acnn::RealMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{param_grads, param_names, param_values, random_matrix, random_vec, rng, set_param_values};

pub const TOL: f64 = 1e-4;

fn opts() -> GradCheckOptions {
    GradCheckOptions {
        tolerance: TOL,
        ..GradCheckOptions::default()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat(rows: usize, cols: usize, v: &[f64]) -> RealMatrix {
    RealMatrix::from_vec(rows, cols, v.to_vec()).unwrap()
}

pub fn conv() -> Vec<GradCheckReport> {
    let mut r = rng(21);
    let mut out = Vec::new();
    for (d, s, w, n) in [(3, 9, 2, 2), (4, 12, 5, 3), (1, 6, 1, 1)] {
        let x = random_matrix(&mut r, d, s);
        let k = random_matrix(&mut r, n, d * w);
        let b = random_vec(&mut r, n);
        let up = random_matrix(&mut r, n, s - w + 1);
        let (_, cache) = conv_full_height_forward(&x, &k, &b, w).unwrap();
        let g = conv_full_height_backward(&cache, &k, &up, true).unwrap();
        out.push(grad_check(
            &["input", "kernels", "bias"],
            &[x.as_slice().to_vec(), k.as_slice().to_vec(), b.clone()],
            &[g.input.unwrap().into_vec(), g.kernels.into_vec(), g.bias],
            |p| {
                let (o, _) = conv_full_height_forward(&mat(d, s, &p[0]), &mat(n, d * w, &p[1]), &p[2], w).unwrap();
                dot(o.as_slice(), up.as_slice())
            },
            opts(),
        ));
    }
    out
}

pub fn relu() -> Vec<GradCheckReport> {
    let mut r = rng(22);
    // keep inputs away from the kink
    let x: Vec<f64> = (0..50)
        .map(|_| {
            let v: f64 = r.gen_range(0.01..1.0);
            if r.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    let up = random_vec(&mut r, 50);
    let g = relu_backward(&x, &up);
    vec![grad_check(&["x"], &[x.clone()], &[g], |p| dot(&relu_forward(&p[0]), &up), opts())]
}

pub fn maxpool() -> Vec<GradCheckReport> {
    let mut r = rng(23);
    [(35, 30, 3), (20, 4, 2), (9, 3, 3)]
        .into_iter()
        .map(|(len, pool, stride)| {
            let x = random_vec(&mut r, len);
            let (vals, idx) = maxpool1d_forward(&x, pool, stride).unwrap();
            let up = random_vec(&mut r, vals.len());
            let g = maxpool1d_backward(&idx, &up, len);
            grad_check(
                &["x"],
                &[x.clone()],
                &[g],
                |p| dot(&maxpool1d_forward(&p[0], pool, stride).unwrap().0, &up),
                opts(),
            )
        })
        .collect()
}

pub fn attention() -> Vec<GradCheckReport> {
    let mut r = rng(24);
    [(3, 7), (5, 1), (2, 20)]
        .into_iter()
        .map(|(m, t)| {
            let x = random_matrix(&mut r, m, t);
            let u = random_vec(&mut r, m);
            let up = random_vec(&mut r, m);
            let (_, cache) = attention_forward(&x, &u).unwrap();
            let g = attention_backward(&x, &u, &cache, &up);
            grad_check(
                &["x", "score"],
                &[x.as_slice().to_vec(), u.clone()],
                &[g.x.into_vec(), g.score],
                |p| dot(&attention_forward(&mat(m, t, &p[0]), &p[1]).unwrap().0, &up),
                opts(),
            )
        })
        .collect()
}

pub fn linear() -> Vec<GradCheckReport> {
    let mut r = rng(25);
    let x = random_vec(&mut r, 6);
    let w = random_matrix(&mut r, 4, 6);
    let b = random_vec(&mut r, 4);
    let up = random_vec(&mut r, 4);
    let g = linear_backward(&x, &w, &up);
    vec![grad_check(
        &["x", "weight", "bias"],
        &[x.clone(), w.as_slice().to_vec(), b.clone()],
        &[g.x, g.weight.into_vec(), g.bias],
        |p| dot(&linear_forward(&p[0], &mat(4, 6, &p[1]), &p[2]).unwrap(), &up),
        opts(),
    )]
}

pub fn softmax_heads() -> Vec<GradCheckReport> {
    let mut r = rng(26);
    let mut out = Vec::new();
    for classes in [2, 3, 4] {
        for target in 0..classes {
            let logits: Vec<f64> = (0..classes).map(|_| r.gen_range(-3.0..3.0)).collect();
            let (_, g) = softmax_cross_entropy(&logits, target).unwrap();
            out.push(grad_check(
                &["logits"],
                &[logits.clone()],
                &[g],
                |p| softmax_cross_entropy(&p[0], target).unwrap().0,
                opts(),
            ));
        }
    }
    out
}

pub fn dropout() -> Vec<GradCheckReport> {
    let mut r = rng(27);
    let x = random_vec(&mut r, 40);
    let up = random_vec(&mut r, 40);
    let (_, mask) = dropout_forward(&x, 0.3, &mut rng(99), true);
    let g = dropout_backward(mask.as_deref(), &up);
    vec![grad_check(
        &["x"],
        &[x.clone()],
        &[g],
        |p| dot(&dropout_forward(&p[0], 0.3, &mut rng(99), true).0, &up),
        opts(),
    )]
}

/// Every parameter block of a model. Dropout reuses the same seeded mask on
/// every evaluation.
pub fn model(cfg: &ModelConfig, seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let mut params = init_model(cfg, seed).unwrap();
    // non-zero biases so no block is trivially zero
    for g in &mut params.groups {
        g.bias.value.as_mut_slice().iter_mut().for_each(|b| *b = r.gen_range(-0.1..0.1));
    }
    // finite differences are meaningless across a ReLU or max-pool kink
    let input = loop {
        let x = random_matrix(&mut r, cfg.input_dim, cfg.input_len);
        if kink_margin(&params, &x) > KINK_MARGIN {
            break x;
        }
    };
    let labels = Labels {
        emotion: r.gen_range(0..4),
        activation: r.gen_range(0..3),
        valence: r.gen_range(0..3),
    };
    let weights = ViewWeights {
        activation: 0.7,
        valence: 0.4,
    };
    let dropout_seed = seed ^ 0xd0;
    let out = forward_matrix(&params, &input, true, &mut ChaCha8Rng::seed_from_u64(dropout_seed)).unwrap();
    let (_, hg) = multi_view_loss(&out, labels, weights).unwrap();
    params.zero_grad();
    backward(&mut params, &out, &hg).unwrap();

    let names = param_names(&params);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut probe: ModelParams = params.clone();
    grad_check(
        &names,
        &param_values(&params),
        &param_grads(&params),
        |blocks| {
            set_param_values(&mut probe, blocks);
            let out = forward_matrix(&probe, &input, true, &mut ChaCha8Rng::seed_from_u64(dropout_seed)).unwrap();
            multi_view_loss(&out, labels, weights).unwrap().0
        },
        opts(),
    )
}

const KINK_MARGIN: f64 = 1e-3;

/// Distance of the input from the nearest non-differentiable point: the
/// smallest |pre-activation|, or the smallest gap between the two largest
/// positive entries of a pooling window.
pub fn kink_margin(params: &ModelParams, input: &RealMatrix) -> f64 {
    let cfg = &params.config;
    let mut margin = f64::INFINITY;
    for g in &params.groups {
        let (z, _) = conv_full_height_forward(input, &g.kernels.value, g.bias.value.as_slice(), g.width).unwrap();
        margin = z.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
        for row in z.as_slice().chunks(z.cols()) {
            let row = relu_forward(row);
            let mut start = 0;
            while start + cfg.pool_size <= row.len() {
                let mut w = row[start..start + cfg.pool_size].to_vec();
                w.sort_by(|a, b| b.total_cmp(a));
                if w[0] > 0.0 && w.len() > 1 {
                    margin = margin.min(w[0] - w[1]);
                }
                start += cfg.pool_stride;
            }
        }
    }
    margin
}

/// d = 4, s = 40, widths (2, 3), 3 kernels per width.
pub fn toy_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        kernel_widths: vec![2, 3],
        kernels_per_width: 3,
        ..ModelConfig::new(4, 40, variant)
    }
}

/// Four frames, pool 2 / stride 1, heavy dropout.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        kernel_widths: vec![1, 2],
        kernels_per_width: 2,
        pool_size: 2,
        pool_stride: 1,
        drop_prob: 0.5,
        ..ModelConfig::new(3, 4, Variant::AcnnMv)
    }
}
