//! Slow, obviously-correct reference implementations.

use std::f64::consts::PI;

use acnn::RealMatrix;

pub fn conv_loop(x: &RealMatrix, k: &RealMatrix, b: &[f64], w: usize) -> RealMatrix {
    let (d, s) = x.shape();
    let n = k.rows();
    let mut out = RealMatrix::zeros(n, s - w + 1);
    for c in 0..n {
        for t in 0..s - w + 1 {
            let mut acc = b[c];
            for i in 0..d {
                for j in 0..w {
                    acc += x.get(i, t + j) * k.get(c, j * d + i);
                }
            }
            out.set(c, t, acc);
        }
    }
    out
}

pub fn dct_direct(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    (0..x.len())
        .map(|k| {
            let mut s = 0.0;
            for (i, v) in x.iter().enumerate() {
                s += v * (PI / n * (i as f64 + 0.5) * k as f64).cos();
            }
            s * if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() }
        })
        .collect()
}

pub fn dct_iii_inverse(c: &[f64]) -> Vec<f64> {
    let n = c.len() as f64;
    (0..c.len())
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, v)| {
                    let a = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                    a * v * (PI / n * (i as f64 + 0.5) * k as f64).cos()
                })
                .sum()
        })
        .collect()
}

pub fn dft_power(frame: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                let ang = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

pub fn pool_scan(map: &[f64], pool: usize, stride: usize) -> (Vec<f64>, Vec<usize>) {
    let mut vals = Vec::new();
    let mut idx = Vec::new();
    let mut start = 0;
    while start + pool <= map.len() {
        let mut best = start;
        for i in start..start + pool {
            if map[i] > map[best] {
                best = i;
            }
        }
        vals.push(map[best]);
        idx.push(best);
        start += stride;
    }
    (vals, idx)
}
