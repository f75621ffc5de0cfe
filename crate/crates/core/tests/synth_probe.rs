//! Qualification of the xor generator with logistic probes on pooled features.

use hhn_core::synth::SynthSample;
use hhn_core::{generate_samples, SignalMode, Split, SynthSpec};

fn pooled(m: &hhn_core::DenseMatrix) -> Vec<f64> {
    m.mean_rows().into_values()
}

fn standardize(rows: &mut [Vec<f64>]) {
    let d = rows[0].len();
    for c in 0..d {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / rows.len() as f64;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / rows.len() as f64;
        let sd = var.sqrt().max(1e-12);
        rows.iter_mut().for_each(|r| r[c] = (r[c] - mean) / sd);
    }
}

/// Full-batch gradient descent on the logistic loss; returns test balanced accuracy.
fn probe(x: Vec<Vec<f64>>, y: &[bool], n_train: usize) -> f64 {
    let mut x = x;
    standardize(&mut x);
    let d = x[0].len();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    for _ in 0..800 {
        let (mut gw, mut gb) = (vec![0.0; d], 0.0);
        for i in 0..n_train {
            let z: f64 = b + x[i].iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let err = 1.0 / (1.0 + (-z).exp()) - if y[i] { 1.0 } else { 0.0 };
            gb += err;
            gw.iter_mut().zip(&x[i]).for_each(|(g, a)| *g += err * a);
        }
        b -= 0.5 * gb / n_train as f64;
        w.iter_mut().zip(&gw).for_each(|(v, g)| *v -= 0.5 * (g / n_train as f64 + 1e-3 * *v));
    }
    let (mut tp, mut pos, mut tn, mut neg) = (0, 0, 0, 0);
    for i in n_train..x.len() {
        let z: f64 = b + x[i].iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
        if y[i] {
            pos += 1;
            tp += (z > 0.0) as usize;
        } else {
            neg += 1;
            tn += (z <= 0.0) as usize;
        }
    }
    0.5 * (tp as f64 / pos as f64 + tn as f64 / neg as f64)
}

#[test]
fn xor_needs_both_modalities() {
    let spec = SynthSpec {
        n_samples: 600,
        n_test: 0,
        seq_dim: 8,
        video_dim: 8,
        mode: SignalMode::XorCrossmodal,
        seed: 17,
        ..SynthSpec::default()
    };
    let samples: Vec<SynthSample> = generate_samples(&spec, Split::Train).unwrap();
    let y: Vec<bool> = samples.iter().map(|s| s.labels[1] == 1).collect();
    let seq: Vec<Vec<f64>> = samples.iter().map(|s| pooled(&s.seq)).collect();
    let video: Vec<Vec<f64>> = samples.iter().map(|s| pooled(&s.video)).collect();
    // pairwise products make the parity of the two planted patterns linearly readable
    let joint: Vec<Vec<f64>> = seq
        .iter()
        .zip(&video)
        .map(|(s, v)| {
            let mut f = s.clone();
            f.extend(v);
            f.extend(s.iter().flat_map(|a| v.iter().map(move |b| a * b)));
            f
        })
        .collect();
    let n_train = 400;
    let acc_seq = probe(seq, &y, n_train);
    let acc_video = probe(video, &y, n_train);
    let acc_joint = probe(joint, &y, n_train);
    assert!(acc_seq <= 0.6, "sequence probe {acc_seq}");
    assert!(acc_video <= 0.6, "video probe {acc_video}");
    assert!(acc_joint >= 0.9, "joint probe {acc_joint}");
}
