//! Spectral identity for three observed variables joined through a latent Y:
//! `P_{A|Y} diag(P_{b|Y}) P_{A|Y}^{-1} = P_{AbC} P_{AC}^{-1}`, so the
//! eigenvalues of the right-hand side are P(B = b | Y = ·).

use super::marginal;
use crate::error::{Error, Result};
use crate::ltm::LatentTreeModel;

/// P_AC with a 1-norm condition estimate above this is reported as degenerate.
pub const MAX_CONDITION: f64 = 1e8;
/// Imaginary parts up to this size are discarded.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsDiagnostic {
    /// Latent where the paths from A, B and C meet.
    pub latent: String,
    /// Real parts of the eigenvalues of P_AbC · P_AC⁻¹, ascending.
    pub eigenvalues: Vec<f64>,
    /// P(B = b | latent = ·) from the model, ascending.
    pub expected: Vec<f64>,
    /// Largest absolute difference between the two sorted lists, plus any
    /// imaginary part that exceeded the tolerance.
    pub residual: f64,
    pub condition: f64,
}

type Mat2 = [[f64; 2]; 2];

fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn norm1(m: &Mat2) -> f64 {
    (m[0][0].abs() + m[1][0].abs()).max(m[0][1].abs() + m[1][1].abs())
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Ancestors of `v` from `v` up to the root.
fn ancestry(model: &LatentTreeModel, mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while let Some(p) = model.parent(v) {
        out.push(p);
        v = p;
    }
    out
}

fn lowest_common_ancestor(model: &LatentTreeModel, a: usize, b: usize) -> usize {
    let up = ancestry(model, a);
    ancestry(model, b).into_iter().find(|v| up.contains(v)).expect("tree has a common root")
}

/// Node lying on all three pairwise paths: the deepest of the pairwise LCAs.
fn median(model: &LatentTreeModel, a: usize, b: usize, c: usize) -> usize {
    let depth = |v| ancestry(model, v).len();
    [lowest_common_ancestor(model, a, b), lowest_common_ancestor(model, a, c), lowest_common_ancestor(model, b, c)]
        .into_iter()
        .max_by_key(|&v| depth(v))
        .unwrap()
}

pub fn moments_diagnostic(
    model: &LatentTreeModel,
    a: &str,
    b: &str,
    c: &str,
    b_state: usize,
) -> Result<MomentsDiagnostic> {
    let ids = [model.require(a)?, model.require(b)?, model.require(c)?];
    if ids[0] == ids[1] || ids[0] == ids[2] || ids[1] == ids[2] {
        return Err(Error::precondition("A, B and C must be distinct"));
    }
    for &v in &ids {
        if model.variable(v).is_latent() {
            return Err(Error::precondition(format!("`{}` is latent", model.name(v))));
        }
        if model.cardinality(v) != 2 {
            return Err(Error::precondition("the closed-form diagnostic handles binary variables"));
        }
    }
    if b_state >= 2 {
        return Err(Error::precondition(format!("state {b_state} out of range")));
    }
    let y = median(model, ids[0], ids[1], ids[2]);

    let joint = marginal(model, &[a, b, c])?;
    let mut p_ac: Mat2 = [[0.0; 2]; 2];
    let mut p_abc: Mat2 = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            p_ac[i][k] = joint.get(&[i, 0, k]) + joint.get(&[i, 1, k]);
            p_abc[i][k] = joint.get(&[i, b_state, k]);
        }
    }
    let d = det(&p_ac);
    let inv: Mat2 = [[p_ac[1][1] / d, -p_ac[0][1] / d], [-p_ac[1][0] / d, p_ac[0][0] / d]];
    let condition = if d == 0.0 { f64::INFINITY } else { norm1(&p_ac) * norm1(&inv) };
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Degenerate { condition });
    }
    let m = mul(&p_abc, &inv);

    // closed-form eigenvalues of a 2x2 matrix
    let trace = m[0][0] + m[1][1];
    let disc = trace * trace - 4.0 * det(&m);
    let (mut eigenvalues, imaginary) = if disc >= 0.0 {
        let s = disc.sqrt();
        (vec![(trace - s) / 2.0, (trace + s) / 2.0], 0.0)
    } else {
        (vec![trace / 2.0, trace / 2.0], (-disc).sqrt() / 2.0)
    };
    eigenvalues.sort_by(f64::total_cmp);

    let yb = marginal(model, &[model.name(y), b])?;
    let mut expected: Vec<f64> = (0..2)
        .map(|s| {
            let py = yb.get(&[s, 0]) + yb.get(&[s, 1]);
            yb.get(&[s, b_state]) / py
        })
        .collect();
    expected.sort_by(f64::total_cmp);

    let mut residual = eigenvalues
        .iter()
        .zip(&expected)
        .map(|(e, x)| (e - x).abs())
        .fold(0.0, f64::max);
    if imaginary > IMAGINARY_TOLERANCE {
        residual += imaginary;
    }
    Ok(MomentsDiagnostic { latent: model.name(y).to_string(), eigenvalues, expected, residual, condition })
}
