//! Preconditioned MINRES for symmetric, possibly indefinite systems.

use crate::quadrature::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresOutcome {
    pub iterations: usize,
    /// Preconditioned residual norm sqrt(rᵀM⁻¹r) relative to that of b.
    pub rel_residual: f64,
}

/// Solves A x = b with SPD preconditioner M given as `precond(r) = M⁻¹r`,
/// stopping when the M⁻¹-norm of the residual drops below `rtol` times that of b.
pub fn minres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> (Vec<f64>, MinresOutcome) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, MinresOutcome { iterations: 0, rel_residual: 0.0 });
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
        y = apply(&v);
        if it >= 2 {
            let c = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= c * ri;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= c * ri;
        }
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if phibar <= rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    (x, MinresOutcome { iterations: it, rel_residual: phibar / beta1 })
}
