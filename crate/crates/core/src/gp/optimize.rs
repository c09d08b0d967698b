use crate::error::Result;

/// Outcome of one ascent run.
#[derive(Clone, Debug)]
pub struct AscentReport {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

fn project(theta: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((t, l), h) in theta.iter_mut().zip(lo).zip(hi) {
        *t = t.clamp(*l, *h);
    }
}

/// Norm of the gradient with components pushing against an active bound
/// removed.
fn projected_grad_norm(theta: &[f64], grad: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    theta
        .iter()
        .zip(grad)
        .zip(lo.iter().zip(hi))
        .map(|((t, g), (l, h))| {
            if (*t <= *l && *g < 0.0) || (*t >= *h && *g > 0.0) {
                0.0
            } else {
                g * g
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// Maximize `f` over the box `[lo, hi]` by projected gradient ascent.
///
/// Step lengths start from the Barzilai-Borwein estimate and are halved
/// until the Armijo condition holds. Points where `f` fails to evaluate are
/// treated like a rejected step.
pub(crate) fn projected_ascent<F>(
    f: &F,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
    grad_tol: f64,
) -> Result<AscentReport>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut theta = start.to_vec();
    project(&mut theta, lo, hi);
    let (mut value, mut grad) = f(&theta)?;
    let mut step = 0.1;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        if projected_grad_norm(&theta, &grad, lo, hi) < grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
            project(&mut cand, lo, hi);
            let ascent: f64 = cand
                .iter()
                .zip(&theta)
                .zip(&grad)
                .map(|((c, t), g)| (c - t) * g)
                .sum();
            if ascent <= 0.0 {
                break;
            }
            if let Ok((v, g)) = f(&cand) {
                if v >= value + ARMIJO * ascent {
                    accepted = Some((cand, v, g));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, v, g)) = accepted else {
            // no ascent step is possible: stationary up to line-search precision
            converged = true;
            break;
        };
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(c, t)| c - t).collect();
        let sy: f64 = s.iter().zip(g.iter().zip(&grad)).map(|(s, (gn, go))| s * (gn - go)).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        step = if sy < 0.0 { ss / -sy } else { step * 2.0 };
        step = step.clamp(1e-8, 1e4);
        let improvement = v - value;
        theta = cand;
        value = v;
        grad = g;
        if improvement.abs() <= 1e-12 * value.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(AscentReport {
        theta,
        value,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic() {
        let target = [1.5, -0.5];
        let f = |t: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = -(t[0] - target[0]).powi(2) - 4.0 * (t[1] - target[1]).powi(2);
            Ok((v, vec![-2.0 * (t[0] - target[0]), -8.0 * (t[1] - target[1])]))
        };
        let r = projected_ascent(&f, &[0.0, 0.0], &[-10.0, -10.0], &[10.0, 10.0], 200, 1e-9)
            .unwrap();
        assert!((r.theta[0] - 1.5).abs() < 1e-6 && (r.theta[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn respects_bounds() {
        let f = |t: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((t[0], vec![1.0])) };
        let r = projected_ascent(&f, &[0.0], &[-1.0], &[2.0], 100, 1e-9).unwrap();
        assert_eq!(r.theta[0], 2.0);
        assert!(r.converged);
    }
}
