use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learnable pump composition: per-actuator margins and the standby
/// pressure (Pa).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpModel {
    pub margins: Vec<f64>,
    pub standby: f64,
}

impl PumpModel {
    pub fn new(margins: Vec<f64>, standby: f64) -> Result<Self> {
        if margins.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "margins must be non-negative, got {margins:?}"
            )));
        }
        if !(standby.is_finite() && standby >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "standby must be non-negative, got {standby}"
            )));
        }
        Ok(Self { margins, standby })
    }

    /// Pump pressure for working pressures and deadbanded flows.
    pub fn predict(&self, pressures: &[f64], flows: &[f64]) -> Result<f64> {
        Ok(pump_pressure(pump_demand(pressures, flows, self)?, self))
    }
}

/// 1 when the (deadbanded) flow is nonzero.
pub fn activation(q_flow: f64) -> u8 {
    u8::from(q_flow != 0.0)
}

fn check_lengths(pressures: &[f64], flows: &[f64], pump: &PumpModel) -> Result<()> {
    let n = pump.margins.len();
    for len in [pressures.len(), flows.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    Ok(())
}

/// Elevated demand of each actuator, `P_i + c_i * act(q_i)`.
pub fn elevated_demands(pressures: &[f64], flows: &[f64], pump: &PumpModel) -> Result<Vec<f64>> {
    check_lengths(pressures, flows, pump)?;
    Ok(pressures
        .iter()
        .zip(flows)
        .zip(&pump.margins)
        .map(|((p, q), c)| p + c * f64::from(activation(*q)))
        .collect())
}

/// `max_i (P_i + c_i * act(q_i))`, or 0 with no actuators.
pub fn pump_demand(pressures: &[f64], flows: &[f64], pump: &PumpModel) -> Result<f64> {
    Ok(elevated_demands(pressures, flows, pump)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// `max(standby, demand)`.
pub fn pump_pressure(demand: f64, pump: &PumpModel) -> f64 {
    pump.standby.max(demand)
}

/// What sets the pump pressure at one sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dominant {
    Standby,
    Actuator(usize),
}

/// Argmax of the pump composition. Ties go to the lowest actuator index;
/// standby wins only if it is strictly above every elevated demand.
pub fn dominating(elevated: &[f64], standby: f64) -> Dominant {
    let mut best = Dominant::Standby;
    let mut best_val = standby;
    for (i, d) in elevated.iter().enumerate() {
        let beats = match best {
            Dominant::Standby => *d >= best_val,
            Dominant::Actuator(_) => *d > best_val,
        };
        if beats {
            best = Dominant::Actuator(i);
            best_val = *d;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginFitOptions {
    pub fit_standby: bool,
    /// Standby used when it is not fitted.
    pub standby: f64,
    pub iterations: usize,
    /// Subgradient step is `step / sqrt(t)` in pressure units normalized by
    /// the largest measurement.
    pub step: f64,
    /// Actuators uniquely dominant in fewer samples are unidentifiable.
    pub min_unique: usize,
    pub refine_sweeps: usize,
}

impl Default for MarginFitOptions {
    fn default() -> Self {
        Self {
            fit_standby: false,
            standby: 2.0e6,
            iterations: 2000,
            step: 0.5,
            min_unique: 10,
            refine_sweeps: 100,
        }
    }
}

/// Result of [`fit_pump_margins`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginFit {
    pub pump: PumpModel,
    /// Samples in which each actuator is the unique maximizer.
    pub unique_counts: Vec<usize>,
    pub unidentifiable: Vec<bool>,
    pub rmse: f64,
}

struct Problem {
    /// Normalized working pressures, `[sample][actuator]`.
    p: Vec<Vec<f64>>,
    active: Vec<Vec<bool>>,
    m: Vec<f64>,
}

impl Problem {
    fn n(&self) -> usize {
        self.m.len()
    }

    fn predict(&self, k: usize, c: &[f64], standby: f64) -> (f64, Dominant) {
        let mut best = standby;
        let mut arg = Dominant::Standby;
        for i in 0..c.len() {
            if self.active[k][i] {
                let d = self.p[k][i] + c[i];
                if d > best || (arg == Dominant::Standby && d >= best) {
                    best = d;
                    arg = Dominant::Actuator(i);
                }
            } else if self.p[k][i] > best {
                best = self.p[k][i];
                arg = Dominant::Actuator(i);
            }
        }
        (best, arg)
    }

    fn loss(&self, c: &[f64], standby: f64) -> f64 {
        (0..self.n())
            .map(|k| (self.predict(k, c, standby).0 - self.m[k]).powi(2))
            .sum::<f64>()
            / self.n() as f64
    }
}

/// Minimize `sum_k (max(a_k, b_k + x) - m_k)^2` over `x >= 0`, where a term
/// with `b_k = -inf` does not depend on `x`.
fn minimize_max_coordinate(a: &[f64], b: &[f64], m: &[f64]) -> f64 {
    // Sample k is dominated by x once x > a_k - b_k.
    let mut items: Vec<(f64, f64, f64)> = a
        .iter()
        .zip(b)
        .zip(m)
        .filter(|((_, b), _)| b.is_finite())
        .map(|((a, b), m)| (a - b, b - m, a - m))
        .collect();
    if items.is_empty() {
        return 0.0;
    }
    items.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = items.len();
    // suffix sums of (a - m)^2 for samples not yet dominated
    let mut suffix = vec![0.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] + items[j].2 * items[j].2;
    }
    let mut best_x = 0.0;
    let mut best_g = f64::INFINITY;
    let (mut sd, mut sd2) = (0.0, 0.0);
    // interval j: first j samples dominated, x in [bp_{j-1}, bp_j]
    for j in 0..=n {
        let lo = if j == 0 { 0.0 } else { items[j - 1].0.max(0.0) };
        let hi = if j == n { f64::INFINITY } else { items[j].0 };
        if hi >= lo {
            let x = if j == 0 {
                lo
            } else {
                (-sd / j as f64).clamp(lo, hi)
            };
            let g = suffix[j] + sd2 + 2.0 * x * sd + j as f64 * x * x;
            if g < best_g {
                best_g = g;
                best_x = x;
            }
        }
        if j < n {
            sd += items[j].1;
            sd2 += items[j].1 * items[j].1;
        }
    }
    best_x
}

/// Fit margins (and optionally the standby pressure) to measured pump
/// pressure by least squares, given per-actuator working-pressure series
/// `pressures[i][k]` and deadbanded flows `flows[i][k]`.
pub fn fit_pump_margins(
    pressures: &[Vec<f64>],
    flows: &[Vec<f64>],
    measured: &[f64],
    opts: &MarginFitOptions,
) -> Result<MarginFit> {
    let na = pressures.len();
    if flows.len() != na {
        return Err(Error::Dimension {
            expected: na,
            got: flows.len(),
        });
    }
    let n = measured.len();
    for s in pressures.iter().chain(flows) {
        if s.len() != n {
            return Err(Error::Dimension { expected: n, got: s.len() });
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no samples to fit margins on".into()));
    }
    let all_finite = measured
        .iter()
        .chain(pressures.iter().flatten())
        .chain(flows.iter().flatten())
        .all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::NonFinite("margin-fit data"));
    }
    let scale = measured
        .iter()
        .chain(pressures.iter().flatten())
        .fold(0.0f64, |s, v| s.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let prob = Problem {
        p: (0..n)
            .map(|k| (0..na).map(|i| pressures[i][k] / scale).collect())
            .collect(),
        active: (0..n)
            .map(|k| (0..na).map(|i| activation(flows[i][k]) == 1).collect())
            .collect(),
        m: measured.iter().map(|v| v / scale).collect(),
    };

    let mut c = vec![0.0; na];
    for (i, ci) in c.iter_mut().enumerate() {
        let gaps: Vec<f64> = (0..n)
            .filter(|&k| {
                prob.active[k][i]
                    && (0..na).all(|j| !prob.active[k][j] || prob.p[k][j] <= prob.p[k][i])
            })
            .map(|k| prob.m[k] - prob.p[k][i])
            .collect();
        if !gaps.is_empty() {
            *ci = (gaps.iter().sum::<f64>() / gaps.len() as f64).max(0.0);
        }
    }
    let mut standby = opts.standby / scale;
    if opts.fit_standby {
        let idle: Vec<f64> = (0..n)
            .filter(|&k| prob.active[k].iter().all(|a| !a))
            .map(|k| prob.m[k])
            .collect();
        if !idle.is_empty() {
            standby = (idle.iter().sum::<f64>() / idle.len() as f64).max(0.0);
        }
    }

    // projected subgradient descent, keeping the best iterate
    let mut best = (prob.loss(&c, standby), c.clone(), standby);
    for t in 1..=opts.iterations {
        let mut grad = vec![0.0; na];
        let mut grad_s = 0.0;
        for k in 0..n {
            let (pred, arg) = prob.predict(k, &c, standby);
            let r = 2.0 * (pred - prob.m[k]) / n as f64;
            match arg {
                Dominant::Actuator(i) if prob.active[k][i] => grad[i] += r,
                Dominant::Standby => grad_s += r,
                _ => {}
            }
        }
        let step = opts.step / (t as f64).sqrt();
        for (ci, g) in c.iter_mut().zip(&grad) {
            *ci = (*ci - step * g).max(0.0);
        }
        if opts.fit_standby {
            standby = (standby - step * grad_s).max(0.0);
        }
        let loss = prob.loss(&c, standby);
        if loss < best.0 {
            best = (loss, c.clone(), standby);
        }
    }
    let (mut loss, mut c, mut standby) = best;

    // exact coordinate minimization
    for _ in 0..opts.refine_sweeps {
        let before = loss;
        for i in 0..na {
            let mut a = vec![0.0; n];
            let mut b = vec![f64::NEG_INFINITY; n];
            for k in 0..n {
                let mut others = standby;
                for j in 0..na {
                    if j != i {
                        let d = prob.p[k][j] + if prob.active[k][j] { c[j] } else { 0.0 };
                        others = others.max(d);
                    }
                }
                if prob.active[k][i] {
                    b[k] = prob.p[k][i];
                    a[k] = others;
                } else {
                    a[k] = others.max(prob.p[k][i]);
                }
            }
            c[i] = minimize_max_coordinate(&a, &b, &prob.m);
        }
        if opts.fit_standby {
            let a: Vec<f64> = (0..n)
                .map(|k| prob.predict(k, &c, f64::NEG_INFINITY).0)
                .collect();
            standby = minimize_max_coordinate(&a, &vec![0.0; n], &prob.m);
        }
        loss = prob.loss(&c, standby);
        if before - loss <= 1e-15 * before.max(1e-300) {
            break;
        }
    }

    let mut unique_counts = vec![0; na];
    for k in 0..n {
        let mut top = standby;
        let mut arg = None;
        let mut unique = true;
        for i in 0..na {
            let d = prob.p[k][i] + if prob.active[k][i] { c[i] } else { 0.0 };
            if d > top {
                top = d;
                arg = Some(i);
                unique = true;
            } else if d == top {
                unique = false;
            }
        }
        if let (Some(i), true) = (arg, unique) {
            if prob.active[k][i] {
                unique_counts[i] += 1;
            }
        }
    }
    let unidentifiable: Vec<bool> = unique_counts.iter().map(|&u| u < opts.min_unique).collect();
    for (i, flag) in unidentifiable.iter().enumerate() {
        if *flag {
            log::warn!(
                "margin of actuator {} is unidentifiable: uniquely dominant in {} samples",
                i + 1,
                unique_counts[i]
            );
        }
    }
    Ok(MarginFit {
        pump: PumpModel {
            margins: c.iter().map(|v| v * scale).collect(),
            standby: standby * scale,
        },
        unique_counts,
        unidentifiable,
        rmse: loss.sqrt() * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pump() -> PumpModel {
        PumpModel::new(vec![1e6, 3e6, 2e6], 2e6).unwrap()
    }

    #[test]
    fn activation_examples() {
        assert_eq!(activation(0.0), 0);
        assert_eq!(activation(1e-4), 1);
        assert_eq!(activation(-1e-4), 1);
    }

    #[test]
    fn demand_examples() {
        let p = pump();
        assert_eq!(pump_demand(&[0.0; 3], &[0.0; 3], &p).unwrap(), 0.0);
        let d = pump_demand(&[10e6, 8e6, 0.0], &[1e-3, -1e-3, 0.0], &p).unwrap();
        assert_eq!(d, 11e6);
        assert!(pump_demand(&[1.0, 2.0], &[0.0; 3], &p).is_err());
        let e = elevated_demands(&[10e6, 8e6, 0.0], &[1e-3, -1e-3, 0.0], &p).unwrap();
        assert_eq!(dominating(&e, p.standby), Dominant::Actuator(0));
    }

    #[test]
    fn pressure_examples() {
        let p = pump();
        assert_eq!(pump_pressure(0.0, &p), 2e6);
        assert_eq!(pump_pressure(15e6, &p), 15e6);
        assert_eq!(pump_pressure(2e6, &p), 2e6);
    }

    #[test]
    fn raising_the_argmax_raises_demand() {
        let p = pump();
        let flows = [1e-3, 1e-3, 1e-3];
        let base = pump_demand(&[9e6, 5e6, 4e6], &flows, &p).unwrap();
        let up = pump_demand(&[9.5e6, 5e6, 4e6], &flows, &p).unwrap();
        assert!((up - base - 0.5e6).abs() < 1e-6);
    }

    #[test]
    fn coordinate_minimizer_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 30;
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        f64::NEG_INFINITY
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })
                .collect();
            let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.5)).collect();
            let g = |x: f64| -> f64 {
                (0..n)
                    .map(|k| (a[k].max(b[k] + x) - m[k]).powi(2))
                    .sum()
            };
            let x = minimize_max_coordinate(&a, &b, &m);
            let grid_best = (0..=20000)
                .map(|j| g(j as f64 * 1e-4))
                .fold(f64::INFINITY, f64::min);
            assert!(x >= 0.0);
            assert!(g(x) <= grid_best + 1e-9, "{} vs {}", g(x), grid_best);
        }
    }

    /// Each actuator active alone in its own block, then idle samples.
    fn handover_data(planted: &PumpModel, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (na, per) = (planted.margins.len(), 150);
        let n = per * (na + 1);
        let mut p = vec![vec![0.0; n]; na];
        let mut q = vec![vec![0.0; n]; na];
        for k in 0..n {
            let block = k / per;
            for i in 0..na {
                // every actuator moves sometimes, the block owner dominates
                let owner = block == i;
                if owner || (block < na && rng.random_bool(0.3)) {
                    q[i][k] = 1e-3;
                    p[i][k] = if owner {
                        rng.random_range(8e6..14e6)
                    } else {
                        rng.random_range(1e6..4e6)
                    };
                }
            }
        }
        let measured = (0..n)
            .map(|k| {
                let pk: Vec<f64> = (0..na).map(|i| p[i][k]).collect();
                let qk: Vec<f64> = (0..na).map(|i| q[i][k]).collect();
                planted.predict(&pk, &qk).unwrap() + noise * rng.random_range(-1.0..1.0)
            })
            .collect();
        (p, q, measured)
    }

    #[test]
    fn recovers_planted_margins() {
        let planted = PumpModel::new(vec![1.5e6, 2.5e6, 2.0e6], 2e6).unwrap();
        let (p, q, m) = handover_data(&planted, 5e4, 1);
        let opts = MarginFitOptions {
            fit_standby: true,
            standby: 0.0,
            ..Default::default()
        };
        let fit = fit_pump_margins(&p, &q, &m, &opts).unwrap();
        for (c, t) in fit.pump.margins.iter().zip(&planted.margins) {
            assert!((c - t).abs() < 0.02 * t, "{c} vs {t}");
        }
        assert!((fit.pump.standby - 2e6).abs() < 0.01 * 2e6);
        assert!(fit.unidentifiable.iter().all(|f| !f));
    }

    #[test]
    fn unidentifiable_when_never_dominant() {
        let planted = PumpModel::new(vec![1.5e6, 2.5e6, 2.0e6], 2e6).unwrap();
        let (mut p, mut q, _) = handover_data(&planted, 0.0, 2);
        // actuators 2 and 3 only ever move at low pressure alongside 1
        for k in 0..p[0].len() {
            q[0][k] = 1e-3;
            p[0][k] = 12e6;
            for i in 1..3 {
                p[i][k] = p[i][k].min(4e6);
            }
        }
        let m: Vec<f64> = (0..p[0].len())
            .map(|k| {
                let pk = [p[0][k], p[1][k], p[2][k]];
                let qk = [q[0][k], q[1][k], q[2][k]];
                planted.predict(&pk, &qk).unwrap()
            })
            .collect();
        let fit = fit_pump_margins(&p, &q, &m, &Default::default()).unwrap();
        assert!((fit.pump.margins[0] - 1.5e6).abs() < 1e-3 * 1.5e6);
        assert_eq!(fit.unidentifiable, vec![false, true, true]);
    }

    #[test]
    fn constant_shift_moves_parameters() {
        let planted = PumpModel::new(vec![1.5e6, 2.5e6, 2.0e6], 2e6).unwrap();
        let (p, q, m) = handover_data(&planted, 3e4, 3);
        let opts = MarginFitOptions {
            fit_standby: true,
            ..Default::default()
        };
        let k = 0.7e6;
        let shifted: Vec<f64> = m.iter().map(|v| v + k).collect();
        let a = fit_pump_margins(&p, &q, &m, &opts).unwrap();
        let b = fit_pump_margins(&p, &q, &shifted, &opts).unwrap();
        assert!((b.rmse - a.rmse).abs() < 1e-3 * a.rmse);
        assert!((b.pump.standby - a.pump.standby - k).abs() < 1e-3 * k);
        for (cb, ca) in b.pump.margins.iter().zip(&a.pump.margins) {
            assert!((cb - ca - k).abs() < 1e-3 * k);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let planted = PumpModel::new(vec![1.5e6, 2.5e6, 2.0e6], 2e6).unwrap();
        let (p, q, m) = handover_data(&planted, 5e4, 4);
        let a = fit_pump_margins(&p, &q, &m, &Default::default()).unwrap();
        let b = fit_pump_margins(&p, &q, &m, &Default::default()).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};

        fn flow() -> impl Strategy<Value = f64> {
            prop_oneof![Just(0.0), -1e-3f64..1e-3]
        }

        proptest! {
            #[test]
            fn pump_bounds_standby_and_demands(p in prop::array::uniform3(0.0f64..3e7),
                                               q in prop::array::uniform3(flow()),
                                               c in prop::array::uniform3(0.0f64..5e6),
                                               standby in 0.0f64..5e6) {
                let model = PumpModel::new(c.to_vec(), standby).unwrap();
                let pump = model.predict(&p, &q).unwrap();
                prop_assert!(pump >= standby);
                for e in elevated_demands(&p, &q, &model).unwrap() {
                    prop_assert!(pump >= e);
                }
            }

            #[test]
            fn margins_act_through_the_argmax(p in prop::array::uniform3(0.0f64..3e7),
                                              q in prop::array::uniform3(flow()),
                                              c in prop::array::uniform3(0.0f64..5e6),
                                              standby in 0.0f64..5e6,
                                              delta in 1.0f64..1e5) {
                let model = PumpModel::new(c.to_vec(), standby).unwrap();
                let base = model.predict(&p, &q).unwrap();
                let elevated = elevated_demands(&p, &q, &model).unwrap();
                let dom = dominating(&elevated, standby);
                let mut sorted = elevated.clone();
                sorted.push(standby);
                sorted.sort_by(f64::total_cmp);
                let gap = sorted[3] - sorted[2];
                for i in 0..3 {
                    let mut bumped = c;
                    bumped[i] += delta;
                    let pump = PumpModel::new(bumped.to_vec(), standby).unwrap().predict(&p, &q).unwrap();
                    if q[i] == 0.0 {
                        prop_assert_eq!(pump, base);
                    } else if dom == Dominant::Actuator(i) {
                        prop_assert!((pump - (base + delta)).abs() <= 1e-9 * base);
                    } else if delta < gap {
                        prop_assert_eq!(pump, base);
                    }
                }
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn fitted_margins_are_non_negative(seed in 0u64..1000, fit_standby in any::<bool>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = 80;
                let pressures: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..n).map(|_| rng.random_range(0.0..2e7)).collect())
                    .collect();
                let flows: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..n).map(|_| if rng.random_bool(0.5) { 1e-4 } else { 0.0 }).collect())
                    .collect();
                let measured: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.5e7)).collect();
                let opts = MarginFitOptions { fit_standby, iterations: 300, ..Default::default() };
                let fit = fit_pump_margins(&pressures, &flows, &measured, &opts).unwrap();
                prop_assert!(fit.pump.margins.iter().all(|c| *c >= 0.0), "{:?}", fit.pump.margins);
                prop_assert!(fit.pump.standby >= 0.0);
            }
        }
    }
}
