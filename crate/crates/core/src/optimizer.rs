//! Rate maximization over the free parameters of a scenario.
//!
//! The search runs in an unconstrained raw space. [`Parameterization`] maps
//! any raw vector onto a feasible [`ProtocolPoint`]: logistic maps for bounded
//! scalars, a transmittance cap that keeps the window condition satisfied,
//! an ordering map for `lambda_D < lambda_S`, and additive log-ratio maps onto
//! the class and error-budget simplices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rate::{
    ClassProbabilities, ErrorBudget, KeyRateModel, ProtocolPoint, RateBreakdown, Scenario,
};

/// Score given to raw vectors whose evaluation fails.
pub const FAILED_SCORE: f64 = -1.0;

const TIE_TOLERANCE: f64 = 1e-12;
const FRACTION_CEILING: f64 = 1.0 - 1e-12;

/// Upper limits of the bounded parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRanges {
    pub delta_max: f64,
    pub lambda_max: f64,
}

impl Default for SearchRanges {
    fn default() -> Self {
        SearchRanges {
            delta_max: 0.5,
            lambda_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    pub model: KeyRateModel,
    pub scenario: Scenario,
    pub distance_km: f64,
    /// Pulses sent; ignored (treated as infinite) in the asymptotic scenarios.
    pub pulses: f64,
    pub ranges: SearchRanges,
    pub seed: u64,
    pub starts: usize,
    /// Optional extra start, usually the optimum at a neighbouring distance.
    pub warm_start: Option<ProtocolPoint>,
}

impl OptimizationProblem {
    pub fn new(model: KeyRateModel, scenario: Scenario, distance_km: f64, pulses: f64) -> Self {
        OptimizationProblem {
            model,
            scenario,
            distance_km,
            pulses: if scenario.is_finite() {
                pulses
            } else {
                f64::INFINITY
            },
            ranges: SearchRanges::default(),
            seed: 0,
            starts: 16,
            warm_start: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_warm_start(mut self, point: Option<ProtocolPoint>) -> Self {
        self.warm_start = point;
        self
    }

    pub fn parameterization(&self) -> Parameterization {
        Parameterization {
            model: self.model,
            scenario: self.scenario,
            distance_km: self.distance_km,
            pulses: self.pulses,
            ranges: self.ranges,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_point: ProtocolPoint,
    pub best_rate: f64,
    pub breakdown: RateBreakdown,
    pub evaluations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

// softmax of (0, z...) so the all-zero vector gives equal weights
fn alr_weights(z: &[f64]) -> Vec<f64> {
    let top = z.iter().copied().fold(0.0f64, f64::max);
    let mut w: Vec<f64> = std::iter::once(0.0)
        .chain(z.iter().copied())
        .map(|v| (v - top).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

fn alr_raw(weights: &[f64]) -> Vec<f64> {
    weights[1..].iter().map(|w| (w / weights[0]).ln()).collect()
}

/// Bijection between raw vectors and feasible points at fixed `(L, N_A)`.
///
/// Raw layout: `delta`, `lambda_S`, then for decoys the decoy ratio, then for
/// finite keys the sampling fraction, the class log-ratios (decoys only) and
/// the error-budget log-ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameterization {
    pub model: KeyRateModel,
    pub scenario: Scenario,
    pub distance_km: f64,
    pub pulses: f64,
    pub ranges: SearchRanges,
}

impl Parameterization {
    pub fn dim(&self) -> usize {
        match self.scenario {
            Scenario::NoDecoyInfinite => 2,
            Scenario::NoDecoyFinite => 6,
            Scenario::DecoyInfinite => 3,
            Scenario::DecoyFinite => 11,
        }
    }

    fn budget_dim(&self) -> usize {
        match self.scenario {
            Scenario::NoDecoyFinite => 3,
            Scenario::DecoyFinite => 5,
            _ => 0,
        }
    }

    /// Largest `lambda` keeping `(1+delta) M_A lambda' < 1`.
    pub fn lambda_cap(&self, delta: f64) -> f64 {
        let p = &self.model.params;
        let m_a = p.photons_at_alice(self.distance_km);
        let window = (1.0 - p.q_a) / (p.q_a * (1.0 + delta) * m_a);
        self.ranges.lambda_max.min(window)
    }

    /// Sifted signal bits `N_A P_S Q^S / 2` available for sampling.
    pub fn sifted_length(&self, lambda_signal: f64, signal_probability: f64) -> f64 {
        let p = &self.model.params;
        let mu = p.photons_at_alice(self.distance_km) * lambda_signal * p.q_a;
        let q = self.model.observables(mu, self.distance_km).gain;
        self.pulses * signal_probability * q / 2.0
    }

    pub fn point(&self, raw: &[f64]) -> ProtocolPoint {
        debug_assert_eq!(raw.len(), self.dim());
        let decoys = self.scenario.uses_decoys();
        let finite = self.scenario.is_finite();
        let delta = self.ranges.delta_max * sigmoid(raw[0]);
        let lambda_signal = self.lambda_cap(delta) * sigmoid(raw[1]);
        let mut i = 2;
        let lambda_decoy = if decoys {
            i += 1;
            lambda_signal * sigmoid(raw[2])
        } else {
            0.0
        };
        let mut point = ProtocolPoint {
            scenario: self.scenario,
            distance_km: self.distance_km,
            pulses: if finite { self.pulses } else { f64::INFINITY },
            lambda_signal,
            lambda_decoy,
            delta,
            sampled_bits: 0.0,
            classes: if decoys {
                ClassProbabilities::RANDOM
            } else {
                ClassProbabilities::SIGNAL_ONLY
            },
            budget: ErrorBudget::default(),
        };
        if !finite {
            return point;
        }
        let fraction = sigmoid(raw[i]);
        i += 1;
        if decoys {
            let w = alr_weights(&raw[i..i + 2]);
            point.classes = ClassProbabilities {
                signal: w[0],
                decoy: w[1],
                vacuum: w[2],
            };
            i += 2;
        }
        point.sampled_bits = fraction * self.sifted_length(lambda_signal, point.classes.signal);
        let free = self.model.params.eps_free();
        let shares: Vec<f64> = alr_weights(&raw[i..i + self.budget_dim()])
            .into_iter()
            .map(|w| w * free)
            .collect();
        point.budget =
            ErrorBudget::from_free_components(self.scenario, self.model.params.eps_ec, &shares);
        point
    }

    /// Raw coordinates of `point`. Fractions at or beyond their caps are pulled
    /// just inside, so points from another distance map to nearby feasible ones.
    pub fn raw(&self, point: &ProtocolPoint) -> Vec<f64> {
        let clamp = |x: f64| x.clamp(1e-300, FRACTION_CEILING);
        let mut raw = vec![
            logit(clamp(point.delta / self.ranges.delta_max)),
            logit(clamp(point.lambda_signal / self.lambda_cap(point.delta))),
        ];
        if self.scenario.uses_decoys() {
            raw.push(logit(clamp(point.lambda_decoy / point.lambda_signal)));
        }
        if !self.scenario.is_finite() {
            return raw;
        }
        let sifted = self.sifted_length(point.lambda_signal, point.classes.signal);
        raw.push(logit(clamp(point.sampled_bits / sifted)));
        if self.scenario.uses_decoys() {
            let c = point.classes;
            raw.extend(alr_raw(&[c.signal, c.decoy, c.vacuum]));
        }
        raw.extend(alr_raw(&point.budget.free_components(self.scenario)));
        raw
    }

    /// Per-coordinate boxes the quasi-random starts are drawn from.
    pub fn start_box(&self) -> Vec<(f64, f64)> {
        let decoys = self.scenario.uses_decoys();
        let mut b = vec![
            (-7.0, -1.0),
            if decoys { (-4.0, 1.0) } else { (-8.0, -2.0) },
        ];
        if decoys {
            b.push((-4.0, 0.0));
        }
        if self.scenario.is_finite() {
            b.push((-9.0, 0.0));
            if decoys {
                b.push((-3.0, 2.0));
                b.push((-14.0, -3.0));
            }
            // the privacy-amplification share is the reference and ends up smallest
            b.extend(std::iter::repeat_n((0.0, 14.0), self.budget_dim()));
        }
        b
    }
}

/// Outcome of one local search.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptimum {
    pub raw: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub initial_step: f64,
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            initial_step: 1.0,
            tolerance: 1e-6,
            max_evaluations: 3000,
            restarts: 3,
        }
    }
}

impl NelderMead {
    /// Maximizes `f` from `x0` with dimension-adaptive coefficients, restarting
    /// from the best vertex after each convergence until it stops improving.
    pub fn maximize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> LocalOptimum {
        let mut best = self.run(&f, x0, self.max_evaluations);
        for _ in 0..self.restarts {
            if !best.converged || best.evaluations >= self.max_evaluations * (self.restarts + 1) {
                break;
            }
            let next = self.run(&f, &best.raw, self.max_evaluations);
            let improved = next.value > best.value + TIE_TOLERANCE * best.value.abs().max(1e-300);
            let evaluations = best.evaluations + next.evaluations;
            if next.value >= best.value {
                best = LocalOptimum {
                    evaluations,
                    ..next
                };
            } else {
                best.evaluations = evaluations;
            }
            if !improved {
                break;
            }
        }
        best
    }

    fn run<F: Fn(&[f64]) -> f64>(&self, f: &F, x0: &[f64], budget: usize) -> LocalOptimum {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, gamma, rho, shrink) = if n >= 2 {
            (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
        } else {
            (1.0, 2.0, 0.5, 0.5)
        };
        // minimize the negated objective
        let g = |x: &[f64]| -f(x);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), g(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = g(&x);
            simplex.push((x, v));
        }
        let mut evals = n + 1;
        let order = |s: &mut Vec<(Vec<f64>, f64)>| {
            s.sort_by(|a, b| a.1.total_cmp(&b.1));
        };
        let diameter = |s: &[(Vec<f64>, f64)]| {
            s[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&s[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        order(&mut simplex);
        let mut converged = false;
        while evals < budget {
            if diameter(&simplex) < self.tolerance {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let fr = g(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(alpha * gamma);
                let fe = g(&xe);
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let x = along(alpha * rho);
                    let v = g(&x);
                    (x, v)
                } else {
                    let x = along(-rho);
                    let v = g(&x);
                    (x, v)
                };
                evals += 1;
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for (x, v) in simplex.iter_mut().skip(1) {
                        for (xi, bi) in x.iter_mut().zip(&best) {
                            *xi = bi + shrink * (*xi - bi);
                        }
                        *v = g(x);
                    }
                    evals += n;
                }
            }
            order(&mut simplex);
        }
        if !converged {
            converged = diameter(&simplex) < self.tolerance;
        }
        let (raw, v) = simplex.swap_remove(0);
        LocalOptimum {
            raw,
            value: -v,
            evaluations: evals,
            converged,
        }
    }
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut r = 0.0;
    while index > 0 {
        r += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `count` points of a Halton sequence, randomly shifted modulo one, scaled into `bounds`.
pub fn shifted_halton(count: usize, bounds: &[(f64, f64)], seed: u64) -> Vec<Vec<f64>> {
    assert!(bounds.len() <= PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = bounds.iter().map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|k| {
            bounds
                .iter()
                .zip(PRIMES)
                .zip(&shift)
                .map(|(((lo, hi), p), s)| lo + (hi - lo) * (radical_inverse(k, p) + s).fract())
                .collect()
        })
        .collect()
}

fn score(model: &KeyRateModel, point: &ProtocolPoint) -> f64 {
    match model.evaluate(point) {
        Ok(b) if b.rate.is_finite() => b.rate,
        _ => FAILED_SCORE,
    }
}

/// Maximizes the key rate of `problem`.
pub fn maximize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let model = problem.model;
    maximize_with(problem, |p| score(&model, p))
}

/// Multi-start search of `objective` over the problem's parameterization.
///
/// The returned breakdown always comes from the key-rate model; `best_rate`
/// is the re-evaluated rate after rounding the sampled bits to an integer.
pub fn maximize_with<F>(problem: &OptimizationProblem, objective: F) -> Result<OptimizationResult>
where
    F: Fn(&ProtocolPoint) -> f64 + Sync,
{
    problem.model.params.validate()?;
    if problem.scenario.is_finite() && !(problem.pulses > 0.0 && problem.pulses.is_finite()) {
        return Err(Error::InvalidPoint(format!(
            "pulse count {}",
            problem.pulses
        )));
    }
    let param = problem.parameterization();
    let mut starts = Vec::with_capacity(problem.starts + 1);
    if let Some(w) = &problem.warm_start {
        if w.scenario == problem.scenario {
            starts.push(param.raw(w));
        }
    }
    starts.extend(shifted_halton(
        problem.starts,
        &param.start_box(),
        problem.seed,
    ));

    let nm = NelderMead {
        max_evaluations: 600 * param.dim(),
        ..NelderMead::default()
    };
    let f = |raw: &[f64]| objective(&param.point(raw));
    let runs: Vec<LocalOptimum> = starts.par_iter().map(|x0| nm.maximize(f, x0)).collect();
    let evaluations = runs.iter().map(|r| r.evaluations).sum();

    let mut best: Option<(&LocalOptimum, ProtocolPoint)> = None;
    for run in &runs {
        let point = param.point(&run.raw);
        best = match best {
            None => Some((run, point)),
            Some((b, bp)) => {
                let tol = TIE_TOLERANCE * b.value.abs().max(run.value.abs());
                let better = run.value > b.value + tol
                    || ((run.value - b.value).abs() <= tol && point.delta < bp.delta);
                if better {
                    Some((run, point))
                } else {
                    Some((b, bp))
                }
            }
        };
    }
    let (run, mut point) = best.expect("at least one start");
    if run.value <= FAILED_SCORE {
        return Err(Error::Infeasible(format!(
            "{} at {} km: every start failed to evaluate",
            problem.scenario, problem.distance_km
        )));
    }
    let mut breakdown = problem.model.evaluate(&point);
    if problem.scenario.is_finite() {
        let rounded = ProtocolPoint {
            sampled_bits: point.sampled_bits.round().max(1.0),
            ..point
        };
        // rounding can empty a raw key that is already down to a fraction of a bit
        if let Ok(b) = problem.model.evaluate(&rounded) {
            point = rounded;
            breakdown = Ok(b);
        }
    }
    let breakdown = breakdown?;
    Ok(OptimizationResult {
        best_point: point,
        best_rate: breakdown.rate,
        breakdown,
        evaluations,
        converged: run.converged,
    })
}

/// Raw-space box scanned by [`grid_oracle_2d`].
pub fn oracle_box(scenario: Scenario) -> Result<Vec<(f64, f64)>> {
    match scenario {
        Scenario::NoDecoyInfinite => Ok(vec![(-10.0, 0.0), (-12.0, 2.0)]),
        Scenario::DecoyInfinite => Ok(vec![(-10.0, 0.0), (-8.0, 3.0), (-8.0, 1.0)]),
        other => Err(Error::InvalidGrid(format!(
            "{other} has too many free parameters for a grid search"
        ))),
    }
}

/// Exhaustive grid over the raw box of an infinite-key scenario.
///
/// Each raw axis is sampled at `resolution` evenly spaced points including
/// both ends (one point means the box centre). In physical terms the grid is
/// logarithmic in `delta` and the transmittances away from their caps.
/// Grids of resolution `k` and `2k - 1` are nested.
pub fn grid_oracle_2d(
    problem: &OptimizationProblem,
    resolution: usize,
) -> Result<OptimizationResult> {
    if resolution == 0 {
        return Err(Error::InvalidGrid("resolution must be at least 1".into()));
    }
    problem.model.params.validate()?;
    let bounds = oracle_box(problem.scenario)?;
    let param = problem.parameterization();
    let axis = |&(lo, hi): &(f64, f64)| -> Vec<f64> {
        if resolution == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..resolution)
                .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
                .collect()
        }
    };
    let axes: Vec<Vec<f64>> = bounds.iter().map(axis).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let model = problem.model;
    let best = (0..total)
        .into_par_iter()
        .map(|mut k| {
            let raw: Vec<f64> = axes
                .iter()
                .map(|a| {
                    let v = a[k % a.len()];
                    k /= a.len();
                    v
                })
                .collect();
            let point = param.point(&raw);
            (score(&model, &point), point)
        })
        .reduce_with(|a, b| {
            let tol = TIE_TOLERANCE * a.0.abs().max(b.0.abs());
            if b.0 > a.0 + tol || ((b.0 - a.0).abs() <= tol && b.1.delta < a.1.delta) {
                b
            } else {
                a
            }
        })
        .expect("non-empty grid");
    if best.0 <= FAILED_SCORE {
        return Err(Error::Infeasible(format!(
            "{} at {} km: no grid point evaluates",
            problem.scenario, problem.distance_km
        )));
    }
    let breakdown = model.evaluate(&best.1)?;
    Ok(OptimizationResult {
        best_point: best.1,
        best_rate: breakdown.rate,
        breakdown,
        evaluations: total,
        converged: true,
    })
}
