//! Distance scans, `L_max` and pulse-threshold solvers, and figure datasets.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::optimizer::{maximize, OptimizationProblem, OptimizationResult};
use crate::rate::{KeyRateModel, ProtocolPoint, RateBreakdown, Scenario};

/// Rate below which a point counts as having no key.
pub const DEFAULT_THRESHOLD: f64 = 1e-9;

/// Relative rise of the optimized rate tolerated between bracketing points.
pub const MONOTONE_SLACK: f64 = 0.02;

/// Resolution of the `L_max` bisection, km.
pub const LMAX_RESOLUTION_KM: f64 = 0.1;

/// Resolution of the pulse-threshold bisection, decades.
pub const THRESHOLD_RESOLUTION_DECADES: f64 = 0.05;

/// Finite pulse counts of the no-decoy figure.
pub const NO_DECOY_PULSES: [f64; 4] = [5e10, 1e11, 1e12, 1e14];

/// Finite pulse counts of the decoy figure.
pub const DECOY_PULSES: [f64; 5] = [5e10, 1e11, 1e12, 1e14, 1e16];

/// `0, 2, ..., 130` km.
pub fn default_distance_grid() -> Vec<f64> {
    distance_grid(0.0, 130.0, 2.0).expect("valid default grid")
}

/// Evenly spaced distances from `start` to `stop` inclusive.
pub fn distance_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start >= 0.0 && start.is_finite() && stop.is_finite() && step > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "start {start}, stop {stop}, step {step}"
        )));
    }
    if stop < start {
        return Err(Error::InvalidGrid(format!(
            "empty range {start}..{stop} km"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

/// One optimized point of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub scenario: Scenario,
    pub distance_km: f64,
    pub pulses: f64,
    pub rate: f64,
    /// `None` when no start could be evaluated.
    pub point: Option<ProtocolPoint>,
    pub breakdown: Option<RateBreakdown>,
    pub converged: bool,
}

impl ScanRecord {
    pub fn has_key(&self, threshold: f64) -> bool {
        self.rate > threshold
    }

    fn failed(scenario: Scenario, distance_km: f64, pulses: f64) -> Self {
        ScanRecord {
            scenario,
            distance_km,
            pulses,
            rate: f64::NAN,
            point: None,
            breakdown: None,
            converged: false,
        }
    }

    /// Mean photon numbers of the signal and decoy classes.
    pub fn intensities(&self, model: &KeyRateModel) -> (f64, f64) {
        match &self.point {
            Some(p) => (p.mu_signal(&model.params), p.mu_decoy(&model.params)),
            None => (f64::NAN, f64::NAN),
        }
    }

    /// Sampled fraction of the sifted signal key.
    pub fn sampling_ratio(&self) -> f64 {
        match (&self.point, &self.breakdown) {
            (Some(p), Some(b)) => b.sampling_ratio(p.sampled_bits),
            _ => f64::NAN,
        }
    }

    /// Final key length `R N_A`.
    pub fn key_length(&self) -> f64 {
        if self.pulses.is_finite() {
            self.rate * self.pulses
        } else {
            f64::INFINITY
        }
    }
}

/// Scenario-independent settings shared by scans and solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experiment {
    pub model: KeyRateModel,
    pub seed: u64,
    pub starts: usize,
    pub threshold: f64,
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment {
            model: KeyRateModel::default(),
            seed: 0,
            starts: 16,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Experiment {
    pub fn new(model: KeyRateModel) -> Self {
        Experiment {
            model,
            ..Default::default()
        }
    }

    pub fn optimize(
        &self,
        scenario: Scenario,
        distance_km: f64,
        pulses: f64,
        warm: Option<ProtocolPoint>,
    ) -> Result<OptimizationResult> {
        let mut problem = OptimizationProblem::new(self.model, scenario, distance_km, pulses)
            .with_seed(self.seed)
            .with_warm_start(warm);
        problem.starts = self.starts;
        maximize(&problem)
    }

    /// Optimizes every grid point in order, seeding each search with the
    /// previous optimum.
    pub fn scan_distance(
        &self,
        scenario: Scenario,
        pulses: f64,
        grid: &[f64],
    ) -> Result<Vec<ScanRecord>> {
        if grid.is_empty() {
            return Err(Error::InvalidGrid("no distances".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(
                "distances must increase strictly".into(),
            ));
        }
        let pulses = if scenario.is_finite() {
            pulses
        } else {
            f64::INFINITY
        };
        let mut warm = None;
        let mut out = Vec::with_capacity(grid.len());
        for &l in grid {
            let rec = match self.optimize(scenario, l, pulses, warm) {
                Ok(r) => {
                    warm = Some(r.best_point);
                    ScanRecord {
                        scenario,
                        distance_km: l,
                        pulses,
                        rate: r.best_rate,
                        point: Some(r.best_point),
                        breakdown: Some(r.breakdown),
                        converged: r.converged,
                    }
                }
                Err(Error::Infeasible(_)) => ScanRecord::failed(scenario, l, pulses),
                Err(e) => return Err(e),
            };
            out.push(rec);
        }
        Ok(out)
    }

    /// Largest distance whose optimized rate exceeds the threshold.
    pub fn find_lmax(&self, scenario: Scenario, pulses: f64) -> Result<f64> {
        let mut warm: Option<ProtocolPoint> = None;
        let profile = |l: f64| -> Result<f64> {
            let r = self.optimize(scenario, l, pulses, warm)?;
            if r.best_rate > self.threshold {
                warm = Some(r.best_point);
            }
            Ok(r.best_rate)
        };
        find_lmax_with(profile, self.threshold, &LmaxSearch::default())
    }

    /// Smallest pulse count, to a twentieth of a decade, giving a positive `L_max`.
    ///
    /// `L_max > 0` exactly when the optimized rate at zero distance exceeds the
    /// threshold, so each bisection step is one optimization at `L = 0`.
    pub fn find_na_threshold(&self, scenario: Scenario) -> Result<f64> {
        if !scenario.is_finite() {
            return Err(Error::InvalidPoint(format!(
                "{scenario} has no pulse threshold"
            )));
        }
        let has_key = |log_n: f64| -> Result<bool> {
            Ok(self
                .optimize(scenario, 0.0, 10f64.powf(log_n), None)?
                .best_rate
                > self.threshold)
        };
        let (mut lo, mut hi) = (6.0f64, 18.0f64);
        if has_key(lo)? || !has_key(hi)? {
            return Err(Error::ThresholdOutsideRange {
                lo: 10f64.powf(lo),
                hi: 10f64.powf(hi),
            });
        }
        while hi - lo > THRESHOLD_RESOLUTION_DECADES {
            let mid = 0.5 * (lo + hi);
            if has_key(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(10f64.powf(hi))
    }

    /// Distance at which the optimized rate falls to `target`.
    pub fn distance_at_rate(&self, scenario: Scenario, pulses: f64, target: f64) -> Result<f64> {
        let mut warm: Option<ProtocolPoint> = None;
        let profile = |l: f64| -> Result<f64> {
            let r = self.optimize(scenario, l, pulses, warm)?;
            if r.best_rate > target {
                warm = Some(r.best_point);
            }
            Ok(r.best_rate)
        };
        find_lmax_with(profile, target, &LmaxSearch::default())
    }
}

/// Bracketing grid used before bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmaxSearch {
    pub step_km: f64,
    pub limit_km: f64,
    pub resolution_km: f64,
}

impl Default for LmaxSearch {
    fn default() -> Self {
        LmaxSearch {
            step_km: 5.0,
            limit_km: 400.0,
            resolution_km: LMAX_RESOLUTION_KM,
        }
    }
}

/// `L_max` of an arbitrary non-increasing rate profile.
///
/// Returns 0 when `profile(0)` does not exceed the threshold. The profile is
/// stepped on the bracketing grid until it drops to the threshold, failing
/// with [`Error::NonMonotone`] if it rises by more than [`MONOTONE_SLACK`]
/// on the way, then bisected to the search resolution. The midpoint of the
/// final bracket is returned.
pub fn find_lmax_with<F>(mut profile: F, threshold: f64, search: &LmaxSearch) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut prev = profile(0.0)?;
    if !(prev > threshold) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let hi = loop {
        let l = lo + search.step_km;
        if l > search.limit_km {
            return Err(Error::InvalidGrid(format!(
                "rate still above threshold at {} km",
                search.limit_km
            )));
        }
        let r = profile(l)?;
        if r > prev * (1.0 + MONOTONE_SLACK) {
            return Err(Error::NonMonotone {
                from_km: lo,
                from: prev,
                to_km: l,
                to: r,
            });
        }
        if !(r > threshold) {
            break l;
        }
        lo = l;
        prev = r;
    };
    let mut hi = hi;
    while hi - lo > search.resolution_km {
        let mid = 0.5 * (lo + hi);
        if profile(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Text(String),
    Num(f64),
    Flag(bool),
}

/// 17 significant digits, so every value parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Text(s) => s.clone(),
            Field::Num(x) => format_number(*x),
            Field::Flag(b) => (if *b { "1" } else { "0" }).into(),
        }
    }
}

impl Dataset {
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Field::render).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// Column order of [`records_dataset`].
pub const RECORD_COLUMNS: [&str; 31] = [
    "scenario",
    "L_km",
    "N_A",
    "R",
    "has_key",
    "lambda_S",
    "lambda_D",
    "delta",
    "m_E",
    "P_S",
    "P_D",
    "P_V",
    "eps_PA",
    "eps_EC",
    "eps_bar",
    "eps_u_S",
    "eps_u_D",
    "eps_u_V",
    "eps_E",
    "mu_S",
    "mu_D",
    "r",
    "n",
    "ell",
    "Q_S",
    "E_S",
    "P_u",
    "Q1u",
    "E1u",
    "Delta",
    "converged",
];

/// Flattens scan records into the fixed record layout.
pub fn records_dataset(
    name: &str,
    records: &[ScanRecord],
    model: &KeyRateModel,
    threshold: f64,
) -> Dataset {
    let nan = f64::NAN;
    let rows = records
        .iter()
        .map(|r| {
            let (mu_s, mu_d) = r.intensities(model);
            let p = r.point;
            let b = r.breakdown.unwrap_or_default();
            let get = |f: fn(&ProtocolPoint) -> f64| p.as_ref().map_or(nan, f);
            let mut row = vec![
                Field::Text(r.scenario.token().into()),
                Field::Num(r.distance_km),
                Field::Num(r.pulses),
                Field::Num(r.rate),
                Field::Flag(r.has_key(threshold)),
            ];
            row.extend(
                [
                    get(|p| p.lambda_signal),
                    get(|p| p.lambda_decoy),
                    get(|p| p.delta),
                    get(|p| p.sampled_bits),
                    get(|p| p.classes.signal),
                    get(|p| p.classes.decoy),
                    get(|p| p.classes.vacuum),
                    get(|p| p.budget.privacy_amplification),
                    get(|p| p.budget.error_correction),
                    get(|p| p.budget.smoothing),
                    get(|p| p.budget.untagged_signal),
                    get(|p| p.budget.untagged_decoy),
                    get(|p| p.budget.untagged_vacuum),
                    get(|p| p.budget.qber),
                    mu_s,
                    mu_d,
                    r.sampling_ratio(),
                    b.raw_key_bits,
                    r.key_length(),
                    b.gain,
                    b.qber,
                    b.untagged_lower,
                    b.q1u_lower,
                    b.e1u_upper,
                    b.finite_correction,
                ]
                .map(Field::Num),
            );
            row.push(Field::Flag(r.converged));
            row
        })
        .collect();
    Dataset {
        name: name.into(),
        columns: RECORD_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
    }
}

/// Rebuilds the protocol point stored in one row of [`records_dataset`].
pub fn point_from_row(fields: &[&str]) -> Result<ProtocolPoint> {
    use crate::rate::{ClassProbabilities, ErrorBudget};
    if fields.len() != RECORD_COLUMNS.len() {
        return Err(Error::InvalidPoint(format!(
            "row has {} fields, expected {}",
            fields.len(),
            RECORD_COLUMNS.len()
        )));
    }
    let num = |i: usize| -> Result<f64> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| Error::InvalidPoint(format!("{} = '{}'", RECORD_COLUMNS[i], fields[i])))
    };
    Ok(ProtocolPoint {
        scenario: fields[0].parse()?,
        distance_km: num(1)?,
        pulses: num(2)?,
        lambda_signal: num(5)?,
        lambda_decoy: num(6)?,
        delta: num(7)?,
        sampled_bits: num(8)?,
        classes: ClassProbabilities {
            signal: num(9)?,
            decoy: num(10)?,
            vacuum: num(11)?,
        },
        budget: ErrorBudget {
            privacy_amplification: num(12)?,
            error_correction: num(13)?,
            smoothing: num(14)?,
            untagged_signal: num(15)?,
            untagged_decoy: num(16)?,
            untagged_vacuum: num(17)?,
            qber: num(18)?,
        },
    })
}

/// Figures whose data can be regenerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// No-decoy rate, sampling ratio and intensity versus distance.
    NoDecoyScans,
    /// `L_max` versus pulse count for both protocols.
    MaxDistance,
    /// Decoy rate, class probabilities, sampling ratio and intensities versus distance.
    DecoyScans,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig2" => Ok(Figure::NoDecoyScans),
            "fig3" => Ok(Figure::MaxDistance),
            "fig5" => Ok(Figure::DecoyScans),
            _ => Err(Error::UnknownFigure(s.into())),
        }
    }
}

/// Compact pulse-count label such as `5e10` or `inf`.
pub fn pulse_label(n: f64) -> String {
    if n.is_infinite() {
        return "inf".into();
    }
    let e = n.log10().floor();
    let m = n / 10f64.powf(e);
    if (m - m.round()).abs() < 1e-9 && m.round() == 1.0 {
        format!("1e{e}")
    } else {
        format!("{}e{e}", (m * 1e6).round() / 1e6)
    }
}

// one column per series, rows aligned on the distance grid
fn wide(
    name: &str,
    grid: &[f64],
    series: &[(String, &[ScanRecord])],
    value: impl Fn(&ScanRecord) -> f64,
) -> Dataset {
    let mut columns = vec!["L_km".to_string()];
    columns.extend(series.iter().map(|(label, _)| label.clone()));
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut row = vec![Field::Num(l)];
            row.extend(series.iter().map(|(_, recs)| Field::Num(value(&recs[i]))));
            row
        })
        .collect();
    Dataset {
        name: name.into(),
        columns,
        rows,
    }
}

impl Experiment {
    /// Every curve of a figure, on the given distance grid (unused by `fig3`).
    pub fn figure_datasets(&self, figure: Figure, grid: &[f64]) -> Result<Vec<Dataset>> {
        let model = self.model;
        let rate_or_none = |r: &ScanRecord| r.rate;
        match figure {
            Figure::NoDecoyScans => {
                let inf = self.scan_distance(Scenario::NoDecoyInfinite, f64::INFINITY, grid)?;
                let finite: Vec<(f64, Vec<ScanRecord>)> = NO_DECOY_PULSES
                    .iter()
                    .map(|&n| Ok((n, self.scan_distance(Scenario::NoDecoyFinite, n, grid)?)))
                    .collect::<Result<_>>()?;
                let mut rate_series = vec![("R_inf".to_string(), inf.as_slice())];
                rate_series.extend(
                    finite
                        .iter()
                        .map(|(n, r)| (format!("R_{}", pulse_label(*n)), r.as_slice())),
                );
                let ratio_series: Vec<_> = finite
                    .iter()
                    .map(|(n, r)| (format!("r_{}", pulse_label(*n)), r.as_slice()))
                    .collect();
                let mu_series = vec![
                    ("mu_inf".to_string(), inf.as_slice()),
                    (
                        format!("mu_{}", pulse_label(finite[0].0)),
                        finite[0].1.as_slice(),
                    ),
                ];
                Ok(vec![
                    wide("fig2a_rate", grid, &rate_series, rate_or_none),
                    wide(
                        "fig2b_sampling_ratio",
                        grid,
                        &ratio_series,
                        ScanRecord::sampling_ratio,
                    ),
                    wide("fig2c_intensity", grid, &mu_series, |r| {
                        r.intensities(&model).0
                    }),
                ])
            }
            Figure::DecoyScans => {
                let inf = self.scan_distance(Scenario::DecoyInfinite, f64::INFINITY, grid)?;
                let finite: Vec<(f64, Vec<ScanRecord>)> = DECOY_PULSES
                    .iter()
                    .map(|&n| Ok((n, self.scan_distance(Scenario::DecoyFinite, n, grid)?)))
                    .collect::<Result<_>>()?;
                let label = |p: &str, n: f64| format!("{p}_{}", pulse_label(n));
                let mut rate_series = vec![("R_inf".to_string(), inf.as_slice())];
                rate_series.extend(finite.iter().map(|(n, r)| (label("R", *n), r.as_slice())));
                let mut class_cols = vec!["L_km".to_string()];
                for (n, _) in &finite {
                    class_cols.push(label("P_S", *n));
                    class_cols.push(label("P_D", *n));
                }
                let class_rows = grid
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| {
                        let mut row = vec![Field::Num(l)];
                        for (_, recs) in &finite {
                            let c = recs[i].point.map(|p| (p.classes.signal, p.classes.decoy));
                            let (s, d) = c.unwrap_or((f64::NAN, f64::NAN));
                            row.push(Field::Num(s));
                            row.push(Field::Num(d));
                        }
                        row
                    })
                    .collect();
                let ratio_series: Vec<_> = finite
                    .iter()
                    .filter(|(n, _)| *n <= 1e14)
                    .map(|(n, r)| (label("r_D", *n), r.as_slice()))
                    .collect();
                let mut mu_cols = vec!["L_km".to_string(), "mu_S_inf".into(), "mu_D_inf".into()];
                for (n, _) in &finite {
                    mu_cols.push(label("mu_S", *n));
                    mu_cols.push(label("mu_D", *n));
                }
                let mu_rows = grid
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| {
                        let mut row = vec![Field::Num(l)];
                        let (s, d) = inf[i].intensities(&model);
                        row.extend([Field::Num(s), Field::Num(d)]);
                        for (_, recs) in &finite {
                            let (s, d) = recs[i].intensities(&model);
                            row.extend([Field::Num(s), Field::Num(d)]);
                        }
                        row
                    })
                    .collect();
                Ok(vec![
                    wide("fig5a_rate", grid, &rate_series, rate_or_none),
                    Dataset {
                        name: "fig5b_class_probabilities".into(),
                        columns: class_cols,
                        rows: class_rows,
                    },
                    wide(
                        "fig5c_sampling_ratio",
                        grid,
                        &ratio_series,
                        ScanRecord::sampling_ratio,
                    ),
                    Dataset {
                        name: "fig5d_intensities".into(),
                        columns: mu_cols,
                        rows: mu_rows,
                    },
                ])
            }
            Figure::MaxDistance => {
                let steps = ((17.0 - 8.0) / 0.25) as usize;
                let mut logs: Vec<f64> = (0..=steps).map(|k| 8.0 + 0.25 * k as f64).collect();
                let thresholds = [
                    self.find_na_threshold(Scenario::NoDecoyFinite)?,
                    self.find_na_threshold(Scenario::DecoyFinite)?,
                ];
                logs.extend(thresholds.iter().map(|t| t.log10()));
                logs.sort_by(f64::total_cmp);
                logs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                let mut rows = Vec::with_capacity(logs.len());
                for &lg in &logs {
                    let n = 10f64.powf(lg);
                    rows.push(vec![
                        Field::Num(lg),
                        Field::Num(self.find_lmax(Scenario::NoDecoyFinite, n)?),
                        Field::Num(self.find_lmax(Scenario::DecoyFinite, n)?),
                    ]);
                }
                let asymptotes = vec![
                    vec![
                        Field::Text(Scenario::NoDecoyInfinite.token().into()),
                        Field::Num(self.find_lmax(Scenario::NoDecoyInfinite, f64::INFINITY)?),
                    ],
                    vec![
                        Field::Text(Scenario::DecoyInfinite.token().into()),
                        Field::Num(self.find_lmax(Scenario::DecoyInfinite, f64::INFINITY)?),
                    ],
                ];
                Ok(vec![
                    Dataset {
                        name: "fig3_lmax".into(),
                        columns: vec![
                            "log10_N_A".into(),
                            "L_max_no_decoy".into(),
                            "L_max_decoy".into(),
                        ],
                        rows,
                    },
                    Dataset {
                        name: "fig3_asymptotes".into(),
                        columns: vec!["scenario".into(), "L_max".into()],
                        rows: asymptotes,
                    },
                ])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_profile_gives_sixty_km() {
        let l = find_lmax_with(
            |l| Ok(1e-3 * 10f64.powf(-l / 10.0)),
            1e-9,
            &LmaxSearch::default(),
        )
        .unwrap();
        assert!((l - 60.0).abs() <= 0.05, "{l}");
    }

    #[test]
    fn no_key_at_origin_gives_zero() {
        let l = find_lmax_with(|_| Ok(-1.0), 1e-9, &LmaxSearch::default()).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn rising_profile_is_rejected() {
        let r = find_lmax_with(
            |l| {
                Ok(if l == 10.0 {
                    2e-3
                } else {
                    1e-3 * 10f64.powf(-l / 10.0)
                })
            },
            1e-9,
            &LmaxSearch::default(),
        );
        assert!(matches!(r, Err(Error::NonMonotone { .. })), "{r:?}");
        // a rise inside the slack is tolerated
        let r = find_lmax_with(
            |l| {
                Ok(if l == 5.0 {
                    1.01e-3
                } else {
                    1e-3 * 10f64.powf(-l / 10.0)
                })
            },
            1e-9,
            &LmaxSearch::default(),
        );
        assert!(r.is_ok());
    }

    #[test]
    fn grids() {
        assert_eq!(default_distance_grid().len(), 66);
        assert_eq!(distance_grid(0.0, 1.0, 0.5).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(distance_grid(5.0, 1.0, 1.0).is_err());
        assert!(distance_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            5e-324,
            1.7976931348623157e308,
            -2.5e-7,
            123.456,
        ] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn figure_ids() {
        assert_eq!("fig5".parse::<Figure>().unwrap(), Figure::DecoyScans);
        assert!(matches!(
            "fig4".parse::<Figure>(),
            Err(Error::UnknownFigure(_))
        ));
        assert_eq!(pulse_label(5e10), "5e10");
        assert_eq!(pulse_label(1e14), "1e14");
        assert_eq!(pulse_label(f64::INFINITY), "inf");
    }

    #[test]
    fn single_point_scan_and_flat_record() {
        let e = Experiment::default();
        let recs = e
            .scan_distance(Scenario::NoDecoyInfinite, f64::INFINITY, &[0.0])
            .unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].has_key(1e-9));
        let d = records_dataset("x", &recs, &e.model, 1e-9);
        assert_eq!(d.rows[0].len(), RECORD_COLUMNS.len());
        assert!(e
            .scan_distance(Scenario::NoDecoyInfinite, f64::INFINITY, &[])
            .is_err());
        assert!(e
            .scan_distance(Scenario::NoDecoyInfinite, f64::INFINITY, &[2.0, 1.0])
            .is_err());
    }
}
