//! Thurstone Case V scaling of two-alternative forced-choice counts.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plot::{bar_chart, Bar};

/// `counts[i][j]` = times method `i` was preferred over method `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMatrix {
    methods: Vec<String>,
    counts: Vec<Vec<u64>>,
    trials: u64,
}

impl PreferenceMatrix {
    /// Every pair must have the same positive number of trials and the
    /// diagonal must be zero.
    pub fn new(methods: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = methods.len();
        if n < 2 {
            return Err(Error::Domain(format!("need at least two methods, got {n}")));
        }
        if counts.len() != n || counts.iter().any(|row| row.len() != n) {
            return Err(Error::Shape(format!("preference counts must be {n}x{n}")));
        }
        let mut trials = None;
        for i in 0..n {
            if counts[i][i] != 0 {
                return Err(Error::Invalid(format!("method '{}' is compared with itself", methods[i])));
            }
            for j in i + 1..n {
                let t = counts[i][j] + counts[j][i];
                match trials {
                    None => trials = Some(t),
                    Some(prev) if prev != t => {
                        return Err(Error::Invalid(format!(
                            "pair '{}'/'{}' has {t} trials, earlier pairs have {prev}",
                            methods[i], methods[j]
                        )))
                    }
                    _ => {}
                }
            }
        }
        let trials = trials.unwrap_or(0);
        if trials == 0 {
            return Err(Error::Degenerate("no trials recorded".into()));
        }
        Ok(Self { methods, counts, trials })
    }

    /// Parses `winner,loser,count` rows; repeated pairs accumulate. Methods
    /// are numbered in order of first appearance.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path, message),
            other => Error::parse(path, other.to_string()),
        })
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            winner: String,
            loser: String,
            count: u64,
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::parse("<csv>", e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["winner", "loser", "count"] {
            return Err(Error::parse("<csv>", "header must be 'winner,loser,count'"));
        }
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut methods = Vec::new();
        let mut pairs = Vec::new();
        for (line, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::parse("<csv>", format!("row {}: {e}", line + 2)))?;
            let mut id = |name: &str| {
                *index.entry(name.to_string()).or_insert_with(|| {
                    methods.push(name.to_string());
                    methods.len() - 1
                })
            };
            let (w, l) = (id(&row.winner), id(&row.loser));
            pairs.push((w, l, row.count));
        }
        let n = methods.len();
        let mut counts = vec![vec![0u64; n]; n];
        for (w, l, c) in pairs {
            counts[w][l] += c;
        }
        Self::new(methods, counts)
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }

    /// Proportion of trials in which `i` beat `j`, clipped to
    /// `[1/(2·trials), 1 − 1/(2·trials)]`.
    pub fn proportion(&self, i: usize, j: usize) -> f64 {
        let t = self.trials as f64;
        let lo = 1.0 / (2.0 * t);
        (self.counts[i][j] as f64 / t).clamp(lo, 1.0 - lo)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (relative error about 1.2e-9) followed by
/// one Halley step against [`normal_cdf`], which brings it to machine
/// precision over `(0, 1)`.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} is outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] =
        [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// Case V scale values: the row mean of `Φ⁻¹(p_ij)` (diagonal counted as 0),
/// shifted so the smallest value is 0.
pub fn thurstone_case_v(prefs: &PreferenceMatrix) -> Result<Vec<f64>> {
    let n = prefs.len();
    let mut scales = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if i != j {
                sum += inverse_normal_cdf(prefs.proportion(i, j))?;
            }
        }
        scales.push(sum / n as f64);
    }
    let min = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(scales.into_iter().map(|s| s - min).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScale {
    pub method: String,
    pub scale: f64,
    /// Percentile bootstrap interval; an approximation, not the paper's CI method.
    pub bootstrap_interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub trials_per_pair: u64,
    pub resamples: usize,
    pub seed: u64,
    pub confidence: f64,
    pub methods: Vec<MethodScale>,
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Bar chart of the scale values; error bars are half the bootstrap interval width.
    pub fn write_plot(&self, path: &Path) -> Result<()> {
        let bars: Vec<Bar<'_>> = self
            .methods
            .iter()
            .map(|m| Bar {
                label: &m.method,
                value: m.scale,
                spread: m.bootstrap_interval.map_or(0.0, |[lo, hi]| (hi - lo) / 2.0),
            })
            .collect();
        bar_chart(path, "Thurstone Case V scale", &bars)
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Case V scales plus a percentile bootstrap that redraws every pair's
/// trials from its observed proportion.
pub fn analyze_study(prefs: &PreferenceMatrix, resamples: usize, seed: u64, confidence: f64) -> Result<StudyReport> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence {confidence} is outside (0, 1)")));
    }
    let scales = thurstone_case_v(prefs)?;
    let n = prefs.len();
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..resamples {
        let mut counts = vec![vec![0u64; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let p = prefs.counts[i][j] as f64 / prefs.trials as f64;
                let wins = (0..prefs.trials).filter(|_| rng.gen::<f64>() < p).count() as u64;
                counts[i][j] = wins;
                counts[j][i] = prefs.trials - wins;
            }
        }
        let resampled = PreferenceMatrix { methods: prefs.methods.clone(), counts, trials: prefs.trials };
        for (d, s) in draws.iter_mut().zip(thurstone_case_v(&resampled)?) {
            d.push(s);
        }
    }
    let tail = (1.0 - confidence) / 2.0;
    let methods = prefs
        .methods
        .iter()
        .zip(scales)
        .zip(draws)
        .map(|((m, scale), mut d)| {
            let bootstrap_interval = (!d.is_empty()).then(|| {
                d.sort_by(f64::total_cmp);
                [percentile(&d, tail), percentile(&d, 1.0 - tail)]
            });
            MethodScale { method: m.clone(), scale, bootstrap_interval }
        })
        .collect();
    Ok(StudyReport { trials_per_pair: prefs.trials, resamples, seed, confidence, methods })
}
