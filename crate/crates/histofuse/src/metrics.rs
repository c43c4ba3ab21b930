//! Evaluation metrics: accuracy, per-class/macro/weighted F1, one-vs-rest
//! AUC, constrained sensitivity/specificity, multi-run aggregation, and the
//! Welch significance test.

use crate::error::{Error, Result};
use crate::model::predict_class;
use serde::{Deserialize, Serialize};

/// Smallest p-value reported; keeps p in (0, 1] even for degenerate arms.
pub const P_FLOOR: f64 = 1e-300;

/// One evaluated tile: the composite three-way distribution and the argmax
/// decision under the lower-index tie rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub tile_id: String,
    pub true_label: u8,
    pub dist3: [f64; 3],
    pub predicted: u8,
}

impl EvalRecord {
    pub fn new(tile_id: impl Into<String>, true_label: u8, dist3: [f64; 3]) -> Result<Self> {
        if true_label > 2 {
            return Err(Error::InvalidInput(format!(
                "label {true_label} out of range"
            )));
        }
        let sum: f64 = dist3.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || dist3.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "dist3 {dist3:?} is not a probability vector"
            )));
        }
        Ok(EvalRecord {
            tile_id: tile_id.into(),
            true_label,
            dist3,
            predicted: predict_class(&dist3),
        })
    }
}

/// Binary ROC AUC by the Mann-Whitney statistic: the probability that a
/// random positive outscores a random negative, ties counted one half.
/// Computed from average ranks, so it runs in O(n log n).
pub fn auc_binary(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::InvalidInput("scores/labels length mismatch".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // average ranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Mean of the three one-vs-rest AUCs; class `c` is scored by `dist3[c]`.
pub fn ovr_macro_auc(records: &[EvalRecord]) -> Result<f64> {
    let mut total = 0.0;
    for class in 0..3u8 {
        let scores: Vec<f64> = records.iter().map(|r| r.dist3[class as usize]).collect();
        let labels: Vec<bool> = records.iter().map(|r| r.true_label == class).collect();
        total += auc_binary(&scores, &labels).map_err(|_| {
            Error::UndefinedMetric(format!("class {class} missing from evaluation records"))
        })?;
    }
    Ok(total / 3.0)
}

fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = scores.to_vec();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup();
    let lo = t[0] - 1.0;
    let hi = t[t.len() - 1] + 1.0;
    t.push(lo);
    t.push(hi);
    t
}

fn sen_spe_at(scores: &[f64], labels: &[bool], t: f64) -> (f64, f64) {
    let mut tp = 0usize;
    let mut fn_ = 0usize;
    let mut tn = 0usize;
    let mut fp = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let pos = s > t;
        match (l, pos) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    (tp as f64 / (tp + fn_) as f64, tn as f64 / (tn + fp) as f64)
}

fn validate_binary(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::InvalidInput("scores/labels length mismatch".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::UndefinedMetric(
            "constrained sensitivity/specificity needs both classes".into(),
        ));
    }
    Ok(())
}

/// Maximum sensitivity over decision thresholds (`score > t` is positive)
/// subject to specificity >= `spe_floor`. The all-negative threshold always
/// satisfies the constraint, so the maximum is well-defined (possibly 0).
pub fn sen_at_spe(scores: &[f64], labels: &[bool], spe_floor: f64) -> Result<f64> {
    validate_binary(scores, labels)?;
    let mut best = 0.0f64;
    for t in threshold_candidates(scores) {
        let (sen, spe) = sen_spe_at(scores, labels, t);
        if spe >= spe_floor && sen > best {
            best = sen;
        }
    }
    Ok(best)
}

/// Mirror of [`sen_at_spe`]: maximum specificity subject to
/// sensitivity >= `sen_floor`.
pub fn spe_at_sen(scores: &[f64], labels: &[bool], sen_floor: f64) -> Result<f64> {
    validate_binary(scores, labels)?;
    let mut best = 0.0f64;
    for t in threshold_candidates(scores) {
        let (sen, spe) = sen_spe_at(scores, labels, t);
        if sen >= sen_floor && spe > best {
            best = spe;
        }
    }
    Ok(best)
}

/// One empirical ROC operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Raw ROC curve points over the candidate thresholds, sorted by ascending
/// false-positive rate. Intended for export, not plotting.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    validate_binary(scores, labels)?;
    let mut points: Vec<RocPoint> = threshold_candidates(scores)
        .into_iter()
        .map(|t| {
            let (sen, spe) = sen_spe_at(scores, labels, t);
            RocPoint {
                threshold: t,
                fpr: 1.0 - spe,
                tpr: sen,
            }
        })
        .collect();
    points.sort_by(|a, b| {
        (a.fpr, a.tpr)
            .partial_cmp(&(b.fpr, b.tpr))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(points)
}

/// Per-class F1 plus macro and support-weighted means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Summary {
    pub per_class: [f64; 3],
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

pub fn f1_scores(records: &[EvalRecord]) -> Result<F1Summary> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no evaluation records".into()));
    }
    let mut per_class = [0.0; 3];
    let mut support = [0usize; 3];
    for class in 0..3usize {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for r in records {
            let is_true = r.true_label as usize == class;
            let is_pred = r.predicted as usize == class;
            match (is_true, is_pred) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
            if is_true {
                support[class] += 1;
            }
        }
        per_class[class] = if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        };
    }
    let macro_f1 = per_class.iter().sum::<f64>() / 3.0;
    let total: usize = support.iter().sum();
    let weighted_f1 = per_class
        .iter()
        .zip(&support)
        .map(|(f, &s)| f * s as f64 / total as f64)
        .sum();
    Ok(F1Summary {
        per_class,
        macro_f1,
        weighted_f1,
    })
}

pub fn accuracy(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no evaluation records".into()));
    }
    let correct = records
        .iter()
        .filter(|r| r.predicted == r.true_label)
        .count();
    Ok(correct as f64 / records.len() as f64)
}

pub const SPE_FLOOR_DEFAULT: f64 = 0.90;
pub const SEN_FLOOR_DEFAULT: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub auc_ovr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClassMetrics {
    pub sen_at_spe90: f64,
    pub spe_at_sen90: f64,
    pub f1: f64,
    pub auc: f64,
}

/// The full evaluation table: overall plus one row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub overall: OverallMetrics,
    pub per_class: [PerClassMetrics; 3],
}

/// Computes every table entry from the evaluation records. All classes must
/// be present.
pub fn metric_table(records: &[EvalRecord]) -> Result<MetricTable> {
    let f1 = f1_scores(records)?;
    let acc = accuracy(records)?;
    let auc = ovr_macro_auc(records)?;
    let mut per_class = [PerClassMetrics {
        sen_at_spe90: 0.0,
        spe_at_sen90: 0.0,
        f1: 0.0,
        auc: 0.0,
    }; 3];
    for class in 0..3usize {
        let scores: Vec<f64> = records.iter().map(|r| r.dist3[class]).collect();
        let labels: Vec<bool> = records
            .iter()
            .map(|r| r.true_label as usize == class)
            .collect();
        per_class[class] = PerClassMetrics {
            sen_at_spe90: sen_at_spe(&scores, &labels, SPE_FLOOR_DEFAULT)?,
            spe_at_sen90: spe_at_sen(&scores, &labels, SEN_FLOOR_DEFAULT)?,
            f1: f1.per_class[class],
            auc: auc_binary(&scores, &labels)?,
        };
    }
    Ok(MetricTable {
        overall: OverallMetrics {
            accuracy: acc,
            f1_macro: f1.macro_f1,
            f1_weighted: f1.weighted_f1,
            auc_ovr: auc,
        },
        per_class,
    })
}

/// Mean and sample standard deviation of one metric over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}\u{00b1}{:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateOverall {
    pub accuracy: MeanStd,
    pub f1_macro: MeanStd,
    pub f1_weighted: MeanStd,
    pub auc_ovr: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePerClass {
    pub sen_at_spe90: MeanStd,
    pub spe_at_sen90: MeanStd,
    pub f1: MeanStd,
    pub auc: MeanStd,
}

/// Per-metric mean and std over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub n_runs: usize,
    pub overall: AggregateOverall,
    pub per_class: [AggregatePerClass; 3],
}

pub fn aggregate_runs(tables: &[MetricTable]) -> Result<RunAggregate> {
    if tables.len() < 2 {
        return Err(Error::InvalidInput(
            "aggregation needs at least 2 runs".into(),
        ));
    }
    let pick = |f: &dyn Fn(&MetricTable) -> f64| {
        MeanStd::from_values(&tables.iter().map(f).collect::<Vec<_>>())
    };
    let per_class = std::array::from_fn(|c| AggregatePerClass {
        sen_at_spe90: pick(&|t| t.per_class[c].sen_at_spe90),
        spe_at_sen90: pick(&|t| t.per_class[c].spe_at_sen90),
        f1: pick(&|t| t.per_class[c].f1),
        auc: pick(&|t| t.per_class[c].auc),
    });
    Ok(RunAggregate {
        n_runs: tables.len(),
        overall: AggregateOverall {
            accuracy: pick(&|t| t.overall.accuracy),
            f1_macro: pick(&|t| t.overall.f1_macro),
            f1_weighted: pick(&|t| t.overall.f1_weighted),
            auc_ovr: pick(&|t| t.overall.auc_ovr),
        },
        per_class,
    })
}

#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Regularized incomplete beta via Lentz's continued fraction.
fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // use whichever side of the symmetry converges fastest
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-14;
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        // even step
        let num = m_f * (b - m_f) * x / ((a + 2.0 * m_f - 1.0) * (a + 2.0 * m_f));
        d = 1.0 + num * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + num / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let num = -(a + m_f) * (a + b + m_f) * x / ((a + 2.0 * m_f) * (a + 2.0 * m_f + 1.0));
        d = 1.0 + num * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + num / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * beta_inc(df / 2.0, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-sided Welch t-test on per-run metric values. Arms with zero variance
/// short-circuit: equal means give p = 1, different means give the p floor.
pub fn significance(runs_a: &[f64], runs_b: &[f64]) -> Result<f64> {
    if runs_a.len() < 2 || runs_b.len() < 2 {
        return Err(Error::InvalidInput(
            "significance needs at least 2 runs per arm".into(),
        ));
    }
    let (na, nb) = (runs_a.len() as f64, runs_b.len() as f64);
    let ma = runs_a.iter().sum::<f64>() / na;
    let mb = runs_b.iter().sum::<f64>() / nb;
    let va = runs_a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (na - 1.0);
    let vb = runs_b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (nb - 1.0);

    if va == 0.0 && vb == 0.0 {
        return Ok(if ma == mb { 1.0 } else { P_FLOOR });
    }
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    let p = 2.0 * (1.0 - student_t_cdf(t.abs(), df));
    Ok(p.clamp(P_FLOOR, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_near(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn auc_pairwise_example() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [false, false, true, true];
        assert_near(auc_binary(&scores, &labels).unwrap(), 0.75, 1e-12);
    }

    #[test]
    fn auc_boundary_cases() {
        let sep = auc_binary(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_near(sep, 1.0, 1e-12);
        let ties = auc_binary(&[0.5, 0.5, 0.5, 0.5], &[false, true, false, true]).unwrap();
        assert_near(ties, 0.5, 1e-12);
        assert!(auc_binary(&[0.5, 0.5], &[true, true]).is_err());
    }

    #[test]
    fn sen_at_spe_boundary_cases() {
        // perfectly separated
        let s = sen_at_spe(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true], 0.9).unwrap();
        assert_near(s, 1.0, 1e-12);
        // inverted scores: no threshold reaches spe 0.9 with sen > 0
        let s = sen_at_spe(&[0.8, 0.9, 0.1, 0.2], &[false, false, true, true], 0.9).unwrap();
        assert_near(s, 0.0, 1e-12);
    }

    #[test]
    fn constrained_metrics_match_brute_force() {
        // deterministic pseudo-random instances
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..100 {
            let n = 2 + (next() * 48.0) as usize;
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                // quantized scores force ties
                scores.push((next() * 10.0).round() / 10.0);
                labels.push(next() > 0.5);
            }
            if !labels.contains(&true) || !labels.contains(&false) {
                continue;
            }
            // brute force: dense threshold sweep below min, between all pairs, above max
            let mut cands: Vec<f64> = scores.clone();
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut dense = vec![cands[0] - 0.05];
            for w in cands.windows(2) {
                dense.push(w[0]);
                dense.push((w[0] + w[1]) / 2.0);
            }
            dense.push(cands[cands.len() - 1]);
            dense.push(cands[cands.len() - 1] + 0.05);
            let brute_sen = dense
                .iter()
                .map(|&t| sen_spe_at(&scores, &labels, t))
                .filter(|&(_, spe)| spe >= 0.9)
                .map(|(sen, _)| sen)
                .fold(0.0f64, f64::max);
            let brute_spe = dense
                .iter()
                .map(|&t| sen_spe_at(&scores, &labels, t))
                .filter(|&(sen, _)| sen >= 0.9)
                .map(|(_, spe)| spe)
                .fold(0.0f64, f64::max);
            let got_sen = sen_at_spe(&scores, &labels, 0.9).unwrap();
            let got_spe = spe_at_sen(&scores, &labels, 0.9).unwrap();
            assert_eq!(got_sen, brute_sen, "trial {trial} sen mismatch");
            assert_eq!(got_spe, brute_spe, "trial {trial} spe mismatch");
        }
    }

    fn record(label: u8, dist3: [f64; 3]) -> EvalRecord {
        EvalRecord::new("t", label, dist3).unwrap()
    }

    #[test]
    fn f1_hand_computation() {
        // class 0: TP=2, FP=1, FN=1 -> F1 = 2/3
        let records = vec![
            record(0, [0.9, 0.05, 0.05]), // TP
            record(0, [0.8, 0.1, 0.1]),   // TP
            record(0, [0.1, 0.8, 0.1]),   // FN (pred 1)
            record(1, [0.7, 0.2, 0.1]),   // FP for class 0
            record(1, [0.1, 0.8, 0.1]),
            record(2, [0.1, 0.1, 0.8]),
        ];
        let f1 = f1_scores(&records).unwrap();
        assert_near(f1.per_class[0], 2.0 / 3.0, 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let records = vec![
            record(0, [1.0, 0.0, 0.0]),
            record(1, [0.0, 1.0, 0.0]),
            record(2, [0.0, 0.0, 1.0]),
            record(0, [0.9, 0.1, 0.0]),
            record(1, [0.1, 0.9, 0.0]),
            record(2, [0.0, 0.1, 0.9]),
        ];
        let t = metric_table(&records).unwrap();
        assert_near(t.overall.accuracy, 1.0, 1e-12);
        assert_near(t.overall.f1_macro, 1.0, 1e-12);
        assert_near(t.overall.f1_weighted, 1.0, 1e-12);
        assert_near(t.overall.auc_ovr, 1.0, 1e-12);
        for pc in &t.per_class {
            assert_near(pc.sen_at_spe90, 1.0, 1e-12);
            assert_near(pc.spe_at_sen90, 1.0, 1e-12);
        }
    }

    #[test]
    fn weighted_f1_equals_macro_on_equal_support() {
        let records = vec![
            record(0, [0.9, 0.05, 0.05]),
            record(0, [0.2, 0.7, 0.1]),
            record(1, [0.1, 0.8, 0.1]),
            record(1, [0.8, 0.1, 0.1]),
            record(2, [0.1, 0.1, 0.8]),
            record(2, [0.1, 0.8, 0.1]),
        ];
        let f1 = f1_scores(&records).unwrap();
        assert_near(f1.macro_f1, f1.weighted_f1, 1e-12);
    }

    #[test]
    fn accuracy_equals_support_weighted_recall() {
        let records = vec![
            record(0, [0.9, 0.05, 0.05]),
            record(0, [0.2, 0.7, 0.1]),
            record(0, [0.6, 0.3, 0.1]),
            record(1, [0.1, 0.8, 0.1]),
            record(2, [0.1, 0.1, 0.8]),
            record(2, [0.7, 0.2, 0.1]),
        ];
        let acc = accuracy(&records).unwrap();
        let mut weighted_recall = 0.0;
        for class in 0..3u8 {
            let in_class: Vec<_> = records.iter().filter(|r| r.true_label == class).collect();
            let recall = in_class.iter().filter(|r| r.predicted == class).count() as f64
                / in_class.len() as f64;
            weighted_recall += recall * in_class.len() as f64 / records.len() as f64;
        }
        assert_near(acc, weighted_recall, 1e-12);
    }

    #[test]
    fn aggregate_mean_and_sample_std() {
        let ms = MeanStd::from_values(&[0.8; 5]);
        assert_near(ms.mean, 0.8, 1e-12);
        assert_near(ms.std, 0.0, 1e-12);
        let ms = MeanStd::from_values(&[0.7, 0.9]);
        assert_near(ms.mean, 0.8, 1e-12);
        assert_near(ms.std, 0.1414213562, 1e-9);
        assert_eq!(format!("{ms}"), "0.80\u{00b1}0.14");
    }

    #[test]
    fn significance_symmetric_and_degenerate() {
        let a = [0.9, 0.91, 0.89, 0.9, 0.9];
        let b = [0.5, 0.52, 0.48, 0.5, 0.5];
        let p_ab = significance(&a, &b).unwrap();
        let p_ba = significance(&b, &a).unwrap();
        assert_near(p_ab, p_ba, 1e-15);
        assert!(p_ab < 0.05);

        let same = [0.8, 0.8, 0.8];
        assert_near(significance(&same, &same).unwrap(), 1.0, 1e-15);

        let lo = [0.5; 5];
        let hi = [0.9; 5];
        let p = significance(&hi, &lo).unwrap();
        assert!(p < 1e-6 && p > 0.0);
    }

    #[test]
    fn student_t_cdf_against_quadrature_and_reference() {
        // tail = 1/2 - integral of the density over [0, t]; Simpson on the
        // finite interval avoids the heavy-tail truncation error
        let pdf = |x: f64, df: f64| {
            let c = (ln_gamma((df + 1.0) / 2.0)
                - ln_gamma(df / 2.0)
                - 0.5 * (df * std::f64::consts::PI).ln())
            .exp();
            c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
        };
        // tail values cross-checked against an external statistics library
        let reference = [
            (2.2360679, 1.4705882, 0.0993637006),
            (1.0, 4.0, 0.1869504832),
            (3.5, 8.0, 0.0040395411),
            (0.5, 2.5, 0.3288489599),
        ];
        for (t, df, expected_tail) in reference {
            let (a, b, n) = (0.0, t, 40_000usize);
            let h = (b - a) / n as f64;
            let mut s = pdf(a, df) + pdf(b, df);
            for i in 1..n {
                let x = a + i as f64 * h;
                s += pdf(x, df) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let tail = 0.5 - s * h / 3.0;
            let got = 1.0 - student_t_cdf(t, df);
            assert_near(got, tail, 1e-9);
            assert_near(got, expected_tail, 1e-9);
        }
    }

    #[test]
    fn roc_points_trace_the_curve() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [false, false, true, true];
        let pts = roc_points(&scores, &labels).unwrap();
        // endpoints (0,0) and (1,1) always present
        assert!(pts.iter().any(|p| p.fpr == 0.0 && p.tpr == 0.0));
        assert!(pts.iter().any(|p| p.fpr == 1.0 && p.tpr == 1.0));
        // fpr is non-decreasing after sorting
        assert!(pts.windows(2).all(|w| w[0].fpr <= w[1].fpr));
        // trapezoidal area over distinct fpr steps equals the AUC
        let mut area = 0.0;
        for w in pts.windows(2) {
            area += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
        }
        let auc = auc_binary(&scores, &labels).unwrap();
        assert_near(area, auc, 1e-9);
    }

    #[test]
    fn eval_record_validation() {
        assert!(EvalRecord::new("x", 0, [0.5, 0.2, 0.3]).is_ok());
        assert!(EvalRecord::new("x", 3, [0.5, 0.2, 0.3]).is_err());
        assert!(EvalRecord::new("x", 0, [0.6, 0.6, 0.1]).is_err());
        let r = EvalRecord::new("x", 1, [0.2, 0.5, 0.3]).unwrap();
        assert_eq!(r.predicted, 1);
    }

    #[test]
    fn null_auc_is_half() {
        // random labels against random simplex scores concentrate at 1/2
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut records = Vec::new();
        for i in 0..10_000 {
            let a = next();
            let b = next() * (1.0 - a);
            let c = 1.0 - a - b;
            let label = (next() * 3.0) as u8;
            records.push(EvalRecord::new(format!("r{i}"), label.min(2), [a, b, c]).unwrap());
        }
        let auc = ovr_macro_auc(&records).unwrap();
        assert!((auc - 0.5).abs() < 0.02, "null AUC {auc}");
    }
}
