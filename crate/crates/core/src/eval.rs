//! Biometric error rates and the evaluation protocol helpers.
//!
//! Scores are spoof probabilities: higher means more likely an attack. At a
//! threshold `t` a sample is accepted as genuine when `score < t`, so
//!
//! * FAR(t) = fraction of spoof samples with `score < t`,
//! * FRR(t) = fraction of genuine samples with `score >= t`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{GENUINE, SPOOF};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Spoof,
}

impl Label {
    pub fn class(self) -> u8 {
        match self {
            Label::Genuine => GENUINE,
            Label::Spoof => SPOOF,
        }
    }

    pub fn from_class(c: u8) -> Result<Label> {
        match c {
            GENUINE => Ok(Label::Genuine),
            SPOOF => Ok(Label::Spoof),
            other => Err(Error::invalid(format!("class {other} is not 0 or 1"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Genuine => "genuine",
            Label::Spoof => "spoof",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "genuine" => Ok(Label::Genuine),
            "spoof" => Ok(Label::Spoof),
            other => Err(Error::invalid(format!("unknown label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub label: Label,
    pub group: Option<String>,
}

impl ScoredSample {
    pub fn new(score: f64, label: Label) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(format!("score {score} outside [0, 1]")));
        }
        Ok(ScoredSample {
            score,
            label,
            group: None,
        })
    }
}

/// Pairs scores with 0/1 class labels.
pub fn scored(scores: &[f64], labels: &[u8]) -> Result<Vec<ScoredSample>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| ScoredSample::new(s, Label::from_class(l)?))
        .collect()
}

fn class_scores(samples: &[ScoredSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut genuine = Vec::new();
    let mut spoof = Vec::new();
    for s in samples {
        if s.score.is_nan() {
            return Err(Error::invalid("NaN score"));
        }
        match s.label {
            Label::Genuine => genuine.push(s.score),
            Label::Spoof => spoof.push(s.score),
        }
    }
    if genuine.is_empty() || spoof.is_empty() {
        return Err(Error::degenerate(
            "error rates need at least one genuine and one spoof sample",
        ));
    }
    genuine.sort_by(f64::total_cmp);
    spoof.sort_by(f64::total_cmp);
    Ok((genuine, spoof))
}

/// FAR/FRR sampled at every distinct score plus one threshold just above the
/// largest score (where everything is accepted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub far: Vec<f64>,
    pub frr: Vec<f64>,
}

pub fn roc_curve(samples: &[ScoredSample]) -> Result<RocCurve> {
    let (genuine, spoof) = class_scores(samples)?;
    let mut thresholds: Vec<f64> = genuine.iter().chain(&spoof).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let top = *thresholds.last().expect("non-empty");
    thresholds.push(top.next_up());
    let (ng, ns) = (genuine.len() as f64, spoof.len() as f64);
    // Two-pointer sweep: `gi`/`si` count scores strictly below `t`.
    let (mut gi, mut si) = (0usize, 0usize);
    let mut far = Vec::with_capacity(thresholds.len());
    let mut frr = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        while gi < genuine.len() && genuine[gi] < t {
            gi += 1;
        }
        while si < spoof.len() && spoof[si] < t {
            si += 1;
        }
        far.push(si as f64 / ns);
        frr.push((genuine.len() - gi) as f64 / ng);
    }
    Ok(RocCurve {
        thresholds,
        far,
        frr,
    })
}

/// Equal error rate and the threshold where FAR meets FRR, linearly
/// interpolated between the two bracketing thresholds when the curves do
/// not meet exactly.
pub fn eer(samples: &[ScoredSample]) -> Result<(f64, f64)> {
    Ok(eer_from_curve(&roc_curve(samples)?))
}

pub fn eer_from_curve(curve: &RocCurve) -> (f64, f64) {
    let diff = |i: usize| curve.far[i] - curve.frr[i];
    // diff is -1 at the lowest threshold and +1 above the highest score.
    let i = (0..curve.thresholds.len())
        .find(|&i| diff(i) >= 0.0)
        .expect("FAR reaches 1 at the top threshold");
    if diff(i) == 0.0 || i == 0 {
        return (curve.far[i], curve.thresholds[i]);
    }
    let (d0, d1) = (diff(i - 1), diff(i));
    let alpha = -d0 / (d1 - d0);
    let rate = curve.far[i - 1] + alpha * (curve.far[i] - curve.far[i - 1]);
    let threshold =
        curve.thresholds[i - 1] + alpha * (curve.thresholds[i] - curve.thresholds[i - 1]);
    (rate, threshold)
}

/// FAR and FRR of `samples` at a fixed threshold.
pub fn rates_at(samples: &[ScoredSample], threshold: f64) -> Result<(f64, f64)> {
    let (genuine, spoof) = class_scores(samples)?;
    let far = spoof.iter().filter(|&&s| s < threshold).count() as f64 / spoof.len() as f64;
    let frr = genuine.iter().filter(|&&s| s >= threshold).count() as f64 / genuine.len() as f64;
    Ok((far, frr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hter {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub hter: f64,
}

/// Half total error rate on `test` at the EER threshold of `dev`.
pub fn hter(dev: &[ScoredSample], test: &[ScoredSample]) -> Result<Hter> {
    let (_, threshold) = eer(dev)?;
    hter_at(test, threshold)
}

/// Half total error rate on `test` at a given threshold.
pub fn hter_at(test: &[ScoredSample], threshold: f64) -> Result<Hter> {
    let (far, frr) = rates_at(test, threshold)?;
    Ok(Hter {
        threshold,
        far,
        frr,
        hter: (far + frr) / 2.0,
    })
}

/// Averages frame scores per group. Samples without a group id stand alone.
/// Output order follows each group's first appearance.
pub fn aggregate_by_group(samples: &[ScoredSample]) -> Result<Vec<ScoredSample>> {
    let mut order: Vec<Option<String>> = Vec::new();
    let mut acc: HashMap<String, (f64, usize, Label)> = HashMap::new();
    let mut out_ungrouped: Vec<(usize, ScoredSample)> = Vec::new();
    for s in samples {
        match &s.group {
            None => {
                out_ungrouped.push((order.len(), s.clone()));
                order.push(None);
            }
            Some(g) => match acc.get_mut(g) {
                Some((sum, n, label)) => {
                    if *label != s.label {
                        return Err(Error::invalid(format!("group '{g}' mixes labels")));
                    }
                    *sum += s.score;
                    *n += 1;
                }
                None => {
                    acc.insert(g.clone(), (s.score, 1, s.label));
                    order.push(Some(g.clone()));
                }
            },
        }
    }
    let mut ungrouped = out_ungrouped.into_iter().peekable();
    let mut out = Vec::with_capacity(order.len());
    for (pos, key) in order.into_iter().enumerate() {
        match key {
            None => {
                let (p, s) = ungrouped.next().expect("ungrouped sample recorded");
                debug_assert_eq!(p, pos);
                out.push(s);
            }
            Some(g) => {
                let (sum, n, label) = acc[&g];
                out.push(ScoredSample {
                    score: sum / n as f64,
                    label,
                    group: Some(g),
                });
            }
        }
    }
    Ok(out)
}

/// Subject-disjoint fold assignment for `(subject, label)` records.
///
/// Subjects are bucketed by their (genuine, spoof) sample counts, shuffled
/// within each bucket and dealt round-robin with one running counter, so
/// subject counts per fold differ by at most one and subjects of the same
/// composition are spread evenly.
pub fn kfold_split(records: &[(&str, Label)], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    let mut composition: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for &(subject, label) in records {
        let e = composition.entry(subject).or_default();
        match label {
            Label::Genuine => e.0 += 1,
            Label::Spoof => e.1 += 1,
        }
    }
    if composition.len() < k {
        return Err(Error::invalid(format!(
            "{} subjects cannot fill {k} folds",
            composition.len()
        )));
    }
    let mut buckets: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for (&subject, &counts) in &composition {
        buckets.entry(counts).or_default().push(subject);
    }
    let mut rng = seed::rng(seed);
    let mut fold_of: HashMap<&str, usize> = HashMap::new();
    let mut next = 0usize;
    for subjects in buckets.values_mut() {
        subjects.shuffle(&mut rng);
        for &s in subjects.iter() {
            fold_of.insert(s, next % k);
            next += 1;
        }
    }
    Ok(records.iter().map(|(s, _)| fold_of[s]).collect())
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Error rates of one test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_samples: usize,
    pub eer: f64,
    pub eer_threshold: f64,
    pub hter: Hter,
    pub curve: RocCurve,
}

impl FoldReport {
    /// EER of `test` plus HTER at `dev_threshold`.
    pub fn compute(fold: usize, test: &[ScoredSample], dev_threshold: f64) -> Result<Self> {
        let curve = roc_curve(test)?;
        let (eer, eer_threshold) = eer_from_curve(&curve);
        Ok(FoldReport {
            fold,
            n_samples: test.len(),
            eer,
            eer_threshold,
            hter: hter_at(test, dev_threshold)?,
            curve,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

/// Full evaluation result across one or more folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub color_space: String,
    pub aggregation: String,
    pub folds: Vec<FoldReport>,
    pub eer: Summary,
    pub hter: Summary,
    pub provenance: serde_json::Value,
}

impl EvalReport {
    pub fn new(
        protocol: &str,
        color_space: &str,
        aggregation: &str,
        folds: Vec<FoldReport>,
        provenance: serde_json::Value,
    ) -> Self {
        let (em, es) = mean_std(&folds.iter().map(|f| f.eer).collect::<Vec<_>>());
        let (hm, hs) = mean_std(&folds.iter().map(|f| f.hter.hter).collect::<Vec<_>>());
        EvalReport {
            protocol: protocol.into(),
            color_space: color_space.into(),
            aggregation: aggregation.into(),
            folds,
            eer: Summary { mean: em, std: es },
            hter: Summary { mean: hm, std: hs },
            provenance,
        }
    }

    /// Plain-text table: one row per fold plus the mean ± std row, rates in
    /// percent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "protocol: {}  color space: {}  aggregation: {}\n",
            self.protocol, self.color_space, self.aggregation
        ));
        out.push_str(&format!(
            "{:<8} {:>8} {:>10} {:>10} {:>12}\n",
            "fold", "samples", "EER(%)", "HTER(%)", "threshold"
        ));
        for f in &self.folds {
            out.push_str(&format!(
                "{:<8} {:>8} {:>10.3} {:>10.3} {:>12.6}\n",
                f.fold,
                f.n_samples,
                100.0 * f.eer,
                100.0 * f.hter.hter,
                f.hter.threshold
            ));
        }
        out.push_str(&format!(
            "{:<8} {:>8} {:>10} {:>10}\n",
            "mean",
            "",
            format!("{:.3}±{:.3}", 100.0 * self.eer.mean, 100.0 * self.eer.std),
            format!("{:.3}±{:.3}", 100.0 * self.hter.mean, 100.0 * self.hter.std),
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(genuine: &[f64], spoof: &[f64]) -> Vec<ScoredSample> {
        genuine
            .iter()
            .map(|&s| ScoredSample::new(s, Label::Genuine).unwrap())
            .chain(spoof.iter().map(|&s| ScoredSample::new(s, Label::Spoof).unwrap()))
            .collect()
    }

    /// Exhaustive sweep: recount FAR/FRR from scratch at every candidate
    /// threshold and intersect the two piecewise-linear curves.
    fn sweep_oracle(s: &[ScoredSample]) -> (f64, f64) {
        let mut ts: Vec<f64> = s.iter().map(|x| x.score).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts.push(ts.last().unwrap().next_up());
        let ng = s.iter().filter(|x| x.label == Label::Genuine).count() as f64;
        let ns = s.len() as f64 - ng;
        let point = |t: f64| {
            let far = s.iter().filter(|x| x.label == Label::Spoof && x.score < t).count() as f64 / ns;
            let frr = s.iter().filter(|x| x.label == Label::Genuine && x.score >= t).count() as f64 / ng;
            (far, frr)
        };
        let mut prev = point(ts[0]);
        if prev.0 == prev.1 {
            return (prev.0, ts[0]);
        }
        for w in 1..ts.len() {
            let cur = point(ts[w]);
            if cur.0 == cur.1 {
                return (cur.0, ts[w]);
            }
            if cur.0 > cur.1 {
                let a = (prev.1 - prev.0) / ((cur.0 - prev.0) - (cur.1 - prev.1));
                return (prev.0 + a * (cur.0 - prev.0), ts[w - 1] + a * (ts[w] - ts[w - 1]));
            }
            prev = cur;
        }
        unreachable!()
    }

    #[test]
    fn perfect_separation() {
        let (rate, t) = eer(&samples(&[0.0, 0.1], &[0.9, 1.0])).unwrap();
        assert_eq!(rate, 0.0);
        assert_eq!(t, 0.9);
    }

    #[test]
    fn identical_scores() {
        let (rate, _) = eer(&samples(&[0.4; 5], &[0.4; 3])).unwrap();
        assert_eq!(rate, 0.5);
    }

    #[test]
    fn small_example_matches_sweep() {
        let s = samples(&[0.1, 0.4, 0.35, 0.8], &[0.3, 0.6, 0.7, 0.9]);
        let got = eer(&s).unwrap();
        let want = sweep_oracle(&s);
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
        // Hand check: at t = 0.6 FAR = 1/4 and FRR = 1/4.
        assert_eq!(got, (0.25, 0.6));
    }

    #[test]
    fn interpolated_crossing() {
        // thresholds .2/.4/.6: FAR 0,0,1 and FRR 1,.5,.5 → cross halfway
        // between .4 and .6.
        let (rate, t) = eer(&samples(&[0.2, 0.6], &[0.4])).unwrap();
        assert!((rate - 0.5).abs() < 1e-15);
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(eer(&samples(&[0.1, 0.2], &[])), Err(Error::Degenerate(_))));
        assert!(matches!(eer(&samples(&[], &[0.3])), Err(Error::Degenerate(_))));
        assert!(ScoredSample::new(1.5, Label::Spoof).is_err());
    }

    #[test]
    fn random_sets_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let ng = rng.gen_range(1..30);
            let ns = rng.gen_range(1..30);
            // Coarse grid so ties are frequent.
            let g: Vec<f64> = (0..ng).map(|_| rng.gen_range(0..20) as f64 / 20.0).collect();
            let s: Vec<f64> = (0..ns).map(|_| rng.gen_range(0..20) as f64 / 19.0).collect();
            let set = samples(&g, &s);
            let got = eer(&set).unwrap();
            let want = sweep_oracle(&set);
            assert!((got.0 - want.0).abs() <= 1e-12 && (got.1 - want.1).abs() <= 1e-12);
        }
    }

    #[test]
    fn curve_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g: Vec<f64> = (0..50).map(|_| rng.gen()).collect();
        let s: Vec<f64> = (0..40).map(|_| rng.gen()).collect();
        let c = roc_curve(&samples(&g, &s)).unwrap();
        assert!(c.thresholds.windows(2).all(|w| w[0] < w[1]));
        assert!(c.far.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.frr.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!((c.far[0], c.frr[0]), (0.0, 1.0));
        assert_eq!((*c.far.last().unwrap(), *c.frr.last().unwrap()), (1.0, 0.0));
    }

    #[test]
    fn hter_cases() {
        // Balanced classes with an exact FAR = FRR crossing.
        let dev = samples(&[0.1, 0.4, 0.35, 0.8], &[0.3, 0.6, 0.7, 0.9]);
        let (rate, _) = eer(&dev).unwrap();
        assert_eq!(hter(&dev, &dev).unwrap().hter, rate);
        let test = samples(&[0.0, 0.05, 0.2], &[0.95, 1.0]);
        assert_eq!(hter(&dev, &test).unwrap().hter, 0.0);
        assert!(hter(&dev, &samples(&[0.1], &[])).is_err());
    }

    #[test]
    fn hter_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let dev = samples(
                &(0..rng.gen_range(1..15)).map(|_| rng.gen::<f64>() * 0.8).collect::<Vec<_>>(),
                &(0..rng.gen_range(1..15)).map(|_| 0.2 + rng.gen::<f64>() * 0.8).collect::<Vec<_>>(),
            );
            let test = samples(
                &(0..rng.gen_range(1..15)).map(|_| rng.gen::<f64>() * 0.8).collect::<Vec<_>>(),
                &(0..rng.gen_range(1..15)).map(|_| 0.2 + rng.gen::<f64>() * 0.8).collect::<Vec<_>>(),
            );
            let (_, t) = sweep_oracle(&dev);
            let mut far = 0.0;
            let mut frr = 0.0;
            let (mut ns, mut ng) = (0.0, 0.0);
            for s in &test {
                match s.label {
                    Label::Spoof => {
                        ns += 1.0;
                        if s.score < t {
                            far += 1.0;
                        }
                    }
                    Label::Genuine => {
                        ng += 1.0;
                        if s.score >= t {
                            frr += 1.0;
                        }
                    }
                }
            }
            let want = (far / ns + frr / ng) / 2.0;
            assert!((hter(&dev, &test).unwrap().hter - want).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregation() {
        let mut frames = samples(&[0.2, 0.4], &[0.9]);
        frames[0].group = Some("v1".into());
        frames[1].group = Some("v1".into());
        frames[2].group = Some("v2".into());
        let out = aggregate_by_group(&frames).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[0].score - 0.3).abs() < 1e-15);
        assert_eq!(out[1], frames[2]);
        let mut loose = samples(&[0.7], &[]);
        loose.extend(frames.clone());
        assert_eq!(aggregate_by_group(&loose).unwrap()[0], loose[0]);
        frames[2].group = Some("v1".into());
        assert!(aggregate_by_group(&frames).is_err());
    }

    #[test]
    fn kfold_ten_subjects() {
        let names: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
        let records: Vec<(&str, Label)> = names
            .iter()
            .flat_map(|n| [(n.as_str(), Label::Genuine), (n.as_str(), Label::Spoof)])
            .collect();
        let folds = kfold_split(&records, 5, 3).unwrap();
        assert_eq!(folds, kfold_split(&records, 5, 3).unwrap());
        let mut subjects_per_fold = vec![std::collections::HashSet::new(); 5];
        for ((s, _), &f) in records.iter().zip(&folds) {
            subjects_per_fold[f].insert(*s);
        }
        assert!(subjects_per_fold.iter().all(|set| set.len() == 2));
        for (i, a) in subjects_per_fold.iter().enumerate() {
            for b in &subjects_per_fold[i + 1..] {
                assert!(a.is_disjoint(b));
            }
        }
        assert!(kfold_split(&records[..6], 5, 0).is_err());
    }

    #[test]
    fn kfold_class_balance_on_random_manifests() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..200 {
            let k = rng.gen_range(2..=6);
            let n = rng.gen_range(k..60);
            let names: Vec<String> = (0..n).map(|i| format!("subj{i}")).collect();
            let records: Vec<(&str, Label)> = names
                .iter()
                .map(|s| (s.as_str(), if rng.gen_bool(0.4) { Label::Spoof } else { Label::Genuine }))
                .collect();
            let folds = kfold_split(&records, k, trial).unwrap();
            for label in [Label::Genuine, Label::Spoof] {
                let total = records.iter().filter(|r| r.1 == label).count();
                for f in 0..k {
                    let c = records.iter().zip(&folds).filter(|(r, &ff)| r.1 == label && ff == f).count();
                    let lo = total / k;
                    let hi = total.div_ceil(k);
                    assert!(c >= lo && c <= hi, "trial {trial}: {c} not in [{lo}, {hi}]");
                }
            }
        }
    }

    #[test]
    fn text_report_shape() {
        let s = samples(&[0.1, 0.2], &[0.8, 0.9]);
        let fold = FoldReport::compute(0, &s, 0.5).unwrap();
        let report = EvalReport::new("holdout", "hsv", "frame", vec![fold], serde_json::Value::Null);
        let text = report.to_text();
        assert!(text.contains("EER(%)"));
        assert!(text.contains("0.000±0.000"));
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["eer"]["mean"], 0.0);
        assert!(json["folds"][0]["curve"]["far"].is_array());
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.3]), (0.3, 0.0));
    }

    proptest! {
        #[test]
        fn monotone_transform_invariance(g in proptest::collection::vec(0.0f64..1.0, 1..20),
                                          s in proptest::collection::vec(0.0f64..1.0, 1..20)) {
            let base = eer(&samples(&g, &s)).unwrap().0;
            let cubed = eer(&samples(
                &g.iter().map(|v| v.powi(3)).collect::<Vec<_>>(),
                &s.iter().map(|v| v.powi(3)).collect::<Vec<_>>(),
            )).unwrap().0;
            prop_assert!((base - cubed).abs() < 1e-12);
        }

        #[test]
        fn flip_symmetry(g in proptest::collection::vec(0.0f64..1.0, 1..20),
                         s in proptest::collection::vec(0.0f64..1.0, 1..20)) {
            let base = eer(&samples(&g, &s)).unwrap().0;
            // 1 - score with labels swapped: old spoof become genuine.
            let flipped = eer(&samples(
                &s.iter().map(|v| 1.0 - v).collect::<Vec<_>>(),
                &g.iter().map(|v| 1.0 - v).collect::<Vec<_>>(),
            )).unwrap().0;
            prop_assert!((base - flipped).abs() < 1e-12, "{} vs {}", base, flipped);
        }
    }
}
