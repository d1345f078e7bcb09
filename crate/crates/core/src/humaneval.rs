//! Statistics for the student and teacher evaluation rounds.
//!
//! Quartiles use linear interpolation between order statistics
//! (`q(p) = x[⌊h⌋] + (h − ⌊h⌋)(x[⌊h⌋+1] − x[⌊h⌋])`, `h = (n − 1)p`).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::seeding::item_rng;

pub const N_OPTIONS: usize = 4;
pub const LF_THRESHOLD: f64 = 0.05;

fn parse_choice(s: &str) -> Option<u8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "key" | "0" => Some(0),
        "d1" | "1" => Some(1),
        "d2" | "2" => Some(2),
        "d3" | "3" => Some(3),
        _ => None,
    }
}

#[derive(Debug, Deserialize)]
struct ResponseRow {
    subject_id: String,
    mcq_id: String,
    choice: String,
}

/// Chosen option per (subject, MCQ): 0 is the key, 1..=3 the distractor slots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponseMatrix {
    pub subjects: Vec<String>,
    pub mcqs: Vec<String>,
    choices: BTreeMap<(String, String), u8>,
}

impl ResponseMatrix {
    /// Builds a complete matrix; every subject must answer every MCQ once.
    pub fn new(entries: impl IntoIterator<Item = (String, String, u8)>) -> Result<Self> {
        let mut choices = BTreeMap::new();
        let mut subjects = BTreeSet::new();
        let mut mcqs = BTreeSet::new();
        for (s, q, c) in entries {
            if c as usize >= N_OPTIONS {
                return Err(Error::validation(&q, format!("option index {c} out of range")));
            }
            subjects.insert(s.clone());
            mcqs.insert(q.clone());
            if choices.insert((s.clone(), q.clone()), c).is_some() {
                return Err(Error::validation(&q, format!("subject {s} answered twice")));
            }
        }
        for s in &subjects {
            for q in &mcqs {
                if !choices.contains_key(&(s.clone(), q.clone())) {
                    return Err(Error::validation(q, format!("no answer from subject {s}")));
                }
            }
        }
        Ok(ResponseMatrix {
            subjects: subjects.into_iter().collect(),
            mcqs: mcqs.into_iter().collect(),
            choices,
        })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<ResponseRow>().enumerate() {
            let row = row?;
            let c = parse_choice(&row.choice)
                .ok_or_else(|| Error::parse("responses", i + 2, format!("invalid choice `{}`", row.choice)))?;
            entries.push((row.subject_id, row.mcq_id, c));
        }
        Self::new(entries)
    }

    pub fn choice(&self, subject: &str, mcq: &str) -> Option<u8> {
        self.choices.get(&(subject.to_string(), mcq.to_string())).copied()
    }

    /// Option counts for one MCQ, indexed by option.
    pub fn counts(&self, mcq: &str) -> [usize; N_OPTIONS] {
        let mut out = [0; N_OPTIONS];
        for ((_, q), &c) in &self.choices {
            if q == mcq {
                out[c as usize] += 1;
            }
        }
        out
    }

    /// Number of key answers per subject, in subject order.
    pub fn correct_per_subject(&self) -> Vec<f64> {
        self.subjects
            .iter()
            .map(|s| {
                self.mcqs
                    .iter()
                    .filter(|q| self.choice(s, q) == Some(0))
                    .count() as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub mcq_id: String,
    pub n: usize,
    pub p_key: f64,
    pub p_distractors: f64,
    pub entropy: f64,
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
}

/// Binary entropy in nats, with `0 · ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Entropy between choosing the key and choosing any distractor.
pub fn question_entropy(responses: &ResponseMatrix, mcq: &str) -> Result<EntropyRow> {
    let c = responses.counts(mcq);
    let n: usize = c.iter().sum();
    if n == 0 {
        return Err(Error::Empty(format!("no responses for {mcq}")));
    }
    let p_key = c[0] as f64 / n as f64;
    Ok(EntropyRow {
        mcq_id: mcq.to_string(),
        n,
        p_key,
        p_distractors: 1.0 - p_key,
        entropy: binary_entropy(p_key),
        d1: c[1],
        d2: c[2],
        d3: c[3],
    })
}

pub fn entropy_report(responses: &ResponseMatrix) -> Result<Vec<EntropyRow>> {
    responses.mcqs.iter().map(|q| question_entropy(responses, q)).collect()
}

pub fn write_entropy_report<W: Write>(out: W, rows: &[EntropyRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_entropy_report<R: Read>(reader: R) -> Result<Vec<EntropyRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfDisReport {
    /// Per MCQ, whether each distractor slot (d1..d3) falls below the threshold.
    pub flags: BTreeMap<String, [bool; 3]>,
    pub threshold: f64,
    pub losing_any: usize,
    pub losing_all: usize,
    pub keeping_all: usize,
}

/// Flags distractors chosen by strictly less than `threshold` of respondents.
pub fn lf_dis(responses: &ResponseMatrix, threshold: f64) -> LfDisReport {
    let mut flags = BTreeMap::new();
    let (mut any, mut all, mut none) = (0, 0, 0);
    for q in &responses.mcqs {
        let c = responses.counts(q);
        let n: usize = c.iter().sum();
        let f = [1, 2, 3].map(|i| n > 0 && (c[i] as f64 / n as f64) < threshold);
        let k = f.iter().filter(|&&b| b).count();
        match k {
            0 => none += 1,
            3 => {
                any += 1;
                all += 1
            }
            _ => any += 1,
        }
        flags.insert(q.clone(), f);
    }
    LfDisReport {
        flags,
        threshold,
        losing_any: any,
        losing_all: all,
        keeping_all: none,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub r: f64,
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn t_two_tailed_p(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x)
}

/// Builds the result from summary statistics.
pub fn ttest_from_summary(n: usize, mean: f64, se: f64, mu0: f64) -> Result<TTestResult> {
    if n < 2 {
        return Err(Error::Statistics("t-test needs at least two values".into()));
    }
    if !(se > 0.0) {
        return Err(Error::Statistics("t-test undefined for zero variance".into()));
    }
    let df = (n - 1) as f64;
    let t = (mean - mu0) / se;
    Ok(TTestResult {
        n,
        mean,
        se,
        t,
        df,
        p: t_two_tailed_p(t, df),
        r: (t * t / (t * t + df)).sqrt(),
    })
}

pub fn one_sample_ttest(values: &[f64], mu0: f64) -> Result<TTestResult> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Statistics("t-test needs at least two values".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    ttest_from_summary(n, mean, (var / n as f64).sqrt(), mu0)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub q1: f64,
    pub q3: f64,
    pub lower: f64,
    pub upper: f64,
    pub flags: Vec<bool>,
}

impl OutlierReport {
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&b| b).count()
    }
}

/// Flags values outside `[Q1 − m·IQR, Q3 + m·IQR]`.
pub fn iqr_outliers(values: &[f64], multiplier: f64) -> Result<OutlierReport> {
    if values.len() < 4 {
        return Err(Error::Statistics("outlier check needs at least four values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lower, upper) = (q1 - multiplier * iqr, q3 + multiplier * iqr);
    Ok(OutlierReport {
        q1,
        q3,
        lower,
        upper,
        flags: values.iter().map(|&v| v < lower || v > upper).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    fn rank(self) -> u8 {
        match self {
            Verdict::Accept => 1,
            Verdict::Reject => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub verdict: Verdict,
    pub reason_category: Option<String>,
    pub reason_text: Option<String>,
}

#[derive(Debug, Deserialize)]
struct JudgmentRow {
    teacher_id: String,
    mcq_id: String,
    slot: String,
    verdict: String,
    #[serde(default)]
    reason_category: Option<String>,
    #[serde(default)]
    reason_text: Option<String>,
}

/// Teacher verdicts per (MCQ, distractor slot). Slots are 0-based.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgmentMatrix {
    pub teachers: Vec<String>,
    /// MCQ id to its number of judged slots.
    pub mcqs: BTreeMap<String, usize>,
    cells: BTreeMap<(String, String, usize), Judgment>,
}

impl JudgmentMatrix {
    /// Every teacher must judge every slot of every MCQ exactly once.
    pub fn new(entries: impl IntoIterator<Item = (String, String, usize, Judgment)>) -> Result<Self> {
        let mut cells = BTreeMap::new();
        let mut teachers = BTreeSet::new();
        let mut mcqs: BTreeMap<String, usize> = BTreeMap::new();
        for (t, q, slot, j) in entries {
            teachers.insert(t.clone());
            let n = mcqs.entry(q.clone()).or_default();
            *n = (*n).max(slot + 1);
            if cells.insert((t.clone(), q.clone(), slot), j).is_some() {
                return Err(Error::validation(&q, format!("teacher {t} judged slot {slot} twice")));
            }
        }
        for t in &teachers {
            for (q, &n) in &mcqs {
                for s in 0..n {
                    if !cells.contains_key(&(t.clone(), q.clone(), s)) {
                        return Err(Error::validation(q, format!("teacher {t} did not judge slot {s}")));
                    }
                }
            }
        }
        Ok(JudgmentMatrix {
            teachers: teachers.into_iter().collect(),
            mcqs,
            cells,
        })
    }

    /// Reads the judgments CSV. Slots are written `d1`..`d3` or 1-based numbers.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<JudgmentRow>().enumerate() {
            let row = row?;
            let line = i + 2;
            let slot = match parse_choice(&row.slot) {
                Some(s) if s > 0 => s as usize - 1,
                _ => return Err(Error::parse("judgments", line, format!("invalid slot `{}`", row.slot))),
            };
            let verdict = match row.verdict.to_ascii_lowercase().as_str() {
                "accept" | "accepted" | "1" => Verdict::Accept,
                "reject" | "rejected" | "0" => Verdict::Reject,
                v => return Err(Error::parse("judgments", line, format!("invalid verdict `{v}`"))),
            };
            let nonempty = |s: Option<String>| s.filter(|x| !x.is_empty());
            entries.push((
                row.teacher_id,
                row.mcq_id,
                slot,
                Judgment {
                    verdict,
                    reason_category: nonempty(row.reason_category),
                    reason_text: nonempty(row.reason_text),
                },
            ));
        }
        Self::new(entries)
    }

    pub fn get(&self, teacher: &str, mcq: &str, slot: usize) -> Option<&Judgment> {
        self.cells.get(&(teacher.to_string(), mcq.to_string(), slot))
    }

    fn verdict(&self, teacher: &str, mcq: &str, slot: usize) -> Verdict {
        self.get(teacher, mcq, slot).expect("complete matrix").verdict
    }
}

/// Concordant and discordant pair counts summed over MCQs, teacher pairs and
/// distractor pairs (accepted ranks 1, rejected 2; ties skipped).
pub fn concordance(judgments: &JudgmentMatrix) -> (u64, u64) {
    let (mut c, mut d) = (0, 0);
    let ts = &judgments.teachers;
    for (q, &n) in &judgments.mcqs {
        for a in 0..ts.len() {
            for b in a + 1..ts.len() {
                for i in 0..n {
                    for j in i + 1..n {
                        let ra = judgments.verdict(&ts[a], q, i).rank() as i8
                            - judgments.verdict(&ts[a], q, j).rank() as i8;
                        let rb = judgments.verdict(&ts[b], q, i).rank() as i8
                            - judgments.verdict(&ts[b], q, j).rank() as i8;
                        match (ra * rb).signum() {
                            1 => c += 1,
                            -1 => d += 1,
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    (c, d)
}

pub fn gamma_n(judgments: &JudgmentMatrix) -> Result<f64> {
    if judgments.teachers.len() < 2 {
        return Err(Error::Statistics("agreement needs at least two raters".into()));
    }
    let (c, d) = concordance(judgments);
    if c + d == 0 {
        return Err(Error::Statistics(
            "agreement undefined: no concordant or discordant pairs".into(),
        ));
    }
    Ok((c as f64 - d as f64) / (c + d) as f64)
}

/// Sorts MCQs by entropy, splits them into contiguous buckets of balanced
/// size (the first `len % n_buckets` buckets get one extra) and samples
/// `per_bucket` ids from each without replacement.
pub fn entropy_buckets(
    entropies: &[(String, f64)],
    n_buckets: usize,
    per_bucket: usize,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    if n_buckets == 0 {
        return Err(Error::InvalidArgument("need at least one bucket".into()));
    }
    let n = entropies.len();
    let base = n / n_buckets;
    if base < per_bucket {
        return Err(Error::InvalidArgument(format!(
            "{n} MCQs cannot fill {n_buckets} buckets of {per_bucket}"
        )));
    }
    let mut sorted: Vec<&(String, f64)> = entropies.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let extra = n % n_buckets;
    let mut rng = item_rng(seed, "entropy-buckets");
    let mut start = 0;
    let mut out = Vec::with_capacity(n_buckets);
    for b in 0..n_buckets {
        let size = base + usize::from(b < extra);
        let bucket = &sorted[start..start + size];
        start += size;
        let mut picked: Vec<String> = bucket
            .choose_multiple(&mut rng, per_bucket)
            .map(|e| e.0.clone())
            .collect();
        picked.sort();
        out.push(picked);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTable {
    pub lf_majority_accepted: usize,
    pub lf_majority_rejected: usize,
    pub non_lf_majority_accepted: usize,
    pub non_lf_majority_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceSummary {
    pub n_mcqs: usize,
    pub n_teachers: usize,
    /// Accepted distractors per MCQ per teacher.
    pub mean_accepted: f64,
    pub pct_all_accept_any: f64,
    pub pct_majority_accept_any: f64,
    pub pct_majority_accept_all: f64,
    pub pct_majority_reject_all: f64,
    pub reasons: BTreeMap<String, usize>,
    /// Per distractor: LF-DIS flag against majority acceptance.
    pub lf_cross: Option<CrossTable>,
}

/// Summarizes teacher judgments. "Majority" means strictly more than half of
/// the teachers. `lf` adds the LF-DIS cross-table for MCQs it covers.
pub fn acceptance_summary(judgments: &JudgmentMatrix, lf: Option<&LfDisReport>) -> AcceptanceSummary {
    let nt = judgments.teachers.len();
    let nq = judgments.mcqs.len();
    let majority = |k: usize| 2 * k > nt;
    let mut accepted_total = 0;
    let (mut all_any, mut maj_any, mut maj_all, mut maj_none) = (0, 0, 0, 0);
    let mut reasons = BTreeMap::new();
    let mut cross = lf.map(|_| CrossTable::default());

    for (q, &n) in &judgments.mcqs {
        let mut teachers_any = 0;
        let mut teachers_all = 0;
        let mut teachers_none = 0;
        for t in &judgments.teachers {
            let acc = (0..n)
                .filter(|&s| judgments.verdict(t, q, s) == Verdict::Accept)
                .count();
            accepted_total += acc;
            teachers_any += usize::from(acc > 0);
            teachers_all += usize::from(acc == n);
            teachers_none += usize::from(acc == 0);
            for s in 0..n {
                let j = judgments.get(t, q, s).expect("complete matrix");
                if j.verdict == Verdict::Reject {
                    let cat = j.reason_category.clone().unwrap_or_else(|| "unspecified".into());
                    *reasons.entry(cat).or_insert(0) += 1;
                }
            }
        }
        all_any += usize::from(teachers_any == nt);
        maj_any += usize::from(majority(teachers_any));
        maj_all += usize::from(majority(teachers_all));
        maj_none += usize::from(majority(teachers_none));

        if let (Some(table), Some(flags)) = (cross.as_mut(), lf.and_then(|r| r.flags.get(q))) {
            for (s, &flag) in flags.iter().enumerate().take(n) {
                let acc = judgments
                    .teachers
                    .iter()
                    .filter(|t| judgments.verdict(t, q, s) == Verdict::Accept)
                    .count();
                let slot = match (flag, majority(acc)) {
                    (true, true) => &mut table.lf_majority_accepted,
                    (true, false) => &mut table.lf_majority_rejected,
                    (false, true) => &mut table.non_lf_majority_accepted,
                    (false, false) => &mut table.non_lf_majority_rejected,
                };
                *slot += 1;
            }
        }
    }
    let pct = |k: usize| if nq == 0 { 0.0 } else { 100.0 * k as f64 / nq as f64 };
    AcceptanceSummary {
        n_mcqs: nq,
        n_teachers: nt,
        mean_accepted: if nq * nt == 0 {
            0.0
        } else {
            accepted_total as f64 / (nq * nt) as f64
        },
        pct_all_accept_any: pct(all_any),
        pct_majority_accept_any: pct(maj_any),
        pct_majority_accept_all: pct(maj_all),
        pct_majority_reject_all: pct(maj_none),
        reasons,
        lf_cross: cross,
    }
}
