use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::special::{chi2_sf, ln_factorial, normal_sf};
use crate::error::{Error, Result};

/// Relative slack when comparing table probabilities in Fisher's test.
const FISHER_SLACK: f64 = 1e-12;
/// Largest n1 + n2 for which Mann-Whitney p-values are enumerated exactly.
pub const MW_EXACT_MAX: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if row_labels.len() < 2 || col_labels.len() < 2 {
            return Err(Error::Table(format!(
                "need at least 2x2, got {}x{}",
                row_labels.len(),
                col_labels.len()
            )));
        }
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::Table("count matrix does not match labels".into()));
        }
        Ok(ContingencyTable {
            row_labels,
            col_labels,
            counts,
        })
    }

    /// Unlabelled 2x2 table [[a, b], [c, d]].
    pub fn two_by_two(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable {
            row_labels: vec!["r0".into(), "r1".into()],
            col_labels: vec!["c0".into(), "c1".into()],
            counts: vec![vec![a, b], vec![c, d]],
        }
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.col_labels.len()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn is_two_by_two(&self) -> bool {
        self.counts.len() == 2 && self.col_labels.len() == 2
    }

    /// Drop rows and columns whose margin is zero. Fails if fewer than two
    /// of either remain.
    pub fn drop_empty(&self) -> Result<Self> {
        let rs = self.row_sums();
        let cs = self.col_sums();
        let rows: Vec<usize> = (0..rs.len()).filter(|&i| rs[i] > 0).collect();
        let cols: Vec<usize> = (0..cs.len()).filter(|&j| cs[j] > 0).collect();
        ContingencyTable::new(
            rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            cols.iter().map(|&j| self.col_labels[j].clone()).collect(),
            rows.iter().map(|&i| cols.iter().map(|&j| self.counts[i][j]).collect()).collect(),
        )
    }

    pub fn expected(&self) -> Vec<Vec<f64>> {
        let n = self.n() as f64;
        let rs = self.row_sums();
        let cs = self.col_sums();
        rs.iter()
            .map(|&r| cs.iter().map(|&c| r as f64 * c as f64 / n).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    CramersV,
    RankBiserial,
    OddsRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub kind: EffectKind,
    pub value: f64,
}

/// Outcome of one significance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub test_name: String,
    pub statistic: f64,
    pub df: Option<usize>,
    pub p_value: f64,
    pub effect_size: Option<EffectSize>,
    pub n: u64,
    pub p_adjusted: Option<f64>,
    pub family_size: Option<usize>,
    pub direction_confirmed: Option<bool>,
    pub warnings: Vec<String>,
}

impl StatResult {
    fn basic(test_name: &str, statistic: f64, df: Option<usize>, p_value: f64, n: u64) -> Self {
        StatResult {
            test_name: test_name.into(),
            statistic,
            df,
            p_value: p_value.clamp(0.0, 1.0),
            effect_size: None,
            n,
            p_adjusted: None,
            family_size: None,
            direction_confirmed: None,
            warnings: Vec::new(),
        }
    }

    /// p after family correction when one was applied, else the raw p.
    pub fn p_final(&self) -> f64 {
        self.p_adjusted.unwrap_or(self.p_value)
    }
}

pub fn cramers_v(chi2: f64, n: u64, r: usize, c: usize) -> f64 {
    let k = r.min(c);
    if n == 0 || k < 2 {
        return 0.0;
    }
    (chi2 / (n as f64 * (k - 1) as f64)).sqrt().clamp(0.0, 1.0)
}

/// Pearson chi-square test of independence. `yates` applies the continuity
/// correction on 2x2 tables. Expected counts below 5 produce a warning.
pub fn chi_square(table: &ContingencyTable, yates: bool) -> Result<StatResult> {
    let rs = table.row_sums();
    let cs = table.col_sums();
    if rs.contains(&0) || cs.contains(&0) {
        return Err(Error::Table("zero row or column margin".into()));
    }
    let expected = table.expected();
    let correct = yates && table.is_two_by_two();
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for (obs_row, exp_row) in table.counts.iter().zip(&expected) {
        for (&o, &e) in obs_row.iter().zip(exp_row) {
            min_expected = min_expected.min(e);
            let mut d = (o as f64 - e).abs();
            if correct {
                d = (d - 0.5).max(0.0);
            }
            stat += d * d / e;
        }
    }
    let (r, c) = (rs.len(), cs.len());
    let df = (r - 1) * (c - 1);
    let n = table.n();
    let mut res = StatResult::basic("chi_square", stat, Some(df), chi2_sf(stat, df), n);
    res.effect_size = Some(EffectSize {
        kind: EffectKind::CramersV,
        value: cramers_v(stat, n, r, c),
    });
    if min_expected < 5.0 {
        let msg = format!("minimum expected count {min_expected:.3} < 5; Fisher's exact test recommended");
        log::debug!("{msg}");
        res.warnings.push(msg);
    }
    Ok(res)
}

fn hypergeom_ln(a: u64, r1: u64, r2: u64, c1: u64, n: u64) -> f64 {
    let b = r1 - a;
    let c = c1 - a;
    let d = r2 - c;
    ln_factorial(r1) + ln_factorial(r2) + ln_factorial(c1) + ln_factorial(n - c1)
        - ln_factorial(n)
        - ln_factorial(a)
        - ln_factorial(b)
        - ln_factorial(c)
        - ln_factorial(d)
}

/// Two-sided Fisher exact p for [[a, b], [c, d]]: the total probability of
/// tables with the same margins that are no more likely than the observed one.
pub fn fisher_exact(a: u64, b: u64, c: u64, d: u64) -> Result<f64> {
    let n = a + b + c + d;
    if n == 0 {
        return Err(Error::Table("all-zero table".into()));
    }
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let ln_obs = hypergeom_ln(a, r1, r2, c1, n);
    let mut p = 0.0;
    for x in lo..=hi {
        let ln_p = hypergeom_ln(x, r1, r2, c1, n);
        if ln_p <= ln_obs + FISHER_SLACK {
            p += ln_p.exp();
        }
    }
    Ok(p.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U for the first sample: pairs (x, y) with x > y, ties counting 1/2.
    pub u: f64,
    pub u_prime: f64,
    pub p_value: f64,
    pub method: MwMethod,
    pub rank_biserial: f64,
}

/// Midranks of `values` (1-based), doubled so ties stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled mean = i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Mann-Whitney U test. Exact permutation p (conditional on ties) when
/// n1 + n2 <= 12; otherwise the normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney(xs: &[f64], ys: &[f64]) -> Result<MannWhitney> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Insufficient("Mann-Whitney needs two non-empty samples".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (n1, n2) = (xs.len(), ys.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let r1_doubled: u64 = ranks[..n1].iter().sum();
    // 2U = 2R1 - n1(n1+1)
    let base = (n1 * (n1 + 1)) as i64;
    let u2 = r1_doubled as i64 - base;
    let u = u2 as f64 / 2.0;
    let nn = (n1 * n2) as f64;
    let (p, method) = if n <= MW_EXACT_MAX {
        // |2U - n1 n2| compared in doubled units
        let centre = (n1 * n2) as i64;
        let obs_dev = (u2 - centre).abs();
        let mut extreme = 0u64;
        let mut total = 0u64;
        for_each_combination(n, n1, |idx| {
            let s: u64 = idx.iter().map(|&i| ranks[i]).sum();
            let dev = (s as i64 - base - centre).abs();
            total += 1;
            if dev >= obs_dev {
                extreme += 1;
            }
        });
        (extreme as f64 / total as f64, MwMethod::Exact)
    } else {
        let mut tie_term = 0.0;
        let mut sorted = pooled.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let nf = n as f64;
        let var = nn / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            (1.0, MwMethod::Normal)
        } else {
            let z = ((u - nn / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
            ((2.0 * normal_sf(z)).min(1.0), MwMethod::Normal)
        }
    };
    Ok(MannWhitney {
        u,
        u_prime: nn - u,
        p_value: p,
        method,
        rank_biserial: rank_biserial(u, n1, n2),
    })
}

pub fn rank_biserial(u: f64, n1: usize, n2: usize) -> f64 {
    (1.0 - 2.0 * u / (n1 * n2) as f64).clamp(-1.0, 1.0)
}

/// Bonferroni adjustment within one family; the family size is the slice length.
pub fn bonferroni(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len() as f64;
    p_values.iter().map(|&p| (p * m).min(1.0)).collect()
}

/// Odds ratio (a d) / (b c) of [[a, b], [c, d]] with additive smoothing on
/// every cell. A zero cell without smoothing is an error.
pub fn odds_ratio(a: u64, b: u64, c: u64, d: u64, smoothing: f64) -> Result<f64> {
    if smoothing == 0.0 && [a, b, c, d].contains(&0) {
        return Err(Error::Table("zero cell in odds ratio; use smoothing 0.5".into()));
    }
    if smoothing < 0.0 {
        return Err(Error::Config("smoothing must be nonnegative".into()));
    }
    let s = smoothing;
    Ok(((a as f64 + s) * (d as f64 + s)) / ((b as f64 + s) * (c as f64 + s)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOdds {
    pub lemma: String,
    pub count_a: u64,
    pub count_b: u64,
    pub log_odds_ratio: f64,
}

/// Smoothed log odds ratio of each lemma versus all other lemmas, class A
/// relative to class B, sorted descending (A-distinctive first). Ties are
/// broken by lemma.
pub fn log_odds_tokens(
    counts_a: &BTreeMap<String, u64>,
    counts_b: &BTreeMap<String, u64>,
    smoothing: f64,
) -> Result<Vec<LogOdds>> {
    let total_a: u64 = counts_a.values().sum();
    let total_b: u64 = counts_b.values().sum();
    if total_a == 0 || total_b == 0 {
        return Err(Error::Insufficient("log-odds needs tokens in both classes".into()));
    }
    let s = smoothing;
    let mut lemmas: Vec<&String> = counts_a.keys().chain(counts_b.keys()).collect();
    lemmas.sort();
    lemmas.dedup();
    let mut out: Vec<LogOdds> = lemmas
        .into_iter()
        .map(|w| {
            let a = counts_a.get(w).copied().unwrap_or(0);
            let b = counts_b.get(w).copied().unwrap_or(0);
            let lo = ((a as f64 + s) / ((total_a - a) as f64 + s)).ln() - ((b as f64 + s) / ((total_b - b) as f64 + s)).ln();
            LogOdds {
                lemma: w.clone(),
                count_a: a,
                count_b: b,
                log_odds_ratio: lo,
            }
        })
        .collect();
    out.sort_by(|x, y| y.log_odds_ratio.total_cmp(&x.log_odds_ratio).then_with(|| x.lemma.cmp(&y.lemma)));
    Ok(out)
}
