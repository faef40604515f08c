//! Multi-subject curve tables (`subject,i,t,y`), train/test splits and the
//! held-out prediction comparison.

use twolevel_core::estimators::{
    double_threshold_estimate_f, empirical_coefficients, lepskii_thresholds_f, population_bound,
    single_subject_estimate, subject_bound, Normalization, SingleSubjectRule,
};
use twolevel_core::risk::rmspe;
use twolevel_core::sim::RegressionDataset;

use crate::error::{AppError, Result};
use crate::formats::{parse_field, parse_finite, CsvRows, Header, RmspeRow};

/// Affine time map applied at load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescale {
    pub t_min: f64,
    pub t_max: f64,
}

/// Equal-length curves, one per subject, with shared indices `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSubjectTable {
    subjects: Vec<String>,
    times: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    rescale: Option<Rescale>,
}

impl MultiSubjectTable {
    /// Builds a table from complete curves; times must already lie in `[0, 1]`.
    pub fn new(subjects: Vec<String>, times: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Result<Self> {
        let table = MultiSubjectTable { subjects, times, values, rescale: None };
        table.check()?;
        Ok(table)
    }

    fn check(&self) -> Result<()> {
        let m = self.subjects.len();
        if m == 0 || self.times.len() != m || self.values.len() != m {
            return Err(AppError::data(0, "table needs at least one subject with matching curves"));
        }
        let n = self.times[0].len();
        for (j, id) in self.subjects.iter().enumerate() {
            let (t, y) = (&self.times[j], &self.values[j]);
            if t.len() != n || y.len() != n || n == 0 {
                return Err(AppError::data(0, format!("subject {id} has {} points, expected {n}", t.len())));
            }
            if t.windows(2).any(|w| w[0] >= w[1]) || t.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(AppError::data(0, format!("subject {id}: times must increase within [0, 1]")));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(AppError::data(0, format!("subject {id}: non-finite value")));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        struct Rec {
            line: usize,
            i: usize,
            t: f64,
            y: f64,
        }
        let mut rows = CsvRows::new(text, &["subject", "i", "t", "y"])?;
        let mut ids: Vec<String> = Vec::new();
        let mut recs: Vec<Vec<Rec>> = Vec::new();
        while let Some((line, f)) = rows.next_row()? {
            if f[0].is_empty() {
                return Err(AppError::data(line, "empty subject id"));
            }
            let i: usize = parse_field(line, "i", &f[1])?;
            let rec = Rec { line, i, t: parse_finite(line, "t", &f[2])?, y: parse_finite(line, "y", &f[3])? };
            match ids.iter().position(|s| *s == f[0]) {
                Some(j) => recs[j].push(rec),
                None => {
                    ids.push(f[0].clone());
                    recs.push(vec![rec]);
                }
            }
        }
        if ids.is_empty() {
            return Err(AppError::data(0, "table has no rows"));
        }
        let n = recs[0].len();
        let ragged: Vec<String> = ids
            .iter()
            .zip(&recs)
            .filter(|(_, r)| r.len() != n)
            .map(|(id, r)| format!("{id} ({} rows)", r.len()))
            .collect();
        if !ragged.is_empty() {
            return Err(AppError::data(
                0,
                format!("ragged subjects: expected {n} rows each like subject {}, got {}", ids[0], ragged.join(", ")),
            ));
        }
        let mut times = Vec::with_capacity(ids.len());
        let mut values = Vec::with_capacity(ids.len());
        for (id, mut r) in ids.iter().zip(recs) {
            r.sort_by_key(|x| x.i);
            for (pos, x) in r.iter().enumerate() {
                if x.i != pos + 1 {
                    return Err(AppError::data(
                        x.line,
                        format!("subject {id}: time indices must be 1..{n} without gaps or repeats, found {}", x.i),
                    ));
                }
            }
            if let Some(w) = r.windows(2).find(|w| w[0].t >= w[1].t) {
                return Err(AppError::data(
                    w[1].line,
                    format!("subject {id}: t must increase with i (i={} has t={})", w[1].i, w[1].t),
                ));
            }
            times.push(r.iter().map(|x| x.t).collect::<Vec<_>>());
            values.push(r.iter().map(|x| x.y).collect());
        }
        let lo = times.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut rescale = None;
        if lo < 0.0 || hi > 1.0 {
            let span = hi - lo;
            if !(span > 0.0 && span.is_finite()) {
                return Err(AppError::data(0, "cannot rescale times with zero or infinite range"));
            }
            for t in times.iter_mut().flatten() {
                *t = ((*t - lo) / span).clamp(0.0, 1.0);
            }
            rescale = Some(Rescale { t_min: lo, t_max: hi });
        }
        let table = MultiSubjectTable { subjects: ids, times, values, rescale };
        table.check()?;
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&crate::formats::read_text(path)?).map_err(|e| e.in_file(path))
    }

    pub fn to_csv(&self, header: &Header) -> String {
        let rows = (0..self.m()).flat_map(|j| {
            (0..self.n()).map(move |i| {
                [
                    self.subjects[j].clone(),
                    (i + 1).to_string(),
                    self.times[j][i].to_string(),
                    self.values[j][i].to_string(),
                ]
            })
        });
        crate::formats::plain_csv(header, &["subject", "i", "t", "y"], rows)
    }

    pub fn m(&self) -> usize {
        self.subjects.len()
    }

    pub fn n(&self) -> usize {
        self.times[0].len()
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn times(&self, j: usize) -> &[f64] {
        &self.times[j]
    }

    pub fn values(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn rescale(&self) -> Option<Rescale> {
        self.rescale
    }

    /// Points at the given 1-based indices for every subject.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let pick = |v: &Vec<f64>| indices.iter().map(|&i| v[i - 1]).collect::<Vec<_>>();
        PointSet {
            indices: indices.to_vec(),
            times: self.times.iter().map(pick).collect(),
            values: self.values.iter().map(pick).collect(),
        }
    }

    pub fn to_dataset(&self) -> Result<RegressionDataset> {
        Ok(RegressionDataset::new(self.times.clone(), self.values.clone(), 1.0)?)
    }
}

/// Subset of a table's time indices, shared by all subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub indices: Vec<usize>,
    pub times: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn to_dataset(&self) -> Result<RegressionDataset> {
        Ok(RegressionDataset::new(self.times.clone(), self.values.clone(), 1.0)?)
    }
}

/// Held-out index generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSpec {
    /// `{a·i + b : i = 1..=count}`.
    Arithmetic { a: i64, b: i64, count: usize },
}

impl SplitSpec {
    /// Sorted test indices, all within `1..=n` and distinct.
    pub fn test_indices(&self, n: usize) -> Result<Vec<usize>> {
        let SplitSpec::Arithmetic { a, b, count } = *self;
        let mut out = Vec::with_capacity(count);
        for i in 1..=count as i64 {
            let v = a.checked_mul(i).and_then(|x| x.checked_add(b));
            match v {
                Some(v) if v >= 1 && v <= n as i64 => out.push(v as usize),
                _ => {
                    return Err(AppError::config(format!(
                        "split index {a}·{i}{b:+} lies outside 1..={n}"
                    )))
                }
            }
        }
        out.sort_unstable();
        if out.windows(2).any(|w| w[0] == w[1]) {
            return Err(AppError::config("split produces repeated indices"));
        }
        Ok(out)
    }
}

impl std::str::FromStr for SplitSpec {
    type Err = String;

    /// `a,b,count`, e.g. `3,-1,50`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected `a,b,count`, got `{s}`"));
        }
        Ok(SplitSpec::Arithmetic {
            a: parts[0].parse().map_err(|e| format!("a: {e}"))?,
            b: parts[1].parse().map_err(|e| format!("b: {e}"))?,
            count: parts[2].parse().map_err(|e| format!("count: {e}"))?,
        })
    }
}

impl std::fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let SplitSpec::Arithmetic { a, b, count } = self;
        write!(f, "{a},{b},{count}")
    }
}

/// Partitions every subject's indices into `(train, test)`.
pub fn split(table: &MultiSubjectTable, spec: &SplitSpec) -> Result<(PointSet, PointSet)> {
    let test = spec.test_indices(table.n())?;
    let train: Vec<usize> = (1..=table.n()).filter(|i| test.binary_search(i).is_err()).collect();
    if train.is_empty() {
        return Err(AppError::config("split leaves no training points"));
    }
    Ok((table.select(&train), table.select(&test)))
}

/// Tuning of the held-out comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSettings {
    pub tau1: f64,
    pub tau2: f64,
    pub single: SingleSubjectRule,
    /// Empirical coefficients per subject; defaults to the widest search bound.
    pub width: Option<usize>,
}

impl CompareSettings {
    /// Same constant for every rule.
    pub fn uniform(tau: f64) -> Self {
        CompareSettings {
            tau1: tau,
            tau2: tau,
            single: SingleSubjectRule { constant: tau, ..SingleSubjectRule::default() },
            width: None,
        }
    }
}

/// Fits the single-subject and two-threshold estimators on the training points
/// and scores each subject on its held-out points.
pub fn compare_estimators(
    table: &MultiSubjectTable,
    spec: &SplitSpec,
    settings: &CompareSettings,
) -> Result<Vec<RmspeRow>> {
    if table.m() < 2 {
        return Err(AppError::config("comparison needs at least two subjects"));
    }
    let (train, test) = split(table, spec)?;
    let data = train.to_dataset()?;
    let (n, m) = (data.n(), data.m());
    let width = settings.width.unwrap_or(population_bound(n, m).max(subject_bound(n)));
    let panel = empirical_coefficients(&data, width, Normalization::Mean)?;
    (0..m)
        .map(|j| {
            let single = single_subject_estimate(panel.row(j), n, m, settings.single)?;
            let sel = lepskii_thresholds_f(&panel, j, settings.tau1, settings.tau2)?;
            let double = double_threshold_estimate_f(&panel, j, sel.k1, sel.k2)?;
            Ok(RmspeRow {
                subject: table.subjects[j].clone(),
                single: rmspe(&single, &test.times[j], &test.values[j])?,
                double: rmspe(&double, &test.times[j], &test.values[j])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "subject,i,t,y\na,1,0,1.5\na,2,0.5,2\na,3,1,0.25\nb,1,0,1\nb,2,0.5,0\nb,3,1,-1\n";

    #[test]
    fn loads_well_formed() {
        let t = MultiSubjectTable::parse(GOOD).unwrap();
        assert_eq!((t.m(), t.n()), (2, 3));
        assert_eq!(t.values(1), &[1.0, 0.0, -1.0]);
        assert!(t.rescale().is_none());
    }

    #[test]
    fn ragged_names_subject() {
        let text = "subject,i,t,y\n1,1,0,1\n1,2,0.5,1\n1,3,1,1\n2,1,0,1\n2,2,0.5,1\n";
        let err = MultiSubjectTable::parse(text).unwrap_err().to_string();
        assert!(err.contains("2 (2 rows)"), "{err}");
    }

    #[test]
    fn non_monotone_time_reports_line() {
        let text = "subject,i,t,y\na,1,0,1\na,2,0.7,1\na,3,0.6,1\n";
        let err = MultiSubjectTable::parse(text).unwrap_err();
        assert!(matches!(err, AppError::Data { line: 4, .. }), "{err}");
    }

    #[test]
    fn missing_column_reported() {
        let err = MultiSubjectTable::parse("subject,i,y\na,1,2\n").unwrap_err().to_string();
        assert!(err.contains("missing columns: t"), "{err}");
    }

    #[test]
    fn rows_may_arrive_unordered() {
        let text = "subject,i,t,y\na,2,0.5,2\nb,1,0,1\na,1,0,1\nb,2,0.5,3\n";
        let t = MultiSubjectTable::parse(text).unwrap();
        assert_eq!(t.values(0), &[1.0, 2.0]);
        assert_eq!(t.subjects(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn rescales_out_of_range_times() {
        let text = "subject,i,t,y\na,1,10,1\na,2,15,1\na,3,20,1\n";
        let t = MultiSubjectTable::parse(text).unwrap();
        assert_eq!(t.times(0), &[0.0, 0.5, 1.0]);
        assert_eq!(t.rescale(), Some(Rescale { t_min: 10.0, t_max: 20.0 }));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = MultiSubjectTable::new(
            vec!["x".into(), "y".into()],
            vec![vec![0.0, 1.0 / 3.0, 0.7], vec![0.1, 0.2, 0.9]],
            vec![vec![1e-17, -2.5, std::f64::consts::PI], vec![0.1 + 0.2, 7.0, -0.0]],
        )
        .unwrap();
        let text = t.to_csv(&Header::new("test", &[]));
        assert_eq!(MultiSubjectTable::parse(&text).unwrap(), t);
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec::Arithmetic { a: 3, b: -1, count: 50 };
        let idx = spec.test_indices(151).unwrap();
        assert_eq!((idx.len(), idx[0], idx[49]), (50, 2, 149));
        let spec = SplitSpec::Arithmetic { a: 5, b: 0, count: 51 };
        assert_eq!(spec.test_indices(256).unwrap().len(), 51);
        assert!(SplitSpec::Arithmetic { a: 5, b: 0, count: 52 }.test_indices(256).is_err());
        assert!(SplitSpec::Arithmetic { a: 0, b: 1, count: 2 }.test_indices(5).is_err());
        assert_eq!("3,-1,50".parse::<SplitSpec>().unwrap(), SplitSpec::Arithmetic { a: 3, b: -1, count: 50 });
    }
}
