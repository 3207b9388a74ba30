//! 2x2 contingency tables and Pearson's chi-squared test (no continuity
//! correction).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::VariableId;
use crate::simulator::Dataset;

/// Smallest expected cell count for a conclusive test.
pub const MIN_EXPECTED: f64 = 5.0;

/// Upper-tail critical values of the chi-squared distribution with one
/// degree of freedom.
const CRITICAL_DOF1: &[(f64, f64)] = &[
    (0.10, 2.705_543_454),
    (0.05, 3.841_458_821),
    (0.025, 5.023_886_187),
    (0.01, 6.634_896_601),
    (0.005, 7.879_438_577),
    (0.001, 10.827_566_171),
];

/// Critical value for dof = 1 at a tabulated significance level.
pub fn critical_value(alpha: f64) -> Result<f64> {
    CRITICAL_DOF1
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|(_, c)| *c)
        .ok_or_else(|| {
            let levels: Vec<String> = CRITICAL_DOF1.iter().map(|(a, _)| a.to_string()).collect();
            Error::Config(format!(
                "unsupported significance level {}; use one of {}",
                alpha,
                levels.join(", ")
            ))
        })
}

/// Counts indexed `[x][y]` with `false = 0`, `true = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: [[u64; 2]; 2],
}

impl ContingencyTable {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        ContingencyTable { counts }
    }

    pub fn add(&mut self, x: bool, y: bool) {
        self.counts[x as usize][y as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[0][1],
            self.counts[1][0] + self.counts[1][1],
        ]
    }

    pub fn column_totals(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[1][0],
            self.counts[0][1] + self.counts[1][1],
        ]
    }

    pub fn transpose(&self) -> Self {
        let c = self.counts;
        ContingencyTable::new([[c[0][0], c[1][0]], [c[0][1], c[1][1]]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub degrees_of_freedom: u32,
    pub critical_value: f64,
    pub reject_independence: bool,
    /// Some expected count fell under [`MIN_EXPECTED`]; the test says nothing.
    pub inconclusive: bool,
}

impl TestOutcome {
    /// Conclusive and not rejecting: evidence of independence.
    pub fn accepts_independence(&self) -> bool {
        !self.inconclusive && !self.reject_independence
    }
}

/// Counts `(x, y)` co-occurrences over every record matching `filter`.
pub fn tabulate(
    dataset: &Dataset,
    x: VariableId,
    y: VariableId,
    filter: Option<&BTreeMap<VariableId, bool>>,
) -> ContingencyTable {
    let mut table = ContingencyTable::default();
    for r in &dataset.records {
        let s = &r.state;
        if let Some(f) = filter {
            if f.iter().any(|(id, v)| s.get(*id) != *v) {
                continue;
            }
        }
        table.add(s.get(x), s.get(y));
    }
    table
}

/// Pearson chi-squared on a 2x2 table. Cells whose expected count is zero
/// contribute nothing and mark the outcome inconclusive.
pub fn chi_squared(table: &ContingencyTable, alpha: f64) -> Result<TestOutcome> {
    let critical = critical_value(alpha)?;
    let n = table.total() as f64;
    let rows = table.row_totals();
    let cols = table.column_totals();
    let mut statistic = 0.0;
    let mut inconclusive = n == 0.0;
    for (i, row) in rows.iter().enumerate() {
        for (j, col) in cols.iter().enumerate() {
            let expected = if n > 0.0 {
                *row as f64 * *col as f64 / n
            } else {
                0.0
            };
            if expected < MIN_EXPECTED {
                inconclusive = true;
            }
            if expected > 0.0 {
                let d = table.counts[i][j] as f64 - expected;
                statistic += d * d / expected;
            }
        }
    }
    Ok(TestOutcome {
        statistic,
        degrees_of_freedom: 1,
        critical_value: critical,
        reject_independence: !inconclusive && statistic > critical,
        inconclusive,
    })
}

/// Compares the distribution of `target` between two datasets: rows are the
/// source dataset, columns the target's value.
pub fn distributions_differ(
    a: &Dataset,
    b: &Dataset,
    target: VariableId,
    alpha: f64,
) -> Result<TestOutcome> {
    let mut table = ContingencyTable::default();
    for r in &a.records {
        table.add(false, r.state.get(target));
    }
    for r in &b.records {
        table.add(true, r.state.get(target));
    }
    chi_squared(&table, alpha)
}

/// Stratified independence test of `x` and `y` given `given`, over the
/// observational records only.
///
/// Each assignment of `given` is one stratum. Inconclusive strata are
/// skipped; independence is rejected when any conclusive stratum rejects,
/// and the outcome is inconclusive only if every stratum is. The reported
/// statistic is the largest among conclusive strata.
pub fn cond_independent(
    dataset: &Dataset,
    x: VariableId,
    y: VariableId,
    given: &[VariableId],
    alpha: f64,
) -> Result<TestOutcome> {
    if given.contains(&x) || given.contains(&y) {
        return Err(Error::Structural(
            "conditioning set contains a tested variable".into(),
        ));
    }
    let critical = critical_value(alpha)?;
    let strata = 1usize << given.len();
    let mut tables = vec![ContingencyTable::default(); strata];
    for s in dataset.observational() {
        let idx = given
            .iter()
            .fold(0usize, |acc, g| (acc << 1) | s.get(*g) as usize);
        tables[idx].add(s.get(x), s.get(y));
    }
    let mut statistic: f64 = 0.0;
    let mut reject = false;
    let mut conclusive = 0;
    for t in &tables {
        let o = chi_squared(t, alpha)?;
        if o.inconclusive {
            continue;
        }
        conclusive += 1;
        statistic = statistic.max(o.statistic);
        reject |= o.reject_independence;
    }
    Ok(TestOutcome {
        statistic,
        degrees_of_freedom: 1,
        critical_value: critical,
        reject_independence: reject,
        inconclusive: conclusive == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WorldState;
    use crate::simulator::{Record, Regime};
    use proptest::prelude::*;

    fn dataset(rows: &[(bool, bool)]) -> Dataset {
        Dataset {
            variables: vec!["X".into(), "Y".into()],
            records: rows
                .iter()
                .map(|&(x, y)| Record {
                    regime: Regime::Observational,
                    state: WorldState { values: vec![x, y] },
                })
                .collect(),
        }
    }

    // Pearson sum with expected counts from the margins, written out cell by
    // cell for a 2x2 table.
    fn pearson_oracle(c: [[f64; 2]; 2]) -> f64 {
        let n = c[0][0] + c[0][1] + c[1][0] + c[1][1];
        let r = [c[0][0] + c[0][1], c[1][0] + c[1][1]];
        let k = [c[0][0] + c[1][0], c[0][1] + c[1][1]];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = r[i] * k[j] / n;
                s += (c[i][j] - e).powi(2) / e;
            }
        }
        s
    }

    #[test]
    fn tabulate_examples() {
        let x = VariableId(0);
        let y = VariableId(1);
        assert_eq!(tabulate(&dataset(&[]), x, y, None).counts, [[0, 0], [0, 0]]);
        let all = dataset(&[(false, false), (false, true), (true, false), (true, true)]);
        assert_eq!(tabulate(&all, x, y, None).counts, [[1, 1], [1, 1]]);
    }

    #[test]
    fn tabulate_with_filter_matches_linear_scan() {
        // 3 variables: X, Y, H. H = 0 on 40 of 100 records.
        let records: Vec<Record> = (0..100)
            .map(|i| Record {
                regime: Regime::Observational,
                state: WorldState {
                    values: vec![i % 3 == 0, i % 7 < 3, i >= 40],
                },
            })
            .collect();
        let data = Dataset {
            variables: vec!["X".into(), "Y".into(), "H".into()],
            records,
        };
        let filter: BTreeMap<_, _> = [(VariableId(2), false)].into_iter().collect();
        let t = tabulate(&data, VariableId(0), VariableId(1), Some(&filter));
        let scan = data.records.iter().filter(|r| !r.state.values[2]).count() as u64;
        assert_eq!(scan, 40);
        assert_eq!(t.total(), 40);
        let x1y1 = data
            .records
            .iter()
            .filter(|r| !r.state.values[2] && r.state.values[0] && r.state.values[1])
            .count() as u64;
        assert_eq!(t.counts[1][1], x1y1);
    }

    #[test]
    fn chi_squared_worked_example() {
        // expected [[15,25],[15,25]]: 100/15 + 100/25 + 100/15 + 100/25
        let o = chi_squared(&ContingencyTable::new([[25, 15], [5, 35]]), 0.05).unwrap();
        let oracle = pearson_oracle([[25.0, 15.0], [5.0, 35.0]]);
        assert!((oracle - 64.0 / 3.0).abs() < 1e-12);
        assert!((o.statistic - oracle).abs() < 1e-9);
        assert_eq!(o.degrees_of_freedom, 1);
        assert!(o.reject_independence && !o.inconclusive);
        assert!((o.critical_value - 3.841459).abs() < 1e-5);
    }

    #[test]
    fn chi_squared_independent_table() {
        let o = chi_squared(&ContingencyTable::new([[10, 10], [10, 10]]), 0.05).unwrap();
        assert_eq!(o.statistic, 0.0);
        assert!(o.accepts_independence());
    }

    #[test]
    fn chi_squared_small_counts_inconclusive() {
        let o = chi_squared(&ContingencyTable::new([[2, 1], [1, 2]]), 0.05).unwrap();
        assert!(o.inconclusive && !o.reject_independence);
    }

    #[test]
    fn zero_margin_is_flagged() {
        let o = chi_squared(&ContingencyTable::new([[20, 0], [20, 0]]), 0.05).unwrap();
        assert!(o.inconclusive);
        assert_eq!(o.statistic, 0.0);
        let empty = chi_squared(&ContingencyTable::default(), 0.05).unwrap();
        assert!(empty.inconclusive);
    }

    #[test]
    fn critical_values() {
        assert!((critical_value(0.05).unwrap() - 3.841459).abs() < 1e-5);
        assert!((critical_value(0.01).unwrap() - 6.634897).abs() < 1e-5);
        assert!(matches!(critical_value(0.07), Err(Error::Config(_))));
    }

    #[test]
    fn differ_extremes() {
        let zeros = dataset(&[(false, false); 20]);
        let ones = dataset(&[(false, true); 20]);
        let o = distributions_differ(&zeros, &ones, VariableId(1), 0.05).unwrap();
        assert!(o.reject_independence);
        let same = distributions_differ(&ones, &ones, VariableId(1), 0.05).unwrap();
        assert!(!same.reject_independence);
    }

    #[test]
    fn cond_independent_rejects_overlap() {
        let data = dataset(&[(true, true)]);
        assert!(
            cond_independent(&data, VariableId(0), VariableId(1), &[VariableId(0)], 0.05).is_err()
        );
    }

    #[test]
    fn cond_independent_ignores_interventional_records() {
        let mut data = dataset(&[(false, false), (true, true)]);
        for _ in 0..50 {
            for &(x, y) in &[(false, false), (true, true)] {
                data.records.push(Record {
                    regime: Regime::Do(crate::model::Intervention::single(VariableId(0), x)),
                    state: WorldState { values: vec![x, y] },
                });
            }
        }
        let o = cond_independent(&data, VariableId(0), VariableId(1), &[], 0.05).unwrap();
        assert!(o.inconclusive);
    }

    proptest! {
        #[test]
        fn statistic_symmetric_under_transpose(a in 0u64..60, b in 0u64..60, c in 0u64..60, d in 0u64..60) {
            let t = ContingencyTable::new([[a, b], [c, d]]);
            prop_assume!(t.total() > 0);
            let s1 = chi_squared(&t, 0.05).unwrap().statistic;
            let s2 = chi_squared(&t.transpose(), 0.05).unwrap().statistic;
            prop_assert!((s1 - s2).abs() <= 1e-9 * s1.max(1.0));
        }

        #[test]
        fn statistic_scales_linearly(a in 1u64..40, b in 1u64..40, c in 1u64..40, d in 1u64..40, k in 1u64..6) {
            let t = ContingencyTable::new([[a, b], [c, d]]);
            let scaled = ContingencyTable::new([[a * k, b * k], [c * k, d * k]]);
            let s1 = chi_squared(&t, 0.05).unwrap().statistic;
            let sk = chi_squared(&scaled, 0.05).unwrap().statistic;
            prop_assert!((sk - k as f64 * s1).abs() <= 1e-9 * sk.max(1.0));
        }

        #[test]
        fn same_dataset_never_differs(rows in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..80)) {
            let data = dataset(&rows);
            let o = distributions_differ(&data, &data, VariableId(1), 0.05).unwrap();
            prop_assert!(!o.reject_independence);
        }

        #[test]
        fn matches_pearson_oracle(a in 1u64..50, b in 1u64..50, c in 1u64..50, d in 1u64..50) {
            let s = chi_squared(&ContingencyTable::new([[a, b], [c, d]]), 0.05).unwrap().statistic;
            let o = pearson_oracle([[a as f64, b as f64], [c as f64, d as f64]]);
            prop_assert!((s - o).abs() <= 1e-9 * o.max(1.0));
        }
    }
}
