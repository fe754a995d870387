use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExperimentError, SessionRecord, StimulusBattery};

/// Quantile of ascending `sorted` data by linear interpolation between
/// closest ranks (inclusive method): position `h = (n - 1) p`.
pub fn quantile_inclusive(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    assert!((0.0..=1.0).contains(&p), "quantile probability {p} outside [0, 1]");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Boxplot statistics of one data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest observation at or above `q1 - 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest observation at or below `q3 + 1.5 IQR`.
    pub whisker_high: f64,
    /// Observations beyond the whiskers, ascending.
    pub outliers: Vec<f64>,
}

impl BoxStats {
    pub fn from_sorted(sorted: &[f64]) -> Self {
        let q1 = quantile_inclusive(sorted, 0.25);
        let median = quantile_inclusive(sorted, 0.5);
        let q3 = quantile_inclusive(sorted, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = sorted.iter().filter(|&&x| x >= lo_fence && x <= hi_fence);
        let whisker_low = inside.clone().copied().fold(f64::INFINITY, f64::min);
        let whisker_high = inside.copied().fold(f64::NEG_INFINITY, f64::max);
        let outliers = sorted
            .iter()
            .copied()
            .filter(|&x| x < lo_fence || x > hi_fence)
            .collect();
        BoxStats {
            median,
            q1,
            q3,
            whisker_low,
            whisker_high,
            outliers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRanks {
    pub id: String,
    /// One rank per session (1 = strongest), ascending.
    pub ranks: Vec<u32>,
    #[serde(flatten)]
    pub stats: BoxStats,
}

/// Per-stimulus rank distributions across finalized sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankAggregate {
    pub battery_id: String,
    pub sessions: usize,
    pub stimuli: Vec<StimulusRanks>,
}

/// Collects the rank every session gave each stimulus and summarizes them as
/// boxplots, in battery order.
pub fn aggregate_ranks(
    records: &[SessionRecord],
    battery: &StimulusBattery,
) -> Result<RankAggregate, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::Domain("no records".into()));
    }
    let battery_id = battery.id();
    for (i, record) in records.iter().enumerate() {
        if record.battery_id != battery_id {
            return Err(ExperimentError::validation(
                format!("records.{i}.battery_id"),
                format!(
                    "session {} used battery {}, expected {battery_id}",
                    record.session_id, record.battery_id
                ),
            ));
        }
        record.check_invariants().map_err(|e| {
            ExperimentError::validation(format!("records.{i}.{}", e.path()), e.to_string())
        })?;
    }

    let stimuli = battery
        .programs
        .iter()
        .enumerate()
        .map(|(index, program)| {
            let mut ranks: Vec<u32> = records
                .iter()
                .map(|r| r.rank_of(index).expect("ranking is a permutation") as u32)
                .collect();
            ranks.sort_unstable();
            let sorted: Vec<f64> = ranks.iter().map(|&r| f64::from(r)).collect();
            StimulusRanks {
                id: program.id.clone(),
                ranks,
                stats: BoxStats::from_sorted(&sorted),
            }
        })
        .collect();

    Ok(RankAggregate {
        battery_id,
        sessions: records.len(),
        stimuli,
    })
}

impl RankAggregate {
    /// Tab-separated rows: id, ranks (comma-joined), median, q1, q3,
    /// whisker_low, whisker_high, outliers.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tranks\tmedian\tq1\tq3\twhisker_low\twhisker_high\toutliers\n");
        for s in &self.stimuli {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.id,
                join(s.ranks.iter()),
                s.stats.median,
                s.stats.q1,
                s.stats.q3,
                s.stats.whisker_low,
                s.stats.whisker_high,
                join(s.stats.outliers.iter()),
            );
        }
        out
    }

    /// Column-aligned text rendering of [`RankAggregate::to_tsv`].
    pub fn to_table(&self) -> String {
        let tsv = self.to_tsv();
        let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
        let cols = rows[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        let _ = writeln!(out, "sessions: {} (rank 1 = strongest)", self.sessions);
        out
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{create_session, paper_battery};

    fn finished(seed: u64, ranking: Vec<usize>) -> SessionRecord {
        let mut s = create_session(paper_battery(), format!("P{seed:02}"), seed).unwrap();
        for _ in 0..s.len() {
            s.advance_presentation().unwrap();
        }
        s.submit_ranking(ranking).unwrap();
        for _ in 0..s.len() {
            s.advance_confirmation().unwrap();
        }
        s.finalize().unwrap()
    }

    #[test]
    fn quantile_basics() {
        assert_eq!(quantile_inclusive(&[3.0], 0.25), 3.0);
        assert_eq!(quantile_inclusive(&[1.0, 3.0], 0.5), 2.0);
        assert_eq!(quantile_inclusive(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
        assert_eq!(quantile_inclusive(&[1.0, 2.0, 3.0, 4.0], 1.0), 4.0);
    }

    #[test]
    fn single_record() {
        let agg = aggregate_ranks(&[finished(1, vec![2, 0, 1, 4, 3])], &paper_battery()).unwrap();
        assert_eq!(agg.sessions, 1);
        let s2 = &agg.stimuli[2];
        assert_eq!(s2.id, "square");
        assert_eq!(s2.ranks, vec![1]);
        assert_eq!(s2.stats.median, 1.0);
        assert_eq!(s2.stats.q1, 1.0);
        assert_eq!(s2.stats.whisker_high, 1.0);
        assert!(s2.stats.outliers.is_empty());
    }

    #[test]
    fn two_records_median() {
        let records = [
            finished(1, vec![0, 1, 2, 3, 4]),
            finished(2, vec![1, 2, 0, 3, 4]),
        ];
        let agg = aggregate_ranks(&records, &paper_battery()).unwrap();
        assert_eq!(agg.stimuli[0].ranks, vec![1, 3]);
        assert_eq!(agg.stimuli[0].stats.median, 2.0);
    }

    // Six hand-built sessions; expected values from numpy.quantile(...,
    // method="linear") on each stimulus's ranks.
    #[test]
    fn six_records_against_reference_quantiles() {
        let rankings = [
            vec![2, 3, 0, 4, 1],
            vec![2, 3, 0, 1, 4],
            vec![3, 2, 0, 4, 1],
            vec![2, 1, 0, 3, 4],
            vec![0, 2, 3, 4, 1],
            vec![1, 2, 0, 4, 3],
        ];
        let records: Vec<_> = rankings
            .iter()
            .enumerate()
            .map(|(i, r)| finished(i as u64, r.clone()))
            .collect();
        let agg = aggregate_ranks(&records, &paper_battery()).unwrap();
        // (q1, median, q3, whisker_low, whisker_high) per stimulus.
        let expected = [
            (3.0, 3.0, 3.0, 3.0, 3.0),
            (2.5, 4.5, 5.0, 1.0, 5.0),
            (1.0, 1.5, 2.0, 1.0, 2.0),
            (2.0, 2.5, 3.75, 1.0, 5.0),
            (4.0, 4.0, 4.75, 4.0, 5.0),
        ];
        for (s, e) in agg.stimuli.iter().zip(expected) {
            let st = &s.stats;
            assert_eq!((st.q1, st.median, st.q3, st.whisker_low, st.whisker_high), e, "{}", s.id);
        }
        assert_eq!(agg.stimuli[0].ranks, vec![1, 3, 3, 3, 3, 3]);
        // IQR 0 for the sine, so its single rank-1 answer is an outlier.
        assert_eq!(agg.stimuli[0].stats.outliers, vec![1.0]);
        assert!(agg.stimuli[1..].iter().all(|s| s.stats.outliers.is_empty()));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            aggregate_ranks(&[], &paper_battery()),
            Err(ExperimentError::Domain(_))
        ));
        let mut other = paper_battery();
        other.programs[0].waveform.amplitude = 0.3;
        let err = aggregate_ranks(&[finished(1, vec![0, 1, 2, 3, 4])], &other).unwrap_err();
        assert_eq!(err.path(), "records.0.battery_id");
    }

    #[test]
    fn table_export() {
        let agg = aggregate_ranks(&[finished(1, vec![2, 0, 1, 4, 3])], &paper_battery()).unwrap();
        let tsv = agg.to_tsv();
        let lines: Vec<_> = tsv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[3], "square\t1\t1\t1\t1\t1\t1\t");
        assert!(agg.to_table().contains("damped-sawtooth"));
    }
}
