//! CSV, JSON and plain-text renderings.

use std::io::Write;

use orbex_core::cases::{CaseRecord, CaseReport, SweepRow};
use orbex_core::orbitlab::LimitCycle;
use orbex_core::StateVec3;
use serde::Serialize;

use crate::error::CliError;

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "x", "y", "z"];

pub const SWEEP_HEADER: [&str; 11] =
    ["b", "T", "rotation", "cycles", "lej1", "lej2", "lej3", "leo1", "leo2", "leo3", "sign_class"];

/// Full double precision, seventeen significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Streams `t,x,y,z` rows.
pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(w: W) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(TRAJECTORY_HEADER)?;
        Ok(TrajectoryWriter { inner })
    }

    pub fn row(&mut self, t: f64, s: &StateVec3) -> Result<(), CliError> {
        self.inner.write_record([real(t), real(s.0[0]), real(s.0[1]), real(s.0[2])])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct CycleSidecar {
    #[serde(rename = "T")]
    pub period: f64,
    pub rotation_number: u32,
    pub recurrence_residual: f64,
}

impl From<&LimitCycle> for CycleSidecar {
    fn from(c: &LimitCycle) -> Self {
        CycleSidecar {
            period: c.period,
            rotation_number: c.rotation_number,
            recurrence_residual: c.recurrence_residual,
        }
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn opt_count<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn sweep_record(row: &SweepRow) -> Vec<String> {
    let mut rec = vec![row.b.to_string(), opt_real(row.period), opt_count(row.rotation), opt_count(row.cycles)];
    for triple in [row.le_j, row.le_o] {
        match triple {
            Some(v) => rec.extend(v.iter().map(|x| x.to_string())),
            None => rec.extend(std::iter::repeat(String::new()).take(3)),
        }
    }
    rec.push(match (row.sign, &row.error) {
        (Some(s), _) => s.label().to_string(),
        (None, Some(_)) => "failed".to_string(),
        (None, None) => String::new(),
    });
    rec
}

pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for row in rows {
        out.write_record(sweep_record(row))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Left-aligned columns separated by two spaces.
pub fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn triple(v: &[f64; 3]) -> String {
    format!("({:.6}, {:.6}, {:.6})", v[0], v[1], v[2])
}

pub fn case_report_text(r: &CaseReport) -> String {
    let mut out = format!("case {}: {}\n", r.id, if r.pass { "PASS" } else { "FAIL" });
    if let Some(why) = &r.failure {
        out.push_str(&format!("  failure: {why}\n"));
    }
    let mut facts = Vec::new();
    if let Some(t) = r.period {
        facts.push(format!("T = {t:.6}"));
    }
    if let Some(n) = r.rotation {
        facts.push(format!("rotation = {n}"));
    }
    if let Some(n) = r.cycles {
        facts.push(format!("cycles = {n}"));
    }
    if let Some(s) = r.stability {
        facts.push(format!("stability = {}", s.label()));
    }
    if !facts.is_empty() {
        out.push_str(&format!("  {}\n", facts.join(", ")));
    }
    if let Some(s) = &r.spectrum {
        out.push_str(&format!("  le_j = {}\n  le_o = {}\n", triple(&s.le_j), triple(&s.le_o)));
    }
    let mut rows = vec![["field", "computed", "expected", "delta", "tolerance", "ok"].map(String::from).to_vec()];
    for c in &r.checks {
        rows.push(vec![
            c.field.clone(),
            c.computed.to_string(),
            c.expected.to_string(),
            c.delta.map_or_else(|| "-".into(), |d| format!("{d:.2e}")),
            c.tolerance.map_or_else(|| "-".into(), |d| format!("{d:.0e}")),
            if c.pass { "yes" } else { "NO" }.into(),
        ]);
    }
    for line in table(&rows).lines() {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct CaseListing<'a> {
    pub id: &'a str,
    pub family: &'a str,
    pub provenance: &'a str,
}

pub fn case_listing(records: &[CaseRecord]) -> Vec<CaseListing<'_>> {
    records.iter().map(|r| CaseListing { id: &r.id, family: r.family(), provenance: &r.provenance }).collect()
}

pub fn case_list_text(records: &[CaseRecord]) -> String {
    let rows: Vec<Vec<String>> = case_listing(records)
        .iter()
        .map(|c| vec![c.id.to_string(), c.family.to_string(), c.provenance.to_string()])
        .collect();
    table(&rows)
}

/// Exponent spectra of one orbit, as printed by `spectrum`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub system: String,
    pub horizon: f64,
    pub period: Option<f64>,
    pub rotation_number: Option<u32>,
    pub le_j: [f64; 3],
    pub le_o: [f64; 3],
    pub le_svd: [f64; 3],
    pub le_qr: [f64; 3],
    pub sign_class: String,
    pub ref1_class: String,
}

impl SpectrumReport {
    pub fn text(&self) -> String {
        let mut out = format!("system {}  horizon {:.6}\n", self.system, self.horizon);
        if let (Some(t), Some(n)) = (self.period, self.rotation_number) {
            out.push_str(&format!("cycle T = {t:.6}, rotation = {n}\n"));
        }
        let rows = vec![
            vec!["le_j".to_string(), triple(&self.le_j)],
            vec!["le_o".to_string(), triple(&self.le_o)],
            vec!["le_svd".to_string(), triple(&self.le_svd)],
            vec!["le_qr".to_string(), triple(&self.le_qr)],
            vec!["signs".to_string(), self.sign_class.clone()],
            vec!["classical".to_string(), self.ref1_class.clone()],
        ];
        out.push_str(&table(&rows));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use orbex_core::orbitlab::SignDistribution;

    #[test]
    fn reals_keep_seventeen_digits() {
        let s = real(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn sweep_rows_follow_the_header() {
        let row = SweepRow {
            b: 0.5024,
            period: Some(6.3),
            rotation: Some(1),
            cycles: Some(1),
            le_j: Some([-0.1, -0.1, -0.3]),
            le_o: Some([0.5, -0.4, -0.6]),
            sign: Some(SignDistribution::A),
            attractor: None,
            error: None,
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[row.clone(), SweepRow { sign: None, error: Some("x".into()), ..row }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "b,T,rotation,cycles,lej1,lej2,lej3,leo1,leo2,leo3,sign_class");
        assert_eq!(lines[1], "0.5024,6.3,1,1,-0.1,-0.1,-0.3,0.5,-0.4,-0.6,a'");
        assert!(lines[2].ends_with(",failed"));
    }

    #[test]
    fn tables_align() {
        let t = table(&[vec!["a".into(), "bbb".into()], vec!["cccc".into(), "d".into()]]);
        assert_eq!(t, "a     bbb\ncccc  d\n");
    }

    #[test]
    fn trajectory_rows() {
        let mut buf = Vec::new();
        let mut w = TrajectoryWriter::new(&mut buf).unwrap();
        w.row(0.5, &StateVec3([1.0, -2.0, 0.0])).unwrap();
        w.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,x,y,z\n5.0000000000000000e-1,1.0000000000000000e0,-2.0000000000000000e0,0.0000000000000000e0\n"
        );
    }
}
