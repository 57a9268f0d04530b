//! CSV emission and re-parsing of result rows.

use std::io::{self, Write};
use std::path::Path;

use uplink_core::{CaseLabel, ReceiverKind};

use crate::experiment::ResultRow;
use crate::spec::Scheme;

pub const COLUMNS: [&str; 10] = [
    "swept_value",
    "receiver",
    "scheme",
    "sum_rate",
    "energy_efficiency",
    "alpha_star",
    "t_d_star",
    "case_label",
    "mc_rate",
    "mc_ci",
];

/// Formats like C's `%.12g`.
pub fn format_g12(v: f64) -> String {
    const PRECISION: i32 = 12;
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PRECISION).contains(&exp) {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn optional(v: Option<f64>) -> String {
    v.map(format_g12).unwrap_or_default()
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write>(rows: &[ResultRow], sink: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            format_g12(r.swept_value),
            r.receiver.as_str().to_string(),
            r.scheme.as_str().to_string(),
            format_g12(r.sum_rate),
            format_g12(r.energy_efficiency),
            format_g12(r.alpha_star),
            format_g12(r.t_d_star),
            r.case_label.map(|c| c.as_str().to_string()).unwrap_or_default(),
            optional(r.mc_rate),
            optional(r.mc_ci),
        ])?;
    }
    w.flush()
}

/// Writes rows to `path`, naming the path in any I/O error.
pub fn emit(rows: &[ResultRow], path: &Path) -> io::Result<()> {
    let with_path = |e: io::Error| io::Error::new(e.kind(), format!("{}: {e}", path.display()));
    let file = std::fs::File::create(path).map_err(with_path)?;
    write_csv(rows, io::BufWriter::new(file)).map_err(with_path)
}

fn parse_case(s: &str) -> Option<CaseLabel> {
    [CaseLabel::PeakTraining, CaseLabel::PeakData, CaseLabel::Interior]
        .into_iter()
        .find(|c| c.as_str() == s)
}

/// Reads rows back from CSV produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<ResultRow>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(COLUMNS) {
        return Err(format!("unexpected header {header:?}"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("'{s}': {e}"));
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| e.to_string())?;
        rows.push(ResultRow {
            swept_value: num(&r[0])?,
            receiver: r[1].parse::<ReceiverKind>().map_err(|e| e.to_string())?,
            scheme: r[2].parse::<Scheme>()?,
            sum_rate: num(&r[3])?,
            energy_efficiency: num(&r[4])?,
            alpha_star: num(&r[5])?,
            t_d_star: num(&r[6])?,
            case_label: if r[7].is_empty() {
                None
            } else {
                Some(parse_case(&r[7]).ok_or_else(|| format!("unknown case label '{}'", &r[7]))?)
            },
            mc_rate: opt(&r[8])?,
            mc_ci: opt(&r[9])?,
        });
    }
    Ok(rows)
}
