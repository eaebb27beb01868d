//! Run reports and their JSON and CSV encodings.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::Engine;
use crate::bounds::BoundsReport;
use crate::mc::McReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub engine: Engine,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub n: usize,
    pub exact: Option<BoundsReport>,
    pub mc: Option<McReport>,
}

/// `%.17g`: 17 significant digits, trailing zeros removed, exponent form
/// outside `1e-4 ..= 1e17`.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        trim_zeros(&format!("{v:.*}", (16 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Pretty JSON with floats written by [`format_g17`].
pub struct G17Formatter<'a>(PrettyFormatter<'a>);

impl Default for G17Formatter<'_> {
    fn default() -> Self {
        G17Formatter(PrettyFormatter::new())
    }
}

impl Formatter for G17Formatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter::default());
    value.serialize(&mut ser).expect("report types serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

pub fn parse_report(text: &str) -> serde_json::Result<RunReport> {
    serde_json::from_str(text)
}

pub const CSV_HEADER: [&str; 6] = ["p", "lower_J", "lower_JK", "var", "upper_JK", "upper_J"];

/// Bracket table, one row per depth. Exact values are used when present;
/// otherwise Monte Carlo point estimates with an empty `var` column.
pub fn to_csv(report: &RunReport) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    if let Some(exact) = &report.exact {
        let var = format_g17(exact.var_exact);
        for b in &exact.brackets {
            w.write_record([
                b.p.to_string(),
                format_g17(b.lower_j),
                format_g17(b.lower_jk),
                var.clone(),
                format_g17(b.upper_jk),
                format_g17(b.upper_j),
            ])?;
        }
    } else if let Some(mc) = &report.mc {
        for b in &mc.brackets {
            w.write_record([
                b.p.to_string(),
                format_g17(b.lower_j.mean),
                format_g17(b.lower_jk.mean),
                String::new(),
                format_g17(b.upper_jk.mean),
                format_g17(b.upper_j.mean),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-5");
        assert_eq!(format_g17(1e20), "1e20");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(1.0 / 3.0), "0.33333333333333331");
    }

    #[test]
    fn g17_round_trips() {
        let samples = [
            0.1,
            1.0 / 3.0,
            -7.25e-300,
            f64::MAX,
            f64::MIN_POSITIVE,
            5e-324,
            123456789.12345679,
            2.0f64.sqrt(),
        ];
        for v in samples {
            let back: f64 = format_g17(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
            let json: f64 = serde_json::from_str(&format_g17(v)).unwrap();
            assert_eq!(json.to_bits(), v.to_bits(), "{v}");
        }
    }

    #[test]
    fn json_uses_g17() {
        let text = to_json(&vec![0.1, 2.0]);
        assert!(text.contains("0.10000000000000001"), "{text}");
        assert!(text.contains("\n  2\n"), "{text}");
    }
}
