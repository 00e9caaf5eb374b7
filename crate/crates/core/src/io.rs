//! CSV and JSON artifacts: traces and lattice paths as `t,re,im`, estimates
//! as `name,scale,value,stderr,trials,seed`, fits as
//! `{slope, intercept, slope_stderr}`. Floats carry 12 significant digits.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::loewner::LoewnerTrace;
use crate::montecarlo::{EstimateRecord, PowerLawFit};

pub const TRACE_HEADER: [&str; 3] = ["t", "re", "im"];
pub const ESTIMATE_HEADER: [&str; 6] = ["name", "scale", "value", "stderr", "trials", "seed"];

/// `x` with 12 significant digits in the style of C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..P).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Invalid(format!("io: {e}"))
}

/// Rows `(t, re, im)` in the order given.
pub fn write_points_csv<W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (f64, Complex64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for (t, z) in rows {
        w.write_record([fmt_g12(t), fmt_g12(z.re), fmt_g12(z.im)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_trace_csv<W: Write>(out: W, trace: &LoewnerTrace) -> Result<()> {
    write_points_csv(
        out,
        trace.times.iter().copied().zip(trace.tips.iter().copied()),
    )
}

/// Lattice path in the trace format: `t` is the step index and the
/// coordinates are integers.
pub fn write_lattice_path_csv<W: Write>(out: W, points: &[[i64; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for (i, p) in points.iter().enumerate() {
        w.write_record([i.to_string(), p[0].to_string(), p[1].to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// Numeric table with the given header, one row per entry.
pub fn write_table_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Invalid(
                "row length does not match the header".into(),
            ));
        }
        w.write_record(r.iter().map(|&x| fmt_g12(x)))
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("not a number: {s:?}")))
}

fn check_header(r: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<()> {
    let h = r.headers().map_err(csv_err)?;
    if h.iter().ne(want.iter().copied()) {
        return Err(Error::Invalid(format!(
            "expected header {}",
            want.join(",")
        )));
    }
    Ok(())
}

pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<(f64, Complex64)>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &TRACE_HEADER)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok((
                parse_f64(&rec[0])?,
                Complex64::new(parse_f64(&rec[1])?, parse_f64(&rec[2])?),
            ))
        })
        .collect()
}

pub fn write_estimates_csv<W: Write>(out: W, records: &[EstimateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.name.clone(),
            fmt_g12(r.scale),
            fmt_g12(r.value),
            fmt_g12(r.stderr),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_estimates_csv<R: Read>(input: R) -> Result<Vec<EstimateRecord>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &ESTIMATE_HEADER)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            let int = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Invalid(format!("not an integer: {s:?}")))
            };
            Ok(EstimateRecord {
                name: rec[0].to_string(),
                scale: parse_f64(&rec[1])?,
                value: parse_f64(&rec[2])?,
                stderr: parse_f64(&rec[3])?,
                trials: int(&rec[4])?,
                seed: int(&rec[5])?,
            })
        })
        .collect()
}

/// One-line fit object with keys in the order slope, intercept, slope_stderr.
pub fn fit_json(fit: &PowerLawFit) -> String {
    format!(
        "{{\"slope\":{},\"intercept\":{},\"slope_stderr\":{}}}",
        fmt_g12(fit.slope),
        fmt_g12(fit.intercept),
        fmt_g12(fit.slope_stderr)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        // Reference strings from C printf("%.12g").
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (2.0, "2"),
            (1e-4, "0.0001"),
            (1e-5, "1e-05"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (std::f64::consts::PI, "3.14159265359"),
            (-0.1, "-0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2e-300, "2e-300"),
            (0.0, "0"),
            (99999999999.99, "100000000000"),
            (999999999999.99, "1e+12"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g12(x), want, "{x}");
        }
    }

    #[test]
    fn trace_round_trip() {
        let rows = vec![
            (0.0, Complex64::new(0.0, 0.0)),
            (0.5, Complex64::new(-0.25, 1.2345678901234567)),
            (1.0, Complex64::new(1e-9, 2.0)),
        ];
        let mut buf = Vec::new();
        write_points_csv(&mut buf, rows.clone()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,re,im\n0,0,0\n0.5,-0.25,1.23456789012\n"));
        let back = read_points_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        for ((t, z), (u, w)) in rows.iter().zip(&back) {
            assert!((t - u).abs() < 1e-12 && (z - w).norm() < 1e-11);
        }
    }

    #[test]
    fn lattice_path_uses_integers() {
        let mut buf = Vec::new();
        write_lattice_path_csv(&mut buf, &[[0, 0], [1, -2]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,re,im\n0,0,0\n1,1,-2\n");
    }

    #[test]
    fn estimates_round_trip() {
        let recs = vec![EstimateRecord {
            name: "side_hit".into(),
            scale: 3.0,
            value: 0.123456789012345,
            stderr: 1e-7,
            trials: 4000,
            seed: u64::MAX,
        }];
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "name,scale,value,stderr,trials,seed\nside_hit,3,0.123456789012,1e-07,4000,18446744073709551615\n"
        );
        let back = read_estimates_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0].seed, u64::MAX);
        assert_eq!(back[0].value, 0.123456789012);
    }

    #[test]
    fn table_rows_must_match_header() {
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &["a", "b"], &[vec![1.0, 0.25]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,0.25\n");
        assert!(write_table_csv(Vec::new(), &["a"], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_points_csv("x,y\n1,2\n".as_bytes()).is_err());
        assert!(read_estimates_csv("t,re,im\n".as_bytes()).is_err());
    }

    #[test]
    fn fit_json_parses() {
        let fit = PowerLawFit {
            slope: -0.25,
            intercept: 1.5,
            slope_stderr: 0.01,
            points: vec![],
        };
        let s = fit_json(&fit);
        assert_eq!(s, r#"{"slope":-0.25,"intercept":1.5,"slope_stderr":0.01}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["slope"], -0.25);
    }
}
