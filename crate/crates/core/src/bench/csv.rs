use std::fs;
use std::path::Path;

use super::BenchRecord;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "image,width,height,snr_db,psnr_noisy,psnr_denoised,ssim_noisy,ssim_denoised,wall_time_s,seed";

/// Fixed-point rendering with six significant digits; infinities are
/// `inf` / `-inf`.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if exp >= 5 {
        format!("{digits}{}", "0".repeat((exp - 5) as usize))
    } else if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Renders records with the fixed header, one row per record.
pub fn records_to_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = ::csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    let csv_err = |e: ::csv::Error| Error::InvalidArgument(format!("CSV encoding: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.image_name.clone(),
            r.width.to_string(),
            r.height.to_string(),
            format_sig6(r.snr_db),
            format_sig6(r.psnr_noisy),
            format_sig6(r.psnr_denoised),
            format_sig6(r.ssim_noisy),
            format_sig6(r.ssim_denoised),
            format_sig6(r.wall_time_s),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn emit_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to write".into()));
    }
    let path = path.as_ref();
    fs::write(path, records_to_csv(records)?).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("CSV header: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(Error::InvalidArgument(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::InvalidArgument(format!("CSV row {}: {e}", line + 1)))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |i: usize| Error::InvalidArgument(format!("CSV row {}: bad value {:?}", line + 1, field(i)));
        let num = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let int = |i: usize| field(i).parse::<u64>().map_err(|_| bad(i));
        out.push(BenchRecord {
            image_name: field(0).to_string(),
            width: int(1)? as usize,
            height: int(2)? as usize,
            snr_db: num(3)?,
            psnr_noisy: num(4)?,
            psnr_denoised: num(5)?,
            ssim_noisy: num(6)?,
            ssim_denoised: num(7)?,
            wall_time_s: num(8)?,
            seed: int(9)?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}
