//! Shared CSV writing helpers.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `x` with 9 significant digits, trailing zeros removed, switching to
/// exponent notation outside `[1e-4, 1e9)`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

pub(crate) fn axis_header(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("u{i}")).collect()
}
