//! JSON and CSV emission with 17 significant digits.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

/// `{:.16e}`, or `nan`/`inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn reformat(v: &mut Value) {
    match v {
        Value::Number(n) => {
            let s = n.to_string();
            if s.contains(['.', 'e', 'E']) {
                if let Some(x) = n.as_f64() {
                    *n = Number::from_str(&fmt_f64(x)).expect("formatted float is a JSON number");
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(reformat),
        Value::Object(m) => m.values_mut().for_each(reformat),
        _ => {}
    }
}

/// Pretty JSON with every float rewritten as `{:.16e}`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    reformat(&mut v);
    serde_json::to_string_pretty(&v).expect("values serialize")
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes JSON to `json` (stdout when absent) and CSV to `csv` if given.
pub fn emit<T: Serialize>(
    value: &T,
    csv: Option<(&str, Vec<String>)>,
    json_path: Option<&Path>,
    csv_path: Option<&Path>,
) -> std::io::Result<()> {
    let json = to_json(value);
    match json_path {
        Some(p) => write_text(p, &json)?,
        None => println!("{json}"),
    }
    if let (Some(path), Some((header, rows))) = (csv_path, csv) {
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_seventeen_digits() {
        let s = to_json(&serde_json::json!({"x": 0.1, "n": 3, "v": [1.5]}));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].to_string(), "1.0000000000000001e-1");
        assert_eq!(v["n"].to_string(), "3");
        assert_eq!(v["v"][0].to_string(), "1.5000000000000000e+0");
    }
}
