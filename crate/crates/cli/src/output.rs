//! Output documents: a manifest plus either one record or a table, written as
//! JSON or CSV with every float at 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::{Map, Value};

/// Wraps a serde_json formatter so that floats are written as `{:.16e}`.
/// Non-finite values never reach the formatter (serde_json maps them to null).
struct Sig17<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_f64(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// `{:.16e}`: 17 significant digits, which round-trips every finite f64.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn write_with<F: Formatter, T: Serialize>(value: &T, formatter: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(formatter));
    value.serialize(&mut ser).expect("serializing a JSON value cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    write_with(value, PrettyFormatter::with_indent(b"  "))
}

pub fn to_json_compact<T: Serialize>(value: &T) -> String {
    write_with(value, CompactFormatter)
}

/// A float as a JSON value; non-finite values become null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Computation result before rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Record(Map<String, Value>),
    Table {
        columns: Vec<&'static str>,
        rows: Vec<Vec<Value>>,
        /// Extra fields such as fitted slopes.
        extra: Map<String, Value>,
    },
}

impl Body {
    pub fn default_format(&self) -> Format {
        match self {
            Body::Record(_) => Format::Json,
            Body::Table { .. } => Format::Csv,
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        other => to_json_compact(other),
    }
}

pub const MANIFEST_PREFIX: &str = "# manifest: ";

/// Renders `body` with its manifest embedded.
pub fn render(manifest: &Value, body: &Body, format: Format) -> String {
    match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("manifest".into(), manifest.clone());
            match body {
                Body::Record(rec) => {
                    doc.insert("result".into(), Value::Object(rec.clone()));
                }
                Body::Table { columns, rows, extra } => {
                    let rows = rows
                        .iter()
                        .map(|row| {
                            Value::Object(columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect())
                        })
                        .collect();
                    doc.insert("rows".into(), Value::Array(rows));
                    for (k, v) in extra {
                        doc.insert(k.clone(), v.clone());
                    }
                }
            }
            let mut s = to_json_pretty(&Value::Object(doc));
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = format!("{MANIFEST_PREFIX}{}\n", to_json_compact(manifest));
            let (columns, rows): (Vec<String>, Vec<Vec<Value>>) = match body {
                Body::Record(rec) => (rec.keys().cloned().collect(), vec![rec.values().cloned().collect()]),
                Body::Table { columns, rows, extra } => {
                    for (k, v) in extra {
                        out.push_str(&format!("# {k}: {}\n", to_json_compact(v)));
                    }
                    (columns.iter().map(|c| c.to_string()).collect(), rows.clone())
                }
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&columns).expect("in-memory CSV write");
            for row in &rows {
                w.write_record(row.iter().map(csv_cell)).expect("in-memory CSV write");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("flush in-memory CSV")).expect("CSV is UTF-8"));
            out
        }
    }
}

/// A rendered document read back: its manifest and the numeric/text content
/// as a JSON value (`result`, or `rows` as an array of objects of strings for
/// CSV).
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub manifest: Value,
    pub format: Format,
    pub content: Value,
}

/// Parses a document produced by [`render`].
pub fn parse(text: &str) -> Result<Parsed, String> {
    if let Some(rest) = text.strip_prefix(MANIFEST_PREFIX) {
        let (line, body) = rest.split_once('\n').unwrap_or((rest, ""));
        let manifest: Value = serde_json::from_str(line).map_err(|e| format!("bad manifest line: {e}"))?;
        let mut extra = Map::new();
        let mut body = body;
        while let Some(rest) = body.strip_prefix("# ") {
            let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            let (k, v) = line.split_once(": ").ok_or("malformed comment line")?;
            extra.insert(
                k.to_string(),
                serde_json::from_str(v).map_err(|e| format!("bad comment value: {e}"))?,
            );
            body = tail;
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            rows.push(Value::Object(
                headers
                    .iter()
                    .zip(rec.iter())
                    .map(|(h, v)| (h.to_string(), Value::String(v.to_string())))
                    .collect(),
            ));
        }
        extra.insert("rows".into(), Value::Array(rows));
        return Ok(Parsed {
            manifest,
            format: Format::Csv,
            content: Value::Object(extra),
        });
    }
    let mut doc: Map<String, Value> = serde_json::from_str(text).map_err(|e| format!("not a gwboot document: {e}"))?;
    let manifest = doc.remove("manifest").ok_or("document has no manifest")?;
    let content = match doc.remove("result") {
        Some(r) => r,
        None => Value::Object(doc),
    };
    Ok(Parsed {
        manifest,
        format: Format::Json,
        content,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_17_digits() {
        assert_eq!(to_json_compact(&json!({"x": 0.1})), r#"{"x":1.0000000000000001e-1}"#);
        assert_eq!(to_json_compact(&json!([1.0, 2])), "[1.0000000000000000e0,2]");
        let back: Value = serde_json::from_str(&to_json_compact(&json!(1.0 / 9.0))).unwrap();
        assert_eq!(back.as_f64().unwrap(), 1.0 / 9.0);
    }

    proptest::proptest! {
        #[test]
        fn every_finite_float_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let text = to_json_compact(&num(x));
            let back: Value = serde_json::from_str(&text).unwrap();
            proptest::prop_assert_eq!(back.as_f64().unwrap().to_bits(), x.to_bits());
            let mantissa = text.split('e').next().unwrap();
            proptest::prop_assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn csv_round_trip() {
        let manifest = json!({"command": "ratio"});
        let body = Body::Table {
            columns: vec!["b", "ratio"],
            rows: vec![vec![json!(4), num(1.25)], vec![json!(8), num(1.125)]],
            extra: Map::from_iter([("fit".to_string(), json!({"slope": -0.5}))]),
        };
        let text = render(&manifest, &body, Format::Csv);
        assert!(text.starts_with("# manifest: {\"command\":\"ratio\"}\n# fit: {\"slope\":-5.0000000000000000e-1}\n"));
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.manifest, manifest);
        assert_eq!(parsed.content["rows"][1]["ratio"], "1.1250000000000000e0");
        assert_eq!(parsed.content["fit"]["slope"], json!(-0.5));
    }

    #[test]
    fn json_round_trip() {
        let manifest = json!({"command": "pc"});
        let body = Body::Record(Map::from_iter([("p_c".to_string(), num(1.0 / 9.0))]));
        let parsed = parse(&render(&manifest, &body, Format::Json)).unwrap();
        assert_eq!(parsed.content["p_c"].as_f64().unwrap(), 1.0 / 9.0);
    }
}
