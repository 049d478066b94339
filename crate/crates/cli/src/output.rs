use serde::Serialize;
use serde_json::Value;

/// C-style `%.{precision}g`.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_g(*x, 12),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Result of one subcommand: CSV tables plus the structured value they
/// were drawn from.
pub struct Report {
    pub tables: Vec<Table>,
    pub result: Value,
}

impl Report {
    pub fn new(tables: Vec<Table>, result: impl Serialize) -> Self {
        Report {
            tables,
            result: to_value(result),
        }
    }
}

/// Structured form of a result. Non-finite floats become `null`, as in
/// any JSON document; the CSV tables print them as `inf`/`-inf`/`nan`.
pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

pub fn render_csv(config: &Value, report: &Report) -> String {
    let mut out = format!("# config: {}\n", serde_json::to_string(config).expect("config serializes"));
    for (i, t) in report.tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# table: {}\n", t.name));
        out.push_str(&t.header.join(","));
        out.push('\n');
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn render_json(config: &Value, report: &Report) -> String {
    let doc = serde_json::json!({ "config": config, "result": report.result });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(format_g(std::f64::consts::LN_2, 12), "0.69314718056");
        assert_eq!(format_g(0.25, 12), "0.25");
        assert_eq!(format_g(1.0, 12), "1");
        assert_eq!(format_g(100.0, 12), "100");
        assert_eq!(format_g(1e-5, 12), "1e-05");
        assert_eq!(format_g(0.0001, 12), "0.0001");
        assert_eq!(format_g(1.5e300, 12), "1.5e+300");
        assert_eq!(format_g(123_456_789_012.0, 12), "123456789012");
        assert_eq!(format_g(1_234_567_890_123.0, 12), "1.23456789012e+12");
        assert_eq!(format_g(-2.5e-7, 12), "-2.5e-07");
        assert_eq!(format_g(f64::INFINITY, 12), "inf");
        assert_eq!(format_g(0.999_999_999_999_9, 12), "1");
    }

    #[test]
    fn csv_quotes_text_with_commas() {
        assert_eq!(Cell::from("{1,2}").render(), "\"{1,2}\"");
        assert_eq!(Cell::from("plain").render(), "plain");
    }
}
