//! Trace export and import.
//!
//! Columns: `t, x1..xn, xn1..xnn, u1..um, ua1..uam, v1..vm, r1..rm,
//! sigma1_1..sigma1_m, f1..fm`, followed by `sigma2_1..sigma2_{n-m},
//! xtilde1..xtilden, kappa`. Values use the shortest round-trip decimal form.

use std::io::{Read, Write};
use std::path::Path;

use l1rg_core::simkit::SimTrace;

use crate::error::CliError;

pub fn header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    let mut add = |prefix: &str, k: usize| h.extend((1..=k).map(|i| format!("{prefix}{i}")));
    add("x", n);
    add("xn", n);
    add("u", m);
    add("ua", m);
    add("v", m);
    add("r", m);
    add("sigma1_", m);
    add("f", m);
    add("sigma2_", n - m);
    add("xtilde", n);
    h.push("kappa".into());
    h
}

pub fn write_trace<W: Write>(tr: &SimTrace, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Other(e.to_string());
    w.write_record(header(tr.n(), tr.m())).map_err(io)?;
    let mut rec = Vec::new();
    for k in 0..tr.len() {
        rec.clear();
        rec.push(tr.t[k].to_string());
        for ch in [&tr.x, &tr.xn, &tr.u, &tr.ua, &tr.v, &tr.r, &tr.sigma1, &tr.f, &tr.sigma2, &tr.xtilde] {
            rec.extend(ch.row(k).iter().map(f64::to_string));
        }
        rec.push(tr.kappa[k].to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save(tr: &SimTrace, path: &Path) -> Result<(), CliError> {
    let f = std::fs::File::create(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    write_trace(tr, std::io::BufWriter::new(f))
}

fn count(names: &csv::StringRecord, prefix: &str) -> usize {
    names
        .iter()
        .filter(|s| s.strip_prefix(prefix).is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())))
        .count()
}

pub fn read_trace<R: Read>(input: R) -> Result<SimTrace, CliError> {
    let mut rd = csv::Reader::from_reader(input);
    let names = rd.headers().map_err(|e| CliError::Input(format!("header: {e}")))?.clone();
    let (n, m) = (count(&names, "x"), count(&names, "u"));
    if n == 0 || m == 0 || m > n {
        return Err(CliError::Input("header: cannot infer state and input counts".into()));
    }
    let want = header(n, m);
    if names.iter().ne(want.iter().map(String::as_str)) {
        return Err(CliError::Input(format!("header: expected {} columns for n = {n}, m = {m}", want.len())));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        let vals = rec
            .iter()
            .zip(&want)
            .map(|(s, col)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Input(format!("line {line}, column {col}: bad number {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(CliError::Input("trace has no records".into()));
    }
    let h = if rows.len() > 1 { rows[1][0] - rows[0][0] } else { 0.0 };
    let mut tr = SimTrace::new(n, m, h, 1);
    for r in &rows {
        let mut at = 1;
        let mut take = |w: usize| {
            let s = &r[at..at + w];
            at += w;
            s
        };
        tr.t.push(r[0]);
        tr.x.push(take(n));
        tr.xn.push(take(n));
        tr.u.push(take(m));
        tr.ua.push(take(m));
        tr.v.push(take(m));
        tr.r.push(take(m));
        tr.sigma1.push(take(m));
        tr.f.push(take(m));
        tr.sigma2.push(take(n - m));
        tr.xtilde.push(take(n));
        tr.kappa.push(r[r.len() - 1]);
    }
    Ok(tr)
}

pub fn load(path: &Path) -> Result<SimTrace, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    read_trace(std::io::BufReader::new(f)).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}
