//! Gnuplot-ready columns from a results CSV.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::runner::CSV_HEADER;

/// Writes one `<stem>__<scheme>__<metric>.dat` per series, or a header-only
/// `<stem>.dat` when the CSV has no rows. Missing values become `nan`.
pub fn emit_plotdata(csv_path: &Path, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut rdr = csv::Reader::from_path(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        bail!("{}: unexpected header {:?}", csv_path.display(), header);
    }
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("results").to_string();

    // (scheme, metric, sweep_param) in first-seen order.
    let mut series: Vec<((String, String, String), Vec<String>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{} row {}", csv_path.display(), i + 1))?;
        let num = |col: usize| -> anyhow::Result<String> {
            let s = &rec[col];
            if s.is_empty() {
                return Ok("nan".into());
            }
            let x: f64 = s.parse().with_context(|| format!("row {}, column {}: {s:?}", i + 1, CSV_HEADER[col]))?;
            Ok(format!("{x:.16e}"))
        };
        let line = format!("{} {} {} {} {}", num(3)?, num(5)?, num(6)?, num(7)?, &rec[8]);
        let key = (rec[0].to_string(), rec[1].to_string(), rec[2].to_string());
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, lines)) => lines.push(line),
            None => series.push((key, vec![line])),
        }
    }

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    if series.is_empty() {
        let p = out_dir.join(format!("{stem}.dat"));
        fs::write(&p, "# sweep_value analytical simulated_mean stderr trials\n")?;
        written.push(p);
        return Ok(written);
    }
    for ((scheme, metric, param), lines) in series {
        let p = out_dir.join(format!("{stem}__{scheme}__{metric}.dat"));
        let mut text = format!("# {param} analytical simulated_mean stderr trials\n");
        for l in lines {
            text.push_str(&l);
            text.push('\n');
        }
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
    }
    Ok(written)
}
