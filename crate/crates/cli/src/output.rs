use serde_json::json;

use crate::commands::{Outcome, RunConfig, Table};
use crate::Format;

pub fn render(cfg: &RunConfig, outcome: &Outcome) -> Result<String, String> {
    match cfg.format {
        Format::Json => Ok(render_json(cfg, outcome)),
        Format::Csv => match outcome {
            Outcome::Done { table: Some(t), .. } => render_csv(t),
            Outcome::Done { .. } => Err("this command has no tabular output".into()),
            // Failures still produce a structured payload.
            Outcome::Failed { .. } => Ok(render_json(cfg, outcome)),
        },
        Format::Pretty => Ok(render_pretty(cfg, outcome)),
    }
}

fn render_json(cfg: &RunConfig, outcome: &Outcome) -> String {
    let v = match outcome {
        Outcome::Done { results, pass, .. } => json!({
            "command": cfg.command,
            "config": cfg,
            "results": results,
            "pass": pass,
        }),
        Outcome::Failed { error } => json!({
            "command": cfg.command,
            "config": cfg,
            "error": error,
            "pass": false,
        }),
    };
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

fn render_csv(t: &Table) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header).map_err(|e| e.to_string())?;
    for row in &t.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn render_pretty(cfg: &RunConfig, outcome: &Outcome) -> String {
    let mut out = String::new();
    let mut head = crate::command_name(cfg.command).to_string();
    if let Some(p) = cfg.p {
        head.push_str(&format!(" p={p}"));
    }
    if let Some(k) = cfg.k {
        head.push_str(&format!(" k={k}"));
    }
    out.push_str(&head);
    out.push('\n');
    match outcome {
        Outcome::Failed { error } => {
            out.push_str(&format!("error: {error}\npass: no\n"));
        }
        Outcome::Done {
            pass, table, summary, ..
        } => {
            for line in summary {
                out.push_str(line);
                out.push('\n');
            }
            if let Some(t) = table {
                out.push_str(&aligned(t));
            }
            out.push_str(if *pass { "pass: yes\n" } else { "pass: no\n" });
        }
    }
    out
}

fn aligned(t: &Table) -> String {
    let mut widths: Vec<usize> = t.header.iter().map(|h| h.chars().count()).collect();
    for row in &t.rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut s = line(&t.header);
    for row in &t.rows {
        s.push_str(&line(row));
    }
    s
}
