//! Aligned plain-text tables.

use std::collections::BTreeMap;

use titlegen_core::corpus::{Quartiles, StatsReport};
use titlegen_core::metrics::{GroupScores, MetricReport};

/// Left-aligned first column, right-aligned numbers.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate().take(cols) {
                width[i] = width[i].max(c.chars().count());
            }
        }
        let line = |r: &[String]| {
            let cells: Vec<String> = (0..cols)
                .map(|i| {
                    let c = r.get(i).map_or("", String::as_str);
                    if i == 0 {
                        format!("{c:<w$}", w = width[i])
                    } else {
                        format!("{c:>w$}", w = width[i])
                    }
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

pub fn stats_table(s: &StatsReport) -> String {
    let mut years = Table::new(["year", "posts", "with text", "with code", "text %", "code %", "text overlap", "code overlap"]);
    for y in &s.years {
        years.row([
            y.year.to_string(),
            y.posts.to_string(),
            y.with_text.to_string(),
            y.with_code.to_string(),
            pct(y.text_proportion),
            pct(y.code_proportion),
            opt(y.mean_text_overlap),
            opt(y.mean_code_overlap),
        ]);
    }
    let mut lengths = Table::new(["tokens", "min", "q1", "median", "q3", "max"]);
    let q = |name: &str, q: &Option<Quartiles>, t: &mut Table| match q {
        Some(q) => t.row([name.to_string(), format!("{}", q.min), format!("{}", q.q1), format!("{}", q.median), format!("{}", q.q3), format!("{}", q.max)]),
        None => t.row([name, "-", "-", "-", "-", "-"]),
    };
    q("body", &s.body_length, &mut lengths);
    q("text", &s.text_length, &mut lengths);
    q("code", &s.code_length, &mut lengths);
    format!(
        "posts: {}  malformed: {}  bodies over 200 tokens: {}%\n\n{}\n{}",
        s.posts,
        s.malformed,
        pct(s.fraction_body_over_200),
        years.render(),
        lengths.render()
    )
}

fn score_cells(g: &GroupScores) -> [String; 5] {
    let m = &g.mean;
    [g.count.to_string(), pct(m.bleus4), pct(m.rouge1), pct(m.rouge2), pct(m.rouge_l)]
}

/// Scores ×100, one row per language and an overall row.
pub fn metrics_table(r: &MetricReport) -> String {
    let mut t = Table::new(["language", "posts", "BLEUS-4", "ROUGE-1", "ROUGE-2", "ROUGE-L"]);
    for (lang, g) in &r.by_language {
        let [n, a, b, c, d] = score_cells(g);
        t.row([lang.clone(), n, a, b, c, d]);
    }
    let [n, a, b, c, d] = score_cells(&r.overall);
    t.row(["overall".to_string(), n, a, b, c, d]);
    t.render()
}

/// Systems side by side within each language group.
pub fn comparison_table(systems: &BTreeMap<String, MetricReport>, order: &[&str]) -> String {
    let mut t = Table::new(["language", "system", "BLEUS-4", "ROUGE-1", "ROUGE-2", "ROUGE-L"]);
    let mut langs: Vec<String> = systems.values().flat_map(|r| r.by_language.keys().cloned()).collect();
    langs.sort();
    langs.dedup();
    let groups = langs.into_iter().map(Some).chain([None]);
    for lang in groups {
        let mut first = true;
        for &name in order {
            let Some(r) = systems.get(name) else { continue };
            let g = match &lang {
                Some(l) => match r.by_language.get(l) {
                    Some(g) => g,
                    None => continue,
                },
                None => &r.overall,
            };
            let label = if first { lang.clone().unwrap_or_else(|| "overall".into()) } else { String::new() };
            first = false;
            let [_, a, b, c, d] = score_cells(g);
            t.row([label, name.to_string(), a, b, c, d]);
        }
    }
    t.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let mut t = Table::new(["name", "n"]);
        t.row(["a", "1"]);
        t.row(["long name", "1234"]);
        let s = t.render();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "name          n");
        assert_eq!(lines[1], "---------------");
        assert_eq!(lines[2], "a             1");
        assert_eq!(lines[3], "long name  1234");
    }
}
