use std::fmt::Write as _;

use serde::Serialize;

use super::{fixture_ensemble, training_set, N_POINTS, PAIR};
use crate::ensemble::{profile, DiscriminantState, Precision};
use crate::error::Result;
use crate::ratings::{x_value, x_value_exact};
use crate::rational::{round2_f64, to_f64, Rational};

const PUBLISHED_TABLE2: &str = include_str!("data/table2_published.csv");
const PUBLISHED_TABLE3: &str = include_str!("data/table3_published.csv");

/// Coverage after the first `t` models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub t: usize,
    /// `N(q, M_t)`
    pub counts: Vec<usize>,
    /// `Y(q, M_t) = N / t`
    pub ratios: Vec<Rational>,
}

/// The newest model's ratings and X values, and `Y_12` over `M_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table3Row {
    pub t: usize,
    pub model_id: u64,
    pub r1: Rational,
    pub r2: Rational,
    pub d: Rational,
    pub x_in: Rational,
    pub x_out: Rational,
    pub y_exact: Vec<Rational>,
    /// `r1, r2, d, x_in, x_out` in double precision, as the listing computed them.
    pub printed_header: [f64; 5],
    /// `Y_12` as the published listing computed it: the running mean is fed
    /// the X values after they were printed with two decimals.
    pub y_published: Vec<f64>,
}

pub fn emit_table2() -> Result<Vec<Table2Row>> {
    let ens = fixture_ensemble(false)?;
    let ds = training_set();
    let mut state = DiscriminantState::new(ds.points().to_vec(), ens.training(), Precision::Float);
    let mut rows = Vec::with_capacity(ens.len());
    for e in ens.models() {
        state.push(e)?;
        rows.push(Table2Row {
            t: state.t(),
            counts: (0..N_POINTS).map(|q| state.coverage_count(q)).collect(),
            ratios: (0..N_POINTS).map(|q| state.coverage_ratio_exact(q)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

pub fn emit_table3() -> Result<Vec<Table3Row>> {
    let ens = fixture_ensemble(false)?;
    let ds = training_set();
    let mut state = DiscriminantState::new(ds.points().to_vec(), ens.training(), Precision::Exact);
    let mut printed_y = vec![0.0f64; N_POINTS];
    let mut rows = Vec::with_capacity(ens.len());
    for e in ens.models() {
        state.push(e)?;
        let t = state.t();
        let r = &e.rating;
        let x_in = x_value_exact(r, true, PAIR);
        let x_out = x_value_exact(r, false, PAIR);
        // the listing re-reads its own two-decimal output
        let x_in_printed: f64 = round2_f64(x_value(r, true, PAIR)).parse().expect("decimal");
        let x_out_printed: f64 = round2_f64(x_value(r, false, PAIR)).parse().expect("decimal");
        for (q, y) in printed_y.iter_mut().enumerate() {
            let x = if e.model.contains(&ds.points()[q])? { x_in_printed } else { x_out_printed };
            *y = (*y * (t - 1) as f64 + x) / t as f64;
        }
        rows.push(Table3Row {
            t,
            model_id: e.model.id(),
            r1: r.rating_exact(1),
            r2: r.rating_exact(2),
            d: r.enrichment_exact(PAIR),
            x_in,
            x_out,
            y_exact: (0..N_POINTS)
                .map(|q| state.y_exact(q, PAIR).map(|y| y.expect("exact state")))
                .collect::<Result<_>>()?,
            printed_header: [
                r.rating(1),
                r.rating(2),
                r.enrichment(PAIR),
                x_value(r, true, PAIR),
                x_value(r, false, PAIR),
            ],
            y_published: printed_y.clone(),
        });
    }
    Ok(rows)
}

fn point_columns(prefix: &str) -> String {
    (0..N_POINTS).map(|q| format!("{prefix}_q{q}")).collect::<Vec<_>>().join(",")
}

/// Table 2 in the published two-decimal layout.
pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut out = format!("t,{},{}\n", point_columns("N"), point_columns("Y"));
    for row in rows {
        let n = row.counts.iter().map(ToString::to_string);
        let y = row.counts.iter().map(|&n| round2_f64(n as f64 / row.t as f64));
        let cells: Vec<String> = std::iter::once(row.t.to_string()).chain(n).chain(y).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Table 3 in the published two-decimal layout.
pub fn table3_csv(rows: &[Table3Row]) -> String {
    let mut out = format!("t,model,r1,r2,d,x_in,x_out,{}\n", point_columns("Y"));
    for row in rows {
        let mut cells = vec![row.t.to_string(), row.model_id.to_string()];
        cells.extend(row.printed_header.iter().map(|&v| round2_f64(v)));
        cells.extend(row.y_published.iter().map(|&y| round2_f64(y)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A recomputed cell that differs from the published table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellMismatch {
    pub table: &'static str,
    pub row: usize,
    pub column: String,
    pub published: String,
    pub computed: String,
}

fn split_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.trim().to_string()).collect()).collect();
    (header, rows)
}

pub fn published_table2() -> Vec<Vec<String>> {
    split_csv(PUBLISHED_TABLE2).1
}

pub fn published_table3() -> Vec<Vec<String>> {
    split_csv(PUBLISHED_TABLE3).1
}

fn compare(table: &'static str, published: &str, computed: &str) -> Vec<CellMismatch> {
    let (header, want) = split_csv(published);
    let (_, got) = split_csv(computed);
    let mut out = Vec::new();
    for r in 0..want.len().max(got.len()) {
        let empty = Vec::new();
        let (w, g) = (want.get(r).unwrap_or(&empty), got.get(r).unwrap_or(&empty));
        for c in 0..w.len().max(g.len()) {
            let wv = w.get(c).cloned().unwrap_or_default();
            let gv = g.get(c).cloned().unwrap_or_default();
            if wv != gv {
                out.push(CellMismatch {
                    table,
                    row: r + 1,
                    column: header.get(c).cloned().unwrap_or_else(|| format!("col{c}")),
                    published: wv,
                    computed: gv,
                });
            }
        }
    }
    out
}

pub fn compare_table2(rows: &[Table2Row]) -> Vec<CellMismatch> {
    compare("table2", PUBLISHED_TABLE2, &table2_csv(rows))
}

pub fn compare_table3(rows: &[Table3Row]) -> Vec<CellMismatch> {
    compare("table3", PUBLISHED_TABLE3, &table3_csv(rows))
}

/// One stratum of one point's coverage profile at one `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub t: usize,
    pub q: usize,
    pub class: usize,
    pub r: Rational,
    pub group_size: usize,
    pub count: usize,
    pub f: Rational,
}

/// `f_{M_t,r_i,TR_i}(q)` for every `t`, `q`, class and rating value.
pub fn emit_profiles() -> Result<Vec<ProfileRow>> {
    let ens = fixture_ensemble(false)?;
    let ds = training_set();
    let mut rows = Vec::new();
    for t in 1..=ens.len() {
        for (qi, q) in ds.points().iter().enumerate() {
            for class in 1..=2 {
                let p = profile(ens.prefix(t), class, ens.training().class_sizes[class - 1], q)?;
                for k in 0..p.group_sizes.len() {
                    rows.push(ProfileRow {
                        t,
                        q: qi,
                        class,
                        r: p.r_value(k),
                        group_size: p.group_sizes[k],
                        count: p.counts[k],
                        f: p.ratio(k),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn profiles_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("t,q,class,r,group_size,count,f,f_exact\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.q,
            r.class,
            to_f64(&r.r),
            r.group_size,
            r.count,
            to_f64(&r.f),
            r.f
        );
    }
    out
}

fn series(title: &str, n_rows: usize, value: impl Fn(usize, usize) -> (usize, f64)) -> String {
    let mut out = format!("# {title}\n# one block per point (gnuplot index q); columns: t value\n");
    for q in 0..N_POINTS {
        let _ = writeln!(out, "\n\n# q{q}");
        for r in 0..n_rows {
            let (t, v) = value(r, q);
            let _ = writeln!(out, "{t} {v}");
        }
    }
    out
}

/// `Y(q, M_t)` against `t`.
pub fn figure1_series(rows: &[Table2Row]) -> String {
    series("coverage ratio Y(q,M_t)", rows.len(), |r, q| (rows[r].t, to_f64(&rows[r].ratios[q])))
}

/// Exact `Y_12(q, M_t)` against `t`.
pub fn figure2_series(rows: &[Table3Row]) -> String {
    series("discriminant Y_12(q,M_t)", rows.len(), |r, q| (rows[r].t, to_f64(&rows[r].y_exact[q])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn table2_spot_rows() {
        let rows = emit_table2().unwrap();
        assert_eq!(rows[0].counts, vec![0, 0, 0, 1, 0, 1, 1, 0, 1, 1]);
        let y10: Vec<String> = rows[9].ratios.iter().map(|y| round2_f64(to_f64(y))).collect();
        assert_eq!(y10, ["0.50", "0.50", "0.50", "0.50", "0.40", "0.50", "0.40", "0.50", "0.60", "0.60"]);
        assert!(rows[251].ratios.iter().all(|y| *y == ratio(1, 2)));
        assert_eq!(rows[0].ratios[0], ratio(0, 1));
        assert_eq!(rows[9].ratios[8], ratio(3, 5));
    }

    #[test]
    fn table3_spot_rows() {
        let rows = emit_table3().unwrap();
        let m1 = &rows[0];
        assert_eq!((m1.r1, m1.r2, m1.d), (ratio(1, 5), ratio(4, 5), ratio(-3, 5)));
        assert_eq!((m1.x_in, m1.x_out), (ratio(-1, 3), ratio(4, 3)));
        let header: Vec<String> = m1.printed_header.iter().map(|&v| round2_f64(v)).collect();
        assert_eq!(header, ["0.20", "0.80", "-0.60", "-0.33", "1.33"]);
        let m207 = &rows[206];
        assert_eq!((m207.r1, m207.r2, m207.x_in, m207.x_out), (ratio(1, 1), ratio(0, 1), ratio(1, 1), ratio(0, 1)));
        let m251: Vec<String> = rows[250].y_published.iter().map(|&y| round2_f64(y)).collect();
        assert_eq!(m251, ["1.00", "1.00", "1.00", "0.00", "0.00", "0.00", "0.00", "1.00", "1.00", "0.00"]);
        let poles: Vec<Rational> = [1, 1, 1, 0, 0, 0, 0, 1, 1, 0].iter().map(|&v| Rational::from_integer(v)).collect();
        assert_eq!(rows[251].y_exact, poles);
        let y2_q4 = round2_f64(rows[1].y_published[4]);
        assert_eq!(y2_q4, "0.50");
        // m84 row: q9 at 0.08
        assert_eq!(round2_f64(rows[83].y_published[9]), "0.08");
    }

    #[test]
    fn published_tables_have_252_rows() {
        assert_eq!(published_table2().len(), 252);
        assert_eq!(published_table3().len(), 252);
        assert!(published_table3().iter().all(|r| r.len() == 17));
    }

    #[test]
    fn compare_reports_cell_coordinates() {
        let mut rows = emit_table2().unwrap();
        rows[4].counts[2] += 1;
        let mism = compare_table2(&rows);
        let cells: Vec<(usize, &str)> = mism.iter().map(|m| (m.row, m.column.as_str())).collect();
        assert_eq!(cells, [(5, "N_q2"), (5, "Y_q2")]);
        assert_eq!(mism[0].published, "3");
    }
}
