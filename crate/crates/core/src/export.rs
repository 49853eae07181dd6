//! Plot-ready CSV writers. Numbers use the shortest representation that
//! parses back to the same `f64`; lines end in `\n`.

use std::fmt::Write;

use crate::action::Trajectory;
use crate::propagation::SingularArc;
use crate::weak_kam::TorusGrid;

/// Shortest round-trip decimal form of `x`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0
        return "0".to_string();
    }
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn axis_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `time, x1..xn, p_x_norm, singular, residual`.
pub fn arc_csv(arc: &SingularArc) -> String {
    let n = arc.points.first().map_or(0, |p| p.len());
    let mut out = String::new();
    let mut header = vec!["time".to_string()];
    header.extend(axis_names("x", n));
    header.extend(["p_x_norm", "singular", "residual"].map(String::from));
    push_row(&mut out, &header);
    for i in 0..arc.points.len() {
        let mut row = vec![fmt_f64(arc.times[i])];
        row.extend(arc.points[i].iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(arc.p_x_list[i].norm()));
        row.push(u8::from(arc.singular_flags[i]).to_string());
        row.push(
            arc.inclusion_residuals
                .get(i)
                .map_or_else(String::new, |r| fmt_f64(*r)),
        );
        push_row(&mut out, &row);
    }
    out
}

/// `index, x1..xn, u`.
pub fn grid_csv(grid: &TorusGrid) -> String {
    let mut out = String::new();
    let mut header = vec!["index".to_string()];
    header.extend(axis_names("x", grid.dim));
    header.push("u".into());
    push_row(&mut out, &header);
    for (k, v) in grid.values.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(grid.node(k).into_iter().map(fmt_f64));
        row.push(fmt_f64(*v));
        push_row(&mut out, &row);
    }
    out
}

/// `s, x1..xn, v1..vn, p1..pn, energy` along a minimizer.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.xi.first().map_or(0, |p| p.len());
    let mut out = String::new();
    let mut header = vec!["s".to_string()];
    header.extend(axis_names("x", n));
    header.extend(axis_names("v", n));
    header.extend(axis_names("p", n));
    header.push("energy".into());
    push_row(&mut out, &header);
    let m = traj.xi.len();
    for k in 0..m {
        let mut row = vec![fmt_f64(traj.nodes[k])];
        row.extend(traj.xi[k].iter().map(|v| fmt_f64(*v)));
        row.extend(traj.xi_dot[k].iter().map(|v| fmt_f64(*v)));
        row.extend(traj.p[k].iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(traj.energy[k]));
        push_row(&mut out, &row);
    }
    out
}

/// Generic table writer for callers assembling their own columns.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for r in rows {
        push_row(&mut out, &r.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>());
    }
    out
}
