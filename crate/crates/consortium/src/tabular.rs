//! Plot-ready tabular text files: space-separated columns under a single
//! header line, one row per record, numbers in full precision. Trajectory
//! files round-trip: a written file can be re-read into the initial state
//! and control schedule that produced it.

use crate::equilibria::EquilibriumReport;
use crate::error::{Error, Result};
use crate::model::StateVector;
use crate::pmp::{ArcReport, CostatePath};
use crate::sim::{ControlSchedule, Trajectory};
use std::fmt::Write as _;
use std::path::Path;

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.12e}")
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes `t s e v q c alpha d harvest`, one row per mesh node.
///
/// The control columns carry the value applied on the interval starting at
/// the node; the last node repeats the final interval. `stride` keeps
/// every `stride`-th node plus the final one.
pub fn write_trajectory(path: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    let n = traj.n_steps();
    let mut text = String::from("t s e v q c alpha d harvest\n");
    let mut nodes: Vec<usize> = (0..=n).step_by(stride).collect();
    if *nodes.last().unwrap() != n {
        nodes.push(n);
    }
    for i in nodes {
        let x = &traj.states[i];
        let u = &traj.controls[i.min(n - 1)];
        writeln!(
            text,
            "{} {} {} {} {} {} {} {} {}",
            fmt(traj.times[i]),
            fmt(x.s),
            fmt(x.e),
            fmt(x.v),
            fmt(x.q),
            fmt(x.c),
            fmt(u.alpha),
            fmt(u.d),
            fmt(traj.harvest[i]),
        )
        .expect("string write");
    }
    write_text(path, &text)
}

/// Reads a trajectory file back into its initial state and schedule.
pub fn read_trajectory_schedule(path: &Path) -> Result<(StateVector, ControlSchedule)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty trajectory file".into()))?;
    let columns: Vec<&str> = header.split_whitespace().collect();
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Config(format!("trajectory file misses column {name:?}")))
    };
    let (it, is, ie, iv, iq, ic, ia, id) = (
        find("t")?,
        find("s")?,
        find("e")?,
        find("v")?,
        find("q")?,
        find("c")?,
        find("alpha")?,
        find("d")?,
    );
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut alphas = Vec::new();
    let mut ds = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Config(format!("row {}: bad number {v:?}: {e}", row + 2)))
            })
            .collect::<Result<_>>()?;
        if fields.len() != columns.len() {
            return Err(Error::Config(format!(
                "row {}: {} fields, expected {}",
                row + 2,
                fields.len(),
                columns.len()
            )));
        }
        times.push(fields[it]);
        states.push(StateVector::new(
            fields[is], fields[ie], fields[iv], fields[iq], fields[ic],
        ));
        alphas.push(fields[ia]);
        ds.push(fields[id]);
    }
    if times.len() < 2 {
        return Err(Error::Config("trajectory file needs at least two rows".into()));
    }
    let n = times.len() - 1;
    let h = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Config("trajectory mesh is not uniform".into()));
        }
    }
    alphas.truncate(n);
    ds.truncate(n);
    let schedule = ControlSchedule::from_values(times[n] - times[0], alphas, ds)?;
    Ok((states[0], schedule))
}

/// One row of the equilibrium report table; `None` marks a dilution rate
/// sitting on a bifurcation value.
pub struct EquilibriumRow {
    pub alpha: f64,
    pub d: f64,
    pub report: Option<EquilibriumReport>,
}

/// Writes `alpha d functional_exists algal_washout_exists s_star e_star
/// v_star q_star c_star d1 d2 gas`.
pub fn write_equilibrium_table(path: &Path, rows: &[EquilibriumRow]) -> Result<()> {
    let mut text = String::from(
        "alpha d functional_exists algal_washout_exists s_star e_star v_star q_star c_star d1 d2 gas\n",
    );
    for row in rows {
        match &row.report {
            Some(r) => {
                let x = r.functional.unwrap_or(StateVector::new(
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                ));
                writeln!(
                    text,
                    "{} {} {} {} {} {} {} {} {} {} {} {}",
                    fmt(row.alpha),
                    fmt(row.d),
                    u8::from(r.functional.is_some()),
                    u8::from(r.algal_washout.is_some()),
                    fmt(x.s),
                    fmt(x.e),
                    fmt(x.v),
                    fmt(x.q),
                    fmt(x.c),
                    fmt(r.d1),
                    fmt(r.d2),
                    r.gas_label(),
                )
                .expect("string write");
            }
            None => {
                writeln!(
                    text,
                    "{} {} 0 0 nan nan nan nan nan nan nan bifurcation",
                    fmt(row.alpha),
                    fmt(row.d),
                )
                .expect("string write");
            }
        }
    }
    write_text(path, &text)
}

/// Writes the contour cells (`alpha d f0_star feasible`) and both ridge
/// files next to it (`<stem>_ridge_alpha.txt`, `<stem>_ridge_d.txt`).
pub fn write_contour(path: &Path, grid: &crate::socp::ContourGrid) -> Result<()> {
    let mut text = String::from("alpha d f0_star feasible\n");
    for (i, &alpha) in grid.alphas.iter().enumerate() {
        for (j, &d) in grid.ds.iter().enumerate() {
            let v = grid.value(i, j);
            writeln!(
                text,
                "{} {} {} {}",
                fmt(alpha),
                fmt(d),
                fmt(v.unwrap_or(f64::NAN)),
                u8::from(v.is_some()),
            )
            .expect("string write");
        }
    }
    write_text(path, &text)?;

    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("contour");
    let sibling = |suffix: &str| path.with_file_name(format!("{stem}_{suffix}.txt"));

    let mut text = String::from("d alpha_ridge\n");
    for (d, ridge) in &grid.ridge_alpha_of_d {
        writeln!(text, "{} {}", fmt(*d), fmt(ridge.unwrap_or(f64::NAN))).expect("string write");
    }
    write_text(&sibling("ridge_alpha"), &text)?;

    let mut text = String::from("alpha d_ridge\n");
    for (alpha, ridge) in &grid.ridge_d_of_alpha {
        writeln!(text, "{} {}", fmt(*alpha), fmt(ridge.unwrap_or(f64::NAN))).expect("string write");
    }
    write_text(&sibling("ridge_d"), &text)
}

/// Writes `t zeta_alpha zeta_d hamiltonian alpha_label d_label` per node.
/// Interval labels are assigned to their left node; the last node repeats
/// the final interval.
pub fn write_pmp_table(
    path: &Path,
    traj: &Trajectory,
    costates: &CostatePath,
    report: &ArcReport,
    params: &crate::model::ModelParams,
) -> Result<()> {
    let n = traj.n_steps();
    let mut text = String::from("t zeta_alpha zeta_d hamiltonian alpha_label d_label\n");
    for i in 0..=n {
        let arc_idx = i.min(n - 1);
        let (za, zd) =
            crate::pmp::switching_functions(&traj.states[i], &costates.costates[i], params);
        let h = crate::pmp::hamiltonian(
            &traj.states[i],
            &costates.costates[i],
            &traj.controls[arc_idx],
            params,
        );
        writeln!(
            text,
            "{} {} {} {} {} {}",
            fmt(traj.times[i]),
            fmt(za),
            fmt(zd),
            fmt(h),
            report.alpha_arcs[arc_idx].label,
            report.d_arcs[arc_idx].label,
        )
        .expect("string write");
    }
    write_text(path, &text)
}

/// Writes `t alpha zeta_alpha d zeta_d alpha_bar d_bar` per node, with the
/// static optimum repeated for reference plotting.
pub fn write_control_series(
    path: &Path,
    traj: &Trajectory,
    costates: &CostatePath,
    alpha_bar: f64,
    d_bar: f64,
    params: &crate::model::ModelParams,
) -> Result<()> {
    let n = traj.n_steps();
    let mut text = String::from("t alpha zeta_alpha d zeta_d alpha_bar d_bar\n");
    for i in 0..=n {
        let u = &traj.controls[i.min(n - 1)];
        let (za, zd) =
            crate::pmp::switching_functions(&traj.states[i], &costates.costates[i], params);
        writeln!(
            text,
            "{} {} {} {} {} {} {}",
            fmt(traj.times[i]),
            fmt(u.alpha),
            fmt(za),
            fmt(u.d),
            fmt(zd),
            fmt(alpha_bar),
            fmt(d_bar),
        )
        .expect("string write");
    }
    write_text(path, &text)
}

/// Writes per-state paired series `t s_dyn ... c_dyn s_stat ... c_stat`
/// for two trajectories on the same mesh.
pub fn write_state_comparison(
    path: &Path,
    dynamic: &Trajectory,
    static_run: &Trajectory,
) -> Result<()> {
    if dynamic.times.len() != static_run.times.len() {
        return Err(Error::Config(format!(
            "mesh mismatch: {} vs {} nodes",
            dynamic.times.len(),
            static_run.times.len()
        )));
    }
    let mut text =
        String::from("t s_dyn e_dyn v_dyn q_dyn c_dyn s_stat e_stat v_stat q_stat c_stat\n");
    for i in 0..dynamic.times.len() {
        let a = dynamic.states[i].as_array();
        let b = static_run.states[i].as_array();
        let mut row = fmt(dynamic.times[i]);
        for v in a.iter().chain(b.iter()) {
            row.push(' ');
            row.push_str(&fmt(*v));
        }
        text.push_str(&row);
        text.push('\n');
    }
    write_text(path, &text)
}
