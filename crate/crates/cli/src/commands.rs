use std::path::Path;

use ptmathieu::eig::converged_spectrum;
use ptmathieu::fit::{log_grid, power_law_fit, FitResult};
use ptmathieu::phase::{trace_exceptional_line, ExceptionalLine, Side};
use ptmathieu::sweep::{linear_grid, sweep_levels, validate_grid, SweepParam};
use ptmathieu::{BoundaryCondition, ModelParams};
use rayon::prelude::*;

use crate::args::{Command, FitArgs, SideArg, SpectrumArgs, SurfaceArgs, SweepArgs, SweepParamArg, TraceArgs};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const SPECTRUM_COLUMNS: &[&str] = &["level", "re", "im"];
pub const SWEEP_COLUMNS: &[&str] = &["q", "delta", "level", "re", "im"];
pub const TRACE_COLUMNS: &[&str] = &["delta", "q_crit_pos", "q_crit_neg", "jump_flag"];
pub const FIT_COLUMNS: &[&str] = &["j", "bc", "A", "alpha", "residual_rms", "delta_lo", "delta_hi"];

/// `lo:hi:step` or a comma-separated list, strictly ascending.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Config(format!("grid `{spec}`: {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:step"));
        }
        linear_grid(num(parts[0])?, num(parts[1])?, num(parts[2])?)?
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn parse_js(spec: &str) -> Result<Vec<u32>, CliError> {
    spec.split(',')
        .map(|s| match s.trim().parse::<u32>() {
            Ok(j) if j >= 1 => Ok(j),
            _ => Err(CliError::Config(format!("`{s}` is not a positive integer j"))),
        })
        .collect()
}

pub fn run(command: &Command) -> Result<(Table, String), CliError> {
    match command {
        Command::Spectrum(a) => spectrum(a),
        Command::Sweep(a) => sweep(a),
        Command::Surface(a) => surface(a),
        Command::Trace(a) => trace(a),
        Command::Fit(a) => fit(a),
    }
}

fn level_cells(level: usize, z: num_complex::Complex64) -> [Cell; 3] {
    [Cell::Int(level as i64), Cell::Num(z.re), Cell::Num(z.im)]
}

fn spectrum(a: &SpectrumArgs) -> Result<(Table, String), CliError> {
    let p = ModelParams::new(a.q, a.delta, a.model.j, a.model.bc)?;
    let s = converged_spectrum(&p, a.model.k, &a.solver.settings())?;
    let mut table = Table::new(SPECTRUM_COLUMNS);
    for (level, z) in s.levels(a.model.k).into_iter().enumerate() {
        table.push(level_cells(level, z).to_vec());
    }
    let summary = format!("{} levels at N = {}", a.model.k, s.n_used);
    Ok((table, summary))
}

fn sweep(a: &SweepArgs) -> Result<(Table, String), CliError> {
    let base = ModelParams::new(a.q, a.delta, a.model.j, a.model.bc)?;
    let grid = parse_grid(&a.grid)?;
    let param = match a.sweep_param {
        SweepParamArg::Q => SweepParam::Q,
        SweepParamArg::Delta => SweepParam::Delta,
    };
    let result = sweep_levels(&base, param, &grid, a.model.k, &a.solver.settings())?;
    let mut curves: Vec<_> = result.curves.iter().collect();
    curves.sort_by_key(|c| c.label);
    let mut table = Table::new(SWEEP_COLUMNS);
    for (i, &x) in grid.iter().enumerate() {
        let p = param.apply(&base, x);
        for c in &curves {
            let mut row = vec![Cell::Num(p.q), Cell::Num(p.delta)];
            row.extend(level_cells(c.label, c.values[i]));
            table.push(row);
        }
    }
    Ok((table, format!("{} branches over {} grid points", curves.len(), grid.len())))
}

fn surface(a: &SurfaceArgs) -> Result<(Table, String), CliError> {
    let qs = parse_grid(&a.q_grid)?;
    let deltas = parse_grid(&a.delta_grid)?;
    let settings = a.solver.settings();
    let points: Vec<(f64, f64)> = qs.iter().flat_map(|&q| deltas.iter().map(move |&d| (q, d))).collect();
    let spectra = points
        .par_iter()
        .map(|&(q, d)| {
            let p = ModelParams::new(q, d, a.model.j, a.model.bc)?;
            Ok(converged_spectrum(&p, a.model.k, &settings)?.levels(a.model.k))
        })
        .collect::<Result<Vec<_>, ptmathieu::Error>>()?;
    let mut table = Table::new(SWEEP_COLUMNS);
    for (&(q, d), levels) in points.iter().zip(&spectra) {
        for (level, &z) in levels.iter().enumerate() {
            let mut row = vec![Cell::Num(q), Cell::Num(d)];
            row.extend(level_cells(level, z));
            table.push(row);
        }
    }
    Ok((table, format!("{} levels on a {} x {} grid", a.model.k, qs.len(), deltas.len())))
}

fn trace(a: &TraceArgs) -> Result<(Table, String), CliError> {
    let grid = parse_grid(&a.delta_grid)?;
    let settings = a.phase.settings(a.model.k);
    let line = |side| trace_exceptional_line(&grid, a.model.j, a.model.bc, side, &settings);
    let pos = line(Side::PositiveQ)?;
    let neg = line(Side::NegativeQ)?;
    let flagged = |l: &ExceptionalLine, i: usize| l.jumps.iter().any(|j| j.index == i);
    let mut table = Table::new(TRACE_COLUMNS);
    for (i, (p, n)) in pos.points.iter().zip(&neg.points).enumerate() {
        table.push(vec![
            Cell::Num(p.delta),
            p.q_crit.finite().into(),
            n.q_crit.finite().into(),
            Cell::Int(i64::from(flagged(&pos, i) || flagged(&neg, i))),
        ]);
    }
    let summary = format!(
        "{} points, {} jump(s) on the positive side, {} on the negative side",
        grid.len(),
        pos.jumps.len(),
        neg.jumps.len()
    );
    Ok((table, summary))
}

/// `(delta, q_crit)` pairs of one side of a trace CSV, skipping empty
/// (unbounded) fields.
pub fn read_trace_csv(path: &Path, side: SideArg) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty trace file".into()))?.split(',').collect();
    let column = match side {
        SideArg::Positive => "q_crit_pos",
        SideArg::Negative => "q_crit_neg",
    };
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (di, qi) = (find("delta")?, find(column)?);
    let mut points = Vec::new();
    for (no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(bad(format!("row {} has {} fields", no + 1, fields.len())));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("row {}: bad number `{s}`", no + 1)));
        if fields[qi].trim().is_empty() {
            continue;
        }
        points.push((parse(fields[di])?, parse(fields[qi])?));
    }
    Ok(points)
}

fn fit_row(table: &mut Table, j: u32, bc: BoundaryCondition, f: &FitResult) {
    table.push(vec![
        Cell::Int(i64::from(j)),
        Cell::Text(bc.as_str().to_string()),
        Cell::Num(f.a_coef),
        Cell::Num(f.alpha),
        Cell::Num(f.residual_rms),
        Cell::Num(f.delta_range.0),
        Cell::Num(f.delta_range.1),
    ]);
}

fn fit(a: &FitArgs) -> Result<(Table, String), CliError> {
    let js = parse_js(&a.js)?;
    let range = (a.fit_lo, a.fit_hi);
    let mut table = Table::new(FIT_COLUMNS);
    if let Some(input) = &a.input {
        let [j] = js[..] else {
            return Err(CliError::Config("--input fits one line; give a single j".into()));
        };
        let points = read_trace_csv(input, a.side)?;
        let f = power_law_fit(&points, range)?;
        fit_row(&mut table, j, a.bc, &f);
        return Ok((table, format!("fitted {} points from {}", f.n_points, input.display())));
    }
    let grid = log_grid(a.fit_lo, a.fit_hi, a.points)?;
    let side = match a.side {
        SideArg::Positive => Side::PositiveQ,
        SideArg::Negative => Side::NegativeQ,
    };
    let settings = a.phase.settings(a.k);
    for &j in &js {
        let line = trace_exceptional_line(&grid, j, a.bc, side, &settings)?;
        let f = power_law_fit(&line.finite_points(), range)?;
        fit_row(&mut table, j, a.bc, &f);
    }
    Ok((table, format!("fitted {} line(s) over delta in [{}, {}]", js.len(), range.0, range.1)))
}
