use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use stokes_summa::pde::{classify, exact_sum};
use stokes_summa::stokes::{jump_sample, lateral_sum, singular_directions, stokes_line, LineOrigin};
use stokes_summa::verify::run_suites;
use stokes_summa::{CoverPoint, Direction, JumpReport, Result, StokesLine};

use crate::config::{Command, Resolved};
use crate::output::{Cell, Table};

/// The result of one command, as JSON and as a table.
pub struct Outcome {
    pub result: Value,
    pub table: Table,
    /// Number of failed checks (`verify` only).
    pub failures: usize,
}

fn pair(c: Complex64) -> Value {
    json!([c.re, c.im])
}

fn line_json(line: &StokesLine) -> Value {
    let [lo, hi] = line.anti_stokes();
    let case = match line.origin {
        LineOrigin::Case1 { .. } => "case1",
        LineOrigin::Case2 { .. } => "case2",
    };
    json!({
        "index": line.index(),
        "origin": case,
        "direction": line.direction,
        "anti_stokes": [lo, hi],
        "k": line.k_sum,
    })
}

fn grid_points(cfg: &Resolved) -> Vec<CoverPoint> {
    let grid = cfg.t_grid.expect("resolved grid");
    let arg = grid.arg.unwrap_or(0.0);
    grid.moduli().into_iter().map(|m| CoverPoint::on_ray(m, arg)).collect()
}

pub fn run(cfg: &Resolved) -> anyhow::Result<Outcome> {
    match cfg.command {
        Command::Classify => classify_cmd(cfg),
        Command::Stokes => stokes_cmd(cfg),
        Command::Sum => sum_cmd(cfg),
        Command::Jump => jump_cmd(cfg),
        Command::Verify => verify_cmd(cfg),
    }
}

fn classify_cmd(cfg: &Resolved) -> anyhow::Result<Outcome> {
    let regime = classify(&cfg.problem);
    let lines = singular_directions(&cfg.problem, cfg.z)?;
    let dirs: Vec<f64> = lines.iter().map(|l| l.direction).collect();
    let result = json!({
        "regime": regime.tag.as_str(),
        "k": regime.k,
        "stokes": dirs,
        "gevrey_order": regime.gevrey_order(),
    });
    let table = Table {
        columns: vec!["regime", "k", "stokes_index", "direction"],
        rows: lines
            .iter()
            .map(|l| {
                vec![
                    Cell::Text(regime.tag.as_str().into()),
                    regime.k.map_or(Cell::Empty, Cell::Float),
                    Cell::Int(l.index()),
                    Cell::Float(l.direction),
                ]
            })
            .collect(),
    };
    Ok(Outcome {
        result,
        table,
        failures: 0,
    })
}

fn stokes_cmd(cfg: &Resolved) -> anyhow::Result<Outcome> {
    let lines = singular_directions(&cfg.problem, cfg.z)?;
    let result = json!({ "lines": lines.iter().map(line_json).collect::<Vec<_>>() });
    let table = Table {
        columns: vec!["index", "direction", "anti_stokes_lo", "anti_stokes_hi", "k"],
        rows: lines
            .iter()
            .map(|l| {
                let [lo, hi] = l.anti_stokes();
                vec![
                    Cell::Int(l.index()),
                    Cell::Float(l.direction),
                    Cell::Float(lo),
                    Cell::Float(hi),
                    Cell::Float(l.k_sum),
                ]
            })
            .collect(),
    };
    Ok(Outcome {
        result,
        table,
        failures: 0,
    })
}

fn sum_cmd(cfg: &Resolved) -> anyhow::Result<Outcome> {
    let cp = &cfg.problem;
    let d = cfg.direction.expect("resolved direction");
    let summable = classify(cp).tag.is_summable();
    let points = grid_points(cfg);
    let values: Vec<Result<(Complex64, f64)>> = points
        .par_iter()
        .map(|&t| {
            if summable {
                lateral_sum(cp, Direction(d), t, cfg.z, &cfg.quadrature).map(|e| (e.value, e.error))
            } else {
                exact_sum(cp, t.to_complex(), cfg.z).map(|v| (v, 0.0))
            }
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let method = if summable { "laplace" } else { "closed_form" };
    let samples: Vec<Value> = points
        .iter()
        .zip(&values)
        .map(|(t, (v, err))| {
            json!({
                "t": pair(t.to_complex()),
                "value": pair(*v),
                "error": err,
            })
        })
        .collect();
    let result = json!({ "direction": d, "method": method, "samples": samples });
    let table = Table {
        columns: vec!["t_re", "t_im", "u_re", "u_im", "error"],
        rows: points
            .iter()
            .zip(&values)
            .map(|(t, (v, err))| {
                let tc = t.to_complex();
                vec![
                    Cell::Float(tc.re),
                    Cell::Float(tc.im),
                    Cell::Float(v.re),
                    Cell::Float(v.im),
                    Cell::Float(*err),
                ]
            })
            .collect(),
    };
    Ok(Outcome {
        result,
        table,
        failures: 0,
    })
}

fn jump_cmd(cfg: &Resolved) -> anyhow::Result<Outcome> {
    let cp = &cfg.problem;
    let index = cfg.line.expect("resolved line");
    let line = stokes_line(cp, index, cfg.z)?;
    let points = grid_points(cfg);
    let samples: Vec<_> = points
        .par_iter()
        .map(|&t| jump_sample(cp, index, t, cfg.z, cfg.eps, &cfg.quadrature))
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let report = JumpReport::assemble(cp, line, cfg.z, samples);
    let result = json!({
        "line": line_json(&report.line),
        "eps": cfg.eps,
        "samples": report.samples.iter().map(|s| json!({
            "t": pair(s.t.to_complex()),
            "closed": s.closed.map(pair),
            "pairing": pair(s.pairing),
            "lateral": pair(s.lateral),
            "max_rel_disagreement": s.max_rel_disagreement(),
        })).collect::<Vec<_>>(),
        "max_rel_disagreement": report.max_rel_disagreement,
        "warning": report.warning,
    });
    let complex_cells = |c: Option<Complex64>| match c {
        Some(c) => [Cell::Float(c.re), Cell::Float(c.im)],
        None => [Cell::Empty, Cell::Empty],
    };
    let table = Table {
        columns: vec![
            "t_re",
            "t_im",
            "closed_re",
            "closed_im",
            "pairing_re",
            "pairing_im",
            "lateral_re",
            "lateral_im",
            "max_rel_disagreement",
        ],
        rows: report
            .samples
            .iter()
            .map(|s| {
                let tc = s.t.to_complex();
                let mut row = vec![Cell::Float(tc.re), Cell::Float(tc.im)];
                row.extend(complex_cells(s.closed));
                row.extend(complex_cells(Some(s.pairing)));
                row.extend(complex_cells(Some(s.lateral)));
                row.push(Cell::Float(s.max_rel_disagreement()));
                row
            })
            .collect(),
    };
    Ok(Outcome {
        result,
        table,
        failures: 0,
    })
}

fn verify_cmd(cfg: &Resolved) -> anyhow::Result<Outcome> {
    let checks = run_suites(&cfg.problem, cfg.z, &cfg.quadrature);
    let failures = checks.iter().filter(|c| !c.passed).count();
    let result = json!({
        "passed": failures == 0,
        "failures": failures,
        "checks": checks,
    });
    let table = Table {
        columns: vec!["suite", "check", "deviation", "tolerance", "passed", "note"],
        rows: checks
            .iter()
            .map(|c| {
                vec![
                    Cell::Text(c.suite.into()),
                    Cell::Text(c.check.clone()),
                    Cell::Float(c.deviation),
                    Cell::Float(c.tolerance),
                    Cell::Text(c.passed.to_string()),
                    c.note.clone().map_or(Cell::Empty, Cell::Text),
                ]
            })
            .collect(),
    };
    Ok(Outcome {
        result,
        table,
        failures,
    })
}
