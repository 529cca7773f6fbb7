//! CPLEX LP text export of a [`ModelHandle`].

use super::{ModelHandle, ObjSense, RowSense, VarKind};
use std::fmt::Write;

fn var_name(model: &ModelHandle, i: usize) -> String {
    match &model.vars()[i].name {
        Some(n) => n.clone(),
        None => format!("x{i}"),
    }
}

fn write_terms(out: &mut String, model: &ModelHandle, terms: &[(super::VarId, f64)]) {
    if terms.is_empty() {
        out.push_str("0 x0");
        return;
    }
    for (k, (v, c)) in terms.iter().enumerate() {
        if k == 0 {
            let _ = write!(out, "{} {}", c, var_name(model, v.0));
        } else if *c >= 0.0 {
            let _ = write!(out, " + {} {}", c, var_name(model, v.0));
        } else {
            let _ = write!(out, " - {} {}", -c, var_name(model, v.0));
        }
    }
}

pub(super) fn write_lp(model: &ModelHandle) -> String {
    let mut out = String::new();
    out.push_str(match model.obj_sense {
        Some(ObjSense::Maximize) => "Maximize\n obj: ",
        _ => "Minimize\n obj: ",
    });
    let obj_terms: Vec<(super::VarId, f64)> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.obj != 0.0)
        .map(|(i, v)| (super::VarId(i), v.obj))
        .collect();
    write_terms(&mut out, model, &obj_terms);
    out.push_str("\nSubject To\n");
    for (i, row) in model.rows().iter().enumerate() {
        let _ = write!(out, " c{i}: ");
        write_terms(&mut out, model, &row.coeffs);
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for (i, v) in model.vars().iter().enumerate() {
        let name = var_name(model, i);
        match (v.lb.is_finite(), v.ub.is_finite()) {
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", v.lb, v.ub);
            }
            (true, false) => {
                let _ = writeln!(out, " {} <= {name}", v.lb);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", v.ub);
            }
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
        }
    }
    let binaries: Vec<String> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| var_name(model, i))
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n ");
        out.push_str(&binaries.join(" "));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}
