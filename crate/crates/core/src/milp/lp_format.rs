use std::fmt::Write;

use super::{ConstraintSense, MilpModel, VarId, VarKind};

fn term_list(out: &mut String, model: &MilpModel, terms: &[(VarId, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        let name = &model.variables[v.0].name;
        let _ = match (c < 0.0, k > 0) {
            (true, _) => write!(out, " - {} {name}", -c),
            (false, true) => write!(out, " + {c} {name}"),
            (false, false) => write!(out, " {c} {name}"),
        };
    }
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

pub(super) fn write_lp(model: &MilpModel) -> String {
    let mut out = String::from("Minimize\n obj:");
    term_list(&mut out, model, &model.objective);
    if model.objective_offset != 0.0 {
        let _ = write!(out, " + {}", model.objective_offset);
    }
    out.push_str("\nSubject To\n");
    for con in &model.constraints {
        let _ = write!(out, " {}:", con.name);
        term_list(&mut out, model, &con.terms);
        let op = match con.sense {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "=",
            ConstraintSense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", con.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        let _ = writeln!(out, " {} <= {} <= {}", bound(v.lower), v.name, bound(v.upper));
    }
    let ints: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| matches!(v.kind, VarKind::Binary | VarKind::Integer))
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
