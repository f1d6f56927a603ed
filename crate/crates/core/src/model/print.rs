//! Canonical text form of a model. Reparsing the output yields a
//! structurally equal model.

use std::fmt::Write as _;

use super::RequirementModel;
use crate::ocl::print_expr;

pub fn print_model(model: &RequirementModel) -> String {
    let mut out = String::new();
    for e in &model.enums {
        let _ = writeln!(out, "enum {} {{ {} }}\n", e.name, e.literals.join(", "));
    }
    for e in &model.entities {
        let _ = writeln!(out, "entity {} {{", e.name);
        for a in &e.attributes {
            let _ = writeln!(out, "    {} : {};", a.name, a.ty);
        }
        for a in &e.associations {
            let _ = write!(
                out,
                "    {} : {}[{}]",
                a.name,
                a.target,
                a.multiplicity.symbol()
            );
            if let Some((inv, m)) = &a.inverse {
                let _ = write!(out, " inverse {inv}[{}]", m.symbol());
            }
            out.push_str(";\n");
        }
        out.push_str("}\n\n");
    }
    for a in &model.actors {
        let _ = writeln!(out, "actor {} {{", a.name);
        for u in &a.usecases {
            let _ = writeln!(out, "    usecase {};", u.name);
        }
        out.push_str("}\n\n");
    }
    for s in &model.services {
        let _ = writeln!(out, "service {} {{", s.name);
        for o in &s.operations {
            let _ = writeln!(out, "    {};", o.name);
        }
        out.push_str("}\n\n");
    }
    for c in &model.contracts {
        let inputs: Vec<String> = c
            .inputs
            .iter()
            .map(|p| format!("{} : {}", p.name, p.ty))
            .collect();
        let _ = writeln!(
            out,
            "contract {}::{}({}) : {} {{",
            c.service,
            c.operation,
            inputs.join(", "),
            c.output
        );
        if !c.definitions.is_empty() {
            out.push_str("    definition:\n");
            for d in &c.definitions {
                let _ = write!(out, "        {}", d.name);
                if let Some(t) = &d.declared {
                    let _ = write!(out, " : {t}");
                }
                if let Some(init) = &d.init {
                    let _ = write!(out, " = {}", print_expr(init));
                }
                out.push_str(";\n");
            }
        }
        let _ = writeln!(
            out,
            "    precondition:\n        {}",
            print_expr(&c.precondition)
        );
        let _ = writeln!(
            out,
            "    postcondition:\n        {}",
            print_expr(&c.postcondition)
        );
        out.push_str("}\n\n");
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn roundtrip_small_model() {
        let src = "
            enum St { A, B }
            entity P { N : Integer; S : St; Qs : Q[*] inverse TheP[1]; }
            entity Q { D : Date; }
            actor Clerk { usecase op; }
            service Svc { op; }
            contract Svc::op(n : Integer) : Boolean {
              definition: p = P.allInstances()->any(x | x.N = n); fresh : Q;
              precondition: p.oclIsUndefined() = false and p.S <> St::B
              postcondition: let q : Q in q.oclIsNew() and p.Qs->includes(q) and p.N = p.N@pre + 1
            }";
        let m = parse_model(src, "a.rm").unwrap();
        let text = print_model(&m);
        let again = parse_model(&text, "b.rm").unwrap();
        assert_eq!(m.normalized(), again.normalized(), "{text}");
        assert_eq!(print_model(&again), text);
    }
}
