//! JSON dump of a compiled pCFG (documented, stable key order).

use super::model::*;
use crate::num::rat_display;
use crate::syntax::printer;
use crate::syntax::Program;
use serde::Serialize;

#[derive(Serialize)]
pub struct PcfgDump {
    pub schema: u32,
    pub variables: Vec<String>,
    pub init_location: u32,
    pub init_valuation: Vec<String>,
    pub exit_location: u32,
    pub locations: Vec<LocDump>,
}

#[derive(Serialize)]
pub struct LocDump {
    pub id: u32,
    pub kind: String,
    pub label: String,
    pub reward: String,
    pub invariant: String,
    pub terminal: String,
    pub edges: Vec<EdgeDump>,
}

#[derive(Serialize)]
pub struct EdgeDump {
    pub target: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub update: Option<String>,
}

pub fn dump(c: &Compiled, prog: &Program) -> PcfgDump {
    let pcfg = &c.pcfg;
    let locations = pcfg
        .loc_ids()
        .map(|l| {
            let loc = pcfg.loc(l);
            let (kind, edges) = match &loc.kind {
                LocKind::Det { edges } => (
                    "deterministic",
                    edges
                        .iter()
                        .map(|(g, t)| EdgeDump {
                            target: t.0,
                            guard: Some(printer::pred_to_string(prog, g)),
                            probability: None,
                            update: None,
                        })
                        .collect(),
                ),
                LocKind::Prob { edges } => (
                    "probabilistic",
                    edges
                        .iter()
                        .map(|(p, t)| EdgeDump {
                            target: t.0,
                            guard: None,
                            probability: Some(rat_display(p)),
                            update: None,
                        })
                        .collect(),
                ),
                LocKind::Nondet { succs } => (
                    "nondeterministic",
                    succs
                        .iter()
                        .map(|t| EdgeDump {
                            target: t.0,
                            guard: None,
                            probability: None,
                            update: None,
                        })
                        .collect(),
                ),
                LocKind::Assign { var, update, succ } => {
                    let upd = match update {
                        Update::Expr(e) => format!(
                            "{} := {}",
                            prog.var_name(*var),
                            printer::poly_to_string(prog, e)
                        ),
                        Update::Sample(d) => {
                            format!("{} := {:?}", prog.var_name(*var), d)
                        }
                        Update::Choose(p) => format!(
                            "{} := ndet({})",
                            prog.var_name(*var),
                            printer::pred_to_string(prog, p)
                        ),
                    };
                    (
                        "assignment",
                        vec![EdgeDump {
                            target: succ.0,
                            guard: None,
                            probability: None,
                            update: Some(upd),
                        }],
                    )
                }
            };
            LocDump {
                id: l.0,
                kind: kind.to_string(),
                label: loc.label.clone(),
                reward: rat_display(&loc.reward),
                invariant: printer::pred_to_string(prog, c.invariants.at(l)),
                terminal: printer::pred_to_string(prog, c.terminals.at(l)),
                edges,
            }
        })
        .collect();
    PcfgDump {
        schema: 1,
        variables: pcfg.var_names.clone(),
        init_location: pcfg.init_loc.0,
        init_valuation: pcfg.init_vals.iter().map(rat_display).collect(),
        exit_location: pcfg.exit_loc.0,
        locations,
    }
}
