//! Text formats for networks (`.bnet`) and evidence (`.bev`).
//!
//! Both are line oriented; `#` starts a comment and tokens are separated by
//! whitespace.
//!
//! ```text
//! network <name>
//! variable <name> <k> <state_0> ... <state_{k-1}>
//! parents <child> [<parent> ...]
//! cpt <child> <p_0> <p_1> ...
//! ```
//!
//! CPT values run over parent configurations row-major in declared parent
//! order, child states fastest. Evidence lines:
//!
//! ```text
//! observe <variable> <state>
//! likelihood <variable> <l_0> ... <l_{k-1}>
//! likelihood-joint <v1> ... <vm> : <values, row-major over v1..vm>
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::error::Result;
use crate::network::{table_from_declared, table_to_declared, BeliefNetwork, Cpt, LikelihoodFinding, Variable};
use crate::tables::{Table, VarId};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(ParseError { line, message: message.into() }.into())
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn numbers(line: usize, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter()
        .map(|t| match t.parse::<f64>() {
            Ok(x) => Ok(x),
            Err(_) => err(line, format!("`{t}` is not a number")),
        })
        .collect()
}

pub fn parse_network(text: &str) -> Result<BeliefNetwork> {
    let mut name: Option<String> = None;
    let mut variables: Vec<Variable> = Vec::new();
    let mut by_name: HashMap<String, VarId> = HashMap::new();
    let mut parents: Vec<Option<(usize, Vec<VarId>)>> = Vec::new();
    let mut values: Vec<Option<(usize, Vec<f64>)>> = Vec::new();
    let lookup = |by_name: &HashMap<String, VarId>, line: usize, n: &str| -> Result<VarId> {
        match by_name.get(n) {
            Some(v) => Ok(*v),
            None => err(line, format!("unknown variable `{n}`")),
        }
    };
    for (line, toks) in lines(text) {
        match toks[0] {
            "network" => {
                if toks.len() != 2 {
                    return err(line, "expected `network <name>`");
                }
                if name.is_some() {
                    return err(line, "duplicate `network` line");
                }
                name = Some(toks[1].to_string());
            }
            "variable" => {
                if toks.len() < 3 {
                    return err(line, "expected `variable <name> <k> <states...>`");
                }
                let k: usize = match toks[2].parse() {
                    Ok(k) => k,
                    Err(_) => return err(line, format!("`{}` is not a state count", toks[2])),
                };
                let states: Vec<String> = toks[3..].iter().map(|s| s.to_string()).collect();
                if states.len() != k {
                    return err(line, format!("variable `{}` declares {k} states but lists {}", toks[1], states.len()));
                }
                if by_name.contains_key(toks[1]) {
                    return err(line, format!("duplicate variable `{}`", toks[1]));
                }
                let id = VarId(variables.len());
                by_name.insert(toks[1].to_string(), id);
                variables.push(Variable { id, name: toks[1].to_string(), states });
                parents.push(None);
                values.push(None);
            }
            "parents" => {
                if toks.len() < 2 {
                    return err(line, "expected `parents <child> [<parent>...]`");
                }
                let child = lookup(&by_name, line, toks[1])?;
                let ps = toks[2..].iter().map(|p| lookup(&by_name, line, p)).collect::<Result<Vec<_>>>()?;
                if parents[child.0].is_some() {
                    return err(line, format!("duplicate `parents` line for `{}`", toks[1]));
                }
                parents[child.0] = Some((line, ps));
            }
            "cpt" => {
                if toks.len() < 2 {
                    return err(line, "expected `cpt <child> <values...>`");
                }
                let child = lookup(&by_name, line, toks[1])?;
                if values[child.0].is_some() {
                    return err(line, format!("duplicate `cpt` line for `{}`", toks[1]));
                }
                values[child.0] = Some((line, numbers(line, &toks[2..])?));
            }
            other => return err(line, format!("unknown directive `{other}`")),
        }
    }
    let Some(name) = name else {
        return err(1, "missing `network` line");
    };
    let mut cpts = Vec::with_capacity(variables.len());
    for v in &variables {
        let (pline, ps) = parents[v.id.0].clone().unwrap_or((0, Vec::new()));
        let Some((line, vals)) = values[v.id.0].clone() else {
            return err(pline.max(1), format!("variable `{}` has no `cpt` line", v.name));
        };
        let family: Vec<(VarId, usize)> = ps.iter().map(|p| (*p, variables[p.0].card())).collect();
        match Cpt::from_declared((v.id, v.card()), &family, &vals) {
            Ok(c) => cpts.push(c),
            Err(e) => return err(line, e.to_string()),
        }
    }
    BeliefNetwork::new(name, variables, cpts)
}

pub fn parse_evidence(text: &str, net: &BeliefNetwork) -> Result<Vec<LikelihoodFinding>> {
    let mut out = Vec::new();
    let var = |line: usize, n: &str| -> Result<VarId> {
        match net.find(n) {
            Ok(v) => Ok(v),
            Err(_) => err(line, format!("unknown variable `{n}`")),
        }
    };
    for (line, toks) in lines(text) {
        let table = match toks[0] {
            "observe" => {
                if toks.len() != 3 {
                    return err(line, "expected `observe <variable> <state>`");
                }
                let v = var(line, toks[1])?;
                let Some(s) = net.variable(v).state_index(toks[2]) else {
                    return err(line, format!("variable `{}` has no state `{}`", toks[1], toks[2]));
                };
                Table::indicator(v, net.card(v), s).expect("state in range")
            }
            "likelihood" => {
                if toks.len() < 2 {
                    return err(line, "expected `likelihood <variable> <values...>`");
                }
                let v = var(line, toks[1])?;
                let vals = numbers(line, &toks[2..])?;
                match Table::new(net.scope_of(&[v]), vals) {
                    Ok(t) => t,
                    Err(e) => return err(line, e.to_string()),
                }
            }
            "likelihood-joint" => {
                let Some(colon) = toks.iter().position(|t| *t == ":") else {
                    return err(line, "expected `likelihood-joint <vars...> : <values...>`");
                };
                let vars = toks[1..colon].iter().map(|n| var(line, n)).collect::<Result<Vec<_>>>()?;
                if vars.is_empty() {
                    return err(line, "likelihood-joint needs at least one variable");
                }
                let order: Vec<(VarId, usize)> = vars.iter().map(|v| (*v, net.card(*v))).collect();
                let vals = numbers(line, &toks[colon + 1..])?;
                match table_from_declared(&order, &vals) {
                    Ok(t) => t,
                    Err(e) => return err(line, e.to_string()),
                }
            }
            other => return err(line, format!("unknown directive `{other}`")),
        };
        match LikelihoodFinding::new(table) {
            Ok(f) => out.push(f),
            Err(e) => return err(line, e.to_string()),
        }
    }
    Ok(out)
}

fn join(xs: impl IntoIterator<Item = String>) -> String {
    xs.into_iter().collect::<Vec<_>>().join(" ")
}

/// Writes a network; values use the shortest decimal form that reads back
/// to the same `f64`.
pub fn write_network(net: &BeliefNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "network {}", net.name()).unwrap();
    for v in net.variables() {
        writeln!(out, "variable {} {} {}", v.name, v.card(), v.states.join(" ")).unwrap();
    }
    for cpt in net.cpts() {
        let name = &net.variable(cpt.child).name;
        let ps = join(cpt.parents.iter().map(|p| net.variable(*p).name.clone()));
        writeln!(out, "parents {name} {ps}").unwrap();
        writeln!(out, "cpt {name} {}", join(cpt.declared_values().iter().map(|x| x.to_string()))).unwrap();
    }
    out
}

/// Writes findings: indicators as `observe`, single-variable tables as
/// `likelihood`, the rest as `likelihood-joint` over ascending ids.
pub fn write_evidence(net: &BeliefNetwork, findings: &[LikelihoodFinding]) -> String {
    let mut out = String::new();
    for f in findings {
        let vars = f.scope().vars();
        let vals = f.table.values();
        if vars.len() == 1 {
            let v = net.variable(vars[0]);
            let ones: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] == 1.0).collect();
            if ones.len() == 1 && vals.iter().filter(|x| **x == 0.0).count() == vals.len() - 1 {
                writeln!(out, "observe {} {}", v.name, v.states[ones[0]]).unwrap();
            } else {
                writeln!(out, "likelihood {} {}", v.name, join(vals.iter().map(|x| x.to_string()))).unwrap();
            }
        } else {
            let names = join(vars.iter().map(|v| net.variable(*v).name.clone()));
            let vals = table_to_declared(&f.table, vars);
            writeln!(out, "likelihood-joint {names} : {}", join(vals.iter().map(|x| x.to_string()))).unwrap();
        }
    }
    out
}
