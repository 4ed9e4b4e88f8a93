//! Control-flow-graph frontend: a small program DSL with threads,
//! procedures, finite-domain variables and channel communication, and
//! its translation into a pushdown network.
//!
//! ```text
//! channel c : 0 1
//! thread main {
//!   var x : 0 1 = 0
//!   entry n0
//!   n0: x := 1 -> n1
//!   n1: spawn worker -> n2
//!   n2: send c x -> n3
//! }
//! thread worker {
//!   var y : 0 1 = 0
//!   entry w0
//!   w0: recv c y -> w1
//! }
//! ```
//!
//! Control states of the network are valuations of the thread-local
//! variables (one shared valuation space; each thread only writes its
//! own). Stack symbols are (node, procedure-local valuation) pairs.
//! Each edge becomes one rule bundle, one rule per reachable valuation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Action, Configuration, Rhs, Rule, Sdpn, Thread};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Lit(String),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Assign { var: String, expr: Expr },
    Call(String),
    Return(Option<Expr>),
    Spawn(String),
    Send { chan: String, expr: Option<Expr> },
    Recv { chan: String, var: Option<String> },
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: String,
    pub stmt: Stmt,
    pub to: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub values: Vec<String>,
    pub init: String,
}

#[derive(Debug, Clone)]
pub struct Graph {
    pub name: String,
    pub is_thread: bool,
    pub returns: Option<Vec<String>>,
    pub vars: Vec<VarDecl>,
    pub entry: String,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Default)]
pub struct ProgramAst {
    pub channels: Vec<(String, Vec<String>)>,
    pub graphs: Vec<Graph>,
}

impl ProgramAst {
    pub fn graph(&self, name: &str) -> Option<&Graph> {
        self.graphs.iter().find(|g| g.name == name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undeclared {what} `{name}`")]
    Undeclared {
        line: usize,
        what: &'static str,
        name: String,
    },
    #[error("line {line}: value `{value}` is outside the domain of `{var}`")]
    OutOfDomain {
        line: usize,
        var: String,
        value: String,
    },
    #[error("program needs a thread named `main`")]
    NoMain,
    #[error("state space too large: {size} control states exceed the cap of {cap}")]
    StateSpaceCap { size: usize, cap: usize },
}

fn syntax(line: usize, msg: impl Into<String>) -> TranslateError {
    TranslateError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses the program DSL.
pub fn parse_cfgp(text: &str) -> Result<ProgramAst, TranslateError> {
    let mut ast = ProgramAst::default();
    let mut current: Option<Graph> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        match toks[0] {
            "channel" => {
                if current.is_some() {
                    return Err(syntax(line, "channel declarations go outside blocks"));
                }
                if toks.len() < 2 {
                    return Err(syntax(line, "expected `channel NAME [: v1 v2 ...]`"));
                }
                let name = toks[1].to_string();
                let values = if toks.len() > 2 {
                    if toks[2] != ":" {
                        return Err(syntax(line, "expected `:` before channel values"));
                    }
                    toks[3..].iter().map(|s| s.to_string()).collect()
                } else {
                    Vec::new()
                };
                ast.channels.push((name, values));
            }
            "thread" | "proc" => {
                if current.is_some() {
                    return Err(syntax(line, "blocks do not nest"));
                }
                if toks.len() < 3 || *toks.last().unwrap() != "{" {
                    return Err(syntax(line, "expected `thread NAME {` or `proc NAME [returns v...] {`"));
                }
                let is_thread = toks[0] == "thread";
                let returns = if !is_thread && toks.len() > 3 {
                    if toks[2] != "returns" {
                        return Err(syntax(line, "expected `returns` or `{`"));
                    }
                    Some(toks[3..toks.len() - 1].iter().map(|s| s.to_string()).collect())
                } else {
                    None
                };
                current = Some(Graph {
                    name: toks[1].to_string(),
                    is_thread,
                    returns,
                    vars: Vec::new(),
                    entry: String::new(),
                    edges: Vec::new(),
                });
            }
            "}" => {
                let g = current.take().ok_or_else(|| syntax(line, "unmatched `}`"))?;
                if g.entry.is_empty() {
                    return Err(syntax(line, format!("block `{}` lacks an entry node", g.name)));
                }
                ast.graphs.push(g);
            }
            "var" => {
                let g = current
                    .as_mut()
                    .ok_or_else(|| syntax(line, "`var` goes inside a block"))?;
                // var NAME : v1 v2 ... = INIT
                let eq = toks
                    .iter()
                    .position(|t| *t == "=")
                    .ok_or_else(|| syntax(line, "expected `= INIT`"))?;
                if toks.len() < 5 || toks[2] != ":" || eq + 2 != toks.len() {
                    return Err(syntax(line, "expected `var NAME : v1 v2 ... = INIT`"));
                }
                let values: Vec<String> = toks[3..eq].iter().map(|s| s.to_string()).collect();
                let init = toks[eq + 1].to_string();
                if values.is_empty() {
                    return Err(syntax(line, "variable domain must be nonempty"));
                }
                if !values.contains(&init) {
                    return Err(TranslateError::OutOfDomain {
                        line,
                        var: toks[1].to_string(),
                        value: init,
                    });
                }
                g.vars.push(VarDecl {
                    name: toks[1].to_string(),
                    values,
                    init,
                });
            }
            "entry" => {
                let g = current
                    .as_mut()
                    .ok_or_else(|| syntax(line, "`entry` goes inside a block"))?;
                if toks.len() != 2 {
                    return Err(syntax(line, "expected `entry NODE`"));
                }
                g.entry = toks[1].to_string();
            }
            _ => {
                let g = current
                    .as_mut()
                    .ok_or_else(|| syntax(line, "edges go inside a block"))?;
                let from = toks[0]
                    .strip_suffix(':')
                    .ok_or_else(|| syntax(line, "expected `NODE: STMT [-> NODE]`"))?
                    .to_string();
                let (stmt_toks, to) = match toks.iter().position(|t| *t == "->") {
                    Some(k) => {
                        if k + 2 != toks.len() {
                            return Err(syntax(line, "expected one target node after `->`"));
                        }
                        (&toks[1..k], Some(toks[k + 1].to_string()))
                    }
                    None => (&toks[1..], None),
                };
                let stmt = parse_stmt(stmt_toks, line)?;
                if to.is_none() && !matches!(stmt, Stmt::Return(_)) {
                    return Err(syntax(line, "only `return` edges omit the target node"));
                }
                if to.is_some() && matches!(stmt, Stmt::Return(_)) {
                    return Err(syntax(line, "`return` edges have no target node"));
                }
                g.edges.push(Edge {
                    from,
                    stmt,
                    to,
                    line,
                });
            }
        }
    }
    if current.is_some() {
        return Err(syntax(text.lines().count(), "unterminated block"));
    }
    Ok(ast)
}

fn parse_expr(tok: &str) -> Expr {
    // Variables and literals share a namespace; resolution happens at
    // translation time, where declared variables win.
    Expr::Var(tok.to_string())
}

fn parse_stmt(toks: &[&str], line: usize) -> Result<Stmt, TranslateError> {
    match toks {
        ["skip"] => Ok(Stmt::Skip),
        [var, ":=", expr] => Ok(Stmt::Assign {
            var: var.to_string(),
            expr: parse_expr(expr),
        }),
        ["call", p] => Ok(Stmt::Call(p.to_string())),
        ["spawn", t] => Ok(Stmt::Spawn(t.to_string())),
        ["return"] => Ok(Stmt::Return(None)),
        ["return", e] => Ok(Stmt::Return(Some(parse_expr(e)))),
        ["send", c] => Ok(Stmt::Send {
            chan: c.to_string(),
            expr: None,
        }),
        ["send", c, e] => Ok(Stmt::Send {
            chan: c.to_string(),
            expr: Some(parse_expr(e)),
        }),
        ["recv", c] => Ok(Stmt::Recv {
            chan: c.to_string(),
            var: None,
        }),
        ["recv", c, v] => Ok(Stmt::Recv {
            chan: c.to_string(),
            var: Some(v.to_string()),
        }),
        _ => Err(syntax(line, format!("cannot parse statement `{}`", toks.join(" ")))),
    }
}

/// A valuation is a fixed-order assignment of value indexes.
type Valuation = Vec<usize>;

struct VarSpace {
    /// (owner graph or synthesized marker, name, domain)
    vars: Vec<(String, Vec<String>)>,
}

impl VarSpace {
    fn index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(n, _)| n == name)
    }

    fn enumerate(&self) -> Vec<Valuation> {
        let mut out: Vec<Valuation> = vec![Vec::new()];
        for (_, dom) in &self.vars {
            let mut next = Vec::new();
            for v in &out {
                for i in 0..dom.len() {
                    let mut v2 = v.clone();
                    v2.push(i);
                    next.push(v2);
                }
            }
            out = next;
        }
        out
    }

    fn display(&self, v: &Valuation) -> String {
        let inner: Vec<String> = self
            .vars
            .iter()
            .zip(v)
            .map(|((n, dom), i)| format!("{}={}", n, dom[*i]))
            .collect();
        format!("{{{}}}", inner.join(","))
    }

    fn size(&self) -> usize {
        self.vars.iter().map(|(_, d)| d.len()).product()
    }
}

pub const DEFAULT_STATE_CAP: usize = 20_000;

/// Translates a program into a network plus its starting configuration.
pub fn cfg_to_sdpn(prog: &ProgramAst) -> Result<(Sdpn, Configuration), TranslateError> {
    cfg_to_sdpn_capped(prog, DEFAULT_STATE_CAP)
}

pub fn cfg_to_sdpn_capped(
    prog: &ProgramAst,
    state_cap: usize,
) -> Result<(Sdpn, Configuration), TranslateError> {
    if prog.graph("main").map(|g| g.is_thread) != Some(true) {
        return Err(TranslateError::NoMain);
    }

    // Thread-local space: all thread variables plus one synthesized
    // result variable per returning procedure.
    let mut globals = VarSpace { vars: Vec::new() };
    let mut global_init: Valuation = Vec::new();
    for g in &prog.graphs {
        if g.is_thread {
            for v in &g.vars {
                globals.vars.push((v.name.clone(), v.values.clone()));
                global_init.push(v.values.iter().position(|x| *x == v.init).unwrap());
            }
        }
    }
    for g in &prog.graphs {
        if let Some(rets) = &g.returns {
            globals
                .vars
                .push((format!("{}.ret", g.name), rets.clone()));
            global_init.push(0);
        }
    }
    if globals.size() > state_cap {
        return Err(TranslateError::StateSpaceCap {
            size: globals.size(),
            cap: state_cap,
        });
    }

    let mut m = Sdpn::new();
    let g_vals = globals.enumerate();
    for v in &g_vals {
        m.add_state(&globals.display(v));
    }

    // Per-graph local spaces and stack symbols (node, locals).
    let mut local_spaces: BTreeMap<String, VarSpace> = BTreeMap::new();
    let mut local_inits: BTreeMap<String, Valuation> = BTreeMap::new();
    for g in &prog.graphs {
        let space = VarSpace {
            vars: if g.is_thread {
                Vec::new()
            } else {
                g.vars
                    .iter()
                    .map(|v| (v.name.clone(), v.values.clone()))
                    .collect()
            },
        };
        let init = space
            .vars
            .iter()
            .map(|(n, _)| {
                let decl = g.vars.iter().find(|v| v.name == *n).unwrap();
                decl.values.iter().position(|x| *x == decl.init).unwrap()
            })
            .collect();
        local_spaces.insert(g.name.clone(), space);
        local_inits.insert(g.name.clone(), init);
    }
    let sym_name = |g: &Graph, node: &str, l: &Valuation| -> String {
        let space = &local_spaces[&g.name];
        if space.vars.is_empty() {
            format!("({}.{})", g.name, node)
        } else {
            let inner: Vec<String> = space
                .vars
                .iter()
                .zip(l)
                .map(|((n, dom), i)| format!("{}={}", n, dom[*i]))
                .collect();
            format!("({}.{}|{})", g.name, node, inner.join(","))
        }
    };
    for g in &prog.graphs {
        let space = &local_spaces[&g.name];
        let mut nodes: Vec<&str> = vec![g.entry.as_str()];
        for e in &g.edges {
            if !nodes.contains(&e.from.as_str()) {
                nodes.push(&e.from);
            }
            if let Some(t) = &e.to {
                if !nodes.contains(&t.as_str()) {
                    nodes.push(t);
                }
            }
        }
        for node in nodes {
            for l in space.enumerate() {
                m.add_stack_symbol(&sym_name(g, node, &l));
            }
        }
    }

    let chan_values = |name: &str| -> Option<&[String]> {
        prog.channels
            .iter()
            .find(|(c, _)| c == name)
            .map(|(_, v)| v.as_slice())
    };

    // Reads resolve locals first, then thread-locals, then literals.
    let eval_expr = |e: &Expr,
                     g: &Graph,
                     gv: &Valuation,
                     lv: &Valuation,
                     line: usize|
     -> Result<String, TranslateError> {
        let (Expr::Var(name) | Expr::Lit(name)) = e;
        let space = &local_spaces[&g.name];
        if let Some(i) = space.index(name) {
            return Ok(space.vars[i].1[lv[i]].clone());
        }
        if let Some(i) = globals.index(name) {
            return Ok(globals.vars[i].1[gv[i]].clone());
        }
        let _ = line;
        Ok(name.clone())
    };

    enum Target {
        Global(usize),
        Local(usize),
    }
    let resolve_var = |name: &str, g: &Graph, line: usize| -> Result<Target, TranslateError> {
        let space = &local_spaces[&g.name];
        if let Some(i) = space.index(name) {
            return Ok(Target::Local(i));
        }
        if let Some(i) = globals.index(name) {
            return Ok(Target::Global(i));
        }
        Err(TranslateError::Undeclared {
            line,
            what: "variable",
            name: name.to_string(),
        })
    };
    let assign = |target: &Target,
                  value: &str,
                  g: &Graph,
                  gv: &Valuation,
                  lv: &Valuation,
                  line: usize,
                  var: &str|
     -> Result<(Valuation, Valuation), TranslateError> {
        let mut gv2 = gv.clone();
        let mut lv2 = lv.clone();
        match target {
            Target::Local(i) => {
                let dom = &local_spaces[&g.name].vars[*i].1;
                let k = dom.iter().position(|x| x == value).ok_or_else(|| {
                    TranslateError::OutOfDomain {
                        line,
                        var: var.to_string(),
                        value: value.to_string(),
                    }
                })?;
                lv2[*i] = k;
            }
            Target::Global(i) => {
                let dom = &globals.vars[*i].1;
                let k = dom.iter().position(|x| x == value).ok_or_else(|| {
                    TranslateError::OutOfDomain {
                        line,
                        var: var.to_string(),
                        value: value.to_string(),
                    }
                })?;
                gv2[*i] = k;
            }
        }
        Ok((gv2, lv2))
    };

    let mut rule_idx = 0usize;
    for g in &prog.graphs {
        let space = &local_spaces[&g.name];
        for edge in &g.edges {
            for gv in &g_vals {
                for lv in space.enumerate() {
                    let state = m.state(&globals.display(gv)).unwrap();
                    let symbol = m.stack_symbol(&sym_name(g, &edge.from, &lv)).unwrap();
                    let mut push = |m: &mut Sdpn, action: Action, rhs: Rhs| {
                        rule_idx += 1;
                        m.push_rule(Rule {
                            state,
                            symbol,
                            action,
                            rhs,
                            name: format!("e{}.{}", edge.line, rule_idx),
                            aux: false,
                        });
                    };
                    match &edge.stmt {
                        Stmt::Skip => {
                            let to = m
                                .stack_symbol(&sym_name(g, edge.to.as_ref().unwrap(), &lv))
                                .unwrap();
                            push(&mut m, Action::Tau, Rhs::Simple { state, word: vec![to] });
                        }
                        Stmt::Assign { var, expr } => {
                            let value = eval_expr(expr, g, gv, &lv, edge.line)?;
                            let target = resolve_var(var, g, edge.line)?;
                            let (gv2, lv2) =
                                assign(&target, &value, g, gv, &lv, edge.line, var)?;
                            let st2 = m.state(&globals.display(&gv2)).unwrap();
                            let to = m
                                .stack_symbol(&sym_name(g, edge.to.as_ref().unwrap(), &lv2))
                                .unwrap();
                            push(&mut m, Action::Tau, Rhs::Simple { state: st2, word: vec![to] });
                        }
                        Stmt::Call(proc) => {
                            let callee = prog.graph(proc).ok_or(TranslateError::Undeclared {
                                line: edge.line,
                                what: "procedure",
                                name: proc.clone(),
                            })?;
                            let frame = m
                                .stack_symbol(&sym_name(
                                    callee,
                                    &callee.entry,
                                    &local_inits[&callee.name],
                                ))
                                .unwrap();
                            let ret_site = m
                                .stack_symbol(&sym_name(g, edge.to.as_ref().unwrap(), &lv))
                                .unwrap();
                            push(
                                &mut m,
                                Action::Tau,
                                Rhs::Simple {
                                    state,
                                    word: vec![frame, ret_site],
                                },
                            );
                        }
                        Stmt::Return(expr) => {
                            let gv2 = match expr {
                                None => gv.clone(),
                                Some(e) => {
                                    let value = eval_expr(e, g, gv, &lv, edge.line)?;
                                    let ret = format!("{}.ret", g.name);
                                    let target = resolve_var(&ret, g, edge.line)?;
                                    assign(&target, &value, g, gv, &lv, edge.line, &ret)?.0
                                }
                            };
                            let st2 = m.state(&globals.display(&gv2)).unwrap();
                            push(&mut m, Action::Tau, Rhs::Simple { state: st2, word: vec![] });
                        }
                        Stmt::Spawn(thread) => {
                            let spawned = prog.graph(thread).ok_or(TranslateError::Undeclared {
                                line: edge.line,
                                what: "thread",
                                name: thread.clone(),
                            })?;
                            let spawned_sym = m
                                .stack_symbol(&sym_name(
                                    spawned,
                                    &spawned.entry,
                                    &local_inits[&spawned.name],
                                ))
                                .unwrap();
                            let spawned_state = m.state(&globals.display(&global_init)).unwrap();
                            let to = m
                                .stack_symbol(&sym_name(g, edge.to.as_ref().unwrap(), &lv))
                                .unwrap();
                            push(
                                &mut m,
                                Action::Tau,
                                Rhs::Spawn {
                                    spawned_state,
                                    spawned_word: vec![spawned_sym],
                                    state,
                                    word: vec![to],
                                },
                            );
                        }
                        Stmt::Send { chan, expr } => {
                            let values = chan_values(chan).ok_or(TranslateError::Undeclared {
                                line: edge.line,
                                what: "channel",
                                name: chan.clone(),
                            })?;
                            let sig = match expr {
                                None => {
                                    if !values.is_empty() {
                                        return Err(syntax(
                                            edge.line,
                                            format!("channel `{}` carries a value", chan),
                                        ));
                                    }
                                    m.add_signal(chan)
                                }
                                Some(e) => {
                                    let value = eval_expr(e, g, gv, &lv, edge.line)?;
                                    if !values.contains(&value) {
                                        return Err(TranslateError::OutOfDomain {
                                            line: edge.line,
                                            var: chan.clone(),
                                            value,
                                        });
                                    }
                                    m.add_signal(&format!("{}:{}", chan, value))
                                }
                            };
                            let to = m
                                .stack_symbol(&sym_name(g, edge.to.as_ref().unwrap(), &lv))
                                .unwrap();
                            push(&mut m, Action::send(sig), Rhs::Simple { state, word: vec![to] });
                        }
                        Stmt::Recv { chan, var } => {
                            let values = chan_values(chan).ok_or(TranslateError::Undeclared {
                                line: edge.line,
                                what: "channel",
                                name: chan.clone(),
                            })?;
                            match var {
                                None => {
                                    if !values.is_empty() {
                                        return Err(syntax(
                                            edge.line,
                                            format!("channel `{}` carries a value", chan),
                                        ));
                                    }
                                    let sig = m.add_signal(chan);
                                    let to = m
                                        .stack_symbol(&sym_name(g, edge.to.as_ref().unwrap(), &lv))
                                        .unwrap();
                                    push(
                                        &mut m,
                                        Action::receive(sig),
                                        Rhs::Simple { state, word: vec![to] },
                                    );
                                }
                                Some(v) => {
                                    let target = resolve_var(v, g, edge.line)?;
                                    for value in values {
                                        let (gv2, lv2) =
                                            assign(&target, value, g, gv, &lv, edge.line, v)?;
                                        let sig = m.add_signal(&format!("{}:{}", chan, value));
                                        let st2 = m.state(&globals.display(&gv2)).unwrap();
                                        let to = m
                                            .stack_symbol(&sym_name(
                                                g,
                                                edge.to.as_ref().unwrap(),
                                                &lv2,
                                            ))
                                            .unwrap();
                                        push(
                                            &mut m,
                                            Action::receive(sig),
                                            Rhs::Simple {
                                                state: st2,
                                                word: vec![to],
                                            },
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let main = prog.graph("main").unwrap();
    let init = Configuration::new(vec![Thread {
        state: m.state(&globals.display(&global_init)).unwrap(),
        stack: vec![m
            .stack_symbol(&sym_name(main, &main.entry, &local_inits["main"]))
            .unwrap()],
    }]);
    Ok((m, init))
}
