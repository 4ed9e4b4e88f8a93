//! The configuration-pattern language. A pattern is a sequence of
//! thread items; each item either matches any run of threads (`ANY*`)
//! or one thread whose state lies in a given set and whose stack
//! matches a small regular expression over stack symbols:
//!
//! ```text
//! ANY* p3 R ANY* p4 A .* ANY*
//! p1 g1+ p2 g2 g3
//! {p1 p2} g1* .
//! EPS                            # exactly the empty configuration
//! ```

use std::collections::BTreeSet;

use super::{ParseError, Tok};
use crate::model::{Configuration, Sdpn, StackId, StateId, Thread};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StackAtom {
    /// A literal symbol, one occurrence.
    Lit(StackId),
    /// One or more occurrences of a literal.
    Plus(StackId),
    /// Zero or more occurrences of a literal.
    Star(StackId),
    /// Any single symbol.
    Any,
    /// Any word, including the empty one.
    AnyStar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternItem {
    /// Matches any sequence of threads, including none.
    AnyThreads,
    /// Matches a single thread.
    Thread {
        states: BTreeSet<StateId>,
        stack: Vec<StackAtom>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigPattern {
    pub items: Vec<PatternItem>,
    /// Original surface text, kept for reports.
    pub text: String,
}

impl ConfigPattern {
    /// Direct matching, by backtracking over items and stack atoms.
    /// Used as an independent check against the automaton route.
    pub fn matches(&self, c: &Configuration) -> bool {
        match_items(&self.items, &c.threads)
    }
}

fn match_items(items: &[PatternItem], threads: &[Thread]) -> bool {
    match items.first() {
        None => threads.is_empty(),
        Some(PatternItem::AnyThreads) => (0..=threads.len())
            .any(|k| match_items(&items[1..], &threads[k..])),
        Some(PatternItem::Thread { states, stack }) => match threads.first() {
            None => false,
            Some(t) => {
                states.contains(&t.state)
                    && match_stack(stack, &t.stack)
                    && match_items(&items[1..], &threads[1..])
            }
        },
    }
}

fn match_stack(atoms: &[StackAtom], stack: &[StackId]) -> bool {
    match atoms.first() {
        None => stack.is_empty(),
        Some(StackAtom::Lit(s)) => {
            stack.first() == Some(s) && match_stack(&atoms[1..], &stack[1..])
        }
        Some(StackAtom::Any) => !stack.is_empty() && match_stack(&atoms[1..], &stack[1..]),
        Some(StackAtom::Plus(s)) => {
            let mut n = 0;
            while stack.get(n) == Some(s) {
                n += 1;
                if match_stack(&atoms[1..], &stack[n..]) {
                    return true;
                }
            }
            false
        }
        Some(StackAtom::Star(s)) => {
            let mut n = 0;
            loop {
                if match_stack(&atoms[1..], &stack[n..]) {
                    return true;
                }
                if stack.get(n) != Some(s) {
                    return false;
                }
                n += 1;
            }
        }
        Some(StackAtom::AnyStar) => {
            (0..=stack.len()).any(|k| match_stack(&atoms[1..], &stack[k..]))
        }
    }
}

/// Parses the pattern surface syntax against the declared symbols of a
/// model. The empty configuration must be written `EPS`; an empty
/// pattern is an error.
pub fn parse_config_pattern(text: &str, m: &Sdpn) -> Result<ConfigPattern, ParseError> {
    let stripped = match text.find('#') {
        Some(i) => &text[..i],
        None => text,
    };
    let toks: Vec<Tok<'_>> = {
        let mut v = Vec::new();
        let mut col = 0usize;
        for piece in stripped.split_whitespace() {
            let at = stripped[col..].find(piece).unwrap() + col;
            col = at + piece.len();
            v.push(Tok {
                text: piece,
                line: 1,
                col: at + 1,
            });
        }
        v
    };
    if toks.is_empty() {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            msg: "empty pattern (the empty configuration is written EPS)".into(),
        });
    }
    if toks.len() == 1 && toks[0].text == "EPS" {
        return Ok(ConfigPattern {
            items: Vec::new(),
            text: text.trim().to_string(),
        });
    }

    let mut items = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        if t.text == "ANY*" {
            items.push(PatternItem::AnyThreads);
            i += 1;
            continue;
        }
        // A thread item: a state name or a brace set of state names.
        // An exact match against a declared state wins over the set
        // syntax, so brace-shaped generated names stay addressable.
        let mut states = BTreeSet::new();
        if let Some(st) = m.state(t.text) {
            states.insert(st);
            i += 1;
            let stack = collect_stack_atoms(&toks, &mut i, m)?;
            items.push(PatternItem::Thread { states, stack });
            continue;
        }
        if t.text.starts_with('{') {
            let mut j = i;
            let mut closed = false;
            while j < toks.len() {
                let mut piece = toks[j].text;
                if j == i {
                    piece = &piece[1..];
                }
                if piece.ends_with('}') {
                    piece = &piece[..piece.len() - 1];
                    closed = true;
                }
                if !piece.is_empty() {
                    let st = m.state(piece).ok_or(ParseError::Undeclared {
                        line: toks[j].line,
                        col: toks[j].col,
                        what: "state",
                        name: piece.to_string(),
                    })?;
                    states.insert(st);
                }
                j += 1;
                if closed {
                    break;
                }
            }
            if !closed || states.is_empty() {
                return Err(ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    msg: "unterminated or empty state set".into(),
                });
            }
            i = j;
        } else {
            let st = m.state(t.text).ok_or(ParseError::Undeclared {
                line: t.line,
                col: t.col,
                what: "state",
                name: t.text.to_string(),
            })?;
            states.insert(st);
            i += 1;
        }
        let stack = collect_stack_atoms(&toks, &mut i, m)?;
        items.push(PatternItem::Thread { states, stack });
    }
    Ok(ConfigPattern {
        items,
        text: text.trim().to_string(),
    })
}

/// Stack atoms run until the next state name, brace set, ANY* or end of
/// input.
fn collect_stack_atoms(
    toks: &[Tok<'_>],
    i: &mut usize,
    m: &Sdpn,
) -> Result<Vec<StackAtom>, ParseError> {
    let mut stack = Vec::new();
    while *i < toks.len() {
        let a = &toks[*i];
        if a.text == "ANY*" || m.state(a.text).is_some() {
            break;
        }
        if a.text.starts_with('{') && m.stack_symbol(a.text).is_none() {
            break;
        }
        stack.push(parse_atom(a, m)?);
        *i += 1;
    }
    Ok(stack)
}

fn parse_atom(tok: &Tok<'_>, m: &Sdpn) -> Result<StackAtom, ParseError> {
    let t = tok.text;
    if t == "." {
        return Ok(StackAtom::Any);
    }
    if t == ".*" {
        return Ok(StackAtom::AnyStar);
    }
    let (base, wrap): (&str, fn(StackId) -> StackAtom) = if let Some(b) = t.strip_suffix('+') {
        (b, StackAtom::Plus)
    } else if let Some(b) = t.strip_suffix('*') {
        (b, StackAtom::Star)
    } else {
        (t, StackAtom::Lit)
    };
    let sym = m.stack_symbol(base).ok_or(ParseError::Undeclared {
        line: tok.line,
        col: tok.col,
        what: "stack symbol",
        name: base.to_string(),
    })?;
    Ok(wrap(sym))
}

/// Size bounds for pattern instantiation.
#[derive(Debug, Clone, Copy)]
pub struct EnumBounds {
    /// Threads contributed by each `ANY*` item, at most.
    pub any_threads: usize,
    /// Stack depth for starred or wildcard positions, at most.
    pub stack: usize,
    /// Total configurations returned, at most.
    pub count: usize,
}

impl Default for EnumBounds {
    fn default() -> Self {
        EnumBounds {
            any_threads: 1,
            stack: 2,
            count: 4096,
        }
    }
}

/// Enumerates members of the pattern's language up to the given bounds,
/// in a deterministic order. A pattern with no stars yields exactly its
/// concrete configurations.
pub fn enumerate_pattern(p: &ConfigPattern, m: &Sdpn, bounds: EnumBounds) -> Vec<Configuration> {
    let mut out = Vec::new();
    let mut acc: Vec<Thread> = Vec::new();
    enum_items(&p.items, m, bounds, &mut acc, &mut out);
    out.truncate(bounds.count);
    out
}

fn enum_items(
    items: &[PatternItem],
    m: &Sdpn,
    bounds: EnumBounds,
    acc: &mut Vec<Thread>,
    out: &mut Vec<Configuration>,
) {
    if out.len() >= bounds.count {
        return;
    }
    match items.first() {
        None => out.push(Configuration::new(acc.clone())),
        Some(PatternItem::AnyThreads) => {
            // Build the per-thread options once: every state paired
            // with every short stack word, the empty stack included.
            let mut words: Vec<Vec<StackId>> = vec![Vec::new()];
            let mut layer: Vec<Vec<StackId>> = vec![Vec::new()];
            for _ in 0..bounds.stack {
                let mut next = Vec::new();
                for w in &layer {
                    for sym in 0..m.n_stack_symbols() {
                        let mut w2 = w.clone();
                        w2.push(StackId(sym as u32));
                        next.push(w2);
                    }
                }
                words.extend(next.iter().cloned());
                layer = next;
            }
            let mut options = Vec::new();
            for st in 0..m.n_states() {
                for w in &words {
                    options.push(Thread {
                        state: StateId(st as u32),
                        stack: w.clone(),
                    });
                }
            }
            enum_any(&options, bounds.any_threads, items, m, bounds, acc, out);
        }
        Some(PatternItem::Thread { states, stack }) => {
            let mut words = Vec::new();
            enum_stack(stack, m, bounds, &mut Vec::new(), &mut words);
            for st in states {
                for w in &words {
                    acc.push(Thread {
                        state: *st,
                        stack: w.clone(),
                    });
                    enum_items(&items[1..], m, bounds, acc, out);
                    acc.pop();
                }
            }
        }
    }
}

fn enum_any(
    options: &[Thread],
    remaining: usize,
    items: &[PatternItem],
    m: &Sdpn,
    bounds: EnumBounds,
    acc: &mut Vec<Thread>,
    out: &mut Vec<Configuration>,
) {
    if out.len() >= bounds.count {
        return;
    }
    enum_items(&items[1..], m, bounds, acc, out);
    if remaining == 0 {
        return;
    }
    for t in options {
        acc.push(t.clone());
        enum_any(options, remaining - 1, items, m, bounds, acc, out);
        acc.pop();
    }
}

fn enum_stack(
    atoms: &[StackAtom],
    m: &Sdpn,
    bounds: EnumBounds,
    acc: &mut Vec<StackId>,
    out: &mut Vec<Vec<StackId>>,
) {
    if out.len() >= bounds.count {
        return;
    }
    match atoms.first() {
        None => out.push(acc.clone()),
        Some(StackAtom::Lit(s)) => {
            acc.push(*s);
            enum_stack(&atoms[1..], m, bounds, acc, out);
            acc.pop();
        }
        Some(StackAtom::Any) => {
            for sym in 0..m.n_stack_symbols() {
                acc.push(StackId(sym as u32));
                enum_stack(&atoms[1..], m, bounds, acc, out);
                acc.pop();
            }
        }
        Some(StackAtom::Plus(s)) => {
            for n in 1..=bounds.stack.max(1) {
                let len = acc.len();
                acc.extend(std::iter::repeat(*s).take(n));
                enum_stack(&atoms[1..], m, bounds, acc, out);
                acc.truncate(len);
            }
        }
        Some(StackAtom::Star(s)) => {
            for n in 0..=bounds.stack {
                let len = acc.len();
                acc.extend(std::iter::repeat(*s).take(n));
                enum_stack(&atoms[1..], m, bounds, acc, out);
                acc.truncate(len);
            }
        }
        Some(StackAtom::AnyStar) => {
            // Short words over the whole alphabet, shortest first.
            let mut words: Vec<Vec<StackId>> = vec![Vec::new()];
            let mut layer: Vec<Vec<StackId>> = vec![Vec::new()];
            for _ in 0..bounds.stack {
                let mut next = Vec::new();
                for w in &layer {
                    for sym in 0..m.n_stack_symbols() {
                        let mut w2 = w.clone();
                        w2.push(StackId(sym as u32));
                        next.push(w2);
                    }
                }
                words.extend(next.iter().cloned());
                layer = next;
            }
            for w in words {
                let len = acc.len();
                acc.extend(w);
                enum_stack(&atoms[1..], m, bounds, acc, out);
                acc.truncate(len);
            }
        }
    }
}
