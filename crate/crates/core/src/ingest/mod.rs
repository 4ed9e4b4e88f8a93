//! Parsers for the textual model format, the configuration-pattern
//! language, and the control-flow-graph frontend.
//!
//! The model format is line oriented. Sections `channels:`, `states:`,
//! `stack:` declare symbols; `rules:` lists transitions, one per line:
//!
//! ```text
//! # counter that can be incremented
//! channels: incr
//! states: p0
//! stack: one zero
//! rules:
//!   [grow] p0 one -incr?-> p0 one one
//!   [base] p0 zero -incr?-> p0 one zero
//! ```
//!
//! An action is `tau`, `CHAN!`, `CHAN?`, optionally with a value as in
//! `c!0` / `c?0`; the word forms `send CHAN [VAL]` and `recv CHAN [VAL]`
//! are accepted as aliases. A spawn rule lists the spawned process left
//! of a `|` separator: `P SYM -ACT-> P W | P W`.

mod cfg;
mod pattern;

pub use cfg::{cfg_to_sdpn, parse_cfgp, ProgramAst, TranslateError};
pub use pattern::{
    enumerate_pattern, parse_config_pattern, ConfigPattern, EnumBounds, PatternItem, StackAtom,
};

use thiserror::Error;

use crate::model::{Action, Rhs, Rule, Sdpn, StackId, StateId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared {what} `{name}`")]
    Undeclared {
        line: usize,
        col: usize,
        what: &'static str,
        name: String,
    },
    #[error("{line}:{col}: duplicate declaration of `{name}`")]
    Duplicate { line: usize, col: usize, name: String },
}

/// A token with its position, for error reporting.
#[derive(Debug, Clone)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Vec<Tok<'_>>> {
    let mut lines = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let body = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut toks = Vec::new();
        let mut col = 0;
        for piece in body.split_whitespace() {
            let at = body[col..].find(piece).unwrap() + col;
            col = at + piece.len();
            toks.push(Tok {
                text: piece,
                line: ln + 1,
                col: at + 1,
            });
        }
        lines.push(toks);
    }
    lines
}

fn syntax(tok: &Tok<'_>, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: tok.line,
        col: tok.col,
        msg: msg.into(),
    }
}

/// Names that would collide with pattern syntax are rejected up front.
fn check_name(tok: &Tok<'_>) -> Result<(), ParseError> {
    let t = tok.text;
    let reserved = t == "."
        || t == ".*"
        || t == "ANY*"
        || t == "EPS"
        || t == "tau"
        || t == "|"
        || t.ends_with('*')
        || t.ends_with('+')
        || t.starts_with('-')
        || t.starts_with('~')
        || t.starts_with('[');
    if reserved {
        return Err(syntax(tok, format!("`{}` is not a valid name here", t)));
    }
    Ok(())
}

#[derive(PartialEq)]
enum Section {
    None,
    Channels,
    States,
    Stack,
    Rules,
}

/// Parses the model format. Channel declarations generate send/receive
/// co-action pairs; rules naming undeclared symbols are rejected.
pub fn parse_sdpn(text: &str) -> Result<Sdpn, ParseError> {
    let mut m = Sdpn::new();
    let mut section = Section::None;
    let mut channels: Vec<String> = Vec::new();
    let mut anon = 0usize;

    for toks in tokenize(text) {
        let mut toks = toks.as_slice();
        if toks.is_empty() {
            continue;
        }
        match toks[0].text {
            "channels:" => {
                section = Section::Channels;
                toks = &toks[1..];
            }
            "states:" => {
                section = Section::States;
                toks = &toks[1..];
            }
            "stack:" => {
                section = Section::Stack;
                toks = &toks[1..];
            }
            "rules:" => {
                section = Section::Rules;
                toks = &toks[1..];
                if !toks.is_empty() {
                    return Err(syntax(&toks[0], "rules start on the following lines"));
                }
                continue;
            }
            _ => {}
        }
        if toks.is_empty() {
            continue;
        }
        match section {
            Section::None => {
                return Err(syntax(&toks[0], "expected a section header"));
            }
            Section::Channels => {
                for t in toks {
                    check_name(t)?;
                    if channels.iter().any(|c| c == t.text) {
                        return Err(ParseError::Duplicate {
                            line: t.line,
                            col: t.col,
                            name: t.text.to_string(),
                        });
                    }
                    channels.push(t.text.to_string());
                }
            }
            Section::States => {
                for t in toks {
                    check_name(t)?;
                    if m.state(t.text).is_some() {
                        return Err(ParseError::Duplicate {
                            line: t.line,
                            col: t.col,
                            name: t.text.to_string(),
                        });
                    }
                    m.add_state(t.text);
                }
            }
            Section::Stack => {
                for t in toks {
                    check_name(t)?;
                    if m.stack_symbol(t.text).is_some() || m.state(t.text).is_some() {
                        return Err(ParseError::Duplicate {
                            line: t.line,
                            col: t.col,
                            name: t.text.to_string(),
                        });
                    }
                    m.add_stack_symbol(t.text);
                }
            }
            Section::Rules => {
                parse_rule_line(&mut m, &channels, toks, &mut anon)?;
            }
        }
    }
    Ok(m)
}

fn lookup_state(m: &Sdpn, tok: &Tok<'_>) -> Result<StateId, ParseError> {
    m.state(tok.text).ok_or_else(|| ParseError::Undeclared {
        line: tok.line,
        col: tok.col,
        what: "state",
        name: tok.text.to_string(),
    })
}

fn lookup_stack(m: &Sdpn, tok: &Tok<'_>) -> Result<StackId, ParseError> {
    m.stack_symbol(tok.text)
        .ok_or_else(|| ParseError::Undeclared {
            line: tok.line,
            col: tok.col,
            what: "stack symbol",
            name: tok.text.to_string(),
        })
}

/// The interned signal name of channel `chan` carrying value `val`.
fn signal_name(chan: &str, val: Option<&str>) -> String {
    match val {
        None => chan.to_string(),
        Some(v) => format!("{}:{}", chan, v),
    }
}

fn parse_action(
    m: &mut Sdpn,
    channels: &[String],
    spec: &str,
    tok: &Tok<'_>,
) -> Result<Action, ParseError> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    if words.len() == 1 && words[0] == "tau" {
        return Ok(Action::Tau);
    }
    let (chan, val, send) = if words.len() >= 2 && (words[0] == "send" || words[0] == "recv") {
        (words[1], words.get(2).copied(), words[0] == "send")
    } else if words.len() == 1 {
        let w = words[0];
        let mark = w
            .find(['!', '?'])
            .ok_or_else(|| syntax(tok, format!("cannot parse action `{}`", spec)))?;
        let val = &w[mark + 1..];
        (
            &w[..mark],
            if val.is_empty() { None } else { Some(val) },
            w.as_bytes()[mark] == b'!',
        )
    } else {
        return Err(syntax(tok, format!("cannot parse action `{}`", spec)));
    };
    if !channels.iter().any(|c| c == chan) {
        return Err(ParseError::Undeclared {
            line: tok.line,
            col: tok.col,
            what: "channel",
            name: chan.to_string(),
        });
    }
    let sig = m.add_signal(&signal_name(chan, val));
    Ok(if send {
        Action::send(sig)
    } else {
        Action::receive(sig)
    })
}

fn parse_rule_line(
    m: &mut Sdpn,
    channels: &[String],
    toks: &[Tok<'_>],
    anon: &mut usize,
) -> Result<(), ParseError> {
    let mut i = 0;
    let name = if toks[0].text.starts_with('[') {
        let t = toks[0].text;
        if !t.ends_with(']') || t.len() < 3 {
            return Err(syntax(&toks[0], "rule name must look like [name]"));
        }
        i = 1;
        t[1..t.len() - 1].to_string()
    } else {
        *anon += 1;
        format!("r{}", *anon)
    };
    if m.rule_by_name(&name).is_some() {
        return Err(ParseError::Duplicate {
            line: toks[0].line,
            col: toks[0].col,
            name,
        });
    }
    let need = |idx: usize| -> Result<&Tok<'_>, ParseError> {
        toks.get(idx)
            .ok_or_else(|| syntax(toks.last().unwrap(), "incomplete rule"))
    };
    let state = lookup_state(m, need(i)?)?;
    let symbol = lookup_stack(m, need(i + 1)?)?;

    // The arrow spans tokens from one starting with `-` to one ending
    // with `->`; whatever sits between the dashes is the action.
    let arrow_start = i + 2;
    let start_tok = need(arrow_start)?.clone();
    if !start_tok.text.starts_with('-') {
        return Err(syntax(&start_tok, "expected `-ACTION->`"));
    }
    let mut arrow_end = arrow_start;
    while !toks[arrow_end].text.ends_with("->") {
        arrow_end += 1;
        if arrow_end >= toks.len() {
            return Err(syntax(&start_tok, "unterminated arrow"));
        }
    }
    let mut act_text = String::new();
    for (k, t) in toks[arrow_start..=arrow_end].iter().enumerate() {
        let mut s = t.text;
        if k == 0 {
            s = &s[1..];
        }
        if k == arrow_end - arrow_start {
            s = &s[..s.len() - 2];
        }
        if !s.is_empty() {
            if !act_text.is_empty() {
                act_text.push(' ');
            }
            act_text.push_str(s);
        }
    }
    let action = parse_action(m, channels, &act_text, &start_tok)?;

    // Right-hand side: one or two `STATE WORD` groups split on `|`.
    let rest = &toks[arrow_end + 1..];
    if rest.is_empty() {
        return Err(syntax(toks.last().unwrap(), "missing right-hand side"));
    }
    let split = rest.iter().position(|t| t.text == "|");
    let parse_group = |group: &[Tok<'_>], m: &Sdpn| -> Result<(StateId, Vec<StackId>), ParseError> {
        if group.is_empty() {
            return Err(syntax(toks.last().unwrap(), "empty right-hand side group"));
        }
        let st = lookup_state(m, &group[0])?;
        let mut word = Vec::new();
        for t in &group[1..] {
            word.push(lookup_stack(m, t)?);
        }
        Ok((st, word))
    };
    let rhs = match split {
        None => {
            let (state, word) = parse_group(rest, m)?;
            Rhs::Simple { state, word }
        }
        Some(k) => {
            let (spawned_state, spawned_word) = parse_group(&rest[..k], m)?;
            let (state, word) = parse_group(&rest[k + 1..], m)?;
            Rhs::Spawn {
                spawned_state,
                spawned_word,
                state,
                word,
            }
        }
    };
    m.push_rule(Rule {
        state,
        symbol,
        action,
        rhs,
        name,
        aux: false,
    });
    Ok(())
}

/// Canonical printer; `parse_sdpn` of the output reproduces the model.
pub fn print_sdpn(m: &Sdpn) -> String {
    let mut out = String::new();
    let mut channels: Vec<String> = Vec::new();
    for sig in &m.sig_names {
        let chan = sig.split(':').next().unwrap().to_string();
        if !channels.contains(&chan) {
            channels.push(chan);
        }
    }
    if !channels.is_empty() {
        out.push_str("channels:");
        for c in &channels {
            out.push(' ');
            out.push_str(c);
        }
        out.push('\n');
    }
    out.push_str("states:");
    for s in &m.state_names {
        out.push(' ');
        out.push_str(s);
    }
    out.push('\n');
    out.push_str("stack:");
    for s in &m.stack_names {
        out.push(' ');
        out.push_str(s);
    }
    out.push('\n');
    out.push_str("rules:\n");
    for r in &m.rules {
        out.push_str("  [");
        out.push_str(&r.name);
        out.push_str("] ");
        out.push_str(&m.state_names[r.state.0 as usize]);
        out.push(' ');
        out.push_str(&m.stack_names[r.symbol.0 as usize]);
        out.push_str(" -");
        out.push_str(&print_action(m, r.action));
        out.push_str("-> ");
        match &r.rhs {
            Rhs::Simple { state, word } => {
                out.push_str(&m.state_names[state.0 as usize]);
                for w in word {
                    out.push(' ');
                    out.push_str(&m.stack_names[w.0 as usize]);
                }
            }
            Rhs::Spawn {
                spawned_state,
                spawned_word,
                state,
                word,
            } => {
                out.push_str(&m.state_names[spawned_state.0 as usize]);
                for w in spawned_word {
                    out.push(' ');
                    out.push_str(&m.stack_names[w.0 as usize]);
                }
                out.push_str(" | ");
                out.push_str(&m.state_names[state.0 as usize]);
                for w in word {
                    out.push(' ');
                    out.push_str(&m.stack_names[w.0 as usize]);
                }
            }
        }
        out.push('\n');
    }
    out
}

fn print_action(m: &Sdpn, a: Action) -> String {
    match a {
        Action::Tau => "tau".to_string(),
        Action::Sig { sig, pol } => {
            let name = &m.sig_names[sig.0 as usize];
            let (chan, val) = match name.split_once(':') {
                Some((c, v)) => (c, Some(v)),
                None => (name.as_str(), None),
            };
            format!("{}{}{}", chan, pol, val.unwrap_or(""))
        }
    }
}
