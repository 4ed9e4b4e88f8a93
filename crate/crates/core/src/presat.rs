//! Backward saturation: extends a configuration automaton until it
//! accepts every predecessor of its language. Matching is incremental:
//! a worklist of newly added stack transitions is re-matched against
//! the rule shapes, so each rule instance is considered once per
//! witnessing path.

use std::collections::VecDeque;

use thiserror::Error;

use crate::automata::{AState, GEdgeId, MAutomaton};
use crate::model::{Rhs, Sdpn, StackId, StateId};

#[derive(Debug, Error)]
pub enum SaturateError {
    #[error("model must be normalized before saturation")]
    NotNormalized,
    #[error("automaton lacks an entry state for a rule's control state")]
    MissingEntry,
}

#[derive(Debug, Clone, Default)]
pub struct SaturationStats {
    pub added_edges: usize,
    pub rounds: usize,
}

/// Normal rule shapes, pre-split for matching.
enum Shape {
    /// Target state and symbol of the rule's left-hand side.
    Pop {
        lhs: (StateId, StackId),
        to_state: StateId,
    },
    Switch {
        lhs: (StateId, StackId),
        to_state: StateId,
        sym: StackId,
    },
    Push {
        lhs: (StateId, StackId),
        to_state: StateId,
        first: StackId,
        second: StackId,
    },
    Spawn {
        lhs: (StateId, StackId),
        spawned: (StateId, StackId),
        continuing: (StateId, StackId),
    },
}

fn shapes(m: &Sdpn) -> Result<Vec<Shape>, SaturateError> {
    let mut out = Vec::new();
    for r in &m.rules {
        let lhs = (r.state, r.symbol);
        match &r.rhs {
            Rhs::Simple { state, word } => match word.as_slice() {
                [] => out.push(Shape::Pop {
                    lhs,
                    to_state: *state,
                }),
                [sym] => out.push(Shape::Switch {
                    lhs,
                    to_state: *state,
                    sym: *sym,
                }),
                [first, second] => out.push(Shape::Push {
                    lhs,
                    to_state: *state,
                    first: *first,
                    second: *second,
                }),
                _ => return Err(SaturateError::NotNormalized),
            },
            Rhs::Spawn {
                spawned_state,
                spawned_word,
                state,
                word,
            } => {
                let (&[s_sym], &[c_sym]) = (spawned_word.as_slice(), word.as_slice()) else {
                    return Err(SaturateError::NotNormalized);
                };
                out.push(Shape::Spawn {
                    lhs,
                    spawned: (*spawned_state, s_sym),
                    continuing: (*state, c_sym),
                });
            }
        }
    }
    Ok(out)
}

struct Saturator<'a> {
    a: MAutomaton,
    shapes: &'a [Shape],
    queue: VecDeque<GEdgeId>,
    stats: SaturationStats,
}

impl Saturator<'_> {
    fn entry(&self, s: AState, p: StateId) -> Result<AState, SaturateError> {
        self.a.entry(s, p).ok_or(SaturateError::MissingEntry)
    }

    fn add(&mut self, lhs: (StateId, StackId), owner: AState, to: AState) -> Result<(), SaturateError> {
        let sp = self.entry(owner, lhs.0)?;
        if let Some(id) = self.a.add_g_edge(sp, lhs.1, to) {
            self.stats.added_edges += 1;
            self.queue.push_back(id);
        }
        Ok(())
    }

    /// Re-match all shapes against a transition that just appeared,
    /// considering every position of the shape's witnessing path the
    /// edge could occupy. Only paths rooted at an entry state matter,
    /// but the edge itself may sit mid-path at a plain segment state.
    fn match_edge(&mut self, id: GEdgeId) -> Result<(), SaturateError> {
        let edge = self.a.g_edge(id);
        let rooted = self.a.entry_owner(edge.from);
        for shape in self.shapes {
            match *shape {
                Shape::Pop { .. } => {}
                Shape::Switch { lhs, to_state, sym } => {
                    if let Some((owner, head)) = rooted {
                        if head == to_state && sym == edge.sym {
                            self.add(lhs, owner, edge.to)?;
                        }
                    }
                }
                Shape::Push {
                    lhs,
                    to_state,
                    first,
                    second,
                } => {
                    // The new edge as the first symbol of the path.
                    if let Some((owner, head)) = rooted {
                        if head == to_state && edge.sym == first {
                            for nid in self.a.g_out(edge.to).to_vec() {
                                let next = self.a.g_edge(nid);
                                if next.sym == second {
                                    self.add(lhs, owner, next.to)?;
                                }
                            }
                        }
                    }
                    // The new edge as the second symbol.
                    if edge.sym == second {
                        for pid in self.a.g_in(edge.from).to_vec() {
                            let prev = self.a.g_edge(pid);
                            if prev.sym != first {
                                continue;
                            }
                            if let Some((powner, phead)) = self.a.entry_owner(prev.from) {
                                if phead == to_state {
                                    self.add(lhs, powner, edge.to)?;
                                }
                            }
                        }
                    }
                }
                Shape::Spawn {
                    lhs,
                    spawned,
                    continuing,
                } => {
                    // Witness path: entry(spawned) --sym--> x --bound-->
                    // s' --continuing--> entry --sym--> target. Both
                    // stack edges are entry rooted.
                    let Some((owner, head)) = rooted else {
                        continue;
                    };
                    if head == spawned.0 && edge.sym == spawned.1 {
                        for sc in self.a.e_out(edge.to).to_vec() {
                            let Some(cp) = self.a.entry(sc, continuing.0) else {
                                continue;
                            };
                            for nid in self.a.g_out(cp).to_vec() {
                                let next = self.a.g_edge(nid);
                                if next.sym == continuing.1 {
                                    self.add(lhs, owner, next.to)?;
                                }
                            }
                        }
                    }
                    if head == continuing.0 && edge.sym == continuing.1 {
                        // Walk back over the boundary into the spawned
                        // segment's stack transition.
                        for x in self.a.e_in(owner).to_vec() {
                            for pid in self.a.g_in(x).to_vec() {
                                let prev = self.a.g_edge(pid);
                                if prev.sym != spawned.1 {
                                    continue;
                                }
                                if let Some((sowner, shead)) = self.a.entry_owner(prev.from) {
                                    if shead == spawned.0 {
                                        self.add(lhs, sowner, edge.to)?;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Computes the predecessor automaton. The input automaton is extended
/// with stack transitions only; states, boundaries, initial and final
/// states are untouched, so the result contains the original language.
pub fn saturate(m: &Sdpn, a: &MAutomaton) -> Result<MAutomaton, SaturateError> {
    let (auto, _) = saturate_with_stats(m, a)?;
    Ok(auto)
}

pub fn saturate_with_stats(
    m: &Sdpn,
    a: &MAutomaton,
) -> Result<(MAutomaton, SaturationStats), SaturateError> {
    saturate_scheduled(m, a, &mut |_| 0)
}

/// Saturation with a pluggable worklist position chooser, so tests can
/// confirm the result is independent of the processing order. The
/// chooser receives the current queue length and returns the index to
/// process next.
pub fn saturate_scheduled(
    m: &Sdpn,
    a: &MAutomaton,
    pick: &mut dyn FnMut(usize) -> usize,
) -> Result<(MAutomaton, SaturationStats), SaturateError> {
    let shapes = shapes(m)?;
    let mut sat = Saturator {
        a: a.clone(),
        shapes: &shapes,
        queue: VecDeque::new(),
        stats: SaturationStats::default(),
    };

    // Pop rules need no stack-transition witness: the path is just the
    // entry transition for the target state, for every control state.
    let controls: Vec<AState> = sat.a.control_states().collect();
    for shape in &shapes {
        if let Shape::Pop { lhs, to_state } = *shape {
            for &s in &controls {
                let target = sat.entry(s, to_state)?;
                sat.add(lhs, s, target)?;
            }
        }
    }

    // Seed with the original transitions, then run to fixpoint.
    for i in 0..sat.a.g_edges().len() {
        sat.queue.push_back(GEdgeId(i as u32));
    }
    while !sat.queue.is_empty() {
        let at = pick(sat.queue.len()) % sat.queue.len();
        let id = sat.queue.remove(at).unwrap();
        sat.stats.rounds += 1;
        sat.match_edge(id)?;
    }
    let stats = sat.stats.clone();
    Ok((sat.a, stats))
}
