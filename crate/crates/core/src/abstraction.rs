//! Finite-domain Kleene abstractions of action languages: bounded word
//! domains with truncated concatenation (keep the first or the last
//! `order` letters), the semiring operations, canonicalization, and the
//! synchronizing shuffle.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::model::{co_action, Action, Sdpn};

/// Which end of a word survives truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbsKind {
    Prefix,
    Suffix,
}

impl fmt::Display for AbsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsKind::Prefix => write!(f, "prefix"),
            AbsKind::Suffix => write!(f, "suffix"),
        }
    }
}

/// A bounded word domain: all action words of length at most `order`,
/// with concatenation truncated at the chosen end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KDomain {
    pub kind: AbsKind,
    pub order: usize,
}

impl KDomain {
    pub fn new(kind: AbsKind, order: usize) -> Self {
        assert!(order >= 1, "abstraction order must be at least 1");
        KDomain { kind, order }
    }
}

/// A word of the bounded domain. Always at most `order` letters long
/// once canonicalized.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KWord(pub Vec<Action>);

impl KWord {
    pub fn empty() -> Self {
        KWord(Vec::new())
    }

    pub fn single(a: Action) -> Self {
        KWord(vec![a])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An element of the abstract lattice: a finite set of bounded words.
/// The empty set is the zero of the semiring and `{empty word}` its
/// unit. Sets are kept sorted so iteration and display are stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KElement(pub BTreeSet<KWord>);

impl KElement {
    pub fn zero() -> Self {
        KElement(BTreeSet::new())
    }

    pub fn one() -> Self {
        let mut s = BTreeSet::new();
        s.insert(KWord::empty());
        KElement(s)
    }

    pub fn singleton(w: KWord) -> Self {
        let mut s = BTreeSet::new();
        s.insert(w);
        KElement(s)
    }

    pub fn generator(a: Action) -> Self {
        KElement::singleton(KWord::single(a))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, w: &KWord) -> bool {
        self.0.contains(w)
    }

    /// Join; set union. Returns true when `self` grew.
    pub fn join_in_place(&mut self, other: &KElement) -> bool {
        let before = self.0.len();
        for w in &other.0 {
            self.0.insert(w.clone());
        }
        self.0.len() > before
    }

    pub fn join(&self, other: &KElement) -> KElement {
        let mut out = self.clone();
        out.join_in_place(other);
        out
    }

    pub fn meet(&self, other: &KElement) -> KElement {
        KElement(self.0.intersection(&other.0).cloned().collect())
    }

    /// Lattice order; set inclusion.
    pub fn le(&self, other: &KElement) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &KWord> {
        self.0.iter()
    }

    pub fn display(&self, m: &Sdpn) -> String {
        let words: Vec<String> = self
            .0
            .iter()
            .map(|w| {
                if w.is_empty() {
                    "eps".to_string()
                } else {
                    w.0.iter()
                        .map(|a| m.display_action(*a))
                        .collect::<Vec<_>>()
                        .join(".")
                }
            })
            .collect();
        format!("{{{}}}", words.join(", "))
    }
}

/// Truncation to the domain order: the smallest representation of the
/// path expression denoted by `w`.
pub fn canonical(dom: &KDomain, w: &[Action]) -> KWord {
    if w.len() <= dom.order {
        return KWord(w.to_vec());
    }
    match dom.kind {
        AbsKind::Prefix => KWord(w[..dom.order].to_vec()),
        AbsKind::Suffix => KWord(w[w.len() - dom.order..].to_vec()),
    }
}

/// Truncated concatenation of two bounded words.
pub fn concat_words(dom: &KDomain, u: &KWord, v: &KWord) -> KWord {
    let mut joined = u.0.clone();
    joined.extend_from_slice(&v.0);
    canonical(dom, &joined)
}

/// Pointwise truncated concatenation of two elements.
pub fn concat(dom: &KDomain, u: &KElement, v: &KElement) -> KElement {
    let mut out = BTreeSet::new();
    for a in &u.0 {
        for b in &v.0 {
            out.insert(concat_words(dom, a, b));
        }
    }
    KElement(out)
}

/// Abstraction of a finite language: the join over its words of the
/// products of their letter generators, which collapses to per-word
/// truncation.
pub fn alpha<W: AsRef<[Action]>>(dom: &KDomain, language: &[W]) -> KElement {
    let mut out = BTreeSet::new();
    for w in language {
        out.insert(canonical(dom, w.as_ref()));
    }
    KElement(out)
}

/// Least fixpoint of `y = one + x . y`, reached by iteration; chains in
/// the bounded domain are finite.
pub fn kleene_star(dom: &KDomain, x: &KElement) -> KElement {
    let mut y = KElement::one();
    loop {
        let mut next = concat(dom, x, &y);
        next.join_in_place(&KElement::one());
        if next == y {
            return y;
        }
        y = next;
    }
}

/// Abstraction of the language of internal-only words: all internal
/// words up to the domain order.
pub fn tau_star(dom: &KDomain) -> KElement {
    kleene_star(dom, &KElement::generator(Action::Tau))
}

/// Synchronizing shuffle with memoization. The labelling fixpoint calls
/// the shuffle heavily, so words are interned once and the recursion
/// runs on integer ids; per-pair results are cached as sorted id sets.
#[derive(Debug)]
pub struct Shuffler {
    pub dom: KDomain,
    words: Vec<KWord>,
    ids: HashMap<KWord, u32>,
    /// Head letter and tail id per interned word (empty word excluded).
    head_tail: Vec<Option<(Action, u32)>>,
    prepend_memo: HashMap<(Action, u32), u32>,
    shuffle_memo: HashMap<(u32, u32), u32>,
    arena: Vec<Vec<u32>>,
}

impl Shuffler {
    pub fn new(dom: KDomain) -> Self {
        let mut s = Shuffler {
            dom,
            words: Vec::new(),
            ids: HashMap::new(),
            head_tail: Vec::new(),
            prepend_memo: HashMap::new(),
            shuffle_memo: HashMap::new(),
            arena: Vec::new(),
        };
        s.intern(&KWord::empty());
        s
    }

    pub fn memo_len(&self) -> usize {
        self.shuffle_memo.len()
    }

    fn intern(&mut self, w: &KWord) -> u32 {
        if let Some(id) = self.ids.get(w) {
            return *id;
        }
        let head_tail = if w.is_empty() {
            None
        } else {
            let tail = KWord(w.0[1..].to_vec());
            Some((w.0[0], self.intern(&tail)))
        };
        let id = self.words.len() as u32;
        self.words.push(w.clone());
        self.head_tail.push(head_tail);
        self.ids.insert(w.clone(), id);
        id
    }

    /// Id of the canonicalized extension of a word by one letter.
    fn prepend_id(&mut self, a: Action, w: u32) -> u32 {
        if let Some(hit) = self.prepend_memo.get(&(a, w)) {
            return *hit;
        }
        let mut word = Vec::with_capacity(self.words[w as usize].len() + 1);
        word.push(a);
        word.extend_from_slice(&self.words[w as usize].0);
        let canon = canonical(&self.dom, &word);
        let id = self.intern(&canon);
        self.prepend_memo.insert((a, w), id);
        id
    }

    /// All interleavings of the two words, with an extra internal
    /// branch whenever the heads are an action/co-action pair; every
    /// concatenation is truncated through the domain. Returns an index
    /// into the result arena.
    fn shuffle_ids(&mut self, u: u32, v: u32) -> u32 {
        if let Some(hit) = self.shuffle_memo.get(&(u, v)) {
            return *hit;
        }
        let result: Vec<u32> = match (self.head_tail[u as usize], self.head_tail[v as usize]) {
            (None, _) => vec![v],
            (_, None) => vec![u],
            (Some((a, u_rest)), Some((b, v_rest))) => {
                let mut out: BTreeSet<u32> = BTreeSet::new();
                let left = self.shuffle_ids(u_rest, v);
                for w in self.arena[left as usize].clone() {
                    let id = self.prepend_id(a, w);
                    out.insert(id);
                }
                let right = self.shuffle_ids(u, v_rest);
                for w in self.arena[right as usize].clone() {
                    let id = self.prepend_id(b, w);
                    out.insert(id);
                }
                if co_action(a).ok() == Some(b) {
                    let sync = self.shuffle_ids(u_rest, v_rest);
                    for w in self.arena[sync as usize].clone() {
                        let id = self.prepend_id(Action::Tau, w);
                        out.insert(id);
                    }
                }
                out.into_iter().collect()
            }
        };
        let idx = self.arena.len() as u32;
        self.arena.push(result);
        self.shuffle_memo.insert((u, v), idx);
        idx
    }

    pub fn shuffle_words(&mut self, u: &KWord, v: &KWord) -> KElement {
        let (ui, vi) = (self.intern(u), self.intern(v));
        let idx = self.shuffle_ids(ui, vi);
        KElement(
            self.arena[idx as usize]
                .iter()
                .map(|id| self.words[*id as usize].clone())
                .collect(),
        )
    }

    /// Pointwise lift of the shuffle to elements.
    pub fn shuffle(&mut self, us: &KElement, vs: &KElement) -> KElement {
        let u_ids = self.intern_element(us);
        let v_ids = self.intern_element(vs);
        let mut out: BTreeSet<u32> = BTreeSet::new();
        self.shuffle_ids_into(&u_ids, &v_ids, &mut out);
        self.element_of_ids(out.iter().copied())
    }

    pub fn intern_word(&mut self, w: &KWord) -> u32 {
        self.intern(w)
    }

    pub fn intern_element(&mut self, e: &KElement) -> Vec<u32> {
        e.0.iter().map(|w| self.intern(w)).collect()
    }

    pub fn word_of_id(&self, id: u32) -> &KWord {
        &self.words[id as usize]
    }

    pub fn element_of_ids(&self, ids: impl Iterator<Item = u32>) -> KElement {
        KElement(ids.map(|id| self.words[id as usize].clone()).collect())
    }

    /// Joins the pairwise shuffle of two id slices into an id set.
    pub fn shuffle_ids_into(&mut self, us: &[u32], vs: &[u32], out: &mut BTreeSet<u32>) {
        for &u in us {
            for &v in vs {
                let idx = self.shuffle_ids(u, v);
                out.extend(self.arena[idx as usize].iter().copied());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SigId;

    fn sig(i: u32) -> Action {
        Action::send(SigId(i))
    }

    fn cosig(i: u32) -> Action {
        Action::receive(SigId(i))
    }

    fn word(letters: &[Action]) -> KWord {
        KWord(letters.to_vec())
    }

    fn elem(words: &[&[Action]]) -> KElement {
        KElement(words.iter().map(|w| KWord(w.to_vec())).collect())
    }

    #[test]
    fn concat_within_bound_keeps_both() {
        let dom = KDomain::new(AbsKind::Prefix, 2);
        let a = KElement::generator(sig(0));
        let b = KElement::generator(sig(1));
        assert_eq!(concat(&dom, &a, &b), elem(&[&[sig(0), sig(1)]]));
    }

    #[test]
    fn concat_truncates_to_first_or_last_letter() {
        let a = KElement::generator(sig(0));
        let b = KElement::generator(sig(1));
        let pre1 = KDomain::new(AbsKind::Prefix, 1);
        assert_eq!(concat(&pre1, &a, &b), elem(&[&[sig(0)]]));
        let suf1 = KDomain::new(AbsKind::Suffix, 1);
        assert_eq!(concat(&suf1, &a, &b), elem(&[&[sig(1)]]));
    }

    #[test]
    fn alpha_of_empty_and_unit_languages() {
        let dom = KDomain::new(AbsKind::Prefix, 2);
        let none: Vec<Vec<Action>> = vec![];
        assert_eq!(alpha(&dom, &none), KElement::zero());
        assert_eq!(alpha(&dom, &[Vec::<Action>::new()]), KElement::one());
        let tttt = vec![vec![Action::Tau; 4]];
        assert_eq!(alpha(&dom, &tttt), elem(&[&[Action::Tau, Action::Tau]]));
    }

    #[test]
    fn tau_star_collects_internal_words_up_to_order() {
        for kind in [AbsKind::Prefix, AbsKind::Suffix] {
            let dom = KDomain::new(kind, 2);
            assert_eq!(
                tau_star(&dom),
                elem(&[&[], &[Action::Tau], &[Action::Tau, Action::Tau]])
            );
        }
        let dom1 = KDomain::new(AbsKind::Prefix, 1);
        assert_eq!(tau_star(&dom1), elem(&[&[], &[Action::Tau]]));
    }

    #[test]
    fn star_of_zero_and_one_is_one() {
        let dom = KDomain::new(AbsKind::Prefix, 2);
        assert_eq!(kleene_star(&dom, &KElement::zero()), KElement::one());
        assert_eq!(kleene_star(&dom, &KElement::one()), KElement::one());
    }

    #[test]
    fn canonical_truncates_each_end() {
        let w = [sig(0), sig(1), sig(2)];
        let pre = KDomain::new(AbsKind::Prefix, 2);
        assert_eq!(canonical(&pre, &w), word(&[sig(0), sig(1)]));
        let suf = KDomain::new(AbsKind::Suffix, 2);
        assert_eq!(canonical(&suf, &w), word(&[sig(1), sig(2)]));
        assert_eq!(canonical(&pre, &[]), KWord::empty());
    }

    #[test]
    fn shuffle_with_empty_is_identity() {
        let dom = KDomain::new(AbsKind::Prefix, 4);
        let mut sh = Shuffler::new(dom);
        let ab = word(&[sig(0), sig(1)]);
        assert_eq!(
            sh.shuffle_words(&ab, &KWord::empty()),
            KElement::singleton(ab.clone())
        );
        assert_eq!(
            sh.shuffle_words(&KWord::empty(), &ab),
            KElement::singleton(ab)
        );
    }

    #[test]
    fn shuffle_of_co_pair_has_internal_branch() {
        let dom = KDomain::new(AbsKind::Prefix, 2);
        let mut sh = Shuffler::new(dom);
        let got = sh.shuffle_words(&word(&[sig(0)]), &word(&[cosig(0)]));
        assert_eq!(
            got,
            elem(&[
                &[sig(0), cosig(0)],
                &[cosig(0), sig(0)],
                &[Action::Tau]
            ])
        );
    }

    #[test]
    fn prefixed_shuffle_of_two_letters() {
        // d . ({a} shuffle {b}) = {dab, dba}
        let dom = KDomain::new(AbsKind::Prefix, 4);
        let mut sh = Shuffler::new(dom);
        let inner = sh.shuffle(
            &KElement::generator(sig(0)),
            &KElement::generator(sig(1)),
        );
        let got = concat(&dom, &KElement::generator(sig(2)), &inner);
        assert_eq!(
            got,
            elem(&[&[sig(2), sig(0), sig(1)], &[sig(2), sig(1), sig(0)]])
        );
    }
}
