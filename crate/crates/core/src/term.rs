//! Signatures, positions, and terms.
//!
//! Terms are stored as rooted term graphs: a finite term is an acyclic
//! graph, a rational infinite term is a cyclic one. Every operation is a
//! pure function on immutable values; graphs are shared via `Arc`, so
//! taking a subterm of a rational term is cheap and keeps the finite
//! description (it re-enters the cycle instead of unfolding it).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors raised by term construction and navigation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("invalid position {0} in term")]
    InvalidPosition(Position),
    #[error("unguarded recursion through `{0}`: every cycle must pass a function symbol")]
    Unguarded(String),
    #[error("unbound recursion reference `{0}`")]
    UnboundRef(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("symbol `{symbol}` used with arity {found}, expected {expected}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("a context must contain exactly one hole, found {0}")]
    HoleCount(usize),
}

/// A position: a sequence of 1-based child indices. The empty position is
/// the root.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position(pub Vec<u32>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn from_slice(ix: &[u32]) -> Self {
        Position(ix.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Depth of a step contracted at this position.
    pub fn depth(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn child(&self, i: u32) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    pub fn concat(&self, other: &Position) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Strict prefix.
    pub fn is_above(&self, other: &Position) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    /// Neither is a prefix of the other.
    pub fn is_disjoint(&self, other: &Position) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }

    /// The suffix `q` such that `self = prefix . q`, if `prefix` is a prefix.
    pub fn strip_prefix(&self, prefix: &Position) -> Option<Position> {
        if prefix.is_prefix_of(self) {
            Some(Position(self.0[prefix.0.len()..].to_vec()))
        } else {
            None
        }
    }

    pub fn parse(s: &str) -> Result<Position, TermError> {
        let s = s.trim();
        if s.is_empty() || s == "e" || s == "ε" {
            return Ok(Position::root());
        }
        let mut v = Vec::new();
        for part in s.split('.') {
            let i: u32 = part
                .parse()
                .map_err(|_| TermError::Parse(format!("bad position component `{part}`")))?;
            if i == 0 {
                return Err(TermError::Parse("positions are 1-based".into()));
            }
            v.push(i);
        }
        Ok(Position(v))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "e")
        } else {
            let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A first-order signature: finitely many symbols with fixed arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    /// Registers a symbol, checking arity consistency.
    pub fn add(&mut self, name: &str, arity: usize) -> Result<(), TermError> {
        match self.symbols.get(name) {
            Some(&a) if a != arity => Err(TermError::ArityMismatch {
                symbol: name.to_string(),
                expected: a,
                found: arity,
            }),
            _ => {
                self.symbols.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(n, a)| (n.as_str(), *a))
    }

    /// Extends this signature with all symbols of a term.
    pub fn absorb(&mut self, t: &Term) -> Result<(), TermError> {
        for id in t.reachable() {
            if let NodeKind::Fun(name, kids) = t.node(id) {
                self.add(name, kids.len())?;
            }
        }
        Ok(())
    }
}

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Var(String),
    Fun(String, Vec<NodeId>),
}

/// A finite or rational term, represented as a rooted term graph.
#[derive(Clone)]
pub struct Term {
    nodes: Arc<Vec<NodeKind>>,
    root: NodeId,
}

/// What a term looks like one level down from some node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermView {
    Var(String),
    Fun(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term {
            nodes: Arc::new(vec![NodeKind::Var(name.to_string())]),
            root: 0,
        }
    }

    pub fn constant(name: &str) -> Term {
        Term::fun(name, vec![])
    }

    pub fn fun(name: &str, children: Vec<Term>) -> Term {
        let mut b = TermBuilder::new();
        let kids: Vec<NodeId> = children.iter().map(|c| b.import(c)).collect();
        let root = b.push(NodeKind::Fun(name.to_string(), kids));
        b.finish(root)
    }

    pub(crate) fn node(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id]
    }

    /// The symbol or variable at the root.
    pub fn view(&self) -> TermView {
        match &self.nodes[self.root] {
            NodeKind::Var(x) => TermView::Var(x.clone()),
            NodeKind::Fun(f, kids) => TermView::Fun(
                f.clone(),
                kids.iter()
                    .map(|&k| Term {
                        nodes: Arc::clone(&self.nodes),
                        root: k,
                    })
                    .collect(),
            ),
        }
    }

    pub fn root_symbol(&self) -> Option<String> {
        match &self.nodes[self.root] {
            NodeKind::Fun(f, _) => Some(f.clone()),
            NodeKind::Var(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self.nodes[self.root], NodeKind::Var(_))
    }

    pub fn var_name(&self) -> Option<String> {
        match &self.nodes[self.root] {
            NodeKind::Var(x) => Some(x.clone()),
            _ => None,
        }
    }

    fn node_at(&self, p: &Position) -> Option<NodeId> {
        let mut id = self.root;
        for &i in &p.0 {
            match &self.nodes[id] {
                NodeKind::Fun(_, kids) => {
                    let ix = i as usize;
                    if ix == 0 || ix > kids.len() {
                        return None;
                    }
                    id = kids[ix - 1];
                }
                NodeKind::Var(_) => return None,
            }
        }
        Some(id)
    }

    /// The symbol (or variable name) labelling position `p`, i.e. `t(p)`.
    pub fn symbol_at(&self, p: &Position) -> Option<String> {
        self.node_at(p).map(|id| match &self.nodes[id] {
            NodeKind::Var(x) => x.clone(),
            NodeKind::Fun(f, _) => f.clone(),
        })
    }

    pub fn has_position(&self, p: &Position) -> bool {
        self.node_at(p).is_some()
    }

    /// `t|_p`. For a rational term the result re-enters the cycle, so it is
    /// again finitely described.
    pub fn subterm_at(&self, p: &Position) -> Result<Term, TermError> {
        let id = self
            .node_at(p)
            .ok_or_else(|| TermError::InvalidPosition(p.clone()))?;
        Ok(Term {
            nodes: Arc::clone(&self.nodes),
            root: id,
        })
    }

    /// `s[t]_p`: replaces the subterm at `p` by `t`, unfolding the prefix
    /// along `p` only.
    pub fn replace_at(&self, replacement: &Term, p: &Position) -> Result<Term, TermError> {
        if self.node_at(p).is_none() {
            return Err(TermError::InvalidPosition(p.clone()));
        }
        let mut b = TermBuilder::new();
        let repl_root = b.import(replacement);
        let self_map = b.import_map(self);
        let root = Self::copy_spine(self, &mut b, &self_map, self.root, &p.0, repl_root);
        Ok(b.finish(root))
    }

    fn copy_spine(
        t: &Term,
        b: &mut TermBuilder,
        map: &[NodeId],
        id: NodeId,
        rest: &[u32],
        repl: NodeId,
    ) -> NodeId {
        if rest.is_empty() {
            return repl;
        }
        match &t.nodes[id] {
            NodeKind::Fun(f, kids) => {
                let ix = rest[0] as usize - 1;
                let mut new_kids: Vec<NodeId> = kids.iter().map(|&k| map[k]).collect();
                new_kids[ix] = Self::copy_spine(t, b, map, kids[ix], &rest[1..], repl);
                b.push(NodeKind::Fun(f.clone(), new_kids))
            }
            NodeKind::Var(_) => unreachable!("position validated"),
        }
    }

    /// All positions of length at most `d`, in breadth-first order.
    pub fn positions_up_to(&self, d: u32) -> Vec<Position> {
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        queue.push_back((self.root, Position::root()));
        while let Some((id, pos)) = queue.pop_front() {
            if pos.depth() > d {
                continue;
            }
            out.push(pos.clone());
            if pos.depth() == d {
                continue;
            }
            if let NodeKind::Fun(_, kids) = &self.nodes[id] {
                for (i, &k) in kids.iter().enumerate() {
                    queue.push_back((k, pos.child(i as u32 + 1)));
                }
            }
        }
        out
    }

    /// Applies a substitution. Rational bindings are merged into the graph,
    /// so the result stays finitely described.
    pub fn apply_subst(&self, subst: &Substitution) -> Term {
        if subst.0.is_empty() {
            return self.clone();
        }
        let mut b = TermBuilder::new();
        let mut binding_roots: BTreeMap<&str, NodeId> = BTreeMap::new();
        for (x, t) in &subst.0 {
            binding_roots.insert(x.as_str(), b.import(t));
        }
        // Import self, redirecting substituted variable nodes.
        let base = b.nodes.len();
        let mut map: Vec<NodeId> = Vec::with_capacity(self.nodes.len());
        for kind in self.nodes.iter() {
            match kind {
                NodeKind::Var(x) => {
                    if let Some(&r) = binding_roots.get(x.as_str()) {
                        map.push(r);
                        b.push(NodeKind::Var(x.clone())); // placeholder, unreachable
                    } else {
                        map.push(b.nodes.len());
                        b.push(kind.clone());
                    }
                }
                NodeKind::Fun(_, _) => {
                    map.push(b.nodes.len());
                    b.push(kind.clone());
                }
            }
        }
        for (i, kind) in self.nodes.iter().enumerate() {
            if let NodeKind::Fun(f, kids) = kind {
                let new_kids = kids.iter().map(|&k| map[k]).collect();
                b.nodes[base + i] = NodeKind::Fun(f.clone(), new_kids);
            }
        }
        b.finish(map[self.root])
    }

    pub(crate) fn reachable(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            if seen[id] {
                continue;
            }
            seen[id] = true;
            out.push(id);
            if let NodeKind::Fun(_, kids) = &self.nodes[id] {
                for &k in kids {
                    stack.push(k);
                }
            }
        }
        out
    }

    /// The set of variables occurring in the term.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for id in self.reachable() {
            if let NodeKind::Var(x) = &self.nodes[id] {
                out.insert(x.clone());
            }
        }
        out
    }

    /// True when the unfolding is a finite tree (no cycle is reachable).
    pub fn is_finite(&self) -> bool {
        // Colours: 0 unvisited, 1 on stack, 2 done.
        fn dfs(t: &Term, id: NodeId, colour: &mut [u8]) -> bool {
            match colour[id] {
                1 => return false,
                2 => return true,
                _ => {}
            }
            colour[id] = 1;
            if let NodeKind::Fun(_, kids) = &t.nodes[id] {
                for &k in kids {
                    if !dfs(t, k, colour) {
                        return false;
                    }
                }
            }
            colour[id] = 2;
            true
        }
        let mut colour = vec![0u8; self.nodes.len()];
        dfs(self, self.root, &mut colour)
    }

    /// Depth of a finite term, `None` for infinite ones.
    pub fn finite_depth(&self) -> Option<u32> {
        if !self.is_finite() {
            return None;
        }
        fn go(t: &Term, id: NodeId) -> u32 {
            match &t.nodes[id] {
                NodeKind::Var(_) => 0,
                NodeKind::Fun(_, kids) => kids.iter().map(|&k| go(t, k) + 1).max().unwrap_or(0),
            }
        }
        Some(go(self, self.root))
    }

    /// Least `|p|` with `self(p) != other(p)`, `None` when the unfoldings
    /// are identical. Decided by bisimulation on the product graph.
    pub fn first_difference(&self, other: &Term) -> Option<u32> {
        let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
        let mut queue: VecDeque<(NodeId, NodeId, u32)> = VecDeque::new();
        queue.push_back((self.root, other.root, 0));
        while let Some((a, b, d)) = queue.pop_front() {
            if !seen.insert((a, b)) {
                continue;
            }
            match (&self.nodes[a], &other.nodes[b]) {
                (NodeKind::Var(x), NodeKind::Var(y)) => {
                    if x != y {
                        return Some(d);
                    }
                }
                (NodeKind::Fun(f, fk), NodeKind::Fun(g, gk)) => {
                    if f != g || fk.len() != gk.len() {
                        return Some(d);
                    }
                    for (&ka, &kb) in fk.iter().zip(gk.iter()) {
                        queue.push_back((ka, kb, d + 1));
                    }
                }
                _ => return Some(d),
            }
        }
        None
    }

    /// Equality of infinite unfoldings.
    pub fn bisim_equal(&self, other: &Term) -> bool {
        self.first_difference(other).is_none()
    }

    /// The metric `d(s, t)`: 0 when bisimilar, otherwise `2^(-k)` for the
    /// least depth `k` of a difference. `probe_depth` is ignored whenever
    /// bisimulation decides equality, which it always does on finite and
    /// rational terms.
    pub fn metric_distance(&self, other: &Term, _probe_depth: u32) -> f64 {
        match self.first_difference(other) {
            None => 0.0,
            Some(k) => 2f64.powi(-(k as i32)),
        }
    }

    /// True when the unfoldings agree on all positions of length < `d`...
    /// more precisely on every position of length at most `d - 1`; depth 0
    /// means no requirement.
    pub fn agrees_to_depth(&self, other: &Term, d: u32) -> bool {
        match self.first_difference(other) {
            None => true,
            Some(k) => k >= d,
        }
    }

    /// Renders the term, cutting every branch at depth `d` with `...`.
    pub fn display_truncated(&self, d: u32) -> String {
        fn go(t: &Term, id: NodeId, d: u32, out: &mut String) {
            match &t.nodes[id] {
                NodeKind::Var(x) => out.push_str(x),
                NodeKind::Fun(f, kids) => {
                    out.push_str(f);
                    if !kids.is_empty() {
                        out.push('(');
                        for (i, &k) in kids.iter().enumerate() {
                            if i > 0 {
                                out.push_str(", ");
                            }
                            if d == 0 {
                                out.push_str("...");
                            } else {
                                go(t, k, d - 1, out);
                            }
                        }
                        out.push(')');
                    }
                }
            }
        }
        let mut s = String::new();
        go(self, self.root, d, &mut s);
        s
    }

    /// True when the two positions address the same graph node, i.e. the
    /// same instance of a shared or cyclic subterm. Stronger than
    /// bisimilarity of the subterms.
    pub fn same_subgraph(&self, p: &Position, q: &Position) -> bool {
        match (self.node_at(p), self.node_at(q)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// Redirects every occurrence of the variable `marker` to the root,
    /// closing the term into a cycle. Used to rebuild rational terms after
    /// developing one period of a redex family.
    pub(crate) fn tie_knot(&self, marker: &str) -> Term {
        let mut b = TermBuilder::new();
        let base = 0usize;
        for kind in self.nodes.iter() {
            b.push(kind.clone());
        }
        let root = base + self.root;
        for id in 0..b.nodes.len() {
            if let NodeKind::Fun(f, kids) = b.nodes[id].clone() {
                let new_kids: Vec<NodeId> = kids
                    .iter()
                    .map(|&k| match &b.nodes[k] {
                        NodeKind::Var(x) if x == marker => root,
                        _ => k,
                    })
                    .collect();
                b.nodes[id] = NodeKind::Fun(f, new_kids);
            }
        }
        if let NodeKind::Var(x) = &b.nodes[root] {
            debug_assert!(x != marker, "marker at the root would be unguarded");
        }
        b.finish(root)
    }

    /// Parses a term. Identifiers matching `[wxyz][0-9']*` are variables;
    /// `rec name = body; ...` introduces rational terms, with the first
    /// equation as entry point.
    pub fn parse(input: &str) -> Result<Term, TermError> {
        Term::parse_with(input, &default_var_policy)
    }

    pub fn parse_with(input: &str, is_var: &dyn Fn(&str) -> bool) -> Result<Term, TermError> {
        parse_term(input, is_var)
    }
}

/// Default variable convention: `x`, `y`, `z`, `w` optionally followed by
/// digits or primes.
pub fn default_var_policy(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some('x') | Some('y') | Some('z') | Some('w') => {
            chars.all(|c| c.is_ascii_digit() || c == '\'')
        }
        _ => false,
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.bisim_equal(other)
    }
}

impl Eq for Term {}

/// A finite map from variables to terms; application is capture-free
/// (first-order terms have no binders).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Substitution(pub BTreeMap<String, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn bind(mut self, x: &str, t: Term) -> Self {
        self.0.insert(x.to_string(), t);
        self
    }

    pub fn get(&self, x: &str) -> Option<&Term> {
        self.0.get(x)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A term over the signature extended with a single hole.
#[derive(Clone, Debug)]
pub struct Context {
    term: Term,
    hole: Position,
}

pub const HOLE: &str = "[]";

fn is_hole(kind: &NodeKind) -> bool {
    match kind {
        NodeKind::Var(x) => x == HOLE,
        NodeKind::Fun(f, kids) => f == HOLE && kids.is_empty(),
    }
}

impl Context {
    /// Builds a context from a term containing exactly one `[]` occurrence.
    pub fn new(term: Term) -> Result<Context, TermError> {
        let hole = Context::sole_hole_position(&term)?;
        Ok(Context { term, hole })
    }

    /// Walks for hole occurrences, counting at most two; a hole reachable
    /// through a cycle occurs infinitely often and is rejected the same
    /// way as a duplicate.
    fn sole_hole_position(term: &Term) -> Result<Position, TermError> {
        fn walk(
            t: &Term,
            id: NodeId,
            at: &Position,
            on_path: &mut Vec<NodeId>,
            found: &mut Vec<Position>,
        ) {
            if found.len() > 1 {
                return;
            }
            if is_hole(t.node(id)) {
                found.push(at.clone());
                return;
            }
            if let NodeKind::Fun(_, kids) = t.node(id) {
                if on_path.contains(&id) {
                    return; // revisiting a cycle cannot add a first hole
                }
                on_path.push(id);
                for (i, &k) in kids.iter().enumerate() {
                    walk(t, k, &at.child(i as u32 + 1), on_path, found);
                }
                on_path.pop();
            }
        }
        // First pass: any hole node reachable on or below a cycle means
        // infinitely many occurrences.
        let mut found = Vec::new();
        walk(
            term,
            term.root,
            &Position::root(),
            &mut Vec::new(),
            &mut found,
        );
        if found.len() == 1 {
            // Guard against a hole hidden behind a cycle: in that case the
            // hole node is reachable from a node that reaches itself.
            if !term.is_finite() {
                let hole_reachable_from_cycle = term.reachable().iter().any(|&id| {
                    matches!(term.node(id), NodeKind::Fun(_, _))
                        && Self::reaches(term, id, id, true)
                        && Self::reaches_hole(term, id)
                });
                if hole_reachable_from_cycle {
                    return Err(TermError::HoleCount(2));
                }
            }
            return Ok(found.pop().unwrap());
        }
        Err(TermError::HoleCount(found.len().min(2)))
    }

    fn reaches(t: &Term, from: NodeId, to: NodeId, strict: bool) -> bool {
        let mut seen = vec![false; t.reachable().len().max(from.max(to) + 1)];
        let mut stack: Vec<NodeId> = if strict {
            match t.node(from) {
                NodeKind::Fun(_, kids) => kids.clone(),
                NodeKind::Var(_) => Vec::new(),
            }
        } else {
            vec![from]
        };
        while let Some(id) = stack.pop() {
            if id == to {
                return true;
            }
            if seen.get(id).copied().unwrap_or(false) {
                continue;
            }
            if id >= seen.len() {
                seen.resize(id + 1, false);
            }
            seen[id] = true;
            if let NodeKind::Fun(_, kids) = t.node(id) {
                stack.extend(kids.iter().copied());
            }
        }
        false
    }

    fn reaches_hole(t: &Term, from: NodeId) -> bool {
        let mut seen: Vec<bool> = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            if id >= seen.len() {
                seen.resize(id + 1, false);
            }
            if seen[id] {
                continue;
            }
            seen[id] = true;
            if is_hole(t.node(id)) {
                return true;
            }
            if let NodeKind::Fun(_, kids) = t.node(id) {
                stack.extend(kids.iter().copied());
            }
        }
        false
    }

    pub fn hole_position(&self) -> &Position {
        &self.hole
    }

    /// `C[s]`.
    pub fn fill(&self, s: &Term) -> Term {
        self.term
            .replace_at(s, &self.hole)
            .expect("hole position is valid")
    }
}

// ---------------------------------------------------------------------------
// graph building

pub(crate) struct TermBuilder {
    nodes: Vec<NodeKind>,
}

impl TermBuilder {
    pub(crate) fn new() -> Self {
        TermBuilder { nodes: Vec::new() }
    }

    pub(crate) fn push(&mut self, kind: NodeKind) -> NodeId {
        self.nodes.push(kind);
        self.nodes.len() - 1
    }

    /// Imports the whole node table of `t`, returning the new id of its root.
    pub(crate) fn import(&mut self, t: &Term) -> NodeId {
        let map = self.import_map(t);
        map[t.root]
    }

    fn import_map(&mut self, t: &Term) -> Vec<NodeId> {
        let base = self.nodes.len();
        for kind in t.nodes.iter() {
            let shifted = match kind {
                NodeKind::Var(x) => NodeKind::Var(x.clone()),
                NodeKind::Fun(f, kids) => {
                    NodeKind::Fun(f.clone(), kids.iter().map(|&k| k + base).collect())
                }
            };
            self.nodes.push(shifted);
        }
        (base..base + t.nodes.len()).collect()
    }

    /// Compacts to the nodes reachable from `root` and freezes the term.
    pub(crate) fn finish(self, root: NodeId) -> Term {
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        let mut order: Vec<NodeId> = Vec::new();
        let mut queue = VecDeque::new();
        queue.push_back(root);
        while let Some(id) = queue.pop_front() {
            if remap.contains_key(&id) {
                continue;
            }
            remap.insert(id, order.len());
            order.push(id);
            if let NodeKind::Fun(_, kids) = &self.nodes[id] {
                for &k in kids {
                    if !remap.contains_key(&k) {
                        queue.push_back(k);
                    }
                }
            }
        }
        let nodes: Vec<NodeKind> = order
            .iter()
            .map(|&old| match &self.nodes[old] {
                NodeKind::Var(x) => NodeKind::Var(x.clone()),
                NodeKind::Fun(f, kids) => {
                    NodeKind::Fun(f.clone(), kids.iter().map(|k| remap[k]).collect())
                }
            })
            .collect();
        Term {
            nodes: Arc::new(nodes),
            root: remap[&root],
        }
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Clone)]
enum Ast {
    Leaf(String),
    App(String, Vec<Ast>),
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Parser {
            input: input.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<(), TermError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(TermError::Parse(format!(
                "expected `{}` at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<String, TermError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.input.len() {
            let c = self.input[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            // allow the hole symbol
            if self.input[self.pos..].starts_with(b"[]") {
                self.pos += 2;
                return Ok(HOLE.to_string());
            }
            return Err(TermError::Parse(format!(
                "expected identifier at byte {start}"
            )));
        }
        Ok(std::str::from_utf8(&self.input[start..self.pos])
            .unwrap()
            .to_string())
    }

    fn ast(&mut self) -> Result<Ast, TermError> {
        let name = self.ident()?;
        if self.peek() == Some(b'(') {
            self.eat(b'(')?;
            let mut args = Vec::new();
            if self.peek() != Some(b')') {
                loop {
                    args.push(self.ast()?);
                    if self.peek() == Some(b',') {
                        self.eat(b',')?;
                    } else {
                        break;
                    }
                }
            }
            self.eat(b')')?;
            Ok(Ast::App(name, args))
        } else {
            Ok(Ast::Leaf(name))
        }
    }

    fn done(&mut self) -> bool {
        self.peek().is_none()
    }
}

fn parse_term(input: &str, is_var: &dyn Fn(&str) -> bool) -> Result<Term, TermError> {
    let input = input.trim();
    if input.starts_with("rec ") || input.starts_with("rec\t") {
        parse_rec(input, is_var)
    } else {
        let mut p = Parser::new(input);
        let ast = p.ast()?;
        if !p.done() {
            return Err(TermError::Parse(format!(
                "trailing input at byte {}",
                p.pos
            )));
        }
        let defs: BTreeMap<String, usize> = BTreeMap::new();
        let mut b = TermBuilder::new();
        let root = build_ast(&ast, &defs, is_var, &mut b)?;
        Ok(b.finish(root))
    }
}

fn parse_rec(input: &str, is_var: &dyn Fn(&str) -> bool) -> Result<Term, TermError> {
    let mut defs: Vec<(String, Ast)> = Vec::new();
    for part in input.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let rest = part
            .strip_prefix("rec")
            .ok_or_else(|| TermError::Parse("each equation must start with `rec`".into()))?;
        let mut p = Parser::new(rest);
        let name = p.ident()?;
        p.eat(b'=')?;
        let body = p.ast()?;
        if !p.done() {
            return Err(TermError::Parse("trailing input after equation".into()));
        }
        defs.push((name, body));
    }
    if defs.is_empty() {
        return Err(TermError::Parse("empty rec system".into()));
    }

    // First pass: reserve a builder slot per definition whose body is a
    // function application. Reference-only bodies (`rec a = b`) are resolved
    // by chasing, rejecting unguarded reference cycles.
    let names: BTreeMap<String, usize> = defs
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (n.clone(), i))
        .collect();
    if names.len() != defs.len() {
        return Err(TermError::Parse("duplicate rec name".into()));
    }

    // Resolve each def index to the index of a def with a Fun/Leaf-nonref body.
    fn chase(
        i: usize,
        defs: &[(String, Ast)],
        names: &BTreeMap<String, usize>,
        is_var: &dyn Fn(&str) -> bool,
        visiting: &mut Vec<usize>,
    ) -> Result<usize, TermError> {
        if visiting.contains(&i) {
            return Err(TermError::Unguarded(defs[i].0.clone()));
        }
        match &defs[i].1 {
            Ast::Leaf(n) if names.contains_key(n) && !is_var(n) => {
                visiting.push(i);
                let r = chase(names[n], defs, names, is_var, visiting);
                visiting.pop();
                r
            }
            _ => Ok(i),
        }
    }

    let mut resolved = Vec::with_capacity(defs.len());
    for i in 0..defs.len() {
        resolved.push(chase(i, &defs, &names, is_var, &mut Vec::new())?);
    }

    let mut b = TermBuilder::new();
    // Reserve one placeholder node per resolved definition.
    let mut slot: BTreeMap<usize, NodeId> = BTreeMap::new();
    for &r in resolved.iter() {
        slot.entry(r)
            .or_insert_with(|| b.push(NodeKind::Var("#".into())));
    }
    let def_node: BTreeMap<String, NodeId> = names
        .iter()
        .map(|(n, &i)| (n.clone(), slot[&resolved[i]]))
        .collect();

    for (&def_ix, &node) in &slot {
        let kind = build_rec_body(&defs[def_ix].1, &def_node, is_var, &mut b)?;
        b.nodes[node] = kind;
    }
    let entry = slot[&resolved[0]];
    Ok(b.finish(entry))
}

fn build_rec_body(
    ast: &Ast,
    def_node: &BTreeMap<String, NodeId>,
    is_var: &dyn Fn(&str) -> bool,
    b: &mut TermBuilder,
) -> Result<NodeKind, TermError> {
    match ast {
        Ast::Leaf(n) => {
            if def_node.contains_key(n) && !is_var(n) {
                unreachable!("reference bodies are chased before building");
            } else if is_var(n) {
                Ok(NodeKind::Var(n.clone()))
            } else {
                Ok(NodeKind::Fun(n.clone(), vec![]))
            }
        }
        Ast::App(f, args) => {
            let mut kids = Vec::new();
            for a in args {
                kids.push(build_rec_child(a, def_node, is_var, b)?);
            }
            Ok(NodeKind::Fun(f.clone(), kids))
        }
    }
}

fn build_rec_child(
    ast: &Ast,
    def_node: &BTreeMap<String, NodeId>,
    is_var: &dyn Fn(&str) -> bool,
    b: &mut TermBuilder,
) -> Result<NodeId, TermError> {
    match ast {
        Ast::Leaf(n) => {
            if let Some(&id) = def_node.get(n) {
                if !is_var(n) {
                    return Ok(id);
                }
            }
            if is_var(n) {
                Ok(b.push(NodeKind::Var(n.clone())))
            } else {
                Ok(b.push(NodeKind::Fun(n.clone(), vec![])))
            }
        }
        Ast::App(_, _) => {
            let kind = build_rec_body(ast, def_node, is_var, b)?;
            Ok(b.push(kind))
        }
    }
}

fn build_ast(
    ast: &Ast,
    defs: &BTreeMap<String, usize>,
    is_var: &dyn Fn(&str) -> bool,
    b: &mut TermBuilder,
) -> Result<NodeId, TermError> {
    match ast {
        Ast::Leaf(n) => {
            if is_var(n) && !defs.contains_key(n) {
                Ok(b.push(NodeKind::Var(n.clone())))
            } else {
                Ok(b.push(NodeKind::Fun(n.clone(), vec![])))
            }
        }
        Ast::App(f, args) => {
            let mut kids = Vec::new();
            for a in args {
                kids.push(build_ast(a, defs, is_var, b)?);
            }
            Ok(b.push(NodeKind::Fun(f.clone(), kids)))
        }
    }
}

// ---------------------------------------------------------------------------
// display

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render(self))
    }
}

/// Renders finite terms plainly and rational ones as a `rec` system,
/// naming exactly the targets of DFS back edges.
fn render(t: &Term) -> String {
    // Find back-edge targets with an explicit DFS.
    let mut colour: HashMap<NodeId, u8> = HashMap::new();
    let mut named: Vec<NodeId> = Vec::new();
    fn dfs(t: &Term, id: NodeId, colour: &mut HashMap<NodeId, u8>, named: &mut Vec<NodeId>) {
        colour.insert(id, 1);
        if let NodeKind::Fun(_, kids) = t.node(id) {
            for &k in kids {
                match colour.get(&k) {
                    Some(1) => {
                        if !named.contains(&k) {
                            named.push(k);
                        }
                    }
                    Some(2) => {}
                    _ => dfs(t, k, colour, named),
                }
            }
        }
        colour.insert(id, 2);
    }
    dfs(t, t.root, &mut colour, &mut named);

    if named.is_empty() {
        let mut s = String::new();
        render_node(t, t.root, &BTreeMap::new(), None, &mut s);
        return s;
    }

    if !named.contains(&t.root) {
        named.insert(0, t.root);
    }
    let name_of: BTreeMap<NodeId, String> = named
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, format!("r{i}")))
        .collect();
    let mut parts = Vec::new();
    for &id in &named {
        let mut s = String::new();
        render_node(t, id, &name_of, Some(id), &mut s);
        parts.push(format!("rec {} = {}", name_of[&id], s));
    }
    parts.join("; ")
}

fn render_node(
    t: &Term,
    id: NodeId,
    name_of: &BTreeMap<NodeId, String>,
    defining: Option<NodeId>,
    out: &mut String,
) {
    if defining != Some(id) {
        if let Some(name) = name_of.get(&id) {
            out.push_str(name);
            return;
        }
    }
    match t.node(id) {
        NodeKind::Var(x) => out.push_str(x),
        NodeKind::Fun(f, kids) => {
            out.push_str(f);
            if !kids.is_empty() {
                out.push('(');
                for (i, &k) in kids.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    render_node(t, k, name_of, None, out);
                }
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        Term::parse(s).unwrap()
    }

    #[test]
    fn positions_of_leaf_and_small_tree() {
        assert_eq!(t("x").positions_up_to(5), vec![Position::root()]);
        let ps = t("f(a, b)").positions_up_to(1);
        assert_eq!(
            ps,
            vec![
                Position::root(),
                Position::from_slice(&[1]),
                Position::from_slice(&[2])
            ]
        );
    }

    #[test]
    fn positions_of_rational_term() {
        // rec s = f(f(s, b), a), unfolded twice by hand: {e, 1, 2, 11, 12}.
        let s = t("rec s = f(f(s, b), a)");
        let ps = s.positions_up_to(2);
        let expect: Vec<Position> = vec![
            Position::root(),
            Position::from_slice(&[1]),
            Position::from_slice(&[2]),
            Position::from_slice(&[1, 1]),
            Position::from_slice(&[1, 2]),
        ];
        assert_eq!(ps, expect);
    }

    #[test]
    fn subterm_basic_and_identity() {
        assert_eq!(
            t("f(a, b)")
                .subterm_at(&Position::from_slice(&[2]))
                .unwrap(),
            t("b")
        );
        let u = t("f(g(x), c)");
        assert_eq!(u.subterm_at(&Position::root()).unwrap(), u);
        assert_eq!(
            u.subterm_at(&Position::from_slice(&[3])),
            Err(TermError::InvalidPosition(Position::from_slice(&[3])))
        );
    }

    #[test]
    fn subterm_of_rational_reenters_cycle() {
        let s = t("rec s = f(f(s, b), a)");
        let sub = s.subterm_at(&Position::from_slice(&[1, 1])).unwrap();
        assert!(sub.bisim_equal(&s));
    }

    #[test]
    fn replace_basic_and_roundtrip() {
        assert_eq!(
            t("f(a, b)")
                .replace_at(&t("c"), &Position::from_slice(&[1]))
                .unwrap(),
            t("f(c, b)")
        );
        let s = t("rec s = f(f(s, b), a)");
        for p in s.positions_up_to(3) {
            let sub = s.subterm_at(&p).unwrap();
            assert!(s.replace_at(&sub, &p).unwrap().bisim_equal(&s), "at {p}");
        }
    }

    #[test]
    fn replace_in_spiral_unfolds_prefix() {
        let spiral = t("rec t = g(t)");
        let got = spiral
            .replace_at(&t("a"), &Position::from_slice(&[1, 1, 1]))
            .unwrap();
        assert_eq!(got, t("g(g(g(a)))"));
        assert!(got.is_finite());
    }

    #[test]
    fn subst_basic() {
        let sub = Substitution::new().bind("x", t("a"));
        assert_eq!(t("f(x, x)").apply_subst(&sub), t("f(a, a)"));
        let id = Substitution::new();
        let u = t("f(g(y), c)");
        assert_eq!(u.apply_subst(&id), u);
    }

    #[test]
    fn subst_with_rational_binding() {
        let spiral = t("rec t = g(t)");
        let sub = Substitution::new().bind("x", spiral.clone());
        let got = t("f(x, b)").apply_subst(&sub);
        assert_eq!(got.subterm_at(&Position::from_slice(&[1])).unwrap(), spiral);
        // Truncations match hand unfolding.
        assert!(got.agrees_to_depth(&t("f(g(g(g(g(y)))), b)"), 4));
        assert!(!got.is_finite());
    }

    #[test]
    fn metric_examples() {
        let u = t("f(a, b)");
        assert_eq!(u.metric_distance(&u, 8), 0.0);
        assert_eq!(t("f(a, b)").metric_distance(&t("f(a, c)"), 8), 0.5);
        let g_spiral = t("rec t = g(t)");
        assert_eq!(g_spiral.metric_distance(&t("g(g(a))"), 8), 0.25);
    }

    #[test]
    fn bisim_examples() {
        let t1 = t("rec t1 = f(t1, a)");
        let u = t("rec u = f(f(u, a), a)");
        assert!(t1.bisim_equal(&u));
        let t2 = t("rec t2 = f(t2, b)");
        assert!(!t1.bisim_equal(&t2));
        assert!(t("a").bisim_equal(&t("a")));
    }

    #[test]
    fn unguarded_rejected() {
        assert!(matches!(
            Term::parse("rec a = b; rec b = a"),
            Err(TermError::Unguarded(_))
        ));
        assert!(matches!(
            Term::parse("rec a = a"),
            Err(TermError::Unguarded(_))
        ));
    }

    #[test]
    fn display_roundtrip() {
        for s in [
            "f(a, g(y))",
            "rec r0 = f(f(r0, b), a)",
            "rec r0 = g(r0)",
            "rec r0 = f(r1, a); rec r1 = g(r0)",
        ] {
            let parsed = t(s);
            let shown = parsed.to_string();
            assert!(t(&shown).bisim_equal(&parsed), "{s} -> {shown}");
        }
    }

    #[test]
    fn context_fill() {
        let c = Context::new(t("f([], b)")).unwrap();
        assert_eq!(c.fill(&t("a")), t("f(a, b)"));
        assert!(Context::new(t("f(a, b)")).is_err());
    }

    #[test]
    fn truncation_coherence() {
        let s = t("rec s = f(f(s, b), a)");
        for d in 0..5 {
            let small = s.positions_up_to(d);
            let big = s.positions_up_to(d + 1);
            for p in &small {
                assert!(big.contains(p));
            }
        }
    }
}
