//! Redex clusters, complete developments, the full multi-redex and the
//! triangle construction, and the effective orthogonalization algorithm.
//!
//! A cluster is a connected component of the overlap relation on redexes.
//! Y-clusters (containing parallel redexes) and infinite I-clusters are
//! trivial: contracting any member leaves the term unchanged, so they can
//! be dropped from multi-steps. The remaining finite I-clusters drive the
//! triangle construction. Orthogonalization replaces overlapping redexes
//! by equivalent ones outside-in until the image is a multi-redex.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::term::{Position, Term};
use crate::trs::{match_at, overlap, rewrite_at, MultiRedex, OrthoClass, Redex, Trs, TrsError};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("{0}")]
    Trs(#[from] TrsError),
    #[error("{0}")]
    Term(#[from] crate::term::TermError),
    #[error("system is not weakly orthogonal")]
    NotWeaklyOrthogonal,
    #[error("collapsing rule `{0}` present; the construction needs non-collapsing rules")]
    CollapsingPresent(String),
    #[error("developing this infinite redex family would not converge (collapsing rule `{0}`)")]
    WouldNotConverge(String),
    #[error("cluster is not trivial")]
    NotTrivial,
    #[error("invalid periodic family: {0}")]
    BadFamily(String),
    #[error("development exceeded {0} steps")]
    DevelopmentBudget(usize),
    #[error("tracked position {0} lies inside a contracted pattern")]
    TrackedInsidePattern(Position),
    #[error("orthogonalization got stuck: no admissible representative")]
    NoRepresentative,
    #[error("a full multi-redex mixing finite redexes with infinite families is unsupported")]
    MixedFullMultiRedex,
}

// ---------------------------------------------------------------------------
// redex sets with periodic families

/// An infinite family of redexes on a rational term: instances at
/// `first.root . loop_path^k` for all k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicFamily {
    pub first: Redex,
    pub loop_path: Position,
}

impl PeriodicFamily {
    pub fn new(first: Redex, loop_path: Position) -> PeriodicFamily {
        PeriodicFamily { first, loop_path }
    }

    pub fn instance(&self, k: usize) -> Redex {
        let mut root = self.first.root.clone();
        for _ in 0..k {
            root = root.concat(&self.loop_path);
        }
        Redex::new(root, self.first.rule)
    }

    /// Checks that the family really lives on a cycle of the term graph and
    /// that its generator matches.
    pub fn validate(&self, trs: &Trs, t: &Term) -> Result<(), ClusterError> {
        if self.loop_path.is_empty() {
            return Err(ClusterError::BadFamily("empty loop path".into()));
        }
        let back = self.first.root.concat(&self.loop_path);
        if !t.same_subgraph(&self.first.root, &back) {
            return Err(ClusterError::BadFamily(format!(
                "no cycle from {} via {}",
                self.first.root, self.loop_path
            )));
        }
        let rule = trs.rule(self.first.rule);
        if match_at(t, &self.first.root, &rule.lhs).is_none() {
            return Err(ClusterError::BadFamily(format!(
                "generator {} does not match",
                rule.name
            )));
        }
        Ok(())
    }

    /// True when the root lies on the infinite spine
    /// `first.root . loop_path^w`.
    fn on_spine(&self, p: &Position) -> bool {
        if p.len() < self.first.root.len() {
            return p.is_prefix_of(&self.first.root);
        }
        let mut spine = self.first.root.clone();
        while spine.len() < p.len() {
            spine = spine.concat(&self.loop_path);
        }
        p.is_prefix_of(&spine)
    }
}

/// A possibly infinite set of redexes: explicit ones plus periodic families.
#[derive(Clone, Debug, Default)]
pub struct RedexSet {
    pub finite: Vec<Redex>,
    pub families: Vec<PeriodicFamily>,
}

impl RedexSet {
    pub fn finite(redexes: Vec<Redex>) -> RedexSet {
        RedexSet {
            finite: redexes,
            families: Vec::new(),
        }
    }

    pub fn family(f: PeriodicFamily) -> RedexSet {
        RedexSet {
            finite: Vec::new(),
            families: vec![f],
        }
    }
}

// ---------------------------------------------------------------------------
// clusters

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterKind {
    I,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extent {
    Finite(usize),
    Infinite,
}

#[derive(Clone, Debug)]
pub struct Cluster {
    /// Member redexes; for an infinite family chain these are the first
    /// representatives only.
    pub redexes: Vec<Redex>,
    /// The family generating the infinite part, when present.
    pub family: Option<PeriodicFamily>,
    pub kind: ClusterKind,
    pub extent: Extent,
    /// Least position overlapped by the cluster.
    pub root: Position,
    /// For I-clusters: the chain of member roots (representatives when
    /// infinite).
    pub root_path: Option<Vec<Position>>,
}

impl Cluster {
    pub fn size_label(&self) -> String {
        match self.extent {
            Extent::Finite(n) => n.to_string(),
            Extent::Infinite => "omega".into(),
        }
    }
}

/// A trivial cluster is a Y-cluster or an infinite I-cluster.
pub fn is_trivial(c: &Cluster) -> bool {
    c.kind == ClusterKind::Y || c.extent == Extent::Infinite
}

/// Connected components of the overlap relation over `W`, classified.
pub fn clusters(trs: &Trs, t: &Term, w: &RedexSet) -> Result<Vec<Cluster>, ClusterError> {
    for f in &w.families {
        f.validate(trs, t)?;
    }
    let finite = &w.finite;

    // Union-find over the finite redexes.
    let mut parent: Vec<usize> = (0..finite.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..finite.len() {
        for j in i + 1..finite.len() {
            if overlap(trs, &finite[i], &finite[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }

    // Families with consecutive overlap form infinite chains; absorb finite
    // redexes overlapping any instance.
    let mut absorbed: Vec<Option<usize>> = vec![None; finite.len()];
    let mut chains: Vec<(PeriodicFamily, Vec<usize>)> = Vec::new();
    let mut lone_families: Vec<PeriodicFamily> = Vec::new();
    for f in &w.families {
        let consecutive = overlap(trs, &f.instance(0), &f.instance(1));
        if !consecutive {
            lone_families.push(f.clone());
            continue;
        }
        let mut members = Vec::new();
        let max_finite_depth = finite
            .iter()
            .map(|r| r.root.len() as u32 + trs.rule(r.rule).lhs_depth())
            .max()
            .unwrap_or(0);
        for (i, r) in finite.iter().enumerate() {
            let mut k = 0usize;
            loop {
                let inst = f.instance(k);
                if inst.root.len() as u32 > max_finite_depth + 1 {
                    break;
                }
                if overlap(trs, r, &inst) {
                    members.push(i);
                    break;
                }
                k += 1;
            }
        }
        for &i in &members {
            absorbed[i] = Some(chains.len());
        }
        chains.push((f.clone(), members));
    }

    let mut out = Vec::new();

    // Finite components not absorbed into a chain.
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..finite.len() {
        if absorbed[i].is_none() {
            let r = find(&mut parent, i);
            comps.entry(r).or_default().push(i);
        }
    }
    for (_, ixs) in comps {
        let members: Vec<Redex> = ixs.iter().map(|&i| finite[i].clone()).collect();
        out.push(classify_finite_cluster(trs, members));
    }

    for (f, member_ixs) in chains {
        let mut members: Vec<Redex> = vec![f.instance(0), f.instance(1), f.instance(2)];
        let mut kind = ClusterKind::I;
        for &i in &member_ixs {
            let r = &finite[i];
            if !f.on_spine(&r.root) {
                kind = ClusterKind::Y;
            }
            members.push(r.clone());
        }
        // Parallel pair among absorbed finite roots.
        for (a, b) in pairs(&member_ixs) {
            if finite[a].root.is_disjoint(&finite[b].root) {
                kind = ClusterKind::Y;
            }
        }
        members.sort();
        members.dedup();
        let root = least_pattern_position(trs, &members);
        let root_path = if kind == ClusterKind::I {
            let mut roots: Vec<Position> = members.iter().map(|r| r.root.clone()).collect();
            roots.sort_by(position_order);
            Some(roots)
        } else {
            None
        };
        out.push(Cluster {
            redexes: members,
            family: Some(f),
            kind,
            extent: Extent::Infinite,
            root,
            root_path,
        });
    }

    // Families without consecutive overlap: infinitely many singleton
    // clusters; report the generator as a periodic singleton.
    for f in lone_families {
        let first = f.instance(0);
        out.push(Cluster {
            redexes: vec![first.clone()],
            family: Some(f),
            kind: ClusterKind::I,
            extent: Extent::Finite(1),
            root: first.root,
            root_path: None,
        });
    }

    out.sort_by(|a, b| position_order(&a.root, &b.root));
    Ok(out)
}

fn pairs(ixs: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..ixs.len() {
        for j in i + 1..ixs.len() {
            out.push((ixs[i], ixs[j]));
        }
    }
    out
}

fn classify_finite_cluster(trs: &Trs, members: Vec<Redex>) -> Cluster {
    let mut kind = ClusterKind::I;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            if members[i].root.is_disjoint(&members[j].root) {
                kind = ClusterKind::Y;
            }
        }
    }
    let root = least_pattern_position(trs, &members);
    let root_path = if kind == ClusterKind::I {
        let mut roots: Vec<Position> = members.iter().map(|r| r.root.clone()).collect();
        roots.sort_by(position_order);
        roots.dedup();
        Some(roots)
    } else {
        None
    };
    let extent = Extent::Finite(members.len());
    Cluster {
        redexes: members,
        family: None,
        kind,
        extent,
        root,
        root_path,
    }
}

fn least_pattern_position(trs: &Trs, members: &[Redex]) -> Position {
    members
        .iter()
        .flat_map(|r| r.pattern(trs))
        .min_by(position_order)
        .unwrap_or_default()
}

/// Shallow-first, then left-to-right.
pub fn position_order(a: &Position, b: &Position) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0))
}

fn redex_order(a: &Redex, b: &Redex) -> std::cmp::Ordering {
    position_order(&a.root, &b.root).then(a.rule.cmp(&b.rule))
}

// ---------------------------------------------------------------------------
// developments

/// Descendants of `p` across a step contracting `rule` at `q`. Returns
/// `None` when `p` is a pattern position of the step.
fn descendants(trs: &Trs, p: &Position, q: &Position, rule: usize) -> Option<Vec<Position>> {
    if !q.is_prefix_of(p) {
        return Some(vec![p.clone()]);
    }
    let rest = p.strip_prefix(q).expect("prefix");
    let r = trs.rule(rule);
    // The longest lhs variable position that prefixes `rest`.
    for (vpos, vname) in r.var_positions() {
        if let Some(suffix) = rest.strip_prefix(&vpos) {
            return Some(
                r.rhs_var_positions(&vname)
                    .into_iter()
                    .map(|rpos| q.concat(&rpos).concat(&suffix))
                    .collect(),
            );
        }
    }
    if rest.len() > r.lhs_depth() as usize {
        // Below the pattern but not under a variable cannot happen for a
        // matching redex.
        return None;
    }
    None
}

const DEVELOP_BUDGET: usize = 1_000_000;

/// Contracts the multi-redex `to_contract` completely (outside-in by
/// default) while tracking the residuals of `tracked`.
pub fn develop_with_tracking(
    trs: &Trs,
    t: &Term,
    to_contract: &MultiRedex,
    tracked: &[Redex],
) -> Result<(Term, Vec<Vec<Redex>>), ClusterError> {
    develop_run(trs, t, to_contract, tracked, &mut pick_outermost)
}

fn pick_outermost(active: &[Redex]) -> usize {
    let mut best = 0;
    for i in 1..active.len() {
        if redex_order(&active[i], &active[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    best
}

pub(crate) fn develop_run(
    trs: &Trs,
    t: &Term,
    to_contract: &MultiRedex,
    tracked: &[Redex],
    pick: &mut dyn FnMut(&[Redex]) -> usize,
) -> Result<(Term, Vec<Vec<Redex>>), ClusterError> {
    let mut active: Vec<Redex> = to_contract.redexes().to_vec();
    let mut residuals: Vec<Vec<Redex>> = tracked.iter().map(|r| vec![r.clone()]).collect();
    let mut cur = t.clone();
    let mut steps = 0usize;
    while !active.is_empty() {
        if steps > DEVELOP_BUDGET {
            return Err(ClusterError::DevelopmentBudget(DEVELOP_BUDGET));
        }
        let ix = pick(&active);
        let step = active.swap_remove(ix);
        cur = rewrite_at(&cur, trs, &step)?;
        steps += 1;
        let relocate = |set: &mut Vec<Redex>| -> Result<(), ClusterError> {
            let mut next = Vec::with_capacity(set.len());
            for r in set.iter() {
                let descs = descendants(trs, &r.root, &step.root, step.rule)
                    .ok_or_else(|| ClusterError::TrackedInsidePattern(r.root.clone()))?;
                for d in descs {
                    next.push(Redex::new(d, r.rule));
                }
            }
            *set = next;
            Ok(())
        };
        relocate(&mut active)?;
        for set in residuals.iter_mut() {
            relocate(set)?;
        }
    }
    // Residual redexes must still match (they do in the labelled lift).
    for set in &residuals {
        for r in set {
            if match_at(&cur, &r.root, &trs.rule(r.rule).lhs).is_none() {
                return Err(ClusterError::Trs(TrsError::StaleRedex {
                    rule: trs.rule(r.rule).name.clone(),
                    pos: r.root.clone(),
                }));
            }
        }
    }
    Ok((cur, residuals))
}

/// The unique complete-development target of a finite multi-redex.
pub fn develop(trs: &Trs, t: &Term, u: &MultiRedex) -> Result<Term, ClusterError> {
    Ok(develop_with_tracking(trs, t, u, &[])?.0)
}

/// Residuals of `u` after the multi-step contracting `over`; `u ∪ over`
/// must be a multi-redex.
pub fn residual_multiredex(
    trs: &Trs,
    t: &Term,
    u: &[Redex],
    over: &MultiRedex,
) -> Result<Vec<Redex>, ClusterError> {
    let mut all: Vec<Redex> = u.to_vec();
    all.extend(over.redexes().iter().cloned());
    MultiRedex::new(trs, all)?;
    let (_, residuals) = develop_with_tracking(trs, t, over, u)?;
    let mut out: Vec<Redex> = residuals.into_iter().flatten().collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Develops every instance of a periodic family at once, closing the knot
/// behind one contracted period. The rules must be non-collapsing.
pub fn develop_family(trs: &Trs, t: &Term, f: &PeriodicFamily) -> Result<Term, ClusterError> {
    f.validate(trs, t)?;
    let rule = trs.rule(f.first.rule);
    if rule.is_collapsing() {
        return Err(ClusterError::WouldNotConverge(rule.name.clone()));
    }
    if overlap(trs, &f.instance(0), &f.instance(1)) {
        return Err(ClusterError::BadFamily(
            "consecutive instances overlap; not a multi-redex".into(),
        ));
    }
    const MARKER: &str = "zknot";
    let segment = t.subterm_at(&f.first.root)?;
    let cut = segment.replace_at(&Term::var(MARKER), &f.loop_path)?;
    let contracted = rewrite_at(&cut, trs, &Redex::new(Position::root(), f.first.rule))?;
    let has_marker = contracted.vars().contains(MARKER);
    let new_sub = if has_marker {
        contracted.tie_knot(MARKER)
    } else {
        contracted
    };
    Ok(t.replace_at(&new_sub, &f.first.root)?)
}

/// Contracts one member of a trivial cluster and reports whether the term
/// is unchanged (the trivial-cluster property, checked rather than
/// assumed).
pub fn trivial_cluster_step_is_identity(
    trs: &Trs,
    t: &Term,
    c: &Cluster,
) -> Result<bool, ClusterError> {
    if !is_trivial(c) {
        return Err(ClusterError::NotTrivial);
    }
    let mut all_identity = true;
    for r in &c.redexes {
        let stepped = rewrite_at(t, trs, r)?;
        all_identity &= stepped.bisim_equal(t);
    }
    Ok(all_identity)
}

// ---------------------------------------------------------------------------
// the full multi-redex and the triangle map

#[derive(Clone, Debug, Default)]
pub struct FullMultiRedex {
    pub finite: Vec<Redex>,
    pub families: Vec<PeriodicFamily>,
}

/// Union over clusters: nothing for trivial clusters, the greedy
/// outside-in tail-minimal selection for finite I-clusters.
pub fn full_multiredex(trs: &Trs, t: &Term, w: &RedexSet) -> Result<FullMultiRedex, ClusterError> {
    let cs = clusters(trs, t, w)?;
    let mut finite = Vec::new();
    let mut families = Vec::new();
    for c in cs {
        if is_trivial(&c) {
            continue;
        }
        match &c.family {
            Some(f) => families.push(f.clone()),
            None => finite.extend(select_full(trs, &c)),
        }
    }
    finite.sort();
    Ok(FullMultiRedex { finite, families })
}

/// Greedy selection in a finite I-cluster: repeatedly take a redex below
/// all selected ones with minimal tail (ties: leftmost root, then rule
/// order).
fn select_full(trs: &Trs, c: &Cluster) -> Vec<Redex> {
    // Positions of the cluster pattern comparable with every member root.
    let pattern: BTreeSet<Position> = c.redexes.iter().flat_map(|r| r.pattern(trs)).collect();
    let on_path = |p: &Position| {
        c.redexes
            .iter()
            .all(|r| p.is_prefix_of(&r.root) || r.root.is_prefix_of(p))
    };
    let tail = |r: &Redex| -> Position {
        r.pattern(trs)
            .into_iter()
            .filter(|p| pattern.contains(p) && on_path(p))
            .max_by(position_order)
            .unwrap_or_else(|| r.root.clone())
    };
    let below = |a: &Redex, b: &Redex| b.root.is_above(&a.root) && !overlap(trs, a, b);

    let mut selected: Vec<Redex> = Vec::new();
    loop {
        let mut cands: Vec<&Redex> = c
            .redexes
            .iter()
            .filter(|r| !selected.contains(r))
            .filter(|r| selected.iter().all(|s| below(r, s)))
            .collect();
        if cands.is_empty() {
            return selected;
        }
        cands.sort_by(|a, b| {
            position_order(&tail(a), &tail(b))
                .then_with(|| position_order(&a.root, &b.root))
                .then(a.rule.cmp(&b.rule))
        });
        selected.push(cands[0].clone());
    }
}

/// The triangle map target: develop the full multi-redex of `W` in `t`.
pub fn bullet(trs: &Trs, t: &Term, w: &RedexSet) -> Result<Term, ClusterError> {
    if classify_ok(trs) != Some(true) {
        return Err(ClusterError::NotWeaklyOrthogonal);
    }
    if let Some(r) = trs.rules.iter().find(|r| r.is_collapsing()) {
        return Err(ClusterError::CollapsingPresent(r.name.clone()));
    }
    let full = full_multiredex(trs, t, w)?;
    match (full.finite.is_empty(), full.families.is_empty()) {
        (_, true) => {
            let mr = MultiRedex::new(trs, full.finite)?;
            develop(trs, t, &mr)
        }
        (true, false) => {
            let mut cur = t.clone();
            for f in &full.families {
                cur = develop_family(trs, &cur, f)?;
            }
            Ok(cur)
        }
        (false, false) => Err(ClusterError::MixedFullMultiRedex),
    }
}

fn classify_ok(trs: &Trs) -> Option<bool> {
    match crate::trs::classify_orthogonality(trs) {
        OrthoClass::Orthogonal | OrthoClass::WeaklyOrthogonal => Some(true),
        OrthoClass::Neither => Some(false),
    }
}

// ---------------------------------------------------------------------------
// the orthogonalization algorithm

/// The partial replacement map produced by orthogonalization: redexes are
/// mapped to equivalent representatives or deliberately dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OrthogonalizationMap {
    pub map: BTreeMap<Redex, Redex>,
    pub dropped: BTreeSet<Redex>,
}

impl OrthogonalizationMap {
    /// Image of the mapped redexes.
    pub fn image(&self) -> Vec<Redex> {
        let set: BTreeSet<Redex> = self.map.values().cloned().collect();
        set.into_iter().collect()
    }

    /// Applies the map to a redex set, dropping undefined entries.
    pub fn apply(&self, v: &[Redex]) -> Vec<Redex> {
        let mut out: Vec<Redex> = v
            .iter()
            .filter(|r| !self.dropped.contains(r))
            .map(|r| self.map.get(r).cloned().unwrap_or_else(|| r.clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn display(&self, trs: &Trs) -> String {
        let rdx = |r: &Redex| format!("redex@{}({})", r.root, trs.rule(r.rule).name);
        let mut lines = Vec::new();
        for (k, v) in &self.map {
            lines.push(format!("{} -> {}", rdx(k), rdx(v)));
        }
        for k in &self.dropped {
            lines.push(format!("{} -> UNDEF", rdx(k)));
        }
        lines.join("\n")
    }
}

/// State after one loop iteration, for invariant checking.
#[derive(Clone, Debug)]
pub struct IterationSnapshot {
    pub processed: Vec<Redex>,
    pub remaining: Vec<Redex>,
    pub map: OrthogonalizationMap,
}

/// `u.root <= some root of v`: directional root-touch.
fn root_touches(u: &[Redex], v: &[Redex]) -> bool {
    u.iter()
        .any(|a| v.iter().any(|b| a.root.is_prefix_of(&b.root)))
}

/// `u.root <= some pattern position of v`: directional touch.
fn touches(trs: &Trs, u: &[Redex], v: &[Redex]) -> bool {
    u.iter().any(|a| {
        v.iter()
            .any(|b| b.pattern(trs).iter().any(|p| a.root.is_prefix_of(p)))
    })
}

/// Checks the algorithm's invariant for a snapshot.
pub fn invariant_holds(trs: &Trs, snap: &IterationSnapshot) -> bool {
    let image = snap.map.apply(&snap.processed);
    for i in 0..image.len() {
        for j in i + 1..image.len() {
            if overlap(trs, &image[i], &image[j]) {
                return false;
            }
        }
    }
    !root_touches(&snap.remaining, &snap.processed) && !touches(trs, &snap.remaining, &image)
}

pub fn orthogonalize(
    trs: &Trs,
    t: &Term,
    w: &[Redex],
) -> Result<OrthogonalizationMap, ClusterError> {
    orthogonalize_trace(trs, t, w).map(|(m, _)| m)
}

/// Runs the orthogonalization loop, recording a snapshot after every
/// iteration. Each round picks a topmost remaining redex `x`, collects the
/// first- and second-degree overlaps `X`, and either drops `X` (a parallel
/// pair shows a Y-cluster) or maps the overlaps of a representative onto
/// it.
pub fn orthogonalize_trace(
    trs: &Trs,
    t: &Term,
    w: &[Redex],
) -> Result<(OrthogonalizationMap, Vec<IterationSnapshot>), ClusterError> {
    if classify_ok(trs) != Some(true) {
        return Err(ClusterError::NotWeaklyOrthogonal);
    }
    if let Some(r) = trs.rules.iter().find(|r| r.is_collapsing()) {
        return Err(ClusterError::CollapsingPresent(r.name.clone()));
    }
    for r in w {
        if match_at(t, &r.root, &trs.rule(r.rule).lhs).is_none() {
            return Err(ClusterError::Trs(TrsError::StaleRedex {
                rule: trs.rule(r.rule).name.clone(),
                pos: r.root.clone(),
            }));
        }
    }

    let mut c: Vec<Redex> = w.to_vec();
    c.sort_by(redex_order);
    c.dedup();
    let whole = c.clone();
    let mut map = OrthogonalizationMap::default();
    let mut snapshots = Vec::new();

    while !c.is_empty() {
        let x = c.iter().min_by(|a, b| redex_order(a, b)).unwrap().clone();
        let x6: Vec<Redex> = c.iter().filter(|r| overlap(trs, r, &x)).cloned().collect();
        let x7: Vec<Redex> = c
            .iter()
            .filter(|r| x6.iter().any(|s| overlap(trs, r, s)))
            .cloned()
            .collect();
        let has_parallel =
            (0..x7.len()).any(|i| (i + 1..x7.len()).any(|j| x7[i].root.is_disjoint(&x7[j].root)));
        let removed: Vec<Redex>;
        if has_parallel {
            for r in &x7 {
                map.dropped.insert(r.clone());
            }
            removed = x7;
        } else {
            let above = |a: &Redex, b: &Redex| a.root.is_above(&b.root) && !overlap(trs, a, b);
            let lower: Vec<&Redex> = x7
                .iter()
                .filter(|r| x7.iter().any(|s| above(s, r)))
                .collect();
            let mut cands: Vec<&Redex> = x7
                .iter()
                .filter(|r| lower.iter().all(|l| above(r, l)))
                .collect();
            cands.sort_by(|a, b| redex_order(a, b));
            let xrep: Redex = (*cands.first().ok_or(ClusterError::NoRepresentative)?).clone();
            let x12: Vec<Redex> = x7
                .iter()
                .filter(|r| overlap(trs, r, &xrep))
                .cloned()
                .collect();
            for r in &x12 {
                map.map.insert(r.clone(), xrep.clone());
            }
            removed = x12;
        }
        c.retain(|r| !removed.contains(r));
        let processed: Vec<Redex> = whole.iter().filter(|r| !c.contains(r)).cloned().collect();
        snapshots.push(IterationSnapshot {
            processed,
            remaining: c.clone(),
            map: map.clone(),
        });
    }
    Ok((map, snapshots))
}

// ---------------------------------------------------------------------------
// the effective diamond

/// Orthogonalizes `U ∪ V`, develops both images, and joins them by the
/// orthogonal projections, returning the residual multi-redexes and the
/// common reduct.
pub fn diamond_join(
    trs: &Trs,
    t: &Term,
    u: &MultiRedex,
    v: &MultiRedex,
) -> Result<(MultiRedex, MultiRedex, Term), ClusterError> {
    let mut w: Vec<Redex> = u.redexes().to_vec();
    w.extend(v.redexes().iter().cloned());
    w.sort();
    w.dedup();
    let bot = orthogonalize(trs, t, &w)?;
    let ub = MultiRedex::new(trs, bot.apply(u.redexes()))?;
    let vb = MultiRedex::new(trs, bot.apply(v.redexes()))?;

    let (s1, res_v) = develop_with_tracking(
        trs,
        t,
        &ub,
        &vb.redexes()
            .iter()
            .filter(|r| !ub.redexes().contains(r))
            .cloned()
            .collect::<Vec<_>>(),
    )?;
    let (s2, res_u) = develop_with_tracking(
        trs,
        t,
        &vb,
        &ub.redexes()
            .iter()
            .filter(|r| !vb.redexes().contains(r))
            .cloned()
            .collect::<Vec<_>>(),
    )?;
    let v_after_u: Vec<Redex> = res_v.into_iter().flatten().collect();
    let u_after_v: Vec<Redex> = res_u.into_iter().flatten().collect();
    let join_v = MultiRedex::new(trs, v_after_u)?;
    let join_u = MultiRedex::new(trs, u_after_v)?;
    let common1 = develop(trs, &s1, &join_v)?;
    let common2 = develop(trs, &s2, &join_u)?;
    debug_assert!(common1.bisim_equal(&common2));
    if !common1.bisim_equal(&common2) {
        return Err(ClusterError::NoRepresentative);
    }
    Ok((join_u, join_v, common1))
}

/// Bounded breadth-first search for two distinct normal forms of `t`.
/// A finding disproves unique normalization for the system; exhausting the
/// budget proves nothing either way. Intended for probing systems with a
/// single collapsing rule, where the question is open.
pub fn distinct_normal_forms_search(
    trs: &Trs,
    t: &Term,
    depth: u32,
    max_terms: usize,
) -> Option<(Term, Term)> {
    let mut frontier = vec![t.clone()];
    let mut normal_forms: Vec<Term> = Vec::new();
    let mut visited = 0usize;
    while let Some(cur) = frontier.pop() {
        visited += 1;
        if visited > max_terms {
            break;
        }
        let redexes = crate::trs::find_redexes(&cur, trs, depth);
        if redexes.is_empty() {
            if let Some(other) = normal_forms.iter().find(|nf| !nf.bisim_equal(&cur)) {
                return Some((other.clone(), cur));
            }
            if !normal_forms.iter().any(|nf| nf.bisim_equal(&cur)) {
                normal_forms.push(cur);
            }
            continue;
        }
        for r in redexes {
            if let Ok(next) = rewrite_at(&cur, trs, &r) {
                frontier.push(next);
            }
        }
    }
    None
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kind={} extent={} root={} size={} trivial={}",
            match self.kind {
                ClusterKind::I => "I",
                ClusterKind::Y => "Y",
            },
            match self.extent {
                Extent::Finite(_) => "fin",
                Extent::Infinite => "inf",
            },
            self.root,
            self.size_label(),
            is_trivial(self)
        )
    }
}
