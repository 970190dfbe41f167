//! Staged strongly convergent reductions with explicit depth certificates,
//! the refined compression construction, compression of divergent
//! sequences, orthogonalization and projection of parallel steps, the
//! parallel moves construction, and the bounded confluence join.
//!
//! A staged reduction is a list of stages: explicit finite step lists and
//! limit stages given by a pure step generator plus a certificate, a
//! function `N` with: every step of index >= N(d) has depth >= d, and
//! N(d) -> infinity witnesses strong convergence. Certificates are never
//! inferred from the stream; they are part of the data and are spot-checked
//! during validation. Divergent stages carry instead a witness pinning a
//! depth that recurs infinitely often.

use std::cell::RefCell;
use std::rc::Rc;

use thiserror::Error;

use crate::clusters::position_order;
use crate::term::{Position, Term, TermError};
use crate::trs::{
    match_at, overlap, parallel_step, rewrite_at, MultiRedex, OrthoClass, Redex, Trs, TrsError,
};

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("{0}")]
    Trs(#[from] TrsError),
    #[error("{0}")]
    Term(#[from] TermError),
    #[error("reduction is not certified strongly convergent")]
    NotStronglyConvergent,
    #[error("expected a finite tail after at most one limit stage")]
    TailNotFinite,
    #[error("no divergence witness on the final stage")]
    NoDivergenceWitness,
    #[error("divergence witness lacks the shallow-step bound needed for splitting")]
    WitnessWithoutBound,
    #[error("certificate violated: step {index} has depth {found}, certified >= {certified}")]
    CertificateViolated {
        index: usize,
        found: u32,
        certified: u32,
    },
    #[error("limit term disagrees with the simulated prefix at depth {0}")]
    LimitMismatch(u32),
    #[error("parallel steps have different sources")]
    DifferentSources,
    #[error("system is not weakly orthogonal")]
    NotWeaklyOrthogonal,
    #[error(
        "collapsing rule `{0}` present; joinability may genuinely fail for such systems, \
         as the term rec s = f(f(s, b), a) under f(x, y) -> x shows"
    )]
    CollapsingRulesPresent(String),
    #[error("join budget of {0} outer iterations exceeded")]
    BudgetExceeded(usize),
    #[error("orthogonalization produced an overlapping union")]
    OrthogonalizationFailed,
    #[error("trace parse error: {0}")]
    Trace(String),
}

pub type StepGen = Rc<dyn Fn(usize) -> Redex>;
pub type Certificate = Rc<dyn Fn(u32) -> usize>;

/// Divergence data: infinitely many steps at depth <= `depth`, indexed by
/// `hits`; `shallow_bound`, when present, bounds the indices of steps at
/// depth < `depth`.
#[derive(Clone)]
pub struct DivergenceWitness {
    pub depth: u32,
    pub hits: Rc<dyn Fn(usize) -> usize>,
    pub shallow_bound: Option<usize>,
}

#[derive(Clone)]
pub enum Convergence {
    Certified(Certificate),
    Divergent(DivergenceWitness),
}

#[derive(Clone)]
pub struct LimitStage {
    pub gen: StepGen,
    pub conv: Convergence,
    /// The stage's limit. For divergent stages there is no limit; the field
    /// is unused then.
    pub limit: Option<Term>,
}

#[derive(Clone)]
pub enum Stage {
    Finite(Vec<Redex>),
    Limit(LimitStage),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReductionTarget {
    Term(Term),
    Divergent,
}

/// A reduction of length at most omega*2: finite stages and limit stages,
/// consecutive stages composing.
#[derive(Clone)]
pub struct StagedReduction {
    pub source: Term,
    pub stages: Vec<Stage>,
    pub target: ReductionTarget,
}

impl StagedReduction {
    /// A finite reduction; the target is computed by simulation.
    pub fn finite(trs: &Trs, source: Term, steps: Vec<Redex>) -> Result<Self, ReductionError> {
        let mut cur = source.clone();
        for s in &steps {
            cur = rewrite_at(&cur, trs, s)?;
        }
        Ok(StagedReduction {
            source,
            stages: vec![Stage::Finite(steps)],
            target: ReductionTarget::Term(cur),
        })
    }

    pub fn omega(source: Term, gen: StepGen, cert: Certificate, limit: Term) -> Self {
        StagedReduction {
            source,
            target: ReductionTarget::Term(limit.clone()),
            stages: vec![Stage::Limit(LimitStage {
                gen,
                conv: Convergence::Certified(cert),
                limit: Some(limit),
            })],
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.target, ReductionTarget::Divergent)
    }

    pub fn target_term(&self) -> Option<&Term> {
        match &self.target {
            ReductionTarget::Term(t) => Some(t),
            ReductionTarget::Divergent => None,
        }
    }

    fn last_limit_followed_by_finite(&self) -> bool {
        let mut seen_limit = false;
        for s in &self.stages {
            match s {
                Stage::Limit(_) => {
                    if seen_limit {
                        return false;
                    }
                    seen_limit = true;
                }
                Stage::Finite(_) => {}
            }
        }
        true
    }

    /// Exact number of steps at depth `d` (certificates make the count of
    /// shallow steps in limit stages finite and scannable).
    pub fn count_at_depth(&self, d: u32) -> Result<usize, ReductionError> {
        let mut count = 0;
        for stage in &self.stages {
            match stage {
                Stage::Finite(steps) => {
                    count += steps.iter().filter(|r| r.depth() == d).count();
                }
                Stage::Limit(l) => {
                    let bound = match &l.conv {
                        Convergence::Certified(cert) => cert(d + 1),
                        Convergence::Divergent(_) => {
                            return Err(ReductionError::NotStronglyConvergent)
                        }
                    };
                    for i in 0..bound {
                        if (l.gen)(i).depth() == d {
                            count += 1;
                        }
                    }
                }
            }
        }
        Ok(count)
    }

    /// Minimal depth of any step; `None` for the empty reduction.
    pub fn min_depth(&self) -> Result<Option<u32>, ReductionError> {
        let mut best: Option<u32> = None;
        let mut upd = |d: u32| {
            best = Some(best.map_or(d, |b: u32| b.min(d)));
        };
        for stage in &self.stages {
            match stage {
                Stage::Finite(steps) => {
                    for r in steps {
                        upd(r.depth());
                    }
                }
                Stage::Limit(l) => {
                    let cert = match &l.conv {
                        Convergence::Certified(c) => c.clone(),
                        Convergence::Divergent(_) => {
                            return Err(ReductionError::NotStronglyConvergent)
                        }
                    };
                    // The stage is nonempty; scan ever deeper certificates
                    // until a step shows up in the certified prefix.
                    let mut d = 0u32;
                    loop {
                        let n = cert(d + 1);
                        if n > 0 {
                            let m = (0..n).map(|i| (l.gen)(i).depth()).min().unwrap();
                            upd(m);
                            break;
                        }
                        // No step shallower than d+1 exists.
                        d += 1;
                        if d > 1_000 {
                            // Certificate divergence is validated elsewhere.
                            return Err(ReductionError::NotStronglyConvergent);
                        }
                    }
                }
            }
        }
        Ok(best)
    }

    /// Replays the reduction, checking that steps apply, that certificates
    /// are not violated on the scanned prefixes, and that stage limits and
    /// the final target agree with the simulation up to `depth`.
    pub fn validate(&self, trs: &Trs, depth: u32) -> Result<(), ReductionError> {
        let mut cur = self.source.clone();
        for stage in &self.stages {
            match stage {
                Stage::Finite(steps) => {
                    for s in steps {
                        cur = rewrite_at(&cur, trs, s)?;
                    }
                }
                Stage::Limit(l) => match &l.conv {
                    Convergence::Certified(cert) => {
                        let horizon = cert(depth + 1);
                        for i in 0..horizon {
                            let step = (l.gen)(i);
                            for d in 0..=depth + 1 {
                                if i >= cert(d) && step.depth() < d {
                                    return Err(ReductionError::CertificateViolated {
                                        index: i,
                                        found: step.depth(),
                                        certified: d,
                                    });
                                }
                            }
                            cur = rewrite_at(&cur, trs, &step)?;
                        }
                        let limit = l
                            .limit
                            .as_ref()
                            .ok_or(ReductionError::NotStronglyConvergent)?;
                        if !cur.agrees_to_depth(limit, depth + 1) {
                            return Err(ReductionError::LimitMismatch(depth));
                        }
                        cur = limit.clone();
                    }
                    Convergence::Divergent(w) => {
                        // Spot-check the witness on a short prefix.
                        let mut prev = None;
                        for i in 0..8usize {
                            let ix = (w.hits)(i);
                            if let Some(p) = prev {
                                if ix <= p {
                                    return Err(ReductionError::NoDivergenceWitness);
                                }
                            }
                            prev = Some(ix);
                        }
                        let check = ((w.hits)(0)).min(64);
                        for i in 0..check {
                            cur = rewrite_at(&cur, trs, &(l.gen)(i))?;
                        }
                        // A divergent stage is final; nothing composes after.
                        return Ok(());
                    }
                },
            }
        }
        if let ReductionTarget::Term(t) = &self.target {
            if !cur.agrees_to_depth(t, depth + 1) {
                return Err(ReductionError::LimitMismatch(depth));
            }
        }
        Ok(())
    }

    /// Steps of the reduction up to `n`, flattening stages (limit stages
    /// contribute their generator prefix).
    pub fn prefix_steps(&self, n: usize) -> Vec<Redex> {
        let mut out = Vec::new();
        for stage in &self.stages {
            match stage {
                Stage::Finite(steps) => {
                    for s in steps {
                        if out.len() == n {
                            return out;
                        }
                        out.push(s.clone());
                    }
                }
                Stage::Limit(l) => {
                    while out.len() < n {
                        out.push((l.gen)(out.len()));
                    }
                    return out;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// memoized step streams

/// A lazily materialized stream of steps backed by a producer closure.
struct StepStream {
    buf: Vec<Redex>,
    produce: Box<dyn FnMut(&mut Vec<Redex>)>,
}

impl StepStream {
    fn new(produce: Box<dyn FnMut(&mut Vec<Redex>)>) -> Rc<RefCell<StepStream>> {
        Rc::new(RefCell::new(StepStream {
            buf: Vec::new(),
            produce,
        }))
    }

    fn get(this: &Rc<RefCell<StepStream>>, i: usize) -> Redex {
        loop {
            {
                let s = this.borrow();
                if i < s.buf.len() {
                    return s.buf[i].clone();
                }
            }
            let mut s = this.borrow_mut();
            let before = s.buf.len();
            let StepStream { buf, produce } = &mut *s;
            produce(buf);
            assert!(s.buf.len() > before, "step stream producer stalled");
        }
    }

    fn gen(this: Rc<RefCell<StepStream>>) -> StepGen {
        Rc::new(move |i| StepStream::get(&this, i))
    }
}

// ---------------------------------------------------------------------------
// refined compression

/// Relocation of a step position through prepending the step `rule@root`:
/// positions in the redex's substitution part are moved to the rhs
/// occurrences of their variable, everything else stays put.
fn relocate(trs: &Trs, p: &Position, root: &Position, rule: usize) -> Vec<Position> {
    if !root.is_prefix_of(p) {
        return vec![p.clone()];
    }
    let rest = p.strip_prefix(root).expect("prefix");
    let r = trs.rule(rule);
    for (vpos, vname) in r.var_positions() {
        if let Some(suffix) = rest.strip_prefix(&vpos) {
            return r
                .rhs_var_positions(&vname)
                .into_iter()
                .map(|rpos| root.concat(&rpos).concat(&suffix))
                .collect();
        }
    }
    // Steps certified deeper than the pattern always pass a variable.
    panic!("relocated step at {p} lies inside the pattern of {root}");
}

/// One successor-case pull: turns `limit-stage; tail-step` into
/// `finite-prefix; tail-step; limit-stage`, preserving endpoints.
struct PulledStage {
    prefix: Vec<Redex>,
    stage: LimitStage,
}

fn pull_tail_step(
    trs: &Trs,
    stage_source: &Term,
    stage: &LimitStage,
    tail: &Redex,
) -> Result<PulledStage, ReductionError> {
    let cert = match &stage.conv {
        Convergence::Certified(c) => c.clone(),
        Convergence::Divergent(_) => return Err(ReductionError::NotStronglyConvergent),
    };
    let old_limit = stage
        .limit
        .clone()
        .ok_or(ReductionError::NotStronglyConvergent)?;
    let rule = trs.rule(tail.rule);
    let d_h = tail.root.depth();
    let d_p = rule.lhs_depth();
    let n = cert(d_h + d_p + 1);

    // Simulate the stage prefix; beyond index n every step is below the
    // tail redex pattern, so the tail step already applies at s_n.
    let mut prefix = Vec::with_capacity(n + 1);
    let mut cur = stage_source.clone();
    for i in 0..n {
        let s = (stage.gen)(i);
        cur = rewrite_at(&cur, trs, &s)?;
        prefix.push(s);
    }
    if match_at(&cur, &tail.root, &rule.lhs).is_none() {
        return Err(ReductionError::CertificateViolated {
            index: n,
            found: d_h,
            certified: d_h + d_p + 1,
        });
    }
    prefix.push(tail.clone());

    // New limit: the old limit with the tail step applied.
    let new_limit = rewrite_at(&old_limit, trs, tail)?;

    // Remaining steps, dovetailed breadth-first over (copy, step) diagonals.
    let gen_old = stage.gen.clone();
    let trs_c = trs.clone();
    let tail_c = tail.clone();
    let copies: Rc<RefCell<Vec<Vec<Redex>>>> = Rc::new(RefCell::new(Vec::new()));
    let copies_prod = copies.clone();
    let mut diag = 0usize;
    let mut k_in_diag = 0usize;
    let producer = move |buf: &mut Vec<Redex>| {
        let before = buf.len();
        while buf.len() == before {
            {
                let mut cps = copies_prod.borrow_mut();
                while cps.len() <= diag {
                    let old_ix = n + cps.len();
                    let old = gen_old(old_ix);
                    let relocated: Vec<Redex> =
                        relocate(&trs_c, &old.root, &tail_c.root, tail_c.rule)
                            .into_iter()
                            .map(|p| Redex::new(p, old.rule))
                            .collect();
                    cps.push(relocated);
                }
                while k_in_diag <= diag {
                    let k = k_in_diag;
                    let c = diag - k;
                    if c < cps[k].len() {
                        buf.push(cps[k][c].clone());
                        k_in_diag += 1;
                        break;
                    }
                    k_in_diag += 1;
                }
            }
            if k_in_diag > diag {
                diag += 1;
                k_in_diag = 0;
            }
        }
    };
    let stream = StepStream::new(Box::new(producer));
    let new_gen = StepStream::gen(stream);

    // Copies of a step certified at depth >= d + d_p land at depth >= d; an
    // old step with index >= M is only emitted from diagonal M onward.
    let max_copies = trs
        .rules
        .iter()
        .flat_map(|r| {
            r.var_positions()
                .into_iter()
                .map(move |(_, v)| r.rhs_var_positions(&v).len())
        })
        .max()
        .unwrap_or(1)
        .max(1);
    let cert_old = cert.clone();
    let new_cert: Certificate = Rc::new(move |d: u32| {
        let m_abs = cert_old(d + d_p).max(cert_old(d_h + d_p + 1));
        let m = m_abs.saturating_sub(n);
        if m == 0 {
            0
        } else {
            let last_diag = m + max_copies;
            (last_diag + 1) * (last_diag + 2) / 2
        }
    });

    Ok(PulledStage {
        prefix,
        stage: LimitStage {
            gen: new_gen,
            conv: Convergence::Certified(new_cert),
            limit: Some(new_limit),
        },
    })
}

/// The refined compression construction: a strongly convergent reduction
/// of shape (omega + k) becomes one of length at most omega with the same
/// endpoints, the same minimal depth, and exactly as many steps at that
/// depth.
pub fn compress(trs: &Trs, red: &StagedReduction) -> Result<StagedReduction, ReductionError> {
    if !trs.is_left_linear() {
        return Err(ReductionError::Trs(TrsError::NotLeftLinear(
            trs.rules
                .iter()
                .find_map(|r| {
                    let vars: Vec<_> = r.var_positions().iter().map(|(_, v)| v.clone()).collect();
                    let mut seen = std::collections::BTreeSet::new();
                    vars.into_iter()
                        .find(|v| !seen.insert(v.clone()))
                        .map(|v| (r.name.clone(), v))
                })
                .map(|(n, _)| n)
                .unwrap_or_default(),
            String::new(),
        )));
    }
    if red.is_divergent() {
        return Err(ReductionError::NoDivergenceWitness);
    }
    if !red.last_limit_followed_by_finite() {
        return Err(ReductionError::TailNotFinite);
    }
    for stage in &red.stages {
        if let Stage::Limit(l) = stage {
            if matches!(l.conv, Convergence::Divergent(_)) {
                return Err(ReductionError::NotStronglyConvergent);
            }
        }
    }

    // Normalize: [finite..] or [finite.., limit, finite-tail..].
    let mut head: Vec<Redex> = Vec::new();
    let mut limit: Option<LimitStage> = None;
    let mut tail: Vec<Redex> = Vec::new();
    for stage in &red.stages {
        match (stage, &limit) {
            (Stage::Finite(steps), None) => head.extend(steps.iter().cloned()),
            (Stage::Finite(steps), Some(_)) => tail.extend(steps.iter().cloned()),
            (Stage::Limit(l), None) => limit = Some(l.clone()),
            (Stage::Limit(_), Some(_)) => return Err(ReductionError::TailNotFinite),
        }
    }

    let mut stage = match limit {
        None => {
            // Already finite: return unchanged (merged stages).
            head.extend(tail);
            return StagedReduction::finite(trs, red.source.clone(), head);
        }
        Some(l) => l,
    };

    // Source term of the limit stage.
    let mut stage_source = red.source.clone();
    for s in &head {
        stage_source = rewrite_at(&stage_source, trs, s)?;
    }

    // Pull the tail steps through the limit stage one at a time, per the
    // successor case of the construction.
    for t in tail {
        let pulled = pull_tail_step(trs, &stage_source, &stage, &t)?;
        for s in &pulled.prefix {
            stage_source = rewrite_at(&stage_source, trs, s)?;
        }
        head.extend(pulled.prefix);
        stage = pulled.stage;
    }

    let target = stage.limit.clone().expect("certified stage has a limit");
    Ok(StagedReduction {
        source: red.source.clone(),
        stages: vec![Stage::Finite(head), Stage::Limit(stage)],
        target: ReductionTarget::Term(target),
    })
}

/// Compression of divergent sequences: the strongly convergent prefix
/// stages are flattened into the divergent tail, yielding a divergent
/// reduction of length at most omega with infinitely many steps at depth
/// at most the witness depth.
pub fn compress_divergent(
    trs: &Trs,
    red: &StagedReduction,
) -> Result<StagedReduction, ReductionError> {
    if !red.is_divergent() {
        return Err(ReductionError::NoDivergenceWitness);
    }
    let (div, head_stages) = match red.stages.split_last() {
        Some((Stage::Limit(l), rest)) => match &l.conv {
            Convergence::Divergent(w) => ((l.clone(), w.clone()), rest.to_vec()),
            Convergence::Certified(_) => return Err(ReductionError::NoDivergenceWitness),
        },
        _ => return Err(ReductionError::NoDivergenceWitness),
    };
    let (div_stage, witness) = div;
    let shallow = witness
        .shallow_bound
        .ok_or(ReductionError::WitnessWithoutBound)?;

    // Compress the convergent head, after absorbing the divergent stage's
    // finitely many shallow steps into it.
    let absorbed: Vec<Redex> = (0..shallow).map(|i| (div_stage.gen)(i)).collect();
    let mut head = StagedReduction {
        source: red.source.clone(),
        stages: head_stages,
        target: ReductionTarget::Term(red.source.clone()), // recomputed below
    };
    head.stages.push(Stage::Finite(absorbed));
    // Target of the head: simulate/take limits stagewise.
    let head_target = head_target_term(trs, &head)?;
    head.target = ReductionTarget::Term(head_target.clone());
    let compressed_head = compress(trs, &head)?;

    let mut finite_prefix: Vec<Redex> = Vec::new();
    let mut head_limit: Option<LimitStage> = None;
    for stage in compressed_head.stages {
        match stage {
            Stage::Finite(steps) => finite_prefix.extend(steps),
            Stage::Limit(l) => head_limit = Some(l),
        }
    }

    let depth = witness.depth;
    let div_gen = div_stage.gen.clone();
    let div_offset = shallow;

    let out_stage: LimitStage = match head_limit {
        None => {
            // Already of length omega: shift the divergent stream.
            let gen: StepGen = Rc::new(move |i| div_gen(div_offset + i));
            let hits = witness.hits.clone();
            LimitStage {
                gen,
                conv: Convergence::Divergent(DivergenceWitness {
                    depth,
                    hits: Rc::new(move |i| hits(i).saturating_sub(div_offset)),
                    shallow_bound: Some(0),
                }),
                limit: None,
            }
        }
        Some(l) => {
            // Flatten [limit, divergent-stream] by pulling the divergent
            // steps through the limit stage one at a time.
            let trs_c = trs.clone();
            let mut limit_source = red.source.clone();
            for s in &finite_prefix {
                limit_source = rewrite_at(&limit_source, trs, s)?;
            }
            let state = Rc::new(RefCell::new(PullState {
                stage_source: limit_source,
                stage: l,
                next_div: 0,
                hit_indices: Vec::new(),
            }));
            let state_prod = state.clone();
            let producer = move |buf: &mut Vec<Redex>| {
                let mut st = state_prod.borrow_mut();
                let d = div_gen(div_offset + st.next_div);
                st.next_div += 1;
                let pulled =
                    pull_tail_step(&trs_c, &st.stage_source.clone(), &st.stage.clone(), &d)
                        .expect("divergent pull");
                for s in &pulled.prefix {
                    st.stage_source =
                        rewrite_at(&st.stage_source, &trs_c, s).expect("replay pulled prefix");
                }
                let hit_at = buf.len() + pulled.prefix.len() - 1;
                st.hit_indices.push(hit_at);
                buf.extend(pulled.prefix);
                st.stage = pulled.stage;
            };
            let stream = StepStream::new(Box::new(producer));
            let gen = StepStream::gen(stream.clone());
            let state_hits = state.clone();
            let hits: Rc<dyn Fn(usize) -> usize> = Rc::new(move |i| {
                loop {
                    {
                        let st = state_hits.borrow();
                        if i < st.hit_indices.len() {
                            return st.hit_indices[i];
                        }
                    }
                    // Each materialized pull records exactly one hit.
                    let have = stream.borrow().buf.len();
                    let _ = StepStream::get(&stream, have);
                }
            });
            LimitStage {
                gen,
                conv: Convergence::Divergent(DivergenceWitness {
                    depth,
                    hits,
                    shallow_bound: None,
                }),
                limit: None,
            }
        }
    };

    Ok(StagedReduction {
        source: red.source.clone(),
        stages: vec![Stage::Finite(finite_prefix), Stage::Limit(out_stage)],
        target: ReductionTarget::Divergent,
    })
}

struct PullState {
    stage_source: Term,
    stage: LimitStage,
    next_div: usize,
    hit_indices: Vec<usize>,
}

struct PmlState {
    phi: ParallelStep,
    src: Term,
    next_kappa: usize,
}

fn head_target_term(trs: &Trs, red: &StagedReduction) -> Result<Term, ReductionError> {
    let mut cur = red.source.clone();
    for stage in &red.stages {
        match stage {
            Stage::Finite(steps) => {
                for s in steps {
                    cur = rewrite_at(&cur, trs, s)?;
                }
            }
            Stage::Limit(l) => {
                cur = l
                    .limit
                    .clone()
                    .ok_or(ReductionError::NotStronglyConvergent)?;
            }
        }
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// parallel steps

/// A simultaneous contraction of redexes at pairwise disjoint positions.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelStep {
    pub source: Term,
    pub target: Term,
    pub redexes: Vec<Redex>,
}

impl ParallelStep {
    pub fn new(trs: &Trs, source: Term, mut redexes: Vec<Redex>) -> Result<Self, ReductionError> {
        redexes.sort();
        redexes.dedup();
        let target = parallel_step(&source, trs, &redexes)?;
        Ok(ParallelStep {
            source,
            target,
            redexes,
        })
    }

    pub fn empty(t: &Term) -> ParallelStep {
        ParallelStep {
            source: t.clone(),
            target: t.clone(),
            redexes: Vec::new(),
        }
    }

    pub fn min_depth(&self) -> Option<u32> {
        self.redexes.iter().map(|r| r.depth()).min()
    }

    pub fn is_empty(&self) -> bool {
        self.redexes.is_empty()
    }
}

fn require_wo(trs: &Trs) -> Result<(), ReductionError> {
    match crate::trs::classify_orthogonality(trs) {
        OrthoClass::Orthogonal | OrthoClass::WeaklyOrthogonal => Ok(()),
        OrthoClass::Neither => Err(ReductionError::NotWeaklyOrthogonal),
    }
}

/// Replaces overlapping redexes between two parallel steps by equivalent
/// ones: on overlap the innermost wins (leftmost among the topmost when
/// several inner redexes overlap); at equal positions with different rules
/// the first step's redex is kept. Sources and targets are preserved and
/// the union of the results is non-overlapping.
pub fn orthogonalize_parallel(
    trs: &Trs,
    phi: &ParallelStep,
    psi: &ParallelStep,
) -> Result<(ParallelStep, ParallelStep), ReductionError> {
    require_wo(trs)?;
    if !phi.source.bisim_equal(&psi.source) {
        return Err(ReductionError::DifferentSources);
    }
    let u = &phi.redexes;
    let v = &psi.redexes;

    let choose_inner = |outer: &Redex, pool: &[Redex]| -> Option<Redex> {
        let mut inner: Vec<&Redex> = pool
            .iter()
            .filter(|r| outer.root.is_above(&r.root) && overlap(trs, outer, r))
            .collect();
        inner.sort_by(|a, b| position_order(&a.root, &b.root).then(a.rule.cmp(&b.rule)));
        inner.first().map(|r| (*r).clone())
    };

    let mut u2 = Vec::new();
    for r in u {
        u2.push(choose_inner(r, v).unwrap_or_else(|| r.clone()));
    }
    let mut v2 = Vec::new();
    for r in v {
        if let Some(same) = u.iter().find(|s| s.root == r.root && overlap(trs, s, r)) {
            // Equal position, possibly different rule: keep the first
            // step's redex.
            v2.push(same.clone());
        } else {
            v2.push(choose_inner(r, u).unwrap_or_else(|| r.clone()));
        }
    }

    let phi2 = ParallelStep::new(trs, phi.source.clone(), u2)?;
    let psi2 = ParallelStep::new(trs, psi.source.clone(), v2)?;
    if !phi2.target.bisim_equal(&phi.target) || !psi2.target.bisim_equal(&psi.target) {
        return Err(ReductionError::OrthogonalizationFailed);
    }
    let mut union = phi2.redexes.clone();
    union.extend(psi2.redexes.iter().cloned());
    if MultiRedex::new(trs, union).is_err() {
        return Err(ReductionError::OrthogonalizationFailed);
    }
    Ok((phi2, psi2))
}

/// The weakly orthogonal projection `phi / psi`: orthogonalize, then take
/// residuals. The result is a parallel step from psi's target.
pub fn project_parallel(
    trs: &Trs,
    phi: &ParallelStep,
    psi: &ParallelStep,
) -> Result<ParallelStep, ReductionError> {
    let (phi2, psi2) = orthogonalize_parallel(trs, phi, psi)?;
    let over = MultiRedex::new(trs, psi2.redexes.clone())?;
    let survivors: Vec<Redex> = phi2
        .redexes
        .iter()
        .filter(|r| !psi2.redexes.contains(r))
        .cloned()
        .collect();
    let residuals = crate::clusters::residual_multiredex(trs, &phi2.source, &survivors, &over)
        .map_err(|_| ReductionError::OrthogonalizationFailed)?;
    ParallelStep::new(trs, psi2.target.clone(), residuals)
}

/// Projects a whole reduction over a parallel step and vice versa: returns
/// the reduction `xi` from phi's target and the parallel step `psi` from
/// kappa's target (its redexes stable up to `horizon`), forming the
/// closing square.
pub fn parallel_moves(
    trs: &Trs,
    kappa: &StagedReduction,
    phi: &ParallelStep,
    horizon: u32,
) -> Result<(StagedReduction, ParallelStep), ReductionError> {
    require_wo(trs)?;
    if !kappa.source.bisim_equal(&phi.source) {
        return Err(ReductionError::DifferentSources);
    }
    let p_max = trs.max_lhs_depth();

    let mut cur_phi = phi.clone();
    let mut bottom: Vec<Redex> = Vec::new();
    let mut cur_src = phi.target.clone();
    let mut consumed = 0usize;

    // Finite stages project step by step.
    let mut limit: Option<LimitStage> = None;
    for stage in &kappa.stages {
        match stage {
            Stage::Finite(steps) => {
                for s in steps {
                    let step = ParallelStep::new(
                        trs,
                        simulate_at(trs, kappa, consumed)?,
                        vec![s.clone()],
                    )?;
                    let below = project_parallel(trs, &step, &cur_phi)?;
                    cur_phi = project_parallel(trs, &cur_phi, &step)?;
                    let mut ordered = below.redexes.clone();
                    ordered.sort_by(|a, b| position_order(&a.root, &b.root));
                    bottom.extend(ordered);
                    cur_src = below.target.clone();
                    consumed += 1;
                }
            }
            Stage::Limit(l) => {
                limit = Some(l.clone());
                break;
            }
        }
    }

    match limit {
        None => {
            let xi = StagedReduction {
                source: phi.target.clone(),
                stages: vec![Stage::Finite(bottom)],
                target: ReductionTarget::Term(cur_src.clone()),
            };
            let psi = ParallelStep::new(
                trs,
                kappa
                    .target_term()
                    .cloned()
                    .unwrap_or(cur_phi.source.clone()),
                cur_phi.redexes.clone(),
            )?;
            check_pml_depths(trs, kappa, phi, &xi, &psi)?;
            Ok((xi, psi))
        }
        Some(l) => {
            let cert = match &l.conv {
                Convergence::Certified(c) => c.clone(),
                Convergence::Divergent(_) => return Err(ReductionError::NotStronglyConvergent),
            };
            let kappa_limit = l
                .limit
                .clone()
                .ok_or(ReductionError::NotStronglyConvergent)?;
            // Project until the remaining steps are too deep to move any
            // redex at depth <= horizon.
            let m0 = cert(horizon + p_max + 1);
            let mut stage_src = simulate_at(trs, kappa, consumed)?;
            let mut xi_prefix = bottom;
            for i in 0..m0 {
                let s = (l.gen)(i);
                let step = ParallelStep::new(trs, stage_src.clone(), vec![s.clone()])?;
                let below = project_parallel(trs, &step, &cur_phi)?;
                cur_phi = project_parallel(trs, &cur_phi, &step)?;
                let mut ordered = below.redexes.clone();
                ordered.sort_by(|a, b| position_order(&a.root, &b.root));
                xi_prefix.extend(ordered);
                stage_src = step.target.clone();
            }
            // Stable part of the limit projection.
            let stable: Vec<Redex> = cur_phi
                .redexes
                .iter()
                .filter(|r| r.depth() <= horizon)
                .filter(|r| match_at(&kappa_limit, &r.root, &trs.rule(r.rule).lhs).is_some())
                .cloned()
                .collect();
            let psi = ParallelStep::new(trs, kappa_limit.clone(), stable)?;
            let xi_limit = parallel_step(&kappa_limit, trs, &psi.redexes)?;

            // Remaining kappa steps project to steps at depth >= d - p_max;
            // emit them lazily. The shared state tracks how many kappa
            // steps have been consumed so the certificate can translate
            // kappa indices into xi indices exactly.
            let trs_c = trs.clone();
            let gen_old = l.gen.clone();
            let phi_state = Rc::new(RefCell::new(PmlState {
                phi: cur_phi.clone(),
                src: stage_src.clone(),
                next_kappa: m0,
            }));
            let state_prod = phi_state.clone();
            let producer = move |buf: &mut Vec<Redex>| {
                let mut st = state_prod.borrow_mut();
                // Consume kappa steps until a nonempty batch appears;
                // erased batches are rare and bounded on certified inputs.
                for _ in 0..1_000_000usize {
                    let s = gen_old(st.next_kappa);
                    st.next_kappa += 1;
                    let step = ParallelStep::new(&trs_c, st.src.clone(), vec![s.clone()])
                        .expect("kappa step applies");
                    let below =
                        project_parallel(&trs_c, &step, &st.phi).expect("projection applies");
                    st.phi = project_parallel(&trs_c, &st.phi, &step).expect("projection applies");
                    st.src = step.target.clone();
                    if !below.redexes.is_empty() {
                        let mut ordered = below.redexes.clone();
                        ordered.sort_by(|a, b| position_order(&a.root, &b.root));
                        buf.extend(ordered);
                        return;
                    }
                }
                panic!("projection produced no steps over 10^6 kappa steps");
            };
            let stream = StepStream::new(Box::new(producer));
            let gen = StepStream::gen(stream.clone());
            let cert_new: Certificate = {
                let cert = cert.clone();
                let stream = stream.clone();
                let state = phi_state.clone();
                Rc::new(move |d: u32| {
                    // All kappa steps with index >= cert(d + p_max) project
                    // to batches at depth >= d; materialize batches until
                    // that many kappa steps are consumed and return the xi
                    // index reached.
                    let kappa_bound = cert(d + p_max).max(m0);
                    loop {
                        if state.borrow().next_kappa >= kappa_bound {
                            return stream.borrow().buf.len();
                        }
                        let have = stream.borrow().buf.len();
                        let _ = StepStream::get(&stream, have);
                    }
                })
            };

            let mut stages = Vec::new();
            stages.push(Stage::Finite(xi_prefix));
            stages.push(Stage::Limit(LimitStage {
                gen,
                conv: Convergence::Certified(cert_new),
                limit: Some(xi_limit.clone()),
            }));
            let xi = StagedReduction {
                source: phi.target.clone(),
                stages,
                target: ReductionTarget::Term(xi_limit),
            };
            check_pml_depths(trs, kappa, phi, &xi, &psi)?;
            Ok((xi, psi))
        }
    }
}

/// Depth bounds of the parallel moves construction: with collapsing rules
/// min(d_kappa, d_phi); without, the sharpened one-sided bounds.
fn check_pml_depths(
    trs: &Trs,
    kappa: &StagedReduction,
    phi: &ParallelStep,
    xi: &StagedReduction,
    psi: &ParallelStep,
) -> Result<(), ReductionError> {
    let d_kappa = kappa.min_depth()?;
    let d_phi = phi.min_depth();
    let (d_kappa, d_phi) = match (d_kappa, d_phi) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(()), // an empty side imposes no bound
    };
    let weak = d_kappa.min(d_phi);
    let (xi_bound, psi_bound) = if trs.has_collapsing_rule() {
        (weak, weak)
    } else {
        (d_kappa.min(d_phi + 1), d_phi.min(d_kappa + 1))
    };
    if let Some(d) = xi.min_depth()? {
        if d < xi_bound {
            return Err(ReductionError::CertificateViolated {
                index: 0,
                found: d,
                certified: xi_bound,
            });
        }
    }
    if let Some(d) = psi.min_depth() {
        if d < psi_bound {
            return Err(ReductionError::CertificateViolated {
                index: 0,
                found: d,
                certified: psi_bound,
            });
        }
    }
    Ok(())
}

/// Term after the first `n` flattened steps of the reduction.
fn simulate_at(trs: &Trs, red: &StagedReduction, n: usize) -> Result<Term, ReductionError> {
    let steps = red.prefix_steps(n);
    let mut cur = red.source.clone();
    for s in &steps {
        cur = rewrite_at(&cur, trs, s)?;
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// bounded joining

/// Iterates the level-by-level joining construction until the two frontier
/// terms agree to `agree_depth`, returning the continuation reductions.
/// Refuses collapsing systems, for which joinability genuinely fails.
pub fn join_bounded(
    trs: &Trs,
    kappa: &StagedReduction,
    xi: &StagedReduction,
    agree_depth: u32,
    budget: usize,
) -> Result<(StagedReduction, StagedReduction), ReductionError> {
    require_wo(trs)?;
    if let Some(r) = trs.rules.iter().find(|r| r.is_collapsing()) {
        return Err(ReductionError::CollapsingRulesPresent(r.name.clone()));
    }
    if !kappa.source.bisim_equal(&xi.source) {
        return Err(ReductionError::DifferentSources);
    }

    let t1_start = kappa
        .target_term()
        .cloned()
        .ok_or(ReductionError::NotStronglyConvergent)?;
    let t2_start = xi
        .target_term()
        .cloned()
        .ok_or(ReductionError::NotStronglyConvergent)?;

    let mut r1 = kappa.clone();
    let mut r2 = xi.clone();
    let mut cont1: Vec<Redex> = Vec::new();
    let mut cont2: Vec<Redex> = Vec::new();
    let mut cont1_src = t1_start.clone();
    let mut cont2_src = t2_start.clone();
    let p_max = trs.max_lhs_depth();

    let mut level = match (r1.min_depth()?, r2.min_depth()?) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => 0,
    };

    for iteration in 0..=budget {
        let f1 = r1
            .target_term()
            .cloned()
            .ok_or(ReductionError::NotStronglyConvergent)?;
        let f2 = r2
            .target_term()
            .cloned()
            .ok_or(ReductionError::NotStronglyConvergent)?;
        if f1.agrees_to_depth(&f2, agree_depth) {
            let out1 = StagedReduction {
                source: t1_start,
                stages: vec![Stage::Finite(cont1)],
                target: ReductionTarget::Term(cont1_src),
            };
            let out2 = StagedReduction {
                source: t2_start,
                stages: vec![Stage::Finite(cont2)],
                target: ReductionTarget::Term(cont2_src),
            };
            return Ok((out1, out2));
        }
        if iteration == budget {
            break;
        }

        // Split both reductions at the last step of depth <= level.
        let (head1, tail1) = split_at_depth(trs, &r1, level)?;
        let (head2, tail2) = split_at_depth(trs, &r2, level)?;

        // Join the finite heads by tiling parallel steps: `right` runs from
        // head2's target and `bottom` from head1's target, both into the
        // common vertex.
        let seq1: Vec<ParallelStep> = singleton_sequence(trs, &r1.source, &head1)?;
        let seq2: Vec<ParallelStep> = singleton_sequence(trs, &r2.source, &head2)?;
        let (right, bottom) = project_sequences(trs, seq1, seq2)?;

        // Project the tails over the joining sequences.
        let horizon = agree_depth + p_max + 2;
        let (mut new_r1, psi1) = project_over_sequence(trs, tail1, &bottom, horizon)?;
        let (mut new_r2, psi2) = project_over_sequence(trs, tail2, &right, horizon)?;

        for ps in psi1 {
            let mut ordered = ps.redexes.clone();
            ordered.sort_by(|a, b| position_order(&a.root, &b.root));
            for s in &ordered {
                cont1_src = rewrite_at(&cont1_src, trs, s)?;
            }
            cont1.extend(ordered);
        }
        for ps in psi2 {
            let mut ordered = ps.redexes.clone();
            ordered.sort_by(|a, b| position_order(&a.root, &b.root));
            for s in &ordered {
                cont2_src = rewrite_at(&cont2_src, trs, s)?;
            }
            cont2.extend(ordered);
        }

        // Frontier agreement grows by at least one level per iteration.
        std::mem::swap(&mut r1, &mut new_r1);
        std::mem::swap(&mut r2, &mut new_r2);
        level += 1;
    }
    Err(ReductionError::BudgetExceeded(budget))
}

/// Splits into (steps with index up to the last step of depth <= level,
/// remaining reduction). The head is finite by strong convergence.
fn split_at_depth(
    trs: &Trs,
    red: &StagedReduction,
    level: u32,
) -> Result<(Vec<Redex>, StagedReduction), ReductionError> {
    let mut flat_bound = 0usize;
    let mut scanned = 0usize;
    for stage in &red.stages {
        match stage {
            Stage::Finite(steps) => {
                for (i, s) in steps.iter().enumerate() {
                    if s.depth() <= level {
                        flat_bound = scanned + i + 1;
                    }
                }
                scanned += steps.len();
            }
            Stage::Limit(l) => {
                let cert = match &l.conv {
                    Convergence::Certified(c) => c.clone(),
                    Convergence::Divergent(_) => return Err(ReductionError::NotStronglyConvergent),
                };
                let bound = cert(level + 1);
                for i in 0..bound {
                    if (l.gen)(i).depth() <= level {
                        flat_bound = scanned + i + 1;
                    }
                }
                scanned += bound;
            }
        }
    }
    let head = red.prefix_steps(flat_bound);
    let mid = simulate_at(trs, red, flat_bound)?;

    // The remainder: either the rest of the finite stages or the shifted
    // limit stage.
    let mut rest_stages: Vec<Stage> = Vec::new();
    let mut consumed = 0usize;
    for stage in &red.stages {
        match stage {
            Stage::Finite(steps) => {
                if consumed + steps.len() <= flat_bound {
                    consumed += steps.len();
                } else {
                    let skip = flat_bound.saturating_sub(consumed);
                    rest_stages.push(Stage::Finite(steps[skip..].to_vec()));
                    consumed += steps.len();
                }
            }
            Stage::Limit(l) => {
                let skip = flat_bound.saturating_sub(consumed);
                if skip == 0 {
                    rest_stages.push(Stage::Limit(l.clone()));
                } else {
                    let gen = l.gen.clone();
                    let shifted: StepGen = Rc::new(move |i| gen(i + skip));
                    let cert = match &l.conv {
                        Convergence::Certified(c) => c.clone(),
                        Convergence::Divergent(_) => {
                            return Err(ReductionError::NotStronglyConvergent)
                        }
                    };
                    let shifted_cert: Certificate = Rc::new(move |d| cert(d).saturating_sub(skip));
                    rest_stages.push(Stage::Limit(LimitStage {
                        gen: shifted,
                        conv: Convergence::Certified(shifted_cert),
                        limit: l.limit.clone(),
                    }));
                }
                break;
            }
        }
    }
    let tail = StagedReduction {
        source: mid,
        stages: rest_stages,
        target: red.target.clone(),
    };
    Ok((head, tail))
}

fn singleton_sequence(
    trs: &Trs,
    source: &Term,
    steps: &[Redex],
) -> Result<Vec<ParallelStep>, ReductionError> {
    let mut out = Vec::new();
    let mut cur = source.clone();
    for s in steps {
        let ps = ParallelStep::new(trs, cur.clone(), vec![s.clone()])?;
        cur = ps.target.clone();
        out.push(ps);
    }
    Ok(out)
}

/// Tiles two co-initial sequences of parallel steps, returning
/// (A projected over B, B projected over A).
fn project_sequences(
    trs: &Trs,
    a: Vec<ParallelStep>,
    b: Vec<ParallelStep>,
) -> Result<(Vec<ParallelStep>, Vec<ParallelStep>), ReductionError> {
    let mut bottom = b;
    let mut right = Vec::new();
    for step in a {
        let mut cur = step;
        let mut new_bottom = Vec::new();
        for bs in bottom {
            let next_cur = project_parallel(trs, &cur, &bs)?;
            let next_bs = project_parallel(trs, &bs, &cur)?;
            new_bottom.push(next_bs);
            cur = next_cur;
        }
        bottom = new_bottom;
        right.push(cur);
    }
    Ok((right, bottom))
}

/// Projects a reduction over each parallel step of a sequence in turn,
/// collecting the parallel continuations from the reduction's target.
fn project_over_sequence(
    trs: &Trs,
    red: StagedReduction,
    seq: &[ParallelStep],
    horizon: u32,
) -> Result<(StagedReduction, Vec<ParallelStep>), ReductionError> {
    let mut cur = red;
    let mut continuations = Vec::new();
    for ps in seq {
        let (next, psi) = parallel_moves(trs, &cur, ps, horizon)?;
        continuations.push(psi);
        cur = next;
    }
    Ok((cur, continuations))
}

// ---------------------------------------------------------------------------
// trace serialization

/// Writes `@depth position rule` lines; limit stages open with a
/// certificate table marker and list their first `horizon` steps.
pub fn serialize_trace(trs: &Trs, red: &StagedReduction, horizon: usize) -> String {
    let mut out = String::new();
    for stage in &red.stages {
        match stage {
            Stage::Finite(steps) => {
                for s in steps {
                    out.push_str(&format!(
                        "@{} {} {}\n",
                        s.depth(),
                        s.root,
                        trs.rule(s.rule).name
                    ));
                }
            }
            Stage::Limit(l) => {
                let table = match &l.conv {
                    Convergence::Certified(cert) => (0..=8u32)
                        .map(|d| format!("({d},{})", cert(d)))
                        .collect::<Vec<_>>()
                        .join(","),
                    Convergence::Divergent(w) => format!("divergent-depth={}", w.depth),
                };
                out.push_str(&format!("--limit({table})--\n"));
                for i in 0..horizon {
                    let s = (l.gen)(i);
                    out.push_str(&format!(
                        "@{} {} {}\n",
                        s.depth(),
                        s.root,
                        trs.rule(s.rule).name
                    ));
                }
            }
        }
    }
    out
}

/// Parses the finite fragment of a trace: step lines and limit markers.
pub fn parse_trace(trs: &Trs, text: &str) -> Result<Vec<(bool, Vec<Redex>)>, ReductionError> {
    let mut stages = vec![(false, Vec::new())];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("--limit(") {
            stages.push((true, Vec::new()));
            continue;
        }
        let mut parts = line.split_whitespace();
        let depth_part = parts
            .next()
            .ok_or_else(|| ReductionError::Trace("missing depth".into()))?;
        let pos_part = parts
            .next()
            .ok_or_else(|| ReductionError::Trace("missing position".into()))?;
        let rule_part = parts
            .next()
            .ok_or_else(|| ReductionError::Trace("missing rule".into()))?;
        let depth: u32 = depth_part
            .trim_start_matches('@')
            .parse()
            .map_err(|_| ReductionError::Trace(format!("bad depth `{depth_part}`")))?;
        let pos = Position::parse(pos_part).map_err(|e| ReductionError::Trace(e.to_string()))?;
        if pos.depth() != depth {
            return Err(ReductionError::Trace(format!(
                "depth {depth} does not match position {pos}"
            )));
        }
        let rule = trs.rule_index(rule_part)?;
        stages.last_mut().unwrap().1.push(Redex::new(pos, rule));
    }
    Ok(stages)
}

// ---------------------------------------------------------------------------
// canned infinite reductions used by fixtures and the CLI

/// f(a) ->^w f(g^w) under a -> g(a): steps at 1, 1.1, 1.1.1, ...
pub fn spiral_omega(
    trs: &Trs,
    source: Term,
    below: Position,
    rule_name: &str,
    limit: Term,
) -> StagedReduction {
    let rule = trs.rule_index(rule_name).expect("rule exists");
    let below_c = below.clone();
    let gen: StepGen = Rc::new(move |i| {
        let mut p = below_c.clone();
        for _ in 0..i {
            p = p.child(1);
        }
        Redex::new(p, rule)
    });
    let base = below.depth();
    let cert: Certificate = Rc::new(move |d: u32| (d.saturating_sub(base)) as usize);
    StagedReduction::omega(source, gen, cert, limit)
}

impl std::fmt::Debug for StagedReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "StagedReduction({} stages from {})",
            self.stages.len(),
            self.source
        )
    }
}
