//! Rewrite rules, critical pairs, orthogonality classes, redexes, and
//! single/parallel rewrite steps.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{default_var_policy, Position, Signature, Substitution, Term, TermError};

#[derive(Debug, Error, PartialEq)]
pub enum TrsError {
    #[error("{0}")]
    Term(#[from] TermError),
    #[error("rule `{0}`: left-hand side root must not be a variable")]
    VarLhs(String),
    #[error("rule `{0}`: right-hand side variable `{1}` does not occur on the left")]
    FreeRhsVar(String, String),
    #[error("rule `{0}`: left-hand side must be finite")]
    InfiniteLhs(String),
    #[error("rule `{0}`: right-hand side must be finite in this artifact")]
    InfiniteRhs(String),
    #[error(
        "system is not left-linear: rule `{0}` repeats variable `{1}` in its left-hand side; \
         reductions in such systems (e.g. with a rule like f(x, x) -> c) need not compress, \
         so they are rejected here"
    )]
    NotLeftLinear(String, String),
    #[error("stale redex: rule `{rule}` no longer matches at {pos}")]
    StaleRedex { rule: String, pos: Position },
    #[error("redex roots are not pairwise disjoint: {0} and {1}")]
    NotParallel(Position, Position),
    #[error("redex patterns overlap: {0} and {1}")]
    Overlapping(Position, Position),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
}

/// A rewrite rule with finite sides.
#[derive(Clone, Debug)]
pub struct Rule {
    pub name: String,
    pub lhs: Term,
    pub rhs: Term,
}

impl Rule {
    pub fn new(name: &str, lhs: Term, rhs: Term) -> Result<Rule, TrsError> {
        if lhs.is_var() {
            return Err(TrsError::VarLhs(name.to_string()));
        }
        if !lhs.is_finite() {
            return Err(TrsError::InfiniteLhs(name.to_string()));
        }
        if !rhs.is_finite() {
            return Err(TrsError::InfiniteRhs(name.to_string()));
        }
        let lvars = lhs.vars();
        for v in rhs.vars() {
            if !lvars.contains(&v) {
                return Err(TrsError::FreeRhsVar(name.to_string(), v));
            }
        }
        Ok(Rule {
            name: name.to_string(),
            lhs,
            rhs,
        })
    }

    /// A collapsing rule has a variable as its right-hand side.
    pub fn is_collapsing(&self) -> bool {
        self.rhs.is_var()
    }

    /// Non-variable positions of the left-hand side.
    pub fn pattern_positions(&self) -> Vec<Position> {
        self.lhs
            .positions_up_to(self.lhs_depth())
            .into_iter()
            .filter(|p| !self.lhs.subterm_at(p).map(|s| s.is_var()).unwrap_or(true))
            .collect()
    }

    /// Variable positions of the left-hand side with their names.
    pub fn var_positions(&self) -> Vec<(Position, String)> {
        self.lhs
            .positions_up_to(self.lhs_depth())
            .into_iter()
            .filter_map(|p| {
                let sub = self.lhs.subterm_at(&p).ok()?;
                sub.var_name().map(|v| (p, v))
            })
            .collect()
    }

    /// Positions of a variable in the (finite) right-hand side.
    pub fn rhs_var_positions(&self, var: &str) -> Vec<Position> {
        let d = self.rhs.finite_depth().unwrap_or(0);
        self.rhs
            .positions_up_to(d)
            .into_iter()
            .filter(|p| {
                self.rhs
                    .subterm_at(p)
                    .ok()
                    .and_then(|s| s.var_name())
                    .as_deref()
                    == Some(var)
            })
            .collect()
    }

    pub fn lhs_depth(&self) -> u32 {
        self.lhs.finite_depth().expect("lhs is finite")
    }

    pub fn rhs_depth(&self) -> u32 {
        self.rhs.finite_depth().expect("rhs is finite")
    }

    fn repeated_lhs_var(&self) -> Option<String> {
        let mut seen = BTreeSet::new();
        for (_, v) in self.var_positions() {
            if !seen.insert(v.clone()) {
                return Some(v);
            }
        }
        None
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.name, self.lhs, self.rhs)
    }
}

/// A term rewriting system: a signature plus finitely many rules.
#[derive(Clone, Debug)]
pub struct Trs {
    pub signature: Signature,
    pub rules: Vec<Rule>,
}

impl Trs {
    pub fn new(rules: Vec<Rule>) -> Result<Trs, TrsError> {
        let mut signature = Signature::new();
        for r in &rules {
            signature.absorb(&r.lhs)?;
            signature.absorb(&r.rhs)?;
        }
        Ok(Trs { signature, rules })
    }

    /// Parses the `name: lhs -> rhs` line format; `#` starts a comment.
    /// Non-left-linear systems are rejected with a diagnostic.
    pub fn parse(text: &str) -> Result<Trs, TrsError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(ix) => &raw[..ix],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (name, rest) = match line.find(':') {
                Some(ix) => (line[..ix].trim().to_string(), &line[ix + 1..]),
                None => (format!("r{i}"), line),
            };
            let arrow = rest
                .find("->")
                .ok_or_else(|| TermError::Parse(format!("line {}: missing `->`", i + 1)))?;
            let lhs = Term::parse(rest[..arrow].trim())?;
            let rhs = Term::parse(rest[arrow + 2..].trim())?;
            rules.push(Rule::new(&name, lhs, rhs)?);
        }
        let trs = Trs::new(rules)?;
        if let Some((rule, var)) = trs.repeated_var() {
            return Err(TrsError::NotLeftLinear(rule, var));
        }
        Ok(trs)
    }

    fn repeated_var(&self) -> Option<(String, String)> {
        self.rules
            .iter()
            .find_map(|r| r.repeated_lhs_var().map(|v| (r.name.clone(), v)))
    }

    pub fn rule(&self, ix: usize) -> &Rule {
        &self.rules[ix]
    }

    pub fn rule_index(&self, name: &str) -> Result<usize, TrsError> {
        self.rules
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| TrsError::UnknownRule(name.to_string()))
    }

    pub fn is_left_linear(&self) -> bool {
        self.repeated_var().is_none()
    }

    pub fn has_collapsing_rule(&self) -> bool {
        self.rules.iter().any(|r| r.is_collapsing())
    }

    pub fn max_lhs_depth(&self) -> u32 {
        self.rules.iter().map(|r| r.lhs_depth()).max().unwrap_or(0)
    }
}

/// A critical pair between two rules.
#[derive(Clone, Debug)]
pub struct CriticalPair {
    pub outer: usize,
    pub inner: usize,
    pub pos: Position,
    /// The reduct obtained by contracting the inner redex.
    pub left: Term,
    /// The reduct obtained by contracting the outer redex.
    pub right: Term,
    pub outer_subst: Substitution,
    pub inner_subst: Substitution,
    pub trivial: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrthoClass {
    Orthogonal,
    WeaklyOrthogonal,
    Neither,
}

impl fmt::Display for OrthoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrthoClass::Orthogonal => write!(f, "Orthogonal"),
            OrthoClass::WeaklyOrthogonal => write!(f, "WeaklyOrthogonal"),
            OrthoClass::Neither => write!(f, "Neither"),
        }
    }
}

fn rename_apart(t: &Term, suffix: &str) -> Term {
    let mut sub = Substitution::new();
    for v in t.vars() {
        sub = sub.bind(&v, Term::var(&format!("{v}{suffix}")));
    }
    t.apply_subst(&sub)
}

/// Robinson unification on finite terms.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut sub = Substitution::new();
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((s, t)) = work.pop() {
        let s = resolve(&s, &sub);
        let t = resolve(&t, &sub);
        match (s.var_name(), t.var_name()) {
            (Some(x), Some(y)) if x == y => {}
            (Some(x), _) => {
                if occurs(&x, &t, &sub) {
                    return None;
                }
                sub.0.insert(x, t);
            }
            (None, Some(y)) => {
                if occurs(&y, &s, &sub) {
                    return None;
                }
                sub.0.insert(y, s);
            }
            (None, None) => {
                let (sv, tv) = (s.view(), t.view());
                match (sv, tv) {
                    (crate::term::TermView::Fun(f, fk), crate::term::TermView::Fun(g, gk)) => {
                        if f != g || fk.len() != gk.len() {
                            return None;
                        }
                        for (x, y) in fk.into_iter().zip(gk.into_iter()) {
                            work.push((x, y));
                        }
                    }
                    _ => return None,
                }
            }
        }
    }
    // Close the triangular substitution.
    let keys: Vec<String> = sub.0.keys().cloned().collect();
    loop {
        let mut changed = false;
        for k in &keys {
            let t = sub.0[k].clone();
            let t2 = t.apply_subst(&sub);
            if !t2.bisim_equal(&t) {
                sub.0.insert(k.clone(), t2);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Some(sub)
}

fn resolve(t: &Term, sub: &Substitution) -> Term {
    let mut cur = t.clone();
    while let Some(x) = cur.var_name() {
        match sub.get(&x) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

fn occurs(x: &str, t: &Term, sub: &Substitution) -> bool {
    let t = resolve(t, sub);
    if t.var_name().as_deref() == Some(x) {
        return true;
    }
    if let crate::term::TermView::Fun(_, kids) = t.view() {
        return kids.iter().any(|k| occurs(x, k, sub));
    }
    false
}

/// All critical pairs of ordered rule pairs. A rule overlapping a renamed
/// copy of itself at the root is skipped, as usual.
pub fn critical_pairs(trs: &Trs) -> Result<Vec<CriticalPair>, TrsError> {
    if let Some((rule, var)) = trs.repeated_var() {
        return Err(TrsError::NotLeftLinear(rule, var));
    }
    let mut out = Vec::new();
    for (i, outer) in trs.rules.iter().enumerate() {
        for (j, inner) in trs.rules.iter().enumerate() {
            let inner_lhs = rename_apart(&inner.lhs, "_in");
            let inner_rhs = rename_apart(&inner.rhs, "_in");
            for p in outer.pattern_positions() {
                if i == j && p.is_empty() {
                    continue;
                }
                let sub_lhs = outer.lhs.subterm_at(&p)?;
                if let Some(mgu) = unify(&sub_lhs, &inner_lhs) {
                    let overlapped = outer.lhs.apply_subst(&mgu);
                    let left = overlapped.replace_at(&inner_rhs.apply_subst(&mgu), &p)?;
                    let right = outer.rhs.apply_subst(&mgu);
                    let trivial = left.bisim_equal(&right);
                    let inner_subst = Substitution(
                        mgu.0
                            .iter()
                            .filter(|(k, _)| k.ends_with("_in"))
                            .map(|(k, v)| (k.clone(), v.clone()))
                            .collect(),
                    );
                    let outer_subst = Substitution(
                        mgu.0
                            .iter()
                            .filter(|(k, _)| !k.ends_with("_in"))
                            .map(|(k, v)| (k.clone(), v.clone()))
                            .collect(),
                    );
                    out.push(CriticalPair {
                        outer: i,
                        inner: j,
                        pos: p,
                        left,
                        right,
                        outer_subst,
                        inner_subst,
                        trivial,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Orthogonal iff left-linear with no critical pairs; weakly orthogonal iff
/// left-linear with only trivial ones.
pub fn classify_orthogonality(trs: &Trs) -> OrthoClass {
    if !trs.is_left_linear() {
        return OrthoClass::Neither;
    }
    let pairs = critical_pairs(trs).expect("left-linear");
    if pairs.is_empty() {
        OrthoClass::Orthogonal
    } else if pairs.iter().all(|cp| cp.trivial) {
        OrthoClass::WeaklyOrthogonal
    } else {
        OrthoClass::Neither
    }
}

/// A redex: a position plus the rule that matches there.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Redex {
    pub root: Position,
    pub rule: usize,
}

impl Redex {
    pub fn new(root: Position, rule: usize) -> Redex {
        Redex { root, rule }
    }

    pub fn depth(&self) -> u32 {
        self.root.depth()
    }

    /// The pattern: root-prefixed non-variable positions of the rule's lhs.
    pub fn pattern(&self, trs: &Trs) -> Vec<Position> {
        trs.rule(self.rule)
            .pattern_positions()
            .into_iter()
            .map(|q| self.root.concat(&q))
            .collect()
    }

    pub fn display(&self, trs: &Trs) -> String {
        format!("{}@{}", trs.rule(self.rule).name, self.root)
    }
}

/// Pattern overlap of two redexes (in a common subject term).
pub fn overlap(trs: &Trs, u: &Redex, v: &Redex) -> bool {
    let pu = u.pattern(trs);
    let pv: BTreeSet<Position> = v.pattern(trs).into_iter().collect();
    pu.iter().any(|p| pv.contains(p))
}

/// A set of pairwise non-overlapping redexes in a fixed subject term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiRedex(Vec<Redex>);

impl MultiRedex {
    pub fn new(trs: &Trs, mut redexes: Vec<Redex>) -> Result<MultiRedex, TrsError> {
        redexes.sort();
        redexes.dedup();
        for i in 0..redexes.len() {
            for j in i + 1..redexes.len() {
                if overlap(trs, &redexes[i], &redexes[j]) {
                    return Err(TrsError::Overlapping(
                        redexes[i].root.clone(),
                        redexes[j].root.clone(),
                    ));
                }
            }
        }
        Ok(MultiRedex(redexes))
    }

    pub fn empty() -> MultiRedex {
        MultiRedex(Vec::new())
    }

    pub fn redexes(&self) -> &[Redex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All roots pairwise disjoint (a parallel set).
    pub fn is_parallel(&self) -> bool {
        for i in 0..self.0.len() {
            for j in i + 1..self.0.len() {
                if !self.0[i].root.is_disjoint(&self.0[j].root) {
                    return false;
                }
            }
        }
        true
    }

    pub fn min_depth(&self) -> Option<u32> {
        self.0.iter().map(|r| r.depth()).min()
    }
}

impl IntoIterator for MultiRedex {
    type Item = Redex;
    type IntoIter = std::vec::IntoIter<Redex>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// Matches `lhs` against `t` at `p`, returning the matching substitution.
pub fn match_at(t: &Term, p: &Position, lhs: &Term) -> Option<Substitution> {
    let sub = t.subterm_at(p).ok()?;
    let mut bind = Substitution::new();
    if match_into(&sub, lhs, &mut bind) {
        Some(bind)
    } else {
        None
    }
}

fn match_into(t: &Term, pat: &Term, bind: &mut Substitution) -> bool {
    match pat.view() {
        crate::term::TermView::Var(x) => match bind.get(&x) {
            // Left-linear rules never bind twice, but be safe.
            Some(prev) => prev.bisim_equal(t),
            None => {
                bind.0.insert(x, t.clone());
                true
            }
        },
        crate::term::TermView::Fun(f, pk) => match t.view() {
            crate::term::TermView::Fun(g, tk) => {
                if f != g || pk.len() != tk.len() {
                    return false;
                }
                pk.iter()
                    .zip(tk.iter())
                    .all(|(p, t)| match_into(t, p, bind))
            }
            crate::term::TermView::Var(_) => false,
        },
    }
}

/// All redexes rooted at depth at most `depth_bound`.
pub fn find_redexes(t: &Term, trs: &Trs, depth_bound: u32) -> Vec<Redex> {
    let mut out = Vec::new();
    for p in t.positions_up_to(depth_bound) {
        for (i, rule) in trs.rules.iter().enumerate() {
            if match_at(t, &p, &rule.lhs).is_some() {
                out.push(Redex::new(p.clone(), i));
            }
        }
    }
    out
}

/// Contracts a single redex; the step's depth is the length of its root.
pub fn rewrite_at(t: &Term, trs: &Trs, redex: &Redex) -> Result<Term, TrsError> {
    let rule = trs.rule(redex.rule);
    let bind = match_at(t, &redex.root, &rule.lhs).ok_or_else(|| TrsError::StaleRedex {
        rule: rule.name.clone(),
        pos: redex.root.clone(),
    })?;
    Ok(t.replace_at(&rule.rhs.apply_subst(&bind), &redex.root)?)
}

/// Simultaneous contraction of redexes with pairwise disjoint roots.
/// Disjointness makes every sequential order equivalent.
pub fn parallel_step(t: &Term, trs: &Trs, redexes: &[Redex]) -> Result<Term, TrsError> {
    for i in 0..redexes.len() {
        for j in i + 1..redexes.len() {
            if !redexes[i].root.is_disjoint(&redexes[j].root) {
                return Err(TrsError::NotParallel(
                    redexes[i].root.clone(),
                    redexes[j].root.clone(),
                ));
            }
        }
    }
    let mut cur = t.clone();
    for r in redexes {
        cur = rewrite_at(&cur, trs, r)?;
    }
    Ok(cur)
}

/// Convenience: the SP system {ps: P(S(x)) -> x, sp: S(P(x)) -> x}.
pub fn sp_system() -> Trs {
    Trs::parse("ps: P(S(x)) -> x\nsp: S(P(x)) -> x").expect("valid system")
}

/// Convenience: the chain system {chain: A(A(A(x))) -> A(x)}.
pub fn chain_system() -> Trs {
    Trs::parse("chain: A(A(A(x))) -> A(x)").expect("valid system")
}

/// Convenience: the collapsing system {k: f(x, y) -> x}.
pub fn collapse_system() -> Trs {
    Trs::parse("k: f(x, y) -> x").expect("valid system")
}

/// Parses a term treating the system's symbols as constants/functions.
pub fn parse_with_rules(trs: &Trs, input: &str) -> Result<Term, TermError> {
    let sig = trs.signature.clone();
    Term::parse_with(input, &move |name: &str| {
        !sig.contains(name) && default_var_policy(name)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        Term::parse(s).unwrap()
    }

    #[test]
    fn left_linearity() {
        assert!(sp_system().is_left_linear());
        let bad = Trs::new(vec![Rule::new("r", t("f(x, x)"), t("c")).unwrap()]).unwrap();
        assert!(!bad.is_left_linear());
        assert!(Trs::new(vec![]).unwrap().is_left_linear());
        assert!(matches!(
            Trs::parse("r: f(x, x) -> c"),
            Err(TrsError::NotLeftLinear(_, _))
        ));
    }

    #[test]
    fn sp_critical_pairs_trivial() {
        let trs = sp_system();
        let cps = critical_pairs(&trs).unwrap();
        assert_eq!(cps.len(), 2);
        assert!(cps.iter().all(|cp| cp.trivial));
        assert_eq!(classify_orthogonality(&trs), OrthoClass::WeaklyOrthogonal);
    }

    #[test]
    fn nontrivial_pair() {
        let trs = Trs::parse("a: f(g(x)) -> a\nb: g(b) -> c").unwrap();
        let cps = critical_pairs(&trs).unwrap();
        assert_eq!(cps.len(), 1);
        let cp = &cps[0];
        assert!(!cp.trivial);
        assert_eq!(cp.left, t("f(c)"));
        assert_eq!(cp.right, t("a"));
    }

    #[test]
    fn lone_rule_no_pairs() {
        let trs = Trs::parse("r: a -> b").unwrap();
        assert!(critical_pairs(&trs).unwrap().is_empty());
        assert_eq!(classify_orthogonality(&trs), OrthoClass::Orthogonal);
    }

    #[test]
    fn chain_is_weakly_orthogonal() {
        assert_eq!(
            classify_orthogonality(&chain_system()),
            OrthoClass::WeaklyOrthogonal
        );
        assert_eq!(
            classify_orthogonality(&collapse_system()),
            OrthoClass::Orthogonal
        );
    }

    #[test]
    fn find_redexes_sp_word() {
        let trs = sp_system();
        let term = t("P(S(P(S(x))))");
        let rdx = find_redexes(&term, &trs, 8);
        let ps = trs.rule_index("ps").unwrap();
        let sp = trs.rule_index("sp").unwrap();
        let mut got: Vec<(Position, usize)> =
            rdx.iter().map(|r| (r.root.clone(), r.rule)).collect();
        got.sort();
        let mut expect = vec![
            (Position::root(), ps),
            (Position::from_slice(&[1, 1]), ps),
            (Position::from_slice(&[1]), sp),
        ];
        expect.sort();
        assert_eq!(got, expect);
        assert!(find_redexes(&t("a"), &trs, 8).is_empty());
    }

    #[test]
    fn find_redexes_on_rational_chain() {
        let trs = chain_system();
        let a_omega = t("rec a = A(a)");
        let rdx = find_redexes(&a_omega, &trs, 2);
        let roots: Vec<Position> = rdx.iter().map(|r| r.root.clone()).collect();
        assert_eq!(
            roots,
            vec![
                Position::root(),
                Position::from_slice(&[1]),
                Position::from_slice(&[1, 1])
            ]
        );
    }

    #[test]
    fn rewrite_examples() {
        let trs = sp_system();
        let ps = trs.rule_index("ps").unwrap();
        assert_eq!(
            rewrite_at(&t("P(S(a))"), &trs, &Redex::new(Position::root(), ps)).unwrap(),
            t("a")
        );
        assert_eq!(
            rewrite_at(
                &t("S(P(S(x)))"),
                &trs,
                &Redex::new(Position::from_slice(&[1]), ps)
            )
            .unwrap(),
            t("S(x)")
        );
        assert!(matches!(
            rewrite_at(&t("S(S(a))"), &trs, &Redex::new(Position::root(), ps)),
            Err(TrsError::StaleRedex { .. })
        ));
    }

    #[test]
    fn rewrite_rational_collapse() {
        let trs = collapse_system();
        let s = t("rec s = f(f(s, b), a)");
        let got = rewrite_at(&s, &trs, &Redex::new(Position::root(), 0)).unwrap();
        assert!(got.bisim_equal(&s.subterm_at(&Position::from_slice(&[1])).unwrap()));
        assert!(!got.is_finite());
    }

    #[test]
    fn parallel_step_matches_sequential() {
        let trs = sp_system();
        let ps = trs.rule_index("ps").unwrap();
        let sp = trs.rule_index("sp").unwrap();
        let subject = t("f(P(S(a)), S(P(b)))");
        let u = Redex::new(Position::from_slice(&[1]), ps);
        let v = Redex::new(Position::from_slice(&[2]), sp);
        let both = parallel_step(&subject, &trs, &[u.clone(), v.clone()]).unwrap();
        assert_eq!(both, t("f(a, b)"));
        let one_way = rewrite_at(&rewrite_at(&subject, &trs, &u).unwrap(), &trs, &v).unwrap();
        let other_way = rewrite_at(&rewrite_at(&subject, &trs, &v).unwrap(), &trs, &u).unwrap();
        assert_eq!(both, one_way);
        assert_eq!(both, other_way);
        assert_eq!(parallel_step(&subject, &trs, &[]).unwrap(), subject);
    }

    #[test]
    fn parallel_step_rejects_nested() {
        let trs = sp_system();
        let ps = trs.rule_index("ps").unwrap();
        let subject = t("P(S(P(S(a))))");
        let err = parallel_step(
            &subject,
            &trs,
            &[
                Redex::new(Position::root(), ps),
                Redex::new(Position::from_slice(&[1, 1]), ps),
            ],
        );
        assert!(matches!(err, Err(TrsError::NotParallel(_, _))));
    }

    #[test]
    fn multiredex_rejects_overlap() {
        let trs = chain_system();
        let r0 = Redex::new(Position::root(), 0);
        let r1 = Redex::new(Position::from_slice(&[1]), 0);
        assert!(MultiRedex::new(&trs, vec![r0.clone(), r1]).is_err());
        let r3 = Redex::new(Position::from_slice(&[1, 1, 1]), 0);
        assert!(MultiRedex::new(&trs, vec![r0, r3]).is_ok());
    }
}
