//! Lambda terms with integer-indexed variables, beta/eta stepping, and the
//! translation of {P,S}-words into lambda terms.
//!
//! The translation sends `P w` at index `i` to `<w>_(i-1) x_i` and `S w` at
//! index `i` to `\x_(i+1). <w>_(i+1)`; a PS contraction at word depth `k`
//! then corresponds to a beta step at term depth `k`, and an SP contraction
//! to an eta step. Infinite translations are depth-truncated, with a marker
//! leaf that remembers the translation index: the free variables hidden
//! behind a marker at index `j` are contained in `{ x_m : m <= j }`, which
//! keeps eta's freeness side-condition decidable on the fixtures used here.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::spwords::{Letter, SpWord};
use crate::term::Position;

#[derive(Debug, Error, PartialEq)]
pub enum LambdaError {
    #[error("no {0} redex at position {1}")]
    NotARedex(&'static str, Position),
    #[error("invalid position {0}")]
    InvalidPosition(Position),
    #[error("cannot decide freeness of x{0} under a truncation marker")]
    UndecidableFreeness(i64),
    #[error("word has no {0} factor at letter position {1} within reach")]
    NoFactorAtPosition(String, u64),
}

/// Lambda terms over variables `x_i` with `i` ranging over the integers.
/// `Trunc(j)` marks a cut-off translation continuing at index `j`;
/// `Trunc(None)` is an anonymous cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LambdaTerm {
    Var(i64),
    App(Box<LambdaTerm>, Box<LambdaTerm>),
    Abs(i64, Box<LambdaTerm>),
    Trunc(Option<i64>),
}

use LambdaTerm::*;

pub fn var(i: i64) -> LambdaTerm {
    Var(i)
}

pub fn app(f: LambdaTerm, a: LambdaTerm) -> LambdaTerm {
    App(Box::new(f), Box::new(a))
}

pub fn abs(i: i64, body: LambdaTerm) -> LambdaTerm {
    Abs(i, Box::new(body))
}

/// Left-nested application `f a1 ... an`.
pub fn apps(f: LambdaTerm, args: Vec<LambdaTerm>) -> LambdaTerm {
    args.into_iter().fold(f, app)
}

/// `\v1...vn. body`.
pub fn abss(binders: &[i64], body: LambdaTerm) -> LambdaTerm {
    binders.iter().rev().fold(body, |acc, &i| abs(i, acc))
}

impl LambdaTerm {
    /// Child positions: App has children 1 (function) and 2 (argument);
    /// Abs has child 1 (body).
    pub fn at(&self, p: &Position) -> Option<&LambdaTerm> {
        let mut cur = self;
        for &i in &p.0 {
            cur = match (cur, i) {
                (App(f, _), 1) => f,
                (App(_, a), 2) => a,
                (Abs(_, b), 1) => b,
                _ => return None,
            };
        }
        Some(cur)
    }

    fn replace(&self, p: &Position, new: LambdaTerm) -> Option<LambdaTerm> {
        if p.is_empty() {
            return Some(new);
        }
        let (head, rest) = (p.0[0], Position(p.0[1..].to_vec()));
        match (self, head) {
            (App(f, a), 1) => Some(app(f.replace(&rest, new)?, (**a).clone())),
            (App(f, a), 2) => Some(app((**f).clone(), a.replace(&rest, new)?)),
            (Abs(i, b), 1) => Some(abs(*i, b.replace(&rest, new)?)),
            _ => None,
        }
    }

    pub fn max_index(&self) -> i64 {
        match self {
            Var(i) => *i,
            Trunc(j) => j.unwrap_or(0),
            App(f, a) => f.max_index().max(a.max_index()),
            Abs(i, b) => (*i).max(b.max_index()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Var(_) | Trunc(_) => 1,
            App(f, a) => 1 + f.size() + a.size(),
            Abs(_, b) => 1 + b.size(),
        }
    }

    /// Cuts the term at constructor depth `d`.
    pub fn truncate(&self, d: u32) -> LambdaTerm {
        if d == 0 {
            return Trunc(None);
        }
        match self {
            Var(i) => Var(*i),
            Trunc(j) => Trunc(*j),
            App(f, a) => app(f.truncate(d - 1), a.truncate(d - 1)),
            Abs(i, b) => abs(*i, b.truncate(d - 1)),
        }
    }
}

/// Three-valued freeness answer under truncation markers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Freeness {
    Free,
    NotFree,
    Unknown,
}

/// Whether `x_i` occurs free in `t`. A marker with index `j` can hide free
/// occurrences of `x_m` only for `m <= j`; an anonymous marker can hide
/// anything.
pub fn freeness(i: i64, t: &LambdaTerm) -> Freeness {
    fn go(i: i64, t: &LambdaTerm, bound: &mut Vec<i64>, unknown: &mut bool) -> bool {
        match t {
            Var(j) => *j == i && !bound.contains(j),
            Trunc(state) => {
                if bound.contains(&i) {
                    return false;
                }
                match state {
                    Some(j) if i > *j => false,
                    _ => {
                        *unknown = true;
                        false
                    }
                }
            }
            App(f, a) => {
                let l = go(i, f, bound, unknown);
                let r = go(i, a, bound, unknown);
                l || r
            }
            Abs(j, b) => {
                bound.push(*j);
                let r = go(i, b, bound, unknown);
                bound.pop();
                r
            }
        }
    }
    let mut unknown = false;
    if go(i, t, &mut Vec::new(), &mut unknown) {
        Freeness::Free
    } else if unknown {
        Freeness::Unknown
    } else {
        Freeness::NotFree
    }
}

fn free_vars(t: &LambdaTerm, bound: &mut Vec<i64>, out: &mut BTreeSet<i64>) {
    match t {
        Var(i) => {
            if !bound.contains(i) {
                out.insert(*i);
            }
        }
        Trunc(_) => {}
        App(f, a) => {
            free_vars(f, bound, out);
            free_vars(a, bound, out);
        }
        Abs(i, b) => {
            bound.push(*i);
            free_vars(b, bound, out);
            bound.pop();
        }
    }
}

/// Capture-avoiding substitution `t[x_i := arg]`; binders that would
/// capture a free variable of `arg` are renamed to fresh indices.
pub fn substitute(t: &LambdaTerm, i: i64, arg: &LambdaTerm) -> LambdaTerm {
    if matches!(arg, Var(j) if *j == i) {
        return t.clone();
    }
    let mut avoid = BTreeSet::new();
    free_vars(arg, &mut Vec::new(), &mut avoid);
    let mut fresh = t.max_index().max(arg.max_index()) + 1;
    subst_go(t, i, arg, &avoid, &mut fresh)
}

fn subst_go(
    t: &LambdaTerm,
    i: i64,
    arg: &LambdaTerm,
    avoid: &BTreeSet<i64>,
    fresh: &mut i64,
) -> LambdaTerm {
    match t {
        Var(j) => {
            if *j == i {
                arg.clone()
            } else {
                Var(*j)
            }
        }
        Trunc(j) => Trunc(*j),
        App(f, a) => app(
            subst_go(f, i, arg, avoid, fresh),
            subst_go(a, i, arg, avoid, fresh),
        ),
        Abs(j, b) => {
            if *j == i {
                // The binder shadows the substituted variable.
                Abs(*j, b.clone())
            } else if avoid.contains(j) && freeness(i, b) != Freeness::NotFree {
                let nj = *fresh;
                *fresh += 1;
                let renamed = subst_go(b, *j, &Var(nj), &BTreeSet::new(), fresh);
                abs(nj, subst_go(&renamed, i, arg, avoid, fresh))
            } else {
                abs(*j, subst_go(b, i, arg, avoid, fresh))
            }
        }
    }
}

/// Contracts the beta redex `(\x. M) N` at `p`.
pub fn beta_step(t: &LambdaTerm, p: &Position) -> Result<LambdaTerm, LambdaError> {
    let sub = t
        .at(p)
        .ok_or_else(|| LambdaError::InvalidPosition(p.clone()))?;
    let contractum = match sub {
        App(f, a) => match &**f {
            Abs(i, body) => substitute(body, *i, a),
            _ => return Err(LambdaError::NotARedex("beta", p.clone())),
        },
        _ => return Err(LambdaError::NotARedex("beta", p.clone())),
    };
    Ok(t.replace(p, contractum).expect("position checked"))
}

/// Contracts the eta redex `\x. M x` at `p`, provided `x` is not free in
/// `M`. Truncation that could hide an occurrence makes the step refuse.
pub fn eta_step(t: &LambdaTerm, p: &Position) -> Result<LambdaTerm, LambdaError> {
    let sub = t
        .at(p)
        .ok_or_else(|| LambdaError::InvalidPosition(p.clone()))?;
    let contractum = match sub {
        Abs(i, body) => match &**body {
            App(f, a) => {
                if !matches!(&**a, Var(j) if j == i) {
                    return Err(LambdaError::NotARedex("eta", p.clone()));
                }
                match freeness(*i, f) {
                    Freeness::NotFree => (**f).clone(),
                    Freeness::Free => return Err(LambdaError::NotARedex("eta", p.clone())),
                    Freeness::Unknown => return Err(LambdaError::UndecidableFreeness(*i)),
                }
            }
            _ => return Err(LambdaError::NotARedex("eta", p.clone())),
        },
        _ => return Err(LambdaError::NotARedex("eta", p.clone())),
    };
    Ok(t.replace(p, contractum).expect("position checked"))
}

/// Alpha equivalence.
pub fn alpha_eq(a: &LambdaTerm, b: &LambdaTerm) -> bool {
    fn go(a: &LambdaTerm, b: &LambdaTerm, env: &mut Vec<(i64, i64)>) -> bool {
        match (a, b) {
            (Var(i), Var(j)) => {
                for &(x, y) in env.iter().rev() {
                    match (x == *i, y == *j) {
                        (true, true) => return true,
                        (false, false) => continue,
                        _ => return false,
                    }
                }
                i == j
            }
            (Trunc(i), Trunc(j)) => i == j,
            (App(f1, a1), App(f2, a2)) => go(f1, f2, env) && go(a1, a2, env),
            (Abs(i, b1), Abs(j, b2)) => {
                env.push((*i, *j));
                let r = go(b1, b2, env);
                env.pop();
                r
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

/// Alpha equivalence of the depth-`d` truncations.
pub fn alpha_eq_to_depth(a: &LambdaTerm, b: &LambdaTerm, d: u32) -> bool {
    fn go(a: &LambdaTerm, b: &LambdaTerm, env: &mut Vec<(i64, i64)>, d: u32) -> bool {
        if d == 0 {
            return true;
        }
        match (a, b) {
            (Trunc(_), _) | (_, Trunc(_)) => true,
            (Var(i), Var(j)) => {
                for &(x, y) in env.iter().rev() {
                    match (x == *i, y == *j) {
                        (true, true) => return true,
                        (false, false) => continue,
                        _ => return false,
                    }
                }
                i == j
            }
            (App(f1, a1), App(f2, a2)) => go(f1, f2, env, d - 1) && go(a1, a2, env, d - 1),
            (Abs(i, b1), Abs(j, b2)) => {
                env.push((*i, *j));
                let r = go(b1, b2, env, d - 1);
                env.pop();
                r
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new(), d)
}

/// The translation `<w>_i` unfolded to `depth` constructors.
pub fn translate(w: &SpWord, i: i64, depth: u32) -> LambdaTerm {
    translate_from(w, 1, i, depth)
}

fn translate_from(w: &SpWord, letter_ix: u64, i: i64, depth: u32) -> LambdaTerm {
    if depth == 0 {
        return Trunc(Some(i));
    }
    match w.letter(letter_ix) {
        None => Trunc(Some(i)),
        Some(Letter::P) => app(translate_from(w, letter_ix + 1, i - 1, depth - 1), Var(i)),
        Some(Letter::S) => abs(i + 1, translate_from(w, letter_ix + 1, i + 1, depth - 1)),
    }
}

/// Checks the commuting square for the factor of `w` at letter position
/// `pos` (1-based): translating then stepping equals deleting the factor
/// then translating, compared to the depth that both routes determine.
pub fn check_commuting_square(
    w: &SpWord,
    i: i64,
    pos: u64,
    depth: u32,
) -> Result<bool, LambdaError> {
    let (a, b) = match (w.letter(pos), w.letter(pos + 1)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(LambdaError::NoFactorAtPosition("PS/SP".into(), pos)),
    };
    let k = (pos - 1) as u32;
    if k + 2 > depth {
        return Err(LambdaError::NoFactorAtPosition(
            "reachable PS/SP".into(),
            pos,
        ));
    }
    // The translation spine follows child 1 at every constructor.
    let redex_pos = Position(vec![1; k as usize]);
    let translated = translate(w, i, depth);
    let stepped = match (a, b) {
        (Letter::P, Letter::S) => beta_step(&translated, &redex_pos)?,
        (Letter::S, Letter::P) => eta_step(&translated, &redex_pos)?,
        _ => return Err(LambdaError::NoFactorAtPosition(format!("{a}{b}"), pos)),
    };
    // Delete the factor: prefix of pos-1 letters, then the tail after it.
    let mut shorter = w.drop_letters(pos + 1);
    let mut prefix: Vec<Letter> = Vec::new();
    for j in 1..pos {
        prefix.push(w.letter(j).expect("prefix letter"));
    }
    prefix.extend(shorter.prefix.iter().copied());
    shorter.prefix = prefix;
    let other_route = translate(&shorter, i, depth);
    let compare_depth = depth.saturating_sub(k + 2);
    Ok(alpha_eq_to_depth(&stepped, &other_route, compare_depth))
}

// ---------------------------------------------------------------------------
// the finite-term demo

/// One line of the scripted demo.
#[derive(Clone, Debug)]
pub struct DemoLine {
    pub label: String,
    pub term: LambdaTerm,
    pub steps_from_previous: usize,
    pub rule: &'static str,
    pub matches_display: bool,
}

#[derive(Clone, Debug)]
pub struct DemoReport {
    pub lines: Vec<DemoLine>,
    pub eta_branch: Vec<DemoLine>,
    pub ok: bool,
}

const W_IX: i64 = 100;
const F_IX: i64 = 101;
const A_IX: i64 = 102;
const B_IX: i64 = 103;
const C_IX: i64 = 104;
const X0: i64 = 0;

/// `I = \a. a`.
pub fn term_i() -> LambdaTerm {
    abs(A_IX, var(A_IX))
}

/// `W = \w f. f (w w (\a b c. f (a b c)) x0)`.
pub fn term_w() -> LambdaTerm {
    let inner = abss(
        &[A_IX, B_IX, C_IX],
        app(var(F_IX), apps(var(A_IX), vec![var(B_IX), var(C_IX)])),
    );
    abss(
        &[W_IX, F_IX],
        app(var(F_IX), apps(var(W_IX), vec![var(W_IX), inner, var(X0)])),
    )
}

/// `V_n = \v1...vn. (v1 ... vn)`.
pub fn term_v(n: usize) -> LambdaTerm {
    let binders: Vec<i64> = (1..=n as i64).map(|k| 200 + k).collect();
    let body = apps(
        var(binders[0]),
        binders[1..].iter().map(|&i| var(i)).collect(),
    );
    abss(&binders, body)
}

/// All beta-redex positions of a finite term.
pub fn beta_redexes(t: &LambdaTerm) -> Vec<Position> {
    fn go(t: &LambdaTerm, at: Position, out: &mut Vec<Position>) {
        match t {
            App(f, a) => {
                if matches!(&**f, Abs(_, _)) {
                    out.push(at.clone());
                }
                go(f, at.child(1), out);
                go(a, at.child(2), out);
            }
            Abs(_, b) => go(b, at.child(1), out),
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(t, Position::root(), &mut out);
    out
}

/// Canonical printing with de Bruijn levels, so alpha-variants coincide.
fn canon(t: &LambdaTerm) -> String {
    fn go(t: &LambdaTerm, env: &mut Vec<i64>, out: &mut String) {
        match t {
            Var(i) => match env.iter().rev().position(|&b| b == *i) {
                Some(k) => out.push_str(&format!("b{k}")),
                None => out.push_str(&format!("f{i}")),
            },
            Trunc(j) => out.push_str(&format!("t{j:?}")),
            App(f, a) => {
                out.push('(');
                go(f, env, out);
                out.push(' ');
                go(a, env, out);
                out.push(')');
            }
            Abs(i, b) => {
                out.push('\\');
                env.push(*i);
                go(b, env, out);
                env.pop();
            }
        }
    }
    let mut s = String::new();
    go(t, &mut Vec::new(), &mut s);
    s
}

/// Finds a shortest beta path from `t` to (an alpha-variant of) `target`:
/// breadth-first over redex choices with alpha-canonical deduplication.
fn reduce_to(t: &LambdaTerm, target: &LambdaTerm, max_steps: usize) -> Option<(LambdaTerm, usize)> {
    let goal = canon(target);
    let mut frontier = vec![t.clone()];
    let mut seen = BTreeSet::new();
    seen.insert(canon(t));
    for n in 0..=max_steps {
        if frontier.iter().any(|u| canon(u) == goal) {
            return Some((target.clone(), n));
        }
        let mut next = Vec::new();
        for u in &frontier {
            for p in beta_redexes(u) {
                let v = beta_step(u, &p).expect("enumerated redex");
                if seen.insert(canon(&v)) {
                    next.push(v);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    None
}

/// The scripted finite counterexample demo: a closed term reducing both to
/// an abstraction spine and to an application spine. Checks each displayed
/// line by alpha-comparison and also runs the eta branch.
pub fn wwi_demo() -> DemoReport {
    let w = term_w();
    let i = term_i();
    let x0 = var(X0);

    let start = apps(w.clone(), vec![w.clone(), i.clone()]);

    // Displayed line 1: I (W W (\a b c. I (a b c)) x0)
    let lam_abc_i = abss(
        &[A_IX, B_IX, C_IX],
        app(i.clone(), apps(var(A_IX), vec![var(B_IX), var(C_IX)])),
    );
    let line1 = app(
        i.clone(),
        apps(w.clone(), vec![w.clone(), lam_abc_i, x0.clone()]),
    );

    // Displayed line 2: W W V3 x0
    let line2 = apps(w.clone(), vec![w.clone(), term_v(3), x0.clone()]);

    // Displayed line 3: V3 (W W (\a b c. V3 (a b c)) x0) x0
    let lam_abc_v3 = abss(
        &[A_IX, B_IX, C_IX],
        app(term_v(3), apps(var(A_IX), vec![var(B_IX), var(C_IX)])),
    );
    let line3 = apps(
        term_v(3),
        vec![
            apps(w.clone(), vec![w.clone(), lam_abc_v3, x0.clone()]),
            x0.clone(),
        ],
    );

    // Displayed line 4: \v3. W W V5 x0 x0 v3
    let v3_binder = 203i64;
    let line4 = abs(
        v3_binder,
        apps(
            w.clone(),
            vec![w.clone(), term_v(5), x0.clone(), x0.clone(), var(v3_binder)],
        ),
    );

    // Displayed line 5: \v3 v5. W W V7 x0 x0 x0 v3 v5
    let v5_binder = 205i64;
    let line5 = abss(
        &[v3_binder, v5_binder],
        apps(
            w.clone(),
            vec![
                w.clone(),
                term_v(7),
                x0.clone(),
                x0.clone(),
                x0.clone(),
                var(v3_binder),
                var(v5_binder),
            ],
        ),
    );

    let mut lines = Vec::new();
    lines.push(DemoLine {
        label: "W W I".into(),
        term: start.clone(),
        steps_from_previous: 0,
        rule: "",
        matches_display: true,
    });

    let mut ok = true;
    let mut cur = start;
    for (label, target) in [
        ("I (W W (\\a b c. I (a b c)) x0)", &line1),
        ("W W V3 x0", &line2),
        ("V3 (W W (\\a b c. V3 (a b c)) x0) x0", &line3),
        ("\\v3. W W V5 x0 x0 v3", &line4),
        ("\\v3 v5. W W V7 x0 x0 x0 v3 v5", &line5),
    ] {
        match reduce_to(&cur, target, 16) {
            Some((reached, steps)) => {
                lines.push(DemoLine {
                    label: label.to_string(),
                    term: reached.clone(),
                    steps_from_previous: steps,
                    rule: "beta",
                    matches_display: true,
                });
                cur = reached;
            }
            None => {
                ok = false;
                lines.push(DemoLine {
                    label: label.to_string(),
                    term: cur.clone(),
                    steps_from_previous: 0,
                    rule: "beta",
                    matches_display: false,
                });
            }
        }
    }

    // Eta branch: W W V3 x0 -> eta^2 -> (W W I) x0.
    let mut eta_branch = Vec::new();
    let eta_target = app(apps(w.clone(), vec![w.clone(), i.clone()]), x0.clone());
    let mut eta_ok = false;
    // V3 = \v1 v2 v3. v1 v2 v3 contracts at its two inner abstractions:
    // the V3 subterm of line2 sits at position 1.2 (W W V3 = ((W W) V3)).
    let v3_pos = Position(vec![1, 2]);
    let inner1 = v3_pos.concat(&Position(vec![1, 1])); // \v3. (v1 v2) v3
    let inner2 = v3_pos.concat(&Position(vec![1])); // \v2. v1 v2 after first eta
    if let Ok(after1) = eta_step(&line2, &inner1) {
        if let Ok(after2) = eta_step(&after1, &inner2) {
            eta_ok = alpha_eq(&after2, &eta_target);
            eta_branch.push(DemoLine {
                label: "(W W I) x0".into(),
                term: after2,
                steps_from_previous: 2,
                rule: "eta",
                matches_display: eta_ok,
            });
        }
    }
    ok &= eta_ok;

    DemoReport {
        lines,
        eta_branch,
        ok,
    }
}

// ---------------------------------------------------------------------------
// printing

pub fn pretty(t: &LambdaTerm) -> String {
    fn go(t: &LambdaTerm, out: &mut String, parens_app: bool) {
        match t {
            Var(i) => out.push_str(&format!("x{i}")),
            Trunc(Some(i)) => out.push_str(&format!("..{i}..")),
            Trunc(None) => out.push_str("..."),
            Abs(i, b) => {
                out.push_str(&format!("\\x{i}. "));
                go(b, out, false);
            }
            App(_, _) => {
                if parens_app {
                    out.push('(');
                }
                // Flatten the application spine.
                let mut spine = Vec::new();
                let mut cur = t;
                while let App(f, a) = cur {
                    spine.push(&**a);
                    cur = f;
                }
                spine.reverse();
                let needs = !matches!(cur, Var(_) | Trunc(_));
                if needs {
                    out.push('(');
                }
                go(cur, out, true);
                if needs {
                    out.push(')');
                }
                for a in spine {
                    out.push(' ');
                    let wrap = !matches!(a, Var(_) | Trunc(_));
                    if wrap {
                        out.push('(');
                    }
                    go(a, out, true);
                    if wrap {
                        out.push(')');
                    }
                }
                if parens_app {
                    out.push(')');
                }
            }
        }
    }
    let mut s = String::new();
    go(t, &mut s, false);
    s
}

impl fmt::Display for LambdaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", pretty(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spwords::SpWord;

    fn word(spec: &str) -> SpWord {
        SpWord::parse_spec(spec).unwrap()
    }

    #[test]
    fn translate_clauses() {
        // P clause at depth 1.
        let psi = word("psi");
        let t = translate(&psi, 0, 1);
        assert_eq!(t, app(Trunc(Some(-1)), Var(0)));
        // S clause at depth 1.
        let s_omega = word("s_omega");
        let t = translate(&s_omega, 0, 1);
        assert_eq!(t, abs(1, Trunc(Some(1))));
    }

    #[test]
    fn translate_psi_prefix() {
        // psi = P S S P P P ...; by hand:
        // <psi>_0 = <SSPPP..>_-1 x0
        //         = (\x0. <SPPP..>_0) x0
        //         = (\x0. \x1. <PPP..>_1) x0
        //         = (\x0. \x1. (<PP..>_0 x1)) x0 ...
        let psi = word("psi");
        let t = translate(&psi, 0, 5);
        let expect = app(
            abs(0, abs(1, app(app(Trunc(Some(-1)), Var(0)), Var(1)))),
            Var(0),
        );
        assert_eq!(t, expect);
    }

    #[test]
    fn translation_is_deterministic_prefixwise() {
        for name in ["psi", "zeta", "xi"] {
            let w = word(name);
            for d in 0..10 {
                let small = translate(&w, 0, d);
                let big = translate(&w, 0, d + 1);
                assert!(alpha_eq_to_depth(&small, &big, d), "{name} depth {d}");
            }
        }
    }

    #[test]
    fn normal_form_shapes() {
        // <S^w> is a pure abstraction spine, <P^w> a pure application spine.
        let mut t = translate(&word("s_omega"), 0, 16);
        let mut abs_count = 0;
        while let Abs(_, b) = t {
            abs_count += 1;
            t = *b;
        }
        assert_eq!(abs_count, 16);
        let mut t = translate(&word("p_omega"), 0, 16);
        let mut app_count = 0;
        while let App(f, a) = t {
            assert!(matches!(*a, Var(_)));
            app_count += 1;
            t = *f;
        }
        assert_eq!(app_count, 16);
    }

    #[test]
    fn beta_and_eta_basics() {
        // (\x1. x1) a -> a
        let t = app(abs(1, var(1)), var(50));
        assert_eq!(beta_step(&t, &Position::root()).unwrap(), var(50));
        // \x1. (y x1) -> y
        let t = abs(1, app(var(60), var(1)));
        assert_eq!(eta_step(&t, &Position::root()).unwrap(), var(60));
        // eta refused when the body is cut off right at the binder's scope.
        let t = abs(1, app(Trunc(Some(5)), var(1)));
        assert_eq!(
            eta_step(&t, &Position::root()),
            Err(LambdaError::UndecidableFreeness(1))
        );
    }

    #[test]
    fn capture_avoidance() {
        // (\x1. \x2. x1) x2  ->  \fresh. x2
        let t = app(abs(1, abs(2, var(1))), var(2));
        let got = beta_step(&t, &Position::root()).unwrap();
        assert!(alpha_eq(&got, &abs(9, var(2))));
        assert!(!alpha_eq(&got, &abs(2, var(2))));
    }

    #[test]
    fn squares_on_fixtures() {
        let psi = word("psi");
        // First PS factor of psi is at letters 1-2.
        assert!(check_commuting_square(&psi, 0, 1, 12).unwrap());
        let zeta = word("zeta");
        assert!(check_commuting_square(&zeta, 0, 1, 12).unwrap());
        // (SP)^w has an SP factor at position 1: eta square.
        let spw = word("prefix=\"\"; periodic=\"SP\"");
        assert!(check_commuting_square(&spw, 0, 1, 12).unwrap());
        // S^w has no factor anywhere.
        assert!(matches!(
            check_commuting_square(&word("s_omega"), 0, 1, 12),
            Err(LambdaError::NoFactorAtPosition(_, _))
        ));
    }

    #[test]
    fn squares_all_factors_within_depth() {
        for name in ["psi", "zeta", "xi"] {
            let w = word(name);
            for pos in 1..=14u64 {
                let (a, b) = (w.letter(pos).unwrap(), w.letter(pos + 1).unwrap());
                if a != b {
                    assert!(
                        check_commuting_square(&w, 0, pos, 16).unwrap(),
                        "{name} factor at {pos}"
                    );
                }
            }
        }
    }

    #[test]
    fn wwi_demo_passes() {
        let report = wwi_demo();
        assert!(
            report.ok,
            "demo failed: {:#?}",
            report
                .lines
                .iter()
                .map(|l| (l.label.clone(), l.matches_display, l.steps_from_previous))
                .collect::<Vec<_>>()
        );
        // The two hops displayed with beta^2 take two steps each.
        assert_eq!(report.lines[1].steps_from_previous, 2);
        assert_eq!(report.lines[2].steps_from_previous, 2);
        assert_eq!(report.eta_branch[0].steps_from_previous, 2);
    }

    #[test]
    fn v3_is_alpha_canonical() {
        let v3 = term_v(3);
        let other = abss(&[7, 8, 9], apps(var(7), vec![var(8), var(9)]));
        assert!(alpha_eq(&v3, &other));
    }
}
