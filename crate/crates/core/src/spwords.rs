//! Finitely described infinite {P,S}-words and their analysis under the
//! string rewrite system PS -> ε, SP -> ε.
//!
//! A word is a finite prefix followed by a tail that is either absent,
//! periodic, or a family of affine blocks: at super-block `k` the family
//! emits `letter^(a + b*k)` for each block entry, cycling the list with
//! `k` incremented per full cycle. This covers every word analysed here
//! (the oscillating word, the alternating word, both limit normal forms,
//! and all periodic examples) while keeping the sum/norm analysis in
//! closed form: cycle drift is affine in `k`, cumulative sums quadratic.

use std::fmt;

use thiserror::Error;

use crate::term::Term;

#[derive(Debug, Error, PartialEq)]
pub enum SpError {
    #[error("parse error in word spec: {0}")]
    Parse(String),
    #[error("operation needs an infinite tail")]
    FiniteWord,
    #[error("operation needs a finite word")]
    InfiniteWord,
    #[error("norm is finite; no strongly convergent reduction to that normal form exists")]
    NormFinite,
    #[error("both norms must be infinite to reach an arbitrary word")]
    NotUniversal,
    #[error("invalid affine blocks: {0}")]
    BadBlocks(String),
    #[error("an exact term rendering needs a periodic or finite word; pass a depth")]
    NeedsDepth,
    #[error("{0}")]
    Term(#[from] crate::term::TermError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    P,
    S,
}

impl Letter {
    pub fn delta(self) -> i64 {
        match self {
            Letter::S => 1,
            Letter::P => -1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Letter::P => "P",
            Letter::S => "S",
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

pub fn parse_letters(s: &str) -> Result<Vec<Letter>, SpError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'P' | 'p' => Ok(Letter::P),
            'S' | 's' => Ok(Letter::S),
            other => Err(SpError::Parse(format!("unexpected letter `{other}`"))),
        })
        .collect()
}

pub fn letters_to_string(w: &[Letter]) -> String {
    w.iter().map(|l| l.symbol()).collect()
}

/// One affine block: `letter` repeated `base + step * k` times in cycle `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub letter: Letter,
    pub base: u64,
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    FiniteOnly,
    Periodic(Vec<Letter>),
    AffineBlocks(Vec<Block>),
}

/// A finitely described {P,S}-word: explicit prefix plus tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpWord {
    pub prefix: Vec<Letter>,
    pub tail: Tail,
}

/// Finite or infinite norm value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    Finite(u64),
    Infinite,
}

impl Norm {
    pub fn is_infinite(self) -> bool {
        matches!(self, Norm::Infinite)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Finite(n) => write!(f, "{n}"),
            Norm::Infinite => write!(f, "inf"),
        }
    }
}

/// Venn-region taxonomy for infinite words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VennRegion {
    /// Both norms infinite: reduces to both limit normal forms, root-active.
    RaCore,
    /// Strongly normalizing towards S^w.
    SnToS,
    /// Strongly normalizing towards P^w.
    SnToP,
    /// Root-active without both norms infinite.
    RaOther,
    /// Reaches S^w only, neither strongly normalizing nor root-active.
    SOnlyNonSn,
    /// Reaches P^w only, neither strongly normalizing nor root-active.
    POnlyNonSn,
    /// No infinite normal form reachable and not root-active.
    Stuck,
}

impl fmt::Display for VennRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VennRegion::RaCore => "RA-core",
            VennRegion::SnToS => "SN-to-S",
            VennRegion::SnToP => "SN-to-P",
            VennRegion::RaOther => "RA-other",
            VennRegion::SOnlyNonSn => "S-only-non-SN",
            VennRegion::POnlyNonSn => "P-only-non-SN",
            VennRegion::Stuck => "stuck",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpClassification {
    pub snorm: Norm,
    pub pnorm: Norm,
    pub reduces_to_s_omega: bool,
    pub reduces_to_p_omega: bool,
    pub root_active: bool,
    pub sn_inf: bool,
    pub wn_inf: bool,
    pub venn_region: VennRegion,
}

/// One segment of a reduction witness: a finite factor with sum ±1 and the
/// rewrite steps taking it to a single letter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentWitness {
    pub letters: Vec<Letter>,
    pub sum: i64,
    /// Steps as (1-based index of the left letter of the deleted factor,
    /// deleted pair), applied in order.
    pub steps: Vec<(usize, [Letter; 2])>,
    pub normal_form: Vec<Letter>,
}

impl SpWord {
    pub fn finite(letters: Vec<Letter>) -> SpWord {
        SpWord {
            prefix: letters,
            tail: Tail::FiniteOnly,
        }
    }

    pub fn periodic(prefix: Vec<Letter>, period: Vec<Letter>) -> Result<SpWord, SpError> {
        if period.is_empty() {
            return Err(SpError::Parse("empty period".into()));
        }
        Ok(SpWord {
            prefix,
            tail: Tail::Periodic(period),
        })
    }

    pub fn affine(prefix: Vec<Letter>, blocks: Vec<Block>) -> Result<SpWord, SpError> {
        if blocks.is_empty() {
            return Err(SpError::BadBlocks("no blocks".into()));
        }
        if blocks.iter().map(|b| b.base + b.step).sum::<u64>() == 0 {
            return Err(SpError::BadBlocks(
                "all blocks empty for every cycle".into(),
            ));
        }
        Ok(SpWord {
            prefix,
            tail: Tail::AffineBlocks(blocks),
        })
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self.tail, Tail::FiniteOnly)
    }

    pub fn finite_len(&self) -> Option<u64> {
        match self.tail {
            Tail::FiniteOnly => Some(self.prefix.len() as u64),
            _ => None,
        }
    }

    /// The i-th letter, 1-indexed. `None` past the end of a finite word.
    pub fn letter(&self, i: u64) -> Option<Letter> {
        if i == 0 {
            return None;
        }
        let ix = i - 1;
        if (ix as usize) < self.prefix.len() {
            return Some(self.prefix[ix as usize]);
        }
        let mut rest = ix - self.prefix.len() as u64;
        match &self.tail {
            Tail::FiniteOnly => None,
            Tail::Periodic(v) => Some(v[(rest % v.len() as u64) as usize]),
            Tail::AffineBlocks(blocks) => {
                let mut k = 0u64;
                loop {
                    for b in blocks {
                        let n = b.base + b.step * k;
                        if rest < n {
                            return Some(b.letter);
                        }
                        rest -= n;
                    }
                    k += 1;
                }
            }
        }
    }

    /// An iterator over the letters.
    pub fn letters(&self) -> LetterIter<'_> {
        LetterIter {
            word: self,
            ix: 0,
            cycle: 0,
            block: 0,
            within: 0,
        }
    }

    /// The running letter count: +1 per S, -1 per P over the first `n`
    /// letters.
    pub fn sum(&self, n: u64) -> i64 {
        let mut acc = 0i64;
        for (i, l) in self.letters().enumerate() {
            if (i as u64) >= n {
                break;
            }
            acc += l.delta();
        }
        acc
    }

    /// Drops the first `n` letters, keeping a finite description.
    pub fn drop_letters(&self, n: u64) -> SpWord {
        let plen = self.prefix.len() as u64;
        if n <= plen {
            return SpWord {
                prefix: self.prefix[n as usize..].to_vec(),
                tail: self.tail.clone(),
            };
        }
        let mut rest = n - plen;
        match &self.tail {
            Tail::FiniteOnly => SpWord::finite(Vec::new()),
            Tail::Periodic(v) => {
                let r = (rest % v.len() as u64) as usize;
                let mut period = v[r..].to_vec();
                period.extend_from_slice(&v[..r]);
                SpWord {
                    prefix: Vec::new(),
                    tail: Tail::Periodic(period),
                }
            }
            Tail::AffineBlocks(blocks) => {
                // Walk cycles until the drop point, then emit the remainder
                // of the current cycle as an explicit prefix and restart the
                // blocks at the next cycle index.
                let mut k = 0u64;
                loop {
                    let cycle_len: u64 = blocks.iter().map(|b| b.base + b.step * k).sum();
                    if rest >= cycle_len {
                        rest -= cycle_len;
                        k += 1;
                        continue;
                    }
                    let mut prefix = Vec::new();
                    for b in blocks {
                        let n_b = b.base + b.step * k;
                        for _ in 0..n_b {
                            if rest > 0 {
                                rest -= 1;
                            } else {
                                prefix.push(b.letter);
                            }
                        }
                    }
                    let shifted: Vec<Block> = blocks
                        .iter()
                        .map(|b| Block {
                            letter: b.letter,
                            base: b.base + b.step * (k + 1),
                            step: b.step,
                        })
                        .collect();
                    return SpWord {
                        prefix,
                        tail: Tail::AffineBlocks(shifted),
                    };
                }
            }
        }
    }

    pub fn s_norm(&self) -> Norm {
        self.norm(1)
    }

    pub fn p_norm(&self) -> Norm {
        self.norm(-1)
    }

    /// sup over n of `sign * sum(w, n)`, decided in closed form.
    fn norm(&self, sign: i64) -> Norm {
        let analysis = self.analyse();
        let max = match sign {
            1 => analysis.sup_sum,
            _ => analysis.sup_neg_sum,
        };
        match max {
            None => Norm::Infinite,
            // sum(w, 0) = 0, so norms are never negative.
            Some(v) => Norm::Finite(v.max(0) as u64),
        }
    }

    /// The normal form of a finite word: S^z for z = sum(w) when z >= 0,
    /// else P^(-z).
    pub fn nf_finite(&self) -> Result<Vec<Letter>, SpError> {
        if self.is_infinite() {
            return Err(SpError::InfiniteWord);
        }
        let z = self.sum(self.prefix.len() as u64);
        Ok(if z >= 0 {
            vec![Letter::S; z as usize]
        } else {
            vec![Letter::P; (-z) as usize]
        })
    }

    pub fn classify(&self) -> Result<SpClassification, SpError> {
        if !self.is_infinite() {
            return Err(SpError::FiniteWord);
        }
        let a = self.analyse();
        let snorm = match a.sup_sum {
            None => Norm::Infinite,
            Some(v) => Norm::Finite(v.max(0) as u64),
        };
        let pnorm = match a.sup_neg_sum {
            None => Norm::Infinite,
            Some(v) => Norm::Finite(v.max(0) as u64),
        };
        let reduces_to_s_omega = snorm.is_infinite();
        let reduces_to_p_omega = pnorm.is_infinite();
        let root_active = a.root_active;
        let sn_inf = a.sn_inf;
        let wn_inf = reduces_to_s_omega || reduces_to_p_omega;
        let venn_region = if reduces_to_s_omega && reduces_to_p_omega {
            VennRegion::RaCore
        } else if sn_inf && reduces_to_s_omega {
            VennRegion::SnToS
        } else if sn_inf && reduces_to_p_omega {
            VennRegion::SnToP
        } else if root_active {
            VennRegion::RaOther
        } else if reduces_to_s_omega {
            VennRegion::SOnlyNonSn
        } else if reduces_to_p_omega {
            VennRegion::POnlyNonSn
        } else {
            VennRegion::Stuck
        };
        Ok(SpClassification {
            snorm,
            pnorm,
            reduces_to_s_omega,
            reduces_to_p_omega,
            root_active,
            sn_inf,
            wn_inf,
            venn_region,
        })
    }

    fn analyse(&self) -> Analysis {
        let c0 = self.sum(self.prefix.len() as u64);
        let mut prefix_max = 0i64; // sum(w, 0) = 0 participates
        let mut prefix_min = 0i64;
        let mut acc = 0i64;
        for l in &self.prefix {
            acc += l.delta();
            prefix_max = prefix_max.max(acc);
            prefix_min = prefix_min.min(acc);
        }
        match &self.tail {
            Tail::FiniteOnly => Analysis {
                sup_sum: Some(prefix_max),
                sup_neg_sum: Some(-prefix_min),
                root_active: false,
                sn_inf: false,
            },
            Tail::Periodic(v) => {
                let delta: i64 = v.iter().map(|l| l.delta()).sum();
                // Extremes of the running sum within one period, relative to
                // the period start.
                let mut off = 0i64;
                let mut per_max = 0i64;
                let mut per_min = 0i64;
                let mut hits_zero = c0 == 0;
                for l in v {
                    off += l.delta();
                    per_max = per_max.max(off);
                    per_min = per_min.min(off);
                    if delta == 0 && c0 + off == 0 {
                        hits_zero = true;
                    }
                }
                // With nonzero drift the extremes over cycle k shift by
                // delta*k, so the sup on the bounded side is met in cycle 0.
                let (sup_sum, sup_neg_sum) = match delta.cmp(&0) {
                    std::cmp::Ordering::Greater => (None, Some(-prefix_min.min(c0 + per_min))),
                    std::cmp::Ordering::Less => (Some(prefix_max.max(c0 + per_max)), None),
                    std::cmp::Ordering::Equal => (
                        Some(prefix_max.max(c0 + per_max)),
                        Some(-prefix_min.min(c0 + per_min)),
                    ),
                };
                Analysis {
                    sup_sum,
                    sup_neg_sum,
                    root_active: delta == 0 && hits_zero,
                    sn_inf: delta != 0,
                }
            }
            Tail::AffineBlocks(blocks) => analyse_blocks(c0, prefix_max, prefix_min, blocks),
        }
    }

    /// First `segments` elements of a partition of the word into finite
    /// factors of sum +1 (towards S^w) or -1 (towards P^w), each with its
    /// reduction to a single letter.
    pub fn witness_to(
        &self,
        target: Letter,
        segments: usize,
    ) -> Result<Vec<SegmentWitness>, SpError> {
        if !self.is_infinite() {
            return Err(SpError::FiniteWord);
        }
        let needed = match target {
            Letter::S => self.s_norm(),
            Letter::P => self.p_norm(),
        };
        if !needed.is_infinite() {
            return Err(SpError::NormFinite);
        }
        let goals = vec![target; segments];
        self.witness_segments(&goals)
    }

    /// Partition with `sum(w_i) = +1` when `u(i) = S` and `-1` when
    /// `u(i) = P`; needs both norms infinite.
    pub fn witness_to_word(
        &self,
        u: &SpWord,
        segments: usize,
    ) -> Result<Vec<SegmentWitness>, SpError> {
        if !self.is_infinite() {
            return Err(SpError::FiniteWord);
        }
        if !(self.s_norm().is_infinite() && self.p_norm().is_infinite()) {
            return Err(SpError::NotUniversal);
        }
        let goals: Vec<Letter> = (1..=segments as u64)
            .map(|i| u.letter(i).ok_or(SpError::FiniteWord))
            .collect::<Result<_, _>>()?;
        self.witness_segments(&goals)
    }

    /// Cuts segments at first crossings of the target running sums. A +1
    /// segment then has all proper partial sums <= 0 and reduces to S with
    /// the PS rule alone; dually for -1 segments and SP. Within a segment
    /// the leftmost factor is contracted first.
    fn witness_segments(&self, goals: &[Letter]) -> Result<Vec<SegmentWitness>, SpError> {
        let mut out = Vec::new();
        let mut level = 0i64;
        let mut iter = self.letters();
        for &goal in goals {
            let target = level + goal.delta();
            let mut seg = Vec::new();
            loop {
                let l = iter.next().ok_or(SpError::FiniteWord)?;
                seg.push(l);
                level += l.delta();
                if level == target {
                    break;
                }
            }
            let steps = reduce_segment(&seg, goal);
            let sum: i64 = seg.iter().map(|l| l.delta()).sum();
            out.push(SegmentWitness {
                letters: seg,
                sum,
                normal_form: vec![goal],
                steps,
            });
        }
        Ok(out)
    }

    /// Renders the word as a unary term over P/S. With `depth = None` the
    /// rendering is exact: finite words get a variable leaf, periodic words
    /// become rational terms. Affine words need a depth.
    pub fn to_trs_term(&self, depth: Option<u32>) -> Result<Term, SpError> {
        match depth {
            Some(d) => {
                let mut letters = Vec::new();
                for (i, l) in self.letters().enumerate() {
                    if i as u32 >= d {
                        break;
                    }
                    letters.push(l);
                }
                let mut t = Term::var("x");
                for l in letters.into_iter().rev() {
                    t = Term::fun(l.symbol(), vec![t]);
                }
                Ok(t)
            }
            None => match &self.tail {
                Tail::FiniteOnly => {
                    let mut t = Term::var("x");
                    for l in self.prefix.iter().rev() {
                        t = Term::fun(l.symbol(), vec![t]);
                    }
                    Ok(t)
                }
                Tail::Periodic(v) => {
                    let mut body = String::new();
                    let mut close = 0;
                    for l in v {
                        body.push_str(l.symbol());
                        body.push('(');
                        close += 1;
                    }
                    body.push_str("r0");
                    body.push_str(&")".repeat(close));
                    let cycle = Term::parse(&format!("rec r0 = {body}"))?;
                    if self.prefix.is_empty() {
                        return Ok(cycle);
                    }
                    let mut text = String::new();
                    let mut close = 0;
                    for l in &self.prefix {
                        text.push_str(l.symbol());
                        text.push('(');
                        close += 1;
                    }
                    text.push_str("[]");
                    text.push_str(&")".repeat(close));
                    let ctx =
                        crate::term::Context::new(Term::parse(&text)?).expect("exactly one hole");
                    Ok(ctx.fill(&cycle))
                }
                Tail::AffineBlocks(_) => Err(SpError::NeedsDepth),
            },
        }
    }

    /// The word-spec DSL: `prefix="PS"; periodic="SP"`, or
    /// `blocks=[(P,1,2),(S,2,2)]`, or a named builtin.
    pub fn parse_spec(input: &str) -> Result<SpWord, SpError> {
        let input = input.trim();
        if let Some(w) = builtin(input) {
            return Ok(w);
        }
        let mut prefix = Vec::new();
        let mut tail = Tail::FiniteOnly;
        for part in input.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| SpError::Parse(format!("expected key=value, got `{part}`")))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "prefix" => prefix = parse_letters(value.trim_matches('"'))?,
                "periodic" => {
                    let v = parse_letters(value.trim_matches('"'))?;
                    if v.is_empty() {
                        return Err(SpError::Parse("empty period".into()));
                    }
                    tail = Tail::Periodic(v);
                }
                "finite" => tail = Tail::FiniteOnly,
                "blocks" => tail = Tail::AffineBlocks(parse_blocks(value)?),
                other => return Err(SpError::Parse(format!("unknown key `{other}`"))),
            }
        }
        match tail {
            Tail::AffineBlocks(blocks) => SpWord::affine(prefix, blocks),
            Tail::Periodic(v) => SpWord::periodic(prefix, v),
            Tail::FiniteOnly => Ok(SpWord::finite(prefix)),
        }
    }
}

impl fmt::Display for SpWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() || matches!(self.tail, Tail::FiniteOnly) {
            write!(f, "prefix=\"{}\"", letters_to_string(&self.prefix))?;
            if !matches!(self.tail, Tail::FiniteOnly) {
                write!(f, "; ")?;
            }
        }
        match &self.tail {
            Tail::FiniteOnly => Ok(()),
            Tail::Periodic(v) => write!(f, "periodic=\"{}\"", letters_to_string(v)),
            Tail::AffineBlocks(blocks) => {
                let parts: Vec<String> = blocks
                    .iter()
                    .map(|b| format!("({},{},{})", b.letter, b.base, b.step))
                    .collect();
                write!(f, "blocks=[{}]", parts.join(","))
            }
        }
    }
}

fn parse_blocks(value: &str) -> Result<Vec<Block>, SpError> {
    let inner = value
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| SpError::Parse("blocks must be [...]".into()))?;
    let mut blocks = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| SpError::Parse("expected `(`".into()))?;
        let close = rest
            .find(')')
            .ok_or_else(|| SpError::Parse("expected `)`".into()))?;
        let tuple = &rest[open + 1..close];
        let fields: Vec<&str> = tuple.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(SpError::Parse(format!("expected (letter,a,b): `{tuple}`")));
        }
        let letter = match fields[0] {
            "P" | "p" => Letter::P,
            "S" | "s" => Letter::S,
            other => return Err(SpError::Parse(format!("bad letter `{other}`"))),
        };
        let base = fields[1]
            .parse()
            .map_err(|_| SpError::Parse(format!("bad number `{}`", fields[1])))?;
        let step = fields[2]
            .parse()
            .map_err(|_| SpError::Parse(format!("bad number `{}`", fields[2])))?;
        blocks.push(Block { letter, base, step });
        rest = rest[close + 1..].trim_start_matches(',').trim();
    }
    if blocks.is_empty() {
        return Err(SpError::Parse("no blocks".into()));
    }
    Ok(blocks)
}

/// Named builtin words.
pub fn builtin(name: &str) -> Option<SpWord> {
    match name {
        // P^1 S^2 P^3 S^4 ...
        "psi" => SpWord::affine(
            vec![],
            vec![
                Block {
                    letter: Letter::P,
                    base: 1,
                    step: 2,
                },
                Block {
                    letter: Letter::S,
                    base: 2,
                    step: 2,
                },
            ],
        )
        .ok(),
        // (PS)^w
        "zeta" => SpWord::periodic(vec![], vec![Letter::P, Letter::S]).ok(),
        // S^1 P^1 S^2 P^2 ...
        "xi" => SpWord::affine(
            vec![],
            vec![
                Block {
                    letter: Letter::S,
                    base: 1,
                    step: 1,
                },
                Block {
                    letter: Letter::P,
                    base: 1,
                    step: 1,
                },
            ],
        )
        .ok(),
        // S xi
        "xi_prime" => SpWord::affine(
            vec![Letter::S],
            vec![
                Block {
                    letter: Letter::S,
                    base: 1,
                    step: 1,
                },
                Block {
                    letter: Letter::P,
                    base: 1,
                    step: 1,
                },
            ],
        )
        .ok(),
        "s_omega" => SpWord::periodic(vec![], vec![Letter::S]).ok(),
        "p_omega" => SpWord::periodic(vec![], vec![Letter::P]).ok(),
        "ssp_omega" => SpWord::periodic(vec![], vec![Letter::S, Letter::S, Letter::P]).ok(),
        _ => None,
    }
}

pub struct LetterIter<'a> {
    word: &'a SpWord,
    ix: u64,
    cycle: u64,
    block: usize,
    within: u64,
}

impl<'a> Iterator for LetterIter<'a> {
    type Item = Letter;

    fn next(&mut self) -> Option<Letter> {
        if (self.ix as usize) < self.word.prefix.len() {
            let l = self.word.prefix[self.ix as usize];
            self.ix += 1;
            return Some(l);
        }
        match &self.word.tail {
            Tail::FiniteOnly => None,
            Tail::Periodic(v) => {
                let off = (self.ix - self.word.prefix.len() as u64) % v.len() as u64;
                self.ix += 1;
                Some(v[off as usize])
            }
            Tail::AffineBlocks(blocks) => loop {
                let b = &blocks[self.block];
                let n = b.base + b.step * self.cycle;
                if self.within < n {
                    self.within += 1;
                    self.ix += 1;
                    return Some(b.letter);
                }
                self.within = 0;
                self.block += 1;
                if self.block == blocks.len() {
                    self.block = 0;
                    self.cycle += 1;
                }
            },
        }
    }
}

struct Analysis {
    /// `None` means the supremum is infinite.
    sup_sum: Option<i64>,
    sup_neg_sum: Option<i64>,
    root_active: bool,
    sn_inf: bool,
}

/// Closed-form analysis of an affine-blocks tail.
///
/// With `C(k)` the cumulative sum before cycle `k` and `p_i(k)` the affine
/// in-cycle partial sum after block `i`, the checkpoint values
/// `q_i(k) = C(k) + p_i(k)` are quadratic in `k` with leading coefficient
/// `B/2`, where `B` is the affine part of the cycle drift. Since the
/// running sum moves in ±1 steps, its range within a cycle is exactly the
/// interval spanned by the checkpoints, which decides norms, root activity
/// (0 lies in the range for infinitely many cycles) and strong
/// normalization (the range escapes to +inf or -inf).
fn analyse_blocks(c0: i64, prefix_max: i64, prefix_min: i64, blocks: &[Block]) -> Analysis {
    // p_i(k) = alpha_i + beta_i * k at block boundaries, including p_0 = 0.
    let mut alphas = vec![0i64];
    let mut betas = vec![0i64];
    let mut alpha = 0i64;
    let mut beta = 0i64;
    for b in blocks {
        alpha += b.letter.delta() * b.base as i64;
        beta += b.letter.delta() * b.step as i64;
        alphas.push(alpha);
        betas.push(beta);
    }
    let a_drift = alpha; // cycle drift = a_drift + b_drift * k
    let b_drift = beta;
    let checkpoints = alphas.len();

    let cum =
        |k: i128| -> i128 { c0 as i128 + a_drift as i128 * k + b_drift as i128 * k * (k - 1) / 2 };
    let q = |i: usize, k: i128| -> i128 { cum(k) + alphas[i] as i128 + betas[i] as i128 * k };

    // Supremum of sgn * q over all k >= 0 and i, or None when unbounded.
    let sup_of = |negate: bool| -> Option<i64> {
        let sgn: i128 = if negate { -1 } else { 1 };
        if sgn * b_drift as i128 > 0 {
            return None;
        }
        let mut best = if negate { -prefix_min } else { prefix_max } as i128;
        if b_drift == 0 {
            for i in 0..checkpoints {
                let slope = sgn * (a_drift as i128 + betas[i] as i128);
                if slope > 0 {
                    return None;
                }
                best = best.max(sgn * q(i, 0));
            }
            return Some(best as i64);
        }
        // sgn * q_i is a downward parabola in k: evaluate up to past every
        // vertex. 2 * (sgn q_i)(k) = (sgn b) k^2 + sgn(2a - b + 2 beta_i) k + c,
        // vertex at k = -lin / (2 lead).
        let lead = sgn * b_drift as i128;
        let mut k_max = 1i128;
        for i in 0..checkpoints {
            let lin = sgn * (2 * a_drift as i128 - b_drift as i128 + 2 * betas[i] as i128);
            let vertex = -lin / (2 * lead);
            k_max = k_max.max(vertex + 2);
        }
        for k in 0..=k_max {
            for i in 0..checkpoints {
                best = best.max(sgn * q(i, k));
            }
        }
        Some(best as i64)
    };

    let sup_sum = sup_of(false);
    let sup_neg_sum = sup_of(true);

    // Eventual behaviour of the per-cycle minimum / maximum checkpoint.
    #[derive(PartialEq)]
    enum Trend {
        PlusInf,
        MinusInf,
        Constant(i64),
    }
    let trend = |want_min: bool| -> Trend {
        if b_drift > 0 {
            return Trend::PlusInf;
        }
        if b_drift < 0 {
            return Trend::MinusInf;
        }
        let slopes: Vec<i64> = (0..checkpoints).map(|i| a_drift + betas[i]).collect();
        let s = if want_min {
            *slopes.iter().min().unwrap()
        } else {
            *slopes.iter().max().unwrap()
        };
        match s.cmp(&0) {
            std::cmp::Ordering::Equal => {
                let vals: Vec<i64> = (0..checkpoints)
                    .filter(|&i| slopes[i] == 0)
                    .map(|i| c0 + alphas[i])
                    .collect();
                let c = if want_min {
                    *vals.iter().min().unwrap()
                } else {
                    *vals.iter().max().unwrap()
                };
                Trend::Constant(c)
            }
            std::cmp::Ordering::Greater => Trend::PlusInf,
            std::cmp::Ordering::Less => Trend::MinusInf,
        }
    };

    let min_trend = trend(true);
    let max_trend = trend(false);
    let min_eventually_nonpositive = match min_trend {
        Trend::MinusInf => true,
        Trend::Constant(c) => c <= 0,
        Trend::PlusInf => false,
    };
    let max_eventually_nonnegative = match max_trend {
        Trend::PlusInf => true,
        Trend::Constant(c) => c >= 0,
        Trend::MinusInf => false,
    };
    let root_active = min_eventually_nonpositive && max_eventually_nonnegative;
    let sn_inf = min_trend == Trend::PlusInf || max_trend == Trend::MinusInf;

    Analysis {
        sup_sum,
        sup_neg_sum,
        root_active,
        sn_inf,
    }
}

/// Contracts the leftmost admissible factor repeatedly: `PS` when heading
/// for S, `SP` when heading for P. Returns the step list.
fn reduce_segment(seg: &[Letter], goal: Letter) -> Vec<(usize, [Letter; 2])> {
    let pair = match goal {
        Letter::S => [Letter::P, Letter::S],
        Letter::P => [Letter::S, Letter::P],
    };
    let mut word = seg.to_vec();
    let mut steps = Vec::new();
    loop {
        let mut found = None;
        for i in 0..word.len().saturating_sub(1) {
            if word[i] == pair[0] && word[i + 1] == pair[1] {
                found = Some(i);
                break;
            }
        }
        match found {
            Some(i) => {
                steps.push((i + 1, pair));
                word.drain(i..=i + 1);
            }
            None => break,
        }
    }
    debug_assert_eq!(word, vec![goal]);
    steps
}

/// Replays a segment witness, checking each deletion step; returns the
/// final word.
pub fn replay_segment(w: &SegmentWitness) -> Option<Vec<Letter>> {
    let mut word = w.letters.clone();
    for (ix, pair) in &w.steps {
        let i = ix - 1;
        if i + 1 >= word.len() || word[i] != pair[0] || word[i + 1] != pair[1] {
            return None;
        }
        word.drain(i..=i + 1);
    }
    Some(word)
}

/// Decodes a unary P/S term spine back to letters; used to bridge with the
/// term rewriting side.
pub fn letters_of_term(t: &Term) -> Option<Vec<Letter>> {
    let mut out = Vec::new();
    let mut cur = t.clone();
    loop {
        match cur.view() {
            crate::term::TermView::Var(_) => return Some(out),
            crate::term::TermView::Fun(f, kids) => {
                let l = match f.as_str() {
                    "P" => Letter::P,
                    "S" => Letter::S,
                    _ => return None,
                };
                if kids.len() != 1 {
                    return None;
                }
                out.push(l);
                cur = kids.into_iter().next().unwrap();
                if out.len() > 100_000 {
                    return None;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(spec: &str) -> SpWord {
        SpWord::parse_spec(spec).unwrap()
    }

    #[test]
    fn sum_examples() {
        let spw = w("periodic=\"SP\"");
        assert_eq!(
            (1..=4).map(|n| spw.sum(n)).collect::<Vec<_>>(),
            vec![1, 0, 1, 0]
        );
        assert_eq!(w("s_omega").sum(3), 3);
        assert_eq!(w("psi").sum(0), 0);
    }

    #[test]
    fn psi_letters() {
        // P S S P P P S S S S ...
        let psi = w("psi");
        let first: Vec<Letter> = psi.letters().take(10).collect();
        assert_eq!(first, parse_letters("PSSPPPSSSS").unwrap());
        assert_eq!(psi.letter(1), Some(Letter::P));
        assert_eq!(psi.letter(4), Some(Letter::P));
    }

    #[test]
    fn norm_examples() {
        let spw = w("periodic=\"SP\"");
        assert_eq!(spw.s_norm(), Norm::Finite(1));
        assert_eq!(spw.p_norm(), Norm::Finite(0));
        assert_eq!(w("psi").s_norm(), Norm::Infinite);
        assert_eq!(w("psi").p_norm(), Norm::Infinite);
        assert_eq!(w("s_omega").s_norm(), Norm::Infinite);
        assert_eq!(w("s_omega").p_norm(), Norm::Finite(0));
    }

    #[test]
    fn nf_finite_examples() {
        assert_eq!(
            SpWord::finite(parse_letters("PS").unwrap())
                .nf_finite()
                .unwrap(),
            vec![]
        );
        assert_eq!(
            SpWord::finite(parse_letters("SSP").unwrap())
                .nf_finite()
                .unwrap(),
            vec![Letter::S]
        );
        assert_eq!(
            SpWord::finite(parse_letters("PPS").unwrap())
                .nf_finite()
                .unwrap(),
            vec![Letter::P]
        );
    }

    #[test]
    fn classify_fixture_table() {
        let psi = w("psi").classify().unwrap();
        assert!(psi.snorm.is_infinite() && psi.pnorm.is_infinite());
        assert!(psi.root_active && !psi.sn_inf);
        assert_eq!(psi.venn_region, VennRegion::RaCore);

        let xi = w("xi").classify().unwrap();
        assert!(xi.snorm.is_infinite());
        assert_eq!(xi.pnorm, Norm::Finite(0));
        assert!(xi.root_active);

        let zeta = w("zeta").classify().unwrap();
        assert!(zeta.root_active);
        assert!(!zeta.snorm.is_infinite() && !zeta.pnorm.is_infinite());
        assert!(!zeta.wn_inf);

        let ssp = w("ssp_omega").classify().unwrap();
        assert!(ssp.sn_inf && ssp.reduces_to_s_omega);
        assert_eq!(ssp.venn_region, VennRegion::SnToS);

        let xi_prime = w("xi_prime").classify().unwrap();
        assert!(!xi_prime.root_active && !xi_prime.sn_inf);
        assert!(xi_prime.reduces_to_s_omega && !xi_prime.reduces_to_p_omega);
        assert_eq!(xi_prime.venn_region, VennRegion::SOnlyNonSn);
    }

    #[test]
    fn classify_coherence_on_fixtures() {
        for name in [
            "psi",
            "zeta",
            "xi",
            "xi_prime",
            "s_omega",
            "p_omega",
            "ssp_omega",
        ] {
            let c = w(name).classify().unwrap();
            if c.sn_inf {
                assert!(!c.root_active, "{name}");
            }
            if c.root_active {
                assert!(!c.sn_inf, "{name}");
            }
            if c.venn_region == VennRegion::RaCore {
                assert!(c.reduces_to_s_omega && c.reduces_to_p_omega, "{name}");
            }
        }
    }

    #[test]
    fn stuck_region_expressible() {
        // S S (S P)^w: sums stay in {2, 3} after the prefix.
        let word = w("prefix=\"SS\"; periodic=\"SP\"");
        let c = word.classify().unwrap();
        assert_eq!(c.venn_region, VennRegion::Stuck);
        assert!(!c.wn_inf && !c.root_active);
    }

    #[test]
    fn witness_to_examples() {
        let psi = w("psi");
        let segs = psi.witness_to(Letter::S, 3).unwrap();
        assert_eq!(segs.len(), 3);
        for seg in &segs {
            assert_eq!(seg.sum, 1);
            assert_eq!(replay_segment(seg).unwrap(), vec![Letter::S]);
            // The PS-only discipline: every step deletes a PS factor.
            assert!(seg.steps.iter().all(|(_, p)| *p == [Letter::P, Letter::S]));
        }
        let sw = w("s_omega");
        let segs = sw.witness_to(Letter::S, 4).unwrap();
        assert!(segs
            .iter()
            .all(|s| s.letters == vec![Letter::S] && s.steps.is_empty()));
        assert_eq!(w("zeta").witness_to(Letter::S, 1), Err(SpError::NormFinite));
    }

    #[test]
    fn witness_to_word_examples() {
        let psi = w("psi");
        let zeta = w("zeta");
        let segs = psi.witness_to_word(&zeta, 4).unwrap();
        let sums: Vec<i64> = segs.iter().map(|s| s.sum).collect();
        assert_eq!(sums, vec![-1, 1, -1, 1]);
        for seg in &segs {
            assert_eq!(replay_segment(seg).unwrap(), seg.normal_form);
        }
        let via_word = psi.witness_to_word(&w("s_omega"), 3).unwrap();
        let direct = psi.witness_to(Letter::S, 3).unwrap();
        assert_eq!(via_word, direct);
        assert_eq!(
            w("xi").witness_to_word(&w("p_omega"), 1),
            Err(SpError::NotUniversal)
        );
    }

    #[test]
    fn to_trs_term_examples() {
        let ps = SpWord::finite(parse_letters("PS").unwrap());
        assert_eq!(
            ps.to_trs_term(None).unwrap(),
            Term::parse("P(S(x))").unwrap()
        );
        let psw = w("prefix=\"\"; periodic=\"PS\"");
        let rational = psw.to_trs_term(None).unwrap();
        assert!(rational.bisim_equal(&Term::parse("rec t = P(S(t))").unwrap()));
        let psi6 = w("psi").to_trs_term(Some(6)).unwrap();
        assert_eq!(psi6, Term::parse("P(S(S(P(P(P(x))))))").unwrap());
    }

    #[test]
    fn drop_letters_keeps_letter_function() {
        for name in ["psi", "zeta", "xi", "xi_prime", "ssp_omega"] {
            let word = w(name);
            for n in [0u64, 1, 2, 3, 7, 20] {
                let dropped = word.drop_letters(n);
                for i in 1..=30u64 {
                    assert_eq!(
                        dropped.letter(i),
                        word.letter(i + n),
                        "{name} drop {n} at {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn spec_dsl_roundtrip() {
        for s in [
            "psi",
            "zeta",
            "prefix=\"PS\"; periodic=\"SP\"",
            "blocks=[(P,1,2),(S,2,2)]",
        ] {
            let parsed = w(s);
            let shown = parsed.to_string();
            assert_eq!(w(&shown), parsed, "{s} -> {shown}");
        }
    }
}
