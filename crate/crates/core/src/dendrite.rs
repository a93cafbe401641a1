//! Symbolic dendrite coordinates for the projective line: comb systems over
//! an enumeration of Q ∩ (0,1), admissible increasing letter words, the
//! four-type tail classification, the shift and its sections, cylinder and
//! follower sets.

use std::fmt::Write as _;

use num::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::padic::{rat, Rat};

/// Teeth (q_n, b_n) of a comb function. Letters q_n are distinct rationals
/// in (0,1) with q_n < b_n <= 1 and b_n - q_n <= 2^(-n) (1-based n).
#[derive(Debug, Clone, PartialEq)]
pub struct CombSystem {
    pairs: Vec<(Rat, Rat)>,
    /// Built from the Farey enumeration; streams may then extend past the
    /// materialized letters using the same rule.
    default_rule: bool,
}

/// The Farey-style enumeration of Q ∩ (0,1): fractions grouped by
/// denominator, reduced, in increasing order within each group.
/// 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, 2/5, ...
pub fn farey_enumeration(n: usize) -> Vec<Rat> {
    let mut out = Vec::with_capacity(n);
    let mut den = 2i64;
    while out.len() < n {
        for num in 1..den {
            if num::integer::gcd(num, den) == 1 {
                out.push(rat(num, den));
                if out.len() == n {
                    break;
                }
            }
        }
        den += 1;
    }
    out
}

/// 1-based position of a rational in the Farey enumeration.
pub fn farey_index(q: &Rat) -> usize {
    let mut idx = 0usize;
    let mut den = 2i64;
    loop {
        for num in 1..den {
            if num::integer::gcd(num, den) == 1 {
                idx += 1;
                if &rat(num, den) == q {
                    return idx;
                }
            }
        }
        den += 1;
    }
}

fn pow2_neg(n: usize) -> Rat {
    Rat::new(num::BigInt::one(), num::BigInt::from(2).pow(n as u32))
}

/// The default tooth upper end b(q) = q + min(2^(-n), (1-q)/2) with n the
/// 1-based Farey index of q.
pub fn default_tooth_upper(q: &Rat) -> Rat {
    let n = farey_index(q);
    let gap = pow2_neg(n);
    let half_rest = (Rat::one() - q) / rat(2, 1);
    q + gap.min(half_rest)
}

impl CombSystem {
    pub fn new(pairs: Vec<(Rat, Rat)>) -> Result<Self> {
        for (n, (q, b)) in pairs.iter().enumerate() {
            if q <= &Rat::zero() || q >= &Rat::one() {
                return Err(Error::InconsistentTail(format!(
                    "letter {q} outside (0,1)"
                )));
            }
            if q >= b || b > &Rat::one() {
                return Err(Error::InconsistentTail(format!(
                    "tooth ({q}, {b}) violates q < b <= 1"
                )));
            }
            if b - q > pow2_neg(n + 1) {
                return Err(Error::InconsistentTail(format!(
                    "tooth width {} exceeds 2^-{}",
                    b - q,
                    n + 1
                )));
            }
        }
        for i in 0..pairs.len() {
            for j in (i + 1)..pairs.len() {
                if pairs[i].0 == pairs[j].0 {
                    return Err(Error::InconsistentTail(format!(
                        "duplicate letter {}",
                        pairs[i].0
                    )));
                }
            }
        }
        Ok(CombSystem {
            pairs,
            default_rule: false,
        })
    }

    /// The canonical comb over the first `depth` letters of the Farey
    /// enumeration, with b_n = q_n + min(2^(-n), (1-q_n)/2).
    pub fn default_comb(depth: usize) -> Self {
        let letters = farey_enumeration(depth);
        let pairs = letters
            .into_iter()
            .map(|q| {
                let b = default_tooth_upper(&q);
                (q, b)
            })
            .collect();
        let cs = CombSystem::new(pairs).expect("default comb satisfies the invariants");
        CombSystem {
            default_rule: true,
            ..cs
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn letter(&self, i: usize) -> Result<&Rat> {
        self.pairs.get(i).map(|p| &p.0).ok_or(Error::UnknownLetter(i))
    }

    pub fn upper(&self, i: usize) -> Result<&Rat> {
        self.pairs.get(i).map(|p| &p.1).ok_or(Error::UnknownLetter(i))
    }

    pub fn pairs(&self) -> &[(Rat, Rat)] {
        &self.pairs
    }

    pub fn index_of(&self, value: &Rat) -> Option<usize> {
        self.pairs.iter().position(|(q, _)| q == value)
    }

    /// Tooth upper end for an arbitrary letter value: the materialized b
    /// when the value is a comb letter, else the default rule (available
    /// for default-rule combs, where streams may run past the truncation).
    pub fn tooth_upper_value(&self, q: &Rat) -> Rat {
        match self.index_of(q) {
            Some(i) => self.pairs[i].1.clone(),
            None => default_tooth_upper(q),
        }
    }
}

/// A finite admissible word: runs (letter index, power >= 1) with strictly
/// increasing letters q_prev < q_next <= b_prev between distinct runs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    runs: Vec<(usize, u32)>,
}

impl Word {
    pub fn empty() -> Self {
        Word { runs: Vec::new() }
    }

    pub fn from_runs(runs: Vec<(usize, u32)>) -> Self {
        let mut w = Word { runs: Vec::new() };
        for (l, k) in runs {
            w.push_run(l, k);
        }
        w
    }

    pub fn from_letters(letters: &[usize]) -> Self {
        let mut w = Word::empty();
        for &l in letters {
            w.push_run(l, 1);
        }
        w
    }

    fn push_run(&mut self, letter: usize, power: u32) {
        if power == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some((l, k)) if *l == letter => *k += power,
            _ => self.runs.push((letter, power)),
        }
    }

    pub fn runs(&self) -> &[(usize, u32)] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn total_power(&self) -> u32 {
        self.runs.iter().map(|(_, k)| k).sum()
    }

    pub fn first_letter(&self) -> Option<usize> {
        self.runs.first().map(|(l, _)| *l)
    }

    pub fn last_letter(&self) -> Option<usize> {
        self.runs.last().map(|(l, _)| *l)
    }

    /// Expanded letter-index sequence.
    pub fn expand(&self) -> impl Iterator<Item = usize> + '_ {
        self.runs
            .iter()
            .flat_map(|&(l, k)| std::iter::repeat(l).take(k as usize))
    }

    /// Word followed by one more letter.
    pub fn append(&self, letter: usize) -> Word {
        let mut w = self.clone();
        w.push_run(letter, 1);
        w
    }

    /// Concatenation of two words.
    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &(l, k) in &other.runs {
            w.push_run(l, k);
        }
        w
    }

    pub fn display(&self, cs: &CombSystem) -> String {
        if self.runs.is_empty() {
            return "e".to_string();
        }
        let mut s = String::new();
        for (i, (l, k)) in self.runs.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let q = cs.letter(*l).map(|q| q.to_string()).unwrap_or("?".into());
            let _ = write!(s, "{q}^{k}");
        }
        s
    }

    /// Parses "q^k,q^k,..." with rationals as "num/den"; "e" or "" is the
    /// empty word. Letters are resolved against the comb system.
    pub fn parse(cs: &CombSystem, s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::empty());
        }
        let mut w = Word::empty();
        for part in s.split(',') {
            let (qs, ks) = match part.split_once('^') {
                Some((a, b)) => (a.trim(), b.trim()),
                None => (part.trim(), "1"),
            };
            let q: Rat = qs
                .parse()
                .map_err(|_| Error::UnknownLetterValue(qs.to_string()))?;
            let k: u32 = ks
                .parse()
                .map_err(|_| Error::InadmissibleWord(s.to_string()))?;
            let idx = cs
                .index_of(&q)
                .ok_or_else(|| Error::UnknownLetterValue(qs.to_string()))?;
            w.push_run(idx, k);
        }
        Ok(w)
    }
}

/// Checks the admissibility constraint q_prev < q_next <= b_prev between
/// consecutive distinct letters.
pub fn is_admissible(cs: &CombSystem, w: &Word) -> Result<bool> {
    for &(l, _) in w.runs() {
        if l >= cs.len() {
            return Err(Error::UnknownLetter(l));
        }
    }
    for pair in w.runs().windows(2) {
        let (prev, next) = (pair[0].0, pair[1].0);
        let q_prev = cs.letter(prev)?;
        let b_prev = cs.upper(prev)?;
        let q_next = cs.letter(next)?;
        if !(q_prev < q_next && q_next <= b_prev) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rule generating a strictly increasing admissible letter stream: from
/// `start`, each next value moves the fraction `theta` of the way to the
/// current tooth upper end. `skip` symbols have been consumed by shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct LetterStream {
    pub start: Rat,
    pub theta: Rat,
    pub skip: usize,
}

impl LetterStream {
    pub fn new(start: Rat, theta: Rat) -> Result<Self> {
        if start <= Rat::zero() || start >= Rat::one() {
            return Err(Error::InconsistentTail(format!(
                "stream start {start} outside (0,1)"
            )));
        }
        if theta <= Rat::zero() || theta > Rat::one() {
            return Err(Error::InconsistentTail(format!(
                "stream step {theta} outside (0,1]"
            )));
        }
        Ok(LetterStream {
            start,
            theta,
            skip: 0,
        })
    }

    /// The k-th stream value (0-based, after skipping).
    pub fn value(&self, cs: &CombSystem, k: usize) -> Rat {
        let mut x = self.start.clone();
        for _ in 0..(k + self.skip) {
            let b = cs.tooth_upper_value(&x);
            x = &x + (&b - &x) * &self.theta;
        }
        x
    }

    fn advanced(&self) -> LetterStream {
        LetterStream {
            start: self.start.clone(),
            theta: self.theta.clone(),
            skip: self.skip + 1,
        }
    }
}

/// Tail of a symbolic point, encoding the four point types.
#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    /// q_n^∞: a branching (type II) point.
    Letter(usize),
    /// t^∞ with t off the letter list or flagged irrational: type III.
    Real { value: Rat, irrational: bool },
    /// b_j^∞: an endpoint (type IV).
    End(usize),
    /// An infinite strictly increasing admissible word: type I.
    Stream(LetterStream),
}

impl Tail {
    /// The repeated value (first value for streams).
    pub fn value(&self, cs: &CombSystem) -> Result<Rat> {
        match self {
            Tail::Letter(n) => Ok(cs.letter(*n)?.clone()),
            Tail::Real { value, .. } => Ok(value.clone()),
            Tail::End(j) => Ok(cs.upper(*j)?.clone()),
            Tail::Stream(s) => Ok(s.value(cs, 0)),
        }
    }
}

/// Point type in Berkovich's classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    I,
    II,
    III,
    IV,
}

impl std::fmt::Display for PointClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PointClass::I => "I",
            PointClass::II => "II",
            PointClass::III => "III",
            PointClass::IV => "IV",
        };
        write!(f, "{s}")
    }
}

/// A point of the dendrite in symbolic coordinates: a finite admissible
/// prefix followed by a tail.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicPoint {
    prefix: Word,
    tail: Tail,
}

impl SymbolicPoint {
    /// Validates admissibility of the prefix, consistency of the tail with
    /// the last prefix letter, and normalizes letter-valued tails.
    pub fn new(cs: &CombSystem, prefix: Word, tail: Tail) -> Result<Self> {
        if !is_admissible(cs, &prefix)? {
            return Err(Error::InadmissibleWord(prefix.display(cs)));
        }
        // A rational constant tail equal to a comb letter IS that letter's
        // branching point.
        let tail = match tail {
            Tail::Real {
                value,
                irrational: false,
            } => match cs.index_of(&value) {
                Some(n) => Tail::Letter(n),
                None => {
                    if value <= Rat::zero() || value > Rat::one() {
                        return Err(Error::InconsistentTail(format!(
                            "tail value {value} outside (0,1]"
                        )));
                    }
                    Tail::Real {
                        value,
                        irrational: false,
                    }
                }
            },
            other => other,
        };
        if let Tail::Letter(n) = tail {
            cs.letter(n)?;
        }
        if let Tail::End(j) = tail {
            cs.upper(j)?;
        }
        // Merge a letter tail equal to the trailing run: (.. q^k, q^∞) is
        // the same stream as (.., q^∞).
        let mut prefix = prefix;
        if let Tail::Letter(n) = tail {
            while prefix.last_letter() == Some(n) {
                prefix.runs.pop();
            }
        }
        if let Some(last) = prefix.last_letter() {
            let q_last = cs.letter(last)?.clone();
            let b_last = cs.upper(last)?.clone();
            let v = tail.value(cs)?;
            if !(v > q_last && v <= b_last) {
                return Err(Error::InconsistentTail(format!(
                    "tail value {v} not in ({q_last}, {b_last}]"
                )));
            }
        }
        if let Tail::Stream(s) = &tail {
            // the stream start itself must be a legal branching value
            let v = s.value(cs, 0);
            if v <= Rat::zero() || v >= Rat::one() {
                return Err(Error::InconsistentTail(format!(
                    "stream start {v} outside (0,1)"
                )));
            }
        }
        Ok(SymbolicPoint { prefix, tail })
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Constant-tail point t^∞ with no prefix.
    pub fn pure_tail(cs: &CombSystem, tail: Tail) -> Result<Self> {
        SymbolicPoint::new(cs, Word::empty(), tail)
    }

    pub fn classify(&self) -> PointClass {
        match &self.tail {
            Tail::Letter(_) => PointClass::II,
            Tail::Real { .. } => PointClass::III,
            Tail::End(_) => PointClass::IV,
            Tail::Stream(_) => PointClass::I,
        }
    }

    /// The k-th symbol value of the full stream (0-based).
    pub fn symbol(&self, cs: &CombSystem, k: usize) -> Result<Rat> {
        let mut rem = k;
        for &(l, pow) in self.prefix.runs() {
            if rem < pow as usize {
                return Ok(cs.letter(l)?.clone());
            }
            rem -= pow as usize;
        }
        match &self.tail {
            Tail::Stream(s) => Ok(s.value(cs, rem)),
            t => t.value(cs),
        }
    }

    pub fn first_value(&self, cs: &CombSystem) -> Result<Rat> {
        self.symbol(cs, 0)
    }

    pub fn to_json(&self, cs: &CombSystem) -> Value {
        let prefix: Vec<Value> = self
            .prefix
            .runs()
            .iter()
            .map(|(l, k)| {
                json!({
                    "letter": cs.letter(*l).map(|q| q.to_string()).unwrap_or_default(),
                    "power": k,
                })
            })
            .collect();
        let tail = match &self.tail {
            Tail::Letter(n) => json!({
                "kind": "letter",
                "value": cs.letter(*n).map(|q| q.to_string()).unwrap_or_default(),
            }),
            Tail::Real { value, irrational } => json!({
                "kind": "real",
                "value": value.to_string(),
                "irrational": irrational,
            }),
            Tail::End(j) => json!({
                "kind": "end",
                "value": cs.upper(*j).map(|b| b.to_string()).unwrap_or_default(),
                "tooth": j + 1,
            }),
            Tail::Stream(s) => json!({
                "kind": "stream",
                "start": s.value(cs, 0).to_string(),
                "theta": s.theta.to_string(),
            }),
        };
        json!({ "prefix": prefix, "tail": tail })
    }
}

/// Classification of a point after validating it against the comb system.
pub fn classify(cs: &CombSystem, x: &SymbolicPoint) -> Result<PointClass> {
    let revalidated = SymbolicPoint::new(cs, x.prefix.clone(), x.tail.clone())?;
    Ok(revalidated.classify())
}

/// The shift σ: removes one leading symbol. Constant tails are fixed
/// points; stream tails advance by one letter.
pub fn shift(cs: &CombSystem, x: &SymbolicPoint) -> SymbolicPoint {
    let _ = cs;
    if let Some(&(l, k)) = x.prefix.runs().first() {
        let mut runs = x.prefix.runs().to_vec();
        if k > 1 {
            runs[0] = (l, k - 1);
        } else {
            runs.remove(0);
        }
        return SymbolicPoint {
            prefix: Word { runs },
            tail: x.tail.clone(),
        };
    }
    match &x.tail {
        Tail::Stream(s) => SymbolicPoint {
            prefix: Word::empty(),
            tail: Tail::Stream(s.advanced()),
        },
        _ => x.clone(),
    }
}

/// Membership in the follower set F(q): prepending the letter keeps the
/// stream admissible. Equal leading value extends a run; otherwise the
/// first value must lie in (q, b_q].
pub fn in_follower_letter(cs: &CombSystem, letter: usize, x: &SymbolicPoint) -> Result<bool> {
    let q = cs.letter(letter)?;
    let b = cs.upper(letter)?;
    let v = x.first_value(cs)?;
    Ok(&v == q || (&v > q && &v <= b))
}

/// The section σ_q: F(q) -> Z(q), x ↦ qx.
pub fn sigma(cs: &CombSystem, letter: usize, x: &SymbolicPoint) -> Result<SymbolicPoint> {
    if !in_follower_letter(cs, letter, x)? {
        return Err(Error::NotInFollowerSet(cs.letter(letter)?.to_string()));
    }
    // Prepending onto a point whose stream already starts with this letter
    // value: extend the leading run (or absorb into a letter tail).
    if x.prefix.is_empty() {
        if let Tail::Letter(n) = &x.tail {
            if *n == letter {
                return Ok(x.clone());
            }
        }
    }
    let mut runs = vec![(letter, 1u32)];
    for &(l, k) in x.prefix.runs() {
        if let Some(last) = runs.last_mut() {
            if last.0 == l {
                last.1 += k;
                continue;
            }
        }
        runs.push((l, k));
    }
    Ok(SymbolicPoint {
        prefix: Word { runs },
        tail: x.tail.clone(),
    })
}

/// Strips the word β from the front of x, returning the remainder point.
pub fn strip_prefix(cs: &CombSystem, beta: &Word, x: &SymbolicPoint) -> Result<Option<SymbolicPoint>> {
    let mut cur = x.clone();
    for l in beta.expand() {
        let expected = cs.letter(l)?;
        if &cur.first_value(cs)? != expected {
            return Ok(None);
        }
        cur = shift(cs, &cur);
    }
    Ok(Some(cur))
}

/// Membership in the cylinder set Z(β) = {βy}.
pub fn in_cylinder(cs: &CombSystem, beta: &Word, x: &SymbolicPoint) -> Result<bool> {
    Ok(strip_prefix(cs, beta, x)?.is_some())
}

/// Membership in the follower set F(α) = {x : αx admissible}.
pub fn in_follower(cs: &CombSystem, alpha: &Word, x: &SymbolicPoint) -> Result<bool> {
    if !is_admissible(cs, alpha)? {
        return Ok(false);
    }
    match alpha.last_letter() {
        None => Ok(true),
        Some(l) => in_follower_letter(cs, l, x),
    }
}

/// Membership in C(α, β) = {βy : αy admissible}.
pub fn in_c(cs: &CombSystem, alpha: &Word, beta: &Word, x: &SymbolicPoint) -> Result<bool> {
    if !is_admissible(cs, beta)? {
        return Ok(false);
    }
    match strip_prefix(cs, beta, x)? {
        None => Ok(false),
        Some(y) => in_follower(cs, alpha, &y),
    }
}

/// All admissible words over the first `n_letters` letters with total power
/// <= `depth`, in lexicographic order of the expanded index sequences. The
/// empty word comes first.
pub fn enumerate_cylinders(cs: &CombSystem, n_letters: usize, depth: u32) -> Result<Vec<Word>> {
    if n_letters > cs.len() {
        return Err(Error::UnknownLetter(n_letters - 1));
    }
    let mut out = Vec::new();
    let mut stack = vec![Word::empty()];
    while let Some(w) = stack.pop() {
        out.push(w.clone());
        if w.total_power() >= depth {
            continue;
        }
        // push children in reverse so the smallest letter index pops first
        let mut children = Vec::new();
        for l in 0..n_letters {
            let ok = match w.last_letter() {
                None => true,
                Some(last) if last == l => true,
                Some(last) => {
                    let q_last = cs.letter(last)?;
                    let b_last = cs.upper(last)?;
                    let q = cs.letter(l)?;
                    q_last < q && q <= b_last
                }
            };
            if ok {
                children.push(w.append(l));
            }
        }
        for c in children.into_iter().rev() {
            stack.push(c);
        }
    }
    Ok(out)
}

/// Prefix order on symbolic points: x <= z iff the stream of z begins with
/// the prefix of x and then continues at or beyond x's tail value. Stream
/// (type I) points dominate nothing but themselves.
pub fn stream_leq(cs: &CombSystem, x: &SymbolicPoint, z: &SymbolicPoint) -> Result<bool> {
    if x == z {
        return Ok(true);
    }
    if let Tail::Stream(_) = x.tail {
        return Ok(false);
    }
    let rem = match strip_prefix(cs, &x.prefix, z)? {
        Some(rem) => rem,
        None => return Ok(false),
    };
    let t = x.tail.value(cs)?;
    Ok(rem.first_value(cs)? >= t)
}

/// Constructive witness for the equivalence of the observer and cylinder
/// topologies: given x <= z <= y, the full prefix word of z names a
/// cylinder containing z inside the direction U(x, [x, y]).
pub fn direction_to_cylinder(
    cs: &CombSystem,
    x: &SymbolicPoint,
    y: &SymbolicPoint,
    z: &SymbolicPoint,
) -> Result<Word> {
    if !(stream_leq(cs, x, z)? && stream_leq(cs, z, y)?) {
        return Err(Error::NotInDirection);
    }
    Ok(z.prefix.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tooth_comb() -> CombSystem {
        CombSystem::new(vec![(rat(1, 3), rat(2, 3)), (rat(1, 2), rat(3, 4))]).unwrap()
    }

    #[test]
    fn default_comb_examples() {
        let cs = CombSystem::default_comb(2);
        assert_eq!(cs.pairs()[0], (rat(1, 2), rat(3, 4)));
        assert_eq!(cs.pairs()[1], (rat(1, 3), rat(7, 12)));
        let cs1 = CombSystem::default_comb(1);
        assert_eq!(cs1.pairs(), &[(rat(1, 2), rat(3, 4))]);
        // tooth-width invariant by construction
        let csouter = CombSystem::default_comb(12);
        for (n, (q, b)) in csouter.pairs().iter().enumerate() {
            assert!(b - q <= pow2_neg(n + 1));
            assert!(q < b && b <= &Rat::one());
        }
    }

    #[test]
    fn farey_order_prefix() {
        let qs = farey_enumeration(9);
        let expected = [
            rat(1, 2),
            rat(1, 3),
            rat(2, 3),
            rat(1, 4),
            rat(3, 4),
            rat(1, 5),
            rat(2, 5),
            rat(3, 5),
            rat(4, 5),
        ];
        assert_eq!(qs, expected);
        assert_eq!(farey_index(&rat(3, 4)), 5);
    }

    #[test]
    fn admissibility_examples() {
        let cs = two_tooth_comb();
        let up = Word::from_letters(&[0, 1]); // 1/3 then 1/2
        assert!(is_admissible(&cs, &up).unwrap());
        let down = Word::from_letters(&[1, 0]); // 1/2 then 1/3
        assert!(!is_admissible(&cs, &down).unwrap());
        assert!(is_admissible(&cs, &Word::empty()).unwrap());
        let unknown = Word::from_letters(&[5]);
        assert_eq!(
            is_admissible(&cs, &unknown),
            Err(Error::UnknownLetter(5))
        );
    }

    #[test]
    fn classification_examples() {
        let cs = two_tooth_comb();
        // ([1/3], (1/2)^∞) is a branching point
        let x = SymbolicPoint::new(&cs, Word::from_letters(&[0]), Tail::Letter(1)).unwrap();
        assert_eq!(x.classify(), PointClass::II);
        // irrational-flagged constant tail
        let y = SymbolicPoint::pure_tail(
            &cs,
            Tail::Real {
                value: rat(2, 5),
                irrational: true,
            },
        )
        .unwrap();
        assert_eq!(y.classify(), PointClass::III);
        // off-enumeration rational tail
        let y2 = SymbolicPoint::pure_tail(
            &cs,
            Tail::Real {
                value: rat(3, 5),
                irrational: false,
            },
        )
        .unwrap();
        assert_eq!(y2.classify(), PointClass::III);
        // b_1 tail is an endpoint
        let z = SymbolicPoint::pure_tail(&cs, Tail::End(0)).unwrap();
        assert_eq!(z.classify(), PointClass::IV);
        // infinite stream
        let s = LetterStream::new(rat(1, 3), rat(1, 2)).unwrap();
        let w = SymbolicPoint::pure_tail(&cs, Tail::Stream(s)).unwrap();
        assert_eq!(w.classify(), PointClass::I);
    }

    #[test]
    fn normalization_merges_letter_tails() {
        let cs = two_tooth_comb();
        // ([1/3^2], (1/3)^∞) is the same stream as ((1/3)^∞)
        let x = SymbolicPoint::new(&cs, Word::from_runs(vec![(0, 2)]), Tail::Letter(0)).unwrap();
        assert!(x.prefix().is_empty());
        // rational tail equal to a letter becomes a letter tail
        let y = SymbolicPoint::pure_tail(
            &cs,
            Tail::Real {
                value: rat(1, 2),
                irrational: false,
            },
        )
        .unwrap();
        assert_eq!(y.tail(), &Tail::Letter(1));
    }

    #[test]
    fn tail_consistency_enforced() {
        let cs = two_tooth_comb();
        // tail value must exceed the last prefix letter: (1/2 prefix, 1/3 tail)
        assert!(SymbolicPoint::new(
            &cs,
            Word::from_letters(&[1]),
            Tail::Letter(0)
        )
        .is_err());
        // and stay within its tooth: (1/3 prefix, 3/4 > b_1 = 2/3)
        assert!(SymbolicPoint::new(
            &cs,
            Word::from_letters(&[0]),
            Tail::Real {
                value: rat(3, 4),
                irrational: false
            }
        )
        .is_err());
    }

    #[test]
    fn shift_examples() {
        let cs = two_tooth_comb();
        let t = Tail::Real {
            value: rat(3, 5),
            irrational: false,
        };
        let x = SymbolicPoint::new(&cs, Word::from_runs(vec![(0, 2)]), t.clone()).unwrap();
        let s1 = shift(&cs, &x);
        assert_eq!(s1.prefix().runs(), &[(0, 1)]);
        let s2 = shift(&cs, &s1);
        assert!(s2.prefix().is_empty());
        // constant tails are fixed
        let s3 = shift(&cs, &s2);
        assert_eq!(s3, s2);
        // two-run prefix drops letters in order
        let xy = SymbolicPoint::new(&cs, Word::from_letters(&[0, 1]), t).unwrap();
        let s = shift(&cs, &xy);
        assert_eq!(s.prefix().runs(), &[(1, 1)]);
        // streams advance under the shift
        let st = LetterStream::new(rat(1, 3), rat(1, 2)).unwrap();
        let w = SymbolicPoint::pure_tail(&cs, Tail::Stream(st)).unwrap();
        let w1 = shift(&cs, &w);
        assert_eq!(
            w.symbol(&cs, 1).unwrap(),
            w1.symbol(&cs, 0).unwrap()
        );
        assert_ne!(w, w1);
    }

    #[test]
    fn sigma_examples() {
        let cs = two_tooth_comb();
        let half = SymbolicPoint::pure_tail(&cs, Tail::Letter(1)).unwrap();
        // b_{1/3} = 2/3 >= 1/2, so (1/2)^∞ is in F(1/3)
        let lifted = sigma(&cs, 0, &half).unwrap();
        assert_eq!(lifted.prefix().runs(), &[(0, 1)]);
        assert_eq!(shift(&cs, &lifted), half);
        // (1/3)^∞ is not in F(1/2)
        let third = SymbolicPoint::pure_tail(&cs, Tail::Letter(0)).unwrap();
        assert!(matches!(
            sigma(&cs, 1, &third),
            Err(Error::NotInFollowerSet(_))
        ));
        // run extension: σ_q fixes q^∞
        assert_eq!(sigma(&cs, 0, &third).unwrap(), third);
    }

    #[test]
    fn cylinder_examples() {
        let cs = two_tooth_comb();
        let t = Tail::Real {
            value: rat(3, 5),
            irrational: false,
        };
        let x = SymbolicPoint::new(&cs, Word::from_letters(&[0]), t).unwrap();
        let beta = Word::from_letters(&[0]);
        assert!(in_cylinder(&cs, &beta, &x).unwrap());
        let alpha = Word::from_letters(&[1]);
        let third = SymbolicPoint::pure_tail(&cs, Tail::Letter(0)).unwrap();
        assert!(!in_follower(&cs, &alpha, &third).unwrap());
        // C(α, ∅) membership is follower membership
        for pt in [&x, &third] {
            assert_eq!(
                in_c(&cs, &alpha, &Word::empty(), pt).unwrap(),
                in_follower(&cs, &alpha, pt).unwrap()
            );
        }
    }

    #[test]
    fn enumerate_examples() {
        let cs = two_tooth_comb();
        let d1 = enumerate_cylinders(&cs, 2, 1).unwrap();
        assert_eq!(
            d1,
            vec![
                Word::empty(),
                Word::from_letters(&[0]),
                Word::from_letters(&[1])
            ]
        );
        let d2 = enumerate_cylinders(&cs, 2, 2).unwrap();
        assert!(d2.contains(&Word::from_letters(&[0, 1])));
        assert!(!d2.contains(&Word::from_letters(&[1, 0])));
        let d0 = enumerate_cylinders(&cs, 2, 0).unwrap();
        assert_eq!(d0, vec![Word::empty()]);
        // lexicographic on expanded sequences: prefixes come first
        let pos_a = d2.iter().position(|w| w == &Word::from_letters(&[0])).unwrap();
        let pos_aa = d2
            .iter()
            .position(|w| w == &Word::from_runs(vec![(0, 2)]))
            .unwrap();
        let pos_ab = d2.iter().position(|w| w == &Word::from_letters(&[0, 1])).unwrap();
        assert!(pos_a < pos_aa && pos_aa < pos_ab);
    }

    #[test]
    fn cylinder_partition_and_refinement() {
        let cs = CombSystem::default_comb(4);
        let n = 4usize;
        let d = 3u32;
        let words = enumerate_cylinders(&cs, n, d).unwrap();
        // sample points: word closures + a couple of off-alphabet tails
        let mut points = Vec::new();
        for w in &words {
            if let Some(last) = w.last_letter() {
                let p = SymbolicPoint::new(&cs, w.clone(), Tail::Letter(last)).unwrap();
                points.push(p);
            }
        }
        points.push(
            SymbolicPoint::pure_tail(
                &cs,
                Tail::Real {
                    value: rat(9, 10),
                    irrational: false,
                },
            )
            .unwrap(),
        );
        // distinct letters give disjoint cylinders, and each nonempty-prefix
        // point lies in exactly one letter cylinder
        for x in &points {
            let mut hits = 0;
            for l in 0..n {
                if in_cylinder(&cs, &Word::from_letters(&[l]), x).unwrap() {
                    hits += 1;
                }
            }
            let first = x.first_value(&cs).unwrap();
            let is_letter_start = (0..n).any(|l| cs.letter(l).unwrap() == &first);
            assert_eq!(hits, usize::from(is_letter_start));
        }
        // refinement: Z(W) = ⊔ Z(Wq) over admissible next letters, on
        // points strictly deeper than W
        for w in &words {
            if w.is_empty() || w.total_power() >= d {
                continue;
            }
            for x in &points {
                if x.prefix().total_power() <= w.total_power() {
                    continue;
                }
                let in_w = in_cylinder(&cs, w, x).unwrap();
                let mut in_children = 0;
                for l in 0..n {
                    let child = w.append(l);
                    if is_admissible(&cs, &child).unwrap()
                        && in_cylinder(&cs, &child, x).unwrap()
                    {
                        in_children += 1;
                    }
                }
                assert_eq!(usize::from(in_w), in_children, "word {} point {:?}", w.display(&cs), x);
            }
        }
    }

    #[test]
    fn sigma_preserves_class() {
        let cs = CombSystem::default_comb(4);
        let tails = vec![
            Tail::Letter(2),
            Tail::Real {
                value: rat(5, 8),
                irrational: true,
            },
            Tail::End(2),
            Tail::Stream(LetterStream::new(rat(2, 3), rat(1, 2)).unwrap()),
        ];
        for tail in tails {
            let x = SymbolicPoint::pure_tail(&cs, tail).unwrap();
            let class = x.classify();
            for l in 0..cs.len() {
                if in_follower_letter(&cs, l, &x).unwrap() {
                    let lifted = sigma(&cs, l, &x).unwrap();
                    assert_eq!(lifted.classify(), class);
                    assert_eq!(shift(&cs, &lifted), x);
                }
            }
        }
    }

    #[test]
    fn direction_witness() {
        let cs = two_tooth_comb();
        // x = ∅-prefix point parked at 1/3, z = ([1/3], (1/2)^∞) on the way
        // to y, which continues past z into the 1/2 tooth
        let x = SymbolicPoint::pure_tail(&cs, Tail::Letter(0)).unwrap();
        let z = SymbolicPoint::new(&cs, Word::from_letters(&[0]), Tail::Letter(1)).unwrap();
        let y = SymbolicPoint::new(&cs, Word::from_letters(&[0, 1]), Tail::End(1)).unwrap();
        let w = direction_to_cylinder(&cs, &x, &y, &z).unwrap();
        assert_eq!(w, Word::from_letters(&[0]));
        assert!(in_cylinder(&cs, &w, &z).unwrap());
        // z with the longer prefix names the finer cylinder
        let w2 = direction_to_cylinder(&cs, &x, &y, &y).unwrap();
        assert_eq!(w2, Word::from_letters(&[0, 1]));
        // z not above x errors
        let off = SymbolicPoint::pure_tail(
            &cs,
            Tail::Real {
                value: rat(1, 4),
                irrational: false,
            },
        )
        .unwrap();
        let deeper = SymbolicPoint::new(&cs, Word::from_letters(&[1]), Tail::End(1)).unwrap();
        assert_eq!(
            direction_to_cylinder(&cs, &x, &deeper, &off),
            Err(Error::NotInDirection)
        );
        // membership sampling: points of Z(w) stay above x
        let samples = vec![
            SymbolicPoint::new(&cs, Word::from_letters(&[0]), Tail::Letter(1)).unwrap(),
            SymbolicPoint::new(&cs, Word::from_runs(vec![(0, 3)]), Tail::End(0)).unwrap(),
        ];
        for s in samples {
            assert!(in_cylinder(&cs, &w, &s).unwrap());
            assert!(stream_leq(&cs, &x, &s).unwrap());
        }
    }
}
