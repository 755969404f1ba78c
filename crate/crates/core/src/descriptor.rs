//! Winding descriptors for contours encircling the branch points `x = -1`
//! and `x = +1`.
//!
//! A descriptor is a word over four letters: `L`/`R` for a counterclockwise
//! turn around the left/right branch point and `Q = L⁻¹`, `P = R⁻¹` for the
//! clockwise turns. Words are written in that alphabet without separators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which branch point a turn goes around.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    L,
    R,
}

impl Base {
    fn swapped(self) -> Base {
        match self {
            Base::L => Base::R,
            Base::R => Base::L,
        }
    }
}

/// One turn: a base branch point and an orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub base: Base,
    pub inverted: bool,
}

impl Letter {
    pub const L: Letter = Letter { base: Base::L, inverted: false };
    pub const R: Letter = Letter { base: Base::R, inverted: false };
    /// `L⁻¹`, a clockwise turn around `-1`.
    pub const Q: Letter = Letter { base: Base::L, inverted: true };
    /// `R⁻¹`, a clockwise turn around `+1`.
    pub const P: Letter = Letter { base: Base::R, inverted: true };

    pub const ALL: [Letter; 4] = [Letter::L, Letter::Q, Letter::R, Letter::P];

    pub fn inverse(self) -> Letter {
        Letter { base: self.base, inverted: !self.inverted }
    }

    /// True when `self` followed by `other` cancels.
    pub fn cancels(self, other: Letter) -> bool {
        self.base == other.base && self.inverted != other.inverted
    }

    pub fn symbol(self) -> char {
        match (self.base, self.inverted) {
            (Base::L, false) => 'L',
            (Base::R, false) => 'R',
            (Base::L, true) => 'Q',
            (Base::R, true) => 'P',
        }
    }

    pub fn from_symbol(c: char) -> Option<Letter> {
        match c {
            'L' => Some(Letter::L),
            'R' => Some(Letter::R),
            'Q' => Some(Letter::Q),
            'P' => Some(Letter::P),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A descriptor word. The empty word describes a non-winding contour.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// Group inverse: reversed order, every orientation flipped.
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses the `LRQP` encoding; `""` and `"∅"` give the empty word.
    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s == "∅" {
            return Ok(Word::empty());
        }
        s.chars()
            .map(|c| {
                Letter::from_symbol(c).ok_or_else(|| Error::InvalidInput(format!("unknown descriptor letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnumerationMode {
    /// A word is allowed iff it is freely reduced.
    FreeGroup,
    /// Same rule as `FreeGroup`, but counts also carry the published
    /// tabulated totals for comparison.
    Published,
}

/// Free-group normal form: cancels adjacent `X X⁻¹` pairs until none remain.
pub fn reduce(w: &Word) -> Word {
    let mut stack: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in w.letters() {
        match stack.last() {
            Some(&top) if top.cancels(l) => {
                stack.pop();
            }
            _ => stack.push(l),
        }
    }
    Word(stack)
}

pub fn is_allowed(w: &Word, _mode: EnumerationMode) -> bool {
    w.letters().windows(2).all(|p| !p[0].cancels(p[1]))
}

fn check_length(n: i64) -> Result<usize> {
    usize::try_from(n).map_err(|_| Error::InvalidInput(format!("word length must be >= 0, got {n}")))
}

/// All allowed words of length `n`, in lexicographic order of the letter
/// sequence `L < Q < R < P`.
pub fn enumerate_allowed(n: i64, mode: EnumerationMode) -> Result<Vec<Word>> {
    let n = check_length(n)?;
    let mut words = vec![Word::empty()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(words.len() * 3);
        for w in &words {
            for l in Letter::ALL {
                if w.0.last().is_some_and(|&last| last.cancels(l)) {
                    continue;
                }
                let mut letters = w.0.clone();
                letters.push(l);
                next.push(Word(letters));
            }
        }
        words = next;
    }
    debug_assert!(words.iter().all(|w| is_allowed(w, mode)));
    Ok(words)
}

/// Published totals of allowed half-words, indexed by length.
const PUBLISHED_COUNTS: [(usize, u64); 4] = [(1, 4), (2, 12), (3, 36), (4, 140)];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AllowedCount {
    pub length: usize,
    /// Exact number of freely reduced words.
    pub count: u64,
    /// Tabulated total, when one exists for this length.
    pub published: Option<u64>,
    /// Set when the tabulated total disagrees with `count`.
    pub discrepancy: Option<String>,
}

pub fn count_allowed(n: i64, mode: EnumerationMode) -> Result<AllowedCount> {
    let length = check_length(n)?;
    let count = if length == 0 { 1 } else { 4 * 3u64.pow(length as u32 - 1) };
    let (published, discrepancy) = match mode {
        EnumerationMode::FreeGroup => (None, None),
        EnumerationMode::Published => {
            let published = PUBLISHED_COUNTS.iter().find(|(len, _)| *len == length).map(|&(_, c)| c);
            let discrepancy = published.filter(|&p| p != count).map(|p| {
                format!(
                    "published total {p} for length {length} disagrees with the exhaustive \
                     free-group count {count} (over {} words)",
                    4u64.pow(length as u32)
                )
            });
            (published, discrepancy)
        }
    };
    Ok(AllowedCount { length, count, published, discrepancy })
}

/// Reverse reading combined with the `L ↔ R` interchange. Orientation flags
/// are kept.
pub fn pt_image(w: &Word) -> Word {
    Word(w.letters().iter().rev().map(|l| Letter { base: l.base.swapped(), inverted: l.inverted }).collect())
}

/// Builds the full descriptor `Ω Ωᵀ` from its first half.
pub fn pt_symmetrize(half: &Word) -> Result<Word> {
    if half.is_empty() {
        return Err(Error::InvalidInput("half-word must be nonempty".into()));
    }
    Ok(half.concat(&pt_image(half)))
}

pub fn is_pt_symmetric(w: &Word) -> bool {
    pt_image(w) == *w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn all_words(n: usize) -> Vec<Word> {
        (0..4usize.pow(n as u32))
            .map(|mut code| {
                Word(
                    (0..n)
                        .map(|_| {
                            let l = Letter::ALL[code % 4];
                            code /= 4;
                            l
                        })
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&w("LQ")), Word::empty());
        assert_eq!(reduce(&w("LRQP")), w("LRQP"));
        assert_eq!(reduce(&w("RPL")), w("L"));
        assert_eq!(reduce(&w("LRPQ")), Word::empty());
    }

    #[test]
    fn allowed_examples() {
        let m = EnumerationMode::FreeGroup;
        assert!(!is_allowed(&w("LQ"), m));
        assert!(is_allowed(&w("LR"), m));
        assert!(is_allowed(&w("QR"), m));
    }

    #[test]
    fn first_two_lengths_match_listing() {
        let one: Vec<String> =
            enumerate_allowed(1, EnumerationMode::FreeGroup).unwrap().iter().map(|w| w.to_string()).collect();
        assert_eq!(one, ["L", "Q", "R", "P"]);
        let mut two: Vec<String> =
            enumerate_allowed(2, EnumerationMode::FreeGroup).unwrap().iter().map(|w| w.to_string()).collect();
        two.sort();
        let mut listed: Vec<String> = ["LL", "LR", "RL", "RR", "QR", "PL", "LP", "RQ", "QQ", "QP", "PQ", "PP"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        listed.sort();
        assert_eq!(two, listed);
    }

    #[test]
    fn brute_force_counts() {
        for n in 0..=8usize {
            let brute = all_words(n).iter().filter(|w| reduce(w).len() == w.len()).count() as u64;
            let c = count_allowed(n as i64, EnumerationMode::FreeGroup).unwrap();
            assert_eq!(c.count, brute, "length {n}");
            assert_eq!(enumerate_allowed(n as i64, EnumerationMode::FreeGroup).unwrap().len() as u64, brute);
        }
    }

    #[test]
    fn published_counts_and_discrepancy() {
        for (n, expected) in [(1, 4), (2, 12), (3, 36)] {
            let c = count_allowed(n, EnumerationMode::Published).unwrap();
            assert_eq!(c.count, expected);
            assert_eq!(c.published, Some(expected));
            assert!(c.discrepancy.is_none());
        }
        let c = count_allowed(4, EnumerationMode::Published).unwrap();
        assert_eq!(c.count, 108);
        assert_eq!(c.published, Some(140));
        assert!(c.discrepancy.unwrap().contains("108"));
    }

    #[test]
    fn negative_length_rejected() {
        assert!(enumerate_allowed(-1, EnumerationMode::FreeGroup).is_err());
        assert!(count_allowed(-3, EnumerationMode::Published).is_err());
    }

    #[test]
    fn pt_examples() {
        assert_eq!(pt_image(&w("LR")), w("LR"));
        assert_eq!(pt_image(&w("LL")), w("RR"));
        assert!(is_pt_symmetric(&w("LR")));
        assert!(!is_pt_symmetric(&w("LL")));
        assert!(is_pt_symmetric(&Word::empty()));
        assert_eq!(pt_symmetrize(&w("L")).unwrap(), w("LR"));
        assert_eq!(pt_symmetrize(&w("Q")).unwrap(), w("QP"));
        assert_eq!(pt_symmetrize(&w("R")).unwrap(), w("RL"));
        assert!(pt_symmetrize(&Word::empty()).is_err());
    }

    #[test]
    fn symmetrized_singletons_are_the_admissible_pairs() {
        let got: Vec<String> =
            Letter::ALL.iter().map(|&l| pt_symmetrize(&Word(vec![l])).unwrap().to_string()).collect();
        assert_eq!(got, ["LR", "QP", "RL", "PQ"]);
    }

    #[test]
    fn exhaustive_small_word_laws() {
        for n in 0..=6 {
            for word in all_words(n) {
                assert_eq!(pt_image(&pt_image(&word)), word);
                if n > 0 {
                    assert!(is_pt_symmetric(&pt_symmetrize(&word).unwrap()));
                }
                assert_eq!(reduce(&word.concat(&word.inverse())), Word::empty());
            }
        }
        for n in 0..=8 {
            for word in all_words(n) {
                let r = reduce(&word);
                assert_eq!(reduce(&r), r);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let word = w("LQRPPL");
        assert_eq!(word.to_string().parse::<Word>().unwrap(), word);
        assert!("LX".parse::<Word>().is_err());
        assert_eq!("".parse::<Word>().unwrap(), Word::empty());
    }
}
