//! Words over a finite alphabet, the letter-set morphism `omega`, the
//! first-occurrence morphism `tau`, and the free left regular band `F(A)`
//! of duplicate-free words.
//!
//! Letters are stored as indices into an [`Alphabet`]; the alphabet's
//! declaration order is the canonical letter order used for sorting,
//! serialization and the `mu` sort inside [`theta_expand`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::InputError;

/// Default cap on `|A|` for anything that enumerates `F(A)`.
pub const DEFAULT_MAX_LETTERS: usize = 8;
/// Hard cap imposed by the bitmask representation of [`LetterSet`].
pub const MAX_LETTERS: usize = 32;
pub const BEGIN_MARKER: char = '#';
pub const END_MARKER: char = '$';

/// Index of a letter in its alphabet.
pub type Letter = u8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(letters: I) -> Result<Self, InputError> {
        let letters: Vec<char> = letters.into_iter().collect();
        if letters.len() > MAX_LETTERS {
            return Err(InputError::AlphabetTooLarge {
                size: letters.len(),
                limit: MAX_LETTERS,
            });
        }
        let mut seen = BTreeSet::new();
        for &c in &letters {
            if c == BEGIN_MARKER || c == END_MARKER {
                return Err(InputError::ReservedLetter(c));
            }
            if !seen.insert(c) {
                return Err(InputError::DuplicateLetter(c));
            }
        }
        Ok(Alphabet { letters })
    }

    /// Builds an alphabet from the characters of `s`, in order.
    pub fn from_chars(s: &str) -> Result<Self, InputError> {
        Self::new(s.chars())
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn letter(&self, idx: Letter) -> char {
        self.letters[idx as usize]
    }

    pub fn index_of(&self, c: char) -> Option<Letter> {
        self.letters.iter().position(|&l| l == c).map(|i| i as Letter)
    }

    pub fn full_set(&self) -> LetterSet {
        LetterSet::full(self.len())
    }

    pub fn parse_word(&self, s: &str) -> Result<Word, InputError> {
        s.chars()
            .map(|c| self.index_of(c).ok_or(InputError::UnknownSymbol(c)))
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    pub fn parse_band_word(&self, s: &str) -> Result<BandWord, InputError> {
        let w = self.parse_word(s)?;
        BandWord::new(w.0).map_err(|_| InputError::RepeatedLetter(s.to_string()))
    }

    pub fn render(&self, letters: &[Letter]) -> String {
        letters.iter().map(|&l| self.letter(l)).collect()
    }

    /// Renders a letter set as `{a,b}` in alphabet order.
    pub fn render_set(&self, set: LetterSet) -> String {
        let inner: Vec<String> = set.iter().map(|l| self.letter(l).to_string()).collect();
        format!("{{{}}}", inner.join(","))
    }

    /// Parses `{a,b}` (or `{}`) back into a set.
    pub fn parse_set(&self, s: &str) -> Result<LetterSet, InputError> {
        let inner = s
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| InputError::BadVariable(s.to_string()))?;
        let mut set = LetterSet::EMPTY;
        for part in inner.split(',').filter(|p| !p.is_empty()) {
            let mut chars = part.chars();
            let c = chars.next().ok_or_else(|| InputError::BadVariable(s.to_string()))?;
            if chars.next().is_some() {
                return Err(InputError::BadVariable(s.to_string()));
            }
            let idx = self.index_of(c).ok_or(InputError::UnknownSymbol(c))?;
            set = set.with(idx);
        }
        Ok(set)
    }

    pub(crate) fn check_letters(&self, letters: &[Letter]) -> Result<(), InputError> {
        match letters.iter().find(|&&l| l as usize >= self.len()) {
            Some(&l) => Err(InputError::UnknownLetterIndex(l as usize)),
            None => Ok(()),
        }
    }
}

/// A subset of the alphabet, stored as a bitmask over letter indices.
///
/// Ordered by cardinality first, then lexicographically by sorted members.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct LetterSet(u32);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            LetterSet(u32::MAX)
        } else {
            LetterSet((1u32 << n) - 1)
        }
    }

    pub fn from_bits(bits: u32) -> Self {
        LetterSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, l: Letter) -> bool {
        self.0 & (1 << l) != 0
    }

    pub fn with(self, l: Letter) -> Self {
        LetterSet(self.0 | (1 << l))
    }

    pub fn without(self, l: Letter) -> Self {
        LetterSet(self.0 & !(1 << l))
    }

    pub fn union(self, other: Self) -> Self {
        LetterSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Letter> {
        (0..32u8).filter(move |&l| self.contains(l))
    }

    /// All subsets of the full set on `n` letters, in canonical order.
    pub fn all_subsets(n: usize) -> Vec<LetterSet> {
        let mut v: Vec<LetterSet> = (0..1u64 << n).map(|b| LetterSet(b as u32)).collect();
        v.sort();
        v
    }
}

impl Ord for LetterSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for LetterSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An arbitrary word, as letter indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

/// A duplicate-free word: an element of the free left regular band.
///
/// Ordered by length, then lexicographically in alphabet order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BandWord(Vec<Letter>);

impl BandWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self, InputError> {
        let mut seen = LetterSet::EMPTY;
        for &l in &letters {
            if seen.contains(l) {
                return Err(InputError::RepeatedLetter(format!("{letters:?}")));
            }
            seen = seen.with(l);
        }
        Ok(BandWord(letters))
    }

    pub fn empty() -> Self {
        BandWord(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The letter set of this band word.
    pub fn sigma(&self) -> LetterSet {
        self.0.iter().fold(LetterSet::EMPTY, |s, &l| s.with(l))
    }

    /// The prefix `v[i]` consisting of the first `i` letters.
    pub fn prefix(&self, i: usize) -> BandWord {
        BandWord(self.0[..i].to_vec())
    }

    pub fn to_word(&self) -> Word {
        Word(self.0.clone())
    }
}

impl Ord for BandWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for BandWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The set of letters occurring in `w`.
pub fn omega(w: &Word) -> LetterSet {
    w.0.iter().fold(LetterSet::EMPTY, |s, &l| s.with(l))
}

/// Deletes every repeated letter, keeping first occurrences.
pub fn tau(w: &Word) -> BandWord {
    let mut seen = LetterSet::EMPTY;
    let mut out = Vec::new();
    for &l in &w.0 {
        if !seen.contains(l) {
            seen = seen.with(l);
            out.push(l);
        }
    }
    BandWord(out)
}

/// Number of elements of `F(A)` for `|A| = n`: `sum_k n!/(n-k)!`.
pub fn band_size(n: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for k in 0..=n {
        total += term;
        term *= (n - k) as u128;
    }
    total
}

/// All duplicate-free words over `alphabet`, ordered by length then lexicographically.
pub fn enumerate_band(alphabet: &Alphabet, limit: usize) -> Result<Vec<BandWord>, InputError> {
    if alphabet.len() > limit {
        return Err(InputError::AlphabetTooLarge {
            size: alphabet.len(),
            limit,
        });
    }
    let n = alphabet.len();
    let mut layers = vec![vec![BandWord::empty()]];
    for _ in 0..n {
        let prev = layers.last().unwrap();
        let mut next = Vec::new();
        for w in prev {
            let used = w.sigma();
            for l in 0..n as Letter {
                if !used.contains(l) {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(BandWord(v));
                }
            }
        }
        layers.push(next);
    }
    Ok(layers.into_iter().flatten().collect())
}

/// Level (cardinality) of every subset of the alphabet in the free semilattice.
pub fn semilattice_levels(alphabet: &Alphabet) -> BTreeMap<LetterSet, usize> {
    LetterSet::all_subsets(alphabet.len())
        .into_iter()
        .map(|s| (s, s.len()))
        .collect()
}

/// Expands a band word into `v[1]xi v[2]xi ... v[k]xi` where `v[1]xi = a1^m`
/// and, for `i >= 2`, `v[i]xi` is `(a1^m ... ai^m sorted by alphabet order)^l`.
///
/// `tau` of the result is `v`.
pub fn theta_expand(v: &BandWord, l: usize, m: usize) -> Result<Word, InputError> {
    if v.is_empty() {
        return Err(InputError::EmptyBandWord);
    }
    if l == 0 {
        return Err(InputError::ZeroParameter("l"));
    }
    if m == 0 {
        return Err(InputError::ZeroParameter("m"));
    }
    let mut out = vec![v.0[0]; m];
    for i in 2..=v.len() {
        let mut sorted: Vec<Letter> = v.0[..i].to_vec();
        sorted.sort_unstable();
        let block: Vec<Letter> = sorted.iter().flat_map(|&a| std::iter::repeat_n(a, m)).collect();
        for _ in 0..l {
            out.extend_from_slice(&block);
        }
    }
    Ok(Word(out))
}

/// An R-trivial idempotent language, given by its set of accepted band words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct R1Language {
    alphabet: Alphabet,
    accept: BTreeSet<BandWord>,
}

#[derive(Serialize, Deserialize)]
struct LanguageFile {
    alphabet: Vec<String>,
    accept: Vec<String>,
}

impl R1Language {
    pub fn new(alphabet: Alphabet, accept: BTreeSet<BandWord>) -> Result<Self, InputError> {
        for w in &accept {
            alphabet.check_letters(w.letters())?;
        }
        Ok(R1Language { alphabet, accept })
    }

    /// Convenience constructor from an alphabet string and accepted words.
    pub fn parse(alphabet: &str, accept: &[&str]) -> Result<Self, InputError> {
        let alphabet = Alphabet::from_chars(alphabet)?;
        let mut set = BTreeSet::new();
        for s in accept {
            let w = alphabet.parse_band_word(s)?;
            if !set.insert(w) {
                return Err(InputError::DuplicateAcceptEntry(s.to_string()));
            }
        }
        Ok(R1Language { alphabet, accept: set })
    }

    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let file: LanguageFile = serde_json::from_str(text)?;
        let mut letters = Vec::with_capacity(file.alphabet.len());
        for entry in &file.alphabet {
            let mut chars = entry.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => letters.push(c),
                _ => return Err(InputError::NotSingleChar(entry.clone())),
            }
        }
        let alphabet = Alphabet::new(letters)?;
        let accept: Vec<&str> = file.accept.iter().map(String::as_str).collect();
        let mut set = BTreeSet::new();
        for s in accept {
            let w = alphabet.parse_band_word(s)?;
            if !set.insert(w) {
                return Err(InputError::DuplicateAcceptEntry(s.to_string()));
            }
        }
        Ok(R1Language { alphabet, accept: set })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(LanguageFile {
            alphabet: self.alphabet.letters().iter().map(|c| c.to_string()).collect(),
            accept: self.accept.iter().map(|w| self.alphabet.render(w.letters())).collect(),
        })
        .expect("language serializes")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn accept(&self) -> &BTreeSet<BandWord> {
        &self.accept
    }

    pub fn contains_band(&self, v: &BandWord) -> bool {
        self.accept.contains(v)
    }

    /// Membership of an arbitrary word: `tau(x)` is accepted.
    pub fn member(&self, x: &Word) -> Result<bool, InputError> {
        self.alphabet.check_letters(x.letters())?;
        Ok(self.accept.contains(&tau(x)))
    }

    pub fn member_str(&self, x: &str) -> Result<bool, InputError> {
        self.member(&self.alphabet.parse_word(x)?)
    }

    /// The language accepting exactly the band words this one rejects.
    pub fn complement(&self) -> Result<Self, InputError> {
        let all = enumerate_band(&self.alphabet, MAX_LETTERS)?;
        Ok(R1Language {
            alphabet: self.alphabet.clone(),
            accept: all.into_iter().filter(|w| !self.accept.contains(w)).collect(),
        })
    }

    pub fn render(&self, w: &BandWord) -> String {
        self.alphabet.render(w.letters())
    }
}

impl fmt::Display for R1Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self.accept.iter().map(|w| self.render(w)).collect();
        write!(
            f,
            "{{{}}} over {}",
            words.join(","),
            self.alphabet.render_set(self.alphabet.full_set())
        )
    }
}

/// All words of length `0..=max_len` over `alphabet`, by length then lexicographically.
pub fn words_up_to(alphabet: &Alphabet, max_len: usize) -> Vec<Word> {
    let n = alphabet.len() as Letter;
    let mut out = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * n as usize);
        for w in &frontier {
            for l in 0..n {
                let mut v = w.0.clone();
                v.push(l);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
