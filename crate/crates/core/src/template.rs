//! Binary templates, template databases and the Hamming metric.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A fixed-length bit vector, packed into 64-bit words.
///
/// Bit `i` of the template corresponds to character `i` of its textual form.
/// Unused high bits of the last word are always zero, so derived equality,
/// ordering and hashing agree with bitwise equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Template {
    len: usize,
    words: Vec<u64>,
}

impl Template {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut t = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                t.set(i, true);
            }
        }
        t
    }

    /// Low `len` bits of `value`, bit 0 first. Handy for enumerating small spaces.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut t = Self::zeros(len);
        if len > 0 {
            t.words[0] = if len == WORD { value } else { value & ((1u64 << len) - 1) };
        }
        t
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut t = Self::zeros(len);
        for w in t.words.iter_mut() {
            *w = rng.gen();
        }
        t.clear_tail();
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for {}-bit template", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for {}-bit template", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut t = Self {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        t.clear_tail();
        t
    }

    /// Bitwise XOR of two templates of equal length.
    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
        })
    }

    /// Hamming distance; errors when the lengths differ.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        self.check_dim(other)?;
        Ok(self.distance(other))
    }

    /// Hamming distance without the length check. Callers guarantee equal lengths.
    #[inline]
    pub fn distance(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(())
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Template({self})")
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut t = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => t.set(i, true),
                other => {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("invalid bit character {other:?}"),
                    })
                }
            }
        }
        if t.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(t)
    }
}

/// An ordered collection of distinct, equally sized templates with unique ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateDatabase {
    dim: usize,
    ids: Vec<String>,
    members: Vec<Template>,
}

impl TemplateDatabase {
    pub fn new(ids: Vec<String>, members: Vec<Template>) -> Result<Self> {
        if ids.len() != members.len() {
            return Err(Error::Invalid(format!(
                "{} ids for {} templates",
                ids.len(),
                members.len()
            )));
        }
        let dim = members.first().ok_or(Error::EmptyDatabase)?.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        check_capacity(members.len(), dim)?;
        let mut seen_ids = HashSet::with_capacity(ids.len());
        let mut seen_templates = HashSet::with_capacity(members.len());
        for (id, t) in ids.iter().zip(&members) {
            if t.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.len(),
                });
            }
            if !seen_ids.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
            if !seen_templates.insert(t) {
                return Err(Error::DuplicateTemplate(id.clone()));
            }
        }
        Ok(Self { dim, ids, members })
    }

    /// Builds a database with ids `u1`, `u2`, ...
    pub fn from_templates(members: Vec<Template>) -> Result<Self> {
        let ids = (1..=members.len()).map(|i| format!("u{i}")).collect();
        Self::new(ids, members)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Template] {
        &self.members
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, index: usize) -> Option<(&str, &Template)> {
        Some((self.ids.get(index)?.as_str(), self.members.get(index)?))
    }

    pub fn position_of_id(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn position_of(&self, t: &Template) -> Option<usize> {
        self.members.iter().position(|x| x == t)
    }

    /// Enrolls one more template, keeping every database invariant.
    pub fn push(&mut self, id: String, t: Template) -> Result<usize> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: t.len(),
            });
        }
        if self.position_of_id(&id).is_some() {
            return Err(Error::DuplicateId(id));
        }
        if self.position_of(&t).is_some() {
            return Err(Error::AlreadyEnrolled(t.to_string()));
        }
        check_capacity(self.len() + 1, self.dim)?;
        self.ids.push(id);
        self.members.push(t);
        Ok(self.members.len() - 1)
    }

    /// Removes the member at `index`, returning its id and template.
    /// Fails when that would leave the database empty.
    pub fn remove(&mut self, index: usize) -> Result<(String, Template)> {
        if index >= self.len() {
            return Err(Error::NotEnrolled(format!("#{index}")));
        }
        if self.len() == 1 {
            return Err(Error::EmptyDatabase);
        }
        Ok((self.ids.remove(index), self.members.remove(index)))
    }

    /// Copy restricted to the given member indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.ids[i].clone()).collect(),
            indices.iter().map(|&i| self.members[i].clone()).collect(),
        )
    }

    pub fn dissimilarity_matrix(&self) -> DissimilarityMatrix {
        DissimilarityMatrix::from_templates(&self.members)
    }

    /// Parses the `<id> <bits>` line format; `#` lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ids = Vec::new();
        let mut members = Vec::new();
        let mut dim = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, bits) = line.split_once(' ').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected `<id> <bits>`".into(),
            })?;
            if id.is_empty() || bits.contains(' ') {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `<id> <bits>`".into(),
                });
            }
            let t: Template = bits.parse().map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse {
                    line: line_no,
                    message,
                },
                _ => Error::Parse {
                    line: line_no,
                    message: "empty bit string".into(),
                },
            })?;
            let expected = *dim.get_or_insert(t.len());
            if t.len() != expected {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("width {} differs from {expected}", t.len()),
                });
            }
            ids.push(id.to_string());
            members.push(t);
        }
        Self::new(ids, members)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.dim + 8));
        for (id, t) in self.ids.iter().zip(&self.members) {
            out.push_str(id);
            out.push(' ');
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }
}

/// A proper subset of an `n`-bit space needs `count < 2^n`.
fn check_capacity(count: usize, dim: usize) -> Result<()> {
    if dim < usize::BITS as usize - 1 && count >= (1usize << dim) {
        return Err(Error::TooManyTemplates { count, dim });
    }
    Ok(())
}

/// `k` distinct uniform templates of `n` bits, deterministic in `seed`.
pub fn random_database(n: usize, k: usize, seed: u64) -> Result<TemplateDatabase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_database_with(n, k, &mut rng)
}

pub fn random_database_with<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<TemplateDatabase> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if k == 0 {
        return Err(Error::EmptyDatabase);
    }
    check_capacity(k, n)?;
    let mut seen = HashSet::with_capacity(k);
    let mut members = Vec::with_capacity(k);
    if n < 20 && k * 2 > 1 << n {
        // dense regime: sample indices of the space without replacement
        for v in sample(rng, 1 << n, k).into_iter() {
            members.push(Template::from_u64(v as u64, n));
        }
    } else {
        while members.len() < k {
            let t = Template::random(n, rng);
            if seen.insert(t.clone()) {
                members.push(t);
            }
        }
    }
    TemplateDatabase::from_templates(members)
}

/// Symmetric `k x k` matrix of pairwise Hamming distances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DissimilarityMatrix {
    size: usize,
    data: Vec<u32>,
}

impl DissimilarityMatrix {
    pub fn from_templates(members: &[Template]) -> Self {
        let size = members.len();
        let mut data = vec![0u32; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = members[i].distance(&members[j]) as u32;
                data[i * size + j] = d;
                data[j * size + i] = d;
            }
        }
        Self { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.size..(i + 1) * self.size]
    }
}
