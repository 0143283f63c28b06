//! Combinatorial self-similar structures and the vertex hierarchy `V_n`.
//!
//! A structure is described by `k` letters (the contractions `ψ_i`), `q`
//! boundary labels (the points of `V_0`), the letter fixing each boundary
//! point, and glue rules `ψ_i(p_a) = ψ_j(p_b)`. Post-critical points are
//! restricted to fixed-point addresses `i^∞`.

mod generate;
mod level;

pub use generate::{generate_spec, FractalKind};
pub use level::{LevelGraph, MAX_CELL_ENTRIES};

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite word over the letters `0..k`; the empty word names `K` itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: &[usize]) -> Self {
        Word(letters.iter().map(|&l| l as u16).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&l| l as usize)
    }

    pub fn letter(&self, pos: usize) -> usize {
        self.0[pos] as usize
    }

    pub fn child(&self, letter: usize) -> Word {
        let mut w = self.0.clone();
        w.push(letter as u16);
        Word(w)
    }

    /// Position of this word among all words of the same length in
    /// lexicographic order (first letter most significant).
    pub fn index(&self, k: usize) -> usize {
        self.letters().fold(0, |acc, l| acc * k + l)
    }

    pub fn from_index(mut index: usize, len: usize, k: usize) -> Word {
        let mut letters = vec![0u16; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % k) as u16;
            index /= k;
        }
        Word(letters)
    }

    /// Text form: `-` for the empty word, digits when `k <= 10`, otherwise
    /// letters separated by `.`.
    pub fn to_text(&self, k: usize) -> String {
        if self.is_empty() {
            return "-".to_string();
        }
        let parts: Vec<String> = self.letters().map(|l| l.to_string()).collect();
        if k <= 10 {
            parts.concat()
        } else {
            parts.join(".")
        }
    }

    pub fn parse(text: &str, k: usize) -> Result<Word> {
        let text = text.trim();
        if text == "-" || text.is_empty() {
            return Ok(Word::empty());
        }
        let letters: Vec<usize> = if k <= 10 {
            text.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Parse {
                    context: "word".into(),
                    message: format!("'{text}' is not a digit string"),
                })?
        } else {
            text.split('.')
                .map(|p| p.parse::<usize>().ok())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Parse {
                    context: "word".into(),
                    message: format!("'{text}' is not a dot-separated letter list"),
                })?
        };
        if let Some(&bad) = letters.iter().find(|&&l| l >= k) {
            return Err(Error::Parse {
                context: "word".into(),
                message: format!("letter {bad} out of range (k = {k})"),
            });
        }
        Ok(Word::from_letters(&letters))
    }
}

/// The point `ψ_w(p_label)`; its level is the length of `word`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexRef {
    pub word: Word,
    pub label: usize,
}

impl VertexRef {
    pub fn new(word: Word, label: usize) -> Self {
        VertexRef { word, label }
    }

    pub fn boundary(label: usize) -> Self {
        VertexRef {
            word: Word::empty(),
            label,
        }
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }

    /// `word:label`, e.g. `01:2` or `-:0`.
    pub fn to_text(&self, k: usize) -> String {
        format!("{}:{}", self.word.to_text(k), self.label)
    }

    pub fn parse(text: &str, k: usize, q: usize) -> Result<VertexRef> {
        let (w, l) = text.rsplit_once(':').ok_or_else(|| Error::Parse {
            context: "vertex".into(),
            message: format!("'{text}' is not of the form word:label"),
        })?;
        let label: usize = l.trim().parse().map_err(|_| Error::Parse {
            context: "vertex".into(),
            message: format!("label '{l}' is not an integer"),
        })?;
        if label >= q {
            return Err(Error::Parse {
                context: "vertex".into(),
                message: format!("label {label} out of range (q = {q})"),
            });
        }
        Ok(VertexRef {
            word: Word::parse(w, k)?,
            label,
        })
    }
}

/// `ψ_i(p_a) = ψ_j(p_b)` with `i != j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct GlueRule {
    pub first: (usize, usize),
    pub second: (usize, usize),
}

impl GlueRule {
    pub fn new(i: usize, a: usize, j: usize, b: usize) -> Self {
        GlueRule {
            first: (i, a),
            second: (j, b),
        }
    }
}

impl From<[usize; 4]> for GlueRule {
    fn from(v: [usize; 4]) -> Self {
        GlueRule::new(v[0], v[1], v[2], v[3])
    }
}

impl From<GlueRule> for [usize; 4] {
    fn from(g: GlueRule) -> Self {
        [g.first.0, g.first.1, g.second.0, g.second.1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractalSpec {
    pub name: String,
    /// Number of letters `k`.
    pub letters: usize,
    /// Number of boundary points `q = #V_0`.
    pub boundary: usize,
    /// `fixed_letters[b]` is the letter whose fixed point is `p_b`.
    pub fixed_letters: Vec<usize>,
    pub glue: Vec<GlueRule>,
}

impl fmt::Display for FractalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (k = {}, q = {}, {} glue rules)",
            self.name,
            self.letters,
            self.boundary,
            self.glue.len()
        )
    }
}

/// Level-one combinatorics shared by every cell: the classes of `V_1`.
#[derive(Debug, Clone)]
pub struct Template {
    pub k: usize,
    pub q: usize,
    /// Class of address `(i, b)` stored at `i * q + b`.
    pub class_of: Vec<usize>,
    /// Boundary classes come first (class `b` is `p_b`), interior classes
    /// follow ordered by their lexicographically smallest address.
    pub class_count: usize,
    /// Smallest address `(i, b)` of each class.
    pub min_address: Vec<(usize, usize)>,
}

impl Template {
    pub fn interior_count(&self) -> usize {
        self.class_count - self.q
    }

    pub fn cell(&self, i: usize) -> &[usize] {
        &self.class_of[i * self.q..(i + 1) * self.q]
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so representatives are deterministic
            if ra < rb {
                self.parent[rb] = ra;
            } else {
                self.parent[ra] = rb;
            }
        }
    }
}

impl FractalSpec {
    pub fn k(&self) -> usize {
        self.letters
    }

    pub fn q(&self) -> usize {
        self.boundary
    }

    /// Checks ranges, injectivity of the fixed letters, glue well-formedness
    /// and connectivity, and returns the level-one template.
    pub fn validate(&self) -> Result<Template> {
        let (k, q) = (self.letters, self.boundary);
        if k < 2 {
            return Err(Error::InvalidSpec(format!("letters: need k >= 2, got {k}")));
        }
        if q < 2 {
            return Err(Error::InvalidSpec(format!("boundary: need q >= 2, got {q}")));
        }
        if k > u16::MAX as usize {
            return Err(Error::InvalidSpec(format!("letters: k = {k} too large")));
        }
        if self.fixed_letters.len() != q {
            return Err(Error::InvalidSpec(format!(
                "fixed_letters: expected {q} entries, got {}",
                self.fixed_letters.len()
            )));
        }
        for (b, &i) in self.fixed_letters.iter().enumerate() {
            if i >= k {
                return Err(Error::InvalidSpec(format!(
                    "fixed_letters[{b}]: letter {i} out of range (k = {k})"
                )));
            }
            if self.fixed_letters[..b].contains(&i) {
                return Err(Error::InvalidSpec(format!(
                    "fixed_letters[{b}]: letter {i} fixes two boundary points"
                )));
            }
        }
        for (n, g) in self.glue.iter().enumerate() {
            let [i, a, j, b]: [usize; 4] = (*g).into();
            if i >= k || j >= k {
                return Err(Error::InvalidSpec(format!(
                    "glue[{n}]: letter out of range in [{i},{a},{j},{b}] (k = {k})"
                )));
            }
            if a >= q || b >= q {
                return Err(Error::InvalidSpec(format!(
                    "glue[{n}]: label out of range in [{i},{a},{j},{b}] (q = {q})"
                )));
            }
            if i == j {
                return Err(Error::InvalidSpec(format!(
                    "glue[{n}]: rule [{i},{a},{j},{b}] glues a cell to itself"
                )));
            }
        }

        let mut uf = UnionFind::new(k * q);
        for g in &self.glue {
            uf.union(g.first.0 * q + g.first.1, g.second.0 * q + g.second.1);
        }
        for i in 0..k {
            for a in 0..q {
                for b in 0..a {
                    if uf.find(i * q + a) == uf.find(i * q + b) {
                        return Err(Error::InvalidSpec(format!(
                            "glue: cell {i} has its points {b} and {a} identified"
                        )));
                    }
                }
            }
        }
        let boundary_roots: Vec<usize> = (0..q)
            .map(|b| uf.find(self.fixed_letters[b] * q + b))
            .collect();
        for b in 0..q {
            if boundary_roots[..b].contains(&boundary_roots[b]) {
                return Err(Error::InvalidSpec(format!(
                    "glue: boundary point {b} is identified with another boundary point"
                )));
            }
        }

        // cell-intersection graph must be connected
        let mut cells = UnionFind::new(k);
        for g in &self.glue {
            cells.union(g.first.0, g.second.0);
        }
        if (1..k).any(|i| cells.find(i) != cells.find(0)) {
            return Err(Error::InvalidSpec(
                "glue: level-one cells do not form a connected set".into(),
            ));
        }

        // classes: boundary first, then by smallest address
        let mut class_of = vec![usize::MAX; k * q];
        let mut min_address = Vec::new();
        for (b, &root) in boundary_roots.iter().enumerate() {
            let members: Vec<usize> = (0..k * q).filter(|&x| uf.find(x) == root).collect();
            for &x in &members {
                class_of[x] = b;
            }
            min_address.push((members[0] / q, members[0] % q));
        }
        for x in 0..k * q {
            if class_of[x] == usize::MAX {
                let root = uf.find(x);
                let id = min_address.len();
                min_address.push((x / q, x % q));
                for y in x..k * q {
                    if uf.find(y) == root {
                        class_of[y] = id;
                    }
                }
            }
        }
        Ok(Template {
            k,
            q,
            class_count: min_address.len(),
            class_of,
            min_address,
        })
    }

    /// For each address `(i, a)` (stored at `i * q + a`) the addresses it is
    /// glued to directly.
    fn partners(&self) -> Vec<Vec<(usize, usize)>> {
        let q = self.boundary;
        let mut table = vec![Vec::new(); self.letters * q];
        for g in &self.glue {
            table[g.first.0 * q + g.first.1].push(g.second);
            table[g.second.0 * q + g.second.1].push(g.first);
        }
        table
    }

    /// Lexicographically smallest address naming the same point at the same
    /// level.
    pub fn canonicalize(&self, r: &VertexRef) -> VertexRef {
        self.orbit(r).into_iter().next().unwrap_or_else(|| r.clone())
    }

    /// All addresses at the level of `r` naming the same point, sorted.
    pub fn orbit(&self, r: &VertexRef) -> BTreeSet<VertexRef> {
        let mut seen = BTreeSet::new();
        seen.insert(r.clone());
        if r.word.is_empty() {
            return seen;
        }
        let q = self.boundary;
        let partners = self.partners();
        let mut queue = VecDeque::from([r.clone()]);
        while let Some(cur) = queue.pop_front() {
            let n = cur.word.len();
            let fixed = self.fixed_letters[cur.label];
            // glue at position `pos` is valid while the suffix after it is
            // made of the letter fixing the current label
            for pos in (0..n).rev() {
                let i = cur.word.letter(pos);
                let trailing = n - 1 - pos;
                for &(j, b) in &partners[i * q + cur.label] {
                    let mut letters = cur.word.0[..pos].to_vec();
                    letters.push(j as u16);
                    letters.extend(std::iter::repeat_n(self.fixed_letters[b] as u16, trailing));
                    let next = VertexRef::new(Word(letters), b);
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
                if i != fixed {
                    break;
                }
            }
        }
        seen
    }

    /// Re-addresses `r` at level `n` by appending the letter fixing its label.
    pub fn lift(&self, r: &VertexRef, n: usize) -> Result<VertexRef> {
        let m = r.level();
        if n < m {
            return Err(Error::InvalidArgument(format!(
                "cannot lift a level-{m} address to level {n}"
            )));
        }
        let fixed = self.fixed_letters[r.label] as u16;
        let mut letters = r.word.0.clone();
        letters.extend(std::iter::repeat_n(fixed, n - m));
        Ok(VertexRef::new(Word(letters), r.label))
    }

    pub fn check_ref(&self, r: &VertexRef) -> Result<()> {
        if r.label >= self.boundary {
            return Err(Error::InvalidArgument(format!(
                "label {} out of range (q = {})",
                r.label, self.boundary
            )));
        }
        if let Some(l) = r.word.letters().find(|&l| l >= self.letters) {
            return Err(Error::InvalidArgument(format!(
                "letter {l} out of range (k = {})",
                self.letters
            )));
        }
        Ok(())
    }
}
