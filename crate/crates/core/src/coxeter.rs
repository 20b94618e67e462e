//! Weyl groups of type `A_{n-1}` (the symmetric groups `S_n`), with special
//! subgroups, special cosets and the Coxeter complex.
//!
//! Elements are stored as permutations in one-line notation: `w(j)` is the
//! image of `j`. Generator `r_i` (1-based, `1 <= i < n`) swaps `i` and `i+1`,
//! and products compose right to left: `(a*b)(j) = a(b(j))`.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Coxeter matrix of type `A_{n-1}` (indexed by generators `0..n-1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoxeterMatrix {
    entries: Vec<Vec<u32>>,
}

impl CoxeterMatrix {
    pub fn type_a(n: usize) -> Self {
        let r = n.saturating_sub(1);
        let entries = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| match i.abs_diff(j) {
                        0 => 1,
                        1 => 3,
                        _ => 2,
                    })
                    .collect()
            })
            .collect();
        Self { entries }
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i][j]
    }

    pub fn is_valid(&self) -> bool {
        let r = self.rank();
        (0..r).all(|i| {
            (0..r).all(|j| {
                let m = self.entries[i][j];
                m == self.entries[j][i] && ((m == 1) == (i == j))
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylElement {
    perm: Vec<u8>,
}

impl WeylElement {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n as u8).collect(),
        }
    }

    /// The simple reflection `r_i`, `1 <= i < n`.
    pub fn generator(n: usize, i: usize) -> Self {
        assert!(i >= 1 && i < n, "generator r_{i} out of range for n = {n}");
        let mut perm: Vec<u8> = (0..n as u8).collect();
        perm.swap(i - 1, i);
        Self { perm }
    }

    /// From one-line notation, 1-based (`[3,2,1]`).
    pub fn from_one_line(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        let mut perm = Vec::with_capacity(n);
        for &x in images {
            if x == 0 || x > n || seen[x - 1] {
                return Err(Error::parse("permutation", format!("{images:?} is not a permutation")));
            }
            seen[x - 1] = true;
            perm.push((x - 1) as u8);
        }
        Ok(Self { perm })
    }

    /// Product of generators `r_{i_1} r_{i_2} ...` (1-based indices).
    pub fn from_word(n: usize, word: &[usize]) -> Result<Self> {
        let mut w = Self::identity(n);
        for &i in word {
            if i == 0 || i >= n {
                return Err(Error::parse("word", format!("r{i} is not a generator for n = {n}")));
            }
            w = w.multiply(&Self::generator(n, i));
        }
        Ok(w)
    }

    /// Parses `"r1.r2.r1"`, `"e"` or `"[3,2,1]"`.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "e" || t.is_empty() {
            return Ok(Self::identity(n));
        }
        if let Some(body) = t.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let images = body
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse("permutation", t.to_string()))?;
            let w = Self::from_one_line(&images)?;
            if w.rank() != n {
                return Err(Error::parse("permutation", format!("{t} has size != {n}")));
            }
            return Ok(w);
        }
        let word = t
            .split('.')
            .map(|g| g.trim().strip_prefix('r').and_then(|i| i.parse::<usize>().ok()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::parse("word", t.to_string()))?;
        Self::from_word(n, &word)
    }

    /// `n` such that this is an element of `S_n`.
    pub fn rank(&self) -> usize {
        self.perm.len()
    }

    /// Image of `j` (0-based).
    pub fn apply(&self, j: usize) -> usize {
        self.perm[j] as usize
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.perm.iter().map(|&x| x as usize + 1).collect()
    }

    pub fn multiply(&self, other: &WeylElement) -> WeylElement {
        assert_eq!(self.rank(), other.rank(), "rank mismatch");
        WeylElement {
            perm: other.perm.iter().map(|&j| self.perm[j as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> WeylElement {
        let mut perm = vec![0u8; self.rank()];
        for (j, &w) in self.perm.iter().enumerate() {
            perm[w as usize] = j as u8;
        }
        WeylElement { perm }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &w)| i == w as usize)
    }

    /// Inversion count.
    pub fn length(&self) -> usize {
        let n = self.rank();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.perm[i] > self.perm[j])
            .count()
    }

    /// Whether `l(r_i w) < l(w)` (1-based `i`).
    pub fn has_left_descent(&self, i: usize) -> bool {
        let inv = self.inverse();
        inv.perm[i - 1] > inv.perm[i]
    }

    /// Whether `l(w r_i) < l(w)` (1-based `i`).
    pub fn has_right_descent(&self, i: usize) -> bool {
        self.perm[i - 1] > self.perm[i]
    }

    /// The lexicographically smallest reduced word (1-based letters).
    pub fn reduced_word(&self) -> Vec<usize> {
        let n = self.rank();
        let mut word = Vec::with_capacity(self.length());
        let mut w = self.clone();
        while !w.is_identity() {
            let i = (1..n).find(|&i| w.has_left_descent(i)).expect("non-identity has a descent");
            word.push(i);
            w = WeylElement::generator(n, i).multiply(&w);
        }
        word
    }

    pub fn word_string(&self) -> String {
        let word = self.reduced_word();
        if word.is_empty() {
            "e".to_string()
        } else {
            word.iter().map(|i| format!("r{i}")).collect::<Vec<_>>().join(".")
        }
    }

    /// Permutation matrix `E` with `E e_j = e_{w(j)}`, as 0/1 entries.
    pub fn permutation_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.rank();
        let mut m = vec![vec![0; n]; n];
        for j in 0..n {
            m[self.apply(j)][j] = 1;
        }
        m
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.word_string())
    }
}

impl Serialize for WeylElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.word_string())
    }
}

impl FromStr for WeylElement {
    type Err = Error;

    /// Parses a one-line permutation; words need the rank and go through
    /// [`WeylElement::parse`].
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let body = t
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| Error::parse("permutation", t.to_string()))?;
        let images = body
            .split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse("permutation", t.to_string()))?;
        Self::from_one_line(&images)
    }
}

fn check_rank(n: usize) {
    assert!((1..=8).contains(&n), "rank {n} unsupported");
}

/// The longest element `σ`, the order-reversing permutation.
pub fn longest_element(n: usize) -> WeylElement {
    check_rank(n);
    WeylElement {
        perm: (0..n as u8).rev().collect(),
    }
}

/// Sorts by length, then by reduced word.
pub fn sort_length_lex(elements: &mut [WeylElement]) {
    elements.sort_by_cached_key(|w| (w.length(), w.reduced_word()));
}

/// All elements of `W(A_{n-1})`, by closure of the generators.
pub fn enumerate_group(n: usize) -> Vec<WeylElement> {
    let gens: Vec<usize> = (1..n).collect();
    let mut all = generate_subgroup(n, &gens);
    sort_length_lex(&mut all);
    all
}

/// The special subgroup `W(J)` generated by `{r_j : j in J}`.
pub fn generate_subgroup(n: usize, j: &[usize]) -> Vec<WeylElement> {
    check_rank(n);
    let e = WeylElement::identity(n);
    let gens: Vec<WeylElement> = j.iter().map(|&i| WeylElement::generator(n, i)).collect();
    let mut seen: HashSet<WeylElement> = HashSet::from([e.clone()]);
    let mut queue = VecDeque::from([e]);
    while let Some(w) = queue.pop_front() {
        for g in &gens {
            let x = w.multiply(g);
            if seen.insert(x.clone()) {
                queue.push_back(x);
            }
        }
    }
    let mut out: Vec<WeylElement> = seen.into_iter().collect();
    sort_length_lex(&mut out);
    out
}

/// Subgroup generated by arbitrary elements.
pub fn generated_by(n: usize, gens: &[WeylElement]) -> BTreeSet<WeylElement> {
    let mut seen = BTreeSet::from([WeylElement::identity(n)]);
    let mut queue: VecDeque<WeylElement> = seen.iter().cloned().collect();
    while let Some(w) = queue.pop_front() {
        for g in gens {
            let x = w.multiply(g);
            if seen.insert(x.clone()) {
                queue.push_back(x);
            }
        }
    }
    seen
}

/// A coset of a special subgroup, `w W(J)` (left) or `W(J) w` (right).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecialCoset {
    pub generators: Vec<usize>,
    pub representative: WeylElement,
    pub elements: Vec<WeylElement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Partition of `W` into left cosets `w W(J)`, each with its minimal-length
/// representative, ordered by representative.
pub fn cosets(j: &[usize], n: usize) -> Vec<SpecialCoset> {
    cosets_of(j, n, Side::Left)
}

/// Partition of `W` into right cosets `W(J) w`.
pub fn right_cosets(j: &[usize], n: usize) -> Vec<SpecialCoset> {
    cosets_of(j, n, Side::Right)
}

fn cosets_of(j: &[usize], n: usize, side: Side) -> Vec<SpecialCoset> {
    let mut jj: Vec<usize> = j.to_vec();
    jj.sort_unstable();
    jj.dedup();
    let sub = generate_subgroup(n, &jj);
    let mut placed: HashSet<WeylElement> = HashSet::new();
    let mut out = Vec::new();
    for w in enumerate_group(n) {
        if placed.contains(&w) {
            continue;
        }
        let mut elements: Vec<WeylElement> = sub
            .iter()
            .map(|u| match side {
                Side::Left => w.multiply(u),
                Side::Right => u.multiply(&w),
            })
            .collect();
        sort_length_lex(&mut elements);
        placed.extend(elements.iter().cloned());
        out.push(SpecialCoset {
            generators: jj.clone(),
            representative: elements[0].clone(),
            elements,
        });
    }
    out
}

/// A vertex of the Coxeter complex: a maximal proper special coset
/// `w W(I \ {i})`, with type `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexVertex {
    pub vertex_type: usize,
    pub coset: SpecialCoset,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoxeterComplex {
    pub n: usize,
    pub chambers: Vec<WeylElement>,
    pub vertices: Vec<ComplexVertex>,
    /// For each chamber, its vertex indices (one per type).
    pub chamber_vertices: Vec<Vec<usize>>,
    /// `(a, b, i)`: chambers `a` and `b` are `i`-adjacent, `a < b`.
    pub adjacency: Vec<(usize, usize, usize)>,
}

impl CoxeterComplex {
    pub fn vertex_of(&self, w: &WeylElement, vertex_type: usize) -> usize {
        self.vertices
            .iter()
            .position(|v| v.vertex_type == vertex_type && v.coset.elements.contains(w))
            .expect("every chamber has a vertex of each type")
    }

    /// Left action of `u` on vertices.
    pub fn act_on_vertex(&self, u: &WeylElement, vertex: usize) -> usize {
        let v = &self.vertices[vertex];
        self.vertex_of(&u.multiply(&v.coset.representative), v.vertex_type)
    }

    pub fn chamber_index(&self, w: &WeylElement) -> usize {
        self.chambers.iter().position(|c| c == w).expect("chamber")
    }
}

/// The Coxeter complex of `W(A_{n-1})`: chambers are group elements, vertices
/// are the cosets of the maximal special subgroups, and two chambers are
/// `i`-adjacent when they share the panel `w W({i})`.
pub fn coxeter_complex(n: usize) -> CoxeterComplex {
    let chambers = enumerate_group(n);
    let types: Vec<usize> = (1..n).collect();
    let mut vertices = Vec::new();
    for &t in &types {
        let j: Vec<usize> = types.iter().copied().filter(|&x| x != t).collect();
        for coset in cosets(&j, n) {
            vertices.push(ComplexVertex {
                vertex_type: t,
                coset,
            });
        }
    }
    let mut complex = CoxeterComplex {
        n,
        chambers: chambers.clone(),
        vertices,
        chamber_vertices: Vec::new(),
        adjacency: Vec::new(),
    };
    complex.chamber_vertices = chambers
        .iter()
        .map(|w| types.iter().map(|&t| complex.vertex_of(w, t)).collect())
        .collect();
    for (a, w) in chambers.iter().enumerate() {
        for &i in &types {
            let b = complex.chamber_index(&w.multiply(&WeylElement::generator(n, i)));
            if a < b {
                complex.adjacency.push((a, b, i));
            }
        }
    }
    complex
}
