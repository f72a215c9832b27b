//! Symbolic algebra of N-qubit Pauli strings and real-weighted Pauli sums.
//!
//! Strings are rendered with site 0 as the leftmost character, e.g. `"XYI"`
//! puts X on site 0 and Y on site 1. Sums keep at most one term per distinct
//! string and drop terms whose coefficient is exactly zero.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_SITES: usize = 10;

/// Single-qubit Pauli letter.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Phase of a Pauli product, one of {+1, +i, -1, -i}.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Phase {
    One,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn as_complex(self) -> Complex64 {
        match self {
            Phase::One => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    fn times(self, other: Phase) -> Phase {
        // powers of i: One=0, PlusI=1, MinusOne=2, MinusI=3
        let k = (self.power() + other.power()) % 4;
        Phase::from_power(k)
    }

    fn power(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    fn from_power(k: u8) -> Phase {
        match k {
            0 => Phase::One,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }
}

/// Parity of the Y-letter count of a string.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum YParity {
    Even,
    Odd,
}

/// Tensor product of single-qubit Pauli letters, one per site.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() || letters.len() > MAX_SITES {
            return Err(Error::InvalidParameter(format!(
                "site count {} outside 1..={}",
                letters.len(),
                MAX_SITES
            )));
        }
        Ok(PauliString { letters })
    }

    pub fn identity(n: usize) -> Result<Self> {
        PauliString::new(vec![Pauli::I; n])
    }

    /// Identity everywhere except `letter` at `site`.
    pub fn single(n: usize, site: usize, letter: Pauli) -> Result<Self> {
        if site >= n {
            return Err(Error::InvalidParameter(format!("site {site} >= {n}")));
        }
        let mut letters = vec![Pauli::I; n];
        letters[site] = letter;
        PauliString::new(letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, site: usize) -> Pauli {
        self.letters[site]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == Pauli::I)
    }

    /// Sites carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != Pauli::I)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&l| l == Pauli::Y).count()
    }

    pub fn y_parity(&self) -> YParity {
        if self.y_count().is_multiple_of(2) {
            YParity::Even
        } else {
            YParity::Odd
        }
    }

    /// Site-wise product `a * b`, returning the overall phase and the product string.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.len() != other.len() {
            return Err(Error::InvalidOperand(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let mut phase = Phase::One;
        let mut letters = Vec::with_capacity(self.len());
        for (&a, &b) in self.letters.iter().zip(&other.letters) {
            let (p, l) = single_product(a, b);
            phase = phase.times(p);
            letters.push(l);
        }
        Ok((phase, PauliString { letters }))
    }
}

fn single_product(a: Pauli, b: Pauli) -> (Phase, Pauli) {
    use Pauli::*;
    use Phase::*;
    match (a, b) {
        (I, x) => (One, x),
        (x, I) => (One, x),
        (X, X) | (Y, Y) | (Z, Z) => (One, I),
        (X, Y) => (PlusI, Z),
        (Y, X) => (MinusI, Z),
        (Y, Z) => (PlusI, X),
        (Z, Y) => (MinusI, X),
        (Z, X) => (PlusI, Y),
        (X, Z) => (MinusI, Y),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .enumerate()
            .map(|(i, c)| {
                Pauli::from_char(c).ok_or(Error::Parse {
                    offset: i,
                    message: format!("invalid Pauli letter '{c}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(letters)
    }
}

/// Real-weighted Pauli string.
#[derive(Clone, Debug)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite coefficient {coefficient}"
            )));
        }
        Ok(PauliTerm {
            coefficient,
            string,
        })
    }
}

/// Real linear combination of Pauli strings; duplicates merged, zeros dropped.
///
/// The empty sum is the zero operator. Term order is the insertion order of
/// first occurrence, which fixes the summation order used everywhere else.
#[derive(Clone, Debug, Default)]
pub struct PauliSum {
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero() -> Self {
        PauliSum { terms: Vec::new() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        let mut sum = PauliSum::zero();
        for t in terms {
            sum.add_term(t)?;
        }
        Ok(sum)
    }

    pub fn add_term(&mut self, term: PauliTerm) -> Result<()> {
        if let Some(n) = self.num_sites() {
            if n != term.string.len() {
                return Err(Error::InvalidOperand(format!(
                    "term on {} sites added to sum on {} sites",
                    term.string.len(),
                    n
                )));
            }
        }
        if !term.coefficient.is_finite() {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        if let Some(existing) = self.terms.iter_mut().find(|t| t.string == term.string) {
            existing.coefficient += term.coefficient;
            if existing.coefficient == 0.0 {
                self.terms.retain(|t| t.coefficient != 0.0);
            }
        } else if term.coefficient != 0.0 {
            self.terms.push(term);
        }
        Ok(())
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_sites(&self) -> Option<usize> {
        self.terms.first().map(|t| t.string.len())
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        PauliSum {
            terms: self
                .terms
                .iter()
                .filter(|t| t.coefficient * factor != 0.0)
                .map(|t| PauliTerm {
                    coefficient: t.coefficient * factor,
                    string: t.string.clone(),
                })
                .collect(),
        }
    }

    /// Symbolic product of two sums (used for H^2 in the second-order
    /// normalization expansion). Imaginary cross terms must cancel, which
    /// they do for products of a Hermitian sum with itself.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut acc: Vec<(PauliString, Complex64)> = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let (phase, prod) = a.string.multiply(&b.string)?;
                let c = phase.as_complex() * a.coefficient * b.coefficient;
                if let Some(entry) = acc.iter_mut().find(|(s, _)| *s == prod) {
                    entry.1 += c;
                } else {
                    acc.push((prod, c));
                }
            }
        }
        let mut out = PauliSum::zero();
        for (s, c) in acc {
            if c.im.abs() > 1e-12 * (1.0 + c.re.abs()) {
                return Err(Error::Numerical(format!(
                    "non-real coefficient {c} for {s} in Pauli sum product"
                )));
            }
            if c.re != 0.0 {
                out.add_term(PauliTerm::new(c.re, s)?)?;
            }
        }
        Ok(out)
    }
}

/// Periodic transverse-field Ising Hamiltonian:
/// `-J * sum_i X_i X_{i+1} - h_T * sum_i Z_i`, bond `(N-1, 0)` closing the ring.
///
/// Bond terms come first, ascending by site, then the field terms. For N = 2
/// the two bonds coincide and merge into a single term with coefficient -2J.
pub fn build_ising_hamiltonian(n: usize, coupling: f64, field: f64) -> Result<PauliSum> {
    if !(2..=MAX_SITES).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "site count {n} outside 2..={MAX_SITES}"
        )));
    }
    if !coupling.is_finite() || !field.is_finite() {
        return Err(Error::InvalidParameter("non-finite J or h_T".into()));
    }
    let mut h = PauliSum::zero();
    for i in 0..n {
        let mut letters = vec![Pauli::I; n];
        letters[i] = Pauli::X;
        letters[(i + 1) % n] = Pauli::X;
        h.add_term(PauliTerm::new(-coupling, PauliString::new(letters)?)?)?;
    }
    for i in 0..n {
        h.add_term(PauliTerm::new(
            -field,
            PauliString::single(n, i, Pauli::Z)?,
        )?)?;
    }
    Ok(h)
}

/// All 3^N strings over {X, Y, Z} in lexicographic order with X < Y < Z,
/// site 0 most significant.
pub fn operator_pool(n: usize) -> Result<Vec<PauliString>> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::InvalidParameter(format!(
            "site count {n} outside 1..={MAX_SITES}"
        )));
    }
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let total = 3usize.pow(n as u32);
    let mut pool = Vec::with_capacity(total);
    for code in 0..total {
        let mut ls = vec![Pauli::I; n];
        let mut rem = code;
        for site in (0..n).rev() {
            ls[site] = letters[rem % 3];
            rem /= 3;
        }
        pool.push(PauliString::new(ls)?);
    }
    Ok(pool)
}
