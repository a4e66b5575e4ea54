//! Alphabet, points, words and finite-depth functions on the one-sided shifts.
//!
//! Both shift spaces are handled through coordinate sequences `c_1 c_2 ...`.
//! On the future side `c_i = x_i`; on the past side `c_i = y_i`, the i-th
//! most recent symbol. The shift drops `c_1` on either side, and the one-step
//! preimages prepend a symbol at coordinate 1, so the Ruelle and Koopman
//! operators have the same code on both sides.
//!
//! Tables are indexed lexicographically with coordinate 1 most significant:
//! `index = sum_i c_i d^(k - i)`.

use std::fmt;

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};

/// Which one-sided shift a function or point lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `x = (x_1 x_2 ...)`.
    Future,
    /// `y = (... y_2 y_1)`.
    Past,
}

/// Lexicographic index of a coordinate slice.
#[inline]
pub fn word_index(d: usize, coords: &[usize]) -> usize {
    coords.iter().fold(0, |acc, &c| acc * d + c)
}

/// Inverse of [`word_index`] for words of length `k`.
pub fn word_of_index(d: usize, k: usize, mut index: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

/// Weights `a_0 .. a_{d-1}` of the a priori measure on the alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct AprioriMeasure {
    weights: Vec<f64>,
}

impl AprioriMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidMeasure(format!("alphabet size must be at least 2, got {}", weights.len())));
        }
        if let Some((j, a)) = weights.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight a_{j} = {a} is not strictly positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1 within 1e-12")));
        }
        Ok(AprioriMeasure { weights })
    }

    pub fn uniform(d: usize) -> Self {
        AprioriMeasure { weights: vec![1.0 / d as f64; d] }
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }
}

/// A point given by a finite prefix followed by a constant tail.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Point {
    side: Side,
    prefix: Vec<usize>,
    tail: usize,
}

impl Point {
    pub fn new(side: Side, prefix: Vec<usize>, tail: usize) -> Self {
        Point { side, prefix, tail }
    }

    /// The point `a^infinity`.
    pub fn constant(side: Side, symbol: usize) -> Self {
        Point { side, prefix: Vec::new(), tail: symbol }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn tail(&self) -> usize {
        self.tail
    }

    /// Coordinate `i`, 1-based.
    #[inline]
    pub fn coord(&self, i: usize) -> usize {
        debug_assert!(i >= 1);
        self.prefix.get(i - 1).copied().unwrap_or(self.tail)
    }

    /// The first `n` coordinates.
    pub fn coords(&self, n: usize) -> Vec<usize> {
        (1..=n).map(|i| self.coord(i)).collect()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self.prefix.iter().chain(std::iter::once(&self.tail)).find(|&&s| s >= d) {
            Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, d }),
            None => Ok(()),
        }
    }

    /// Drops coordinate 1 (`sigma` on the future side, `sigma*` on the past side).
    pub fn shift(&self) -> Point {
        let prefix = if self.prefix.is_empty() { Vec::new() } else { self.prefix[1..].to_vec() };
        Point { side: self.side, prefix, tail: self.tail }
    }

    /// Prepends `a` as the new coordinate 1: `a x` on the future side, `y a`
    /// on the past side.
    pub fn push_front(&self, a: usize) -> Point {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(a);
        prefix.extend_from_slice(&self.prefix);
        Point { side: self.side, prefix, tail: self.tail }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}({})^inf", self.side, self.prefix, self.tail)
    }
}

/// A finite word, stored in coordinate order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    side: Side,
    symbols: Vec<usize>,
}

impl Word {
    /// Future word `x_1 .. x_n`.
    pub fn future(symbols: Vec<usize>) -> Self {
        Word { side: Side::Future, symbols }
    }

    /// Past word given most recent first, `y_1 .. y_n`.
    pub fn past(symbols: Vec<usize>) -> Self {
        Word { side: Side::Past, symbols }
    }

    /// Past word obtained by appending `w_1 .. w_n` in time order, so that
    /// `w_n` becomes the most recent symbol.
    pub fn past_appended(w: &[usize]) -> Self {
        Word { side: Side::Past, symbols: w.iter().rev().copied().collect() }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Concatenation with a point: `w ++ x` on the future side, `y' w` on the past side.
    pub fn then(&self, point: &Point) -> Result<Point> {
        if self.side != point.side {
            return Err(Error::SideMismatch("word and point live on different sides"));
        }
        let mut prefix = self.symbols.clone();
        prefix.extend_from_slice(&point.prefix);
        Ok(Point { side: self.side, prefix, tail: point.tail })
    }
}

/// A complex function depending on the first `depth` coordinates only.
#[derive(Clone, PartialEq)]
pub struct CylinderFunction {
    side: Side,
    d: usize,
    depth: usize,
    table: Vec<Cdd>,
}

impl fmt::Debug for CylinderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderFunction")
            .field("side", &self.side)
            .field("d", &self.d)
            .field("depth", &self.depth)
            .field("table", &self.table)
            .finish()
    }
}

impl CylinderFunction {
    pub fn new(side: Side, d: usize, depth: usize, table: Vec<Cdd>) -> Result<Self> {
        let expected = d.pow(depth as u32);
        if table.len() != expected {
            return Err(Error::TableSize { expected, got: table.len() });
        }
        Ok(CylinderFunction { side, d, depth, table })
    }

    pub fn constant(side: Side, d: usize, c: Cdd) -> Self {
        CylinderFunction { side, d, depth: 0, table: vec![c] }
    }

    pub fn from_fn(side: Side, d: usize, depth: usize, mut f: impl FnMut(&[usize]) -> Cdd) -> Self {
        let table = (0..d.pow(depth as u32)).map(|i| f(&word_of_index(d, depth, i))).collect();
        CylinderFunction { side, d, depth, table }
    }

    /// Builds a table from real and imaginary parts in lexicographic order.
    /// An empty `im` means a real function.
    pub fn from_parts(side: Side, d: usize, depth: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        let expected = d.pow(depth as u32);
        if re.len() != expected {
            return Err(Error::TableSize { expected, got: re.len() });
        }
        if !im.is_empty() && im.len() != expected {
            return Err(Error::TableSize { expected, got: im.len() });
        }
        let table = (0..expected).map(|i| Cdd::from_parts(re[i], im.get(i).copied().unwrap_or(0.0))).collect();
        Ok(CylinderFunction { side, d, depth, table })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn table(&self) -> &[Cdd] {
        &self.table
    }

    /// Value read from the first `depth` entries of `coords`.
    #[inline]
    pub fn value(&self, coords: &[usize]) -> Cdd {
        self.table[word_index(self.d, &coords[..self.depth])]
    }

    /// Exact evaluation at a point.
    pub fn evaluate(&self, pt: &Point) -> Result<Cdd> {
        if pt.side != self.side {
            return Err(Error::SideMismatch("function and point live on different sides"));
        }
        pt.validate(self.d)?;
        Ok(self.value(&pt.coords(self.depth)))
    }

    /// The same function tabulated at a larger depth.
    pub fn lift(&self, depth: usize) -> Self {
        assert!(depth >= self.depth, "cannot lift depth {} down to {}", self.depth, depth);
        let block = self.d.pow((depth - self.depth) as u32);
        let table = (0..self.d.pow(depth as u32)).map(|i| self.table[i / block]).collect();
        CylinderFunction { side: self.side, d: self.d, depth, table }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.side != other.side {
            return Err(Error::SideMismatch("operands live on different sides"));
        }
        if self.d != other.d {
            return Err(Error::InvalidMeasure(format!("alphabet sizes {} and {} differ", self.d, other.d)));
        }
        Ok(())
    }

    /// Pointwise combination at the common depth.
    pub fn zip_with(&self, other: &Self, op: impl Fn(Cdd, Cdd) -> Cdd) -> Result<Self> {
        self.check_compatible(other)?;
        let depth = self.depth.max(other.depth);
        let (a, b) = (self.lift(depth), other.lift(depth));
        let table = a.table.iter().zip(&b.table).map(|(&x, &y)| op(x, y)).collect();
        Ok(CylinderFunction { side: self.side, d: self.d, depth, table })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn map(&self, f: impl Fn(Cdd) -> Cdd) -> Self {
        CylinderFunction {
            side: self.side,
            d: self.d,
            depth: self.depth,
            table: self.table.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: Cdd) -> Self {
        self.map(|v| v * c)
    }

    pub fn exp(&self) -> Self {
        self.map(Cdd::exp)
    }

    pub fn real_part(&self) -> Self {
        self.map(|v| Cdd::from_real(v.re))
    }

    pub fn is_real(&self) -> bool {
        self.table.iter().all(|v| v.is_real())
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest and smallest real part.
    pub fn real_range(&self) -> (Dd, Dd) {
        let mut hi = self.table[0].re;
        let mut lo = hi;
        for v in &self.table[1..] {
            if v.re > hi {
                hi = v.re;
            }
            if v.re < lo {
                lo = v.re;
            }
        }
        (hi, lo)
    }

    /// `var_n(f)`: largest difference between values on points agreeing on
    /// the first `n` coordinates. `var_0` is the global oscillation.
    pub fn variation(&self, n: usize) -> f64 {
        if n >= self.depth {
            return 0.0;
        }
        let block = self.d.pow((self.depth - n) as u32);
        self.table.chunks(block).map(max_pairwise).fold(0.0, f64::max)
    }

    /// Exact theta-Hoelder seminorm `max_n var_n(f) / theta^n`, with `n`
    /// starting at 0 when `include_n0` is set and at 1 otherwise.
    pub fn holder_seminorm(&self, theta: f64, include_n0: bool) -> Result<f64> {
        check_theta(theta)?;
        let start = if include_n0 { 0 } else { 1 };
        Ok((start..self.depth).map(|n| self.variation(n) / theta.powi(n as i32)).fold(0.0, f64::max))
    }

    /// `f^n(w ++ tail) = sum_{j < n} f(shift^j (w ++ tail))`.
    pub fn birkhoff_sum(&self, w: &Word, tail: &Point) -> Result<Cdd> {
        let pt = w.then(tail)?;
        self.birkhoff_at(&pt, w.len())
    }

    /// `sum_{j < n} f(shift^j pt)`.
    pub fn birkhoff_at(&self, pt: &Point, n: usize) -> Result<Cdd> {
        if pt.side != self.side {
            return Err(Error::SideMismatch("function and point live on different sides"));
        }
        pt.validate(self.d)?;
        let coords = pt.coords(n + self.depth);
        Ok((0..n).map(|j| self.value(&coords[j..])).sum())
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTheta(theta))
    }
}

fn max_pairwise(values: &[Cdd]) -> f64 {
    let mut best = 0.0f64;
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// A function `W(y | x)` of the first `p` past and first `q` future coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    d: usize,
    p: usize,
    q: usize,
    table: Vec<Cdd>,
}

impl KernelTable {
    pub fn new(d: usize, p: usize, q: usize, table: Vec<Cdd>) -> Result<Self> {
        let expected = d.pow((p + q) as u32);
        if table.len() != expected {
            return Err(Error::TableSize { expected, got: table.len() });
        }
        Ok(KernelTable { d, p, q, table })
    }

    /// The kernel `W = 0`.
    pub fn zero(d: usize) -> Self {
        KernelTable { d, p: 0, q: 0, table: vec![Cdd::ZERO] }
    }

    pub fn from_fn(d: usize, p: usize, q: usize, mut f: impl FnMut(&[usize], &[usize]) -> Cdd) -> Self {
        let mut table = Vec::with_capacity(d.pow((p + q) as u32));
        for iy in 0..d.pow(p as u32) {
            let y = word_of_index(d, p, iy);
            for ix in 0..d.pow(q as u32) {
                table.push(f(&y, &word_of_index(d, q, ix)));
            }
        }
        KernelTable { d, p, q, table }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn past_depth(&self) -> usize {
        self.p
    }

    pub fn future_depth(&self) -> usize {
        self.q
    }

    pub fn table(&self) -> &[Cdd] {
        &self.table
    }

    /// `W(y | x)` read from coordinate slices of length at least `p` and `q`.
    #[inline]
    pub fn value(&self, y: &[usize], x: &[usize]) -> Cdd {
        let iy = word_index(self.d, &y[..self.p]);
        let ix = word_index(self.d, &x[..self.q]);
        self.table[iy * self.d.pow(self.q as u32) + ix]
    }

    pub fn eval(&self, y: &Point, x: &Point) -> Result<Cdd> {
        if y.side() != Side::Past || x.side() != Side::Future {
            return Err(Error::SideMismatch("kernel takes a past point and a future point"));
        }
        y.validate(self.d)?;
        x.validate(self.d)?;
        Ok(self.value(&y.coords(self.p), &x.coords(self.q)))
    }

    /// `y -> W(y | x)` as a past cylinder function of depth `p`.
    pub fn partial_past(&self, x: &Point) -> Result<CylinderFunction> {
        if x.side() != Side::Future {
            return Err(Error::SideMismatch("kernel section needs a future point"));
        }
        x.validate(self.d)?;
        let xc = x.coords(self.q);
        Ok(CylinderFunction::from_fn(Side::Past, self.d, self.p, |y| self.value(y, &xc)))
    }

    /// `x -> W(y | x)` as a future cylinder function of depth `q`.
    pub fn partial_future(&self, y: &Point) -> Result<CylinderFunction> {
        if y.side() != Side::Past {
            return Err(Error::SideMismatch("kernel section needs a past point"));
        }
        y.validate(self.d)?;
        let yc = y.coords(self.p);
        Ok(CylinderFunction::from_fn(Side::Future, self.d, self.q, |x| self.value(&yc, x)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max Re W - min Re W`.
    pub fn real_oscillation(&self) -> f64 {
        let (mut hi, mut lo) = (self.table[0].re, self.table[0].re);
        for v in &self.table {
            if v.re > hi {
                hi = v.re;
            }
            if v.re < lo {
                lo = v.re;
            }
        }
        (hi - lo).to_f64()
    }

    /// `sup |Re W|`.
    pub fn real_sup_norm(&self) -> f64 {
        self.table.iter().map(|v| v.re.abs().to_f64()).fold(0.0, f64::max)
    }

    /// Two-sided variation: largest difference between `W(y|x)` and
    /// `W(y'|x')` over `y ~n y'` and `x ~n x'`.
    pub fn variation(&self, n: usize) -> f64 {
        if n >= self.p && n >= self.q {
            return 0.0;
        }
        let (np, nq) = (n.min(self.p), n.min(self.q));
        let mut groups: Vec<Vec<Cdd>> = vec![Vec::new(); self.d.pow((np + nq) as u32)];
        let (bp, bq) = (self.d.pow((self.p - np) as u32), self.d.pow((self.q - nq) as u32));
        let cols = self.d.pow(self.q as u32);
        for (i, &v) in self.table.iter().enumerate() {
            let (iy, ix) = (i / cols, i % cols);
            let key = (iy / bp) * self.d.pow(nq as u32) + ix / bq;
            groups[key].push(v);
        }
        groups.iter().map(|g| max_pairwise(g)).fold(0.0, f64::max)
    }

    /// Exact two-sided theta-Hoelder seminorm.
    pub fn holder_seminorm(&self, theta: f64, include_n0: bool) -> Result<f64> {
        check_theta(theta)?;
        let start = if include_n0 { 0 } else { 1 };
        let top = self.p.max(self.q);
        Ok((start..top).map(|n| self.variation(n) / theta.powi(n as i32)).fold(0.0, f64::max))
    }
}
