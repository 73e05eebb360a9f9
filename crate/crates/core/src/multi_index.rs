//! Small multi-indices over the spatial components.

use std::fmt;

/// Largest supported number of process components.
pub const MAX_DIM: usize = 3;

/// `(i_1, ..., i_d)` with `d <= MAX_DIM`; unused slots stay zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dim: u8,
    orders: [u32; MAX_DIM],
}

impl MultiIndex {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} outside 1..={MAX_DIM}");
        MultiIndex { dim: dim as u8, orders: [0; MAX_DIM] }
    }

    pub fn from_slice(orders: &[u32]) -> Self {
        let mut m = Self::zeros(orders.len());
        m.orders[..orders.len()].copy_from_slice(orders);
        m
    }

    /// The unit vector `e_l` scaled by `order`.
    pub fn axis(dim: usize, l: usize, order: u32) -> Self {
        let mut m = Self::zeros(dim);
        m.orders[l] = order;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn get(&self, l: usize) -> u32 {
        self.orders[l]
    }

    pub fn with(mut self, l: usize, order: u32) -> Self {
        self.orders[l] = order;
        self
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.orders[..self.dim()]
    }

    pub fn total(&self) -> u32 {
        self.as_slice().iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for l in 0..MAX_DIM {
            out.orders[l] += other.orders[l];
        }
        out
    }

    /// Componentwise `self - other`, or `None` if some component would be negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for l in 0..MAX_DIM {
            out.orders[l] = self.orders[l].checked_sub(other.orders[l])?;
        }
        Some(out)
    }

    pub fn scale(&self, factor: u32) -> MultiIndex {
        let mut out = *self;
        for o in out.orders.iter_mut() {
            *o *= factor;
        }
        out
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        (0..MAX_DIM).all(|l| self.orders[l] <= other.orders[l])
    }

    /// `prod_l i_l!`.
    pub fn factorial(&self) -> f64 {
        self.as_slice().iter().map(|&i| factorial(i)).product()
    }

    /// All multi-indices of dimension `dim` with `lo <= |i| <= hi`, ordered by
    /// total degree and then lexicographically.
    pub fn with_total_between(dim: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in lo..=hi {
            let mut cur = Self::zeros(dim);
            fill_total(&mut cur, 0, total, &mut out);
        }
        out
    }

    /// All `j` with `0 <= j <= self` componentwise.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(self.dim())];
        for l in 0..self.dim() {
            out = out
                .into_iter()
                .flat_map(|m| (0..=self.orders[l]).map(move |v| m.with(l, v)))
                .collect();
        }
        out
    }
}

fn fill_total(cur: &mut MultiIndex, l: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if l + 1 == cur.dim() {
        cur.orders[l] = remaining;
        out.push(*cur);
        return;
    }
    for v in (0..=remaining).rev() {
        cur.orders[l] = v;
        fill_total(cur, l + 1, remaining - v, out);
    }
    cur.orders[l] = 0;
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.as_slice().iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}
