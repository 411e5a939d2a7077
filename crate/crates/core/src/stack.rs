//! Flat storage for per-body (or per-joint) derivative stacks.

/// `count` stacks of `depth` derivative orders each, stored contiguously.
///
/// Entry `(i, k)` is the `k`-th time derivative of the quantity owned by
/// body or joint `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stacks<T> {
    depth: usize,
    data: Vec<T>,
}

impl<T: Copy> Stacks<T> {
    pub fn new(count: usize, depth: usize, fill: T) -> Self {
        Self {
            depth,
            data: vec![fill; count * depth],
        }
    }

    /// Builds from one `Vec` per owner; every row must have the same length.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let depth = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != depth) {
            return None;
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Some(Self { depth, data })
    }

    pub fn count(&self) -> usize {
        if self.depth == 0 {
            0
        } else {
            self.data.len() / self.depth
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> T {
        debug_assert!(k < self.depth);
        self.data[i * self.depth + k]
    }

    #[inline]
    pub fn at(&self, i: usize, k: usize) -> &T {
        debug_assert!(k < self.depth);
        &self.data[i * self.depth + k]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, k: usize) -> &mut T {
        debug_assert!(k < self.depth);
        &mut self.data[i * self.depth + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, value: T) {
        *self.at_mut(i, k) = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.depth..(i + 1) * self.depth]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.depth..(i + 1) * self.depth]
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.depth.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }
}
