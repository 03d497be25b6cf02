//! Indexing of nondecreasing index tuples `i_1 ≤ … ≤ i_ℓ < n`.
//!
//! Tuples are stored in lexicographic order, so all tuples sharing the
//! leading index form one contiguous slice.

/// Number of nondecreasing length-`k` sequences over `n` values:
/// `C(n + k − 1, k)`.
pub fn multichoose(n: usize, k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    binomial((n + k - 1) as u128, k as u128)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexIndex {
    n: usize,
    order: usize,
}

impl SimplexIndex {
    pub fn new(n: usize, order: usize) -> Self {
        Self { n, order }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        multichoose(self.n, self.order) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of stored tuples whose leading index is `lead`.
    pub fn slice_len(&self, lead: usize) -> usize {
        if self.order == 0 {
            return 1;
        }
        multichoose(self.n - lead, self.order - 1) as usize
    }

    /// Offset of the first tuple with leading index `lead`.
    pub fn slice_start(&self, lead: usize) -> usize {
        if self.order == 0 || lead == 0 {
            return 0;
        }
        (multichoose(self.n, self.order) - multichoose(self.n - lead, self.order)) as usize
    }

    /// Lexicographic rank of a nondecreasing tuple.
    pub fn rank(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.order);
        debug_assert!(tuple.windows(2).all(|w| w[0] <= w[1]));
        let mut r: u128 = 0;
        let mut lo = 0usize;
        for (m, &i) in tuple.iter().enumerate() {
            let rem = self.order - m - 1;
            // Σ_{v=lo}^{i-1} multichoose(n − v, rem), by the hockey-stick identity
            r += multichoose(self.n - lo, rem + 1) - multichoose(self.n - i, rem + 1);
            lo = i;
        }
        r as usize
    }

    /// Advances `tuple` to its lexicographic successor; false at the end.
    pub fn advance(&self, tuple: &mut [usize]) -> bool {
        let last = self.n - 1;
        match tuple.iter().rposition(|&i| i < last) {
            Some(p) => {
                let v = tuple[p] + 1;
                for x in &mut tuple[p..] {
                    *x = v;
                }
                true
            }
            None => false,
        }
    }
}
