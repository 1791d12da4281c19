//! Small numeric helpers shared across modules.

/// Kahan compensated accumulator. Keeps long sums (pmf normalizations,
/// stop-loss suffix sums, Gini double sums) accurate to a few ulps
/// independent of term count.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub(crate) fn kahan_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}
