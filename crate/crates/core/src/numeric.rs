//! Small numeric kernels shared across modules.

/// Neumaier-compensated running sum.
///
/// Keeps a second accumulator for the low-order bits lost by each addition,
/// which matters for the alternating binomial sums in the slice-volume
/// formula and for long Monte-Carlo reductions.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(values);
    acc.value()
}

/// `n!` as an exact integer. Only valid for `n <= 20`.
pub fn factorial_u64(n: usize) -> u64 {
    assert!(n <= 20, "factorial overflows u64 beyond 20!");
    (1..=n as u64).product()
}

/// `n!` as a float; exact for the dimensions this crate accepts.
pub fn factorial(n: usize) -> f64 {
    factorial_u64(n) as f64
}

/// Binomial coefficient `C(n, k)`, exact in `u64` for `n <= 60`.
pub fn binomial_u64(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) as u64 / (i as u64 + 1);
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> f64 {
    binomial_u64(n, k) as f64
}

/// Mean and standard error (sample std / sqrt(n)) of `values`, reduced in
/// input order so the result does not depend on how the values were produced.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(values), 2.0);
        let naive: f64 = values.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn small_factorials_and_binomials() {
        assert_eq!(factorial_u64(0), 1);
        assert_eq!(factorial_u64(5), 120);
        assert_eq!(factorial_u64(12), 479_001_600);
        assert_eq!(binomial_u64(12, 6), 924);
        assert_eq!(binomial_u64(5, 0), 1);
        assert_eq!(binomial_u64(5, 7), 0);
        for n in 0..=20 {
            let row: u64 = (0..=n).map(|k| binomial_u64(n, k)).sum();
            assert_eq!(row, 1 << n);
        }
    }

    #[test]
    fn mean_and_se_of_constant_sequence() {
        let (m, se) = mean_and_std_err(&[0.25; 10]);
        assert_eq!(m, 0.25);
        assert_eq!(se, 0.0);
        let (m, se) = mean_and_std_err(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        // sample std = sqrt(2), se = sqrt(2)/sqrt(2) = 1
        assert!((se - 1.0).abs() < 1e-15);
    }
}
