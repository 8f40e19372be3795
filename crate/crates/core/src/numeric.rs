//! Small numerical kernels shared by the other modules: compensated
//! summation, golden-section maximization and binomial tails.

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.value()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search.
///
/// Returns `(argmax, max)`. Both endpoints are also evaluated, so a monotone
/// function returns the better endpoint exactly.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let f_lo = f(a);
    let f_hi = f(b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mid = 0.5 * (a + b);
    let f_mid = f(mid);
    let mut best = (mid, f_mid);
    for cand in [(c, fc), (d, fd), (lo.min(hi), f_lo), (lo.max(hi), f_hi)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// `ln C(n, k)`. Exact products for `n <= 500`, a compensated sum of
/// logarithms beyond.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if n > 500 {
        let mut acc = NeumaierSum::new();
        for j in 0..k {
            acc.add(((n - j) as f64).ln());
            acc.add(-((j + 1) as f64).ln());
        }
        return acc.value();
    }
    let mut c = 1.0_f64;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c.ln()
}

fn ln_pmf(n: u64, k: u64, ln_p: f64, ln_q: f64) -> f64 {
    let a = if k == 0 { 0.0 } else { k as f64 * ln_p };
    let b = if k == n { 0.0 } else { (n - k) as f64 * ln_q };
    ln_choose(n, k) + a + b
}

/// Binomial pmf `P(Bin(n, p) = k)` with `q = 1 - p` passed explicitly so
/// callers can supply an accurately computed complement.
pub fn binomial_pmf(n: u64, k: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    ln_pmf(n, k, p.ln(), q.ln()).exp()
}

/// `ln P(Bin(n, p) = k)` for `k` in `lo..=hi`. The term nearest the mode is
/// evaluated directly and the others by the ratio recurrence.
fn ln_pmf_range(n: u64, lo: u64, hi: u64, p: f64, q: f64) -> Vec<f64> {
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let mode = ((n + 1) as f64 * p).floor().min(n as f64) as u64;
    let anchor = mode.clamp(lo, hi);
    let mut out = vec![0.0; (hi - lo + 1) as usize];
    let at = |k: u64| (k - lo) as usize;
    out[at(anchor)] = ln_pmf(n, anchor, ln_p, ln_q);
    let step = ln_p - ln_q;
    for k in anchor..hi {
        out[at(k + 1)] = out[at(k)] + (((n - k) as f64) / ((k + 1) as f64)).ln() + step;
    }
    for k in (lo + 1..=anchor).rev() {
        out[at(k - 1)] = out[at(k)] + ((k as f64) / ((n - k + 1) as f64)).ln() - step;
    }
    if p == 0.0 || q == 0.0 {
        // degenerate laws: the recurrence would mix infinities
        for k in lo..=hi {
            out[at(k)] = ln_pmf(n, k, ln_p, ln_q);
        }
    }
    out
}

/// `P(lo <= Bin(n, p) <= hi)`, summing the pmf terms from the smallest up.
pub fn binomial_range(n: u64, lo: u64, hi: u64, p: f64, q: f64) -> f64 {
    if lo > hi || lo > n {
        return 0.0;
    }
    let hi = hi.min(n);
    let mut terms: Vec<f64> = ln_pmf_range(n, lo, hi, p, q).into_iter().map(f64::exp).collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    neumaier_sum(terms)
}

/// `P(Bin(n, p) >= k)`.
pub fn binomial_upper_tail(n: u64, k: u64, p: f64, q: f64) -> f64 {
    binomial_range(n, k, n, p, q)
}

/// `P(Bin(n, p) <= k)`.
pub fn binomial_lower_tail(n: u64, k: u64, p: f64, q: f64) -> f64 {
    binomial_range(n, 0, k, p, q)
}

/// `ln P(lo <= Bin(n, p) <= hi)` by log-sum-exp, usable where the tail
/// underflows in linear space.
pub fn ln_binomial_range(n: u64, lo: u64, hi: u64, p: f64, q: f64) -> f64 {
    if lo > hi || lo > n {
        return f64::NEG_INFINITY;
    }
    let hi = hi.min(n);
    let terms = ln_pmf_range(n, lo, hi, p, q);
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    let mut small: Vec<f64> = terms.iter().map(|t| (t - top).exp()).collect();
    small.sort_by(|a, b| a.total_cmp(b));
    top + neumaier_sum(small).ln()
}

/// `n` points spaced evenly in log scale over `[lo, hi]`, endpoints included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > 0.0 && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
