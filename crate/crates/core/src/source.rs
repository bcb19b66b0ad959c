//! Order-`r` binary Markov sources.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channel::low_mask;
use crate::linalg;
use crate::rng::Rng;
use crate::{Error, Result};

/// `P(X_n = 1 | X_{n-r}..X_{n-1})` for each of the `2^r` packed histories
/// (bit 0 = most recent input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovSource {
    order: usize,
    p_one: Vec<f64>,
}

impl MarkovSource {
    pub fn new(order: usize, p_one: Vec<f64>) -> Result<Self> {
        if order == 0 || order > 20 {
            return Err(Error::InvalidParameter(format!("source order {order} outside 1..=20")));
        }
        if p_one.len() != 1 << order {
            return Err(Error::InvalidParameter(format!(
                "order {order} needs {} probabilities, got {}",
                1usize << order,
                p_one.len()
            )));
        }
        if let Some(p) = p_one.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { order, p_one })
    }

    /// Memoryless Bernoulli(`p`) source written as an order-`order` chain.
    pub fn bernoulli(order: usize, p: f64) -> Result<Self> {
        Self::new(order, vec![p; 1 << order])
    }

    /// Member of the constrained family: emits a 1 with probability `a` after
    /// `order` zeros and never otherwise.
    pub fn constrained(order: usize, a: f64) -> Result<Self> {
        let mut p = vec![0.0; 1 << order];
        p[0] = a;
        Self::new(order, p)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_histories(&self) -> usize {
        self.p_one.len()
    }

    pub fn p_one(&self, history: usize) -> f64 {
        self.p_one[history & low_mask(self.order)]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p_one
    }

    pub fn transition_prob(&self, history: usize, x: u8) -> f64 {
        let p = self.p_one(history);
        if x == 1 {
            p
        } else {
            1.0 - p
        }
    }

    #[inline]
    pub fn next_history(&self, history: usize, x: u8) -> usize {
        ((history << 1) | usize::from(x)) & low_mask(self.order)
    }

    /// True if every history puts zero mass on 1 except the all-zero one.
    pub fn is_constrained(&self) -> bool {
        self.p_one[1..].iter().all(|&p| p == 0.0)
    }

    /// History-to-history transition matrix.
    pub fn history_chain(&self) -> Vec<Vec<f64>> {
        let n = self.num_histories();
        let mut m = vec![vec![0.0; n]; n];
        for (h, row) in m.iter_mut().enumerate() {
            for x in [0u8, 1] {
                row[self.next_history(h, x)] += self.transition_prob(h, x);
            }
        }
        m
    }

    /// Stationary distribution over histories (zero on transient histories).
    pub fn stationary(&self) -> Result<Vec<f64>> {
        linalg::stationary_distribution(&self.history_chain())
    }

    /// Re-expresses the source over a longer history window; the extra
    /// bits are ignored.
    pub fn lift(&self, order: usize) -> Result<Self> {
        if order < self.order {
            return Err(Error::InvalidParameter("cannot lift to a smaller order".into()));
        }
        Self::new(order, (0..1usize << order).map(|h| self.p_one(h)).collect())
    }

    /// Draws `len` symbols starting from packed history `start`.
    pub fn sample_from(&self, start: usize, len: usize, rng: &mut Rng) -> Vec<u8> {
        let mut h = start & low_mask(self.order);
        (0..len)
            .map(|_| {
                let x = u8::from(rng.random::<f64>() < self.p_one[h]);
                h = self.next_history(h, x);
                x
            })
            .collect()
    }

    /// Draws an initial history from `pi`.
    pub fn sample_history(pi: &[f64], rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (h, &p) in pi.iter().enumerate() {
            acc += p;
            if u < acc {
                return h;
            }
        }
        pi.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Text format: `# order=<r>` then `<bitstring>,<prob>` per history.
    /// Bitstrings list the history oldest first.
    pub fn to_text(&self) -> String {
        let mut out = format!("# order={}\n", self.order);
        for (h, p) in self.p_one.iter().enumerate() {
            let bits: String = (0..self.order)
                .rev()
                .map(|k| if (h >> k) & 1 == 1 { '1' } else { '0' })
                .collect();
            let _ = writeln!(out, "{bits},{p}");
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(path, 1, "empty source file"))?;
        let order: usize = header
            .trim()
            .strip_prefix('#')
            .and_then(|h| h.trim().strip_prefix("order="))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::format(path, 1, "expected `# order=<r>` header"))?;
        if order == 0 || order > 20 {
            return Err(Error::format(path, 1, format!("unsupported order {order}")));
        }
        let mut p = vec![None; 1 << order];
        for (idx, line) in lines {
            let lineno = idx + 1;
            let (bits, prob) = line
                .trim()
                .split_once(',')
                .ok_or_else(|| Error::format(path, lineno, "expected `<bitstring>,<prob>`"))?;
            if bits.len() != order || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::format(path, lineno, format!("bad history `{bits}`")));
            }
            let h = usize::from_str_radix(bits, 2).expect("validated bitstring");
            let prob: f64 = prob
                .trim()
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("bad probability `{prob}`")))?;
            if p[h].replace(prob).is_some() {
                return Err(Error::format(path, lineno, format!("duplicate history `{bits}`")));
            }
        }
        let p: Option<Vec<f64>> = p.into_iter().collect();
        let p = p.ok_or_else(|| Error::format(path, 1, "missing histories"))?;
        Self::new(order, p).map_err(|e| Error::format(path, 1, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn validation() {
        assert!(MarkovSource::new(1, vec![0.5]).is_err());
        assert!(MarkovSource::new(1, vec![0.5, 1.2]).is_err());
        assert!(MarkovSource::new(0, vec![]).is_err());
    }

    #[test]
    fn text_layout() {
        let s = MarkovSource::new(2, vec![0.25, 0.0, 0.5, 1.0]).unwrap();
        assert_eq!(s.to_text(), "# order=2\n00,0.25\n01,0\n10,0.5\n11,1\n");
    }

    #[test]
    fn parse_errors() {
        let p = Path::new("s.txt");
        assert!(MarkovSource::from_text("order=1\n0,0.5\n1,0.5\n", p).is_err());
        assert!(MarkovSource::from_text("# order=1\n0,0.5\n", p).is_err());
        assert!(MarkovSource::from_text("# order=1\n0,0.5\n0,0.5\n", p).is_err());
        assert!(MarkovSource::from_text("# order=1\n0,0.5\n2,0.5\n", p).is_err());
        assert!(MarkovSource::from_text("# order=1\n0,x\n1,0.5\n", p).is_err());
    }

    #[test]
    fn constrained_samples_keep_gaps() {
        let s = MarkovSource::constrained(3, 0.6).unwrap();
        let x = s.sample_from(0, 5000, &mut rng::stream(5, 0));
        let ones: Vec<usize> = x.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
        assert!(ones.windows(2).all(|w| w[1] - w[0] > 3));
    }

    proptest! {
        #[test]
        fn text_round_trip(order in 1usize..5, seed in any::<u64>()) {
            let mut r = rng::stream(seed, 0);
            let p = (0..1usize << order).map(|_| rand::Rng::random::<f64>(&mut r)).collect();
            let s = MarkovSource::new(order, p).unwrap();
            let back = MarkovSource::from_text(&s.to_text(), Path::new("x")).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
