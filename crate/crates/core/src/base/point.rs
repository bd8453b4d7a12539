use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{BaseError, BaseKind, CirclePoint, StepLaw};

/// A checkpoint is kept at every multiple of this many steps while streaming.
pub const CHECKPOINT_SPACING: u64 = 1 << 20;

const EVEN_BITS: u64 = 0x5555_5555_5555_5555;
const STEPS_PER_WORD: u64 = 32;

/// One sampled base point `y` together with the cached Birkhoff sums `f_n(y)`.
///
/// The coordinate stream is a pure function of `(seed, id, index)`: ChaCha8 keyed by the
/// seed, with the sample id as stream number. For the canonical walk each 64-bit word
/// yields 32 steps, step `j` being `bit(2j) − bit(2j+1)`. Any other law spends one word
/// per step. `offset` shifts the stream, so the point with offset `k` is `R^k y`.
#[derive(Clone, Debug)]
pub struct BasePoint {
    kind: Arc<BaseKind>,
    seed: u64,
    id: u64,
    offset: u64,
    origin: CirclePoint,
    checkpoints: Vec<(u64, i64)>,
    position: u64,
    sum: i64,
    rng: ChaCha8Rng,
    thresholds: Vec<(u64, i64)>,
}

pub fn sample_point(kind: Arc<BaseKind>, seed: u64, id: u64) -> BasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let origin = match &*kind {
        BaseKind::Rotation { .. } => {
            let hi = rng.next_u64() as u128;
            let lo = rng.next_u64() as u128;
            CirclePoint(hi << 64 | lo)
        }
        BaseKind::Walk(_) => CirclePoint(0),
    };
    let thresholds = match &*kind {
        BaseKind::Walk(law) if *law != StepLaw::canonical() => law.word_thresholds(),
        _ => Vec::new(),
    };
    BasePoint { kind, seed, id, offset: 0, origin, checkpoints: vec![(0, 0)], position: 0, sum: 0, rng, thresholds }
}

impl BasePoint {
    pub fn kind(&self) -> &Arc<BaseKind> {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Starting circle position for the rotation base; `R^offset` applied.
    pub fn circle_position(&self) -> Option<CirclePoint> {
        match &*self.kind {
            BaseKind::Rotation { alpha, .. } => Some(self.origin.add_multiple(*alpha, self.offset)),
            BaseKind::Walk(_) => None,
        }
    }

    pub fn checkpoints(&self) -> &[(u64, i64)] {
        &self.checkpoints
    }

    /// Furthest time streamed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// The point `R^n y`, with a fresh checkpoint table.
    pub fn shifted(&self, n: u64) -> BasePoint {
        BasePoint { offset: self.offset + n, checkpoints: vec![(0, 0)], position: 0, sum: 0, ..self.clone() }
    }

    /// `f_n` for each requested `n`. Streams forward from the furthest position, or
    /// replays from the nearest earlier checkpoint when `n` lies behind it.
    pub fn birkhoff_at(&mut self, times: &[u64]) -> Result<Vec<i64>, BaseError> {
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BaseError::TimesNotIncreasing);
        }
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            out.push(self.birkhoff_one(t));
        }
        Ok(out)
    }

    /// `g_n = 2 f_n`.
    pub fn g_at(&mut self, times: &[u64]) -> Result<Vec<i64>, BaseError> {
        Ok(self.birkhoff_at(times)?.into_iter().map(|v| 2 * v).collect())
    }

    fn birkhoff_one(&mut self, t: u64) -> i64 {
        if t >= self.position {
            while self.position < t {
                let next_mark = (self.position / CHECKPOINT_SPACING + 1) * CHECKPOINT_SPACING;
                let end = next_mark.min(t);
                self.sum += self.range_sum(self.position, end);
                self.position = end;
                self.record(end, self.sum);
            }
            return self.sum;
        }
        let idx = self.checkpoints.partition_point(|&(time, _)| time <= t) - 1;
        let (start, base) = self.checkpoints[idx];
        if start == t {
            return base;
        }
        let v = base + self.range_sum(start, t);
        self.record(t, v);
        v
    }

    fn record(&mut self, t: u64, v: i64) {
        match self.checkpoints.binary_search_by_key(&t, |&(time, _)| time) {
            Ok(_) => {}
            Err(i) => self.checkpoints.insert(i, (t, v)),
        }
    }

    /// `f(R^k y)` for `k` in `[from, from + count)`.
    pub fn steps(&mut self, from: u64, count: u64) -> Vec<i64> {
        let mut out = Vec::with_capacity(count as usize);
        self.visit_steps(from, count, |_, s| out.push(s));
        out
    }

    /// Calls `visit(n, f_n)` for `n = 0, 1, ..., count − 1`.
    pub fn visit_sums(&mut self, count: u64, mut visit: impl FnMut(u64, i64)) {
        if count == 0 {
            return;
        }
        let mut acc = 0i64;
        visit(0, 0);
        self.visit_steps(0, count - 1, |k, s| {
            acc += s;
            visit(k + 1, acc);
        });
    }

    fn visit_steps(&mut self, from: u64, count: u64, mut visit: impl FnMut(u64, i64)) {
        let kind = Arc::clone(&self.kind);
        match &*kind {
            BaseKind::Walk(law) if *law == StepLaw::canonical() => {
                let start = self.offset + from;
                let mut abs = start;
                let end = start + count;
                while abs < end {
                    let word_idx = abs / STEPS_PER_WORD;
                    self.rng.set_word_pos(2 * word_idx as u128);
                    let w = self.rng.next_u64();
                    let mut j = abs % STEPS_PER_WORD;
                    while j < STEPS_PER_WORD && abs < end {
                        let s = ((w >> (2 * j)) & 1) as i64 - ((w >> (2 * j + 1)) & 1) as i64;
                        visit(abs - start + from, s);
                        abs += 1;
                        j += 1;
                    }
                }
            }
            BaseKind::Walk(_) => {
                let start = self.offset + from;
                if count > 0 {
                    self.rng.set_word_pos(2 * start as u128);
                }
                for k in 0..count {
                    let w = self.rng.next_u64();
                    visit(from + k, self.lookup(w));
                }
            }
            BaseKind::Rotation { alpha, step } => {
                let mut y = self.origin.add_multiple(*alpha, self.offset + from);
                for k in 0..count {
                    visit(from + k, step.eval(y));
                    y = y.add(*alpha);
                }
            }
        }
    }

    fn lookup(&self, w: u64) -> i64 {
        let i = self.thresholds.partition_point(|&(t, _)| t <= w);
        self.thresholds[i.min(self.thresholds.len() - 1)].1
    }

    /// `Σ_{k=from}^{to-1} f(R^k y)`.
    fn range_sum(&mut self, from: u64, to: u64) -> i64 {
        if from >= to {
            return 0;
        }
        let kind = Arc::clone(&self.kind);
        match &*kind {
            BaseKind::Walk(law) if *law == StepLaw::canonical() => {
                let (a, b) = (self.offset + from, self.offset + to);
                let first = a / STEPS_PER_WORD;
                let last = (b - 1) / STEPS_PER_WORD;
                self.rng.set_word_pos(2 * first as u128);
                let mut total = 0i64;
                for word in first..=last {
                    let mut w = self.rng.next_u64();
                    let lo = if word == first { a % STEPS_PER_WORD } else { 0 };
                    let hi = if word == last { (b - 1) % STEPS_PER_WORD + 1 } else { STEPS_PER_WORD };
                    if hi - lo < STEPS_PER_WORD {
                        w &= ((1u64 << (2 * (hi - lo))) - 1) << (2 * lo);
                    }
                    total += (w & EVEN_BITS).count_ones() as i64 - (w & !EVEN_BITS).count_ones() as i64;
                }
                total
            }
            _ => {
                let mut total = 0;
                self.visit_steps(from, to - from, |_, s| total += s);
                total
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk() -> Arc<BaseKind> {
        BaseKind::canonical_walk().into_arc()
    }

    #[test]
    fn same_arguments_same_stream() {
        let mut a = sample_point(walk(), 42, 0);
        let mut b = sample_point(walk(), 42, 0);
        assert_eq!(a.birkhoff_at(&[100]).unwrap(), b.birkhoff_at(&[100]).unwrap());
        assert_eq!(a.birkhoff_at(&[0]).unwrap(), vec![0]);
    }

    #[test]
    fn sums_match_resummed_steps() {
        let mut p = sample_point(walk(), 9, 3);
        let times = [1, 5, 31, 32, 33, 64, 1000, 100_000];
        let f = p.birkhoff_at(&times).unwrap();
        assert!((-1..=1).contains(&f[0]));
        let steps = sample_point(walk(), 9, 3).steps(0, 100_000);
        for (t, v) in times.iter().zip(&f) {
            assert_eq!(steps[..*t as usize].iter().sum::<i64>(), *v, "t = {t}");
        }
    }

    #[test]
    fn replay_from_checkpoint_agrees() {
        let mut p = sample_point(walk(), 1, 1);
        let far = p.birkhoff_at(&[3 * CHECKPOINT_SPACING + 17]).unwrap()[0];
        let mid = p.birkhoff_at(&[CHECKPOINT_SPACING + 5]).unwrap()[0];
        let mut q = sample_point(walk(), 1, 1);
        assert_eq!(q.birkhoff_at(&[CHECKPOINT_SPACING + 5, 3 * CHECKPOINT_SPACING + 17]).unwrap(), vec![mid, far]);
        assert!(p.checkpoints().windows(2).all(|w| w[0].0 < w[1].0));
        assert!(p.birkhoff_at(&[5, 5]).is_err());
    }

    #[test]
    fn shifted_point_is_tail_of_stream() {
        let mut p = sample_point(walk(), 5, 2);
        let f = p.birkhoff_at(&[77, 77 + 500]).unwrap();
        let mut z = p.shifted(77);
        assert_eq!(z.birkhoff_at(&[500]).unwrap()[0], f[1] - f[0]);
        let mut r = sample_point(BaseKind::golden_rotation().into_arc(), 5, 2);
        let fr = r.birkhoff_at(&[10, 30]).unwrap();
        assert_eq!(r.shifted(10).birkhoff_at(&[20]).unwrap()[0], fr[1] - fr[0]);
    }

    #[test]
    fn rotation_two_step_sum() {
        let kind = BaseKind::golden_rotation().into_arc();
        let mut p = sample_point(kind.clone(), 7, 0);
        let f2 = p.birkhoff_at(&[2]).unwrap()[0];
        let BaseKind::Rotation { alpha, step } = &*kind else { unreachable!() };
        let y = p.circle_position().unwrap();
        assert_eq!(f2, step.eval(y) + step.eval(y.add(*alpha)));
        assert!([-2, 0, 2].contains(&f2));
    }

    #[test]
    fn general_law_walk_streams() {
        let kind: BaseKind = "walk:-2:1,0:2,2:1".parse().unwrap();
        let mut p = sample_point(kind.into_arc(), 3, 3);
        let f = p.birkhoff_at(&[1000]).unwrap()[0];
        let steps = p.steps(0, 1000);
        assert!(steps.iter().all(|s| [-2, 0, 2].contains(s)));
        assert_eq!(steps.iter().sum::<i64>(), f);
    }

    #[test]
    fn visit_sums_matches_birkhoff() {
        let mut p = sample_point(walk(), 11, 4);
        let mut seen = Vec::new();
        p.visit_sums(200, |n, v| seen.push((n, v)));
        let times: Vec<u64> = (0..200).collect();
        let f = sample_point(walk(), 11, 4).birkhoff_at(&times).unwrap();
        assert_eq!(seen.iter().map(|x| x.1).collect::<Vec<_>>(), f);
    }
}
