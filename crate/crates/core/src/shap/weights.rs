/// Shapley weights for a single leaf of the per-point tree game.
///
/// When a leaf is reached by a path that needs the features in `X` (size
/// `a`) to come from the query and those in `R` (size `b`) to come from the
/// background point, each feature of `X` receives `value * (a-1)! b! / (a+b)!`
/// and each feature of `R` receives `-value * a! (b-1)! / (a+b)!`.
#[derive(Debug, Clone)]
pub struct ShapleyWeights {
    max: usize,
    /// `pos[a * (max + 1) + b]` for `a >= 1`.
    pos: Vec<f64>,
    /// `neg[a * (max + 1) + b]` for `b >= 1`.
    neg: Vec<f64>,
}

/// Above this many players factorials leave the exact u64 range.
const EXACT_LIMIT: usize = 18;

impl ShapleyWeights {
    /// Table covering every `a + b <= max_players`.
    pub fn new(max_players: usize) -> Self {
        let max = max_players;
        let stride = max + 1;
        let mut pos = vec![0.0; stride * stride];
        let mut neg = vec![0.0; stride * stride];
        for a in 0..=max {
            for b in 0..=(max - a) {
                if a >= 1 {
                    pos[a * stride + b] = weight(a - 1, b, a + b);
                }
                if b >= 1 {
                    neg[a * stride + b] = weight(a, b - 1, a + b);
                }
            }
        }
        Self { max, pos, neg }
    }

    pub fn max_players(&self) -> usize {
        self.max
    }

    #[inline]
    pub fn query_side(&self, a: usize, b: usize) -> f64 {
        self.pos[a * (self.max + 1) + b]
    }

    #[inline]
    pub fn background_side(&self, a: usize, b: usize) -> f64 {
        self.neg[a * (self.max + 1) + b]
    }
}

/// `s! t! / n!`, the Shapley coefficient of a coalition of size `s` among
/// `n` players with `t = n - s - 1`.
fn weight(s: usize, t: usize, n: usize) -> f64 {
    if n <= EXACT_LIMIT {
        let fact = |k: usize| (1..=k as u64).product::<u64>();
        // n! / (s! t!) = n * C(n-1, s) is an integer; divide once.
        let denom = fact(n) / (fact(s) * fact(t));
        1.0 / denom as f64
    } else {
        (ln_fact(s) + ln_fact(t) - ln_fact(n)).exp()
    }
}

fn ln_fact(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}
