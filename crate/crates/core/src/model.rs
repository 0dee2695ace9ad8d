//! Finite-alphabet source/side-information pair processes.
//!
//! A [`PairModel`] is an order-`k` Markov kernel on pair symbols
//! `s = x * |Y| + y`. Histories are the last `k` pair symbols written in base
//! `|X||Y|` with the most recent symbol as the least significant digit, so
//! appending a symbol is `h' = (h mod P^(k-1)) * P + s`. Order 0 is the
//! memoryless case with a single (empty) history.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tolerance on kernel row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Maximum L1 residual of the stationary fixed point.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;
/// Largest history chain we are willing to solve.
pub const MAX_STATES: usize = 1_000_000;
/// Above this size the stationary law comes from power iteration instead of
/// a dense LU solve.
const DENSE_SOLVE_LIMIT: usize = 2048;
/// Tolerance for deciding that the Y-marginal kernel ignores the x-history.
const MARGINAL_TOLERANCE: f64 = 1e-12;

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub x_alphabet: usize,
    pub y_alphabet: usize,
    pub order: usize,
    pub kernel: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<SymbolNames>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolNames {
    #[serde(default)]
    pub x: Vec<String>,
    #[serde(default)]
    pub y: Vec<String>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    size: usize,
    names: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidModel("alphabet size must be at least 1".into()));
        }
        Ok(Alphabet { size, names: None })
    }

    pub fn with_names(size: usize, names: Vec<String>) -> Result<Self> {
        if names.len() != size {
            return Err(Error::InvalidModel(format!(
                "{} names given for an alphabet of size {size}",
                names.len()
            )));
        }
        let mut alphabet = Alphabet::new(size)?;
        alphabet.names = Some(names);
        Ok(alphabet)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn name(&self, symbol: u32) -> String {
        match &self.names {
            Some(names) => names[symbol as usize].clone(),
            None => symbol.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Memoryless,
    Markov,
}

/// Which of the Markov sufficient conditions for the second-order
/// asymptotics a model is known to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionCase {
    /// All transition probabilities are positive.
    A,
    /// Pair and Y-marginal are both irreducible aperiodic order-k chains.
    B,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelValidity {
    pub irreducible: bool,
    pub aperiodic: bool,
    pub all_positive: bool,
    pub assumption_m_case: AssumptionCase,
}

/// Result of projecting a pair model onto its side-information coordinate.
#[derive(Debug, Clone)]
pub enum YMarginal {
    /// The Y process is itself Markov of the model's order. The returned
    /// model has a one-letter X alphabet and the Y kernel.
    Markov(Box<PairModel>),
    /// Y is a hidden-Markov process.
    NotMarkov,
}

/// A validated source/side-information pair model.
#[derive(Debug, Clone)]
pub struct PairModel {
    spec: ModelSpec,
    x: Alphabet,
    y: Alphabet,
    order: usize,
    pairs: usize,
    states: usize,
    kernel: Vec<f64>,
    kernel_cdf: Vec<f64>,
    stationary: Vec<f64>,
    stationary_cdf: Vec<f64>,
    irreducible: bool,
    hash: String,
}

impl PairModel {
    /// Validate `spec` and solve for its stationary history law.
    pub fn build(spec: ModelSpec) -> Result<Self> {
        let mut model = Self::validate(spec)?;
        let unreachable = model.non_communicating_states();
        if unreachable > 0 {
            return Err(Error::NotIrreducible {
                unreachable,
                states: model.states,
            });
        }
        model.irreducible = true;
        let stationary = model.solve_stationary()?;
        model.set_initial(stationary);
        Ok(model)
    }

    /// Build a model whose history chain need not be irreducible, starting
    /// from an explicit initial history law instead of a stationary one.
    pub fn build_with_initial(spec: ModelSpec, initial: Vec<f64>) -> Result<Self> {
        let mut model = Self::validate(spec)?;
        if initial.len() != model.states {
            return Err(Error::InvalidModel(format!(
                "initial law has {} entries, expected {}",
                initial.len(),
                model.states
            )));
        }
        let total: f64 = initial.iter().sum();
        if initial.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidModel("initial law is not a probability vector".into()));
        }
        model.irreducible = model.non_communicating_states() == 0;
        model.set_initial(initial);
        Ok(model)
    }

    fn validate(spec: ModelSpec) -> Result<Self> {
        let x = match spec.names.as_ref().filter(|n| !n.x.is_empty()) {
            Some(n) => Alphabet::with_names(spec.x_alphabet, n.x.clone())?,
            None => Alphabet::new(spec.x_alphabet)?,
        };
        let y = match spec.names.as_ref().filter(|n| !n.y.is_empty()) {
            Some(n) => Alphabet::with_names(spec.y_alphabet, n.y.clone())?,
            None => Alphabet::new(spec.y_alphabet)?,
        };
        let pairs = x.size * y.size;
        let states = checked_pow(pairs, spec.order)
            .filter(|&s| s <= MAX_STATES)
            .ok_or(Error::TooManyStates {
                states: checked_pow(pairs, spec.order).unwrap_or(usize::MAX),
                limit: MAX_STATES,
            })?;
        if spec.kernel.len() != states {
            return Err(Error::InvalidModel(format!(
                "kernel has {} rows, expected {states} = ({pairs})^{}",
                spec.kernel.len(),
                spec.order
            )));
        }
        let mut kernel = Vec::with_capacity(states * pairs);
        for (row, entries) in spec.kernel.iter().enumerate() {
            if entries.len() != pairs {
                return Err(Error::InvalidModel(format!(
                    "kernel row {row} has {} columns, expected {pairs}",
                    entries.len()
                )));
            }
            for (col, &value) in entries.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "kernel entry [{row}][{col}] is not finite"
                    )));
                }
                if value < 0.0 {
                    return Err(Error::NegativeProbability { row, col, value });
                }
            }
            let sum: f64 = entries.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row, sum });
            }
            kernel.extend_from_slice(entries);
        }
        let mut kernel_cdf = Vec::with_capacity(kernel.len());
        for row in kernel.chunks(pairs) {
            let mut acc = 0.0;
            for &p in row {
                acc += p;
                kernel_cdf.push(acc);
            }
        }
        let hash = model_hash(&spec);
        Ok(PairModel {
            order: spec.order,
            spec,
            x,
            y,
            pairs,
            states,
            kernel,
            kernel_cdf,
            stationary: Vec::new(),
            stationary_cdf: Vec::new(),
            irreducible: false,
            hash,
        })
    }

    fn set_initial(&mut self, law: Vec<f64>) {
        let mut acc = 0.0;
        self.stationary_cdf = law
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        self.stationary = law;
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Short stable fingerprint of the probabilistic content of the model.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn x_size(&self) -> usize {
        self.x.size
    }

    pub fn y_size(&self) -> usize {
        self.y.size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kind(&self) -> ModelKind {
        if self.order == 0 {
            ModelKind::Memoryless
        } else {
            ModelKind::Markov
        }
    }

    /// Number of pair symbols `|X||Y|`.
    pub fn pairs(&self) -> usize {
        self.pairs
    }

    /// Number of histories `(|X||Y|)^k`.
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    #[inline]
    pub fn pair_index(&self, x: u32, y: u32) -> usize {
        x as usize * self.y.size + y as usize
    }

    #[inline]
    pub fn split_pair(&self, s: usize) -> (u32, u32) {
        ((s / self.y.size) as u32, (s % self.y.size) as u32)
    }

    #[inline]
    pub fn kernel(&self, history: usize, s: usize) -> f64 {
        self.kernel[history * self.pairs + s]
    }

    #[inline]
    pub fn row(&self, history: usize) -> &[f64] {
        &self.kernel[history * self.pairs..(history + 1) * self.pairs]
    }

    #[inline]
    pub(crate) fn row_cdf(&self, history: usize) -> &[f64] {
        &self.kernel_cdf[history * self.pairs..(history + 1) * self.pairs]
    }

    pub(crate) fn stationary_cdf(&self) -> &[f64] {
        &self.stationary_cdf
    }

    /// Stationary law over histories (or the explicit initial law).
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// History reached from `history` after emitting pair symbol `s`.
    #[inline]
    pub fn shift(&self, history: usize, s: usize) -> usize {
        if self.order == 0 {
            0
        } else {
            (history % (self.states / self.pairs)) * self.pairs + s
        }
    }

    /// Pair symbols of a history, oldest first.
    pub fn history_symbols(&self, mut history: usize) -> Vec<usize> {
        let mut out = vec![0; self.order];
        for slot in out.iter_mut().rev() {
            *slot = history % self.pairs;
            history /= self.pairs;
        }
        out
    }

    /// Inverse of [`history_symbols`](Self::history_symbols).
    pub fn history_index(&self, symbols: &[usize]) -> usize {
        debug_assert_eq!(symbols.len(), self.order);
        symbols.iter().fold(0, |h, &s| h * self.pairs + s)
    }

    /// Stationary probability of each pair symbol.
    pub fn pair_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.pairs];
        for (h, &w) in self.stationary.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (s, &p) in self.row(h).iter().enumerate() {
                out[s] += w * p;
            }
        }
        out
    }

    /// Largest L1 deviation of the stored law from a fixed point.
    pub fn stationary_residual(&self) -> f64 {
        let next = self.push_forward(&self.stationary);
        next.iter().zip(&self.stationary).map(|(a, b)| (a - b).abs()).sum()
    }

    fn push_forward(&self, law: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.states];
        for (h, &w) in law.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (s, &p) in self.row(h).iter().enumerate() {
                next[self.shift(h, s)] += w * p;
            }
        }
        next
    }

    fn successors(&self, h: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(h)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(s, _)| self.shift(h, s))
    }

    /// Number of states that are not both reachable from and able to reach
    /// state 0.
    fn non_communicating_states(&self) -> usize {
        let forward = self.reachable_from_zero(false);
        let backward = self.reachable_from_zero(true);
        forward.iter().zip(&backward).filter(|(f, b)| !(**f && **b)).count()
    }

    fn reachable_from_zero(&self, reverse: bool) -> Vec<bool> {
        let mut adjacency: Vec<Vec<usize>> = Vec::new();
        if reverse {
            adjacency = vec![Vec::new(); self.states];
            for h in 0..self.states {
                for t in self.successors(h) {
                    adjacency[t].push(h);
                }
            }
        }
        let mut seen = vec![false; self.states];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            let next: Vec<usize> = if reverse {
                adjacency[u].clone()
            } else {
                self.successors(u).collect()
            };
            for v in next {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Period of the class containing state 0 (1 means aperiodic).
    fn period(&self) -> usize {
        let mut level = vec![usize::MAX; self.states];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        let mut g = 0usize;
        while let Some(u) = queue.pop_front() {
            for v in self.successors(u) {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    g = gcd(g, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
        g.max(1)
    }

    fn solve_stationary(&self) -> Result<Vec<f64>> {
        if self.states == 1 {
            return Ok(vec![1.0]);
        }
        if self.states <= DENSE_SOLVE_LIMIT {
            if let Some(pi) = self.dense_stationary() {
                if self.residual_of(&pi) <= STATIONARY_TOLERANCE {
                    return Ok(pi);
                }
            }
        }
        let pi = self.power_stationary();
        if self.residual_of(&pi) <= STATIONARY_TOLERANCE {
            Ok(pi)
        } else {
            Err(Error::InvalidModel("stationary iteration did not converge".into()))
        }
    }

    fn residual_of(&self, law: &[f64]) -> f64 {
        self.push_forward(law).iter().zip(law).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Solve `pi (T - I) = 0, sum(pi) = 1` with the last balance equation
    /// replaced by the normalization.
    fn dense_stationary(&self) -> Option<Vec<f64>> {
        let n = self.states;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for h in 0..n {
            for (s, &p) in self.row(h).iter().enumerate() {
                let t = self.shift(h, s);
                a[(t, h)] += p;
            }
            a[(h, h)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = a.lu().solve(&b)?;
        let mut pi: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = pi.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return None;
        }
        pi.iter_mut().for_each(|v| *v /= total);
        Some(pi)
    }

    fn power_stationary(&self) -> Vec<f64> {
        // Lazy chain (I + T) / 2 converges even when T is periodic.
        let mut pi = vec![1.0 / self.states as f64; self.states];
        for _ in 0..200_000 {
            let pushed = self.push_forward(&pi);
            let next: Vec<f64> = pushed.iter().zip(&pi).map(|(a, b)| 0.5 * (a + b)).collect();
            let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if change < 1e-13 {
                break;
            }
        }
        pi
    }

    /// Kernel of the Y process if it is Markov of order at most `k`.
    pub fn marginal_y_model(&self) -> Result<YMarginal> {
        let ay = self.y.size;
        let y_states = checked_pow(ay, self.order).expect("y states fit when pair states do");
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; y_states];
        for h in 0..self.states {
            let y_hist = self
                .history_symbols(h)
                .iter()
                .fold(0usize, |acc, &s| acc * ay + self.split_pair(s).1 as usize);
            let mut q = vec![0.0; ay];
            for (s, &p) in self.row(h).iter().enumerate() {
                q[self.split_pair(s).1 as usize] += p;
            }
            match &rows[y_hist] {
                None => rows[y_hist] = Some(q),
                Some(existing) => {
                    if existing.iter().zip(&q).any(|(a, b)| (a - b).abs() > MARGINAL_TOLERANCE) {
                        return Ok(YMarginal::NotMarkov);
                    }
                }
            }
        }
        let spec = ModelSpec {
            x_alphabet: 1,
            y_alphabet: ay,
            order: self.order,
            kernel: rows.into_iter().map(|r| r.expect("every y-history occurs")).collect(),
            names: self.spec.names.as_ref().map(|n| SymbolNames {
                x: Vec::new(),
                y: n.y.clone(),
            }),
        };
        Ok(YMarginal::Markov(Box::new(PairModel::build(spec)?)))
    }

    /// Irreducibility, aperiodicity and positivity of the history chain.
    pub fn check_validity(&self) -> ModelValidity {
        let all_positive = self.kernel.iter().all(|&p| p > 0.0);
        let irreducible = self.non_communicating_states() == 0;
        let aperiodic = irreducible && self.period() == 1;
        let assumption_m_case = if all_positive {
            AssumptionCase::A
        } else if irreducible && aperiodic {
            match self.marginal_y_model() {
                Ok(YMarginal::Markov(y)) if y.period() == 1 => AssumptionCase::B,
                _ => AssumptionCase::Unknown,
            }
        } else {
            AssumptionCase::Unknown
        };
        ModelValidity {
            irreducible,
            aperiodic,
            all_positive,
            assumption_m_case,
        }
    }
}

/// Free-function form of [`PairModel::build`].
pub fn build_model(spec: ModelSpec) -> Result<PairModel> {
    PairModel::build(spec)
}

pub fn check_validity(model: &PairModel) -> ModelValidity {
    model.check_validity()
}

pub fn marginal_y_model(model: &PairModel) -> Result<YMarginal> {
    model.marginal_y_model()
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn model_hash(spec: &ModelSpec) -> String {
    let canonical = ModelSpec {
        names: None,
        ..spec.clone()
    };
    let bytes = serde_json::to_vec(&canonical).expect("model spec serializes");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
