//! Sum-product variable elimination over discrete variables.
//!
//! All exact computations in this crate reduce to a sum over a product of
//! small nonnegative tables: unary weights, pairwise weights and occasional
//! constants. Variables are eliminated greedily, always picking the one whose
//! elimination creates the smallest intermediate table. Tables carry their own
//! log-scale so nothing overflows, and every entry of a new table is computed
//! independently (in parallel) in a fixed order, so results do not depend on
//! the number of threads.

use rayon::prelude::*;

use crate::ExactError;

/// A nonnegative table over a set of variables, stored row-major in `scope`
/// order (last variable fastest) and multiplied by `exp(log_scale)`.
#[derive(Clone, Debug)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
    pub log_scale: f64,
}

impl Factor {
    /// Normalizes the table to maximum 1, moving the scale into `log_scale`.
    fn rescale(&mut self) {
        let max = self.table.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 && max.is_finite() {
            for x in &mut self.table {
                *x /= max;
            }
            self.log_scale += max.ln();
        } else if max == 0.0 {
            self.log_scale = f64::NEG_INFINITY;
        }
    }

    /// `log` of the total mass of the table.
    pub fn log_total(&self) -> f64 {
        let s: f64 = self.table.iter().sum();
        self.log_scale + s.ln()
    }
}

/// A factor graph awaiting elimination.
#[derive(Clone, Debug)]
pub struct Elimination {
    domains: Vec<usize>,
    factors: Vec<Factor>,
    log_constant: f64,
    budget: usize,
}

/// Entries per parallel work item.
const CHUNK: usize = 1 << 12;

impl Elimination {
    /// Variables `0..domains.len()` with the given domain sizes. `budget`
    /// bounds the number of entries of any intermediate table.
    pub fn new(domains: Vec<usize>, budget: usize) -> Self {
        Elimination { domains, factors: Vec::new(), log_constant: 0.0, budget }
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn domain(&self, v: usize) -> usize {
        self.domains[v]
    }

    pub fn add_log_constant(&mut self, c: f64) {
        self.log_constant += c;
    }

    pub fn add_unary(&mut self, v: usize, table: Vec<f64>) {
        assert_eq!(table.len(), self.domains[v]);
        let mut f = Factor { scope: vec![v], table, log_scale: 0.0 };
        f.rescale();
        self.factors.push(f);
    }

    /// `table[i * d_b + j]` is the weight of `(x_a, x_b) = (i, j)`.
    pub fn add_pairwise(&mut self, a: usize, b: usize, table: Vec<f64>) {
        assert_ne!(a, b);
        assert_eq!(table.len(), self.domains[a] * self.domains[b]);
        let mut f = Factor { scope: vec![a, b], table, log_scale: 0.0 };
        f.rescale();
        self.factors.push(f);
    }

    /// Sums out every variable not in `query` and returns the joint table
    /// over `query` (in that order), including all constants. With an empty
    /// query the result is the scalar partition function.
    pub fn run(mut self, query: &[usize]) -> Result<Factor, ExactError> {
        let n = self.domains.len();
        let mut keep = vec![false; n];
        for &q in query {
            keep[q] = true;
        }
        let mut alive: Vec<bool> = (0..n).map(|v| !keep[v]).collect();
        let mut remaining = alive.iter().filter(|&&a| a).count();
        while remaining > 0 {
            let v = self.pick(&alive)?;
            alive[v] = false;
            remaining -= 1;
            self.eliminate(v)?;
        }
        self.collect(query)
    }

    /// The live variable whose elimination yields the smallest new table.
    fn pick(&self, alive: &[bool]) -> Result<usize, ExactError> {
        let mut best: Option<(usize, usize)> = None;
        let mut mark = vec![usize::MAX; self.domains.len()];
        for v in (0..self.domains.len()).filter(|&v| alive[v]) {
            let mut size = 1usize;
            for f in self.factors.iter().filter(|f| f.scope.contains(&v)) {
                for &w in &f.scope {
                    if w != v && mark[w] != v {
                        mark[w] = v;
                        size = size.saturating_mul(self.domains[w]);
                    }
                }
            }
            if best.is_none_or(|(s, _)| size < s) {
                best = Some((size, v));
            }
        }
        let (size, v) = best.expect("called with a live variable");
        let work = size.saturating_mul(self.domains[v]);
        if work > self.budget {
            return Err(ExactError::BudgetExceeded { needed: work, budget: self.budget });
        }
        Ok(v)
    }

    fn eliminate(&mut self, v: usize) -> Result<(), ExactError> {
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            std::mem::take(&mut self.factors).into_iter().partition(|f| f.scope.contains(&v));
        self.factors = rest;
        let dv = self.domains[v];
        if touching.is_empty() {
            self.log_constant += (dv as f64).ln();
            return Ok(());
        }
        let mut scope: Vec<usize> = touching.iter().flat_map(|f| f.scope.iter().copied()).filter(|&w| w != v).collect();
        scope.sort_unstable();
        scope.dedup();
        let mut f = product_sum(&touching, &scope, Some(v), &self.domains);
        f.rescale();
        if f.scope.is_empty() {
            self.log_constant += f.log_total();
        } else {
            self.factors.push(f);
        }
        Ok(())
    }

    fn collect(self, query: &[usize]) -> Result<Factor, ExactError> {
        let mut f = product_sum(&self.factors, query, None, &self.domains);
        f.log_scale += self.log_constant;
        f.rescale();
        Ok(f)
    }
}

/// `Σ_{x_v} Π_f f(...)` over the assignments of `scope` (or the plain product
/// when `v` is `None`).
fn product_sum(factors: &[Factor], scope: &[usize], v: Option<usize>, domains: &[usize]) -> Factor {
    let dims: Vec<usize> = scope.iter().map(|&w| domains[w]).collect();
    let size: usize = dims.iter().product();
    // For each factor: its stride for each output variable, and for `v`.
    let strides: Vec<(Vec<usize>, usize)> = factors
        .iter()
        .map(|f| {
            let mut own = vec![0usize; f.scope.len()];
            let mut s = 1;
            for i in (0..f.scope.len()).rev() {
                own[i] = s;
                s *= domains[f.scope[i]];
            }
            let per_out = scope
                .iter()
                .map(|w| f.scope.iter().position(|x| x == w).map_or(0, |i| own[i]))
                .collect();
            let sv = v.and_then(|v| f.scope.iter().position(|&x| x == v)).map_or(0, |i| own[i]);
            (per_out, sv)
        })
        .collect();
    let dv = v.map_or(1, |v| domains[v]);
    let log_scale: f64 = factors.iter().map(|f| f.log_scale).sum();
    let mut table = vec![0.0; size];
    table.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
        let start = c * CHUNK;
        let mut digits = vec![0usize; dims.len()];
        let mut rem = start;
        for i in (0..dims.len()).rev() {
            digits[i] = rem % dims[i];
            rem /= dims[i];
        }
        let mut base: Vec<usize> = strides
            .iter()
            .map(|(per_out, _)| digits.iter().zip(per_out).map(|(d, s)| d * s).sum())
            .collect();
        for slot in out.iter_mut() {
            let mut acc = 0.0;
            for x in 0..dv {
                let mut p = 1.0;
                for (k, f) in factors.iter().enumerate() {
                    p *= f.table[base[k] + x * strides[k].1];
                }
                acc += p;
            }
            *slot = acc;
            // Odometer step over the output assignment.
            for i in (0..dims.len()).rev() {
                digits[i] += 1;
                for (k, (per_out, _)) in strides.iter().enumerate() {
                    base[k] += per_out[i];
                }
                if digits[i] < dims[i] {
                    break;
                }
                for (k, (per_out, _)) in strides.iter().enumerate() {
                    base[k] -= per_out[i] * dims[i];
                }
                digits[i] = 0;
            }
        }
    });
    Factor { scope: scope.to_vec(), table, log_scale }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force sum over all assignments of a small factor graph.
    fn brute(domains: &[usize], unary: &[(usize, Vec<f64>)], pair: &[(usize, usize, Vec<f64>)]) -> f64 {
        let total: usize = domains.iter().product();
        let mut z = 0.0;
        for mut idx in 0..total {
            let mut x = vec![0; domains.len()];
            for i in (0..domains.len()).rev() {
                x[i] = idx % domains[i];
                idx /= domains[i];
            }
            let mut w = 1.0;
            for (v, t) in unary {
                w *= t[x[*v]];
            }
            for (a, b, t) in pair {
                w *= t[x[*a] * domains[*b] + x[*b]];
            }
            z += w;
        }
        z
    }

    #[test]
    fn matches_brute_force_on_a_cycle_with_chords() {
        let domains = vec![3, 2, 4, 3, 2];
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng % 1000) as f64 / 1000.0 + 0.01
        };
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (1, 3)];
        let pair: Vec<(usize, usize, Vec<f64>)> = edges
            .iter()
            .map(|&(a, b)| (a, b, (0..domains[a] * domains[b]).map(|_| next()).collect()))
            .collect();
        let unary: Vec<(usize, Vec<f64>)> = (0..5).map(|v| (v, (0..domains[v]).map(|_| next()).collect())).collect();
        let mut e = Elimination::new(domains.clone(), 1 << 20);
        for (v, t) in &unary {
            e.add_unary(*v, t.clone());
        }
        for (a, b, t) in &pair {
            e.add_pairwise(*a, *b, t.clone());
        }
        e.add_log_constant(0.5);
        let z = e.clone().run(&[]).unwrap().log_total();
        let want = brute(&domains, &unary, &pair).ln() + 0.5;
        assert!((z - want).abs() < 1e-12);

        // Marginal of (3, 1): compare against brute force with pinned values.
        let m = e.run(&[3, 1]).unwrap();
        for x3 in 0..3 {
            for x1 in 0..2 {
                let mut un = unary.clone();
                un.push((3, (0..3).map(|i| if i == x3 { 1.0 } else { 0.0 }).collect()));
                un.push((1, (0..2).map(|i| if i == x1 { 1.0 } else { 0.0 }).collect()));
                let want = brute(&domains, &un, &pair).ln() + 0.5;
                let got = m.log_scale + m.table[x3 * 2 + x1].ln();
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isolated_variables_count_their_domain() {
        let e = Elimination::new(vec![5, 7], 100);
        assert!((e.run(&[]).unwrap().log_total() - 35f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        let mut e = Elimination::new(vec![10; 4], 500);
        for a in 0..4 {
            for b in a + 1..4 {
                e.add_pairwise(a, b, vec![1.0; 100]);
            }
        }
        assert!(matches!(e.run(&[]), Err(ExactError::BudgetExceeded { .. })));
    }
}
