//! Gauss-Legendre and left Gauss-Radau rules on `[0, 1]`, orthonormal shifted
//! Legendre polynomials and the logarithmic moments used by the product rule.
//!
//! Rules are computed from the Jacobi matrix of the underlying orthogonal
//! family: eigenvalues by implicit QL, then polished with Newton steps on the
//! three-term recurrence. Weights come from the Christoffel function, which
//! keeps small end weights accurate to full relative precision.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest admissible rule order.
pub const MAX_RULE_ORDER: usize = 4096;
/// Largest admissible number of logarithmic moments.
pub const MAX_MOMENTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Legendre,
    RadauLeft,
}

/// Nodes and weights of an interpolatory rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    /// Order parameter: number of free nodes.
    pub m: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Recurrence coefficients of an orthonormal family on `[0, 1]`:
/// `sqrt(b[n+1]) p_{n+1} = (x - a[n]) p_n - sqrt(b[n]) p_{n-1}`.
struct JacobiMatrix {
    diag: Vec<f64>,
    /// `offdiag[n] = sqrt(b[n+1])`, couples `p_n` and `p_{n+1}`.
    offdiag: Vec<f64>,
    mu0: f64,
}

impl JacobiMatrix {
    /// Legendre weight 1 on [0,1].
    fn legendre(m: usize) -> Self {
        let diag = vec![0.5; m];
        let offdiag = (1..=m)
            .map(|n| {
                let n = n as f64;
                0.5 * n / (4.0 * n * n - 1.0).sqrt()
            })
            .collect();
        Self {
            diag,
            offdiag,
            mu0: 1.0,
        }
    }

    /// Weight `x` on [0,1], i.e. the Jacobi weight `(1+y)` on [-1,1] mapped by
    /// `x = (1+y)/2`.
    fn weight_x(m: usize) -> Self {
        // alpha = 0, beta = 1 on [-1,1].
        let diag = (0..m)
            .map(|n| {
                let n = n as f64;
                let a = 1.0 / ((2.0 * n + 1.0) * (2.0 * n + 3.0));
                0.5 * (1.0 + a)
            })
            .collect();
        let offdiag = (1..=m)
            .map(|n| {
                let n = n as f64;
                let s = 2.0 * n + 1.0;
                let b = 4.0 * n * n * (n + 1.0) * (n + 1.0) / (s * s * (s + 1.0) * (s - 1.0));
                0.5 * b.sqrt()
            })
            .collect();
        Self {
            diag,
            offdiag,
            mu0: 0.5,
        }
    }

    /// Values `p_0(x), ..., p_{m-1}(x)` plus `p_m(x)` and `p_m'(x)`.
    fn eval_top(&self, m: usize, x: f64) -> (f64, f64) {
        let mut p_prev = 0.0;
        let mut p = 1.0 / self.mu0.sqrt();
        let mut dp_prev = 0.0;
        let mut dp = 0.0;
        for n in 0..m {
            let b_n = if n == 0 { 0.0 } else { self.offdiag[n - 1] };
            let b_next = self.offdiag[n];
            let p_next = ((x - self.diag[n]) * p - b_n * p_prev) / b_next;
            let dp_next = (p + (x - self.diag[n]) * dp - b_n * dp_prev) / b_next;
            p_prev = p;
            p = p_next;
            dp_prev = dp;
            dp = dp_next;
        }
        (p, dp)
    }

    fn christoffel_weight(&self, m: usize, x: f64) -> f64 {
        let mut p_prev = 0.0;
        let mut p = 1.0 / self.mu0.sqrt();
        let mut sum = p * p;
        for n in 0..m.saturating_sub(1) {
            let b_n = if n == 0 { 0.0 } else { self.offdiag[n - 1] };
            let p_next = ((x - self.diag[n]) * p - b_n * p_prev) / self.offdiag[n];
            p_prev = p;
            p = p_next;
            sum += p * p;
        }
        1.0 / sum
    }

    /// Gauss nodes and weights of order `m` for this family.
    fn gauss(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut d = self.diag[..m].to_vec();
        let mut e = self.offdiag[..m - 1].to_vec();
        tridiagonal_eigenvalues(&mut d, &mut e);
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nodes: Vec<f64> = d
            .into_iter()
            .map(|mut x| {
                for _ in 0..3 {
                    let (p, dp) = self.eval_top(m, x);
                    if dp == 0.0 || !dp.is_finite() {
                        break;
                    }
                    let step = p / dp;
                    x -= step;
                    if step.abs() <= 1e-17 {
                        break;
                    }
                }
                x
            })
            .collect();
        let weights = nodes
            .iter()
            .map(|&x| self.christoffel_weight(m, x))
            .collect();
        (nodes, weights)
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson
/// shifts. `e[k]` couples rows `k` and `k+1`; on exit `d` holds eigenvalues.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut Vec<f64>) {
    let n = d.len();
    if n <= 1 {
        return;
    }
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    e.pop();
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 || m > MAX_RULE_ORDER {
        return Err(Error::Parameter(format!(
            "rule order {m} outside 1..={MAX_RULE_ORDER}"
        )));
    }
    Ok(())
}

/// Gauss-Legendre rule with `m` nodes on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> Result<QuadratureRule> {
    check_order(m)?;
    let jm = JacobiMatrix::legendre(m);
    let (mut nodes, mut weights) = jm.gauss(m);
    // Enforce the reflection symmetry about 1/2.
    for k in 0..m / 2 {
        let j = m - 1 - k;
        let x = 0.5 * (nodes[k] + (1.0 - nodes[j]));
        let w = 0.5 * (weights[k] + weights[j]);
        nodes[k] = x;
        nodes[j] = 1.0 - x;
        weights[k] = w;
        weights[j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.5;
    }
    Ok(QuadratureRule {
        kind: RuleKind::Legendre,
        m,
        nodes,
        weights,
    })
}

/// Left Gauss-Radau rule on `[0, 1]`: node `0` plus the `m` Gauss nodes for
/// the weight `x`, exact for polynomials of degree `2m`.
pub fn gauss_radau_left(m: usize) -> Result<QuadratureRule> {
    check_order(m)?;
    let jm = JacobiMatrix::weight_x(m);
    let (inner_nodes, inner_weights) = jm.gauss(m);
    let mut nodes = Vec::with_capacity(m + 1);
    let mut weights = Vec::with_capacity(m + 1);
    let mp1 = (m + 1) as f64;
    nodes.push(0.0);
    weights.push(1.0 / (mp1 * mp1));
    for (x, w) in inner_nodes.into_iter().zip(inner_weights) {
        nodes.push(x);
        weights.push(w / x);
    }
    Ok(QuadratureRule {
        kind: RuleKind::RadauLeft,
        m,
        nodes,
        weights,
    })
}

type RuleTable = Mutex<HashMap<(RuleKind, usize), Arc<QuadratureRule>>>;

fn rule_table() -> &'static RuleTable {
    static TABLE: OnceLock<RuleTable> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached rule lookup shared across threads.
pub fn cached_rule(kind: RuleKind, m: usize) -> Result<Arc<QuadratureRule>> {
    if let Some(rule) = rule_table().lock().unwrap().get(&(kind, m)) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(match kind {
        RuleKind::Legendre => gauss_legendre(m)?,
        RuleKind::RadauLeft => gauss_radau_left(m)?,
    });
    rule_table()
        .lock()
        .unwrap()
        .entry((kind, m))
        .or_insert(rule.clone());
    Ok(rule)
}

/// `p_nu(x) = sqrt(2 nu + 1) P_nu(2x - 1)`, orthonormal on `[0, 1]`.
pub fn legendre_orthonormal(nu: usize, x: f64) -> Result<f64> {
    if nu > MAX_RULE_ORDER {
        return Err(Error::Parameter(format!(
            "Legendre degree {nu} exceeds {MAX_RULE_ORDER}"
        )));
    }
    let y = 2.0 * x - 1.0;
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for n in 0..nu {
        let n = n as f64;
        let next = ((2.0 * n + 1.0) * y * p - n * p_prev) / (n + 1.0);
        p_prev = p;
        p = next;
    }
    Ok(((2 * nu + 1) as f64).sqrt() * p)
}

/// All of `p_0(x), ..., p_{count-1}(x)`.
pub fn legendre_orthonormal_all(count: usize, x: f64) -> Vec<f64> {
    let y = 2.0 * x - 1.0;
    let mut out = Vec::with_capacity(count);
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for n in 0..count {
        out.push(((2 * n + 1) as f64).sqrt() * p);
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * y * p - nf * p_prev) / (nf + 1.0);
        p_prev = p;
        p = next;
    }
    out
}

/// Logarithmic moments `c_nu(s) = int_0^1 p_nu(z) log|z - s| dz` for
/// `nu = 0..count`.
///
/// Interior points use Legendre functions of the second kind; the endpoints
/// use the closed forms `int_0^1 p_nu(z) log z dz`.
pub fn log_moments(s: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || count > MAX_MOMENTS {
        return Err(Error::Parameter(format!(
            "moment count {count} outside 1..={MAX_MOMENTS}"
        )));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Parameter(format!("moment point {s} outside [0,1]")));
    }
    let y = 2.0 * s - 1.0;
    let mut out = Vec::with_capacity(count);
    if 1.0 - y.abs() <= 0.0 {
        // s = 0: int p_nu log z = sqrt(2nu+1) (-1)^(nu+1) / (nu (nu+1));
        // s = 1 follows from the reflection p_nu(1-z) = (-1)^nu p_nu(z).
        out.push(-1.0);
        for nu in 1..count {
            let nf = nu as f64;
            let base = (2.0 * nf + 1.0).sqrt() / (nf * (nf + 1.0));
            let sign = if y < 0.0 && nu % 2 == 0 {
                -1.0
            } else if y < 0.0 {
                1.0
            } else {
                -1.0
            };
            out.push(sign * base);
        }
        return Ok(out);
    }
    let ln2 = std::f64::consts::LN_2;
    let (one_m, one_p) = (1.0 - y, 1.0 + y);
    out.push(0.5 * (one_m * one_m.ln() + one_p * one_p.ln() - 2.0) - ln2);
    if count == 1 {
        return Ok(out);
    }
    // Q_0 .. Q_count by forward recurrence.
    let mut q = Vec::with_capacity(count + 1);
    q.push(0.5 * (one_p / one_m).ln());
    q.push(y * q[0] - 1.0);
    for n in 2..=count {
        let nf = n as f64;
        let next = ((2.0 * nf - 1.0) * y * q[n - 1] - (nf - 1.0) * q[n - 2]) / nf;
        q.push(next);
    }
    for nu in 1..count {
        let two_nu_p1 = (2 * nu + 1) as f64;
        out.push(two_nu_p1.sqrt() * (q[nu + 1] - q[nu - 1]) / two_nu_p1);
    }
    Ok(out)
}
