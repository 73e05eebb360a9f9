//! Integrands `f(t, x)` on `[0, T] x R^d` with exact partial derivatives of
//! every order the sums need.
//!
//! Three families are closed under differentiation: polynomials in `(t, x)`,
//! sinusoids `A sin(omega . x + nu t + phase)`, and polynomials times the
//! Gaussian factor `exp(-sum_l c_l x_l^2 / 2)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{MultiIndex, MAX_DIM};

pub const DEFAULT_MAX_ORDER: u32 = 12;

/// `coeff * t^t_pow * prod_l x_l^x_pow[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub t_pow: u32,
    pub x_pow: MultiIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    /// Merges like monomials and drops zero coefficients.
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::config(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let mut merged: BTreeMap<(u32, MultiIndex), f64> = BTreeMap::new();
        for m in terms {
            if m.x_pow.dim() != dim {
                return Err(Error::config(format!(
                    "monomial has {} spatial exponents, expected {dim}",
                    m.x_pow.dim()
                )));
            }
            if !m.coeff.is_finite() {
                return Err(Error::config("polynomial coefficients must be finite"));
            }
            *merged.entry((m.t_pow, m.x_pow)).or_insert(0.0) += m.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((t_pow, x_pow), coeff)| Monomial { coeff, t_pow, x_pow })
            .collect();
        Ok(Polynomial { dim, terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.x_pow.total()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Polynomial(Polynomial),
    Sinusoid { amplitude: f64, omega: Vec<f64>, nu: f64, phase: f64 },
    PolyGaussian { poly: Polynomial, decay: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    family: Family,
    dim: usize,
    max_order: u32,
}

/// One differentiation variable: time, or spatial component `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Time,
    Space(usize),
}

impl TestFunction {
    pub fn polynomial(poly: Polynomial) -> Self {
        let dim = poly.dim;
        TestFunction { family: Family::Polynomial(poly), dim, max_order: DEFAULT_MAX_ORDER }
    }

    pub fn sinusoid(amplitude: f64, omega: Vec<f64>, nu: f64, phase: f64) -> Result<Self> {
        let dim = omega.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::config(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if !(amplitude.is_finite() && nu.is_finite() && phase.is_finite() && omega.iter().all(|w| w.is_finite())) {
            return Err(Error::config("sinusoid parameters must be finite"));
        }
        Ok(TestFunction { family: Family::Sinusoid { amplitude, omega, nu, phase }, dim, max_order: DEFAULT_MAX_ORDER })
    }

    pub fn poly_gaussian(poly: Polynomial, decay: Vec<f64>) -> Result<Self> {
        if decay.len() != poly.dim {
            return Err(Error::config(format!("expected {} decay rates, got {}", poly.dim, decay.len())));
        }
        if decay.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::config("decay rates must be finite and nonnegative"));
        }
        let dim = poly.dim;
        Ok(TestFunction { family: Family::PolyGaussian { poly, decay }, dim, max_order: DEFAULT_MAX_ORDER })
    }

    /// `f(x) = x^2 / 2` in one dimension.
    pub fn half_square() -> Self {
        Self::monomial(0.5, &[2])
    }

    /// `coeff * prod_l x_l^pow[l]`.
    pub fn monomial(coeff: f64, pow: &[u32]) -> Self {
        let poly = Polynomial::new(
            pow.len(),
            vec![Monomial { coeff, t_pow: 0, x_pow: MultiIndex::from_slice(pow) }],
        )
        .expect("valid monomial");
        Self::polynomial(poly)
    }

    pub fn with_max_order(mut self, max_order: u32) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    /// Fails unless derivatives of total order `order` are available.
    pub fn require_order(&self, order: u32) -> Result<()> {
        if order > self.max_order {
            return Err(Error::capability(format!(
                "derivative of order {order} requested, test function supplies up to {}",
                self.max_order
            )));
        }
        Ok(())
    }

    /// `d_t^a0 d^a f(t, x)`.
    pub fn eval_partial(&self, a0: u32, a: &MultiIndex, t: f64, x: &[f64]) -> Result<f64> {
        if a.dim() != self.dim || x.len() != self.dim {
            return Err(Error::domain(format!(
                "test function has dimension {}, got multi-index {a} and point of length {}",
                self.dim,
                x.len()
            )));
        }
        self.require_order(a0 + a.total())?;
        Ok(self.partial(a0, a, t, x))
    }

    /// Applies the derivatives in `seq` (any order) and evaluates.
    pub fn eval_sequence(&self, seq: &[Variable], t: f64, x: &[f64]) -> Result<f64> {
        let mut a0 = 0;
        let mut a = MultiIndex::zeros(self.dim);
        for v in seq {
            match *v {
                Variable::Time => a0 += 1,
                Variable::Space(l) if l < self.dim => a = a.with(l, a.get(l) + 1),
                Variable::Space(l) => return Err(Error::domain(format!("no spatial component {l}"))),
            }
        }
        self.eval_partial(a0, &a, t, x)
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.partial(0, &MultiIndex::zeros(self.dim), t, x)
    }

    /// Unchecked form of [`eval_partial`](Self::eval_partial).
    pub(crate) fn partial(&self, a0: u32, a: &MultiIndex, t: f64, x: &[f64]) -> f64 {
        match &self.family {
            Family::Polynomial(poly) => poly
                .terms
                .iter()
                .map(|m| {
                    let mut v = m.coeff * falling_power(t, m.t_pow, a0);
                    for l in 0..self.dim {
                        if v == 0.0 {
                            break;
                        }
                        v *= falling_power(x[l], m.x_pow.get(l), a.get(l));
                    }
                    v
                })
                .sum(),
            Family::Sinusoid { amplitude, omega, nu, phase } => {
                let mut scale = *amplitude * nu.powi(a0 as i32);
                for l in 0..self.dim {
                    scale *= omega[l].powi(a.get(l) as i32);
                }
                let theta = omega.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + nu * t + phase;
                let shifted = match (a0 + a.total()) % 4 {
                    0 => theta.sin(),
                    1 => theta.cos(),
                    2 => -theta.sin(),
                    _ => -theta.cos(),
                };
                scale * shifted
            }
            Family::PolyGaussian { poly, decay } => {
                let gauss = (-0.5 * decay.iter().zip(x).map(|(c, xi)| c * xi * xi).sum::<f64>()).exp();
                let total: f64 = poly
                    .terms
                    .iter()
                    .map(|m| {
                        let mut v = m.coeff * falling_power(t, m.t_pow, a0);
                        for l in 0..self.dim {
                            if v == 0.0 {
                                break;
                            }
                            v *= gaussian_monomial_derivative(m.x_pow.get(l), a.get(l), decay[l], x[l]);
                        }
                        v
                    })
                    .sum();
                total * gauss
            }
        }
    }
}

/// `d^a/dy^a y^p`.
fn falling_power(y: f64, p: u32, a: u32) -> f64 {
    if a > p {
        return 0.0;
    }
    let coeff: f64 = ((p - a + 1)..=p).map(f64::from).product();
    coeff * y.powi((p - a) as i32)
}

/// `exp(c y^2 / 2) * d^a/dy^a [ y^p exp(-c y^2 / 2) ]`, a polynomial in `y`.
fn gaussian_monomial_derivative(p: u32, a: u32, c: f64, y: f64) -> f64 {
    // coefficients of the polynomial factor, lowest degree first
    let mut q = vec![0.0; (p + a + 1) as usize];
    q[p as usize] = 1.0;
    let mut deg = p as usize;
    for _ in 0..a {
        let mut next = vec![0.0; q.len()];
        for (i, &qi) in q.iter().enumerate().take(deg + 1) {
            if qi == 0.0 {
                continue;
            }
            if i > 0 {
                next[i - 1] += i as f64 * qi;
            }
            next[i + 1] -= c * qi;
        }
        q = next;
        deg += 1;
    }
    q.iter().rev().fold(0.0, |acc, &qi| acc * y + qi)
}

/// Serialized test function, e.g.
/// `{ "family": "sinusoid", "omega": [2.0], "nu": 1.0, "d": 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub family: String,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub x: Vec<u32>,
    #[serde(default)]
    pub t: u32,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<TestFunction> {
        let d = self.d;
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::config(format!("d = {d} outside 1..={MAX_DIM}")));
        }
        let poly = || -> Result<Polynomial> {
            let terms = self
                .terms
                .as_ref()
                .ok_or_else(|| Error::config(format!("family '{}' needs 'terms'", self.family)))?;
            let monomials = terms
                .iter()
                .map(|t| {
                    if t.x.len() != d {
                        return Err(Error::config(format!("term exponents {:?} do not have length d = {d}", t.x)));
                    }
                    Ok(Monomial { coeff: t.coeff, t_pow: t.t, x_pow: MultiIndex::from_slice(&t.x) })
                })
                .collect::<Result<Vec<_>>>()?;
            Polynomial::new(d, monomials)
        };
        let f = match self.family.as_str() {
            "polynomial" => TestFunction::polynomial(poly()?),
            "sinusoid" => {
                let omega = self.omega.clone().ok_or_else(|| Error::config("sinusoid needs 'omega'"))?;
                if omega.len() != d {
                    return Err(Error::config(format!("omega has length {}, expected d = {d}", omega.len())));
                }
                TestFunction::sinusoid(self.amplitude.unwrap_or(1.0), omega, self.nu.unwrap_or(0.0), self.phase.unwrap_or(0.0))?
            }
            "poly-gaussian" => {
                let decay = self.decay.clone().ok_or_else(|| Error::config("poly-gaussian needs 'decay'"))?;
                TestFunction::poly_gaussian(poly()?, decay)?
            }
            other => return Err(Error::config(format!("unknown test-function family '{other}'"))),
        };
        Ok(match self.max_order {
            Some(m) => f.with_max_order(m),
            None => f,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sin_2x_plus_t() -> TestFunction {
        TestFunction::sinusoid(1.0, vec![2.0], 1.0, 0.0).unwrap()
    }

    #[test]
    fn examples() {
        let f = TestFunction::half_square();
        assert_eq!(f.eval_partial(0, &MultiIndex::from_slice(&[1]), 0.0, &[3.0]).unwrap(), 3.0);

        let g = sin_2x_plus_t();
        assert_eq!(g.eval_partial(0, &MultiIndex::from_slice(&[2]), 0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(g.eval_partial(1, &MultiIndex::from_slice(&[1]), 0.0, &[0.0]).unwrap(), 0.0);
        let v = g.eval_partial(1, &MultiIndex::from_slice(&[1]), std::f64::consts::FRAC_PI_4, &[0.0]).unwrap();
        assert!((v + 2f64.sqrt()).abs() < 1e-12, "{v}");
        // finite-difference cross-check of the mixed partial
        let h = 1e-4;
        let t0 = std::f64::consts::FRAC_PI_4;
        let dx = |t: f64| g.eval_partial(0, &MultiIndex::from_slice(&[1]), t, &[0.0]).unwrap();
        let fd = (dx(t0 + h) - dx(t0 - h)) / (2.0 * h);
        assert!((fd - v).abs() < 1e-6);
    }

    #[test]
    fn capability_error() {
        let f = TestFunction::half_square().with_max_order(2);
        let err = f.eval_partial(1, &MultiIndex::from_slice(&[2]), 0.0, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
        assert!(f.eval_partial(0, &MultiIndex::from_slice(&[1, 0]), 0.0, &[1.0]).is_err());
    }

    #[test]
    fn polynomial_derivatives_vanish_beyond_degree() {
        let f = TestFunction::half_square();
        for a in 3..10 {
            assert_eq!(f.eval_partial(0, &MultiIndex::from_slice(&[a]), 0.3, &[1.7]).unwrap(), 0.0);
        }
        assert_eq!(f.eval_partial(1, &MultiIndex::from_slice(&[0]), 0.3, &[1.7]).unwrap(), 0.0);
    }

    fn families() -> Vec<TestFunction> {
        let poly2 = Polynomial::new(
            2,
            vec![
                Monomial { coeff: 0.7, t_pow: 1, x_pow: MultiIndex::from_slice(&[3, 1]) },
                Monomial { coeff: -1.3, t_pow: 0, x_pow: MultiIndex::from_slice(&[1, 2]) },
                Monomial { coeff: 0.25, t_pow: 2, x_pow: MultiIndex::from_slice(&[0, 0]) },
            ],
        )
        .unwrap();
        vec![
            sin_2x_plus_t(),
            TestFunction::sinusoid(0.8, vec![1.3, -0.7], 0.5, 0.3).unwrap(),
            TestFunction::polynomial(poly2.clone()),
            TestFunction::poly_gaussian(poly2, vec![0.9, 0.4]).unwrap(),
            TestFunction::poly_gaussian(
                Polynomial::new(1, vec![Monomial { coeff: 1.0, t_pow: 1, x_pow: MultiIndex::from_slice(&[2]) }])
                    .unwrap(),
                vec![1.0],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for f in families() {
            let d = f.dim();
            for _ in 0..200 {
                let t: f64 = rng.random_range(0.1..1.0);
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
                let a0 = rng.random_range(0..=1u32);
                let a: Vec<u32> = (0..d).map(|_| rng.random_range(0..=2u32)).collect();
                let a = MultiIndex::from_slice(&a);
                if a0 + a.total() >= 3 {
                    continue;
                }
                // differentiate once more numerically along a random variable
                let var = rng.random_range(0..=d);
                let exact = if var == 0 {
                    f.eval_partial(a0 + 1, &a, t, &x).unwrap()
                } else {
                    f.eval_partial(a0, &a.with(var - 1, a.get(var - 1) + 1), t, &x).unwrap()
                };
                let shifted = |s: f64| {
                    let (mut tt, mut xx) = (t, x.clone());
                    if var == 0 {
                        tt += s;
                    } else {
                        xx[var - 1] += s;
                    }
                    f.eval_partial(a0, &a, tt, &xx).unwrap()
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let scale = exact.abs().max(1.0);
                assert!((fd - exact).abs() / scale < 1e-6, "{f:?}: a0={a0} a={a} var={var}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn mixed_partials_commute() {
        use Variable::*;
        for f in families() {
            let x: Vec<f64> = (0..f.dim()).map(|l| 0.3 + 0.4 * l as f64).collect();
            let seq = if f.dim() == 1 {
                vec![Space(0), Time, Space(0)]
            } else {
                vec![Space(0), Time, Space(1), Space(0)]
            };
            let base = f.eval_sequence(&seq, 0.6, &x).unwrap();
            let mut rev = seq.clone();
            rev.reverse();
            assert_eq!(base, f.eval_sequence(&rev, 0.6, &x).unwrap());
            rev.rotate_left(1);
            assert_eq!(base, f.eval_sequence(&rev, 0.6, &x).unwrap());
        }
    }

    #[test]
    fn gaussian_derivative_polynomials() {
        // d/dy [y e^{-y^2/2}] = (1 - y^2) e^{-y^2/2}
        for y in [-1.2, 0.0, 0.4, 2.0] {
            assert!((gaussian_monomial_derivative(1, 1, 1.0, y) - (1.0 - y * y)).abs() < 1e-14);
            // d^2/dy^2 e^{-y^2/2} = (y^2 - 1) e^{-y^2/2}
            assert!((gaussian_monomial_derivative(0, 2, 1.0, y) - (y * y - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn spec_parsing() {
        let spec: FunctionSpec = serde_json::from_str(r#"{ "family": "sinusoid", "omega": [2.0], "nu": 1.0, "d": 1 }"#).unwrap();
        assert_eq!(spec.build().unwrap(), sin_2x_plus_t());
        let spec: FunctionSpec =
            serde_json::from_str(r#"{ "family": "polynomial", "terms": [{"coeff": 0.5, "x": [2]}], "d": 1 }"#).unwrap();
        assert_eq!(spec.build().unwrap(), TestFunction::half_square());
        let bad: FunctionSpec = serde_json::from_str(r#"{ "family": "sinusoid", "omega": [2.0, 1.0], "d": 1 }"#).unwrap();
        assert!(bad.build().is_err());
        assert!(serde_json::from_str::<FunctionSpec>(r#"{ "family": "sinusoid", "bogus": 1, "d": 1 }"#).is_err());
        let pg: FunctionSpec = serde_json::from_str(
            r#"{ "family": "poly-gaussian", "terms": [{"coeff": 1.0, "x": [1]}], "decay": [0.5], "d": 1, "max_order": 6 }"#,
        )
        .unwrap();
        assert_eq!(pg.build().unwrap().max_order(), 6);
    }
}
