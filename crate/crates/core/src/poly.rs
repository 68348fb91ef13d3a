//! Homogeneous polynomials on R^{n+1} with exact or floating coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

/// Exponent multi-index α with |α| = degree.
pub type Exponent = Vec<u32>;

/// A homogeneous polynomial Σ_{|α|=μ} a^α y^α on R^{vars}.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoPoly<T> {
    vars: usize,
    degree: u32,
    terms: BTreeMap<Exponent, T>,
}

impl<T: Clone + Num> HomoPoly<T> {
    pub fn zero(vars: usize, degree: u32) -> Self {
        Self { vars, degree, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: T) -> Self {
        let mut p = Self::zero(vars, 0);
        p.add_term(vec![0; vars], c);
        p
    }

    /// The linear form Σ c_i y_i.
    pub fn linear(coeffs: &[T]) -> Self {
        let vars = coeffs.len();
        let mut p = Self::zero(vars, 1);
        for (i, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; vars];
            e[i] = 1;
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn monomial(exponent: Exponent, c: T) -> Self {
        let degree = exponent.iter().sum();
        let mut p = Self::zero(exponent.len(), degree);
        p.add_term(exponent, c);
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponent: &[u32]) -> T {
        self.terms.get(exponent).cloned().unwrap_or_else(T::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    /// Add c·y^α. Panics if α has the wrong length or degree.
    pub fn add_term(&mut self, exponent: Exponent, c: T) {
        assert_eq!(exponent.len(), self.vars, "exponent length");
        assert_eq!(exponent.iter().sum::<u32>(), self.degree, "non-homogeneous term");
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.get(&exponent) {
            Some(v) => v.clone() + c,
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&exponent);
        } else {
            self.terms.insert(exponent, sum);
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.vars, self.degree);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.clone() * c.clone());
        }
        out
    }

    /// Euclidean Laplacian Σ_j ∂²/∂y_j².
    pub fn laplacian(&self) -> Self {
        let degree = self.degree.saturating_sub(2);
        let mut out = Self::zero(self.vars, degree);
        if self.degree < 2 {
            return out;
        }
        for (e, c) in &self.terms {
            for j in 0..self.vars {
                if e[j] >= 2 {
                    let mut f = e.clone();
                    f[j] -= 2;
                    let k = e[j];
                    out.add_term(f, c.clone() * from_u64::<T>(u64::from(k * (k - 1))));
                }
            }
        }
        out
    }

    pub fn is_harmonic(&self) -> bool {
        self.laplacian().is_zero()
    }

    /// ∂/∂y_j.
    pub fn partial(&self, j: usize) -> Self {
        let degree = self.degree.saturating_sub(1);
        let mut out = Self::zero(self.vars, degree);
        if self.degree == 0 {
            return out;
        }
        for (e, c) in &self.terms {
            if e[j] >= 1 {
                let mut f = e.clone();
                f[j] -= 1;
                out.add_term(f, c.clone() * from_u64::<T>(u64::from(e[j])));
            }
        }
        out
    }

    /// The polynomial y ↦ P(M y) for a vars×vars matrix (row-major rows).
    pub fn compose_linear(&self, matrix: &[Vec<T>]) -> Self {
        let m = self.vars;
        let forms: Vec<HomoPoly<T>> = matrix.iter().map(|row| HomoPoly::linear(row)).collect();
        // powers of each linear form, built once
        let mut powers: Vec<Vec<HomoPoly<T>>> = Vec::with_capacity(m);
        for form in &forms {
            let mut list = vec![HomoPoly::constant(m, T::one())];
            for k in 1..=self.degree as usize {
                let next = &list[k - 1] * form;
                list.push(next);
            }
            powers.push(list);
        }
        let mut out = HomoPoly::zero(m, self.degree);
        for (e, c) in &self.terms {
            let mut prod = HomoPoly::constant(m, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    prod = &prod * &powers[i][k as usize];
                }
            }
            for (f, v) in prod.terms {
                out.add_term(f, v);
            }
        }
        out
    }
}

fn from_u64<T: Num + Clone>(k: u64) -> T {
    let mut acc = T::zero();
    // small integers only (exponent products); binary doubling keeps this cheap
    let mut bit = T::one();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc + bit.clone();
        }
        bit = bit.clone() + bit;
        k >>= 1;
    }
    acc

}

impl<T: Clone + Num> Add for &HomoPoly<T> {
    type Output = HomoPoly<T>;
    fn add(self, rhs: &HomoPoly<T>) -> HomoPoly<T> {
        assert_eq!(self.vars, rhs.vars);
        assert_eq!(self.degree, rhs.degree, "adding polynomials of different degree");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<T: Clone + Num> Mul for &HomoPoly<T> {
    type Output = HomoPoly<T>;
    fn mul(self, rhs: &HomoPoly<T>) -> HomoPoly<T> {
        assert_eq!(self.vars, rhs.vars);
        let mut acc: BTreeMap<Exponent, T> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let entry = acc.entry(e).or_insert_with(T::zero);
                *entry = entry.clone() + ca.clone() * cb.clone();
            }
        }
        acc.retain(|_, v| !v.is_zero());
        HomoPoly { vars: self.vars, degree: self.degree + rhs.degree, terms: acc }
    }
}

impl HomoPoly<BigRational> {
    /// Exact mean ∫_{S^n} P·Q dσ / |S^n|.
    pub fn sphere_mean_inner(&self, other: &Self) -> BigRational {
        let mut acc = BigRational::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if let Some(m) = sphere_monomial_mean(&e) {
                    acc += ca * cb * m;
                }
            }
        }
        acc
    }

    pub fn to_f64(&self) -> HomoPoly<f64> {
        let mut out = HomoPoly::zero(self.vars, self.degree);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), rational_to_f64(c));
        }
        out
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl HomoPoly<f64> {
    /// Value at y.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let powers = PowerTable::new(y, self.degree);
        self.terms.iter().map(|(e, c)| c * powers.monomial(e)).sum()
    }

    /// Value, gradient and Hessian (row-major, vars×vars) at y.
    pub fn eval_derivatives(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let m = self.vars;
        let powers = PowerTable::new(y, self.degree);
        let mut value = 0.0;
        let mut grad = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        let mut e2 = vec![0u32; m];
        for (e, c) in &self.terms {
            value += c * powers.monomial(e);
            for i in 0..m {
                if e[i] == 0 {
                    continue;
                }
                e2.copy_from_slice(e);
                e2[i] -= 1;
                grad[i] += c * f64::from(e[i]) * powers.monomial(&e2);
                for j in i..m {
                    if e2[j] == 0 {
                        continue;
                    }
                    let k = f64::from(e2[j]);
                    e2[j] -= 1;
                    let v = c * f64::from(e[i]) * k * powers.monomial(&e2);
                    e2[j] += 1;
                    hess[i * m + j] += v;
                    if i != j {
                        hess[j * m + i] += v;
                    }
                }
            }
        }
        (value, grad, hess)
    }

    /// Drop coefficients with |a| ≤ tol.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, v| v.abs() > tol);
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficient-wise distance to another polynomial of the same shape.
    pub fn max_coefficient_distance(&self, other: &Self) -> f64 {
        let mut keys: Vec<&Exponent> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|e| (self.coefficient(e) - other.coefficient(e)).abs())
            .fold(0.0, f64::max)
    }

    /// Exact ∫_{S^n} P dσ from the monomial moments.
    pub fn sphere_integral(&self) -> f64 {
        self.terms.iter().map(|(e, c)| c * sphere_monomial_integral(e)).sum()
    }

    /// ∫_{B_1} P dy = ∫_{S^n} P dσ / (μ + n + 1).
    pub fn ball_integral(&self) -> f64 {
        self.sphere_integral() / (f64::from(self.degree) + self.vars as f64)
    }

    /// Exact L²(S^n) inner product.
    pub fn sphere_inner(&self, other: &Self) -> f64 {
        let mut acc = Vec::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let m = sphere_monomial_integral(&e);
                if m != 0.0 {
                    acc.push(ca * cb * m);
                }
            }
        }
        crate::quadrature::pairwise_sum(&acc)
    }
}

/// Table of y_i^k for k ≤ degree.
struct PowerTable {
    rows: Vec<Vec<f64>>,
}

impl PowerTable {
    fn new(y: &[f64], degree: u32) -> Self {
        let rows = y
            .iter()
            .map(|&v| {
                let mut row = Vec::with_capacity(degree as usize + 1);
                let mut acc = 1.0;
                for _ in 0..=degree {
                    row.push(acc);
                    acc *= v;
                }
                row
            })
            .collect();
        Self { rows }
    }

    fn monomial(&self, e: &[u32]) -> f64 {
        e.iter().zip(&self.rows).map(|(&k, row)| row[k as usize]).product()
    }
}

/// Γ at a positive half-integer or integer argument `twice / 2`.
fn gamma_half(twice: u32) -> f64 {
    // Γ(1/2) = √π, Γ(1) = 1, Γ(x+1) = x Γ(x)
    let mut x2 = if twice % 2 == 1 { 1 } else { 2 };
    let mut g = if twice % 2 == 1 { PI.sqrt() } else { 1.0 };
    while x2 < twice {
        g *= f64::from(x2) / 2.0;
        x2 += 2;
    }
    g
}

/// ∫_{S^n} y^α dσ = 2 ∏ Γ((α_i+1)/2) / Γ((|α|+n+1)/2), zero if any α_i is odd.
pub fn sphere_monomial_integral(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let num: f64 = alpha.iter().map(|&a| gamma_half(a + 1)).product();
    let total: u32 = alpha.iter().sum::<u32>() + alpha.len() as u32;
    2.0 * num / gamma_half(total)
}

/// ∫_{S^n} y^α dσ / |S^n| as an exact rational: ∏(α_i−1)!! / ∏_{j<|α|/2}(n+1+2j),
/// `None` if some α_i is odd.
pub fn sphere_monomial_mean(alpha: &[u32]) -> Option<BigRational> {
    if alpha.iter().any(|a| a % 2 == 1) {
        return None;
    }
    let dim = alpha.len() as i64;
    let mut num = BigInt::from(1);
    for &a in alpha {
        let mut k = i64::from(a) - 1;
        while k > 1 {
            num *= k;
            k -= 2;
        }
    }
    let half: i64 = alpha.iter().map(|&a| i64::from(a)).sum::<i64>() / 2;
    let mut den = BigInt::from(1);
    for j in 0..half {
        den *= dim + 2 * j;
    }
    Some(BigRational::new(num, den))
}

/// Enumerate exponents of total degree `degree` in `vars` variables (lexicographic).
pub fn exponents(vars: usize, degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut current = vec![0u32; vars];
    fn rec(i: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        let vars = current.len();
        if i == vars - 1 {
            current[i] = left;
            out.push(current.clone());
            return;
        }
        for k in (0..=left).rev() {
            current[i] = k;
            rec(i + 1, left - k, current, out);
        }
    }
    if vars == 0 {
        return out;
    }
    rec(0, degree, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_cubic() {
        // x³ − 3xy² is harmonic
        let mut p = HomoPoly::<BigRational>::zero(2, 3);
        p.add_term(vec![3, 0], rational(1, 1));
        p.add_term(vec![1, 2], rational(-3, 1));
        assert!(p.is_harmonic());
        let q = HomoPoly::monomial(vec![2, 0, 1], rational(1, 1));
        assert!(!q.is_harmonic());
    }

    #[test]
    fn monomial_moments() {
        assert!((sphere_monomial_integral(&[0, 0]) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_monomial_integral(&[2, 0]) - PI).abs() < 1e-14);
        assert!((sphere_monomial_integral(&[0, 0, 0]) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_monomial_integral(&[2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((sphere_monomial_integral(&[2, 2, 0]) - 4.0 * PI / 15.0).abs() < 1e-14);
        assert_eq!(sphere_monomial_integral(&[1, 1, 0]), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut p = HomoPoly::<f64>::zero(3, 3);
        p.add_term(vec![1, 1, 1], 2.0);
        p.add_term(vec![3, 0, 0], -0.5);
        p.add_term(vec![0, 1, 2], 1.25);
        let y = [0.3, -0.7, 0.4];
        let (v, g, h) = p.eval_derivatives(&y);
        assert!((v - p.eval(&y)).abs() < 1e-15);
        let eps = 1e-6;
        for i in 0..3 {
            let mut a = y;
            let mut b = y;
            a[i] += eps;
            b[i] -= eps;
            let fd = (p.eval(&a) - p.eval(&b)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-8);
            let (_, ga, _) = p.eval_derivatives(&a);
            let (_, gb, _) = p.eval_derivatives(&b);
            for j in 0..3 {
                assert!(((ga[j] - gb[j]) / (2.0 * eps) - h[i * 3 + j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn compose_with_rotation() {
        let p = HomoPoly::monomial(vec![1, 1], 1.0); // xy
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rot = vec![vec![c, -c], vec![c, c]];
        let q = p.compose_linear(&rot); // (x²−y²)/2
        assert!((q.coefficient(&[2, 0]) - 0.5).abs() < 1e-15);
        assert!((q.coefficient(&[0, 2]) + 0.5).abs() < 1e-15);
        assert!(q.coefficient(&[1, 1]).abs() < 1e-15);
    }

    #[test]
    fn exponent_enumeration() {
        assert_eq!(exponents(3, 2).len(), 6);
        assert_eq!(exponents(3, 14).len(), 120);
        assert_eq!(exponents(2, 5).len(), 6);
    }
}
