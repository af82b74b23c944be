//! Exact univariate polynomials over the rationals, Sturm chains, root
//! counting and isolation, and the `G₁` critical-point certificate.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::rs::g1;

/// Coefficients in ascending degree; the zero polynomial has none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `n / d` as an exact rational.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `x − r`.
    pub fn linear_root(r: BigRational) -> Self {
        Self::new(vec![-r, BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Sign of `p(x)` as −1, 0 or 1.
    pub fn sign_at(&self, x: &BigRational) -> i8 {
        sign(&self.eval(x))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rat(k as i64))
                .collect(),
        )
    }

    /// `p(x²)`.
    pub fn substitute_square(&self) -> Self {
        let mut out = vec![BigRational::zero(); 2 * self.coeffs.len()];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[2 * k] = c.clone();
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => Self::zero(),
        }
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let n = self.coeffs.len();
        if n <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); n - dd];
        for k in (0..n - dd).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p / gcd(p, p')`: same distinct roots, all simple.
    pub fn squarefree(&self) -> Self {
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let a = c.abs();
            match (k, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => f.write_str("t")?,
                (1, false) => write!(f, "{a}t")?,
                (_, true) => write!(f, "t^{k}")?,
                (_, false) => write!(f, "{a}t^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigRational::zero();
        Polynomial::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&zero) + rhs.coeffs.get(k).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

fn sign(x: &BigRational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// `p₀ = p`, `p₁ = p'`, `p_{i+1} = −rem(p_{i−1}, p_i)` until the remainder
/// vanishes. The last member is `gcd(p, p')` up to a constant.
pub fn sturm_sequence(poly: &Polynomial) -> Vec<Polynomial> {
    let mut chain = vec![poly.clone()];
    if poly.degree().unwrap_or(0) == 0 {
        return chain;
    }
    chain.push(poly.derivative());
    loop {
        let n = chain.len();
        let r = chain[n - 2].rem(&chain[n - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(-&r);
    }
    chain
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn variations_at(chain: &[Polynomial], x: &BigRational) -> usize {
    variations(chain.iter().map(|p| p.sign_at(x)))
}

/// Variations just to the right of a root `x` of the squarefree `chain[0]`:
/// there `sign p₀ = sign p₁(x)`.
fn variations_right_of_root(chain: &[Polynomial], x: &BigRational) -> usize {
    let s1 = chain[1].sign_at(x);
    variations(std::iter::once(s1).chain(chain[1..].iter().map(|p| p.sign_at(x))))
}

/// Moves a root endpoint `x` right by `1/N` (N doubling) until the new
/// point is not a root and no root lies in `(x, x + 1/N]`.
fn shift_off_root(chain: &[Polynomial], x: &BigRational) -> BigRational {
    let target = variations_right_of_root(chain, x);
    let mut n = BigInt::from(2u32).pow(20);
    loop {
        let y = x + BigRational::new(BigInt::one(), n.clone());
        if chain[0].sign_at(&y) != 0 && variations_at(chain, &y) == target {
            return y;
        }
        n *= 2;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCount {
    pub count: usize,
    /// Endpoints actually used; differ from the inputs when those were roots.
    pub lower: BigRational,
    pub upper: BigRational,
    pub shifted: bool,
}

/// Distinct real roots of `poly` in `(a, b]`, counted exactly.
pub fn count_roots_reported(poly: &Polynomial, a: &BigRational, b: &BigRational) -> RootCount {
    assert!(a < b, "count_roots needs a < b");
    let sf = poly.squarefree();
    if sf.degree().unwrap_or(0) == 0 {
        return RootCount {
            count: 0,
            lower: a.clone(),
            upper: b.clone(),
            shifted: false,
        };
    }
    let chain = sturm_sequence(&sf);
    let mut shifted = false;
    let lower = if sf.sign_at(a) == 0 {
        shifted = true;
        shift_off_root(&chain, a)
    } else {
        a.clone()
    };
    // `b` itself belongs to (a, b], so its replacement lies just above it
    let upper = if sf.sign_at(b) == 0 {
        shifted = true;
        shift_off_root(&chain, b)
    } else {
        b.clone()
    };
    let count = variations_at(&chain, &lower) - variations_at(&chain, &upper);
    RootCount {
        count,
        lower,
        upper,
        shifted,
    }
}

pub fn count_roots(poly: &Polynomial, a: &BigRational, b: &BigRational) -> usize {
    count_roots_reported(poly, a, b).count
}

/// Isolating intervals `(l, r)` of width ≤ 1e-6 for the distinct roots in
/// `(a, b]`, in increasing order, with `p(l)·p(r) < 0`.
pub fn isolate_roots(poly: &Polynomial, a: &BigRational, b: &BigRational) -> Vec<(BigRational, BigRational)> {
    let sf = poly.squarefree();
    if sf.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let report = count_roots_reported(&sf, a, b);
    let chain = sturm_sequence(&sf);
    let width = ratio(1, 1_000_000);
    let count = |l: &BigRational, r: &BigRational| variations_at(&chain, l) - variations_at(&chain, r);
    let mut out = Vec::new();
    let mut stack = vec![(report.lower, report.upper)];
    while let Some((l, r)) = stack.pop() {
        let n = count(&l, &r);
        if n == 0 {
            continue;
        }
        if n == 1 && &r - &l <= width {
            out.push((l, r));
            continue;
        }
        let mut mid = (&l + &r) / rat(2);
        if sf.sign_at(&mid) == 0 {
            mid = shift_off_root(&chain, &mid);
            if mid >= r {
                // the root is r itself up to the shift; keep a tight box
                out.push((l, mid));
                continue;
            }
        }
        stack.push((mid.clone(), r));
        stack.push((l, mid));
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// `25t⁵ + 90t⁴ − 309t³ + 324t² − 153t + 27`.
pub fn quintic() -> Polynomial {
    Polynomial::from_ints(&[27, -153, 324, -309, 90, 25])
}

/// `A(t) = 5t¹⁰ − 6t⁸ − 51t⁶ + 117t⁴ − 90t² + 27`.
pub fn a_poly() -> Polynomial {
    Polynomial::from_ints(&[27, 0, -90, 0, 117, 0, -51, 0, -6, 0, 5])
}

/// `B(t) = 36t⁶ − 99t⁴ + 81t² − 27`.
pub fn b_poly() -> Polynomial {
    Polynomial::from_ints(&[-27, 0, 81, 0, -99, 0, 36])
}

/// `A² − (1 − t²)B² = t²(t⁴ − 3t² + 3)² · quintic(t²)`, checked coefficientwise.
pub fn g1_identity_holds() -> bool {
    let (a, b) = (a_poly(), b_poly());
    let one_minus = Polynomial::from_ints(&[1, 0, -1]);
    let lhs = &(&a * &a) - &(&one_minus * &(&b * &b));
    let t2 = Polynomial::from_ints(&[0, 0, 1]);
    let r = Polynomial::from_ints(&[3, 0, -3, 0, 1]);
    let rhs = &(&t2 * &(&r * &r)) * &quintic().substitute_square();
    lhs == rhs
}

/// Witnesses for `G₁ > 0` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G1Report {
    pub identity_holds: bool,
    pub quintic_roots: usize,
    /// Isolating intervals of the quintic roots in `t² ∈ [0, 1]`.
    pub quintic_intervals: Vec<(f64, f64)>,
    pub intervals_inside_claimed: bool,
    /// Exact signs `p(0.65²) > 0 > p(0.66²)` and `p(0.94²) < 0 < p(0.95²)`.
    pub exact_sign_changes: bool,
    pub grid_points: usize,
    pub grid_min: f64,
    pub positive_on_grid: bool,
    /// Finite-difference slope goes + → − across [0.65, 0.66].
    pub local_max_in_interval: bool,
    /// Finite-difference slope goes − → + across [0.94, 0.95].
    pub local_min_in_interval: bool,
    /// `arctanh 0.94 − 3·0.95/(1 + 2(1 − 0.95²) + 3/(1 + 2/√(1 − 0.95²)))`.
    pub single_interval_bound: f64,
    /// Smallest of the same bound over ten equal subintervals of [0.94, 0.95].
    pub refined_bound: f64,
}

impl G1Report {
    pub fn passes(&self) -> bool {
        self.identity_holds
            && self.quintic_roots == 2
            && self.intervals_inside_claimed
            && self.exact_sign_changes
            && self.positive_on_grid
            && self.local_max_in_interval
            && self.local_min_in_interval
            && self.refined_bound > 0.0
    }
}

fn g1_subtracted(t: f64) -> f64 {
    let s = 1.0 - t * t;
    3.0 * t / (1.0 + 2.0 * s + 3.0 / (1.0 + 2.0 / s.sqrt()))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn verify_g1_structure() -> G1Report {
    let p = quintic();
    let (zero, one) = (BigRational::zero(), BigRational::one());
    let quintic_roots = count_roots(&p, &zero, &one);
    let intervals = isolate_roots(&p, &zero, &one);
    let claimed = [(ratio(4225, 10_000), ratio(4356, 10_000)), (ratio(8836, 10_000), ratio(9025, 10_000))];
    let intervals_inside_claimed = intervals.len() == 2
        && intervals
            .iter()
            .zip(&claimed)
            .all(|((l, r), (cl, cr))| l > cl && r < cr);
    let sq = |n: i64| ratio(n * n, 10_000);
    let exact_sign_changes = p.sign_at(&sq(65)) > 0
        && p.sign_at(&sq(66)) < 0
        && p.sign_at(&sq(94)) < 0
        && p.sign_at(&sq(95)) > 0;

    let grid_points = 999;
    let grid_min = (1..=grid_points)
        .map(|k| g1(k as f64 / 1000.0).unwrap())
        .fold(f64::INFINITY, f64::min);
    let slope = |t: f64| {
        let h = 1e-6;
        (g1(t + h).unwrap() - g1(t - h).unwrap()) / (2.0 * h)
    };
    let local_max_in_interval = slope(0.65) > 0.0 && slope(0.66) < 0.0;
    let local_min_in_interval = slope(0.94) < 0.0 && slope(0.95) > 0.0;

    let bound = |lo: f64, hi: f64| lo.atanh() - g1_subtracted(hi);
    let refined_bound = (0..10)
        .map(|k| bound(0.94 + 0.001 * k as f64, 0.94 + 0.001 * (k + 1) as f64))
        .fold(f64::INFINITY, f64::min);

    G1Report {
        identity_holds: g1_identity_holds(),
        quintic_roots,
        quintic_intervals: intervals.iter().map(|(l, r)| (to_f64(l), to_f64(r))).collect(),
        intervals_inside_claimed,
        exact_sign_changes,
        grid_points,
        grid_min,
        positive_on_grid: grid_min > 0.0,
        local_max_in_interval,
        local_min_in_interval,
        single_interval_bound: bound(0.94, 0.95),
        refined_bound,
    }
}
