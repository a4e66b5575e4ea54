//! Dual potential and involution kernel by the Sinai construction.
//!
//! For a depth-`k` potential `A` on the future side and a reference point `z`,
//!
//! ```text
//! W(y|x) = sum_{j=1}^{k-1} [A(y_j..y_1 x) - A(y_j..y_1 z)]
//! A*(y)  = A(y_1 z) + sum_{j=2}^{k} [A(y_j..y_1 z) - A(y_j..y_2 z)]
//! ```
//!
//! Both sums are finite because `A` reads `k` coordinates, so `W` has depth
//! `(k-1, k-1)` and `A*` has depth `k`. They satisfy
//! `A*(y) = A(y_1 x) + W(sigma* y | y_1 x) - W(y | x)` exactly.

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::symbolic::{check_theta, word_of_index, CylinderFunction, KernelTable, Point, Side, Word};

/// A potential together with its dual and an involution kernel.
#[derive(Clone, Debug)]
pub struct DualTriple {
    a: CylinderFunction,
    a_star: CylinderFunction,
    w: KernelTable,
    z: Point,
    theta: f64,
}

impl DualTriple {
    /// Assembles a triple without checking the kernel identity; see
    /// [`verify_involution`].
    pub fn from_parts(
        a: CylinderFunction,
        a_star: CylinderFunction,
        w: KernelTable,
        z: Point,
        theta: f64,
    ) -> Result<Self> {
        check_theta(theta)?;
        if a.side() != Side::Future || a_star.side() != Side::Past {
            return Err(Error::SideMismatch("A lives on the future side and A* on the past side"));
        }
        Ok(DualTriple { a, a_star, w, z, theta })
    }

    pub fn a(&self) -> &CylinderFunction {
        &self.a
    }

    pub fn a_star(&self) -> &CylinderFunction {
        &self.a_star
    }

    pub fn w(&self) -> &KernelTable {
        &self.w
    }

    pub fn z(&self) -> &Point {
        &self.z
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn d(&self) -> usize {
        self.a.d()
    }

    /// Depth `k` of the potential.
    pub fn depth(&self) -> usize {
        self.a.depth()
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        self.theta = theta;
        Ok(self)
    }
}

/// Sinai construction with reference point `z`; `theta` defaults to 1/2.
pub fn sinai_pair(a: &CylinderFunction, z: &Point) -> Result<DualTriple> {
    if a.side() != Side::Future || z.side() != Side::Future {
        return Err(Error::SideMismatch("the potential and z must live on the future side"));
    }
    let d = a.d();
    z.validate(d)?;
    let k = a.depth();
    let zc = z.coords(k);
    // A evaluated on the future point `head ++ rest`
    let eval = |head: &[usize], rest: &[usize]| {
        let mut coords = head.to_vec();
        coords.extend_from_slice(rest);
        a.value(&coords)
    };

    let w = if k <= 1 {
        KernelTable::zero(d)
    } else {
        KernelTable::from_fn(d, k - 1, k - 1, |y, x| {
            let mut s = Cdd::ZERO;
            for j in 1..k {
                // y_j .. y_1 in coordinate order
                let head: Vec<usize> = y[..j].iter().rev().copied().collect();
                s += eval(&head, x) - eval(&head, &zc);
            }
            s
        })
    };

    let a_star = if k == 0 {
        CylinderFunction::constant(Side::Past, d, a.table()[0])
    } else {
        CylinderFunction::from_fn(Side::Past, d, k, |y| {
            let mut s = eval(&y[..1], &zc);
            for j in 2..=k {
                let head: Vec<usize> = y[..j].iter().rev().copied().collect();
                s += eval(&head, &zc) - eval(&head[..j - 1], &zc);
            }
            s
        })
    };

    Ok(DualTriple { a: a.clone(), a_star, w, z: z.clone(), theta: 0.5 })
}

/// Largest residual of `A*(y) - A(y_1 x) - W(sigma* y | y_1 x) + W(y | x)`
/// over all cylinders, evaluated with every tail symbol for `x`.
pub fn verify_involution(t: &DualTriple) -> Result<f64> {
    let d = t.d();
    let k = t.a.depth().max(t.a_star.depth()).max(t.w.past_depth() + 1).max(1);
    let q = k.saturating_sub(1).max(t.w.future_depth());
    let mut worst = 0.0f64;
    for iy in 0..d.pow(k as u32) {
        let y = Point::new(Side::Past, word_of_index(d, k, iy), 0);
        let ay = t.a_star.evaluate(&y)?;
        let y_shift = y.shift();
        for ix in 0..d.pow(q as u32) {
            for tail in 0..d {
                let x = Point::new(Side::Future, word_of_index(d, q, ix), tail);
                let y1x = x.push_front(y.coord(1));
                let rhs = t.a.evaluate(&y1x)? + t.w.eval(&y_shift, &y1x)? - t.w.eval(&y, &x)?;
                worst = worst.max((ay - rhs).norm());
            }
        }
    }
    Ok(worst)
}

/// Residual of the iterated identity
/// `A^n(w x') = W(y'w | x') - W(y' | w x') + (A*)^n(y'w)`.
///
/// `w = (w_1 .. w_n)` is read as a future word, so `w x'` is the future point
/// `w_1 .. w_n x'`, while `y'w` appends `w` to the past point `y'` in time
/// order, making `w_n` its most recent symbol.
pub fn cocycle_iterate_check(t: &DualTriple, w: &[usize], x_base: &Point, y_base: &Point) -> Result<f64> {
    let n = w.len();
    let fut = Word::future(w.to_vec()).then(x_base)?;
    let past = Word::past_appended(w).then(y_base)?;
    let lhs = t.a.birkhoff_at(&fut, n)?;
    let rhs = t.w.eval(&past, x_base)? - t.w.eval(y_base, &fut)? + t.a_star.birkhoff_at(&past, n)?;
    Ok((lhs - rhs).norm())
}

/// Tabulates a potential on the cylinders of depth `k`, reading each
/// cylinder at its `z`-tail representative `w z`.
///
/// Returns the table together with `C theta^k`, which bounds the sup
/// distance to the original potential whenever its Hoelder constant is at
/// most `c`.
pub fn truncate_potential(
    eval: impl Fn(&Point) -> Cdd,
    d: usize,
    k: usize,
    c: f64,
    theta: f64,
    z: &Point,
) -> Result<(CylinderFunction, f64)> {
    check_theta(theta)?;
    z.validate(d)?;
    let table = CylinderFunction::from_fn(Side::Future, d, k, |w| {
        let pt = Word::future(w.to_vec()).then(z).expect("future word and future point");
        eval(&pt)
    });
    Ok((table, c * theta.powi(k as i32)))
}

/// The two seminorm inequalities satisfied by the Sinai construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelBounds {
    pub lhs_w: f64,
    pub rhs_w: f64,
    pub lhs_a_star: f64,
    pub rhs_a_star: f64,
}

impl KernelBounds {
    pub fn hold(&self) -> bool {
        self.lhs_w <= self.rhs_w && self.lhs_a_star <= self.rhs_a_star
    }
}

/// `||W||_theta <= ||A||_theta 3 theta/(1-theta)` and
/// `||A*||_theta <= ||A||_theta 2/(1-theta)`, seminorms including `n = 0`.
pub fn kernel_norm_bounds(t: &DualTriple, theta: f64) -> Result<KernelBounds> {
    check_theta(theta)?;
    let a = t.a.holder_seminorm(theta, true)?;
    Ok(KernelBounds {
        lhs_w: t.w.holder_seminorm(theta, true)?,
        rhs_w: a * 3.0 * theta / (1.0 - theta),
        lhs_a_star: t.a_star.holder_seminorm(theta, true)?,
        rhs_a_star: a * 2.0 / (1.0 - theta),
    })
}
