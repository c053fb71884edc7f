//! Meijer G-function for real parameters and positive argument, evaluated as
//! a Mellin–Barnes integral along a vertical line.
//!
//! ```text
//!              1    ⌠  ∏_{j<m} Γ(b_j − s) ∏_{j<n} Γ(1 − a_j + s)
//! G(z) = ───── │  ─────────────────────────────────────────── z^s ds
//!            2πi  ⌡ ∏_{j≥m} Γ(1 − b_j + s) ∏_{j≥n} Γ(a_j − s)
//! ```
//!
//! Poles of the `Γ(1 − a_j + s)` factors form the *left* family and must lie
//! left of the contour; poles of `Γ(b_j − s)` form the *right* family. The
//! effective order of a candidate pole is the number of numerator factors
//! singular there minus the number of denominator factors singular there, so
//! cancelled poles are recognised. The line `Re s = c` is placed at the
//! smallest real-axis magnitude of the integrand inside a gap between poles;
//! poles left on the wrong side are corrected by their residues.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::specfun::ln_gamma_complex;

/// Failure modes of [`meijer_g_scaled`].
#[derive(Debug, Clone, PartialEq)]
pub enum GError {
    /// A left-family and a right-family pole coincide; the function is not
    /// defined by the integral and a parameter has to be perturbed.
    PoleCollision {
        at: f64,
    },
    Invalid(String),
    NoConvergence(String),
}

impl std::fmt::Display for GError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GError::PoleCollision { at } => write!(f, "left and right poles collide at s = {at}"),
            GError::Invalid(msg) => write!(f, "invalid parameters: {msg}"),
            GError::NoConvergence(msg) => write!(f, "contour integral did not converge: {msg}"),
        }
    }
}

impl From<GError> for crate::Error {
    fn from(e: GError) -> Self {
        crate::Error::MeijerG(e.to_string())
    }
}

/// Parameters of `G^{m,n}_{p,q}(z | a; b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeijerG {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
struct Pole {
    at: f64,
    family: Family,
}

const SAME_POINT: f64 = 1e-12;
const POLE_WINDOW: f64 = 60.0;

fn same(x: f64, y: f64) -> bool {
    (x - y).abs() <= SAME_POINT * (1.0 + x.abs())
}

/// Whether `x` lies in the sequence `start + k·dir`, `k = 0, 1, ...`.
fn in_sequence(x: f64, start: f64, dir: f64) -> bool {
    let k = (x - start) * dir;
    k > -SAME_POINT * (1.0 + x.abs()) && same(x, start + k.round() * dir)
}

impl MeijerG {
    pub fn new(a: Vec<f64>, b: Vec<f64>, m: usize, n: usize) -> Result<Self, GError> {
        if m > b.len() || n > a.len() {
            return Err(GError::Invalid(format!(
                "need m <= q and n <= p, got m={m}, n={n}, p={}, q={}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(GError::Invalid("non-finite parameter".into()));
        }
        let g = MeijerG { a, b, m, n };
        if !(g.delta() > 0.0) {
            return Err(GError::Invalid(format!(
                "m + n - (p + q)/2 = {} must be positive for a vertical contour",
                g.delta()
            )));
        }
        Ok(g)
    }

    fn delta(&self) -> f64 {
        (self.m + self.n) as f64 - 0.5 * (self.a.len() + self.b.len()) as f64
    }

    /// Drops parameter pairs whose gamma factors cancel identically:
    /// `a_j (j < n)` against `b_k (k ≥ m)`, and `b_j (j < m)` against `a_k (k ≥ n)`.
    pub fn reduced(&self) -> MeijerG {
        let (mut a_num, mut a_den) = (self.a[..self.n].to_vec(), self.a[self.n..].to_vec());
        let (mut b_num, mut b_den) = (self.b[..self.m].to_vec(), self.b[self.m..].to_vec());
        cancel(&mut a_num, &mut b_den);
        cancel(&mut b_num, &mut a_den);
        let (m, n) = (b_num.len(), a_num.len());
        a_num.extend(a_den);
        b_num.extend(b_den);
        MeijerG { a: a_num, b: b_num, m, n }
    }

    fn ln_integrand(&self, s: Complex64, ln_z: f64, ln_scale: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut acc = s * ln_z - ln_scale;
        for (j, &bj) in self.b.iter().enumerate() {
            if j < self.m {
                acc += ln_gamma_complex(bj - s);
            } else {
                acc -= ln_gamma_complex(one - bj + s);
            }
        }
        for (j, &aj) in self.a.iter().enumerate() {
            if j < self.n {
                acc += ln_gamma_complex(one - aj + s);
            } else {
                acc -= ln_gamma_complex(aj - s);
            }
        }
        acc
    }

    /// Effective pole order at `x` split by family: `(left, right, denominator)`.
    fn singular_counts(&self, x: f64) -> (i32, i32, i32) {
        let mut counts = (0, 0, 0);
        for (j, &bj) in self.b.iter().enumerate() {
            if j < self.m {
                counts.1 += in_sequence(x, bj, 1.0) as i32;
            } else {
                counts.2 += in_sequence(x, bj - 1.0, -1.0) as i32;
            }
        }
        for (j, &aj) in self.a.iter().enumerate() {
            if j < self.n {
                counts.0 += in_sequence(x, aj - 1.0, -1.0) as i32;
            } else {
                counts.2 += in_sequence(x, aj, 1.0) as i32;
            }
        }
        counts
    }

    /// Effective poles within a window around the parameters.
    fn poles(&self) -> Result<Vec<Pole>, GError> {
        let params = self.a.iter().chain(&self.b);
        let lo = params.clone().fold(f64::INFINITY, |x, &y| x.min(y)) - POLE_WINDOW;
        let hi = params.fold(f64::NEG_INFINITY, |x, &y| x.max(y)) + POLE_WINDOW;
        let mut candidates = Vec::new();
        for &aj in &self.a[..self.n] {
            let mut x = aj - 1.0;
            while x >= lo {
                candidates.push(x);
                x -= 1.0;
            }
        }
        for &bj in &self.b[..self.m] {
            let mut x = bj;
            while x <= hi {
                candidates.push(x);
                x += 1.0;
            }
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup_by(|x, y| same(*x, *y));

        let mut poles = Vec::new();
        for x in candidates {
            let (left, right, den) = self.singular_counts(x);
            if left + right - den <= 0 {
                continue;
            }
            if left > 0 && right > 0 {
                return Err(GError::PoleCollision { at: x });
            }
            let family = if left > 0 { Family::Left } else { Family::Right };
            poles.push(Pole { at: x, family });
        }
        Ok(poles)
    }

    /// `G(z) · e^{−ln_scale}`; the scale keeps huge or tiny values in range.
    pub fn eval_scaled(&self, z: f64, ln_scale: f64) -> Result<f64, GError> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(GError::Invalid(format!("argument z = {z} must be finite and positive")));
        }
        let g = self.reduced();
        if g.m + g.n == 0 {
            return Ok(0.0);
        }
        let ln_z = z.ln();
        let poles = g.poles()?;
        let (c, distance) = g.choose_abscissa(&poles, ln_z, ln_scale)?;

        let line = g.line_integral(c, distance, ln_z, ln_scale)?;
        let mut total = line;
        for pole in &poles {
            let misplaced = match pole.family {
                Family::Left => pole.at > c,
                Family::Right => pole.at < c,
            };
            if misplaced {
                let res = g.residue(pole.at, &poles, ln_z, ln_scale);
                match pole.family {
                    Family::Left => total += res,
                    Family::Right => total -= res,
                }
            }
        }
        if !total.is_finite() {
            return Err(GError::NoConvergence("non-finite result".into()));
        }
        Ok(total)
    }

    /// Abscissa and its distance to the nearest effective pole.
    fn choose_abscissa(&self, poles: &[Pole], ln_z: f64, ln_scale: f64) -> Result<(f64, f64), GError> {
        let max_left =
            poles.iter().filter(|p| p.family == Family::Left).map(|p| p.at).fold(f64::NEG_INFINITY, f64::max);
        let min_right = poles.iter().filter(|p| p.family == Family::Right).map(|p| p.at).fold(f64::INFINITY, f64::min);

        let gaps: Vec<(f64, f64)> = if max_left < min_right {
            let lo = if max_left.is_finite() { max_left } else { min_right - 2.0 };
            let hi = if min_right.is_finite() { min_right } else { max_left + 2.0 };
            vec![(lo, hi)]
        } else {
            // no separating line: try every gap inside the overlap
            let mut pts: Vec<f64> =
                poles.iter().map(|p| p.at).filter(|&x| x >= min_right - 1.0 && x <= max_left + 1.0).collect();
            pts.push(min_right - 1.0);
            pts.push(max_left + 1.0);
            pts.sort_by(f64::total_cmp);
            pts.dedup_by(|x, y| same(*x, *y));
            pts.windows(2).map(|w| (w[0], w[1])).collect()
        };

        let real_axis = |x: f64| self.ln_integrand(Complex64::new(x, 0.0), ln_z, ln_scale).re;
        let mut best: Option<(f64, f64)> = None;
        for (lo, hi) in gaps {
            let margin = 0.05 * (hi - lo);
            let c = golden_min(real_axis, lo + margin, hi - margin);
            let value = real_axis(c);
            if value.is_finite() && best.is_none_or(|(_, v)| value < v) {
                best = Some((c, value));
            }
        }
        let (mut c, _) = best.ok_or_else(|| GError::NoConvergence("no admissible contour abscissa".into()))?;
        // stay clear of removable singularities on the real axis
        if (c - c.round()).abs() < 1e-6 {
            c += 1e-3;
        }
        let distance = poles.iter().map(|p| (p.at - c).abs()).fold(f64::INFINITY, f64::min);
        Ok((c, distance.min(1.0)))
    }

    /// `(1/π) Re ∫_0^∞ f(c + it) dt` by the trapezoid rule with step halving.
    fn line_integral(&self, c: f64, distance: f64, ln_z: f64, ln_scale: f64) -> Result<f64, GError> {
        const MAX_T: f64 = 200.0;
        const DROP: f64 = 41.4; // e^-41.4 ≈ 1e-18
        let f = |t: f64| self.ln_integrand(Complex64::new(c, t), ln_z, ln_scale);

        let (ln_peak, t_peak) = {
            let (mut peak, mut at) = (f(0.0).re, 0.0);
            let mut t = 0.0;
            while t < MAX_T {
                t += 0.25;
                let v = f(t).re;
                if v > peak {
                    (peak, at) = (v, t);
                }
                if v < peak - DROP {
                    break;
                }
            }
            (peak, at)
        };
        if !ln_peak.is_finite() {
            return Err(GError::NoConvergence(format!("integrand not finite on Re s = {c}")));
        }
        let cutoff = ln_peak - DROP;

        // sum of f(k h + offset) for k = 0, 1, ... until the integrand is negligible
        let tail_sum = |h: f64, offset: f64| -> (Complex64, f64) {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut abs = 0.0;
            let mut below = 0;
            let mut k = 0usize;
            loop {
                let t = offset + k as f64 * h;
                if t > MAX_T {
                    break;
                }
                let lf = f(t);
                if lf.re < cutoff {
                    below += 1;
                    if below >= 4 && t > t_peak {
                        break;
                    }
                } else {
                    below = 0;
                }
                let v = lf.exp();
                if v.is_finite() {
                    sum += v;
                    abs += v.norm();
                }
                k += 1;
            }
            (sum, abs)
        };

        let mut h = (0.5 * distance).min(0.5);
        let (s, mut abs) = tail_sum(h, 0.0);
        let mut sum = s - 0.5 * f(0.0).exp();
        let mut estimate = (h * sum).re / PI;
        for _ in 0..16 {
            let (odd, odd_abs) = tail_sum(h, 0.5 * h);
            sum += odd;
            abs += odd_abs;
            h *= 0.5;
            let next = (h * sum).re / PI;
            let change = (next - estimate).abs();
            estimate = next;
            if change <= 1e-12 * next.abs() || change <= 64.0 * f64::EPSILON * h * abs / PI {
                return Ok(estimate);
            }
        }
        Err(GError::NoConvergence(format!("trapezoid rule stalled at step {h}")))
    }

    /// Residue of the integrand at `at`, by the trapezoid rule on a small circle.
    fn residue(&self, at: f64, poles: &[Pole], ln_z: f64, ln_scale: f64) -> f64 {
        const POINTS: usize = 128;
        let nearest = poles.iter().map(|p| (p.at - at).abs()).filter(|d| *d > 0.0).fold(1.0f64, f64::min);
        // a removable singularity at an integer can sit next to a true pole
        let frac = (at - at.round()).abs();
        let nearest = if frac > 0.0 { nearest.min(frac) } else { nearest };
        let r = 0.25 * nearest;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..POINTS {
            let theta = 2.0 * PI * (k as f64 + 0.5) / POINTS as f64;
            let dz = Complex64::from_polar(r, theta);
            acc += self.ln_integrand(Complex64::new(at, 0.0) + dz, ln_z, ln_scale).exp() * dz;
        }
        (acc / POINTS as f64).re
    }
}

fn cancel(num: &mut Vec<f64>, den: &mut Vec<f64>) {
    let mut i = 0;
    while i < num.len() {
        if let Some(j) = den.iter().position(|&d| same(d, num[i])) {
            num.remove(i);
            den.remove(j);
        } else {
            i += 1;
        }
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if hi - lo < 1e-6 * (1.0 + lo.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// `G^{m,n}_{p,q}(z | a; b) · e^{−ln_scale}`.
pub fn meijer_g_scaled(a: &[f64], b: &[f64], m: usize, n: usize, z: f64, ln_scale: f64) -> Result<f64, GError> {
    MeijerG::new(a.to_vec(), b.to_vec(), m, n)?.eval_scaled(z, ln_scale)
}
