//! Jets for several evaluation points side by side.

use super::jet::SpatialJet;

/// Number of points a tape evaluates at once.
pub const LANES: usize = 8;

pub type Lanes = [f64; LANES];

/// `LANES` spatial jets stored component-major, so that elementwise work over
/// points vectorizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetLanes {
    pub value: Lanes,
    pub grad: [Lanes; 3],
    pub lap: Lanes,
}

impl Default for JetLanes {
    fn default() -> Self {
        Self::ZERO
    }
}

impl JetLanes {
    pub const ZERO: JetLanes = JetLanes {
        value: [0.0; LANES],
        grad: [[0.0; LANES]; 3],
        lap: [0.0; LANES],
    };

    pub fn splat(j: SpatialJet) -> Self {
        Self {
            value: [j.value; LANES],
            grad: [[j.grad[0]; LANES], [j.grad[1]; LANES], [j.grad[2]; LANES]],
            lap: [j.lap; LANES],
        }
    }

    pub fn values(value: Lanes) -> Self {
        Self { value, ..Self::ZERO }
    }

    pub fn from_jets(jets: &[SpatialJet; LANES]) -> Self {
        let mut out = Self::ZERO;
        for (l, j) in jets.iter().enumerate() {
            out.set_lane(l, *j);
        }
        out
    }

    pub fn set_lane(&mut self, l: usize, j: SpatialJet) {
        self.value[l] = j.value;
        for c in 0..3 {
            self.grad[c][l] = j.grad[c];
        }
        self.lap[l] = j.lap;
    }

    pub fn lane(&self, l: usize) -> SpatialJet {
        SpatialJet {
            value: self.value[l],
            grad: [self.grad[0][l], self.grad[1][l], self.grad[2][l]],
            lap: self.lap[l],
        }
    }

    /// `self += c · x` on all components.
    #[inline(always)]
    pub fn axpy(&mut self, c: f64, x: &Self) {
        for l in 0..LANES {
            self.value[l] += c * x.value[l];
            self.grad[0][l] += c * x.grad[0][l];
            self.grad[1][l] += c * x.grad[1][l];
            self.grad[2][l] += c * x.grad[2][l];
            self.lap[l] += c * x.lap[l];
        }
    }

    #[inline(always)]
    pub fn axpy_value(&mut self, c: f64, x: &Self) {
        for l in 0..LANES {
            self.value[l] += c * x.value[l];
        }
    }

    /// Lane-wise sum of componentwise products.
    #[inline(always)]
    pub fn contract(&self, x: &Self) -> Lanes {
        let mut out = [0.0; LANES];
        for l in 0..LANES {
            out[l] = self.value[l] * x.value[l]
                + self.grad[0][l] * x.grad[0][l]
                + self.grad[1][l] * x.grad[1][l]
                + self.grad[2][l] * x.grad[2][l]
                + self.lap[l] * x.lap[l];
        }
        out
    }

    #[inline(always)]
    pub fn grad_dot(&self, x: &Self) -> Lanes {
        let mut out = [0.0; LANES];
        for l in 0..LANES {
            out[l] = self.grad[0][l] * x.grad[0][l] + self.grad[1][l] * x.grad[1][l] + self.grad[2][l] * x.grad[2][l];
        }
        out
    }

    #[inline(always)]
    pub fn add(&self, x: &Self, sign: f64) -> Self {
        let mut out = *self;
        out.axpy(sign, x);
        out
    }

    #[inline(always)]
    pub fn mul(&self, b: &Self) -> Self {
        let a = self;
        let gd = a.grad_dot(b);
        let mut out = Self::ZERO;
        for l in 0..LANES {
            out.value[l] = a.value[l] * b.value[l];
            for c in 0..3 {
                out.grad[c][l] = a.value[l] * b.grad[c][l] + b.value[l] * a.grad[c][l];
            }
            out.lap[l] = a.lap[l] * b.value[l] + b.lap[l] * a.value[l] + 2.0 * gd[l];
        }
        out
    }

    #[inline(always)]
    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::ZERO;
        out.axpy(c, self);
        out
    }

    /// Applies a lifted function given `f, f', f''` per lane.
    #[inline(always)]
    pub fn chain(&self, f: &Lanes, d1: &Lanes, d2: &Lanes) -> Self {
        let g2 = self.grad_dot(self);
        let mut out = Self::ZERO;
        for l in 0..LANES {
            out.value[l] = f[l];
            for c in 0..3 {
                out.grad[c][l] = d1[l] * self.grad[c][l];
            }
            out.lap[l] = d2[l] * g2[l] + d1[l] * self.lap[l];
        }
        out
    }
}

/// `eˣ` lane by lane, accurate to a few ulp and written so the loop
/// vectorizes. Arguments are clamped to `[-700, 700]`.
#[inline]
pub fn exp(x: &Lanes) -> Lanes {
    const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // 1.5 · 2⁵², so that adding it rounds to an integer kept in the low bits.
    const SHIFT: f64 = 6_755_399_441_055_744.0;
    let mut out = [0.0; LANES];
    for l in 0..LANES {
        let xl = x[l].clamp(-700.0, 700.0);
        let kf = xl * std::f64::consts::LOG2_E + SHIFT;
        let bits = kf.to_bits();
        let n = kf - SHIFT;
        let r = (xl - n * LN2_HI) - n * LN2_LO;
        let mut p = 1.0 / 479_001_600.0;
        for c in [
            1.0 / 39_916_800.0,
            1.0 / 3_628_800.0,
            1.0 / 362_880.0,
            1.0 / 40_320.0,
            1.0 / 5_040.0,
            1.0 / 720.0,
            1.0 / 120.0,
            1.0 / 24.0,
            1.0 / 6.0,
            0.5,
            1.0,
            1.0,
        ] {
            p = p * r + c;
        }
        let scale = f64::from_bits((bits.wrapping_add(1023) & 0x7ff) << 52);
        out[l] = p * scale;
    }
    out
}

/// Logistic function lane by lane, using `e^{-|x|}` to stay finite.
#[inline]
pub fn sigmoid(x: &Lanes) -> Lanes {
    let mut neg = [0.0; LANES];
    for l in 0..LANES {
        neg[l] = -x[l].abs();
    }
    let e = exp(&neg);
    let mut out = [0.0; LANES];
    for l in 0..LANES {
        let d = 1.0 / (1.0 + e[l]);
        out[l] = if x[l] >= 0.0 { d } else { e[l] * d };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_std() {
        let mut worst = 0.0f64;
        let mut x = -700.0;
        while x < 700.0 {
            let mut xs = [0.0; LANES];
            for (l, v) in xs.iter_mut().enumerate() {
                *v = x + 0.0137 * l as f64;
            }
            let got = exp(&xs);
            for l in 0..LANES {
                let want = xs[l].exp();
                worst = worst.max(((got[l] - want) / want).abs());
            }
            x += 0.731;
        }
        assert!(worst < 4.0 * f64::EPSILON, "worst relative error {worst:e}");
    }

    #[test]
    fn sigmoid_matches_scalar() {
        let xs = [-40.0, -3.5, -0.2, 0.0, 1e-9, 0.7, 5.0, 800.0];
        let got = sigmoid(&xs);
        for l in 0..LANES {
            let want = crate::autodiff::sigmoid(xs[l]);
            assert!((got[l] - want).abs() <= 4.0 * f64::EPSILON * want, "{} {} {}", xs[l], got[l], want);
        }
    }
}
