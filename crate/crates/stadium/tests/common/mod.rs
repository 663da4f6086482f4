//! Slow arbitrary-precision reference implementations used to validate the
//! fast special functions and the circle spectra.
//!
//! Everything is built on fixed-point arithmetic over `BigInt` (value =
//! mantissa / 2^f). Fixed point rather than floating point matters here: the
//! Bessel power series at large x has terms of size e^x that cancel down to
//! an O(1) result, and a fixed fraction grid keeps every rounding error at
//! 2^-f absolute regardless of term size. Error in a term is still amplified
//! by later growth of the recurrence, so f scales like x log2(e) plus a
//! guard; the result is accurate to well below 1e-30 absolute everywhere in
//! the range used by the tests.
//!
//! Constants are computed, not pasted: pi by Machin's formula, ln by atanh
//! series with power-of-two range reduction, and the Euler-Mascheroni
//! constant by the Brent-McMillan sum. `const_self_check` compares them
//! against 50-digit decimal strings.

#![allow(dead_code)]

use num_bigint::{BigInt, Sign};

#[derive(Clone)]
pub struct Fx {
    m: BigInt,
    f: usize,
}

impl Fx {
    pub fn zero(f: usize) -> Fx {
        Fx {
            m: BigInt::from(0),
            f,
        }
    }

    pub fn one(f: usize) -> Fx {
        Fx {
            m: BigInt::from(1) << f,
            f,
        }
    }

    pub fn from_i64(v: i64, f: usize) -> Fx {
        Fx {
            m: BigInt::from(v) << f,
            f,
        }
    }

    /// Exact embedding of a finite f64 (every f64 is a dyadic rational).
    pub fn from_f64(x: f64, f: usize) -> Fx {
        assert!(x.is_finite());
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let exp_raw = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_raw == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1 << 52), exp_raw - 1075)
        };
        let mut m = BigInt::from(mant);
        let sh = exp + f as i64;
        if sh >= 0 {
            m <<= sh as usize;
        } else {
            m >>= (-sh) as usize;
        }
        if neg {
            m = -m;
        }
        Fx { m, f }
    }

    pub fn to_f64(&self) -> f64 {
        let mag = self.m.magnitude();
        let bits = mag.bits();
        if bits == 0 {
            return 0.0;
        }
        let shift = bits.saturating_sub(53);
        let top = mag >> shift;
        let top_u = top.iter_u64_digits().next().unwrap_or(0);
        let v = top_u as f64 * 2f64.powi(shift as i32 - self.f as i32);
        if self.m.sign() == Sign::Minus {
            -v
        } else {
            v
        }
    }

    pub fn add(&self, o: &Fx) -> Fx {
        assert_eq!(self.f, o.f);
        Fx {
            m: &self.m + &o.m,
            f: self.f,
        }
    }

    pub fn sub(&self, o: &Fx) -> Fx {
        assert_eq!(self.f, o.f);
        Fx {
            m: &self.m - &o.m,
            f: self.f,
        }
    }

    pub fn neg(&self) -> Fx {
        Fx {
            m: -&self.m,
            f: self.f,
        }
    }

    pub fn mul(&self, o: &Fx) -> Fx {
        assert_eq!(self.f, o.f);
        Fx {
            m: (&self.m * &o.m) >> self.f,
            f: self.f,
        }
    }

    pub fn div(&self, o: &Fx) -> Fx {
        assert_eq!(self.f, o.f);
        Fx {
            m: (&self.m << self.f) / &o.m,
            f: self.f,
        }
    }

    pub fn muli(&self, v: i64) -> Fx {
        Fx {
            m: &self.m * v,
            f: self.f,
        }
    }

    pub fn divi(&self, v: i64) -> Fx {
        Fx {
            m: &self.m / v,
            f: self.f,
        }
    }

    pub fn abs(&self) -> Fx {
        Fx {
            m: BigInt::from_biguint(Sign::Plus, self.m.magnitude().clone()),
            f: self.f,
        }
    }

    fn mag_bits(&self) -> u64 {
        self.m.magnitude().bits()
    }
}

/// Parse a decimal literal like "3.14159..." into fixed point (truncated).
pub fn parse_decimal(s: &str, f: usize) -> Fx {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    let digits: String = format!("{int_part}{frac_part}");
    let n = BigInt::parse_bytes(digits.as_bytes(), 10).unwrap();
    let d = BigInt::from(10).pow(frac_part.len() as u32);
    Fx {
        m: (n << f) / d,
        f,
    }
}

/// atan(1/n) by its power series.
fn atan_inv(n: i64, f: usize) -> Fx {
    let n2 = n * n;
    let mut p = Fx::one(f).divi(n);
    let mut s = p.clone();
    let mut j = 1i64;
    loop {
        p = p.divi(n2).neg();
        s = s.add(&p.divi(2 * j + 1));
        j += 1;
        if p.mag_bits() <= 4 {
            break;
        }
    }
    s
}

/// atanh(1/n) by its power series (n > 1).
fn atanh_inv(n: i64, f: usize) -> Fx {
    let n2 = n * n;
    let mut p = Fx::one(f).divi(n);
    let mut s = p.clone();
    let mut j = 1i64;
    loop {
        p = p.divi(n2);
        s = s.add(&p.divi(2 * j + 1));
        j += 1;
        if p.mag_bits() <= 4 {
            break;
        }
    }
    s
}

pub fn pi_fx(f: usize) -> Fx {
    atan_inv(5, f).muli(16).sub(&atan_inv(239, f).muli(4))
}

pub fn ln2_fx(f: usize) -> Fx {
    atanh_inv(3, f).muli(2)
}

/// Natural log of a positive value: reduce by powers of two into [1, 2),
/// then ln(y) = 2 atanh((y-1)/(y+1)).
pub fn ln_fx(y: &Fx) -> Fx {
    assert!(y.m.sign() == Sign::Plus);
    let f = y.f;
    let e = y.mag_bits() as i64 - 1 - f as i64;
    let mut m = y.m.clone();
    if e >= 0 {
        m >>= e as usize;
    } else {
        m <<= (-e) as usize;
    }
    let yr = Fx { m, f };
    let one = Fx::one(f);
    let u = yr.sub(&one).div(&yr.add(&one));
    let u2 = u.mul(&u);
    let mut p = u.clone();
    let mut s = u;
    let mut j = 1i64;
    loop {
        p = p.mul(&u2);
        if p.mag_bits() <= 4 {
            break;
        }
        s = s.add(&p.divi(2 * j + 1));
        j += 1;
    }
    s.muli(2).add(&ln2_fx(f).muli(e))
}

/// Euler-Mascheroni constant by the Brent-McMillan sums
/// A(n)/B(n) - ln n with n = 40 (method error well under 1e-60).
pub fn euler_gamma_fx(f: usize) -> Fx {
    let n = 40i64;
    let mut t = Fx::one(f);
    let mut h = Fx::zero(f);
    let mut b = t.clone();
    let mut a = Fx::zero(f);
    let one = Fx::one(f);
    let mut k = 1i64;
    loop {
        t = t.muli(n * n).divi(k * k);
        h = h.add(&one.divi(k));
        b = b.add(&t);
        a = a.add(&t.mul(&h));
        k += 1;
        if k > n && t.mag_bits() <= 8 {
            break;
        }
    }
    a.div(&b).sub(&ln_fx(&Fx::from_i64(n, f)))
}

/// Fraction bits needed so that series cancellation at argument x still
/// leaves ~100 bits of headroom.
fn frac_bits_for(x: f64) -> usize {
    128 + (1.45 * x).ceil() as usize
}

/// J0, J1, Y0, Y1 at x > 0 from their power series in fixed point.
fn bessel01_fx(x: f64, f: usize) -> (Fx, Fx, Fx, Fx) {
    let one = Fx::one(f);
    let xf = Fx::from_f64(x, f);
    let x2 = xf.divi(2);
    let q = x2.mul(&x2);

    // J0 and the Y0 companion sum  sum_{k>=1} (-1)^{k+1} H_k q^k / (k!)^2
    let mut t = one.clone();
    let mut j0 = t.clone();
    let mut h = Fx::zero(f);
    let mut y0s = Fx::zero(f);
    let mut k = 1i64;
    loop {
        t = t.mul(&q).divi(k * k).neg();
        j0 = j0.add(&t);
        h = h.add(&one.divi(k));
        y0s = y0s.sub(&t.mul(&h));
        k += 1;
        if k as f64 > 0.5 * x && t.mag_bits() <= 8 {
            break;
        }
        assert!(k < 100_000);
    }

    // J1 and the Y1 companion sum  sum_{k>=0} (-1)^k (H_k + H_{k+1}) q^k / (k!(k+1)!)
    let mut t = one.clone();
    let mut j1s = t.clone();
    let mut h2 = one.clone();
    let mut y1s = one.clone();
    let mut k = 1i64;
    loop {
        t = t.mul(&q).divi(k * (k + 1)).neg();
        j1s = j1s.add(&t);
        h2 = h2.add(&one.divi(k)).add(&one.divi(k + 1));
        y1s = y1s.add(&t.mul(&h2));
        k += 1;
        if k as f64 > 0.5 * x && t.mag_bits() <= 8 {
            break;
        }
        assert!(k < 100_000);
    }
    let j1 = x2.mul(&j1s);

    let pi = pi_fx(f);
    let lg = ln_fx(&x2).add(&euler_gamma_fx(f));
    let y0 = lg.mul(&j0).add(&y0s).muli(2).div(&pi);
    let y1 = lg
        .mul(&j1)
        .muli(2)
        .div(&pi)
        .sub(&one.muli(2).div(&pi.mul(&xf)))
        .sub(&xf.mul(&y1s).div(&pi).divi(2));
    (j0, j1, y0, y1)
}

/// Reference J0, J1, Y0, Y1 as f64, accurate to far below f64 rounding.
pub fn bessel01_ref(x: f64) -> (f64, f64, f64, f64) {
    assert!(x > 0.0);
    let f = frac_bits_for(x);
    let (j0, j1, y0, y1) = bessel01_fx(x, f);
    (j0.to_f64(), j1.to_f64(), y0.to_f64(), y1.to_f64())
}

/// Reference J_m(x) for integer order m >= 0, x >= 0.
pub fn jn_ref(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    // extra headroom: the leading term (x/2)^m / m! can sit far below 1
    let f = frac_bits_for(x) + 8 * m as usize;
    let xf = Fx::from_f64(x, f);
    let x2 = xf.divi(2);
    let q = x2.mul(&x2);
    let mut t = Fx::one(f);
    for i in 1..=m as i64 {
        t = t.mul(&x2).divi(i);
    }
    let mut s = t.clone();
    let mut k = 1i64;
    loop {
        t = t.mul(&q).divi(k * (k + m as i64)).neg();
        s = s.add(&t);
        k += 1;
        if k as f64 > 0.5 * x && t.mag_bits() <= 8 {
            break;
        }
        assert!(k < 100_000);
    }
    s.to_f64()
}

/// Absolute defect of the Wronskian J1 Y0 - J0 Y1 - 2/(pi x), evaluated
/// entirely in fixed point. A self-consistency check of the oracle.
pub fn wronskian_defect_ref(x: f64) -> f64 {
    let f = frac_bits_for(x);
    let (j0, j1, y0, y1) = bessel01_fx(x, f);
    let pi = pi_fx(f);
    let xf = Fx::from_f64(x, f);
    let w = j1.mul(&y0).sub(&j0.mul(&y1));
    w.sub(&Fx::one(f).muli(2).div(&pi.mul(&xf))).abs().to_f64()
}

/// Absolute errors of computed (pi, ln 2, gamma) against 50-digit decimal
/// strings, at 320 fraction bits.
pub fn const_self_check() -> (f64, f64, f64) {
    let f = 320;
    let pi_lit = parse_decimal("3.14159265358979323846264338327950288419716939937511", f);
    let ln2_lit = parse_decimal("0.69314718055994530941723212145817656807550013436026", f);
    let gam_lit = parse_decimal("0.57721566490153286060651209008240243104215933593992", f);
    (
        pi_fx(f).sub(&pi_lit).abs().to_f64(),
        ln2_fx(f).sub(&ln2_lit).abs().to_f64(),
        euler_gamma_fx(f).sub(&gam_lit).abs().to_f64(),
    )
}
