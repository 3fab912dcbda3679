use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

/// An integer or half-odd-integer angular momentum quantum number, stored as
/// twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// Values `-j, -j+1, ..., j` for `self = j >= 0`, in descending order.
    pub fn descending_projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j.max(-1)).map(move |i| HalfInt(j - 2 * i))
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = String;

    /// Accepts `"3"`, `"-5/2"` or a decimal such as `"4.5"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num
                .trim()
                .parse()
                .map_err(|_| format!("bad half-integer '{s}'"))?;
            return match den.trim() {
                "2" => Ok(HalfInt(num)),
                "1" => Ok(HalfInt(2 * num)),
                _ => Err(format!(
                    "bad half-integer '{s}': denominator must be 1 or 2"
                )),
            };
        }
        let x: f64 = s.parse().map_err(|_| format!("bad half-integer '{s}'"))?;
        let twice = 2.0 * x;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > f64::from(i32::MAX) {
            return Err(format!("'{s}' is not a multiple of 1/2"));
        }
        Ok(HalfInt(twice as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("9/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(9));
        assert_eq!("-4.5".parse::<HalfInt>().unwrap(), HalfInt::from_twice(-9));
        assert_eq!("3".parse::<HalfInt>().unwrap(), HalfInt::from_int(3));
        assert!("0.3".parse::<HalfInt>().is_err());
        assert!("1/3".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-3/2");
        assert_eq!(HalfInt::from_int(2).to_string(), "2");
    }

    #[test]
    fn projections() {
        let ms: Vec<_> = HalfInt::from_twice(3)
            .descending_projections()
            .map(|m| m.twice())
            .collect();
        assert_eq!(ms, vec![3, 1, -1, -3]);
        assert_eq!(HalfInt::ZERO.descending_projections().count(), 1);
    }
}
