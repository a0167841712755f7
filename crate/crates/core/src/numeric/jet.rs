//! Second-order jets: a value with its first and second derivative along one
//! perturbation parameter. Derivatives are raw (`f''`, not `f''/2`).

use super::{Field, NumError};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Field> Jet2<T> {
    pub fn new(value: T, d1: T, d2: T) -> Self {
        Jet2 { value, d1, d2 }
    }

    /// Seed a jet at `x`; an active jet is the perturbation parameter itself.
    pub fn lift(x: T, active: bool) -> Self {
        let zero = x.zero_like();
        let d1 = if active { x.one_like() } else { zero.clone() };
        Jet2 { value: x, d1, d2: zero }
    }

    pub fn constant(x: T) -> Self {
        Self::lift(x, false)
    }
}

impl<T: Field> Field for Jet2<T> {
    fn add(&self, o: &Self) -> Self {
        Jet2 {
            value: self.value.add(&o.value),
            d1: self.d1.add(&o.d1),
            d2: self.d2.add(&o.d2),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Jet2 {
            value: self.value.sub(&o.value),
            d1: self.d1.sub(&o.d1),
            d2: self.d2.sub(&o.d2),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let cross = self.d1.mul(&o.d1);
        Jet2 {
            value: self.value.mul(&o.value),
            d1: self.value.mul(&o.d1).add(&self.d1.mul(&o.value)),
            d2: self
                .value
                .mul(&o.d2)
                .add(&cross)
                .add(&cross)
                .add(&self.d2.mul(&o.value)),
        }
    }

    fn div(&self, o: &Self) -> Result<Self, NumError> {
        // a = q b  =>  q' = (a' - q b') / b,  q'' = (a'' - 2 q' b' - q b'') / b
        let q = self.value.div(&o.value)?;
        let q1 = self.d1.sub(&q.mul(&o.d1)).div(&o.value)?;
        let t = q1.mul(&o.d1);
        let q2 = self
            .d2
            .sub(&t)
            .sub(&t)
            .sub(&q.mul(&o.d2))
            .div(&o.value)?;
        Ok(Jet2 {
            value: q,
            d1: q1,
            d2: q2,
        })
    }

    fn neg(&self) -> Self {
        Jet2 {
            value: self.value.neg(),
            d1: self.d1.neg(),
            d2: self.d2.neg(),
        }
    }

    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.d1.is_zero() && self.d2.is_zero()
    }

    fn zero_like(&self) -> Self {
        Jet2::constant(self.value.zero_like())
    }

    fn one_like(&self) -> Self {
        Jet2::constant(self.value.one_like())
    }

    fn divisor_is_zero(&self) -> bool {
        self.value.is_zero()
    }
}
