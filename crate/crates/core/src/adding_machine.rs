//! Exact arithmetic in the cyclic quotients that approximate the universal
//! adding machine.
//!
//! A [`Residue`] is an integer modulo `m`, stored with arbitrary-precision
//! values so that nothing here depends on a fixed word size (`21!` already
//! overflows 64 bits). A [`FactorialTower`] is a compatible sequence of
//! residues modulo `1!, 2!, ..., k!`; translating every level by one is the
//! finite shadow of the adding machine.

use std::fmt;

use ibig::{ibig, ubig, IBig, UBig};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddingMachineError {
    #[error("modulus must be positive, got {0}")]
    InvalidModulus(IBig),
    #[error("{divisor} does not divide the modulus {modulus}")]
    NotDivisor { divisor: UBig, modulus: UBig },
    #[error("residues have mismatched moduli: {0} vs {1}")]
    ModulusMismatch(UBig, UBig),
}

/// Depth up to which exhaustive orbit walks stay cheap: the full orbit of
/// the translation modulo `8!` has 40320 points. Residue arithmetic itself
/// has no depth limit.
pub const DEFAULT_ORBIT_CAP: usize = 8;

/// `k!` as an exact integer.
pub fn factorial(k: usize) -> UBig {
    let mut out = ubig!(1);
    for i in 2..=k {
        out *= UBig::from(i);
    }
    out
}

/// An integer modulo `m`, normalized into `[0, m)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Residue {
    modulus: UBig,
    value: UBig,
}

impl Residue {
    /// Build a residue from an already-normalized value.
    pub fn new(modulus: UBig, value: UBig) -> Result<Self, AddingMachineError> {
        if modulus == ubig!(0) {
            return Err(AddingMachineError::InvalidModulus(ibig!(0)));
        }
        if value >= modulus {
            let value = value % &modulus;
            return Ok(Residue { modulus, value });
        }
        Ok(Residue { modulus, value })
    }

    pub fn modulus(&self) -> &UBig {
        &self.modulus
    }

    pub fn value(&self) -> &UBig {
        &self.value
    }

    /// Translation by one: the defining map of the adding machine.
    pub fn translate(&self) -> Residue {
        let mut value = &self.value + ubig!(1);
        if value == self.modulus {
            value = ubig!(0);
        }
        Residue {
            modulus: self.modulus.clone(),
            value,
        }
    }

    /// Project onto the quotient by a divisor of the modulus.
    pub fn project(&self, m: &UBig) -> Result<Residue, AddingMachineError> {
        if *m == ubig!(0) || &self.modulus % m != ubig!(0) {
            return Err(AddingMachineError::NotDivisor {
                divisor: m.clone(),
                modulus: self.modulus.clone(),
            });
        }
        Ok(Residue {
            modulus: m.clone(),
            value: &self.value % m,
        })
    }

    /// Addition within a single quotient.
    pub fn add(&self, other: &Residue) -> Result<Residue, AddingMachineError> {
        if self.modulus != other.modulus {
            return Err(AddingMachineError::ModulusMismatch(
                self.modulus.clone(),
                other.modulus.clone(),
            ));
        }
        Ok(Residue {
            modulus: self.modulus.clone(),
            value: (&self.value + &other.value) % &self.modulus,
        })
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// Reduce an arbitrary signed integer modulo `m`.
pub fn residue(m: &UBig, x: &IBig) -> Result<Residue, AddingMachineError> {
    if *m == ubig!(0) {
        return Err(AddingMachineError::InvalidModulus(ibig!(0)));
    }
    let modulus = IBig::from(m.clone());
    let mut r = x % &modulus;
    if r < ibig!(0) {
        r += &modulus;
    }
    let value = UBig::try_from(r).expect("normalized representative is nonnegative");
    Ok(Residue {
        modulus: m.clone(),
        value,
    })
}

/// Convenience wrapper for machine-sized inputs.
pub fn residue_i64(m: u64, x: i64) -> Result<Residue, AddingMachineError> {
    if m == 0 {
        return Err(AddingMachineError::InvalidModulus(IBig::from(m)));
    }
    residue(&UBig::from(m), &IBig::from(x))
}

/// A compatible sequence of residues modulo `1!, 2!, ..., k!`.
///
/// Compatibility means each level reduces to the previous one, which is the
/// defining condition for a point of the inverse limit truncated at depth `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorialTower {
    levels: Vec<Residue>,
}

impl FactorialTower {
    /// Assemble a tower from explicit levels, checking moduli and
    /// compatibility.
    pub fn new(levels: Vec<Residue>) -> Result<Self, AddingMachineError> {
        for (i, level) in levels.iter().enumerate() {
            let expected = factorial(i + 1);
            if *level.modulus() != expected {
                return Err(AddingMachineError::NotDivisor {
                    divisor: expected,
                    modulus: level.modulus().clone(),
                });
            }
        }
        for i in 0..levels.len().saturating_sub(1) {
            let projected = levels[i + 1].project(levels[i].modulus())?;
            if projected != levels[i] {
                return Err(AddingMachineError::ModulusMismatch(
                    levels[i].modulus().clone(),
                    levels[i + 1].modulus().clone(),
                ));
            }
        }
        Ok(FactorialTower { levels })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Residue] {
        &self.levels
    }

    /// Level `i` counts from 1, matching the modulus `i!`.
    pub fn level(&self, i: usize) -> Option<&Residue> {
        if i == 0 {
            return None;
        }
        self.levels.get(i - 1)
    }

    /// Coordinate-wise translation by one. Compatibility is preserved because
    /// projection commutes with adding one.
    pub fn translate(&self) -> FactorialTower {
        FactorialTower {
            levels: self.levels.iter().map(Residue::translate).collect(),
        }
    }

    /// Check the projection condition between consecutive levels.
    pub fn is_compatible(&self) -> bool {
        self.levels.windows(2).all(|w| {
            w[1].project(w[0].modulus())
                .map(|p| p == w[0])
                .unwrap_or(false)
        })
    }
}

impl fmt::Display for FactorialTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}/{}!", r.value(), i + 1))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Reduce an integer modulo every level `1!, ..., k!` at once.
pub fn tower_of(x: &IBig, depth: usize) -> FactorialTower {
    let levels = (1..=depth)
        .map(|i| residue(&factorial(i), x).expect("factorials are positive"))
        .collect();
    FactorialTower { levels }
}
