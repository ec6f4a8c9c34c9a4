use super::{
    decode_uint, encode_uint, width_for, AlgebraError, Element, FiniteGroup, GroupId, Result,
};

/// Moduli are kept below 2^32 so products fit in u64 and trial division
/// stays cheap.
pub const MAX_MODULUS: u64 = 1 << 32;

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut factors = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            factors.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

pub(crate) fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = u128::from(modulus);
    let mut result: u128 = 1 % m;
    let mut b = u128::from(base) % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    result as u64
}

/// Multiplicative order of `g` modulo `p` is exactly `q`.
pub(crate) fn has_order(g: u64, q: u64, p: u64) -> bool {
    q > 0 && pow_mod(g, q, p) == 1 && prime_factors(q).iter().all(|r| pow_mod(g, q / r, p) != 1)
}

pub(crate) fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    (2..p)
        .find(|&w| has_order(w, p - 1, p))
        .expect("prime modulus has a primitive root")
}

/// The cyclic subgroup `<g>` of `Z_p^*`, of order `q`. Enumeration order is
/// `g^0, g^1, ..., g^(q-1)`.
#[derive(Debug)]
pub struct PowerSubgroup {
    p: u64,
    g: u64,
    q: u64,
    width: usize,
    id: GroupId,
    name: String,
}

impl PowerSubgroup {
    pub fn new(p: u64, g: u64, q: u64) -> Result<Self> {
        if p >= MAX_MODULUS {
            return Err(AlgebraError::InvalidParams(format!(
                "modulus {p} exceeds 2^32"
            )));
        }
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        if g == 0 || g >= p {
            return Err(AlgebraError::InvalidParams(format!(
                "generator {g} not in 1..{p}"
            )));
        }
        if !has_order(g, q, p) {
            return Err(AlgebraError::WrongOrder { g, p, claimed: q });
        }
        let name = format!("<{g}> <= Z{p}*");
        Ok(PowerSubgroup {
            p,
            g,
            q,
            width: width_for(p),
            id: GroupId::derive(&name),
            name,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> Element {
        self.wrap(self.g)
    }

    pub fn wrap(&self, residue: u64) -> Element {
        Element::new(self.id, encode_uint(residue, self.width))
    }

    pub fn value(&self, e: &Element) -> u64 {
        decode_uint(e.as_bytes())
    }

    /// `x^k mod p`.
    pub fn power(&self, x: &Element, k: u64) -> Result<Element> {
        self.check(x)?;
        Ok(self.wrap(pow_mod(self.value(x), k, self.p)))
    }
}

impl FiniteGroup for PowerSubgroup {
    fn id(&self) -> GroupId {
        self.id
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> u64 {
        self.q
    }

    fn encoded_len(&self) -> usize {
        self.width
    }

    fn identity(&self) -> Element {
        self.wrap(1)
    }

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        let product = u128::from(self.value(a)) * u128::from(self.value(b)) % u128::from(self.p);
        Ok(self.wrap(product as u64))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(self.wrap(pow_mod(self.value(a), self.q - 1, self.p)))
    }

    fn element_at(&self, index: u64) -> Element {
        self.wrap(pow_mod(self.g, index, self.p))
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        if bytes.len() != self.width {
            return Err(AlgebraError::Malformed {
                group: self.name.clone(),
                reason: format!("expected {} bytes, got {}", self.width, bytes.len()),
            });
        }
        let x = decode_uint(bytes);
        if x == 0 || x >= self.p || pow_mod(x, self.q, self.p) != 1 {
            return Err(AlgebraError::Malformed {
                group: self.name.clone(),
                reason: format!("{x} is not in the subgroup generated by {}", self.g),
            });
        }
        Ok(self.wrap(x))
    }

    fn render(&self, e: &Element) -> String {
        self.value(e).to_string()
    }
}

/// The unit group `(Z_q^*, ·)`. Enumeration order is `1, 2, ..., q-1`
/// restricted to residues coprime to `q`.
#[derive(Debug)]
pub struct UnitsMod {
    q: u64,
    width: usize,
    id: GroupId,
    name: String,
    units: Vec<u64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl UnitsMod {
    pub fn new(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(AlgebraError::InvalidParams(format!(
                "unit group modulus must be >= 2, got {q}"
            )));
        }
        if q > super::ENUMERATION_CAP {
            return Err(AlgebraError::EnumerationCapExceeded {
                order: q,
                cap: super::ENUMERATION_CAP,
            });
        }
        let units: Vec<u64> = (1..q).filter(|&k| gcd(k, q) == 1).collect();
        let name = format!("Z{q}*");
        Ok(UnitsMod {
            q,
            width: width_for(q),
            id: GroupId::derive(&name),
            name,
            units,
        })
    }

    pub fn wrap(&self, residue: u64) -> Element {
        Element::new(self.id, encode_uint(residue % self.q, self.width))
    }

    pub fn value(&self, e: &Element) -> u64 {
        decode_uint(e.as_bytes())
    }
}

impl FiniteGroup for UnitsMod {
    fn id(&self) -> GroupId {
        self.id
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> u64 {
        self.units.len() as u64
    }

    fn encoded_len(&self) -> usize {
        self.width
    }

    fn identity(&self) -> Element {
        self.wrap(1)
    }

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.value(a) * self.value(b) % self.q))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        let x = self.value(a);
        let inverse = self
            .units
            .iter()
            .copied()
            .find(|&u| u * x % self.q == 1)
            .expect("units are invertible");
        Ok(self.wrap(inverse))
    }

    fn element_at(&self, index: u64) -> Element {
        self.wrap(self.units[index as usize])
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        let x = decode_uint(bytes);
        if bytes.len() != self.width || x == 0 || x >= self.q || gcd(x, self.q) != 1 {
            return Err(AlgebraError::Malformed {
                group: self.name.clone(),
                reason: format!("not a unit modulo {}", self.q),
            });
        }
        Ok(self.wrap(x))
    }

    fn render(&self, e: &Element) -> String {
        self.value(e).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_orders() {
        assert!(is_prime(23) && is_prime(2) && !is_prime(21) && !is_prime(1));
        assert_eq!(prime_factors(22), vec![2, 11]);
        assert_eq!(pow_mod(2, 11, 23), 1);
        assert!(has_order(2, 11, 23));
        assert!(!has_order(2, 22, 23));
        assert!(!has_order(5, 11, 23));
        assert_eq!(primitive_root(23), 5);
    }

    #[test]
    fn power_subgroup_validation() {
        assert_eq!(
            PowerSubgroup::new(21, 2, 11).unwrap_err(),
            AlgebraError::NotPrime(21)
        );
        assert!(matches!(
            PowerSubgroup::new(23, 2, 22),
            Err(AlgebraError::WrongOrder { .. })
        ));
        let g = PowerSubgroup::new(23, 2, 11).unwrap();
        assert_eq!(g.order(), 11);
        // 5 generates all of Z23*, so it lies outside the order-11 subgroup
        assert!(g.decode(&[5]).is_err());
        assert_eq!(g.render(&g.decode(&[8]).unwrap()), "8");
    }

    #[test]
    fn units_mod_eleven() {
        let h = UnitsMod::new(11).unwrap();
        assert_eq!(h.order(), 10);
        let three = h.wrap(3);
        assert_eq!(h.value(&h.invert(&three).unwrap()), 4);
        assert!(h.decode(&[0]).is_err());
        assert!(h.decode(&[11]).is_err());
    }
}
