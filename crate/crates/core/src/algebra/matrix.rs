use super::modp::{is_prime, pow_mod, primitive_root};
use super::{
    decode_uint, encode_uint, width_for, AlgebraError, Element, FiniteGroup, GroupId, Result,
    ENUMERATION_CAP,
};

type Mat = [u64; 4];

/// `GL(2, p)`: invertible 2x2 matrices over `Z_p`, entries row-major.
#[derive(Debug)]
pub struct GeneralLinear2 {
    p: u64,
    width: usize,
    id: GroupId,
    name: String,
    elements: Vec<Element>,
}

impl GeneralLinear2 {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        let order = (p * p - 1) * (p * p - p);
        if order > ENUMERATION_CAP {
            return Err(AlgebraError::EnumerationCapExceeded {
                order,
                cap: ENUMERATION_CAP,
            });
        }
        let name = format!("GL(2,{p})");
        let id = GroupId::derive(&name);
        let width = width_for(p);
        let mut elements = Vec::with_capacity(order as usize);
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        if (a * d + p * p - b * c) % p != 0 {
                            elements.push(Element::new(id, encode(&[a, b, c, d], width)));
                        }
                    }
                }
            }
        }
        debug_assert_eq!(elements.len() as u64, order);
        Ok(GeneralLinear2 {
            p,
            width,
            id,
            name,
            elements,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn matrix(&self, entries: [u64; 4]) -> Result<Element> {
        let bytes = encode(&entries.map(|x| x % self.p), self.width);
        self.decode(&bytes)
    }

    pub fn entries(&self, e: &Element) -> [u64; 4] {
        let w = self.width;
        let bytes = e.as_bytes();
        [0, 1, 2, 3].map(|k| decode_uint(&bytes[k * w..(k + 1) * w]))
    }

    pub fn transpose(&self, e: &Element) -> Result<Element> {
        self.check(e)?;
        let [a, b, c, d] = self.entries(e);
        Ok(self.wrap(&[a, c, b, d]))
    }

    /// `x -> (x^T)^-1`, an automorphism of `GL(2, p)`.
    pub fn transpose_inverse(&self, e: &Element) -> Result<Element> {
        self.transpose(&self.invert(e)?)
    }

    /// `diag(w, 1)` for a primitive root `w` together with the two
    /// elementary transvections; these generate the whole group.
    pub fn standard_generators(&self) -> Vec<Element> {
        let w = primitive_root(self.p);
        vec![
            self.wrap(&[w, 0, 0, 1]),
            self.wrap(&[1, 1, 0, 1]),
            self.wrap(&[1, 0, 1, 1]),
        ]
    }

    fn wrap(&self, m: &Mat) -> Element {
        Element::new(self.id, encode(m, self.width))
    }

    fn det(&self, m: &Mat) -> u64 {
        (m[0] * m[3] % self.p + self.p - m[1] * m[2] % self.p) % self.p
    }
}

fn encode(m: &Mat, width: usize) -> Vec<u8> {
    m.iter().flat_map(|&x| encode_uint(x, width)).collect()
}

impl FiniteGroup for GeneralLinear2 {
    fn id(&self) -> GroupId {
        self.id
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    fn encoded_len(&self) -> usize {
        4 * self.width
    }

    fn identity(&self) -> Element {
        self.wrap(&[1, 0, 0, 1])
    }

    fn compose(&self, x: &Element, y: &Element) -> Result<Element> {
        self.check(x)?;
        self.check(y)?;
        let p = self.p;
        let [a, b, c, d] = self.entries(x);
        let [e, f, g, h] = self.entries(y);
        Ok(self.wrap(&[
            (a * e + b * g) % p,
            (a * f + b * h) % p,
            (c * e + d * g) % p,
            (c * f + d * h) % p,
        ]))
    }

    fn invert(&self, x: &Element) -> Result<Element> {
        self.check(x)?;
        let p = self.p;
        let m = self.entries(x);
        let inv = pow_mod(self.det(&m), p - 2, p);
        let [a, b, c, d] = m;
        Ok(self.wrap(&[
            d * inv % p,
            (p - b) * inv % p,
            (p - c) * inv % p,
            a * inv % p,
        ]))
    }

    fn element_at(&self, index: u64) -> Element {
        self.elements[index as usize].clone()
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        let malformed = |reason: String| AlgebraError::Malformed {
            group: self.name.clone(),
            reason,
        };
        if bytes.len() != 4 * self.width {
            return Err(malformed(format!(
                "expected {} bytes, got {}",
                4 * self.width,
                bytes.len()
            )));
        }
        let e = Element::new(self.id, bytes.to_vec());
        let m = self.entries(&e);
        if m.iter().any(|&x| x >= self.p) {
            return Err(malformed(format!("entry not reduced modulo {}", self.p)));
        }
        if self.det(&m) == 0 {
            return Err(malformed("singular matrix".into()));
        }
        Ok(e)
    }

    fn render(&self, e: &Element) -> String {
        let [a, b, c, d] = self.entries(e);
        format!("[[{a},{b}],[{c},{d}]]")
    }
}
