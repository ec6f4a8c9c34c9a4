use super::{AlgebraError, Element, FiniteGroup, GroupId, Result};

/// Largest degree for which the full symmetric group is materialized.
pub const MAX_DEGREE: u8 = 8;

/// The symmetric group on `1..=m`.
///
/// Products compose right to left: `(a·b)(k) = a(b(k))`.
#[derive(Debug)]
pub struct SymmetricGroup {
    degree: u8,
    id: GroupId,
    name: String,
    elements: Vec<Element>,
}

impl SymmetricGroup {
    pub fn new(degree: u8) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(AlgebraError::InvalidParams(format!(
                "symmetric group degree must be in 1..={MAX_DEGREE}, got {degree}"
            )));
        }
        let name = format!("S{degree}");
        let id = GroupId::derive(&name);
        let mut elements = Vec::new();
        let mut current: Vec<u8> = (1..=degree).collect();
        loop {
            elements.push(Element::new(id, current.clone()));
            if !next_permutation(&mut current) {
                break;
            }
        }
        Ok(SymmetricGroup {
            degree,
            id,
            name,
            elements,
        })
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    /// Element from cycle notation such as `(1 2 3)(4 5)`.
    pub fn from_cycles(&self, text: &str) -> Result<Element> {
        let images = parse_cycles(text, self.degree)?;
        Ok(Element::new(self.id, images))
    }

    /// The standard generators `(1 2)` and `(1 2 ... m)`.
    pub fn standard_generators(&self) -> Vec<Element> {
        let m = self.degree;
        if m == 1 {
            return vec![self.identity()];
        }
        let mut transposition: Vec<u8> = (1..=m).collect();
        transposition.swap(0, 1);
        let cycle: Vec<u8> = (1..=m).map(|k| k % m + 1).collect();
        vec![
            Element::new(self.id, transposition),
            Element::new(self.id, cycle),
        ]
    }

    /// Sign of a permutation: `true` for even.
    pub fn is_even(&self, e: &Element) -> bool {
        let images = e.as_bytes();
        let mut seen = vec![false; images.len()];
        let mut transpositions = 0usize;
        for start in 0..images.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = usize::from(images[k]) - 1;
                len += 1;
            }
            transpositions += len - 1;
        }
        transpositions % 2 == 0
    }
}

fn next_permutation(items: &mut [u8]) -> bool {
    let Some(pivot) = items.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let successor = items
        .iter()
        .rposition(|&x| x > items[pivot])
        .expect("pivot has a successor");
    items.swap(pivot, successor);
    items[pivot + 1..].reverse();
    true
}

/// Parses disjoint-or-not cycle notation over `1..=degree` into one-line
/// images. Cycles are multiplied right to left. `()`, `e` and the empty
/// string denote the identity.
pub fn parse_cycles(text: &str, degree: u8) -> Result<Vec<u8>> {
    let malformed = |reason: String| AlgebraError::Malformed {
        group: format!("S{degree}"),
        reason,
    };
    let mut images: Vec<u8> = (1..=degree).collect();
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "e" || trimmed == "()" {
        return Ok(images);
    }
    let mut cycles = Vec::new();
    let mut rest = trimmed;
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| malformed(format!("expected '(' in {text:?}")))?;
        if !rest[..open].trim().is_empty() {
            return Err(malformed(format!("unexpected text before '(' in {text:?}")));
        }
        let close = rest
            .find(')')
            .ok_or_else(|| malformed(format!("unclosed cycle in {text:?}")))?;
        let body = &rest[open + 1..close];
        let mut points = Vec::new();
        for token in body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let point: u8 = token
                .parse()
                .map_err(|_| malformed(format!("bad point {token:?}")))?;
            if point == 0 || point > degree {
                return Err(malformed(format!("point {point} outside 1..={degree}")));
            }
            if points.contains(&point) {
                return Err(malformed(format!("point {point} repeated within a cycle")));
            }
            points.push(point);
        }
        cycles.push(points);
        rest = rest[close + 1..].trim_start();
    }
    // right-to-left: the last cycle acts first
    for cycle in cycles.iter().rev() {
        let mut step: Vec<u8> = (1..=degree).collect();
        for (k, &point) in cycle.iter().enumerate() {
            step[usize::from(point) - 1] = cycle[(k + 1) % cycle.len()];
        }
        images = images.iter().map(|&x| step[usize::from(x) - 1]).collect();
    }
    Ok(images)
}

pub(crate) fn render_cycles(images: &[u8]) -> String {
    let mut seen = vec![false; images.len()];
    let mut out = String::new();
    for start in 0..images.len() {
        if seen[start] || usize::from(images[start]) == start + 1 {
            seen[start] = true;
            continue;
        }
        let mut cycle = Vec::new();
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            cycle.push((k + 1).to_string());
            k = usize::from(images[k]) - 1;
        }
        out.push('(');
        out.push_str(&cycle.join(" "));
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

impl FiniteGroup for SymmetricGroup {
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
        usize::from(self.degree)
    }

    fn identity(&self) -> Element {
        Element::new(self.id, (1..=self.degree).collect::<Vec<u8>>())
    }

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        let outer = a.as_bytes();
        let images: Vec<u8> = b
            .as_bytes()
            .iter()
            .map(|&x| outer[usize::from(x) - 1])
            .collect();
        Ok(Element::new(self.id, images))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        let mut inverse = vec![0u8; usize::from(self.degree)];
        for (k, &image) in a.as_bytes().iter().enumerate() {
            inverse[usize::from(image) - 1] = k as u8 + 1;
        }
        Ok(Element::new(self.id, inverse))
    }

    fn element_at(&self, index: u64) -> Element {
        self.elements[index as usize].clone()
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        if bytes.len() != usize::from(self.degree) {
            return Err(AlgebraError::Malformed {
                group: self.name.clone(),
                reason: format!("expected {} bytes, got {}", self.degree, bytes.len()),
            });
        }
        let mut seen = vec![false; bytes.len()];
        for &b in bytes {
            if b == 0 || b > self.degree || seen[usize::from(b) - 1] {
                return Err(AlgebraError::Malformed {
                    group: self.name.clone(),
                    reason: "not a permutation of 1..=m".into(),
                });
            }
            seen[usize::from(b) - 1] = true;
        }
        Ok(Element::new(self.id, bytes.to_vec()))
    }

    fn render(&self, e: &Element) -> String {
        render_cycles(e.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::check_group_axioms;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn orders() {
        for (m, order) in [(1u8, 1u64), (3, 6), (4, 24), (5, 120)] {
            assert_eq!(SymmetricGroup::new(m).unwrap().order(), order);
        }
        assert!(SymmetricGroup::new(9).is_err());
    }

    #[test]
    fn cycle_round_trip() {
        let s5 = SymmetricGroup::new(5).unwrap();
        let e = s5.from_cycles("(1 2 3)(4 5)").unwrap();
        assert_eq!(e.as_bytes(), &[2, 3, 1, 5, 4]);
        assert_eq!(s5.render(&e), "(1 2 3)(4 5)");
        assert_eq!(s5.render(&s5.identity()), "()");
    }

    #[test]
    fn products_compose_right_to_left() {
        let s3 = SymmetricGroup::new(3).unwrap();
        let a = s3.from_cycles("(1 2)").unwrap();
        let b = s3.from_cycles("(2 3)").unwrap();
        // (1 2)(2 3): 3 -> 2 -> 1
        assert_eq!(
            s3.compose(&a, &b).unwrap(),
            s3.from_cycles("(1 2 3)").unwrap()
        );
        assert_eq!(
            s3.from_cycles("(1 2)(2 3)").unwrap(),
            s3.from_cycles("(1 2 3)").unwrap()
        );
    }

    #[test]
    fn rejects_bad_encodings() {
        let s4 = SymmetricGroup::new(4).unwrap();
        assert!(s4.decode(&[1, 1, 2, 3]).is_err());
        assert!(s4.decode(&[1, 2, 3]).is_err());
        assert!(s4.decode(&[0, 1, 2, 3]).is_err());
        assert!(parse_cycles("(1 5)", 4).is_err());
        assert!(parse_cycles("(1 2", 4).is_err());
    }

    #[test]
    fn s4_axioms_exhaustive() {
        let s4 = SymmetricGroup::new(4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        check_group_axioms(&s4, &mut rng, 24 * 24 * 24, 0).unwrap();
    }

    #[test]
    fn parity() {
        let s4 = SymmetricGroup::new(4).unwrap();
        let even = s4
            .elements()
            .unwrap()
            .iter()
            .filter(|e| s4.is_even(e))
            .count();
        assert_eq!(even, 12);
    }
}
