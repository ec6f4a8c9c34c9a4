use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use super::{is_subgroup, AlgebraError, Element, FiniteGroup, GroupId, Result, ENUMERATION_CAP};

/// A subgroup of `parent`, materialized as an element list. Elements share
/// the parent's encoding but carry the subgroup's id.
#[derive(Debug)]
pub struct GeneratedSubgroup {
    parent: Arc<dyn FiniteGroup>,
    id: GroupId,
    name: String,
    elements: Vec<Element>,
    members: HashSet<Box<[u8]>>,
}

impl GeneratedSubgroup {
    /// Closure of `generators` under the parent's product.
    pub fn from_generators(parent: Arc<dyn FiniteGroup>, generators: &[Element]) -> Result<Self> {
        for g in generators {
            parent.check(g)?;
        }
        let identity = parent.identity();
        let mut seen: HashSet<Element> = HashSet::from([identity.clone()]);
        let mut order = vec![identity.clone()];
        let mut queue = VecDeque::from([identity]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let y = parent.compose(&x, g)?;
                if seen.insert(y.clone()) {
                    if seen.len() as u64 > ENUMERATION_CAP {
                        return Err(AlgebraError::EnumerationCapExceeded {
                            order: seen.len() as u64,
                            cap: ENUMERATION_CAP,
                        });
                    }
                    order.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        let label = generators
            .iter()
            .map(|g| parent.render(g))
            .collect::<Vec<_>>()
            .join(", ");
        Ok(Self::assemble(parent, format!("<{label}>"), order))
    }

    /// An explicitly listed subset; rejected unless it is a subgroup.
    pub fn from_elements(parent: Arc<dyn FiniteGroup>, elements: &[Element]) -> Result<Self> {
        for e in elements {
            parent.check(e)?;
        }
        let mut unique: Vec<Element> = Vec::new();
        let mut seen = HashSet::new();
        for e in elements {
            if seen.insert(e.clone()) {
                unique.push(e.clone());
            }
        }
        if !is_subgroup(parent.as_ref(), &unique)? {
            return Err(AlgebraError::NotClosed);
        }
        unique.sort();
        let label = unique
            .iter()
            .map(|g| parent.render(g))
            .collect::<Vec<_>>()
            .join(", ");
        Ok(Self::assemble(parent, format!("{{{label}}}"), unique))
    }

    fn assemble(parent: Arc<dyn FiniteGroup>, label: String, mut elements: Vec<Element>) -> Self {
        let name = format!("{label} <= {}", parent.name());
        let id = GroupId::derive(&name);
        elements.sort();
        let members = elements.iter().map(|e| e.as_bytes().into()).collect();
        let elements = elements.iter().map(|e| e.retag(id)).collect();
        GeneratedSubgroup {
            parent,
            id,
            name,
            elements,
            members,
        }
    }

    pub fn parent(&self) -> &Arc<dyn FiniteGroup> {
        &self.parent
    }

    /// View a subgroup element as an element of the parent.
    pub fn embed(&self, e: &Element) -> Result<Element> {
        self.check(e)?;
        Ok(e.retag(self.parent.id()))
    }

    /// View a parent element as a subgroup element, if it is one.
    pub fn restrict(&self, e: &Element) -> Result<Element> {
        self.parent.check(e)?;
        if self.members.contains(e.as_bytes()) {
            Ok(e.retag(self.id))
        } else {
            Err(AlgebraError::Malformed {
                group: self.name.clone(),
                reason: "not a subgroup member".into(),
            })
        }
    }
}

impl FiniteGroup for GeneratedSubgroup {
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
        self.parent.encoded_len()
    }

    fn identity(&self) -> Element {
        self.parent.identity().retag(self.id)
    }

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        let product = self.parent.compose(&self.embed(a)?, &self.embed(b)?)?;
        Ok(product.retag(self.id))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        Ok(self.parent.invert(&self.embed(a)?)?.retag(self.id))
    }

    fn element_at(&self, index: u64) -> Element {
        self.elements[index as usize].clone()
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        self.restrict(&self.parent.decode(bytes)?)
    }

    fn render(&self, e: &Element) -> String {
        self.parent.render(&e.retag(self.parent.id()))
    }
}

/// The opposite group: same elements, `a ⊙ b = b · a`.
///
/// Right-multiplication style maps such as `x -> h^-1 x h` only satisfy the
/// left-action law `act(h2, act(h1, x)) = act(h2 ⊙ h1, x)` when the acting
/// group composes in this order.
#[derive(Debug)]
pub struct OppositeGroup {
    inner: Arc<dyn FiniteGroup>,
    id: GroupId,
    name: String,
}

impl OppositeGroup {
    pub fn new(inner: Arc<dyn FiniteGroup>) -> Self {
        let name = format!("op({})", inner.name());
        OppositeGroup {
            id: GroupId::derive(&name),
            name,
            inner,
        }
    }

    pub fn inner(&self) -> &Arc<dyn FiniteGroup> {
        &self.inner
    }

    pub fn to_inner(&self, e: &Element) -> Result<Element> {
        self.check(e)?;
        Ok(e.retag(self.inner.id()))
    }

    pub fn from_inner(&self, e: &Element) -> Result<Element> {
        self.inner.check(e)?;
        Ok(e.retag(self.id))
    }
}

impl FiniteGroup for OppositeGroup {
    fn id(&self) -> GroupId {
        self.id
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> u64 {
        self.inner.order()
    }

    fn encoded_len(&self) -> usize {
        self.inner.encoded_len()
    }

    fn identity(&self) -> Element {
        self.inner.identity().retag(self.id)
    }

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        let product = self.inner.compose(&self.to_inner(b)?, &self.to_inner(a)?)?;
        Ok(product.retag(self.id))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        Ok(self.inner.invert(&self.to_inner(a)?)?.retag(self.id))
    }

    fn element_at(&self, index: u64) -> Element {
        self.inner.element_at(index).retag(self.id)
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        Ok(self.inner.decode(bytes)?.retag(self.id))
    }

    fn render(&self, e: &Element) -> String {
        self.inner.render(&e.retag(self.inner.id()))
    }
}

/// Direct product `L × R`; encodings are concatenated.
#[derive(Debug)]
pub struct ProductGroup {
    left: Arc<dyn FiniteGroup>,
    right: Arc<dyn FiniteGroup>,
    id: GroupId,
    name: String,
}

impl ProductGroup {
    pub fn new(left: Arc<dyn FiniteGroup>, right: Arc<dyn FiniteGroup>) -> Self {
        let name = format!("({} x {})", left.name(), right.name());
        ProductGroup {
            id: GroupId::derive(&name),
            name,
            left,
            right,
        }
    }

    pub fn left(&self) -> &Arc<dyn FiniteGroup> {
        &self.left
    }

    pub fn right(&self) -> &Arc<dyn FiniteGroup> {
        &self.right
    }

    pub fn pair(&self, a: &Element, b: &Element) -> Result<Element> {
        self.left.check(a)?;
        self.right.check(b)?;
        let mut bytes = a.as_bytes().to_vec();
        bytes.extend_from_slice(b.as_bytes());
        Ok(Element::new(self.id, bytes))
    }

    pub fn split(&self, e: &Element) -> Result<(Element, Element)> {
        self.check(e)?;
        let (a, b) = e.as_bytes().split_at(self.left.encoded_len());
        Ok((
            Element::new(self.left.id(), a.to_vec()),
            Element::new(self.right.id(), b.to_vec()),
        ))
    }
}

impl FiniteGroup for ProductGroup {
    fn id(&self) -> GroupId {
        self.id
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn order(&self) -> u64 {
        self.left.order().saturating_mul(self.right.order())
    }

    fn encoded_len(&self) -> usize {
        self.left.encoded_len() + self.right.encoded_len()
    }

    fn identity(&self) -> Element {
        self.pair(&self.left.identity(), &self.right.identity())
            .expect("identities belong to factors")
    }

    fn compose(&self, a: &Element, b: &Element) -> Result<Element> {
        let (a1, a2) = self.split(a)?;
        let (b1, b2) = self.split(b)?;
        self.pair(
            &self.left.compose(&a1, &b1)?,
            &self.right.compose(&a2, &b2)?,
        )
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        let (a1, a2) = self.split(a)?;
        self.pair(&self.left.invert(&a1)?, &self.right.invert(&a2)?)
    }

    fn element_at(&self, index: u64) -> Element {
        let right_order = self.right.order();
        self.pair(
            &self.left.element_at(index / right_order),
            &self.right.element_at(index % right_order),
        )
        .expect("factor elements")
    }

    fn decode(&self, bytes: &[u8]) -> Result<Element> {
        if bytes.len() != self.encoded_len() {
            return Err(AlgebraError::Malformed {
                group: self.name.clone(),
                reason: format!("expected {} bytes, got {}", self.encoded_len(), bytes.len()),
            });
        }
        let (a, b) = bytes.split_at(self.left.encoded_len());
        self.pair(&self.left.decode(a)?, &self.right.decode(b)?)
    }

    fn render(&self, e: &Element) -> String {
        match self.split(e) {
            Ok((a, b)) => format!("({}, {})", self.left.render(&a), self.right.render(&b)),
            Err(_) => e.to_hex(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{check_group_axioms, SymmetricGroup};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn s5() -> Arc<SymmetricGroup> {
        Arc::new(SymmetricGroup::new(5).unwrap())
    }

    #[test]
    fn alternating_group_from_generators() {
        let g = s5();
        let gens = [
            g.from_cycles("(1 2 3)").unwrap(),
            g.from_cycles("(1 2 3 4 5)").unwrap(),
        ];
        let a5 = GeneratedSubgroup::from_generators(g.clone(), &gens).unwrap();
        assert_eq!(a5.order(), 60);
        assert!(a5
            .elements()
            .unwrap()
            .iter()
            .all(|e| g.is_even(&a5.embed(e).unwrap())));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        check_group_axioms(&a5, &mut rng, 0, 500).unwrap();
    }

    #[test]
    fn explicit_subset_must_be_closed() {
        let g = s5();
        let e = g.identity();
        let t = g.from_cycles("(1 2)").unwrap();
        let c = g.from_cycles("(1 2 3)").unwrap();
        assert_eq!(
            GeneratedSubgroup::from_elements(g.clone(), &[e.clone(), t.clone()])
                .unwrap()
                .order(),
            2
        );
        assert_eq!(
            GeneratedSubgroup::from_elements(g.clone(), &[e, t, c]).unwrap_err(),
            AlgebraError::NotClosed
        );
    }

    #[test]
    fn opposite_reverses_products() {
        let g = s5();
        let op = OppositeGroup::new(g.clone());
        let a = g.from_cycles("(1 2)").unwrap();
        let b = g.from_cycles("(2 3)").unwrap();
        let ab_op = op
            .compose(&op.from_inner(&a).unwrap(), &op.from_inner(&b).unwrap())
            .unwrap();
        assert_eq!(op.to_inner(&ab_op).unwrap(), g.compose(&b, &a).unwrap());
        assert!(
            op.compose(&a, &a).is_err(),
            "inner elements are foreign to the opposite group"
        );
    }

    #[test]
    fn product_group_axioms() {
        let g: Arc<dyn FiniteGroup> = Arc::new(SymmetricGroup::new(3).unwrap());
        let product = ProductGroup::new(g.clone(), Arc::new(OppositeGroup::new(g)));
        assert_eq!(product.order(), 36);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        check_group_axioms(&product, &mut rng, 36 * 36 * 36, 0).unwrap();
        let e = product.element_at(17);
        assert_eq!(product.decode(e.as_bytes()).unwrap(), e);
    }
}
