use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::derived::{GeneratedSubgroup, OppositeGroup, ProductGroup};
use super::modp::{PowerSubgroup, UnitsMod};
use super::{AlgebraError, Element, FiniteGroup, PlatformDescriptor, Result, ENUMERATION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    BdModp,
    Conjugation,
    TwistedConjugacy,
    DoubleCoset,
}

impl PlatformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlatformKind::BdModp => "bd_modp",
            PlatformKind::Conjugation => "conjugation",
            PlatformKind::TwistedConjugacy => "twisted_conjugacy",
            PlatformKind::DoubleCoset => "double_coset",
        }
    }
}

impl fmt::Display for PlatformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An endomorphism of a finite group, tabulated on every element.
pub struct Endomorphism {
    group: Arc<dyn FiniteGroup>,
    table: HashMap<Element, Element>,
}

impl fmt::Debug for Endomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Endomorphism")
            .field("group", &self.group.name())
            .field("size", &self.table.len())
            .finish()
    }
}

impl Endomorphism {
    pub fn identity(group: Arc<dyn FiniteGroup>) -> Result<Self> {
        let table = group
            .elements()?
            .into_iter()
            .map(|e| (e.clone(), e))
            .collect();
        Ok(Endomorphism { group, table })
    }

    /// Extends `generators[k] -> images[k]` multiplicatively over the Cayley
    /// graph. Every edge `x -> x·s` is checked against `f(x)·f(s)`, which
    /// holds for all edges iff the extension is a well-defined homomorphism.
    pub fn from_generator_images(
        group: Arc<dyn FiniteGroup>,
        generators: &[Element],
        images: &[Element],
    ) -> Result<Self> {
        if generators.len() != images.len() {
            return Err(AlgebraError::InvalidParams(format!(
                "{} generators but {} images",
                generators.len(),
                images.len()
            )));
        }
        if !group.is_enumerable() {
            return Err(AlgebraError::EnumerationCapExceeded {
                order: group.order(),
                cap: ENUMERATION_CAP,
            });
        }
        for e in generators.iter().chain(images) {
            group.check(e)?;
        }
        let identity = group.identity();
        let mut table = HashMap::from([(identity.clone(), identity.clone())]);
        let mut queue = VecDeque::from([identity]);
        while let Some(x) = queue.pop_front() {
            let fx = table[&x].clone();
            for (s, fs) in generators.iter().zip(images) {
                let y = group.compose(&x, s)?;
                let expected = group.compose(&fx, fs)?;
                match table.get(&y) {
                    Some(fy) if *fy != expected => {
                        return Err(AlgebraError::NotHomomorphism(format!(
                            "{} has two images, {} and {}",
                            group.render(&y),
                            group.render(fy),
                            group.render(&expected)
                        )));
                    }
                    Some(_) => {}
                    None => {
                        table.insert(y.clone(), expected);
                        queue.push_back(y);
                    }
                }
            }
        }
        if table.len() as u64 != group.order() {
            return Err(AlgebraError::InvalidParams(format!(
                "generators span {} of {} elements",
                table.len(),
                group.order()
            )));
        }
        Ok(Endomorphism { group, table })
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        self.group.check(x)?;
        Ok(self.table[x].clone())
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().all(|(k, v)| k == v)
    }
}

/// Two commuting actions on `G`: `h·x` on the left and `x·j` on the right.
///
/// The right factor acts through the opposite of `J` so that `x -> x·j` is a
/// left action; the combined action of `H × op(J)` is `(h, j)·x = h·x·j`.
#[derive(Debug)]
pub struct DoubleAction {
    target: Arc<dyn FiniteGroup>,
    left: Arc<GeneratedSubgroup>,
    right: Arc<OppositeGroup>,
    product: Arc<ProductGroup>,
}

impl DoubleAction {
    pub fn new(
        target: Arc<dyn FiniteGroup>,
        left: Arc<GeneratedSubgroup>,
        right: Arc<GeneratedSubgroup>,
    ) -> Self {
        let right = Arc::new(OppositeGroup::new(right));
        let product = Arc::new(ProductGroup::new(left.clone(), right.clone()));
        DoubleAction {
            target,
            left,
            right,
            product,
        }
    }

    pub fn target(&self) -> &Arc<dyn FiniteGroup> {
        &self.target
    }

    /// `H`, acting by left multiplication.
    pub fn left_group(&self) -> &Arc<GeneratedSubgroup> {
        &self.left
    }

    /// `op(J)`, acting by right multiplication.
    pub fn right_group(&self) -> &Arc<OppositeGroup> {
        &self.right
    }

    pub fn product(&self) -> &Arc<ProductGroup> {
        &self.product
    }

    pub fn act_left(&self, h: &Element, x: &Element) -> Result<Element> {
        self.target.check(x)?;
        self.target.compose(&self.left.embed(h)?, x)
    }

    pub fn act_right(&self, j: &Element, x: &Element) -> Result<Element> {
        self.target.check(x)?;
        let j = self.right.to_inner(j)?;
        let j = j.retag(self.target.id());
        self.target.compose(x, &j)
    }

    /// `h·x·j`.
    pub fn double_act(&self, h: &Element, j: &Element, x: &Element) -> Result<Element> {
        self.act_left(h, &self.act_right(j, x)?)
    }

    pub fn act_pair(&self, pair: &Element, x: &Element) -> Result<Element> {
        let (h, j) = self.product.split(pair)?;
        self.double_act(&h, &j, x)
    }
}

#[derive(Debug)]
pub(crate) enum ActionMap {
    /// `x -> x^h` on `<g> <= Z_p^*`, `h` in `Z_q^*`.
    Power(Arc<PowerSubgroup>, Arc<UnitsMod>),
    /// `x -> h^-1 · x · h`.
    Conjugation,
    /// `x -> h^-1 · x · φ(h)`.
    Twisted(Arc<Endomorphism>),
    /// `x -> h · x · j`.
    DoubleCoset(Arc<DoubleAction>),
}

/// A finite group action `φ: H × G -> G` with a public base element `g`.
#[derive(Debug)]
pub struct Platform {
    kind: PlatformKind,
    tag: String,
    acting: Arc<dyn FiniteGroup>,
    target: Arc<dyn FiniteGroup>,
    base: Element,
    map: ActionMap,
    descriptor: PlatformDescriptor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitStabilizerReport {
    pub element: Element,
    pub orbit: Vec<Element>,
    pub stabilizer: Vec<Element>,
}

impl OrbitStabilizerReport {
    /// `|orbit| · |stabilizer| = |H|`.
    pub fn satisfies_fundamental_lemma(&self, acting_order: u64) -> bool {
        (self.orbit.len() as u64) * (self.stabilizer.len() as u64) == acting_order
    }
}

impl Platform {
    pub(crate) fn new(
        kind: PlatformKind,
        acting: Arc<dyn FiniteGroup>,
        target: Arc<dyn FiniteGroup>,
        base: Element,
        map: ActionMap,
        descriptor: PlatformDescriptor,
    ) -> Result<Self> {
        target.check(&base)?;
        let tag = format!("{kind}:{}:{}", target.name(), target.render(&base));
        Ok(Platform {
            kind,
            tag,
            acting,
            target,
            base,
            map,
            descriptor,
        })
    }

    pub fn kind(&self) -> PlatformKind {
        self.kind
    }

    /// Short identifier used in transcripts and reports.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// `H`.
    pub fn acting(&self) -> &Arc<dyn FiniteGroup> {
        &self.acting
    }

    /// `G`.
    pub fn target(&self) -> &Arc<dyn FiniteGroup> {
        &self.target
    }

    /// The public element `g`.
    pub fn base(&self) -> &Element {
        &self.base
    }

    pub fn descriptor(&self) -> &PlatformDescriptor {
        &self.descriptor
    }

    /// Only the modular-exponentiation platform has a commutative `H`.
    pub fn is_commutative(&self) -> bool {
        matches!(self.map, ActionMap::Power(..))
    }

    pub fn double_action(&self) -> Option<&Arc<DoubleAction>> {
        match &self.map {
            ActionMap::DoubleCoset(d) => Some(d),
            _ => None,
        }
    }

    pub fn power_group(&self) -> Option<&Arc<PowerSubgroup>> {
        match &self.map {
            ActionMap::Power(g, _) => Some(g),
            _ => None,
        }
    }

    pub fn units_group(&self) -> Option<&Arc<UnitsMod>> {
        match &self.map {
            ActionMap::Power(_, h) => Some(h),
            _ => None,
        }
    }

    /// `φ(h, x)`.
    pub fn act(&self, h: &Element, x: &Element) -> Result<Element> {
        self.acting.check(h)?;
        self.target.check(x)?;
        let g = &self.target;
        match &self.map {
            ActionMap::Power(group, units) => group.power(x, units.value(h)),
            ActionMap::Conjugation => {
                let h = h.retag(g.id());
                g.compose(&g.compose(&g.invert(&h)?, x)?, &h)
            }
            ActionMap::Twisted(endo) => {
                let h = h.retag(g.id());
                g.compose(&g.compose(&g.invert(&h)?, x)?, &endo.apply(&h)?)
            }
            ActionMap::DoubleCoset(double) => double.act_pair(h, x),
        }
    }

    /// `φ(h, g)`.
    pub fn act_base(&self, h: &Element) -> Result<Element> {
        self.act(h, &self.base)
    }

    /// `H ⊙` product, `a ⊙ b`.
    pub fn op(&self, a: &Element, b: &Element) -> Result<Element> {
        self.acting.compose(a, b)
    }

    /// Product in `G`.
    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        self.target.compose(a, b)
    }

    fn acting_elements(&self) -> Result<Vec<Element>> {
        self.acting.elements()
    }

    /// `{ φ(h, x) : h ∈ H }` in first-seen order.
    pub fn orbit(&self, x: &Element) -> Result<Vec<Element>> {
        let mut seen = HashSet::new();
        let mut orbit = Vec::new();
        for h in self.acting_elements()? {
            let y = self.act(&h, x)?;
            if seen.insert(y.clone()) {
                orbit.push(y);
            }
        }
        Ok(orbit)
    }

    /// `{ h ∈ H : φ(h, x) = x }`.
    pub fn stabilizer(&self, x: &Element) -> Result<Vec<Element>> {
        let mut stabilizer = Vec::new();
        for h in self.acting_elements()? {
            if self.act(&h, x)? == *x {
                stabilizer.push(h);
            }
        }
        Ok(stabilizer)
    }

    pub fn orbit_stabilizer(&self, x: &Element) -> Result<OrbitStabilizerReport> {
        let mut seen = HashSet::new();
        let mut orbit = Vec::new();
        let mut stabilizer = Vec::new();
        for h in self.acting_elements()? {
            let y = self.act(&h, x)?;
            if y == *x {
                stabilizer.push(h);
            }
            if seen.insert(y.clone()) {
                orbit.push(y);
            }
        }
        Ok(OrbitStabilizerReport {
            element: x.clone(),
            orbit,
            stabilizer,
        })
    }

    /// Checks `φ(e, x) = x` and `φ(h2, φ(h1, x)) = φ(h2 ⊙ h1, x)`.
    ///
    /// Exhaustive when `|H|^2 · |G| <= exhaustive_limit`, otherwise over
    /// `samples` random triples.
    pub fn check_action_axioms(
        &self,
        rng: &mut dyn RngCore,
        exhaustive_limit: u64,
        samples: usize,
    ) -> Result<u64> {
        let e = self.acting.identity();
        let check = |h1: &Element, h2: &Element, x: &Element| -> Result<()> {
            if self.act(&e, x)? != *x {
                return Err(AlgebraError::AxiomViolation(format!(
                    "identity moves {} on {}",
                    self.target.render(x),
                    self.tag
                )));
            }
            let stepwise = self.act(h2, &self.act(h1, x)?)?;
            let combined = self.act(&self.op(h2, h1)?, x)?;
            if stepwise != combined {
                return Err(AlgebraError::AxiomViolation(format!(
                    "compatibility fails for h1={}, h2={}, x={} on {}",
                    self.acting.render(h1),
                    self.acting.render(h2),
                    self.target.render(x),
                    self.tag
                )));
            }
            Ok(())
        };
        let h_order = self.acting.order();
        let triples = h_order
            .checked_mul(h_order)
            .and_then(|t| t.checked_mul(self.target.order()));
        match triples {
            Some(t) if t <= exhaustive_limit => {
                let hs = self.acting.elements()?;
                let xs = self.target.elements()?;
                for h1 in &hs {
                    for h2 in &hs {
                        for x in &xs {
                            check(h1, h2, x)?;
                        }
                    }
                }
                Ok(t)
            }
            _ => {
                for _ in 0..samples {
                    let h1 = self.acting.sample(rng);
                    let h2 = self.acting.sample(rng);
                    let x = self.target.sample(rng);
                    check(&h1, &h2, &x)?;
                }
                Ok(samples as u64)
            }
        }
    }

    /// Checks `φ(h, x·y) = φ(h, x)·φ(h, y)`, exhaustively when
    /// `|H|·|G|^2 <= exhaustive_limit`. Returns the number of triples checked.
    pub fn check_automorphism_action(
        &self,
        rng: &mut dyn RngCore,
        exhaustive_limit: u64,
        samples: usize,
    ) -> Result<u64> {
        let check = |h: &Element, x: &Element, y: &Element| -> Result<()> {
            let whole = self.act(h, &self.mul(x, y)?)?;
            let parts = self.mul(&self.act(h, x)?, &self.act(h, y)?)?;
            if whole != parts {
                return Err(AlgebraError::AxiomViolation(format!(
                    "φ({}, x·y) ≠ φ(h,x)·φ(h,y) for x={}, y={} on {}",
                    self.acting.render(h),
                    self.target.render(x),
                    self.target.render(y),
                    self.tag
                )));
            }
            Ok(())
        };
        let g = self.target.order();
        let triples = g
            .checked_mul(g)
            .and_then(|t| t.checked_mul(self.acting.order()));
        match triples {
            Some(t) if t <= exhaustive_limit => {
                let hs = self.acting.elements()?;
                let xs = self.target.elements()?;
                for h in &hs {
                    for x in &xs {
                        for y in &xs {
                            check(h, x, y)?;
                        }
                    }
                }
                Ok(t)
            }
            _ => {
                for _ in 0..samples {
                    let h = self.acting.sample(rng);
                    let (x, y) = (self.target.sample(rng), self.target.sample(rng));
                    check(&h, &x, &y)?;
                }
                Ok(samples as u64)
            }
        }
    }

    /// Checks `h·(x·j) = (h·x)·j` for double-coset platforms, exhaustively
    /// when `|H|·|J|·|G| <= exhaustive_limit`.
    pub fn check_interchange(
        &self,
        rng: &mut dyn RngCore,
        exhaustive_limit: u64,
        samples: usize,
    ) -> Result<u64> {
        let da = self.double_action().ok_or_else(|| {
            AlgebraError::InvalidParams(format!("{} has no double action", self.tag))
        })?;
        let left = da.left_group().clone() as Arc<dyn FiniteGroup>;
        let right = da.right_group().clone() as Arc<dyn FiniteGroup>;
        let check = |h: &Element, j: &Element, x: &Element| -> Result<()> {
            let a = da.act_left(h, &da.act_right(j, x)?)?;
            let b = da.act_right(j, &da.act_left(h, x)?)?;
            if a != b {
                return Err(AlgebraError::AxiomViolation(format!(
                    "interchange fails for x={} on {}",
                    self.target.render(x),
                    self.tag
                )));
            }
            Ok(())
        };
        let triples = left
            .order()
            .checked_mul(right.order())
            .and_then(|t| t.checked_mul(self.target.order()));
        match triples {
            Some(t) if t <= exhaustive_limit => {
                let (hs, js, xs) = (left.elements()?, right.elements()?, self.target.elements()?);
                for h in &hs {
                    for j in &js {
                        for x in &xs {
                            check(h, j, x)?;
                        }
                    }
                }
                Ok(t)
            }
            _ => {
                for _ in 0..samples {
                    let (h, j, x) = (left.sample(rng), right.sample(rng), self.target.sample(rng));
                    check(&h, &j, &x)?;
                }
                Ok(samples as u64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::make_platform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn conjugation_acts_by_automorphisms() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let p = make_platform(&PlatformDescriptor::symmetric_conjugation(4)).unwrap();
        assert_eq!(
            p.check_automorphism_action(&mut rng, 1 << 20, 0).unwrap(),
            24 * 24 * 24
        );
        let p = make_platform(&PlatformDescriptor::gl2_conjugation(3)).unwrap();
        assert!(p.check_automorphism_action(&mut rng, 0, 2000).is_ok());
    }

    #[test]
    fn twisted_conjugacy_is_not_an_automorphism_action() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let p = make_platform(&PlatformDescriptor::gl2_twisted(3)).unwrap();
        assert!(matches!(
            p.check_automorphism_action(&mut rng, 1 << 24, 0),
            Err(AlgebraError::AxiomViolation(_))
        ));
    }

    #[test]
    fn double_coset_interchange() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let p = make_platform(&PlatformDescriptor::default_double_coset()).unwrap();
        assert!(p.check_interchange(&mut rng, 0, 500).is_ok());
        let c = make_platform(&PlatformDescriptor::symmetric_conjugation(3)).unwrap();
        assert!(c.check_interchange(&mut rng, 0, 1).is_err());
    }
}
