//! Serializable platform descriptions and the constructor that validates
//! them into a [`Platform`].

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::action::{ActionMap, DoubleAction, Endomorphism, Platform, PlatformKind};
use super::derived::{GeneratedSubgroup, OppositeGroup, ProductGroup};
use super::matrix::GeneralLinear2;
use super::modp::{PowerSubgroup, UnitsMod};
use super::perm::SymmetricGroup;
use super::{AlgebraError, Element, FiniteGroup, Result};

/// Random triples checked against the action axioms when a platform is built.
const CONSTRUCTION_AXIOM_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GroupFamily {
    Symmetric { degree: u8 },
    Gl2 { p: u64 },
}

/// A subgroup given by hex-encoded generators or by its full element list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupSpec {
    Generators(Vec<String>),
    Elements(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EndomorphismSpec {
    Identity,
    /// `x -> (x^T)^-1`; only meaningful for `GL(2, p)`.
    TransposeInverse,
    /// Images of generators, extended multiplicatively and validated.
    GeneratorImages {
        generators: Vec<String>,
        images: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlatformDescriptor {
    BdModp {
        p: u64,
        g: u64,
        q: u64,
    },
    Conjugation {
        group: GroupFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subgroup: Option<SubgroupSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<String>,
    },
    TwistedConjugacy {
        group: GroupFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subgroup: Option<SubgroupSpec>,
        endomorphism: EndomorphismSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<String>,
    },
    DoubleCoset {
        group: GroupFamily,
        left: SubgroupSpec,
        right: SubgroupSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<String>,
    },
}

impl PlatformDescriptor {
    pub fn bd_modp(p: u64, g: u64, q: u64) -> Self {
        PlatformDescriptor::BdModp { p, g, q }
    }

    /// `S_m` acting on itself by conjugation.
    pub fn symmetric_conjugation(degree: u8) -> Self {
        PlatformDescriptor::Conjugation {
            group: GroupFamily::Symmetric { degree },
            subgroup: None,
            base: None,
        }
    }

    /// `GL(2, p)` acting on itself by conjugation.
    pub fn gl2_conjugation(p: u64) -> Self {
        PlatformDescriptor::Conjugation {
            group: GroupFamily::Gl2 { p },
            subgroup: None,
            base: None,
        }
    }

    /// `GL(2, p)` acting on itself by twisted conjugation through transpose-inverse.
    pub fn gl2_twisted(p: u64) -> Self {
        PlatformDescriptor::TwistedConjugacy {
            group: GroupFamily::Gl2 { p },
            subgroup: None,
            endomorphism: EndomorphismSpec::TransposeInverse,
            base: None,
        }
    }

    /// `A5 × A5` acting on `S5` by `x -> h·x·j`, base `(1 2)`.
    pub fn default_double_coset() -> Self {
        // (1 2 3) and (1 2 3 4 5) in one-line form
        let a5 = SubgroupSpec::Generators(vec!["0203010405".into(), "0203040501".into()]);
        PlatformDescriptor::DoubleCoset {
            group: GroupFamily::Symmetric { degree: 5 },
            left: a5.clone(),
            right: a5,
            base: Some("0201030405".into()),
        }
    }

    pub fn kind(&self) -> PlatformKind {
        match self {
            PlatformDescriptor::BdModp { .. } => PlatformKind::BdModp,
            PlatformDescriptor::Conjugation { .. } => PlatformKind::Conjugation,
            PlatformDescriptor::TwistedConjugacy { .. } => PlatformKind::TwistedConjugacy,
            PlatformDescriptor::DoubleCoset { .. } => PlatformKind::DoubleCoset,
        }
    }

    /// Parses a short selector: `bd_modp`, `bd_modp(23,2,11)`, `S4`,
    /// `conjugation(S4)`, `conjugation(GL2(5))`, `twisted_conjugacy(GL2(5))`,
    /// `double_coset`.
    pub fn from_selector(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || AlgebraError::InvalidParams(format!("unknown platform selector {text:?}"));
        let (head, arg) = match compact.find('(') {
            Some(i) if compact.ends_with(')') => {
                (&compact[..i], Some(&compact[i + 1..compact.len() - 1]))
            }
            Some(_) => return Err(bad()),
            None => (compact.as_str(), None),
        };
        match (head.to_ascii_lowercase().as_str(), arg) {
            ("bd_modp", None) => Ok(Self::bd_modp(23, 2, 11)),
            ("bd_modp", Some(args)) => {
                let nums = args.split(',').map(|t| t.parse::<u64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
                match nums.as_slice() {
                    [p, g, q] => Ok(Self::bd_modp(*p, *g, *q)),
                    _ => Err(bad()),
                }
            }
            ("conjugation", Some(group)) => {
                Ok(PlatformDescriptor::Conjugation { group: parse_family(group).ok_or_else(bad)?, subgroup: None, base: None })
            }
            ("twisted_conjugacy", None) => Ok(Self::gl2_twisted(5)),
            ("twisted_conjugacy", Some(group)) => match parse_family(group).ok_or_else(bad)? {
                GroupFamily::Gl2 { p } => Ok(Self::gl2_twisted(p)),
                GroupFamily::Symmetric { .. } => Err(AlgebraError::InvalidParams(
                    "twisted conjugacy selectors need GL2(p); use a platform file for other endomorphisms".into(),
                )),
            },
            ("double_coset", None) => Ok(Self::default_double_coset()),
            _ => match parse_family(&compact) {
                Some(group) => Ok(PlatformDescriptor::Conjugation { group, subgroup: None, base: None }),
                None => Err(bad()),
            },
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }
}

/// `S<m>` or `GL2(<p>)`.
pub fn parse_family(text: &str) -> Option<GroupFamily> {
    let t = text.trim();
    if let Some(m) = t.strip_prefix('S').or_else(|| t.strip_prefix('s')) {
        return m
            .parse()
            .ok()
            .map(|degree| GroupFamily::Symmetric { degree });
    }
    let upper = t.to_ascii_uppercase();
    let inner = upper.strip_prefix("GL2(")?.strip_suffix(')')?;
    inner.parse().ok().map(|p| GroupFamily::Gl2 { p })
}

enum FamilyGroup {
    Symmetric(Arc<SymmetricGroup>),
    Gl2(Arc<GeneralLinear2>),
}

impl FamilyGroup {
    fn build(family: &GroupFamily) -> Result<Self> {
        Ok(match family {
            GroupFamily::Symmetric { degree } => {
                FamilyGroup::Symmetric(Arc::new(SymmetricGroup::new(*degree)?))
            }
            GroupFamily::Gl2 { p } => FamilyGroup::Gl2(Arc::new(GeneralLinear2::new(*p)?)),
        })
    }

    fn group(&self) -> Arc<dyn FiniteGroup> {
        match self {
            FamilyGroup::Symmetric(g) => g.clone(),
            FamilyGroup::Gl2(g) => g.clone(),
        }
    }

    fn standard_generators(&self) -> Vec<Element> {
        match self {
            FamilyGroup::Symmetric(g) => g.standard_generators(),
            FamilyGroup::Gl2(g) => g.standard_generators(),
        }
    }

    /// The m-cycle `(1 2 ... m)` or the transvection `[[1,1],[0,1]]`.
    fn default_base(&self) -> Element {
        match self {
            FamilyGroup::Symmetric(g) => g
                .standard_generators()
                .pop()
                .expect("symmetric group has generators"),
            FamilyGroup::Gl2(g) => g.matrix([1, 1, 0, 1]).expect("transvection is invertible"),
        }
    }

    fn base(&self, base: &Option<String>) -> Result<Element> {
        match base {
            Some(text) => self.group().decode_hex(text),
            None => Ok(self.default_base()),
        }
    }

    fn subgroup(&self, spec: Option<&SubgroupSpec>) -> Result<Arc<GeneratedSubgroup>> {
        let group = self.group();
        let decode_all = |items: &[String]| {
            items
                .iter()
                .map(|t| group.decode_hex(t))
                .collect::<Result<Vec<_>>>()
        };
        let subgroup = match spec {
            None => GeneratedSubgroup::from_generators(group.clone(), &self.standard_generators())?,
            Some(SubgroupSpec::Generators(gens)) => {
                GeneratedSubgroup::from_generators(group.clone(), &decode_all(gens)?)?
            }
            Some(SubgroupSpec::Elements(elements)) => {
                GeneratedSubgroup::from_elements(group.clone(), &decode_all(elements)?)?
            }
        };
        Ok(Arc::new(subgroup))
    }

    fn endomorphism(&self, spec: &EndomorphismSpec) -> Result<Endomorphism> {
        let group = self.group();
        match (spec, self) {
            (EndomorphismSpec::Identity, _) => Endomorphism::identity(group),
            (EndomorphismSpec::TransposeInverse, FamilyGroup::Gl2(gl)) => {
                let generators = gl.standard_generators();
                let images = generators
                    .iter()
                    .map(|g| gl.transpose_inverse(g))
                    .collect::<Result<Vec<_>>>()?;
                Endomorphism::from_generator_images(group, &generators, &images)
            }
            (EndomorphismSpec::TransposeInverse, FamilyGroup::Symmetric(_)) => Err(
                AlgebraError::InvalidParams("transpose_inverse needs a matrix group".into()),
            ),
            (EndomorphismSpec::GeneratorImages { generators, images }, _) => {
                let decode = |items: &[String]| {
                    items
                        .iter()
                        .map(|t| group.decode_hex(t))
                        .collect::<Result<Vec<_>>>()
                };
                Endomorphism::from_generator_images(
                    group.clone(),
                    &decode(generators)?,
                    &decode(images)?,
                )
            }
        }
    }
}

/// Builds and validates a platform. The result has passed a sampled check of
/// both action axioms.
pub fn make_platform(descriptor: &PlatformDescriptor) -> Result<Platform> {
    let kind = descriptor.kind();
    let platform = match descriptor {
        PlatformDescriptor::BdModp { p, g, q } => {
            let target = Arc::new(PowerSubgroup::new(*p, *g, *q)?);
            let units = Arc::new(UnitsMod::new(*q)?);
            let base = target.generator();
            Platform::new(
                kind,
                units.clone(),
                target.clone(),
                base,
                ActionMap::Power(target, units),
                descriptor.clone(),
            )?
        }
        PlatformDescriptor::Conjugation {
            group,
            subgroup,
            base,
        } => {
            let family = FamilyGroup::build(group)?;
            let acting = Arc::new(OppositeGroup::new(family.subgroup(subgroup.as_ref())?));
            Platform::new(
                kind,
                acting,
                family.group(),
                family.base(base)?,
                ActionMap::Conjugation,
                descriptor.clone(),
            )?
        }
        PlatformDescriptor::TwistedConjugacy {
            group,
            subgroup,
            endomorphism,
            base,
        } => {
            let family = FamilyGroup::build(group)?;
            let acting = Arc::new(OppositeGroup::new(family.subgroup(subgroup.as_ref())?));
            let endo = Arc::new(family.endomorphism(endomorphism)?);
            Platform::new(
                kind,
                acting,
                family.group(),
                family.base(base)?,
                ActionMap::Twisted(endo),
                descriptor.clone(),
            )?
        }
        PlatformDescriptor::DoubleCoset {
            group,
            left,
            right,
            base,
        } => {
            let family = FamilyGroup::build(group)?;
            let double = Arc::new(DoubleAction::new(
                family.group(),
                family.subgroup(Some(left))?,
                family.subgroup(Some(right))?,
            ));
            let acting: Arc<ProductGroup> = double.product().clone();
            Platform::new(
                kind,
                acting,
                family.group(),
                family.base(base)?,
                ActionMap::DoubleCoset(double),
                descriptor.clone(),
            )?
        }
    };
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    platform.check_action_axioms(&mut rng, 0, CONSTRUCTION_AXIOM_SAMPLES)?;
    Ok(platform)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors() {
        assert_eq!(
            PlatformDescriptor::from_selector("bd_modp(23, 2, 11)").unwrap(),
            PlatformDescriptor::bd_modp(23, 2, 11)
        );
        assert_eq!(
            PlatformDescriptor::from_selector("bd_modp").unwrap(),
            PlatformDescriptor::bd_modp(23, 2, 11)
        );
        assert_eq!(
            PlatformDescriptor::from_selector("S4").unwrap(),
            PlatformDescriptor::symmetric_conjugation(4)
        );
        assert_eq!(
            PlatformDescriptor::from_selector("conjugation(S5)").unwrap(),
            PlatformDescriptor::symmetric_conjugation(5)
        );
        assert_eq!(
            PlatformDescriptor::from_selector("conjugation(GL2(5))").unwrap(),
            PlatformDescriptor::gl2_conjugation(5)
        );
        assert_eq!(
            PlatformDescriptor::from_selector("twisted_conjugacy(GL2(3))").unwrap(),
            PlatformDescriptor::gl2_twisted(3)
        );
        assert_eq!(
            PlatformDescriptor::from_selector("double_coset").unwrap(),
            PlatformDescriptor::default_double_coset()
        );
        for bad in [
            "",
            "bd_modp(1,2)",
            "conjugation(Q8)",
            "twisted_conjugacy(S4)",
            "foo(",
            "GL2(x)",
        ] {
            assert!(PlatformDescriptor::from_selector(bad).is_err(), "{bad}");
        }
    }

    fn s3_conjugation() -> Platform {
        make_platform(&PlatformDescriptor::symmetric_conjugation(3)).unwrap()
    }

    fn s3_elem(platform: &Platform, cycles: &str) -> Element {
        let images = crate::algebra::parse_cycles(cycles, 3).unwrap();
        platform.target().decode(&images).unwrap()
    }

    fn s3_acting(platform: &Platform, cycles: &str) -> Element {
        let images = crate::algebra::parse_cycles(cycles, 3).unwrap();
        platform.acting().decode(&images).unwrap()
    }

    // brute-force conjugation h^-1 x h on one-line images, independent of the group code
    fn conjugate_by_hand(h: &[u8], x: &[u8]) -> Vec<u8> {
        let apply = |p: &[u8], k: u8| p[usize::from(k) - 1];
        let inverse = |p: &[u8]| {
            let mut inv = vec![0u8; p.len()];
            for (k, &v) in p.iter().enumerate() {
                inv[usize::from(v) - 1] = k as u8 + 1;
            }
            inv
        };
        let h_inv = inverse(h);
        (1..=x.len() as u8)
            .map(|k| apply(&h_inv, apply(x, apply(h, k))))
            .collect()
    }

    #[test]
    fn conjugation_in_s3() {
        let platform = s3_conjugation();
        let h = s3_acting(&platform, "(1 2)");
        let x = s3_elem(&platform, "(1 2 3)");
        let expected = conjugate_by_hand(h.as_bytes(), x.as_bytes());
        let got = platform.act(&h, &x).unwrap();
        assert_eq!(got.as_bytes(), expected.as_slice());
        assert_eq!(got, s3_elem(&platform, "(1 3 2)"));
    }

    #[test]
    fn identity_fixes_base() {
        for descriptor in [
            PlatformDescriptor::bd_modp(23, 2, 11),
            PlatformDescriptor::symmetric_conjugation(4),
            PlatformDescriptor::gl2_twisted(5),
            PlatformDescriptor::default_double_coset(),
        ] {
            let platform = make_platform(&descriptor).unwrap();
            let e = platform.acting().identity();
            assert_eq!(&platform.act_base(&e).unwrap(), platform.base());
        }
    }

    #[test]
    fn bd_modp_power() {
        let platform = make_platform(&PlatformDescriptor::bd_modp(23, 2, 11)).unwrap();
        let h = platform.units_group().unwrap().wrap(3);
        let got = platform.act_base(&h).unwrap();
        assert_eq!(got.as_bytes(), &[8]);
        assert!(platform.is_commutative());
    }

    #[test]
    fn bd_modp_parameter_errors() {
        assert_eq!(
            make_platform(&PlatformDescriptor::bd_modp(21, 2, 11)).unwrap_err(),
            AlgebraError::NotPrime(21)
        );
        assert!(matches!(
            make_platform(&PlatformDescriptor::bd_modp(23, 2, 10)),
            Err(AlgebraError::WrongOrder { .. })
        ));
    }

    #[test]
    fn orbit_and_stabilizer_in_s3() {
        let platform = s3_conjugation();
        let x = s3_elem(&platform, "(1 2)");
        let mut orbit = platform.orbit(&x).unwrap();
        orbit.sort();
        let mut expected: Vec<Element> = ["(1 2)", "(1 3)", "(2 3)"]
            .iter()
            .map(|c| s3_elem(&platform, c))
            .collect();
        expected.sort();
        assert_eq!(orbit, expected);
        let mut stab = platform.stabilizer(&x).unwrap();
        stab.sort();
        let mut expected = vec![s3_acting(&platform, "()"), s3_acting(&platform, "(1 2)")];
        expected.sort();
        assert_eq!(stab, expected);
        let identity = platform.target().identity();
        assert_eq!(platform.orbit(&identity).unwrap(), vec![identity]);
    }

    #[test]
    fn full_orbit_means_trivial_stabilizer() {
        // H = <(1 2)>, J = <(1 2 3)>: the double coset H·x·J is all of S3
        let descriptor = PlatformDescriptor::DoubleCoset {
            group: GroupFamily::Symmetric { degree: 3 },
            left: SubgroupSpec::Generators(vec!["020103".into()]),
            right: SubgroupSpec::Generators(vec!["020301".into()]),
            base: None,
        };
        let platform = make_platform(&descriptor).unwrap();
        assert_eq!(platform.acting().order(), 6);
        let report = platform.orbit_stabilizer(platform.base()).unwrap();
        assert_eq!(report.orbit.len(), 6);
        assert_eq!(report.stabilizer, vec![platform.acting().identity()]);
    }

    #[test]
    fn bd_modp_orbit_and_stabilizer() {
        let platform = make_platform(&PlatformDescriptor::bd_modp(23, 2, 11)).unwrap();
        let g = platform.base().clone();
        let orbit = platform.orbit(&g).unwrap();
        // exponents 1..=10 of Z11*; 2^0 = 1 is not reachable from a unit exponent
        let expected: Vec<u8> = (1..=10u64)
            .map(|k| crate::algebra::modp::pow_mod(2, k, 23) as u8)
            .collect();
        let mut got: Vec<u8> = orbit.iter().map(|e| e.as_bytes()[0]).collect();
        let mut expected_sorted = expected.clone();
        got.sort();
        expected_sorted.sort();
        assert_eq!(got, expected_sorted);
        let stab = platform.stabilizer(&g).unwrap();
        assert_eq!(stab, vec![platform.acting().identity()]);
    }

    #[test]
    fn twisted_with_identity_matches_conjugation() {
        let plain = make_platform(&PlatformDescriptor::gl2_conjugation(3)).unwrap();
        let twisted = make_platform(&PlatformDescriptor::TwistedConjugacy {
            group: GroupFamily::Gl2 { p: 3 },
            subgroup: None,
            endomorphism: EndomorphismSpec::Identity,
            base: None,
        })
        .unwrap();
        let hs = plain.acting().elements().unwrap();
        let xs = plain.target().elements().unwrap();
        for (h, h_twisted) in hs.iter().zip(twisted.acting().elements().unwrap()) {
            for x in &xs {
                assert_eq!(
                    plain.act(h, x).unwrap().as_bytes(),
                    twisted.act(&h_twisted, x).unwrap().as_bytes()
                );
            }
        }
    }

    #[test]
    fn non_homomorphic_endomorphism_rejected() {
        // sending (1 2) -> (1 2 3) cannot extend: (1 2) has order 2
        let descriptor = PlatformDescriptor::TwistedConjugacy {
            group: GroupFamily::Symmetric { degree: 3 },
            subgroup: None,
            endomorphism: EndomorphismSpec::GeneratorImages {
                generators: vec!["020103".into(), "020301".into()],
                images: vec!["020301".into(), "020301".into()],
            },
            base: None,
        };
        assert!(matches!(
            make_platform(&descriptor),
            Err(AlgebraError::NotHomomorphism(_))
        ));
    }

    #[test]
    fn unclosed_subgroup_rejected() {
        let descriptor = PlatformDescriptor::Conjugation {
            group: GroupFamily::Symmetric { degree: 3 },
            subgroup: Some(SubgroupSpec::Elements(vec![
                "010203".into(),
                "020301".into(),
            ])),
            base: None,
        };
        assert_eq!(
            make_platform(&descriptor).unwrap_err(),
            AlgebraError::NotClosed
        );
    }

    #[test]
    fn foreign_elements_rejected() {
        let s4 = make_platform(&PlatformDescriptor::symmetric_conjugation(4)).unwrap();
        let s3 = s3_conjugation();
        let h = s3.acting().identity();
        assert!(matches!(
            s4.act(&h, s4.base()),
            Err(AlgebraError::ForeignElement { .. })
        ));
        // G-elements are not H-elements even when the bytes agree
        let g_as_h = s4.base().clone();
        assert!(matches!(
            s4.act(&g_as_h, s4.base()),
            Err(AlgebraError::ForeignElement { .. })
        ));
    }

    #[test]
    fn descriptor_json_round_trip() {
        for descriptor in [
            PlatformDescriptor::bd_modp(23, 2, 11),
            PlatformDescriptor::gl2_twisted(5),
            PlatformDescriptor::default_double_coset(),
        ] {
            let json = descriptor.to_json();
            assert_eq!(PlatformDescriptor::from_json(&json).unwrap(), descriptor);
        }
        let parsed =
            PlatformDescriptor::from_json(r#"{"kind":"bd_modp","p":23,"g":2,"q":11}"#).unwrap();
        assert_eq!(parsed, PlatformDescriptor::bd_modp(23, 2, 11));
    }
}
