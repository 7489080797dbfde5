//! The two-point sensitivity lattice and the security type grammar, with
//! subtyping, level stamping, flatness and partial joins/meets.

use std::fmt;

/// Sensitivity label. `L` is public, `H` is secret; `L ⊑ H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    L,
    H,
}

impl Label {
    pub fn flows_to(self, other: Label) -> bool {
        self <= other
    }

    pub fn join(self, other: Label) -> Label {
        self.max(other)
    }

    pub fn meet(self, other: Label) -> Label {
        self.min(other)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::L => write!(f, "L"),
            Label::H => write!(f, "H"),
        }
    }
}

/// Security types: `unit | int^χ | bool^χ | τ × τ' | ref τ | (τ → τ')^χ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SecType {
    Unit,
    Int(Label),
    Bool(Label),
    Prod(Box<SecType>, Box<SecType>),
    Ref(Box<SecType>),
    Arrow(Box<SecType>, Box<SecType>, Label),
}

impl SecType {
    pub fn prod(a: SecType, b: SecType) -> SecType {
        SecType::Prod(Box::new(a), Box::new(b))
    }

    pub fn reference(t: SecType) -> SecType {
        SecType::Ref(Box::new(t))
    }

    pub fn arrow(a: SecType, b: SecType, l: Label) -> SecType {
        SecType::Arrow(Box::new(a), Box::new(b), l)
    }
}

/// Decides the subtype relation. Base types are covariant in their label,
/// arrows are contravariant in the argument and covariant in result and
/// label, products go componentwise, and references admit reflexivity only.
pub fn subtype(t1: &SecType, t2: &SecType) -> bool {
    use SecType::*;
    match (t1, t2) {
        (Unit, Unit) => true,
        (Int(a), Int(b)) | (Bool(a), Bool(b)) => a.flows_to(*b),
        (Prod(a1, b1), Prod(a2, b2)) => subtype(a1, a2) && subtype(b1, b2),
        (Ref(a), Ref(b)) => a == b,
        (Arrow(a1, r1, l1), Arrow(a2, r2, l2)) => {
            l1.flows_to(*l2) && subtype(a2, a1) && subtype(r1, r2)
        }
        _ => false,
    }
}

/// Level stamping `τ ⊔ ξ`: raises the outer label of base and arrow types,
/// distributes over products, and is the identity on `unit` and `ref`.
pub fn stamp(t: &SecType, xi: Label) -> SecType {
    use SecType::*;
    match t {
        Unit => Unit,
        Int(l) => Int(l.join(xi)),
        Bool(l) => Bool(l.join(xi)),
        Prod(a, b) => SecType::prod(stamp(a, xi), stamp(b, xi)),
        Ref(t) => Ref(t.clone()),
        Arrow(a, r, l) => Arrow(a.clone(), r.clone(), l.join(xi)),
    }
}

/// Flat types: `unit`, high ints, high bools, and products of flat types.
/// Function and reference types are never flat.
pub fn is_flat(t: &SecType) -> bool {
    use SecType::*;
    match t {
        Unit => true,
        Int(l) | Bool(l) => *l == Label::H,
        Prod(a, b) => is_flat(a) && is_flat(b),
        Ref(_) | Arrow(_, _, _) => false,
    }
}

/// Least upper bound under `subtype`, when it exists. Arrows meet their
/// arguments and join results and labels; references require equality.
pub fn join_type(t1: &SecType, t2: &SecType) -> Option<SecType> {
    use SecType::*;
    match (t1, t2) {
        (Unit, Unit) => Some(Unit),
        (Int(a), Int(b)) => Some(Int(a.join(*b))),
        (Bool(a), Bool(b)) => Some(Bool(a.join(*b))),
        (Prod(a1, b1), Prod(a2, b2)) => {
            Some(SecType::prod(join_type(a1, a2)?, join_type(b1, b2)?))
        }
        (Ref(a), Ref(b)) => (a == b).then(|| Ref(a.clone())),
        (Arrow(a1, r1, l1), Arrow(a2, r2, l2)) => Some(SecType::arrow(
            meet_type(a1, a2)?,
            join_type(r1, r2)?,
            l1.join(*l2),
        )),
        _ => None,
    }
}

/// Greatest lower bound under `subtype`, when it exists. Dual to
/// [`join_type`].
pub fn meet_type(t1: &SecType, t2: &SecType) -> Option<SecType> {
    use SecType::*;
    match (t1, t2) {
        (Unit, Unit) => Some(Unit),
        (Int(a), Int(b)) => Some(Int(a.meet(*b))),
        (Bool(a), Bool(b)) => Some(Bool(a.meet(*b))),
        (Prod(a1, b1), Prod(a2, b2)) => {
            Some(SecType::prod(meet_type(a1, a2)?, meet_type(b1, b2)?))
        }
        (Ref(a), Ref(b)) => (a == b).then(|| Ref(a.clone())),
        (Arrow(a1, r1, l1), Arrow(a2, r2, l2)) => Some(SecType::arrow(
            join_type(a1, a2)?,
            meet_type(r1, r2)?,
            l1.meet(*l2),
        )),
        _ => None,
    }
}

impl fmt::Display for SecType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecType::Unit => write!(f, "unit"),
            SecType::Int(l) => write!(f, "int^{l}"),
            SecType::Bool(l) => write!(f, "bool^{l}"),
            SecType::Prod(a, b) => {
                write!(f, "{} * {}", ProdAtom(a), ProdAtom(b))
            }
            SecType::Ref(t) => write!(f, "ref {}", RefAtom(t)),
            SecType::Arrow(a, r, l) => write!(f, "({a} -> {r})^{l}"),
        }
    }
}

struct ProdAtom<'a>(&'a SecType);

impl fmt::Display for ProdAtom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SecType::Prod(_, _) => write!(f, "({})", self.0),
            _ => write!(f, "{}", self.0),
        }
    }
}

struct RefAtom<'a>(&'a SecType);

impl fmt::Display for RefAtom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SecType::Prod(_, _) => write!(f, "({})", self.0),
            _ => write!(f, "{}", self.0),
        }
    }
}

/// Enumerate all security types up to the given structural depth. Depth 1
/// yields the atoms; products, references and arrows add one level each.
pub fn enumerate_types(depth: u32) -> Vec<SecType> {
    use SecType::*;
    let mut tys = vec![Unit, Int(Label::L), Int(Label::H), Bool(Label::L), Bool(Label::H)];
    if depth <= 1 {
        return tys;
    }
    let inner = enumerate_types(depth - 1);
    for t in &inner {
        tys.push(SecType::reference(t.clone()));
    }
    for a in &inner {
        for b in &inner {
            tys.push(SecType::prod(a.clone(), b.clone()));
            tys.push(SecType::arrow(a.clone(), b.clone(), Label::L));
            tys.push(SecType::arrow(a.clone(), b.clone(), Label::H));
        }
    }
    tys.sort_by(|a, b| format!("{a}").cmp(&format!("{b}")));
    tys.dedup();
    tys
}

/// The label-erased shape of a type. Subtyping only relates types of equal
/// shape, which the exhaustive lattice checks exploit.
pub fn shape_key(t: &SecType) -> String {
    match t {
        SecType::Unit => "u".into(),
        SecType::Int(_) => "i".into(),
        SecType::Bool(_) => "b".into(),
        SecType::Prod(a, b) => format!("p({},{})", shape_key(a), shape_key(b)),
        SecType::Ref(t) => format!("r({})", shape_key(t)),
        SecType::Arrow(a, b, _) => format!("a({},{})", shape_key(a), shape_key(b)),
    }
}
