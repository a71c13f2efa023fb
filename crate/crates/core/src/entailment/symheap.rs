use std::collections::BTreeSet;
use std::fmt;

use crate::arith::PureSet;
use crate::formula::{expand_chains, free_vars_expr, substitute_expr, Formula, PureAtom, Subst, SymExpr};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Spatial {
    PointsTo(SymExpr, SymExpr),
    Pred(String, Vec<SymExpr>),
}

impl Spatial {
    pub fn substitute(&self, map: &Subst) -> Spatial {
        match self {
            Spatial::PointsTo(l, v) => Spatial::PointsTo(substitute_expr(l, map), substitute_expr(v, map)),
            Spatial::Pred(n, args) => Spatial::Pred(n.clone(), args.iter().map(|a| substitute_expr(a, map)).collect()),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Spatial::PointsTo(l, v) => {
                free_vars_expr(l, out);
                free_vars_expr(v, out);
            }
            Spatial::Pred(_, args) => args.iter().for_each(|a| free_vars_expr(a, out)),
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Spatial::PointsTo(l, v) => Formula::pto(l.clone(), v.clone()),
            Spatial::Pred(n, a) => Formula::pred(n.clone(), a.clone()),
        }
    }
}

impl fmt::Display for Spatial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// `exists xs. pure && (spatial_1 * ... * spatial_n [* true])`, where the pure
/// part constrains values only and does not describe heap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymHeap {
    pub pure: PureSet,
    pub spatial: Vec<Spatial>,
    pub exists: BTreeSet<String>,
    /// Set when the heap may contain further unspecified cells (`true`).
    pub imprecise: bool,
}

impl SymHeap {
    pub fn emp() -> Self {
        SymHeap::default()
    }

    pub fn with_spatial(spatial: Vec<Spatial>) -> Self {
        SymHeap { spatial, ..Default::default() }
    }

    pub fn is_emp(&self) -> bool {
        self.spatial.is_empty() && !self.imprecise
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = self.pure.vars();
        self.spatial.iter().for_each(|s| s.vars(&mut out));
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut v = self.vars();
        v.retain(|x| !self.exists.contains(x));
        v
    }

    pub fn substitute(&self, map: &Subst) -> SymHeap {
        SymHeap {
            pure: PureSet::from_atoms(
                self.pure.atoms().iter().map(|a| PureAtom::new(a.op, substitute_expr(&a.lhs, map), substitute_expr(&a.rhs, map))),
            ),
            spatial: self.spatial.iter().map(|s| s.substitute(map)).collect(),
            exists: self.exists.clone(),
            imprecise: self.imprecise,
        }
    }

    /// `self * other`.
    pub fn star(&self, other: &SymHeap) -> SymHeap {
        let mut out = self.clone();
        out.pure.extend(&other.pure);
        out.spatial.extend(other.spatial.iter().cloned());
        out.exists.extend(other.exists.iter().cloned());
        out.imprecise |= other.imprecise;
        out
    }

    /// Back to a formula: `exists xs. (pure atoms * spatial atoms [* true])`.
    pub fn to_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self.pure.atoms().iter().map(|a| Formula::Pure(a.clone())).collect();
        parts.extend(self.spatial.iter().map(Spatial::to_formula));
        if self.imprecise {
            parts.push(Formula::True);
        }
        let mut f = Formula::star_all(parts);
        for x in self.exists.iter().rev() {
            f = Formula::exists(x.clone(), f);
        }
        f
    }
}

impl fmt::Display for SymHeap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exists.is_empty() {
            let xs: Vec<&str> = self.exists.iter().map(String::as_str).collect();
            write!(f, "exists {}. ", xs.join(", "))?;
        }
        let mut parts: Vec<String> = Vec::new();
        if !self.pure.is_empty() {
            parts.push(self.pure.to_string());
        }
        let mut spatial: Vec<String> = self.spatial.iter().map(|s| s.to_string()).collect();
        if self.imprecise {
            spatial.push("true".into());
        }
        if spatial.is_empty() {
            spatial.push("emp".into());
        }
        parts.push(spatial.join(" * "));
        write!(f, "{}", parts.join(" : "))
    }
}

/// Whether a conversion may over- or under-approximate when a formula has
/// no exact symbolic-heap form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Result models include all models of the formula (antecedents).
    Over,
    /// Result models are included in the formula's models (consequents).
    Under,
}

/// Fresh-name source for bound variables.
#[derive(Debug, Default)]
pub struct Fresh {
    next: usize,
}

impl Fresh {
    /// A source whose names cannot collide with `#`-suffixed names in `used`.
    pub fn avoiding<'a>(used: impl IntoIterator<Item = &'a String>) -> Self {
        let next = used
            .into_iter()
            .filter_map(|n| n.rsplit_once('#').and_then(|(_, k)| k.parse::<usize>().ok()))
            .map(|k| k + 1)
            .max()
            .unwrap_or(0);
        Fresh { next }
    }

    pub fn name(&mut self, base: &str) -> String {
        let base = base.split('#').next().unwrap_or(base);
        let n = self.next;
        self.next += 1;
        format!("{base}#{n}")
    }
}

/// Disjunctive normal form of `f` as symbolic heaps. Existentials are renamed
/// apart. Conjunctions of two heap-describing formulas have no exact form
/// and are approximated according to `pol`.
pub fn to_symheaps(f: &Formula, pol: Polarity, fresh: &mut Fresh) -> Vec<SymHeap> {
    convert(&expand_chains(f), pol, fresh)
}

fn convert(f: &Formula, pol: Polarity, fresh: &mut Fresh) -> Vec<SymHeap> {
    match f {
        Formula::Emp => vec![SymHeap::emp()],
        Formula::True => vec![SymHeap { imprecise: true, ..Default::default() }],
        Formula::False => vec![],
        Formula::Pure(a) => vec![SymHeap { pure: PureSet::from_atoms([a.clone()]), ..Default::default() }],
        Formula::PointsTo(l, v) => vec![SymHeap::with_spatial(vec![Spatial::PointsTo(l.clone(), v.clone())])],
        Formula::Pred(n, a) => vec![SymHeap::with_spatial(vec![Spatial::Pred(n.clone(), a.clone())])],
        Formula::Chain(..) => convert(&expand_chains(f), pol, fresh),
        Formula::Star(a, b) => {
            let left = convert(a, pol, fresh);
            let right = convert(b, pol, fresh);
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    out.push(l.star(r));
                }
            }
            out
        }
        Formula::Or(a, b) => {
            let mut out = convert(a, pol, fresh);
            out.extend(convert(b, pol, fresh));
            out
        }
        Formula::And(a, b) => {
            let left = convert(a, pol, fresh);
            let right = convert(b, pol, fresh);
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    if let Some(h) = conjoin(l, r, pol) {
                        out.push(h);
                    }
                }
            }
            out
        }
        Formula::Exists(x, body) => {
            let y = fresh.name(x);
            let map: Subst = [(x.clone(), SymExpr::Var(y.clone()))].into();
            let body = crate::formula::substitute(body, &map);
            convert(&body, pol, fresh)
                .into_iter()
                .map(|mut h| {
                    h.exists.insert(y.clone());
                    h
                })
                .collect()
        }
    }
}

/// Both heaps describe the same cells.
fn conjoin(l: &SymHeap, r: &SymHeap, pol: Polarity) -> Option<SymHeap> {
    let merge_pure = |base: &SymHeap, other: &SymHeap| {
        let mut h = base.clone();
        h.pure.extend(&other.pure);
        h.exists.extend(other.exists.iter().cloned());
        h
    };
    // `true` with no atoms: no constraint.
    if l.imprecise && l.spatial.is_empty() {
        return Some(merge_pure(r, l)).map(|mut h| {
            h.imprecise = r.imprecise;
            h
        });
    }
    if r.imprecise && r.spatial.is_empty() {
        return conjoin(r, l, pol);
    }
    match (l.spatial.is_empty(), r.spatial.is_empty()) {
        // Both empty heaps.
        (true, true) => Some(merge_pure(l, r)),
        // One side forces an empty heap: points-to atoms cannot hold there.
        (true, false) | (false, true) => {
            let (empty, other) = if l.spatial.is_empty() { (l, r) } else { (r, l) };
            if other.spatial.iter().any(|s| matches!(s, Spatial::PointsTo(..))) {
                return None;
            }
            // Only predicates remain; they would have to hold on the empty heap.
            match pol {
                Pol::Over => Some(merge_pure(empty, other)),
                Pol::Under => None,
            }
        }
        (false, false) => {
            if l.spatial == r.spatial && l.imprecise == r.imprecise {
                return Some(merge_pure(l, r));
            }
            match pol {
                Pol::Over => Some(merge_pure(l, r)),
                Pol::Under => None,
            }
        }
    }
}

use Polarity as Pol;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_assertion;

    fn dnf(s: &str, pol: Polarity) -> Vec<SymHeap> {
        to_symheaps(&parse_assertion(s).unwrap(), pol, &mut Fresh::default())
    }

    #[test]
    fn star_distributes_over_or() {
        let hs = dnf("(x->1 || y->2) * z->3", Polarity::Over);
        assert_eq!(hs.len(), 2);
        assert!(hs.iter().all(|h| h.spatial.len() == 2));
    }

    #[test]
    fn pure_conjunction_forces_empty_heap() {
        assert_eq!(dnf("x == 1 && y->2", Polarity::Over).len(), 0);
        let hs = dnf("x == 1 && emp", Polarity::Under);
        assert_eq!(hs.len(), 1);
        assert!(hs[0].spatial.is_empty() && !hs[0].pure.is_empty());
        assert_eq!(dnf("x == 1 && list(x, y)", Polarity::Under).len(), 0);
        assert_eq!(dnf("x == 1 && list(x, y)", Polarity::Over)[0].spatial.len(), 0);
    }

    #[test]
    fn chains_and_exists() {
        let hs = dnf("x->a,b", Polarity::Under);
        assert_eq!(hs[0].spatial.len(), 3);
        assert_eq!(hs[0].exists.len(), 2);
        let hs = dnf("x->1 && true", Polarity::Under);
        assert_eq!(hs[0].spatial.len(), 1);
        assert!(!hs[0].imprecise);
    }
}
