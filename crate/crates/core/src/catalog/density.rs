//! Sets of lower density at least `1 - 1/l`, restricted to eventually
//! periodic sets and checked on a finite window.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use itertools::Itertools;
use num_rational::Ratio;

use crate::bilayer::{nat_set, precondition, BilayerError, BilayerFn};
use crate::solver::TableTriple;
use crate::term::Term;

/// How many periods of `denerror(l)` are inspected.
pub const WINDOW_PERIODS: u64 = 3;

/// The set `prefix` followed by `period` repeated forever, as bit strings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeriodicSet {
    prefix: Vec<bool>,
    period: Vec<bool>,
}

impl PeriodicSet {
    pub fn new(prefix: Vec<bool>, period: Vec<bool>) -> Result<Self, BilayerError> {
        if period.is_empty() {
            return Err(precondition("the period of a periodic set must be nonempty"));
        }
        Ok(PeriodicSet { prefix, period })
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn period(&self) -> &[bool] {
        &self.period
    }

    pub fn contains(&self, x: u64) -> bool {
        let x = x as usize;
        match x.checked_sub(self.prefix.len()) {
            None => self.prefix[x],
            Some(i) => self.period[i % self.period.len()],
        }
    }

    /// Members below `n`.
    pub fn members_below(&self, n: u64) -> Vec<u64> {
        (0..n).filter(|&x| self.contains(x)).collect()
    }

    /// `(prefix bits, period bits)`.
    pub fn to_term(&self) -> Term {
        let bits = |b: &[bool]| Term::nat_tuple(b.iter().map(|&x| u64::from(x)));
        Term::tuple([bits(&self.prefix), bits(&self.period)])
    }

    pub fn from_term(t: &Term) -> Option<Self> {
        let [prefix, period] = t.as_tuple()? else {
            return None;
        };
        let bits = |t: &Term| {
            t.as_nat_tuple()?
                .into_iter()
                .map(|b| match b {
                    0 => Some(false),
                    1 => Some(true),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
        };
        PeriodicSet::new(bits(prefix)?, bits(period)?).ok()
    }

    /// `prefix;period`, e.g. `0000;1`.
    pub fn to_text(&self) -> String {
        let bits = |b: &[bool]| b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
        format!("{};{}", bits(&self.prefix), bits(&self.period))
    }

    pub fn parse_text(text: &str) -> Result<Self, BilayerError> {
        let syntax = |column: usize, message: &str| BilayerError::Syntax { line: 1, column, message: message.into() };
        let text = text.trim();
        let (prefix, period) = text.split_once(';').ok_or_else(|| syntax(1, "expected `prefix;period`"))?;
        let bits = |s: &str, offset: usize| {
            s.chars()
                .enumerate()
                .map(|(i, c)| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(syntax(offset + i + 1, "expected a bit")),
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let prefix = bits(prefix, 0)?;
        let period = bits(period, prefix.len() + 1)?;
        PeriodicSet::new(prefix, period).map_err(|_| syntax(text.len() + 1, "the period must be nonempty"))
    }
}

/// The lower asymptotic density: the fraction of ones in the period.
pub fn lower_density(a: &PeriodicSet) -> Ratio<u64> {
    let ones = a.period.iter().filter(|&&b| b).count() as u64;
    Ratio::new(ones, a.period.len() as u64)
}

/// Pick a member of a set of lower density at least `1 - 1/l`.
///
/// Secrets are the sets with empty prefix and a period of length `l` that
/// meet the density bound; cells list the members below `3l`.
pub fn denerror(l: u64) -> Result<BilayerFn, BilayerError> {
    if l < 2 {
        return Err(precondition(format!("denerror({l}) needs l >= 2")));
    }
    let bound = Ratio::new(l - 1, l);
    let window = WINDOW_PERIODS * l;
    let mut cells = Vec::new();
    for period in (0..l).map(|_| [false, true]).multi_cartesian_product() {
        let a = PeriodicSet::new(Vec::new(), period)?;
        if lower_density(&a) >= bound {
            let members = a.members_below(window).into_iter().map(Term::Nat).collect();
            cells.push((Term::Star, a.to_term(), members));
        }
    }
    BilayerFn::new(format!("denerror({l})"), cells, nat_set(0..window))
}

/// `error(1,l) <=1 denerror(l)`: the forbidden value `j` becomes the set
/// missing exactly the residue `j` mod `l`, and a member is reported as its
/// residue.
pub fn denerror_reduction(l: u64) -> Result<TableTriple, BilayerError> {
    if l < 2 {
        return Err(precondition(format!("denerror_reduction({l}) needs l >= 2")));
    }
    let mut triple = TableTriple::default();
    triple.inner.insert(Term::Star, Term::Star);
    for y in 0..WINDOW_PERIODS * l {
        triple.outer.insert((Term::Star, Term::Nat(y)), Term::Nat(y % l));
    }
    for j in 0..l {
        let a = PeriodicSet::new(Vec::new(), (0..l).map(|i| i != j).collect())?;
        triple.secret.insert((Term::Star, Term::set([j])), a.to_term());
    }
    Ok(triple)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::error;
    use crate::solver::{validate_triple, OneQuery};

    fn set(text: &str) -> PeriodicSet {
        PeriodicSet::parse_text(text).unwrap()
    }

    #[test]
    fn densities() {
        assert_eq!(lower_density(&set(";01")), Ratio::new(1, 2));
        assert_eq!(lower_density(&set("0110;1")), Ratio::new(1, 1));
        assert_eq!(lower_density(&set("0000;1")), Ratio::new(1, 1));
    }

    #[test]
    fn text_round_trips() {
        let a = set("10;011");
        assert_eq!(a.to_text(), "10;011");
        assert_eq!(PeriodicSet::from_term(&a.to_term()), Some(a.clone()));
        assert_eq!(a.members_below(8), alloc::vec![0, 3, 4, 6, 7]);
        assert!(PeriodicSet::parse_text("01;").is_err());
        assert!(PeriodicSet::parse_text("012;1").is_err());
    }

    #[test]
    fn reduction_examples() {
        let t = denerror_reduction(2).unwrap();
        let a = t.secret(&Term::Star, &Term::set([0])).unwrap();
        assert_eq!(PeriodicSet::from_term(&a).unwrap().to_text(), ";01");
        for l in 2..=4 {
            for j in 0..l {
                let a = PeriodicSet::from_term(&t_secret(l, j)).unwrap();
                assert_eq!(lower_density(&a), Ratio::new(l - 1, l));
                let residues: Vec<u64> = a.members_below(l).into_iter().map(|y| y % l).collect();
                assert_eq!(residues, (0..l).filter(|&i| i != j).collect::<Vec<_>>());
            }
        }
    }

    fn t_secret(l: u64, j: u64) -> Term {
        denerror_reduction(l).unwrap().secret(&Term::Star, &Term::set([j])).unwrap()
    }

    #[test]
    fn reduction_validates() {
        for l in 2..=4 {
            validate_triple(&error(1, l).unwrap(), &denerror(l).unwrap(), &denerror_reduction(l).unwrap()).unwrap();
        }
    }
}
