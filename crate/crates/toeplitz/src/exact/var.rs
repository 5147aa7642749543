use once_cell::sync::Lazy;
use parking_lot::Mutex;
use std::collections::HashMap;
use std::fmt;

/// Variable families. The discriminant is the high byte of a [`VarId`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Family {
    X = 0,
    Y,
    /// Out-of-window x symbol.
    XO,
    /// Out-of-window y symbol.
    YO,
    A,
    B,
    APlus,
    AMinus,
    ANear,
    U,
    /// Time-shifted coupling `U_i`.
    UShift,
    Alpha,
    Beta,
    /// Jet perturbation of `a_k`.
    DA,
    /// Jet perturbation of `b_k`.
    DB,
    Lambda,
    T,
    R,
    Unknown,
    Eps,
    Named,
}

const OFFSET: i64 = 1 << 23;
const TIME_JET_SITE: i64 = 100_000;

/// Packed variable identifier: family byte plus a signed 24-bit index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct VarId(u32);

static NAMES: Lazy<Mutex<(Vec<String>, HashMap<String, u32>)>> =
    Lazy::new(|| Mutex::new((Vec::new(), HashMap::new())));

impl VarId {
    pub fn new(f: Family, idx: i64) -> VarId {
        assert!((-OFFSET..OFFSET).contains(&idx), "index out of range");
        VarId(((f as u32) << 24) | ((idx + OFFSET) as u32))
    }
    pub fn family(self) -> Family {
        let b = (self.0 >> 24) as u8;
        FAMILIES[b as usize]
    }
    pub fn index(self) -> i64 {
        (self.0 & 0x00ff_ffff) as i64 - OFFSET
    }
    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn x(k: i64) -> VarId {
        VarId::new(Family::X, k)
    }
    pub fn y(k: i64) -> VarId {
        VarId::new(Family::Y, k)
    }
    pub fn a(k: i64) -> VarId {
        VarId::new(Family::A, k)
    }
    pub fn b(k: i64) -> VarId {
        VarId::new(Family::B, k)
    }
    pub fn u(i: i64) -> VarId {
        VarId::new(Family::U, i)
    }
    pub fn ushift(i: i64) -> VarId {
        VarId::new(Family::UShift, i)
    }
    pub fn alpha(k: i64) -> VarId {
        VarId::new(Family::Alpha, k)
    }
    pub fn beta(k: i64) -> VarId {
        VarId::new(Family::Beta, k)
    }
    pub fn a_plus() -> VarId {
        VarId::new(Family::APlus, 0)
    }
    pub fn a_minus() -> VarId {
        VarId::new(Family::AMinus, 0)
    }
    pub fn a_near() -> VarId {
        VarId::new(Family::ANear, 0)
    }
    pub fn eps() -> VarId {
        VarId::new(Family::Eps, 0)
    }
    pub fn lambda() -> VarId {
        VarId::new(Family::Lambda, 0)
    }
    pub fn t() -> VarId {
        VarId::new(Family::T, 0)
    }
    pub fn r() -> VarId {
        VarId::new(Family::R, 0)
    }
    pub fn unknown(i: i64) -> VarId {
        VarId::new(Family::Unknown, i)
    }
    /// Jet variable for `a_k` (or `b_k` when `y` is set).
    pub fn jet(k: i64, y: bool) -> VarId {
        VarId::new(if y { Family::DB } else { Family::DA }, k)
    }
    /// Jet perturbation of the parameter at `site` with truncation `cap`:
    /// monomials of total jet degree `>= cap` vanish.
    pub fn jet_at(site: i64, cap: u32, y: bool) -> VarId {
        assert!(cap < 64);
        VarId::jet(site * 64 + cap as i64, y)
    }
    /// Jet standing for the time shift of the couplings.
    pub fn time_jet(cap: u32) -> VarId {
        VarId::jet_at(TIME_JET_SITE, cap, false)
    }
    /// Site of a jet variable.
    pub fn jet_site(self) -> i64 {
        self.index().div_euclid(64)
    }
    pub fn is_time_jet(self) -> bool {
        self.family() == Family::DA && self.jet_site() == TIME_JET_SITE
    }
    /// Interned named symbol.
    pub fn named(name: &str) -> VarId {
        let mut g = NAMES.lock();
        if let Some(&i) = g.1.get(name) {
            return VarId::new(Family::Named, i as i64);
        }
        let i = g.0.len() as u32;
        g.0.push(name.to_string());
        g.1.insert(name.to_string(), i);
        VarId::new(Family::Named, i as i64)
    }

    pub fn is_jet(self) -> bool {
        matches!(self.family(), Family::DA | Family::DB)
    }
    pub fn is_eps(self) -> bool {
        self.family() == Family::Eps
    }

    /// Shift the site index of lattice-indexed families by `d`.
    pub fn shift_site(self, d: i64) -> VarId {
        match self.family() {
            Family::X | Family::Y | Family::XO | Family::YO | Family::A | Family::B | Family::Alpha
            | Family::Beta => VarId::new(self.family(), self.index() + d),
            Family::DA | Family::DB if !self.is_time_jet() => VarId::new(self.family(), self.index() + 64 * d),
            _ => self,
        }
    }

    /// Parse a variable name as produced by `Display`.
    pub fn parse(s: &str) -> Option<VarId> {
        let s = s.trim();
        match s {
            "a_p" => return Some(VarId::a_plus()),
            "a_m" => return Some(VarId::a_minus()),
            "a" => return Some(VarId::a_near()),
            "eps" => return Some(VarId::eps()),
            "lambda" => return Some(VarId::lambda()),
            "t" => return Some(VarId::t()),
            "r" => return Some(VarId::r()),
            _ => {}
        }
        let (p, i) = s.split_once('_')?;
        let idx: i64 = i.parse().ok()?;
        let f = match p {
            "x" => Family::X,
            "y" => Family::Y,
            "xo" => Family::XO,
            "yo" => Family::YO,
            "a" => Family::A,
            "b" => Family::B,
            "u" => Family::U,
            "U" => Family::UShift,
            "alpha" => Family::Alpha,
            "beta" => Family::Beta,
            "unk" => Family::Unknown,
            _ => return None,
        };
        Some(VarId::new(f, idx))
    }
}

const FAMILIES: [Family; 21] = [
    Family::X,
    Family::Y,
    Family::XO,
    Family::YO,
    Family::A,
    Family::B,
    Family::APlus,
    Family::AMinus,
    Family::ANear,
    Family::U,
    Family::UShift,
    Family::Alpha,
    Family::Beta,
    Family::DA,
    Family::DB,
    Family::Lambda,
    Family::T,
    Family::R,
    Family::Unknown,
    Family::Eps,
    Family::Named,
];

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.index();
        match self.family() {
            Family::X => write!(f, "x_{i}"),
            Family::Y => write!(f, "y_{i}"),
            Family::XO => write!(f, "xo_{i}"),
            Family::YO => write!(f, "yo_{i}"),
            Family::A => write!(f, "a_{i}"),
            Family::B => write!(f, "b_{i}"),
            Family::APlus => write!(f, "a_p"),
            Family::AMinus => write!(f, "a_m"),
            Family::ANear => write!(f, "a"),
            Family::U => write!(f, "u_{i}"),
            Family::UShift => write!(f, "U_{i}"),
            Family::Alpha => write!(f, "alpha_{i}"),
            Family::Beta => write!(f, "beta_{i}"),
            Family::DA if self.is_time_jet() => write!(f, "ds"),
            Family::DA => write!(f, "da_{}", self.jet_site()),
            Family::DB => write!(f, "db_{}", self.jet_site()),
            Family::Lambda => write!(f, "lambda"),
            Family::T => write!(f, "t"),
            Family::R => write!(f, "r"),
            Family::Unknown => write!(f, "unk_{i}"),
            Family::Eps => write!(f, "eps"),
            Family::Named => write!(f, "{}", NAMES.lock().0[i as usize]),
        }
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        for v in [VarId::x(-3), VarId::y(7), VarId::u(-2), VarId::a_plus(), VarId::eps(), VarId::alpha(-4)] {
            assert_eq!(VarId::parse(&v.to_string()), Some(v));
            assert_eq!(v.family(), VarId::new(v.family(), v.index()).family());
        }
        assert_eq!(VarId::x(2).shift_site(3), VarId::x(5));
        assert_eq!(VarId::jet_at(2, 5, false).shift_site(-3), VarId::jet_at(-1, 5, false));
        assert_eq!(VarId::time_jet(4).shift_site(2), VarId::time_jet(4));
        assert_eq!(VarId::named("foo"), VarId::named("foo"));
        assert_eq!(VarId::jet_at(-1, 8, false).to_string(), "da_-1");
    }
}
