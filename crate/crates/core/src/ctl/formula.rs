use crate::model::RequestStatus;
use serde::{Deserialize, Serialize};
use std::fmt;

/// State variables an atom may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    /// Estimated (or realised) time of the queried pickup/drop-off event.
    #[serde(rename = "t_est")]
    TEst,
    #[serde(rename = "t_p")]
    TP,
    #[serde(rename = "t_d")]
    TD,
    #[serde(rename = "t_a")]
    TA,
    #[serde(rename = "v_c")]
    VC,
    #[serde(rename = "v_o")]
    VO,
    #[serde(rename = "v_tt")]
    VTT,
    #[serde(rename = "v_rt")]
    VRT,
    #[serde(rename = "v_ft")]
    VFT,
    #[serde(rename = "v_fr")]
    VFR,
    #[serde(rename = "theta_s")]
    ThetaS,
    #[serde(rename = "theta_d")]
    ThetaD,
    /// Simulated clock of the node.
    #[serde(rename = "time")]
    Time,
    /// Request status; only compared against status literals.
    #[serde(rename = "r_cs")]
    RCs,
}

impl Var {
    pub const ALL: [Var; 14] = [
        Var::TEst,
        Var::TP,
        Var::TD,
        Var::TA,
        Var::VC,
        Var::VO,
        Var::VTT,
        Var::VRT,
        Var::VFT,
        Var::VFR,
        Var::ThetaS,
        Var::ThetaD,
        Var::Time,
        Var::RCs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::TEst => "t_est",
            Var::TP => "t_p",
            Var::TD => "t_d",
            Var::TA => "t_a",
            Var::VC => "v_c",
            Var::VO => "v_o",
            Var::VTT => "v_tt",
            Var::VRT => "v_rt",
            Var::VFT => "v_ft",
            Var::VFR => "v_fr",
            Var::ThetaS => "theta_s",
            Var::ThetaD => "theta_d",
            Var::Time => "time",
            Var::RCs => "r_cs",
        }
    }

    /// Accepts the ASCII names plus the `θ_s` / `θ_d` spellings.
    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "θ_s" => Some(Var::ThetaS),
            "θ_d" => Some(Var::ThetaD),
            _ => Self::ALL.into_iter().find(|v| v.name() == name),
        }
    }

    /// Whether the variable is measured in minutes.
    pub fn is_timing(self) -> bool {
        matches!(self, Var::TEst | Var::TP | Var::TD | Var::TA | Var::VTT | Var::VRT | Var::Time)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `c0 + c1*x1 + c2*x2 + ...`
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(f64, Var)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(var: Var) -> Self {
        Self { terms: vec![(1.0, var)], constant: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn plus(mut self, var: Var) -> Self {
        self.terms.push((1.0, var));
        self
    }

    pub fn minus(mut self, var: Var) -> Self {
        self.terms.push((-1.0, var));
        self
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.terms.iter().map(|&(_, v)| v)
    }

    /// Evaluates with `lookup`; `None` as soon as a variable has no value.
    pub fn eval(&self, mut lookup: impl FnMut(Var) -> Option<f64>) -> Option<f64> {
        let mut total = self.constant;
        for &(coef, var) in &self.terms {
            total += coef * lookup(var)?;
        }
        Some(total)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &(coef, var) in &self.terms {
            let magnitude = coef.abs();
            let body = if magnitude == 1.0 { var.to_string() } else { format!("{magnitude}*{var}") };
            match (first, coef < 0.0) {
                (true, false) => write!(f, "{body}")?,
                (true, true) => write!(f, "-{body}")?,
                (false, false) => write!(f, " + {body}")?,
                (false, true) => write!(f, " - {body}")?,
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0.0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0.0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Le => lhs <= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }

    /// How far a failed comparison is from holding. Strict comparators are
    /// measured on the integer lattice (`x < y` needs `x <= y - 1`);
    /// disequality has no margin and counts as one unit.
    pub fn shortfall(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Comparator::Le => lhs - rhs,
            Comparator::Lt => lhs - rhs + 1.0,
            Comparator::Ge => rhs - lhs,
            Comparator::Gt => rhs - lhs + 1.0,
            Comparator::Eq => (lhs - rhs).abs(),
            Comparator::Ne => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Atom {
    Compare {
        lhs: LinExpr,
        op: Comparator,
        rhs: LinExpr,
    },
    /// `r_cs = <status>` or `r_cs != <status>`.
    Status {
        op: Comparator,
        status: RequestStatus,
    },
}

impl Atom {
    pub fn compare(lhs: LinExpr, op: Comparator, rhs: LinExpr) -> Self {
        Atom::Compare { lhs, op, rhs }
    }

    pub fn vars(&self) -> Vec<Var> {
        match self {
            Atom::Compare { lhs, rhs, .. } => lhs.vars().chain(rhs.vars()).collect(),
            Atom::Status { .. } => vec![Var::RCs],
        }
    }

    /// Whether violation degrees of this atom are minutes.
    pub fn is_timing(&self) -> bool {
        match self {
            Atom::Compare { lhs, rhs, .. } => lhs.vars().chain(rhs.vars()).any(Var::is_timing),
            Atom::Status { .. } => false,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Atom::Status { op, status } => write!(f, "r_cs {} {status}", op.symbol()),
        }
    }
}

/// State quantifier paired with a path quantifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemporalOp {
    AX,
    EX,
    AF,
    EF,
    AG,
    EG,
}

impl TemporalOp {
    pub const ALL: [TemporalOp; 6] =
        [TemporalOp::AX, TemporalOp::EX, TemporalOp::AF, TemporalOp::EF, TemporalOp::AG, TemporalOp::EG];

    pub fn keyword(self) -> &'static str {
        match self {
            TemporalOp::AX => "AX",
            TemporalOp::EX => "EX",
            TemporalOp::AF => "AF",
            TemporalOp::EF => "EF",
            TemporalOp::AG => "AG",
            TemporalOp::EG => "EG",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.keyword() == word)
    }

    /// Safety operators read a not-applicable operand as satisfied, liveness
    /// operators as unsatisfied.
    pub fn is_safety(self) -> bool {
        matches!(self, TemporalOp::AX | TemporalOp::AG | TemporalOp::EG)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Temporal(TemporalOp, Box<Formula>),
}

impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Self {
        Formula::Not(Box::new(inner))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn temporal(op: TemporalOp, inner: Formula) -> Self {
        Formula::Temporal(op, Box::new(inner))
    }

    pub fn ag(inner: Formula) -> Self {
        Self::temporal(TemporalOp::AG, inner)
    }

    pub fn af(inner: Formula) -> Self {
        Self::temporal(TemporalOp::AF, inner)
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(inner) | Formula::Temporal(_, inner) => 1 + inner.depth(),
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// The operator and atom of a formula shaped `OP (atom)`.
    pub fn as_quantifiable(&self) -> Option<(TemporalOp, &Atom)> {
        match self {
            Formula::Temporal(op, inner) => match inner.as_ref() {
                Formula::Atom(atom) => Some((*op, atom)),
                _ => None,
            },
            _ => None,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, wrap: bool) -> fmt::Result {
        if wrap {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Canonical text; parsing it yields the same formula.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(atom) => write!(f, "{atom}"),
            Formula::Not(inner) => {
                f.write_str("!")?;
                let bare =
                    matches!(inner.as_ref(), Formula::True | Formula::False | Formula::Not(_) | Formula::Temporal(..));
                inner.fmt_operand(f, !bare)
            }
            Formula::And(l, r) => {
                l.fmt_operand(f, matches!(l.as_ref(), Formula::Or(..)))?;
                f.write_str(" && ")?;
                r.fmt_operand(f, matches!(r.as_ref(), Formula::Or(..) | Formula::And(..)))
            }
            Formula::Or(l, r) => {
                write!(f, "{l} || ")?;
                r.fmt_operand(f, matches!(r.as_ref(), Formula::Or(..)))
            }
            Formula::Temporal(op, inner) => write!(f, "{} ({inner})", op.keyword()),
        }
    }
}
