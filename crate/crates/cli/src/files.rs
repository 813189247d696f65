//! JSON problem and solution files.
//!
//! Parsing is strict: unknown keys are errors. Non-finite numbers are
//! written as the strings `"inf"`, `"-inf"` and `"nan"`, and read back from
//! the same strings.

use std::fmt;

use saddlepoint::{
    Certificate, Constraint, DiscreteMeasure, FamilyKind, FamilyTag, FeatureMap, IntegrandFamily, KktReport,
    MomentProblem, MomentVector, Qualification, SupportPoint, TabulatedIntegrand, Tolerances, TransportPlan,
    TransportProblem,
};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// An `f64` that survives JSON even when it is not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                match v {
                    "inf" => Ok(Real(f64::INFINITY)),
                    "-inf" => Ok(Real(f64::NEG_INFINITY)),
                    "nan" => Ok(Real(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        d.deserialize_any(RealVisitor)
    }
}

pub fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().map(|&x| Real(x)).collect()
}

pub fn floats(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

fn matrix(rows: &[Vec<Real>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| floats(r)).collect()
}

// ---------------------------------------------------------------- problems

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemFile {
    Entropy(EntropyProblemFile),
    Ot(OtProblemFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyProblemFile {
    pub reference: ReferenceFile,
    pub family: FamilyFile,
    /// One row per support point.
    pub features: Vec<Vec<Real>>,
    pub constraint: ConstraintFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFile {
    pub support: Vec<String>,
    pub weights: Vec<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub tag: String,
    #[serde(default, skip_serializing_if = "FamilyParams::is_empty")]
    pub params: FamilyParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor: Option<Vec<Real>>,
    /// Tabulated `γ′` for the `custom` tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<Real>>,
}

impl FamilyParams {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintFile {
    Equality {
        values: Vec<Real>,
    },
    /// `null` marks an unbounded side.
    Box {
        lower: Vec<Option<Real>>,
        upper: Vec<Option<Real>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtProblemFile {
    pub mu: Vec<Real>,
    pub nu: Vec<Real>,
    pub cost: Vec<Vec<Real>>,
}

impl FamilyFile {
    pub fn build(&self) -> Result<IntegrandFamily<f64>, CliError> {
        let tag = FamilyTag::from_name(&self.tag)
            .ok_or_else(|| CliError::structural(format!("unknown family tag {:?}", self.tag)))?;
        let p = &self.params;
        let family = match tag {
            FamilyTag::Custom => {
                let (Some(knots), Some(slopes)) = (&p.knots, &p.slopes) else {
                    return Err(CliError::structural(
                        "custom family needs params.knots and params.slopes",
                    ));
                };
                IntegrandFamily::custom(TabulatedIntegrand::new(floats(knots), floats(slopes))?)
            }
            _ => {
                if p.knots.is_some() || p.slopes.is_some() {
                    return Err(CliError::structural(format!(
                        "knots and slopes apply only to the custom family, not {:?}",
                        self.tag
                    )));
                }
                IntegrandFamily::from_tag(tag).expect("built-in tag")
            }
        };
        Ok(family.with_scaling(p.scale.as_deref().map(floats), p.divisor.as_deref().map(floats))?)
    }

    pub fn from_family(f: &IntegrandFamily<f64>) -> Self {
        let (knots, slopes) = match f.kind() {
            FamilyKind::Custom(t) => (Some(reals(t.knots())), Some(reals(t.slopes()))),
            _ => (None, None),
        };
        Self {
            tag: f.tag().name().to_string(),
            params: FamilyParams {
                scale: f.scale().map(reals),
                divisor: f.divisor().map(reals),
                knots,
                slopes,
            },
        }
    }
}

impl EntropyProblemFile {
    pub fn build(&self) -> Result<MomentProblem<f64>, CliError> {
        let support = self.reference.support.iter().map(SupportPoint::new).collect();
        let reference = DiscreteMeasure::new(support, floats(&self.reference.weights))?;
        let features = FeatureMap::new(matrix(&self.features))?;
        let constraint = match &self.constraint {
            ConstraintFile::Equality { values } => Constraint::Equality(MomentVector::new(floats(values))?),
            ConstraintFile::Box { lower, upper } => Constraint::Box {
                lower: lower.iter().map(|v| v.map_or(f64::NEG_INFINITY, |r| r.0)).collect(),
                upper: upper.iter().map(|v| v.map_or(f64::INFINITY, |r| r.0)).collect(),
            },
        };
        Ok(MomentProblem::new(
            reference,
            self.family.build()?,
            features,
            constraint,
        )?)
    }

    pub fn from_problem(p: &MomentProblem<f64>) -> Self {
        let bound = |v: f64| v.is_finite().then_some(Real(v));
        let constraint = match p.constraint() {
            Constraint::Equality(x) => ConstraintFile::Equality { values: reals(x) },
            Constraint::Box { lower, upper } => ConstraintFile::Box {
                lower: lower.iter().map(|&v| bound(v)).collect(),
                upper: upper.iter().map(|&v| bound(v)).collect(),
            },
        };
        Self {
            reference: ReferenceFile {
                support: p.reference().support().iter().map(|s| s.id.clone()).collect(),
                weights: reals(p.reference().weights()),
            },
            family: FamilyFile::from_family(p.family()),
            features: p.features().rows().map(reals).collect(),
            constraint,
        }
    }
}

impl OtProblemFile {
    pub fn build(&self) -> Result<TransportProblem<f64>, CliError> {
        Ok(TransportProblem::new(
            floats(&self.mu),
            floats(&self.nu),
            matrix(&self.cost),
        )?)
    }

    pub fn from_problem(p: &TransportProblem<f64>) -> Self {
        Self {
            mu: reals(p.mu()),
            nu: reals(p.nu()),
            cost: p.cost_matrix().chunks(p.n()).map(reals).collect(),
        }
    }
}

// --------------------------------------------------------------- solutions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolutionFile {
    Entropy(EntropySolutionFile),
    Ot(OtSolutionFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySolutionFile {
    pub y: Vec<Real>,
    #[serde(rename = "Q")]
    pub q: Vec<Real>,
    pub value: Real,
    /// Achieved moments `T Q̂`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<Real>>,
    /// Optimal moments of a box problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<String>>,
    pub certificate: CertificateFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleFile>,
    pub meta: MetaFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtSolutionFile {
    /// Row-major plan, one row per source.
    pub plan: Vec<Vec<Real>>,
    /// Potentials; derived from the plan by `certify` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaFile>,
}

impl OtSolutionFile {
    pub fn plan_for(&self, p: &TransportProblem<f64>) -> Result<TransportPlan<f64>, CliError> {
        if self.plan.len() != p.m() || self.plan.iter().any(|r| r.len() != p.n()) {
            return Err(CliError::structural(format!(
                "plan must be {}x{} to match the problem",
                p.m(),
                p.n()
            )));
        }
        let entries = self.plan.iter().flat_map(|r| floats(r)).collect();
        Ok(TransportPlan::from_row_major(p.m(), p.n(), entries)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesFile {
    pub gap: Real,
    pub residual: Real,
}

impl From<Tolerances<f64>> for TolerancesFile {
    fn from(t: Tolerances<f64>) -> Self {
        Self {
            gap: Real(t.gap),
            residual: Real(t.residual),
        }
    }
}

impl From<TolerancesFile> for Tolerances<f64> {
    fn from(t: TolerancesFile) -> Self {
        Self {
            gap: t.gap.0,
            residual: t.residual.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KktFile {
    pub constraint_residual: Real,
    pub support_condition_residual: Real,
    pub representation_residual: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub primal_value: Real,
    pub dual_value: Real,
    pub gap: Real,
    pub young_residual: Real,
    pub kkt: KktFile,
    pub qualification: String,
    pub converged: bool,
    pub tolerances: TolerancesFile,
    pub passes: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl From<&Certificate<f64>> for CertificateFile {
    fn from(c: &Certificate<f64>) -> Self {
        Self {
            primal_value: Real(c.primal_value),
            dual_value: Real(c.dual_value),
            gap: Real(c.gap),
            young_residual: Real(c.young_residual),
            kkt: KktFile {
                constraint_residual: Real(c.kkt.constraint_residual),
                support_condition_residual: Real(c.kkt.support_condition_residual),
                representation_residual: Real(c.kkt.representation_residual),
            },
            qualification: c.qualification.name().to_string(),
            converged: c.converged,
            tolerances: c.tolerances.into(),
            passes: c.passes(),
            failures: c.failures().into_iter().map(str::to_string).collect(),
        }
    }
}

impl CertificateFile {
    pub fn to_certificate(&self) -> Result<Certificate<f64>, CliError> {
        let qualification = Qualification::from_name(&self.qualification)
            .ok_or_else(|| CliError::structural(format!("unknown qualification {:?}", self.qualification)))?;
        Ok(Certificate {
            primal_value: self.primal_value.0,
            dual_value: self.dual_value.0,
            gap: self.gap.0,
            young_residual: self.young_residual.0,
            kkt: KktReport {
                constraint_residual: self.kkt.constraint_residual.0,
                support_condition_residual: self.kkt.support_condition_residual.0,
                representation_residual: self.kkt.representation_residual.0,
            },
            qualification,
            converged: self.converged,
            tolerances: self.tolerances.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFile {
    /// `grid` for entropy problems, `vertices` for transport.
    pub method: String,
    pub available: bool,
    pub value: Option<Real>,
    /// Allowed excess of the solver value over the oracle value.
    pub bound: Option<Real>,
    /// Grid spacing `h`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Real>,
    pub agrees: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaFile {
    pub version: String,
    pub tolerances: TolerancesFile,
    pub iterations: usize,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_tol: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualification_margin: Option<Real>,
}

// ---------------------------------------------------------------- gauges

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpecFile {
    pub theta: ThetaFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(Real, Real)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaFile {
    Power { exponent: Real, weights: Vec<Real> },
    Lambda { family: FamilyFile, weights: Vec<Real> },
    LambdaMax { family: FamilyFile, weights: Vec<Real> },
    SymmetricPhi { family: FamilyFile, weights: Vec<Real> },
}

impl GaugeSpecFile {
    pub fn build(&self) -> Result<saddlepoint::ConvexGaugeSpec<f64>, CliError> {
        use saddlepoint::Theta;
        let theta = match &self.theta {
            ThetaFile::Power { exponent, weights } => Theta::Power {
                exponent: exponent.0,
                weights: floats(weights),
            },
            ThetaFile::Lambda { family, weights } => Theta::Lambda {
                family: family.build()?,
                weights: floats(weights),
            },
            ThetaFile::LambdaMax { family, weights } => Theta::LambdaMax {
                family: family.build()?,
                weights: floats(weights),
            },
            ThetaFile::SymmetricPhi { family, weights } => Theta::SymmetricPhi {
                family: family.build()?,
                weights: floats(weights),
            },
        };
        let mut spec = saddlepoint::ConvexGaugeSpec::new(theta);
        if let Some((lo, hi)) = self.bracket {
            spec.bracket = (lo.0, hi.0);
        }
        if let Some(cap) = self.cap {
            spec.cap = cap.0;
        }
        if let Some(floor) = self.floor {
            spec.floor = floor.0;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const BERNOULLI: &str = r#"{
        "kind": "entropy",
        "reference": {"support": ["tails", "heads"], "weights": [0.5, 0.5]},
        "family": {"tag": "relative_entropy"},
        "features": [[1, 0], [1, 1]],
        "constraint": {"type": "equality", "values": [1, 0.75]}
    }"#;

    #[test]
    fn parses_an_entropy_problem() {
        let f: ProblemFile = serde_json::from_str(BERNOULLI).unwrap();
        let ProblemFile::Entropy(e) = f else {
            panic!("wrong kind")
        };
        let p = e.build().unwrap();
        assert_eq!(p.n_points(), 2);
        assert_eq!(p.reference().support()[1].id, "heads");
        assert_eq!(EntropyProblemFile::from_problem(&p), e);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = BERNOULLI.replace("\"features\"", "\"extra\": 1, \"features\"");
        assert!(serde_json::from_str::<ProblemFile>(&bad).is_err());
        let bad = BERNOULLI.replace("\"tag\"", "\"scal\": [1], \"tag\"");
        assert!(serde_json::from_str::<ProblemFile>(&bad).is_err());
        let bad = BERNOULLI.replace("\"values\"", "\"lower\": [], \"values\"");
        assert!(serde_json::from_str::<ProblemFile>(&bad).is_err());
    }

    #[test]
    fn box_bounds_use_null_for_infinity() {
        let text = BERNOULLI.replace(
            r#"{"type": "equality", "values": [1, 0.75]}"#,
            r#"{"type": "box", "lower": [1, 0.7], "upper": [1, null]}"#,
        );
        let ProblemFile::Entropy(e) = serde_json::from_str(&text).unwrap() else {
            panic!("wrong kind")
        };
        let p = e.build().unwrap();
        match p.constraint() {
            Constraint::Box { upper, .. } => assert_eq!(upper[1], f64::INFINITY),
            other => panic!("{other:?}"),
        }
        assert_eq!(EntropyProblemFile::from_problem(&p), e);
    }

    #[test]
    fn non_finite_reals_round_trip() {
        let v = vec![Real(1.5), Real(f64::INFINITY), Real(f64::NEG_INFINITY)];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"inf","-inf"]"#);
        let back: Vec<Real> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let nan: Real = serde_json::from_str(r#""nan""#).unwrap();
        assert!(nan.0.is_nan());
        assert!(serde_json::from_str::<Real>(r#""infinity""#).is_err());
    }

    #[test]
    fn custom_family_needs_its_table() {
        let f = FamilyFile {
            tag: "custom".into(),
            params: FamilyParams::default(),
        };
        assert!(f.build().is_err());
        let f = FamilyFile {
            tag: "custom".into(),
            params: FamilyParams {
                knots: Some(reals(&[-1.0, 0.0, 1.0])),
                slopes: Some(reals(&[0.5, 1.0, 2.0])),
                ..FamilyParams::default()
            },
        };
        let built = f.build().unwrap();
        assert_eq!(FamilyFile::from_family(&built), f);
    }

    #[test]
    fn ot_problem_round_trip() {
        let text = r#"{"kind": "ot", "mu": [0.7, 0.3], "nu": [0.4, 0.6], "cost": [[0, 1], [1, 0]]}"#;
        let ProblemFile::Ot(o) = serde_json::from_str(text).unwrap() else {
            panic!("wrong kind")
        };
        let p = o.build().unwrap();
        assert_eq!(p.cost(0, 1), 1.0);
        assert_eq!(OtProblemFile::from_problem(&p), o);
    }

    #[test]
    fn gauge_spec_parses() {
        let text = r#"{"theta": {"type": "power", "exponent": 2, "weights": [1, 1]}}"#;
        let f: GaugeSpecFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.build().unwrap().dim(), 2);
        let text = r#"{"theta": {"type": "lambda", "family": {"tag": "burg"}, "weights": [1]}}"#;
        let f: GaugeSpecFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.build().unwrap().dim(), 1);
    }
}
