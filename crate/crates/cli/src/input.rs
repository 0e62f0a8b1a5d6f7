use std::collections::BTreeMap;

use irrlab::exact::{self, Q};
use irrlab::interval::Observable;
use irrlab::irregular::{RoofFunction, WindowTable};
use irrlab::lorenz::{LorenzDemoConfig, LorenzModel};
use irrlab::skewprod::{GraphSkewProduct, PorcupineModel};
use irrlab::symbolic::{SubshiftSpec, Symbol};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// Reads `--input`: inline JSON when it starts with `{` or `[`, a file path
/// otherwise, and an empty object when absent.
pub fn load(input: Option<&str>) -> Result<Value, CliError> {
    let text = match input {
        None => return Ok(Value::Object(Default::default())),
        Some(s) if s.trim_start().starts_with(['{', '[']) => s.to_string(),
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?,
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(e.to_string()))
}

pub fn parse<T: DeserializeOwned>(raw: &Value) -> Result<T, CliError> {
    T::deserialize(raw).map_err(|e| CliError::Input(e.to_string()))
}

/// A rational given either as a string such as `"11/10"` or as a JSON number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Text(String),
    Float(f64),
}

impl Number {
    pub fn to_q(&self) -> Result<Q, CliError> {
        Ok(match self {
            Number::Text(s) => exact::parse(s)?,
            Number::Float(x) => exact::from_f64(*x)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoofConfig {
    Constant {
        value: Number,
    },
    /// `base + mean(per_symbol[x_i])` over windows of the given radius.
    SymbolAverage {
        radius: usize,
        base: Number,
        per_symbol: Vec<Number>,
    },
    Table {
        table: WindowTable,
    },
}

impl RoofConfig {
    pub fn build(&self, spec: &SubshiftSpec) -> Result<RoofFunction, CliError> {
        Ok(match self {
            RoofConfig::Constant { value } => RoofFunction::constant(spec, value.to_q()?)?,
            RoofConfig::SymbolAverage {
                radius,
                base,
                per_symbol,
            } => {
                let weights = per_symbol
                    .iter()
                    .map(Number::to_q)
                    .collect::<Result<Vec<_>, _>>()?;
                RoofFunction::symbol_average(spec, *radius, &base.to_q()?, &weights)?
            }
            RoofConfig::Table { table } => RoofFunction::new(table.clone())?,
        })
    }
}

/// Roof in `[0.9, 1.1]` depending on the window of radius 1.
pub fn canonical_roof() -> RoofConfig {
    RoofConfig::SymbolAverage {
        radius: 1,
        base: Number::Text("11/10".into()),
        per_symbol: vec![Number::Text("0".into()), Number::Text("-1/5".into())],
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrregularInput {
    pub spec: SubshiftSpec,
    pub p0: Vec<Symbol>,
    pub p1: Vec<Symbol>,
    /// Connector length; the mixing time of `spec` when absent.
    pub gap: Option<usize>,
    pub m_count: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    pub m0: usize,
    pub roof: RoofConfig,
}

impl Default for IrregularInput {
    fn default() -> Self {
        IrregularInput {
            spec: SubshiftSpec::full_shift(2),
            p0: vec![0],
            p1: vec![1],
            gap: None,
            m_count: 12,
            c: 1.2,
            delta: irrlab::irregular::DEFAULT_DELTA,
            m0: 2,
            roof: canonical_roof(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirkhoffInput {
    /// Starting point; drawn from the seed when absent.
    pub x0: Option<f64>,
    pub observable: Observable,
    pub n: usize,
    /// Keep every `stride`-th average in the series.
    pub stride: usize,
}

impl Default for BirkhoffInput {
    fn default() -> Self {
        BirkhoffInput {
            x0: None,
            observable: Observable::Identity,
            n: 10_000,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BowenInput {
    pub n: usize,
    pub eps: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalInput {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub k_max: usize,
    /// Neighbourhood `[lo, hi]` removed from the domain before the search.
    pub exclude: Option<(f64, f64)>,
    pub bowen: Option<BowenInput>,
    pub birkhoff: Option<BirkhoffInput>,
}

impl Default for IntervalInput {
    fn default() -> Self {
        IntervalInput {
            model: "tent".into(),
            params: BTreeMap::from([("s".to_string(), 2.0)]),
            k_max: 8,
            exclude: None,
            bowen: None,
            birkhoff: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspensionInput {
    #[serde(default = "full_two_shift")]
    pub spec: SubshiftSpec,
    pub roof: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingInput {
    #[serde(default = "full_two_shift")]
    pub spec: SubshiftSpec,
    pub k: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoranInput {
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxInput {
    pub ratios: Vec<f64>,
    pub translations: Option<Vec<f64>>,
    pub depth: usize,
    /// Count boxes of the attractor times itself in the plane.
    pub product: bool,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub levels: Option<usize>,
}

impl Default for BoxInput {
    fn default() -> Self {
        BoxInput {
            ratios: vec![1.0 / 3.0, 1.0 / 3.0],
            translations: Some(vec![0.0, 2.0 / 3.0]),
            depth: 12,
            product: false,
            eps_min: None,
            eps_max: None,
            levels: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftMetricInput {
    pub spec: SubshiftSpec,
    pub depths: (usize, usize),
}

impl Default for ShiftMetricInput {
    fn default() -> Self {
        ShiftMetricInput {
            spec: SubshiftSpec::full_shift(2),
            depths: (5, 30),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorseshoeInput {
    pub lambda_u: f64,
    pub mu_s: f64,
    pub branches: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzMapInput {
    pub model: LorenzModel,
    pub x: f64,
    pub y: f64,
    pub iterates: usize,
}

impl Default for LorenzMapInput {
    fn default() -> Self {
        LorenzMapInput {
            model: LorenzModel::default(),
            x: 0.5,
            y: 0.0,
            iterates: 100,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzDemoInput {
    pub model: LorenzModel,
    pub config: LorenzDemoConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinesInput {
    pub model: PorcupineModel,
    /// Explicit pasts, `xi_{-1}` first.
    pub pasts: Vec<Vec<Symbol>>,
    /// Number of random pasts drawn from the seed.
    pub random: usize,
    pub depth: usize,
}

impl Default for SpinesInput {
    fn default() -> Self {
        SpinesInput {
            model: PorcupineModel::default(),
            pasts: Vec::new(),
            random: 16,
            depth: 30,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FractionInput {
    pub model: PorcupineModel,
    pub depths: Vec<usize>,
    pub samples: usize,
}

impl Default for FractionInput {
    fn default() -> Self {
        FractionInput {
            model: PorcupineModel::default(),
            depths: vec![10, 30, 60],
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewGraphInput {
    pub skew: GraphSkewProduct,
    pub depths: Vec<usize>,
    pub samples: usize,
}

impl Default for SkewGraphInput {
    fn default() -> Self {
        SkewGraphInput {
            skew: halving_skew(),
            depths: vec![8, 16, 32],
            samples: 100,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftInput {
    pub skew: GraphSkewProduct,
    pub base: IrregularInput,
    pub fiber_values: Vec<f64>,
}

impl Default for LiftInput {
    fn default() -> Self {
        let base = IrregularInput {
            m_count: 6,
            ..IrregularInput::default()
        };
        LiftInput {
            skew: halving_skew(),
            base,
            fiber_values: vec![-1.0, 0.0, 0.5, 1.0],
        }
    }
}

fn full_two_shift() -> SubshiftSpec {
    SubshiftSpec::full_shift(2)
}

/// `g_s(y) = y / 2 + s` over the full 2-shift.
fn halving_skew() -> GraphSkewProduct {
    GraphSkewProduct {
        base: full_two_shift(),
        kappa: vec![0.5, 0.5],
        c: vec![0.0, 1.0],
    }
}
