use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::operators::ConstCoeffOperator;
use crate::solve::KornBc;
use crate::verify::DomainFamily;

/// What a run computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyHardy,
    VerifyLemma21,
    VerifyLemma22,
    VerifyThm11,
    VerifyThm13,
    VerifyThm14,
    VerifyThm18,
    KornFirst,
    StrongRatio,
    Solve,
    MeshDump,
}

impl Command {
    /// Name of the check whose records the command emits.
    pub fn label(&self) -> &'static str {
        match self {
            Command::VerifyHardy => "verify hardy",
            Command::VerifyLemma21 => "verify lemma21",
            Command::VerifyLemma22 => "verify lemma22",
            Command::VerifyThm11 => "verify thm11",
            Command::VerifyThm13 => "verify thm13",
            Command::VerifyThm14 => "verify thm14",
            Command::VerifyThm18 => "verify thm18",
            Command::KornFirst => "korn-first",
            Command::StrongRatio => "strong-ratio",
            Command::Solve => "solve",
            Command::MeshDump => "mesh-dump",
        }
    }
}

/// Strip family selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Rect,
    Cap,
    Curved,
}

impl DomainKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(DomainKind::Rect),
            "cap" => Ok(DomainKind::Cap),
            "curved" => Ok(DomainKind::Curved),
            other => Err(KornError::Config(format!(
                "unknown domain '{other}' (expected rect, cap or curved)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub l: f64,
    /// relative thickness modulation of the cap and curved families
    pub r: f64,
    /// `sup |phi1'|` of the curved family
    pub rho1: f64,
}

impl DomainConfig {
    pub fn family(&self) -> DomainFamily {
        match self.kind {
            DomainKind::Rect => DomainFamily::Rectangle { l: self.l },
            DomainKind::Cap => DomainFamily::CosineCap {
                l: self.l,
                r: self.r,
            },
            DomainKind::Curved => DomainFamily::CurvedStrip {
                l: self.l,
                rho1: self.rho1,
                r: self.r,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// eigen residual target
    pub eigen: f64,
    /// golden-section tolerance in `log10 t`
    pub golden: f64,
    /// points of the coarse `log10 t` grid
    pub t_grid: usize,
}

/// Everything a run depends on; echoed into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub domain: DomainConfig,
    pub op: ConstCoeffOperator,
    /// slope of the hyperplane scenario
    pub a2: f64,
    pub nx: usize,
    /// axial elements at the largest thickness of a sweep
    pub ny: usize,
    pub h: Option<f64>,
    pub h_sweep: Vec<f64>,
    pub bc: KornBc,
    pub seed: u64,
    pub cases: Option<usize>,
    pub eps: Option<f64>,
    /// Gauss points per panel for domain quadratures
    pub quad_n: usize,
    /// Gauss points per subinterval for the 1D check
    pub hardy_quad_n: usize,
    pub tolerances: Tolerances,
    pub out: Option<String>,
    pub csv: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            domain: DomainConfig {
                kind: DomainKind::Rect,
                l: 1.0,
                r: 0.2,
                rho1: 0.3,
            },
            op: ConstCoeffOperator::laplacian(2),
            a2: 0.5,
            nx: 8,
            ny: 64,
            h: None,
            h_sweep: vec![0.2, 0.1, 0.05, 0.025],
            bc: KornBc::DirichletEnds,
            seed: 0,
            cases: None,
            eps: None,
            quad_n: 16,
            hardy_quad_n: 64,
            tolerances: Tolerances {
                eigen: 1e-8,
                golden: 1e-5,
                t_grid: 33,
            },
            out: None,
            csv: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KornError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        super::emit::to_json_string(self)
    }

    /// Rejects values that no command accepts.
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(KornError::Config("mesh resolution must be positive".into()));
        }
        if !(self.domain.l > 0.0) {
            return Err(KornError::Config(format!(
                "length must be positive, got {}",
                self.domain.l
            )));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(KornError::BadInterval(format!(
                    "eps must lie in (0, 1], got {eps}"
                )));
            }
        }
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(KornError::Config(format!(
                    "thickness must be positive, got {h}"
                )));
            }
        }
        if self.h_sweep.iter().any(|h| !(*h > 0.0)) {
            return Err(KornError::Config(
                "sweep thicknesses must be positive".into(),
            ));
        }
        if self.tolerances.t_grid < 3 {
            return Err(KornError::Config(
                "the t grid needs at least 3 points".into(),
            ));
        }
        Ok(())
    }
}
