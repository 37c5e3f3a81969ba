//! Run configuration: one TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use fracspde::{FracOrders, TimeGrid, TorusGrid};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const OUTPUT_ENV: &str = "FRACSPDE_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Ml,
    Fraccalc,
    Kernel,
    Solve,
    Lp,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Ml => "ml",
            Kind::Fraccalc => "fraccalc",
            Kind::Kernel => "kernel",
            Kind::Solve => "solve",
            Kind::Lp => "lp",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    fracspde::orders::DEFAULT_KAPPA
}

impl OrdersConfig {
    pub fn for_kind(kind: Kind) -> Self {
        match kind {
            // the inequality check needs beta > 1/2
            Kind::Lp => OrdersConfig {
                alpha: 0.5,
                beta: 0.75,
                kappa: default_kappa(),
            },
            _ => OrdersConfig::default(),
        }
    }
}

impl Default for OrdersConfig {
    fn default() -> Self {
        OrdersConfig {
            alpha: 0.5,
            beta: 0.25,
            kappa: default_kappa(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub side: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 1,
            n: 32,
            side: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub n_steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            t_end: 1.0,
            n_steps: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Two-standard-error relative band above which statistics are inconclusive.
    pub band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            picard_tol: 1e-8,
            max_iter: 50,
            band: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlConfig {
    pub a: f64,
    pub b: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub samples: usize,
}

impl Default for MlConfig {
    fn default() -> Self {
        MlConfig {
            a: 1.0,
            b: 1.0,
            z_min: -20.0,
            z_max: 20.0,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FraccalcConfig {
    pub a: f64,
    pub b: f64,
}

impl Default for FraccalcConfig {
    fn default() -> Self {
        FraccalcConfig { a: 0.3, b: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub t: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpConfig {
    pub samples: usize,
    pub p: Vec<f64>,
    /// Largest wavenumber per axis in the test family; 0 means `n/4`.
    pub max_mode: i64,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            samples: 30,
            p: vec![2.0, 4.0],
            max_mode: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    /// `|m|` range of the fitted shells.
    pub modes: [i64; 2],
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            betas: vec![0.25, 0.5, 0.75],
            modes: [2, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: Kind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub orders: OrdersConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub ml: MlConfig,
    #[serde(default)]
    pub fraccalc: FraccalcConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub lp: LpConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_seed() -> u64 {
    1
}

fn default_replicates() -> usize {
    100
}

impl RunConfig {
    pub fn new(kind: Kind) -> Self {
        let orders = OrdersConfig::for_kind(kind);
        RunConfig {
            kind,
            seed: default_seed(),
            replicates: default_replicates(),
            workers: 0,
            output: None,
            orders,
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            tolerances: Tolerances::default(),
            ml: MlConfig::default(),
            fraccalc: FraccalcConfig::default(),
            kernel: KernelConfig::default(),
            lp: LpConfig::default(),
            sweep: SweepConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let has_orders = table.contains_key("orders");
        let mut c: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        if !has_orders {
            c.orders = OrdersConfig::for_kind(c.kind);
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn frac_orders(&self) -> Result<FracOrders, HarnessError> {
        let o = &self.orders;
        FracOrders::with_kappa(o.alpha, o.beta, o.kappa)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn torus(&self) -> Result<TorusGrid, HarnessError> {
        let g = &self.grid;
        TorusGrid::new(g.dim, g.n, g.side).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, HarnessError> {
        TimeGrid::new(self.time.t_end, self.time.n_steps)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Checks every invariant that does not need a computation.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.frac_orders()?;
        self.torus()?;
        self.time_grid()?;
        if self.time.n_steps < 16 {
            return bad(format!(
                "n_steps = {} must be at least 16",
                self.time.n_steps
            ));
        }
        if self.replicates < 1 {
            return bad("replicates must be at least 1".into());
        }
        let t = &self.tolerances;
        if !(t.picard_tol > 0.0) || t.max_iter == 0 || !(t.band > 0.0) {
            return bad("tolerances must be positive".into());
        }
        match self.kind {
            Kind::Ml => {
                let m = &self.ml;
                if m.samples < 2
                    || !(m.z_min < m.z_max)
                    || !m.z_min.is_finite()
                    || !m.z_max.is_finite()
                {
                    return bad("ml needs samples >= 2 and z_min < z_max".into());
                }
            }
            Kind::Fraccalc => {
                let f = &self.fraccalc;
                if !(f.a >= 0.0 && f.b >= 0.0 && f.a + f.b > 0.0) {
                    return bad("fraccalc orders must be non-negative with a positive sum".into());
                }
            }
            Kind::Kernel => {
                if !(self.kernel.t > 0.0) {
                    return bad("kernel time must be positive".into());
                }
            }
            Kind::Solve | Kind::Sweep => {
                if self.replicates < 2 {
                    return bad("Monte Carlo runs need at least 2 replicates".into());
                }
                let [lo, hi] = self.sweep.modes;
                if self.kind == Kind::Sweep && !(lo >= 1 && hi > lo && 2 * hi <= self.grid.n as i64)
                {
                    return bad(format!(
                        "sweep modes {lo}..{hi} not resolved on n = {}",
                        self.grid.n
                    ));
                }
                if self.kind == Kind::Sweep && self.sweep.betas.is_empty() {
                    return bad("sweep needs at least one beta".into());
                }
            }
            Kind::Lp => {
                let l = &self.lp;
                if l.samples == 0 || l.p.is_empty() || l.p.iter().any(|&p| !(p >= 2.0)) {
                    return bad("lp needs samples >= 1 and every p >= 2".into());
                }
                if l.max_mode < 0 || 2 * l.max_mode > self.grid.n as i64 {
                    return bad(format!(
                        "lp max_mode = {} not resolved on n = {}",
                        l.max_mode, self.grid.n
                    ));
                }
            }
        }
        Ok(())
    }

    /// Flag value, then the file, then `$FRACSPDE_OUT/<kind>`, then `fracspde-out/<kind>`.
    pub fn resolve_output(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output {
            return p.clone();
        }
        let root = std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("fracspde-out"));
        root.join(self.kind.name())
    }
}
