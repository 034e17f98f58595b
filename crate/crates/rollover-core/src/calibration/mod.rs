//! Staged cross-sectional calibration and the global optimizers behind it.
//!
//! - [`objective`]: bid/ask hinge loss, parameter boxes, batch evaluation.
//! - [`de`] and [`asa`]: differential evolution and adaptive simulated annealing.
//! - [`lm`]: damped Gauss–Newton for the smooth term-structure refinements.
//! - [`stages`]: OIS fit and bootstrap, basis/IRS fit, monthly `d₀` term structure.
//! - [`credit`]: per-bank CDS fit, panel averaging and the funding-liquidity stage.

pub mod asa;
pub mod credit;
pub mod de;
pub mod lm;
pub mod objective;
pub mod stages;

pub use asa::{adaptive_simulated_annealing, AsaConfig};
pub use credit::{calibrate_bank_cds, panel_average, panel_mean, stage_liquidity, BankFit, CreditConfig, LiquidityFit};
pub use de::{differential_evolution, DeConfig, OptimResult};
pub use lm::{levenberg_marquardt, LmConfig, LmResult};
pub use objective::{
    band_residual, bidask_objective, residual, Bounds, Executor, ObjectiveFn, ObjectiveMode, Sequential,
    FELLER_WEIGHT,
};
pub use stages::{
    auto_mu, calibrate, stage1_ois, stage2_basis, stage3_d0_term_structure, swap_engine, CalibrationConfig,
    CalibrationResult, InstrumentResidual, LegTables, Optimizer, ParamBounds, Stage1Fit, Stage2Fit, Stage3Fit,
    SwapEngine, IN_BAND_TOL,
};
