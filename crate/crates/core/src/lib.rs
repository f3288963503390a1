//! Equilibrium of competing energy-storage investors in a market with linear
//! price impact.
//!
//! Each investor sizes a storage unit (energy capacity and power rating) and
//! dispatches it in every scenario day; the market price in each slot falls
//! linearly with the aggregate net discharge of all investors. The game's
//! pure Nash equilibrium is the maximizer of one concave quadratic program,
//! which [`equilibrium::solve_equilibrium`] builds and solves, and
//! [`equilibrium::verify_equilibrium`] certifies by re-solving every investor's
//! best response.
//!
//! ```no_run
//! use storage_game::prelude::*;
//!
//! let records = load_market_csv("market.csv")?;
//! let scenarios = build_scenarios(&records)?;
//! let game = GameInstance::homogeneous(&InvestorSpec::reference("inv"), 3, scenarios)?;
//! let report = solve_certified(&game, &SolveSettings::default())?;
//! println!("total profit {:.2}/day", report.total_profit);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod equilibrium;
pub mod market_data;
pub mod model;
pub mod qp;
pub mod solver;
pub mod sweep;
pub mod synthetic;

pub mod prelude {
    pub use crate::equilibrium::{
        solve_certified, solve_equilibrium, verify_equilibrium, Certification, EquilibriumError,
        EquilibriumReport,
    };
    pub use crate::market_data::{build_scenarios, load_market_csv, Scenario, ScenarioSet};
    pub use crate::model::{DecisionVector, GameInstance, InvestorSpec};
    pub use crate::solver::{SolveSettings, SolveStatus};
}
