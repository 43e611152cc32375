//! Refinement studies for the `converge` subcommand.

use std::io::Write as _;
use std::str::FromStr;

use momlab_core::convergence::ConvergenceTable;
use momlab_core::koopman::{
    characteristic_pullback, clebsch_density, evolve_liouville, evolve_wave, ClebschMode, EvolutionMode, EvolveConfig,
};
use momlab_core::suite::studies::{
    berry_flux_study, commutator_pairs, commutator_study, pairing_study, weak_liouville_study,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::run::{phase_dt, phase_setup};
use crate::scenario::{Initial, Scenario, System};

pub const EXPECTED_ORDER: f64 = 2.0;
pub const ORDER_WINDOW: f64 = 0.3;

/// RK4 step of the characteristic oracle.
const ORACLE_DT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Phase-grid scenario against its transport oracle.
    Transport,
    RightLegPairing,
    BerryFlux,
    WeakLiouvilleP,
    WeakLiouvilleQ2,
    WeakLiouvilleQp,
    CommutatorQp,
    CommutatorQ2p2,
    CommutatorHq,
}

impl Quantity {
    pub const ALL: [Quantity; 9] = [
        Quantity::Transport,
        Quantity::RightLegPairing,
        Quantity::BerryFlux,
        Quantity::WeakLiouvilleP,
        Quantity::WeakLiouvilleQ2,
        Quantity::WeakLiouvilleQp,
        Quantity::CommutatorQp,
        Quantity::CommutatorQ2p2,
        Quantity::CommutatorHq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Transport => "transport",
            Quantity::RightLegPairing => "right_leg_pairing",
            Quantity::BerryFlux => "berry_flux",
            Quantity::WeakLiouvilleP => "weak_liouville_p",
            Quantity::WeakLiouvilleQ2 => "weak_liouville_q2",
            Quantity::WeakLiouvilleQp => "weak_liouville_qp",
            Quantity::CommutatorQp => "commutator_qp",
            Quantity::CommutatorQ2p2 => "commutator_q2p2",
            Quantity::CommutatorHq => "commutator_hq",
        }
    }
}

impl FromStr for Quantity {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Quantity::ALL.into_iter().find(|q| q.name() == s).ok_or_else(|| {
            let names: Vec<_> = Quantity::ALL.iter().map(|q| q.name()).collect();
            CliError::Schema(format!("unknown quantity '{s}'; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub level: usize,
    /// Grid nodes per axis, or 0 for time-step refinements.
    pub nodes: usize,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Study {
    pub quantity: Quantity,
    pub levels: Vec<Level>,
    pub table: ConvergenceTable,
}

impl Study {
    pub fn passed(&self) -> bool {
        self.table.monotone && self.table.matches(EXPECTED_ORDER, ORDER_WINDOW)
    }
}

fn doubling(base: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| base << i).collect()
}

fn from_table(quantity: Quantity, nodes: Vec<usize>, table: ConvergenceTable) -> Study {
    let levels = (0..table.h.len())
        .map(|i| Level { level: i, nodes: nodes.get(i).copied().unwrap_or(0), h: table.h[i], dt: table.dt[i], error: table.error[i] })
        .collect();
    Study { quantity, levels, table }
}

/// Scenario-driven transport error at `nodes`: KvN and Liouville against
/// backward characteristics of the initial density, KvH against grid
/// Liouville transport of the initial Clebsch density.
fn transport_error(s: &Scenario, nodes: usize) -> CliResult<Level> {
    let (grid, h, scheme, psi0) = phase_setup(s, nodes)?;
    let dt = phase_dt(s, &h, &grid);
    let t = s.time.as_ref().expect("validated").t_final;
    let cfg = EvolveConfig::new(t, dt).with_scheme(scheme);
    let Initial::ChirpedPacket { center, sigma, .. } = s.initial else { unreachable!("validated") };
    let modulus = |q: f64, p: f64| (-((q - center[0]).powi(2) + (p - center[1]).powi(2)) / (2.0 * sigma * sigma)).exp();
    let (numeric, oracle, dt_used) = match s.system {
        System::Kvn => {
            let (pt, rec) = evolve_wave(&psi0, &h, EvolutionMode::Kvn, &cfg)?;
            let exact = characteristic_pullback(&grid, &h, t, ORACLE_DT, modulus)?;
            (clebsch_density(&pt, ClebschMode::Modulus, scheme)?, exact, rec.dt_used)
        }
        System::Liouville => {
            let f0 = clebsch_density(&psi0, ClebschMode::Modulus, scheme)?;
            let (ft, rec) = evolve_liouville(&f0, &h, &cfg)?;
            let exact = characteristic_pullback(&grid, &h, t, ORACLE_DT, modulus)?;
            (ft, exact, rec.dt_used)
        }
        System::Kvh => {
            let (pt, rec) = evolve_wave(&psi0, &h, EvolutionMode::Kvh, &cfg)?;
            let f0 = clebsch_density(&psi0, ClebschMode::Kvh, scheme)?;
            let (ft, _) = evolve_liouville(&f0, &h, &cfg)?;
            (clebsch_density(&pt, ClebschMode::Kvh, scheme)?, ft, rec.dt_used)
        }
        other => return Err(CliError::Schema(format!("quantity transport needs a kvn, kvh or liouville scenario, got {}", other.name()))),
    };
    Ok(Level { level: 0, nodes, h: grid.hq(), dt: dt_used, error: numeric.relative_l2(&oracle)? })
}

pub fn run_study(quantity: Quantity, scenario: Option<&Scenario>, refinements: usize, seed: u64) -> CliResult<Study> {
    if refinements < 3 {
        return Err(CliError::Schema(format!("--refinements must be at least 3, got {refinements}")));
    }
    let study = match quantity {
        Quantity::Transport => {
            let s = scenario.ok_or_else(|| CliError::Schema("quantity transport needs --scenario".into()))?;
            let base = s.grid.as_ref().map(|g| g.nodes).unwrap_or(0);
            let mut levels = Vec::new();
            for (i, n) in doubling(base, refinements).into_iter().enumerate() {
                let mut l = transport_error(s, n)?;
                l.level = i;
                log::info!("transport level {i}: {n} nodes, error {:.3e}", l.error);
                levels.push(l);
            }
            let table = ConvergenceTable::new(
                format!("transport_{}", s.system.name()),
                levels.iter().map(|l| l.h).collect(),
                levels.iter().map(|l| l.dt).collect(),
                levels.iter().map(|l| l.error).collect(),
            )?;
            Study { quantity, levels, table }
        }
        Quantity::RightLegPairing => {
            let nodes = doubling(32, refinements);
            from_table(quantity, nodes.clone(), pairing_study(&nodes, 1.0)?)
        }
        Quantity::BerryFlux => {
            let nodes = doubling(32, refinements);
            from_table(quantity, nodes.clone(), berry_flux_study(&nodes, 1.0)?.differential)
        }
        Quantity::WeakLiouvilleP | Quantity::WeakLiouvilleQ2 | Quantity::WeakLiouvilleQp => {
            let name = match quantity {
                Quantity::WeakLiouvilleP => "p",
                Quantity::WeakLiouvilleQ2 => "q^2",
                _ => "qp",
            };
            let dts: Vec<f64> = (0..refinements).map(|i| 0.1 / (1u64 << i) as f64).collect();
            let w = weak_liouville_study(&dts, seed)?.into_iter().find(|w| w.test_function == name).expect("catalog test function");
            let table = ConvergenceTable::new(quantity.name(), w.dt.clone(), w.dt, w.residual)?;
            from_table(quantity, Vec::new(), table)
        }
        Quantity::CommutatorQp | Quantity::CommutatorQ2p2 | Quantity::CommutatorHq => {
            let idx = match quantity {
                Quantity::CommutatorQp => 0,
                Quantity::CommutatorQ2p2 => 1,
                _ => 2,
            };
            let (name, h, k) = commutator_pairs().swap_remove(idx);
            let nodes = doubling(64, refinements);
            from_table(quantity, nodes.clone(), commutator_study(&h, &k, &nodes, name)?)
        }
    };
    Ok(study)
}

pub fn write_csv(w: impl std::io::Write, study: &Study) -> CliResult<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "level,nodes,h,dt,error")?;
    for l in &study.levels {
        writeln!(w, "{},{},{:?},{:?},{:?}", l.level, l.nodes, l.h, l.dt, l.error)?;
    }
    Ok(())
}
