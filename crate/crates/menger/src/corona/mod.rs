//! Stopping-time trees below doubling cubes and the corona built from them.

mod params;
mod top;
mod tree;

pub use params::{Params, SlopeRule};
pub use top::{
    beta_packing_sum, build_top, id_classify, packing_sum, stop_mass_report, BetaPackingRecord, CoronaDecomposition,
    CoronaDump, FamilyMass, IdClass, PackingRecord, StopMassReport, TreeDump,
};
pub use tree::{build_tree, Label, NextParts, StopVerdict, TreeDecomposition};
