//! Equipment taxonomy: the eight GSE classes, the power-system layer each
//! belongs to, and the reporting groups used in gap summaries.
//!
//! Class order is the allocation priority order: the grid layer first, then
//! generation, then consumption, alphabetically within a layer. Everything
//! downstream (LP tie-breaking, CSV row order, map iteration) leans on this
//! ordering being total and stable.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The eight grid-support electronics classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquipmentClassId {
    /// Large power transformers (grid layer).
    Transformer,
    /// Battery-storage power conversion systems.
    BatteryPcs,
    /// Doubly-fed induction generator converters (wind, partial-rated).
    DfigConverter,
    /// Permanent-magnet synchronous generator converters (wind, full-rated).
    PmsgConverter,
    /// Solar photovoltaic inverters.
    SpvInverter,
    /// Data-center distribution transformers.
    DcTransformer,
    /// Data-center uninterruptible power supplies.
    DcUps,
    /// Electric-vehicle charger power conversion systems.
    EvChargerPcs,
}

impl EquipmentClassId {
    /// All classes in allocation priority order.
    pub const ALL: [EquipmentClassId; 8] = [
        EquipmentClassId::Transformer,
        EquipmentClassId::BatteryPcs,
        EquipmentClassId::DfigConverter,
        EquipmentClassId::PmsgConverter,
        EquipmentClassId::SpvInverter,
        EquipmentClassId::DcTransformer,
        EquipmentClassId::DcUps,
        EquipmentClassId::EvChargerPcs,
    ];

    /// Stable string id used in CSV files and CLI output.
    pub fn id(self) -> &'static str {
        match self {
            EquipmentClassId::Transformer => "transformer",
            EquipmentClassId::BatteryPcs => "battery_pcs",
            EquipmentClassId::DfigConverter => "dfig_converter",
            EquipmentClassId::PmsgConverter => "pmsg_converter",
            EquipmentClassId::SpvInverter => "spv_inverter",
            EquipmentClassId::DcTransformer => "dc_transformer",
            EquipmentClassId::DcUps => "dc_ups",
            EquipmentClassId::EvChargerPcs => "ev_charger_pcs",
        }
    }

    /// Parses a string id as written by [`EquipmentClassId::id`].
    pub fn parse(s: &str) -> Option<EquipmentClassId> {
        EquipmentClassId::ALL.into_iter().find(|c| c.id() == s)
    }

    /// Power-system layer this class belongs to.
    pub fn layer(self) -> Layer {
        match self {
            EquipmentClassId::Transformer => Layer::Grid,
            EquipmentClassId::BatteryPcs
            | EquipmentClassId::DfigConverter
            | EquipmentClassId::PmsgConverter
            | EquipmentClassId::SpvInverter => Layer::Generation,
            EquipmentClassId::DcTransformer
            | EquipmentClassId::DcUps
            | EquipmentClassId::EvChargerPcs => Layer::Consumption,
        }
    }

    /// Reporting group for gap summaries.
    pub fn group(self) -> EquipmentGroup {
        match self.layer() {
            Layer::Grid => EquipmentGroup::Transformers,
            Layer::Generation => EquipmentGroup::OtherSupplySide,
            Layer::Consumption => EquipmentGroup::LoadSide,
        }
    }

    /// Position in the priority order (0 = highest priority).
    pub fn priority_position(self) -> usize {
        EquipmentClassId::ALL
            .iter()
            .position(|c| *c == self)
            .expect("class is in ALL")
    }
}

impl fmt::Display for EquipmentClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Power-system layer. Determines the allocation priority weight of a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Grid,
    Generation,
    Consumption,
}

impl Layer {
    pub fn id(self) -> &'static str {
        match self {
            Layer::Grid => "grid",
            Layer::Generation => "generation",
            Layer::Consumption => "consumption",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Reporting groups used in gap summaries: transformers, other supply-side
/// equipment (generation-side converters and inverters), and load-side
/// equipment (data-center and EV infrastructure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquipmentGroup {
    Transformers,
    OtherSupplySide,
    LoadSide,
}

impl EquipmentGroup {
    pub const ALL: [EquipmentGroup; 3] = [
        EquipmentGroup::Transformers,
        EquipmentGroup::OtherSupplySide,
        EquipmentGroup::LoadSide,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EquipmentGroup::Transformers => "transformers",
            EquipmentGroup::OtherSupplySide => "other_supply_side",
            EquipmentGroup::LoadSide => "load_side",
        }
    }
}

impl fmt::Display for EquipmentGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}
