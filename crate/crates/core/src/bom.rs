//! Bill of materials: mass intensity of each equipment class per unit of
//! capacity, in kg per MVA.
//!
//! Capacity elsewhere in the pipeline is measured in GVA, so a class
//! deploying `P` GVA consumes `1000 * B * P` kg of each material with
//! intensity `B` kg/MVA.

use crate::classes::EquipmentClassId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Once;
use thiserror::Error;

/// Materials tracked by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Steel,
    Copper,
    Aluminum,
    Nickel,
    Zinc,
    Tin,
    Silicon,
    Silver,
    Manganese,
    Magnesium,
}

impl Material {
    pub const ALL: [Material; 10] = [
        Material::Steel,
        Material::Copper,
        Material::Aluminum,
        Material::Nickel,
        Material::Zinc,
        Material::Tin,
        Material::Silicon,
        Material::Silver,
        Material::Manganese,
        Material::Magnesium,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Material::Steel => "steel",
            Material::Copper => "copper",
            Material::Aluminum => "aluminum",
            Material::Nickel => "nickel",
            Material::Zinc => "zinc",
            Material::Tin => "tin",
            Material::Silicon => "silicon",
            Material::Silver => "silver",
            Material::Manganese => "manganese",
            Material::Magnesium => "magnesium",
        }
    }

    pub fn parse(s: &str) -> Option<Material> {
        Material::ALL.into_iter().find(|m| m.id() == s)
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Error)]
pub enum BomError {
    #[error("{path}: row {row}: {message}")]
    Schema {
        path: String,
        row: usize,
        message: String,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("intensity for ({material}, {class}) must be nonnegative and finite: got {value}")]
    InvalidIntensity {
        material: Material,
        class: EquipmentClassId,
        value: f64,
    },
}

/// Dense material-by-class intensity matrix in kg/MVA. Cells that were never
/// set read as zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BomMatrix {
    cells: BTreeMap<Material, BTreeMap<EquipmentClassId, f64>>,
}

impl BomMatrix {
    pub fn new() -> BomMatrix {
        BomMatrix::default()
    }

    /// Intensity in kg/MVA; zero when the cell is absent.
    pub fn get(&self, material: Material, class: EquipmentClassId) -> f64 {
        self.cells
            .get(&material)
            .and_then(|row| row.get(&class))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn set(
        &mut self,
        material: Material,
        class: EquipmentClassId,
        kg_per_mva: f64,
    ) -> Result<(), BomError> {
        if !kg_per_mva.is_finite() || kg_per_mva < 0.0 {
            return Err(BomError::InvalidIntensity {
                material,
                class,
                value: kg_per_mva,
            });
        }
        self.cells.entry(material).or_default().insert(class, kg_per_mva);
        Ok(())
    }

    /// Materials with a positive intensity for at least one class.
    pub fn used_materials(&self) -> Vec<Material> {
        Material::ALL
            .into_iter()
            .filter(|m| {
                EquipmentClassId::ALL
                    .iter()
                    .any(|c| self.get(*m, *c) > 0.0)
            })
            .collect()
    }
}

/// Mass requirement in kg for a set of (class, capacity-in-GVA) amounts.
pub fn material_demand(
    amounts: impl IntoIterator<Item = (EquipmentClassId, f64)>,
    bom: &BomMatrix,
) -> BTreeMap<Material, f64> {
    let mut out: BTreeMap<Material, f64> = BTreeMap::new();
    for (class, gva) in amounts {
        for material in Material::ALL {
            let intensity = bom.get(material, class);
            if intensity > 0.0 {
                *out.entry(material).or_insert(0.0) += intensity * gva * 1000.0;
            }
        }
    }
    out
}

/// Total intensity of a class and its materials ranked by mass share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassIntensity {
    /// Sum over materials, kg/MVA.
    pub total_kg_per_mva: f64,
    /// (material, kg/MVA) pairs, heaviest first.
    pub ranked: Vec<(Material, f64)>,
}

/// Per-class intensity totals and rankings, heaviest material first.
pub fn intensity_ranking(bom: &BomMatrix) -> BTreeMap<EquipmentClassId, ClassIntensity> {
    let mut out = BTreeMap::new();
    for class in EquipmentClassId::ALL {
        let mut ranked: Vec<(Material, f64)> = Material::ALL
            .into_iter()
            .map(|m| (m, bom.get(m, class)))
            .filter(|(_, v)| *v > 0.0)
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("intensities are finite"));
        let total = ranked.iter().map(|(_, v)| v).sum();
        out.insert(
            class,
            ClassIntensity {
                total_kg_per_mva: total,
                ranked,
            },
        );
    }
    out
}

/// Embedded default intensities.
///
/// Tin, silicon and magnesium content of DC transformers, PMSG converters
/// and battery PCS has no published per-MVA figure, so those cells stay at
/// zero here; supply a BOM file to fill them.
pub fn default_bom() -> BomMatrix {
    static WARN_ONCE: Once = Once::new();
    WARN_ONCE.call_once(|| {
        log::warn!(
            "embedded BOM: tin/silicon/magnesium cells are zero (no measured kg/MVA); \
             load a BOM file to override"
        );
    });
    use EquipmentClassId::*;
    use Material::*;
    let mut bom = BomMatrix::new();
    let cells: &[(Material, EquipmentClassId, f64)] = &[
        (Steel, Transformer, 1030.0),
        (Copper, Transformer, 66.1),
        (Aluminum, Transformer, 16.07),
        (Steel, BatteryPcs, 370.92),
        (Aluminum, BatteryPcs, 91.476),
        (Copper, BatteryPcs, 30.954),
        (Aluminum, DfigConverter, 2011.0),
        (Copper, DfigConverter, 256.6),
        (Zinc, DfigConverter, 133.4),
        (Silver, DfigConverter, 3.132),
        (Steel, PmsgConverter, 1102.0),
        (Copper, PmsgConverter, 519.1),
        (Steel, SpvInverter, 2640.0),
        (Copper, SpvInverter, 370.0),
        (Aluminum, SpvInverter, 30.4),
        (Nickel, SpvInverter, 6.85),
        (Steel, DcTransformer, 445.728),
        (Copper, DcTransformer, 280.416),
        (Aluminum, DcTransformer, 129.792),
        (Steel, DcUps, 441.6),
        (Aluminum, DcUps, 86.4),
        (Copper, DcUps, 70.4),
        (Steel, EvChargerPcs, 353.16),
        (Copper, EvChargerPcs, 306.508),
        (Aluminum, EvChargerPcs, 264.979),
        (Manganese, EvChargerPcs, 22.999),
    ];
    for (material, class, value) in cells {
        bom.set(*material, *class, *value)
            .expect("embedded intensities are valid");
    }
    bom
}

#[derive(Debug, Deserialize)]
struct BomRow {
    material: String,
    equipment_class: String,
    kg_per_mva: f64,
}

/// Loads a complete BOM from a `material, equipment_class, kg_per_mva` CSV.
///
/// The file replaces the embedded defaults entirely; cells it does not list
/// are zero. Duplicate cells, unknown names and negative intensities are
/// rejected.
pub fn load_bom_csv(path: &Path) -> Result<BomMatrix, BomError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(&display, e))?;
    let mut bom = BomMatrix::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, row) in reader.deserialize::<BomRow>().enumerate() {
        let row = row.map_err(|e| BomError::Csv {
            path: display.clone(),
            source: e,
        })?;
        let schema = |message: String| BomError::Schema {
            path: display.clone(),
            row: i + 2,
            message,
        };
        let material = Material::parse(&row.material)
            .ok_or_else(|| schema(format!("unknown material '{}'", row.material)))?;
        let class = EquipmentClassId::parse(&row.equipment_class)
            .ok_or_else(|| schema(format!("unknown equipment class '{}'", row.equipment_class)))?;
        if !seen.insert((material, class)) {
            return Err(schema(format!("duplicate cell ({material}, {class})")));
        }
        bom.set(material, class, row.kg_per_mva)
            .map_err(|e| schema(e.to_string()))?;
    }
    Ok(bom)
}

/// Writes every cell of the matrix (zeros included) as CSV. Values use the
/// shortest exact `f64` representation, so a load/write/load cycle is
/// bit-exact.
pub fn write_bom_csv<W: Write>(bom: &BomMatrix, out: W) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["material", "equipment_class", "kg_per_mva"])?;
    for material in Material::ALL {
        for class in EquipmentClassId::ALL {
            w.write_record([
                material.id(),
                class.id(),
                &format!("{}", bom.get(material, class)),
            ])?;
        }
    }
    w.flush()
}

fn csv_open_error(path: &str, e: csv::Error) -> BomError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return BomError::Io {
                path: path.to_string(),
                source: io,
            };
        }
        unreachable!("is_io_error implies Io kind");
    }
    BomError::Csv {
        path: path.to_string(),
        source: e,
    }
}
