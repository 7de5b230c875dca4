//! Multi-regional supply-use algebra under the industry-technology
//! assumption (ITA), and the material sourcing trace built on top of it.
//!
//! Notation (matrices are dense, region-major: row `r * P + p` is product
//! `p` in region `r`):
//!
//! ```text
//! U  use table, products x industries (monetary units)
//! V  supply table, products x industries
//! g  industry output (column sums of V),  q  product output (row sums of V)
//! B  = U * diag(g)^-1          input coefficients, products x industries
//! C  market shares, industries x products: C[i,p] = V[p,i] / q[p]
//! A  = B * C                   product-by-product ITA coefficients
//! L_n = sum of A^k for k = 0..n   layered (Neumann) requirements
//! ```
//!
//! `L_n * f` approximates total requirements `(I - A)^-1 * f`; the series
//! converges exactly when the spectral radius of `A` is below one, which is
//! checked with a power iteration before any layering.
//!
//! The sourcing trace maps requirement rows to materials through a
//! product-group concordance, converts monetary flows to mass with
//! per-material factors, and attributes mass to the producing region; a
//! trade disruption scales restricted regions' contributions down and
//! renormalizes the shares.

use crate::bom::Material;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

/// Convergence tolerance for the power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-10;
/// Iteration cap for the power iteration.
pub const POWER_ITERATION_MAX: usize = 10_000;

#[derive(Debug, Error)]
pub enum MrsutError {
    #[error("{table} must be {expected_rows}x{expected_cols} per the axes, got {rows}x{cols}")]
    Dimension {
        table: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{table}[{row_label}, {col_label}] must be nonnegative and finite: got {value}")]
    BadEntry {
        table: &'static str,
        row_label: String,
        col_label: String,
        value: f64,
    },
    #[error("product '{0}' has zero supply but nonzero use; the tables are inconsistent")]
    UnsuppliedProduct(String),
    #[error("industry '{0}' has zero output but nonzero inputs; the tables are inconsistent")]
    GhostIndustry(String),
    #[error("coefficient matrix is not productive: spectral radius ~{rho:.6} >= 1, the requirement series diverges")]
    NonProductive { rho: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("vector length {got} does not match system dimension {expected}")]
    VectorLength { expected: usize, got: usize },
    #[error("GSE allocation factor must lie in (0, 1]: got {0}")]
    InvalidPhi(f64),
    #[error("trade cut must lie in [0, 1]: got {0}")]
    InvalidCut(f64),
    #[error("concordance references product group '{0}' which is not in the product axis")]
    UnknownConcordanceProduct(String),
    #[error("no mass factor for material {0}")]
    MissingMassFactor(Material),
    #[error("no rows for parent product '{0}' survive in the system")]
    MissingParentProduct(String),
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
    #[error("failed to parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Region, product and industry axes of a supply-use system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisManifest {
    pub regions: Vec<String>,
    pub products: Vec<String>,
    pub industries: Vec<String>,
}

impl AxisManifest {
    pub fn load(path: &Path) -> Result<AxisManifest, MrsutError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| MrsutError::Io {
            path: display.clone(),
            source,
        })?;
        let axes: AxisManifest =
            serde_json::from_str(&text).map_err(|source| MrsutError::Json {
                path: display.clone(),
                source,
            })?;
        for (kind, axis) in [
            ("regions", &axes.regions),
            ("products", &axes.products),
            ("industries", &axes.industries),
        ] {
            if axis.is_empty() {
                return Err(MrsutError::Schema {
                    path: display.clone(),
                    row: 0,
                    message: format!("axis '{kind}' must not be empty"),
                });
            }
            let unique: BTreeSet<&String> = axis.iter().collect();
            if unique.len() != axis.len() {
                return Err(MrsutError::Schema {
                    path: display.clone(),
                    row: 0,
                    message: format!("axis '{kind}' contains duplicate labels"),
                });
            }
        }
        Ok(axes)
    }

    fn row_count(&self) -> usize {
        self.regions.len() * self.products.len()
    }

    fn col_count(&self) -> usize {
        self.regions.len() * self.industries.len()
    }
}

/// A validated multi-regional supply-use system with zero-output rows and
/// columns removed.
#[derive(Debug, Clone)]
pub struct SupplyUseSystem {
    axes: AxisManifest,
    use_table: Array2<f64>,
    supply: Array2<f64>,
    /// Product output q, strictly positive after compaction.
    product_output: Array1<f64>,
    /// Industry output g, strictly positive after compaction.
    industry_output: Array1<f64>,
    /// Surviving (region, product) row labels.
    row_labels: Vec<(String, String)>,
    /// Surviving (region, industry) column labels.
    col_labels: Vec<(String, String)>,
}

impl SupplyUseSystem {
    /// Validates and compacts a system. Tables are dense, region-major, in
    /// the full axis dimensions; rows/columns whose supply is entirely zero
    /// are dropped, but a zero-supply product that is still used (or a
    /// zero-output industry with inputs) is an inconsistency error.
    pub fn new(
        axes: AxisManifest,
        use_table: Array2<f64>,
        supply: Array2<f64>,
    ) -> Result<SupplyUseSystem, MrsutError> {
        let (rows, cols) = (axes.row_count(), axes.col_count());
        for (name, table) in [("use table", &use_table), ("supply table", &supply)] {
            if table.nrows() != rows || table.ncols() != cols {
                return Err(MrsutError::Dimension {
                    table: name,
                    expected_rows: rows,
                    expected_cols: cols,
                    rows: table.nrows(),
                    cols: table.ncols(),
                });
            }
        }
        let row_label = |idx: usize| {
            let (r, p) = (idx / axes.products.len(), idx % axes.products.len());
            format!("{}:{}", axes.regions[r], axes.products[p])
        };
        let col_label = |idx: usize| {
            let (r, i) = (idx / axes.industries.len(), idx % axes.industries.len());
            format!("{}:{}", axes.regions[r], axes.industries[i])
        };
        for (name, table) in [("use table", &use_table), ("supply table", &supply)] {
            for ((i, j), v) in table.indexed_iter() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(MrsutError::BadEntry {
                        table: name,
                        row_label: row_label(i),
                        col_label: col_label(j),
                        value: *v,
                    });
                }
            }
        }
        let q_full: Vec<f64> = (0..rows).map(|i| supply.row(i).sum()).collect();
        let g_full: Vec<f64> = (0..cols).map(|j| supply.column(j).sum()).collect();
        let mut keep_rows = Vec::new();
        for (i, q) in q_full.iter().enumerate() {
            if *q > 0.0 {
                keep_rows.push(i);
            } else if use_table.row(i).iter().any(|v| *v > 0.0) {
                return Err(MrsutError::UnsuppliedProduct(row_label(i)));
            }
        }
        let mut keep_cols = Vec::new();
        for (j, g) in g_full.iter().enumerate() {
            if *g > 0.0 {
                keep_cols.push(j);
            } else if use_table.column(j).iter().any(|v| *v > 0.0) {
                return Err(MrsutError::GhostIndustry(col_label(j)));
            }
        }
        let dropped = (rows - keep_rows.len()) + (cols - keep_cols.len());
        if dropped > 0 {
            log::info!(
                "supply-use system: dropped {} zero-output rows/columns ({} rows, {} columns remain)",
                dropped,
                keep_rows.len(),
                keep_cols.len()
            );
        }
        let compact = |table: &Array2<f64>| {
            let mut out = Array2::zeros((keep_rows.len(), keep_cols.len()));
            for (a, &i) in keep_rows.iter().enumerate() {
                for (b, &j) in keep_cols.iter().enumerate() {
                    out[[a, b]] = table[[i, j]];
                }
            }
            out
        };
        let row_labels = keep_rows
            .iter()
            .map(|&i| {
                let (r, p) = (i / axes.products.len(), i % axes.products.len());
                (axes.regions[r].clone(), axes.products[p].clone())
            })
            .collect();
        let col_labels = keep_cols
            .iter()
            .map(|&j| {
                let (r, i) = (j / axes.industries.len(), j % axes.industries.len());
                (axes.regions[r].clone(), axes.industries[i].clone())
            })
            .collect();
        let product_output = Array1::from_iter(keep_rows.iter().map(|&i| q_full[i]));
        let industry_output = Array1::from_iter(keep_cols.iter().map(|&j| g_full[j]));
        Ok(SupplyUseSystem {
            axes,
            use_table: compact(&use_table),
            supply: compact(&supply),
            product_output,
            industry_output,
            row_labels,
            col_labels,
        })
    }

    pub fn axes(&self) -> &AxisManifest {
        &self.axes
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn use_table(&self) -> &Array2<f64> {
        &self.use_table
    }

    pub fn supply(&self) -> &Array2<f64> {
        &self.supply
    }

    pub fn product_output(&self) -> &Array1<f64> {
        &self.product_output
    }

    pub fn industry_output(&self) -> &Array1<f64> {
        &self.industry_output
    }

    /// Surviving (region, product) labels in row order.
    pub fn row_labels(&self) -> &[(String, String)] {
        &self.row_labels
    }

    /// Surviving (region, industry) labels in column order.
    pub fn col_labels(&self) -> &[(String, String)] {
        &self.col_labels
    }

    /// Indices of surviving rows carrying `product`, across regions.
    pub fn product_rows(&self, product: &str) -> Vec<usize> {
        self.row_labels
            .iter()
            .enumerate()
            .filter(|(_, (_, p))| p == product)
            .map(|(i, _)| i)
            .collect()
    }

    /// Input coefficients `B = U * diag(g)^-1` (products x industries).
    pub fn normalize_use(&self) -> Array2<f64> {
        let mut b = self.use_table.clone();
        for (j, mut col) in b.columns_mut().into_iter().enumerate() {
            col /= self.industry_output[j];
        }
        b
    }

    /// Market shares `C` (industries x products): the fraction of product
    /// `p`'s output supplied by industry `i`. Columns sum to one.
    pub fn market_shares(&self) -> Array2<f64> {
        let mut c = Array2::zeros((self.n_cols(), self.n_rows()));
        for p in 0..self.n_rows() {
            for i in 0..self.n_cols() {
                c[[i, p]] = self.supply[[p, i]] / self.product_output[p];
            }
        }
        c
    }

    /// Product-by-product ITA coefficients `A = B * C`.
    pub fn ita_coefficients(&self) -> Array2<f64> {
        self.normalize_use().dot(&self.market_shares())
    }
}

/// Result of a power iteration for the dominant eigenvalue magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates the spectral radius of a nonnegative square matrix by power
/// iteration from the all-ones vector.
pub fn spectral_radius(a: &Array2<f64>) -> Result<SpectralEstimate, MrsutError> {
    if a.nrows() != a.ncols() {
        return Err(MrsutError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(SpectralEstimate {
            rho: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut x = Array1::from_elem(n, 1.0);
    let mut lambda = 0.0;
    for it in 1..=POWER_ITERATION_MAX {
        let y = a.dot(&x);
        let norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm == 0.0 {
            return Ok(SpectralEstimate {
                rho: 0.0,
                iterations: it,
                converged: true,
            });
        }
        let next = norm;
        x = y / norm;
        if (next - lambda).abs() <= POWER_ITERATION_TOL * next.max(1.0) {
            return Ok(SpectralEstimate {
                rho: next,
                iterations: it,
                converged: true,
            });
        }
        lambda = next;
    }
    Ok(SpectralEstimate {
        rho: lambda,
        iterations: POWER_ITERATION_MAX,
        converged: false,
    })
}

fn max_row_sum_norm(a: &Array2<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

fn max_col_sum_norm(a: &Array2<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

/// Truncated Neumann series `L_n = I + A + ... + A^n` with convergence
/// diagnostics.
#[derive(Debug, Clone)]
pub struct LayeredRequirements {
    cumulative: Array2<f64>,
    layers_used: usize,
    layer_norms: Vec<f64>,
    residual_bound: Option<f64>,
    spectral_radius: f64,
}

impl LayeredRequirements {
    /// The partial sum `L_n`.
    pub fn cumulative(&self) -> &Array2<f64> {
        &self.cumulative
    }

    /// Highest power of `A` included in the sum.
    pub fn layers_used(&self) -> usize {
        self.layers_used
    }

    /// Max-abs entry of each `A^k` term, `k = 1..=layers_used`.
    pub fn layer_norms(&self) -> &[f64] {
        &self.layer_norms
    }

    /// Upper bound on the truncation error in the max-row-sum norm,
    /// `|A|^(n+1) / (1 - |A|)`; `None` when that norm is >= 1.
    pub fn residual_bound(&self) -> Option<f64> {
        self.residual_bound
    }

    /// Power-iteration estimate of the spectral radius of `A`.
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// Total requirements `L_n * f` for a final-demand vector.
    pub fn requirements(&self, final_demand: &Array1<f64>) -> Result<Array1<f64>, MrsutError> {
        if final_demand.len() != self.cumulative.nrows() {
            return Err(MrsutError::VectorLength {
                expected: self.cumulative.nrows(),
                got: final_demand.len(),
            });
        }
        Ok(self.cumulative.dot(final_demand))
    }
}

/// Sums the Neumann series up to `max_layers`, stopping early once a term's
/// max-abs entry drops below `tol`.
///
/// Rejects non-productive systems: when the spectral radius estimate is at
/// least one and no induced norm certifies convergence, the series diverges
/// and truncating it would silently understate requirements.
pub fn neumann_layers(
    a: &Array2<f64>,
    max_layers: usize,
    tol: f64,
) -> Result<LayeredRequirements, MrsutError> {
    if a.nrows() != a.ncols() {
        return Err(MrsutError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let estimate = spectral_radius(a)?;
    let row_norm = max_row_sum_norm(a);
    let col_norm = max_col_sum_norm(a);
    let norm_certifies = row_norm < 1.0 || col_norm < 1.0;
    if estimate.rho >= 1.0 && !norm_certifies {
        return Err(MrsutError::NonProductive { rho: estimate.rho });
    }
    let n = a.nrows();
    let mut cumulative = Array2::eye(n);
    let mut term = Array2::eye(n);
    let mut layer_norms = Vec::new();
    let mut layers_used = 0;
    for _ in 1..=max_layers {
        term = term.dot(a);
        cumulative += &term;
        layers_used += 1;
        let norm = term.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        layer_norms.push(norm);
        if norm < tol {
            break;
        }
    }
    let residual_bound = if row_norm < 1.0 {
        Some(row_norm.powi(layers_used as i32 + 1) / (1.0 - row_norm))
    } else {
        None
    };
    Ok(LayeredRequirements {
        cumulative,
        layers_used,
        layer_norms,
        residual_bound,
        spectral_radius: estimate.rho,
    })
}

/// Scales the parent-sector rows of a final-demand vector by the GSE
/// allocation factor `phi` and zeroes everything else, isolating the share
/// of the parent sector attributable to grid-support electronics.
pub fn gse_final_demand(
    final_demand: &Array1<f64>,
    parent_rows: &[usize],
    phi: f64,
) -> Result<Array1<f64>, MrsutError> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(MrsutError::InvalidPhi(phi));
    }
    let mut out = Array1::zeros(final_demand.len());
    for &row in parent_rows {
        if row >= final_demand.len() {
            return Err(MrsutError::VectorLength {
                expected: final_demand.len(),
                got: row + 1,
            });
        }
        out[row] = phi * final_demand[row];
    }
    Ok(out)
}

/// Product-group-to-material concordance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concordance {
    map: BTreeMap<String, Material>,
}

impl Concordance {
    pub fn new(map: BTreeMap<String, Material>) -> Concordance {
        Concordance { map }
    }

    pub fn material_for(&self, product: &str) -> Option<Material> {
        self.map.get(product).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, Material)> {
        self.map.iter().map(|(k, v)| (k, *v))
    }

    /// Ensures every mapped product group exists on the product axis.
    pub fn validate_against(&self, axes: &AxisManifest) -> Result<(), MrsutError> {
        for group in self.map.keys() {
            if !axes.products.contains(group) {
                return Err(MrsutError::UnknownConcordanceProduct(group.clone()));
            }
        }
        Ok(())
    }

    /// Loads a `product_group, material` CSV.
    pub fn load(path: &Path) -> Result<Concordance, MrsutError> {
        #[derive(Deserialize)]
        struct Row {
            product_group: String,
            material: String,
        }
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_open_error(&display, e))?;
        let mut map = BTreeMap::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| MrsutError::Csv {
                path: display.clone(),
                source: e,
            })?;
            let schema = |message: String| MrsutError::Schema {
                path: display.clone(),
                row: i + 2,
                message,
            };
            let material = Material::parse(&row.material)
                .ok_or_else(|| schema(format!("unknown material '{}'", row.material)))?;
            if map.insert(row.product_group.clone(), material).is_some() {
                return Err(schema(format!(
                    "duplicate product group '{}'",
                    row.product_group
                )));
            }
        }
        Ok(Concordance { map })
    }
}

/// Monetary-to-mass conversion factors, kg per unit of product value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassFactors {
    map: BTreeMap<Material, f64>,
}

impl MassFactors {
    pub fn new(map: BTreeMap<Material, f64>) -> MassFactors {
        MassFactors { map }
    }

    pub fn get(&self, material: Material) -> Option<f64> {
        self.map.get(&material).copied()
    }

    /// Loads a `material, kg_per_unit_value` CSV.
    pub fn load(path: &Path) -> Result<MassFactors, MrsutError> {
        #[derive(Deserialize)]
        struct Row {
            material: String,
            kg_per_unit_value: f64,
        }
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_open_error(&display, e))?;
        let mut map = BTreeMap::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| MrsutError::Csv {
                path: display.clone(),
                source: e,
            })?;
            let schema = |message: String| MrsutError::Schema {
                path: display.clone(),
                row: i + 2,
                message,
            };
            let material = Material::parse(&row.material)
                .ok_or_else(|| schema(format!("unknown material '{}'", row.material)))?;
            if !row.kg_per_unit_value.is_finite() || row.kg_per_unit_value <= 0.0 {
                return Err(schema(format!(
                    "mass factor must be positive and finite: got {}",
                    row.kg_per_unit_value
                )));
            }
            if map.insert(material, row.kg_per_unit_value).is_some() {
                return Err(schema(format!("duplicate material '{material}'")));
            }
        }
        Ok(MassFactors { map })
    }
}

/// Mass of each material attributable to the traced final demand, by
/// producing region (kg).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MaterialSourcing {
    per_material: BTreeMap<Material, BTreeMap<String, f64>>,
}

impl MaterialSourcing {
    pub fn materials(&self) -> impl Iterator<Item = Material> + '_ {
        self.per_material.keys().copied()
    }

    /// Region-to-mass map for one material (kg).
    pub fn regional_mass(&self, material: Material) -> Option<&BTreeMap<String, f64>> {
        self.per_material.get(&material)
    }

    /// Total mass of one material across regions (kg).
    pub fn total(&self, material: Material) -> f64 {
        self.per_material
            .get(&material)
            .map(|m| m.values().sum())
            .unwrap_or(0.0)
    }

    /// Regional shares of one material (fractions summing to 1, empty map
    /// when the total is zero).
    pub fn shares(&self, material: Material) -> BTreeMap<String, f64> {
        let total = self.total(material);
        if total <= 0.0 {
            return BTreeMap::new();
        }
        self.per_material
            .get(&material)
            .map(|m| m.iter().map(|(r, v)| (r.clone(), v / total)).collect())
            .unwrap_or_default()
    }

    /// Total availability per material (kg), the allocator's input.
    pub fn availability(&self) -> BTreeMap<Material, f64> {
        self.per_material
            .keys()
            .map(|m| (*m, self.total(*m)))
            .collect()
    }
}

/// Traces embodied material mass by producing region for a final-demand
/// vector on the system's (surviving) row space.
///
/// Requirement rows whose product group appears in the concordance are
/// converted to mass via the material's factor and attributed to the row's
/// region; other rows (services, non-material products) are ignored.
pub fn trace_material_sourcing(
    system: &SupplyUseSystem,
    layers: &LayeredRequirements,
    final_demand: &Array1<f64>,
    concordance: &Concordance,
    mass_factors: &MassFactors,
) -> Result<MaterialSourcing, MrsutError> {
    concordance.validate_against(system.axes())?;
    let x = layers.requirements(final_demand)?;
    let mut per_material: BTreeMap<Material, BTreeMap<String, f64>> = BTreeMap::new();
    for (row, (region, product)) in system.row_labels().iter().enumerate() {
        if let Some(material) = concordance.material_for(product) {
            let factor = mass_factors
                .get(material)
                .ok_or(MrsutError::MissingMassFactor(material))?;
            *per_material
                .entry(material)
                .or_default()
                .entry(region.clone())
                .or_insert(0.0) += x[row] * factor;
        }
    }
    Ok(MaterialSourcing { per_material })
}

/// Scales restricted regions' contributions by `1 - cut` for every
/// material. Shares and availability renormalize automatically since they
/// derive from the stored masses.
pub fn apply_trade_disruption(
    sourcing: &MaterialSourcing,
    restricted_regions: &BTreeSet<String>,
    cut: f64,
) -> Result<MaterialSourcing, MrsutError> {
    if !(0.0..=1.0).contains(&cut) || !cut.is_finite() {
        return Err(MrsutError::InvalidCut(cut));
    }
    let per_material = sourcing
        .per_material
        .iter()
        .map(|(material, regions)| {
            let cutback = regions
                .iter()
                .map(|(region, mass)| {
                    let factor = if restricted_regions.contains(region) {
                        1.0 - cut
                    } else {
                        1.0
                    };
                    (region.clone(), mass * factor)
                })
                .collect();
            (*material, cutback)
        })
        .collect();
    Ok(MaterialSourcing { per_material })
}

/// Loads a supply-use system from triplet CSVs (`row_label, col_label,
/// value` with `region:product` / `region:industry` labels) plus an axes
/// JSON file.
pub fn load_supply_use(
    use_path: &Path,
    supply_path: &Path,
    axes_path: &Path,
) -> Result<SupplyUseSystem, MrsutError> {
    let axes = AxisManifest::load(axes_path)?;
    let use_table = load_triplets(use_path, &axes)?;
    let supply = load_triplets(supply_path, &axes)?;
    SupplyUseSystem::new(axes, use_table, supply)
}

fn load_triplets(path: &Path, axes: &AxisManifest) -> Result<Array2<f64>, MrsutError> {
    #[derive(Deserialize)]
    struct Row {
        row_label: String,
        col_label: String,
        value: f64,
    }
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(&display, e))?;
    let mut table = Array2::zeros((axes.row_count(), axes.col_count()));
    let mut seen = BTreeSet::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| MrsutError::Csv {
            path: display.clone(),
            source: e,
        })?;
        let schema = |message: String| MrsutError::Schema {
            path: display.clone(),
            row: i + 2,
            message,
        };
        let (row_region, product) = row
            .row_label
            .split_once(':')
            .ok_or_else(|| schema(format!("row label '{}' is not region:product", row.row_label)))?;
        let (col_region, industry) = row.col_label.split_once(':').ok_or_else(|| {
            schema(format!(
                "column label '{}' is not region:industry",
                row.col_label
            ))
        })?;
        let r1 = axes
            .regions
            .iter()
            .position(|r| r == row_region)
            .ok_or_else(|| schema(format!("unknown region '{row_region}'")))?;
        let p = axes
            .products
            .iter()
            .position(|x| x == product)
            .ok_or_else(|| schema(format!("unknown product '{product}'")))?;
        let r2 = axes
            .regions
            .iter()
            .position(|r| r == col_region)
            .ok_or_else(|| schema(format!("unknown region '{col_region}'")))?;
        let ind = axes
            .industries
            .iter()
            .position(|x| x == industry)
            .ok_or_else(|| schema(format!("unknown industry '{industry}'")))?;
        let cell = (r1 * axes.products.len() + p, r2 * axes.industries.len() + ind);
        if !seen.insert(cell) {
            return Err(schema(format!(
                "duplicate cell ({}, {})",
                row.row_label, row.col_label
            )));
        }
        table[[cell.0, cell.1]] = row.value;
    }
    Ok(table)
}

fn csv_open_error(path: &str, e: csv::Error) -> MrsutError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return MrsutError::Io {
                path: path.to_string(),
                source: io,
            };
        }
        unreachable!("is_io_error implies Io kind");
    }
    MrsutError::Csv {
        path: path.to_string(),
        source: e,
    }
}
