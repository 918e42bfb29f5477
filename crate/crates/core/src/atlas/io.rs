use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{expected_leads, verify_duality, AtlasConfig, BasisAtlas, BasisIndex, Section};
use crate::numeric::{LaurentExpansion, Point, Scalar};
use crate::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionRecord {
    lambda: i64,
    doubled_index: i64,
    point: Point,
    lead: i64,
    trunc: i64,
    coeffs: Vec<Scalar>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizationRecord {
    lambda: i64,
    doubled_index: i64,
    point: Point,
    value: Scalar,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtlasFile {
    format_version: u32,
    config: AtlasConfig,
    sections: Vec<SectionRecord>,
    #[serde(default)]
    normalizations: Vec<NormalizationRecord>,
}

pub fn atlas_to_json(atlas: &BasisAtlas) -> Result<String, Error> {
    let mut sections = Vec::with_capacity(2 * atlas.sections.len());
    for (&(lambda, n), sec) in &atlas.sections {
        for p in Point::BOTH {
            let e = sec.at(p);
            sections.push(SectionRecord {
                lambda,
                doubled_index: n.doubled(),
                point: p,
                lead: e.lead,
                trunc: e.trunc,
                coeffs: e.coeffs.clone(),
            });
        }
    }
    let normalizations = atlas
        .normalizations
        .iter()
        .map(|(&(lambda, n, point), v)| NormalizationRecord { lambda, doubled_index: n.doubled(), point, value: v.clone() })
        .collect();
    let file = AtlasFile { format_version: FORMAT_VERSION, config: atlas.config.clone(), sections, normalizations };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

/// Parses and validates an atlas document.
pub fn atlas_from_json(text: &str) -> Result<BasisAtlas, Error> {
    let file: AtlasFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "format_version {} unsupported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let config = file.config;
    config.validate()?;
    let mode = config.scalar_mode;
    let mut halves: BTreeMap<(i64, BasisIndex), (Option<LaurentExpansion>, Option<LaurentExpansion>)> = BTreeMap::new();
    for r in file.sections {
        let n = BasisIndex(r.doubled_index);
        if !config.in_window(n) || !config.lambda_range.contains(&r.lambda) {
            return Err(Error::Schema(format!("section (lambda {}, n {n}) outside the configured range", r.lambda)));
        }
        if r.coeffs.iter().any(|c| c.mode() != mode) {
            return Err(Error::Schema(format!("section (lambda {}, n {n}) has scalars of the wrong kind", r.lambda)));
        }
        let e = LaurentExpansion::new(r.point, r.lambda, r.lead, r.coeffs, r.trunc)
            .map_err(|e| Error::Schema(e.to_string()))?;
        let slot = halves.entry((r.lambda, n)).or_default();
        let target = match r.point {
            Point::Plus => &mut slot.0,
            Point::Minus => &mut slot.1,
        };
        if target.replace(e).is_some() {
            return Err(Error::Schema(format!("duplicate section (lambda {}, n {n}, {:?})", r.lambda, r.point)));
        }
    }
    let mut sections = BTreeMap::new();
    for &lambda in &config.lambda_range {
        for n in config.indices() {
            match halves.remove(&(lambda, n)) {
                Some((Some(plus), Some(minus))) => {
                    sections.insert((lambda, n), Section { plus, minus });
                }
                _ => return Err(Error::Schema(format!("missing section f_{{{lambda},{n}}}"))),
            }
        }
    }
    let mut atlas = BasisAtlas { config, sections, normalizations: BTreeMap::new(), genus1: None };
    atlas.fill_normalizations();
    let tol = atlas.tolerance();
    for r in file.normalizations {
        let key = (r.lambda, BasisIndex(r.doubled_index), r.point);
        let stored = atlas
            .normalizations
            .get(&key)
            .ok_or_else(|| Error::Schema(format!("normalization for unknown section {key:?}")))?;
        if r.value.mode() != atlas.mode() || !(&r.value - stored).is_negligible(tol) {
            return Err(Error::Invariant(format!("normalization {key:?} disagrees with the stored expansion")));
        }
    }
    atlas.check_structure()?;
    for &(lambda, n) in atlas.sections.keys() {
        let (lp, lm) = expected_leads(atlas.genus(), lambda, n);
        for (p, lead) in [(Point::Plus, lp), (Point::Minus, lm)] {
            let c = &atlas.normalizations[&(lambda, n, p)];
            if c.is_negligible(tol) {
                return Err(Error::Invariant(format!("leading coefficient of f_{{{lambda},{n}}} at {p:?} vanishes at {lead}")));
            }
        }
    }
    let report = verify_duality(&atlas)?;
    if !report.passes(tol) {
        return Err(Error::Invariant(format!(
            "duality residual {:e} (cross {:e}) above tolerance {tol:e}",
            report.max_residual, report.max_cross
        )));
    }
    Ok(atlas)
}

pub fn save_atlas(atlas: &BasisAtlas, path: &Path) -> Result<(), Error> {
    std::fs::write(path, atlas_to_json(atlas)?)?;
    Ok(())
}

pub fn load_atlas(path: &Path) -> Result<BasisAtlas, Error> {
    atlas_from_json(&std::fs::read_to_string(path)?)
}
