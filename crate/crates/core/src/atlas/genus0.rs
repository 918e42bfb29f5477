use std::collections::BTreeMap;

use super::{AtlasConfig, BasisAtlas, Section};
use crate::numeric::{LaurentExpansion, Point, ScalarMode};
use crate::Error;

/// Monomial basis on the sphere: `f_{lambda,n} = z^{n-lambda} (dz)^lambda`.
///
/// At P- the coordinate is `w = 1/z`, so `(dz)^lambda = (-1)^lambda w^{-2 lambda} (dw)^lambda`.
pub(super) fn build_genus0(config: AtlasConfig) -> Result<BasisAtlas, Error> {
    if config.genus != 0 || !config.scalar_mode.is_exact() {
        return Err(Error::Config("genus-0 construction needs genus 0 and exact scalars".into()));
    }
    let mode = ScalarMode::Exact;
    let mut sections = BTreeMap::new();
    for &lambda in &config.lambda_range {
        let sign = if lambda.rem_euclid(2) == 0 { 1 } else { -1 };
        for n in config.indices() {
            let k = n.as_int().expect("genus-0 indices are integral");
            let plus = LaurentExpansion::monomial(Point::Plus, lambda, k - lambda, mode.one(), config.trunc)?;
            let minus = LaurentExpansion::monomial(Point::Minus, lambda, -k - lambda, mode.from_int(sign), config.trunc)?;
            sections.insert((lambda, n), Section { plus, minus });
        }
    }
    let mut atlas = BasisAtlas { config, sections, normalizations: BTreeMap::new(), genus1: None };
    atlas.fill_normalizations();
    Ok(atlas)
}
