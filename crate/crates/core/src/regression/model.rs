use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::basis::{base_values, BaseFeature, MonomialDescriptor, PolynomialBasis};
use super::lstsq::fit_columns;
use super::metrics::{EvaluationReport, MetricBlock};
use super::split::train_test_split;
use super::RegressionError;
use crate::features::SampleRecord;

/// Label attached to importance rankings in reports.
pub const IMPORTANCE_METRIC: &str = "standardized_coefficient_magnitude";

/// Fitted polynomial speed model, in natural feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionModel {
    pub degree: u32,
    pub base_features: Vec<BaseFeature>,
    pub monomials: Vec<MonomialDescriptor>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub train_metrics: Option<MetricBlock>,
    pub test_metrics: Option<MetricBlock>,
}

fn labelled_speeds(records: &[SampleRecord]) -> Result<Vec<f64>, RegressionError> {
    records
        .iter()
        .map(|r| {
            r.speed_kmh.ok_or_else(|| RegressionError::Unlabeled {
                sample_id: r.sample_id.clone(),
            })
        })
        .collect()
}

impl RegressionModel {
    /// Least-squares fit of `basis` over all of `records`.
    pub fn fit(basis: &PolynomialBasis, records: &[SampleRecord]) -> Result<Self, RegressionError> {
        let speeds = labelled_speeds(records)?;
        let rows: Vec<Vec<f64>> = records.iter().map(|r| basis.expand(r)).collect();
        let row_refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let labels: Vec<String> = basis
            .monomials()
            .iter()
            .map(|m| m.display_name.clone())
            .collect();
        let fit = fit_columns(&row_refs, &speeds, &labels)?;
        Ok(Self {
            degree: basis.degree(),
            base_features: basis.bases().to_vec(),
            monomials: basis.monomials().to_vec(),
            intercept: fit.intercept,
            coefficients: fit.coefficients,
            feature_means: fit.feature_means,
            feature_stds: fit.feature_stds,
            split_seed: 0,
            train_fraction: 1.0,
            train_metrics: None,
            test_metrics: None,
        })
    }

    /// Rebuilds the basis this model was fitted with, rejecting models whose
    /// stored monomials differ from the canonical set.
    pub fn basis(&self) -> Result<PolynomialBasis, RegressionError> {
        let basis = PolynomialBasis::new(self.degree, &self.base_features)?;
        if basis.monomials() != self.monomials.as_slice() {
            return Err(RegressionError::SchemaMismatch(format!(
                "monomials do not match the degree-{} basis over {:?}",
                self.degree, self.base_features
            )));
        }
        Ok(basis)
    }

    pub fn validate(&self) -> Result<(), RegressionError> {
        self.basis()?;
        let p = self.monomials.len();
        for (name, len) in [
            ("coefficients", self.coefficients.len()),
            ("feature_means", self.feature_means.len()),
            ("feature_stds", self.feature_stds.len()),
        ] {
            if len != p {
                return Err(RegressionError::SchemaMismatch(format!(
                    "{name} has {len} entries for {p} monomials"
                )));
            }
        }
        let finite = std::iter::once(&self.intercept)
            .chain(&self.coefficients)
            .chain(&self.feature_means)
            .chain(&self.feature_stds)
            .all(|v| v.is_finite());
        if !finite || self.feature_stds.iter().any(|s| *s < 0.0) {
            return Err(RegressionError::SchemaMismatch(
                "non-finite parameter or negative feature std".into(),
            ));
        }
        Ok(())
    }

    pub fn num_predictors(&self) -> usize {
        self.monomials.len()
    }

    /// Linear-model form of `predict` for callers without a record.
    pub fn predict_base(&self, base: [f64; 3]) -> f64 {
        self.intercept
            + self
                .monomials
                .iter()
                .zip(&self.coefficients)
                .map(|(m, c)| c * m.eval(base))
                .sum::<f64>()
    }
}

/// Predicted speed in km/h; negative values are returned unchanged.
pub fn predict(model: &RegressionModel, record: &SampleRecord) -> f64 {
    model.predict_base(base_values(record))
}

pub fn evaluate(
    model: &RegressionModel,
    records: &[SampleRecord],
) -> Result<EvaluationReport, RegressionError> {
    let actual = labelled_speeds(records)?;
    let predicted = records.iter().map(|r| predict(model, r)).collect();
    EvaluationReport::new(&actual, predicted, model.num_predictors())
}

/// `|coefficient| × training std` per monomial, largest first; ties keep
/// canonical monomial order.
pub fn feature_importance(model: &RegressionModel) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = model
        .monomials
        .iter()
        .zip(model.coefficients.iter().zip(&model.feature_stds))
        .map(|(m, (c, s))| (m.display_name.clone(), c.abs() * s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

/// Model plus the partition and evaluations that produced it.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: RegressionModel,
    pub train: Vec<SampleRecord>,
    pub test: Vec<SampleRecord>,
    pub train_report: EvaluationReport,
    /// `None` when the test split has too little spread for R².
    pub test_report: Option<EvaluationReport>,
}

/// Splits `records`, fits on the training part and evaluates on both parts.
pub fn train_and_evaluate(
    records: &[SampleRecord],
    basis: &PolynomialBasis,
    test_fraction: f64,
    seed: u64,
) -> Result<TrainingOutcome, RegressionError> {
    labelled_speeds(records)?;
    let (train, test) = train_test_split(records, test_fraction, seed)?;
    let mut model = RegressionModel::fit(basis, &train)?;
    model.split_seed = seed;
    model.train_fraction = 1.0 - test_fraction;
    let train_report = evaluate(&model, &train)?;
    let test_report = match evaluate(&model, &test) {
        Ok(r) => Some(r),
        Err(RegressionError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    model.train_metrics = Some(train_report.block());
    model.test_metrics = test_report.as_ref().map(EvaluationReport::block);
    Ok(TrainingOutcome {
        model,
        train,
        test,
        train_report,
        test_report,
    })
}

pub fn save_model(model: &RegressionModel, path: impl AsRef<Path>) -> Result<(), RegressionError> {
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RegressionModel, RegressionError> {
    let model: RegressionModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_model(intercept: f64, coefficients: [f64; 3]) -> RegressionModel {
        let basis = PolynomialBasis::full(1).unwrap();
        RegressionModel {
            degree: 1,
            base_features: BaseFeature::ALL.to_vec(),
            monomials: basis.monomials().to_vec(),
            intercept,
            coefficients: coefficients.to_vec(),
            feature_means: vec![0.0; 3],
            feature_stds: vec![1.0; 3],
            split_seed: 0,
            train_fraction: 1.0,
            train_metrics: None,
            test_metrics: None,
        }
    }

    fn random_records(
        n: usize,
        seed: u64,
        speed: impl Fn(f64, f64, f64) -> f64,
    ) -> Vec<SampleRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let t = rng.random_range(2.0..6.0);
                let a = rng.random_range(-3.0..0.0);
                let d = rng.random_range(1.0..50.0);
                SampleRecord::new(format!("s{i}"), t, a, d).with_speed(speed(t, a, d))
            })
            .collect()
    }

    /// Horner-free reference evaluation straight from the exponent triples.
    fn reference_eval(model: &RegressionModel, base: [f64; 3]) -> f64 {
        let mut total = model.intercept;
        for (m, c) in model.monomials.iter().zip(&model.coefficients) {
            let mut term = *c;
            for (k, &e) in m.exponents.iter().enumerate() {
                for _ in 0..e {
                    term *= base[k];
                }
            }
            total += term;
        }
        total
    }

    #[test]
    fn constant_model_predicts_intercept() {
        let model = linear_model(18.0, [0.0; 3]);
        assert_eq!(
            predict(&model, &SampleRecord::new("x", 3.0, -1e5, 7.0)),
            18.0
        );
    }

    #[test]
    fn linear_prediction() {
        let model = linear_model(1.0, [2.0, 3.0, 0.0]);
        assert_eq!(predict(&model, &SampleRecord::new("x", 1.0, 1.0, 5.0)), 6.0);
    }

    #[test]
    fn fit_recovers_linear_generator() {
        let records = random_records(12, 3, |t, a, _| 1.0 + 2.0 * t + 3.0 * a);
        let model = RegressionModel::fit(&PolynomialBasis::full(1).unwrap(), &records).unwrap();
        assert!((model.intercept - 1.0).abs() < 1e-9);
        for (c, want) in model.coefficients.iter().zip([2.0, 3.0, 0.0]) {
            assert!((c - want).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_cubic_fit_matches_reference_evaluation() {
        let records = random_records(60, 5, |t, a, d| {
            4.0 + t * d - 0.5 * a * a * t + 0.01 * d.powi(3)
        });
        let model = RegressionModel::fit(&PolynomialBasis::full(3).unwrap(), &records).unwrap();
        for r in &records {
            let base = base_values(r);
            assert!((predict(&model, r) - reference_eval(&model, base)).abs() < 1e-9);
            assert!((predict(&model, r) - r.speed_kmh.unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn unlabeled_records_are_rejected() {
        let mut records = random_records(10, 1, |t, _, _| t);
        records[4].speed_kmh = None;
        assert!(matches!(
            RegressionModel::fit(&PolynomialBasis::full(1).unwrap(), &records),
            Err(RegressionError::Unlabeled { .. })
        ));
    }

    #[test]
    fn importance_examples() {
        let mut model = linear_model(0.0, [2.0, 1.0, 5.0]);
        model.feature_stds = vec![1.0, 1.0, 0.0];
        let ranked = feature_importance(&model);
        assert_eq!(ranked[0], ("t^1".to_owned(), 2.0));
        assert_eq!(ranked[1], ("area_diff^1".to_owned(), 1.0));
        assert_eq!(ranked[2], ("dist_diff^1".to_owned(), 0.0));

        let records = random_records(10, 9, |_, _, d| 3.0 * d);
        let basis = PolynomialBasis::new(1, &[BaseFeature::DistDiff]).unwrap();
        let single = RegressionModel::fit(&basis, &records).unwrap();
        let ranked = feature_importance(&single);
        assert_eq!(ranked.len(), 1);
        assert!((ranked[0].1 - 3.0 * single.feature_stds[0]).abs() < 1e-9);
    }

    #[test]
    fn importance_ties_keep_canonical_order() {
        let model = linear_model(0.0, [1.0, -1.0, 1.0]);
        let names: Vec<String> = feature_importance(&model)
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        assert_eq!(names, ["t^1", "area_diff^1", "dist_diff^1"]);
    }

    #[test]
    fn model_file_round_trip_and_schema_check() {
        let records = random_records(40, 2, |t, a, d| 10.0 + t + a + d * 0.3);
        let outcome =
            train_and_evaluate(&records, &PolynomialBasis::full(2).unwrap(), 0.2, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&outcome.model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), outcome.model);

        let mut broken = outcome.model.clone();
        broken.monomials.swap(0, 1);
        save_model(&broken, &path).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(RegressionError::SchemaMismatch(_))
        ));

        let mut broken = outcome.model.clone();
        broken.coefficients.pop();
        save_model(&broken, &path).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(RegressionError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn training_outcome_metrics() {
        let records = random_records(50, 4, |t, _, d| 3.6 * d / t);
        let outcome =
            train_and_evaluate(&records, &PolynomialBasis::full(3).unwrap(), 0.2, 42).unwrap();
        assert_eq!(outcome.train.len(), 40);
        assert_eq!(outcome.test.len(), 10);
        assert_eq!(outcome.model.train_fraction, 0.8);
        let train = outcome.model.train_metrics.as_ref().unwrap();
        assert_eq!((train.n, train.p), (40, 19));
        assert!(train.r2 > 0.99);
        // 10 test rows cannot support an adjusted R² with 19 predictors
        assert_eq!(outcome.model.test_metrics.as_ref().unwrap().adj_r2, None);
    }

    #[test]
    fn degree_monotone_training_r2() {
        let records = random_records(80, 8, |t, a, d| 3.6 * d / t + 0.2 * a.sin());
        let r2 = |degree| {
            let basis = PolynomialBasis::full(degree).unwrap();
            let model = RegressionModel::fit(&basis, &records).unwrap();
            evaluate(&model, &records).unwrap().r2
        };
        let (r1, r2_, r3) = (r2(1), r2(2), r2(3));
        assert!(r1 <= r2_ + 1e-12 && r2_ <= r3 + 1e-12, "{r1} {r2_} {r3}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fitted_coefficients_are_locally_optimal(seed: u64, degree in 1u32..=3) {
            let records = random_records(40, seed, |t, a, d| 3.6 * d / t + a);
            let basis = PolynomialBasis::full(degree).unwrap();
            let model = RegressionModel::fit(&basis, &records).unwrap();
            let sse = |m: &RegressionModel| -> f64 {
                records.iter().map(|r| (r.speed_kmh.unwrap() - predict(m, r)).powi(2)).sum()
            };
            let base = sse(&model);
            for j in 0..=model.coefficients.len() {
                for delta in [1e-3, -1e-3] {
                    let mut probe = model.clone();
                    if j == 0 { probe.intercept += delta } else { probe.coefficients[j - 1] += delta }
                    prop_assert!(sse(&probe) >= base * (1.0 - 1e-12));
                }
            }
        }

        #[test]
        fn prediction_ignores_monomial_order(seed: u64, t in 0.5f64..8.0, a in -5.0f64..5.0, d in -20.0f64..20.0) {
            let records = random_records(30, seed, |t, a, d| t * a + d);
            let model = RegressionModel::fit(&PolynomialBasis::full(2).unwrap(), &records).unwrap();
            let mut shuffled = model.clone();
            let mut order: Vec<usize> = (0..model.monomials.len()).collect();
            order.reverse();
            order.rotate_left((seed % 9) as usize);
            shuffled.monomials = order.iter().map(|&i| model.monomials[i].clone()).collect();
            shuffled.coefficients = order.iter().map(|&i| model.coefficients[i]).collect();
            let base = [t, a, d];
            let (x, y) = (model.predict_base(base), shuffled.predict_base(base));
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }

        #[test]
        fn importance_ranking_survives_affine_rescaling(seed: u64, scale in 0.01f64..100.0, shift in -50.0f64..50.0, which in 0usize..3) {
            let records = random_records(40, seed, |t, a, d| 2.0 * t - 4.0 * a + 0.3 * d + (t * d).sin());
            let transformed: Vec<SampleRecord> = records.iter().map(|r| {
                let mut r = r.clone();
                match which {
                    0 => r.t = scale * r.t + shift,
                    1 => r.area_diff = scale * r.area_diff + shift,
                    _ => r.dist_diff = scale * r.dist_diff + shift,
                }
                r
            }).collect();
            let basis = PolynomialBasis::full(1).unwrap();
            let names = |recs: &[SampleRecord]| -> Vec<String> {
                let model = RegressionModel::fit(&basis, recs).unwrap();
                feature_importance(&model).into_iter().map(|(n, _)| n).collect()
            };
            prop_assert_eq!(names(&records), names(&transformed));
        }
    }
}
