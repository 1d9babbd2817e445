//! Spearman-based feature ranking and the leave-k-out elimination schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Band, Statistic};
use crate::ClassId;

/// Ranks with ties replaced by their average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; 0 when either side has no variance.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with average ranks for ties. A constant input
/// yields 0.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Invalid("spearman needs at least two observations".into()));
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    Left,
    Right,
    Midline,
}

/// What a feature column measures, recovered from its name
/// (`<channel>_<band>_<statistic>`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub channel: Option<String>,
    pub band: Option<Band>,
    pub statistic: Option<Statistic>,
}

impl FeatureMeta {
    pub fn parse(name: &str) -> Self {
        let parts: Vec<&str> = name.rsplitn(3, '_').collect();
        if let [stat, band, channel] = parts[..] {
            if let (Some(band), Some(statistic)) = (Band::parse(band), Statistic::parse(stat)) {
                return FeatureMeta {
                    name: name.to_string(),
                    channel: Some(channel.to_string()),
                    band: Some(band),
                    statistic: Some(statistic),
                };
            }
        }
        FeatureMeta {
            name: name.to_string(),
            channel: None,
            band: None,
            statistic: None,
        }
    }

    /// 10-20 convention: odd electrode numbers are on the left, even on the
    /// right, `z` on the midline.
    pub fn hemisphere(&self) -> Option<Hemisphere> {
        let last = self.channel.as_ref()?.chars().last()?;
        match last {
            'z' | 'Z' => Some(Hemisphere::Midline),
            c => c.to_digit(10).map(|d| if d % 2 == 1 { Hemisphere::Left } else { Hemisphere::Right }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub index: usize,
    pub meta: FeatureMeta,
    /// Spearman correlation with the class labels.
    pub class_correlation: f64,
    /// Mean absolute Spearman correlation with the other features.
    pub redundancy: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSum {
    pub band: Band,
    pub total: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub lambda: f64,
    /// Sorted by descending score; ties go to the lower feature index.
    pub features: Vec<RankedFeature>,
    /// Sum of |class correlation| per band, split by hemisphere.
    pub band_sums: Vec<BandSum>,
}

impl FeatureRanking {
    /// Feature indices, best first.
    pub fn order(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.index).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,channel,band,statistic,score,class_correlation,redundancy\n");
        for f in &self.features {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                f.rank,
                f.meta.name,
                f.meta.channel.as_deref().unwrap_or(""),
                f.meta.band.map_or("", Band::name),
                f.meta.statistic.map_or("", Statistic::name),
                f.score,
                f.class_correlation,
                f.redundancy
            ));
        }
        out
    }
}

/// Scores each column by |corr(feature, class)| minus `lambda` times its
/// mean |corr| with the other columns, all Spearman.
///
/// `columns[j]` holds every observation of feature `j`.
pub fn score_features(columns: &[Vec<f64>], names: &[String], labels: &[ClassId], lambda: f64) -> Result<FeatureRanking> {
    let n = columns.len();
    if names.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: names.len(),
        });
    }
    let m = labels.len();
    if m < 2 {
        return Err(Error::Invalid("ranking needs at least two instances".into()));
    }
    if let Some(bad) = columns.iter().find(|c| c.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: bad.len(),
        });
    }
    let label_ranks = average_ranks(&labels.iter().map(|&c| c as f64).collect::<Vec<_>>());
    let ranks: Vec<Vec<f64>> = columns.par_iter().map(|c| average_ranks(c)).collect();
    let class_corr: Vec<f64> = ranks.iter().map(|r| pearson(r, &label_ranks)).collect();

    let redundancy: Vec<f64> = if n < 2 || lambda == 0.0 {
        vec![0.0; n]
    } else {
        (0..n)
            .into_par_iter()
            .map(|j| {
                let total: f64 = (0..n).filter(|&k| k != j).map(|k| pearson(&ranks[j], &ranks[k]).abs()).sum();
                total / (n - 1) as f64
            })
            .collect()
    };

    let metas: Vec<FeatureMeta> = names.iter().map(|s| FeatureMeta::parse(s)).collect();
    let mut features: Vec<RankedFeature> = (0..n)
        .map(|j| RankedFeature {
            rank: 0,
            index: j,
            meta: metas[j].clone(),
            class_correlation: class_corr[j],
            redundancy: redundancy[j],
            score: class_corr[j].abs() - lambda * redundancy[j],
        })
        .collect();
    features.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    for (r, f) in features.iter_mut().enumerate() {
        f.rank = r + 1;
    }

    let band_sums = Band::ALL
        .iter()
        .map(|&band| {
            let mut sum = BandSum {
                band,
                total: 0.0,
                left: 0.0,
                right: 0.0,
            };
            for (meta, c) in metas.iter().zip(&class_corr) {
                if meta.band != Some(band) {
                    continue;
                }
                sum.total += c.abs();
                match meta.hemisphere() {
                    Some(Hemisphere::Left) => sum.left += c.abs(),
                    Some(Hemisphere::Right) => sum.right += c.abs(),
                    _ => {}
                }
            }
            sum
        })
        .collect();

    Ok(FeatureRanking {
        lambda,
        features,
        band_sums,
    })
}

/// Nested prefixes of `order` with sizes `n, n-k, n-2k, ...`, stopping
/// before the size drops below `min_size` (and always above zero).
pub fn leave_k_out_schedule(order: &[usize], k: usize, min_size: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let floor = min_size.max(1);
    let mut out = Vec::new();
    let mut size = order.len();
    while size >= floor && size > 0 {
        out.push(order[..size].to_vec());
        if size < k {
            break;
        }
        size -= k;
    }
    Ok(out)
}
