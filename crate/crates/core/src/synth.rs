//! Synthetic corpora with planted, known class signals.
//!
//! Base activations are i.i.d. Gaussian. For each example a fraction `ρ` of
//! token rows carries a class offset of `±½·strength[ℓ]` along a fixed unit
//! direction per layer: class `B` (the positive class) gets `+`, class `A`
//! gets `−`, so the two class means sit `strength[ℓ]` apart and the global
//! mean stays at zero.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{cohort_of, ActivationStore, ExampleActivations, ExampleMeta, Medium, Nationality, Role, TemplateFamily};
use crate::error::{Error, Result};
use crate::par::{self, derive_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_examples: usize,
    pub n_layers: usize,
    pub hidden_dim: usize,
    /// Inclusive token-count range per example.
    pub tokens_min: usize,
    pub tokens_max: usize,
    /// Fraction of examples in class `B`.
    pub class_balance: f64,
    pub signal_direction_seed: u64,
    /// Between-class mean gap along the plant direction, one entry per layer.
    pub strength_profile: Vec<f64>,
    /// Fraction of token rows carrying the plant.
    pub token_sparsity: f64,
    pub noise_sd: f64,
    /// Relative weights of BASE, ALT, THEORY templates.
    pub family_weights: [f64; 3],
    /// Per-family multiplier on the strength profile (missing families use 1).
    #[serde(default)]
    pub family_specific_strength: Option<BTreeMap<TemplateFamily, f64>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_examples: 270,
            n_layers: 36,
            hidden_dim: 64,
            tokens_min: 150,
            tokens_max: 250,
            class_balance: 0.5,
            signal_direction_seed: 17,
            strength_profile: vec![0.0; 36],
            token_sparsity: 1.0,
            noise_sd: 1.0,
            family_weights: [1.0, 1.0, 1.0],
            family_specific_strength: None,
            seed: 20260325,
        }
    }
}

impl SynthConfig {
    /// Default-shaped corpus with a single planted layer.
    pub fn planted_at(layer: usize, strength: f64) -> Self {
        let mut c = Self::default();
        c.strength_profile[layer] = strength;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_examples < 2 || self.n_layers == 0 || self.hidden_dim == 0 {
            return bad("n_examples >= 2, n_layers >= 1 and hidden_dim >= 1 are required".into());
        }
        if self.tokens_min == 0 || self.tokens_min > self.tokens_max {
            return bad(format!("invalid token range {}..={}", self.tokens_min, self.tokens_max));
        }
        if self.strength_profile.len() != self.n_layers {
            return bad(format!(
                "strength profile has {} entries for {} layers",
                self.strength_profile.len(),
                self.n_layers
            ));
        }
        if self.strength_profile.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("strengths must be finite and nonnegative".into());
        }
        if !(self.token_sparsity > 0.0 && self.token_sparsity <= 1.0) {
            return bad(format!("token sparsity must be in (0,1], got {}", self.token_sparsity));
        }
        if self.token_sparsity * (self.tokens_min as f64) < 1.0 {
            return bad("token_sparsity * tokens_min < 1: some examples would carry no plant".into());
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be positive".into());
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return bad("class_balance must be in (0,1)".into());
        }
        if self.family_weights.iter().any(|w| *w < 0.0) || self.family_weights.iter().sum::<f64>() <= 0.0 {
            return bad("family weights must be nonnegative with a positive sum".into());
        }
        Ok(())
    }
}

/// Ground truth of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantRecord {
    pub examples: Vec<PlantedExample>,
    pub layers: Vec<PlantedLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedExample {
    pub example_id: String,
    pub class: Nationality,
    pub n_tokens: usize,
    pub planted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedLayer {
    pub layer: usize,
    pub strength: f64,
    pub direction: Vec<f64>,
}

/// Unit plant direction of every layer, derived from the direction seed alone.
pub fn plant_directions(seed: u64, n_layers: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n_layers)
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, l as u64));
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break v.into_iter().map(|x| x / norm).collect();
                }
            }
        })
        .collect()
}

const PERSONAS: [(Nationality, Medium, Role); 6] = [
    (Nationality::A, Medium::Emi, Role::Postdoc),
    (Nationality::A, Medium::Cmi, Role::Postdoc),
    (Nationality::A, Medium::None, Role::Student),
    (Nationality::B, Medium::Emi, Role::Postdoc),
    (Nationality::B, Medium::Cmi, Role::Postdoc),
    (Nationality::B, Medium::None, Role::Student),
];

const FILLER: [&str; 48] = [
    "the", "of", "and", "engineering", "students", "academic", "writing", "research", "language",
    "teaching", "course", "design", "practice", "study", "learning", "students'", "university",
    "curriculum", "skills", "communication", "assessment", "feedback", "reading", "genre", "discourse",
    "context", "approach", "framework", "analysis", "support", "development", "knowledge", "critical",
    "technical", "report", "project", "instruction", "classroom", "evidence", "argument", "paper",
    "introduction", "method", "results", "draft", "revision", "peer", "review",
];

fn family_of(template: usize, n_templates: usize, weights: &[f64; 3]) -> TemplateFamily {
    let total: f64 = weights.iter().sum();
    let pos = (template as f64 + 0.5) / n_templates as f64;
    let mut acc = 0.0;
    for (f, w) in TemplateFamily::ALL.iter().zip(weights) {
        acc += w / total;
        if pos < acc {
            return *f;
        }
    }
    TemplateFamily::Theory
}

/// Generate a corpus, its metadata, and the plant ground truth.
pub fn generate(config: &SynthConfig) -> Result<(ActivationStore, Vec<ExampleMeta>, PlantRecord)> {
    config.validate()?;
    let n = config.n_examples;
    let d = config.hidden_dim;
    let directions = plant_directions(config.signal_direction_seed, config.n_layers, d);

    // Nationality follows the persona grid unless an unbalanced design is requested.
    let nationalities: Vec<Nationality> = if (config.class_balance - 0.5).abs() < 1e-12 {
        (0..n).map(|i| PERSONAS[i % 6].0).collect()
    } else {
        let n_b = (config.class_balance * n as f64).round() as usize;
        let mut v: Vec<Nationality> = (0..n).map(|i| if i < n_b { Nationality::B } else { Nationality::A }).collect();
        v.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX)));
        v
    };
    let n_templates = n.div_ceil(6);

    let generated = par::map_range(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, i as u64));
        let (_, medium, role) = PERSONAS[i % 6];
        let nationality = nationalities[i];
        let template = i / 6;
        let family = family_of(template, n_templates, &config.family_weights);
        let n_tokens = rng.random_range(config.tokens_min..=config.tokens_max);
        let k = ((config.token_sparsity * n_tokens as f64).round() as usize).clamp(1, n_tokens);
        let mut planted: Vec<usize> = sample(&mut rng, n_tokens, k).into_vec();
        planted.sort_unstable();
        let fam_mult = config
            .family_specific_strength
            .as_ref()
            .and_then(|m| m.get(&family).copied())
            .unwrap_or(1.0);
        let sign = if nationality == Nationality::B { 0.5 } else { -0.5 };
        let noise = Normal::new(0.0, config.noise_sd).expect("validated noise_sd");
        let mut data = Vec::with_capacity(config.n_layers * n_tokens * d);
        for (layer, dir) in directions.iter().enumerate() {
            let start = data.len();
            data.extend((0..n_tokens * d).map(|_| noise.sample(&mut rng) as f32));
            let shift = sign * config.strength_profile[layer] * fam_mult;
            if shift != 0.0 {
                for &t in &planted {
                    let row = &mut data[start + t * d..start + (t + 1) * d];
                    for (v, u) in row.iter_mut().zip(dir) {
                        *v = (*v as f64 + shift * u) as f32;
                    }
                }
            }
        }
        let example_id = format!("ex{i:04}");
        let n_words = (n_tokens * 3 / 4).max(1);
        let text = (0..n_words)
            .map(|_| FILLER[rng.random_range(0..FILLER.len())])
            .collect::<Vec<_>>()
            .join(" ");
        let meta = ExampleMeta {
            example_id: example_id.clone(),
            nationality,
            medium,
            role,
            cohort: cohort_of(nationality, medium, role),
            template_family: family,
            template_id: format!("{}_{template:02}", family.to_string().to_lowercase()),
            text,
            n_generated_tokens: n_tokens,
        };
        let plant = PlantedExample {
            example_id: example_id.clone(),
            class: nationality,
            n_tokens,
            planted,
        };
        (ExampleActivations::new(example_id, n_tokens, data), meta, plant)
    });

    let mut examples = Vec::with_capacity(n);
    let mut meta = Vec::with_capacity(n);
    let mut planted = Vec::with_capacity(n);
    for (e, m, p) in generated {
        examples.push(e);
        meta.push(m);
        planted.push(p);
    }
    let store = ActivationStore::new(config.n_layers, d, examples)?;
    let layers = directions
        .into_iter()
        .enumerate()
        .map(|(layer, direction)| PlantedLayer {
            layer,
            strength: config.strength_profile[layer],
            direction,
        })
        .collect();
    Ok((store, meta, PlantRecord { examples: planted, layers }))
}

/// Precision/recall of token selections against planted positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub layer: usize,
    pub n_selected: usize,
    pub n_planted: usize,
    pub hits: usize,
    /// `None` when nothing was selected.
    pub precision: Option<f64>,
    pub recall: f64,
    /// Hit rate of a seeded uniformly random selection of the same size.
    pub random_precision: Option<f64>,
    pub lift: Option<f64>,
}

/// Score `(example_id, token_index)` selections made at `layer`. A layer with
/// zero planted strength has no planted positions and is rejected.
pub fn score_selection<'a, I>(selections: I, layer: usize, plant: &PlantRecord, baseline_seed: u64) -> Result<SelectionScore>
where
    I: IntoIterator<Item = (&'a str, usize)>,
{
    let present = plant.layers.iter().any(|l| l.layer == layer && l.strength > 0.0);
    if !present {
        return Err(Error::Insufficient(format!("layer {layer} carries no plant")));
    }
    let planted: BTreeSet<(&str, usize)> = plant
        .examples
        .iter()
        .flat_map(|e| e.planted.iter().map(move |&t| (e.example_id.as_str(), t)))
        .collect();
    let selected: BTreeSet<(&str, usize)> = selections.into_iter().collect();
    let hits = selected.iter().filter(|s| planted.contains(*s)).count();
    let n_selected = selected.len();

    let total_tokens: usize = plant.examples.iter().map(|e| e.n_tokens).sum();
    let random_precision = if n_selected == 0 {
        None
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(baseline_seed);
        let picks = sample(&mut rng, total_tokens, n_selected.min(total_tokens));
        let mut offsets: Vec<usize> = Vec::with_capacity(plant.examples.len());
        let mut acc = 0;
        for e in &plant.examples {
            offsets.push(acc);
            acc += e.n_tokens;
        }
        let random_hits = picks
            .iter()
            .filter(|&flat| {
                let ex = offsets.partition_point(|&o| o <= flat) - 1;
                let e = &plant.examples[ex];
                planted.contains(&(e.example_id.as_str(), flat - offsets[ex]))
            })
            .count();
        Some(random_hits as f64 / n_selected as f64)
    };
    let precision = (n_selected > 0).then(|| hits as f64 / n_selected as f64);
    let lift = match (precision, random_precision) {
        (Some(p), Some(r)) if r > 0.0 => Some(p / r),
        _ => None,
    };
    Ok(SelectionScore {
        layer,
        n_selected,
        n_planted: planted.len(),
        hits,
        precision,
        recall: if planted.is_empty() { 0.0 } else { hits as f64 / planted.len() as f64 },
        random_precision,
        lift,
    })
}
