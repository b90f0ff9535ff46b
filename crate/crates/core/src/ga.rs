//! Genetic search for binary masks that shrink a class's coordinate set
//! while its documents stay closer to their own (masked) centroid than to
//! every other class centroid.
//!
//! The genotype has one gene per nonzero coordinate of the class central
//! vector. Each generation picks parents whose fitness is at least the
//! population mean, recombines them with single-point crossover, flips at
//! most one gene per child, and keeps the best `n` distinct members of
//! parents ∪ offspring.
//!
//! All randomness comes from [`GaRng`] (ChaCha8 seeded from a `u64`). Draw
//! order per run: initial genes, then per generation the parent pairs,
//! followed by crossover point, first-child mutation and second-child
//! mutation for each pair in turn.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centroid::Centroid;
use crate::corpus::{restrict_dense, Document, TermId};
use crate::kl::{dot, norm_sq};
use crate::strictly_greater;

/// Deterministic generator behind every stochastic GA step.
pub type GaRng = ChaCha8Rng;

/// Weight of retained energy inside the feasible branch of the fitness.
pub const ENERGY_TIE_BREAK: f64 = 0.01;

/// Probability that a gene of a random initial chromosome is set.
pub const INITIAL_GENE_PROBABILITY: f64 = 0.9;

#[derive(Debug, Error, PartialEq)]
pub enum GaError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("class is inseparable: all-ones mask reaches containment {containment:.6}")]
    InfeasibleClass { containment: f64 },
    #[error("invalid GA config: {0}")]
    InvalidConfig(&'static str),
    #[error("class has no documents")]
    EmptyClass,
    #[error("invalid gene string: {0}")]
    InvalidGenes(String),
    #[error("no centroid for class `{0}`")]
    MissingCentroid(String),
}

/// Binary control vector over class coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome {
    genes: Vec<bool>,
}

impl Chromosome {
    pub fn new(genes: Vec<bool>) -> Self {
        Self { genes }
    }

    pub fn ones(len: usize) -> Self {
        Self::new(vec![true; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![false; len])
    }

    pub fn random<R: Rng>(len: usize, p_one: f64, rng: &mut R) -> Self {
        Self::new((0..len).map(|_| rng.gen_bool(p_one)).collect())
    }

    pub fn genes(&self) -> &[bool] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.genes.iter().filter(|&&g| g).count()
    }

    pub fn count_zeros(&self) -> usize {
        self.len() - self.count_ones()
    }

    pub fn hamming(&self, other: &Chromosome) -> usize {
        self.genes.iter().zip(&other.genes).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &g in &self.genes {
            f.write_str(if g { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(GaError::InvalidGenes(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Chromosome::new)
    }
}

impl Serialize for Chromosome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Chromosome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub mutation_probability: f64,
    pub max_generations: usize,
    /// Generations without best-fitness improvement before stopping.
    pub stagnation_limit: usize,
    /// Required fraction of class documents that stay separated.
    pub theta: f64,
    /// Weight of reduction against retained energy among feasible masks.
    pub rho: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            mutation_probability: 0.2,
            max_generations: 200,
            stagnation_limit: 30,
            theta: 0.9,
            rho: 0.5,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(GaError::InvalidConfig("population size must be even and at least 2"));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(GaError::InvalidConfig("mutation probability must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(GaError::InvalidConfig("theta must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(GaError::InvalidConfig("rho must lie in [0, 1]"));
        }
        if self.max_generations == 0 {
            return Err(GaError::InvalidConfig("max generations must be at least 1"));
        }
        Ok(())
    }
}

/// One class's documents and centroids over the class coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProblem {
    docs: Vec<Vec<f64>>,
    own_centroid: Vec<f64>,
    others: Vec<Vec<f64>>,
    total_energy: f64,
    /// Global term id of each gene, when built from a model.
    pub term_order: Vec<TermId>,
}

impl ClassProblem {
    /// `docs` and `own_centroid` are class-local vectors; `others` are the
    /// other classes' unit centroids restricted to the same coordinates.
    pub fn new(docs: Vec<Vec<f64>>, own_centroid: Vec<f64>, others: Vec<Vec<f64>>) -> Result<Self, GaError> {
        if docs.is_empty() {
            return Err(GaError::EmptyClass);
        }
        let len = own_centroid.len();
        for v in docs.iter().chain(&others) {
            if v.len() != len {
                return Err(GaError::LengthMismatch {
                    expected: len,
                    got: v.len(),
                });
            }
        }
        let total_energy = docs.iter().map(|d| norm_sq(d)).sum();
        Ok(Self {
            docs,
            own_centroid,
            others,
            total_energy,
            term_order: Vec::new(),
        })
    }

    /// Gene order is the support of the class centroid; documents and
    /// other centroids are restricted to it.
    pub fn from_class(class_id: &str, docs: &[&Document], centroids: &[Centroid]) -> Result<Self, GaError> {
        let own = centroids
            .iter()
            .find(|c| c.class_id == class_id)
            .ok_or_else(|| GaError::MissingCentroid(class_id.to_owned()))?;
        let order: Vec<TermId> = own.vector.terms().iter().map(|&(t, _)| t).collect();
        let rows = docs.iter().map(|d| restrict_dense(&d.unit, &order)).collect();
        let others = centroids
            .iter()
            .filter(|c| c.class_id != class_id)
            .map(|c| restrict_dense(&c.vector, &order))
            .collect();
        let mut p = Self::new(rows, restrict_dense(&own.vector, &order), others)?;
        p.term_order = order;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.own_centroid.len()
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }
}

/// Masked vector renormalized to unit length, with the masked norm.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedVector {
    pub unit: Vec<f64>,
    pub raw_norm: f64,
}

impl MaskedVector {
    pub fn is_degenerate(&self) -> bool {
        !(self.raw_norm > 0.0)
    }
}

/// Coordinate-wise product `λ_i b_i`, renormalized when nonzero.
pub fn mask_apply(mask: &Chromosome, b: &[f64]) -> Result<MaskedVector, GaError> {
    if mask.len() != b.len() {
        return Err(GaError::LengthMismatch {
            expected: mask.len(),
            got: b.len(),
        });
    }
    let raw: Vec<f64> = mask
        .genes
        .iter()
        .zip(b)
        .map(|(&g, &v)| if g { v } else { 0.0 })
        .collect();
    let raw_norm = norm_sq(&raw).sqrt();
    let unit = if raw_norm > 0.0 {
        raw.iter().map(|v| v / raw_norm).collect()
    } else {
        raw
    };
    Ok(MaskedVector { unit, raw_norm })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allowance {
    pub allowed: bool,
    pub satisfied: usize,
}

/// Counts class documents whose masked unit vector has a strictly larger
/// inner product with the masked own centroid than with every (unmasked)
/// other centroid. Degenerate masked vectors count as unsatisfied.
pub fn is_allowed(mask: &Chromosome, problem: &ClassProblem) -> Result<Allowance, GaError> {
    let own = mask_apply(mask, &problem.own_centroid)?;
    let mut satisfied = 0;
    if !own.is_degenerate() {
        for doc in &problem.docs {
            let b = mask_apply(mask, doc)?;
            if b.is_degenerate() {
                continue;
            }
            let own_sim = dot(&b.unit, &own.unit);
            if problem
                .others
                .iter()
                .all(|o| strictly_greater(own_sim, dot(&b.unit, o)))
            {
                satisfied += 1;
            }
        }
    }
    Ok(Allowance {
        allowed: satisfied == problem.docs.len(),
        satisfied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    /// Fraction of class documents satisfying the separation test.
    pub containment: f64,
    /// Fraction of genes set to zero.
    pub reduction: f64,
    /// Σ‖Λb‖² / Σ‖b‖² over class documents.
    pub energy: f64,
}

/// θ-gated fitness: containment below θ (or an all-zero mask) scores the
/// containment itself; otherwise `θ + ρ·reduction + (1-ρ)·energy·0.01`.
pub fn fitness(mask: &Chromosome, problem: &ClassProblem, cfg: &GaConfig) -> Result<Evaluation, GaError> {
    let allowance = is_allowed(mask, problem)?;
    let containment = allowance.satisfied as f64 / problem.doc_count() as f64;
    let len = mask.len().max(1) as f64;
    let reduction = mask.count_zeros() as f64 / len;
    let kept: f64 = problem
        .docs
        .iter()
        .map(|d| {
            d.iter()
                .zip(&mask.genes)
                .filter(|(_, &g)| g)
                .map(|(v, _)| v * v)
                .sum::<f64>()
        })
        .sum();
    let energy = if problem.total_energy > 0.0 {
        kept / problem.total_energy
    } else {
        0.0
    };
    let feasible = containment >= cfg.theta && mask.count_ones() > 0;
    let fitness = if feasible {
        cfg.theta + cfg.rho * reduction + (1.0 - cfg.rho) * energy * ENERGY_TIE_BREAK
    } else {
        containment
    };
    Ok(Evaluation {
        fitness,
        containment,
        reduction,
        energy,
    })
}

/// Parent pairs drawn from the members whose fitness is at least the
/// population mean. When fewer than two qualify, everyone is eligible.
pub fn select_parents<R: Rng>(fitnesses: &[f64], pairs: usize, rng: &mut R) -> Vec<(usize, usize)> {
    if fitnesses.is_empty() {
        return Vec::new();
    }
    let mean = fitnesses.iter().sum::<f64>() / fitnesses.len() as f64;
    let slack = crate::TIE_TOLERANCE * mean.abs().max(1.0);
    let mut eligible: Vec<usize> = (0..fitnesses.len()).filter(|&i| fitnesses[i] >= mean - slack).collect();
    if eligible.len() < 2 {
        eligible = (0..fitnesses.len()).collect();
    }
    let k = eligible.len();
    (0..pairs)
        .map(|_| {
            let a = rng.gen_range(0..k);
            if k < 2 {
                return (eligible[a], eligible[a]);
            }
            let mut b = rng.gen_range(0..k - 1);
            if b >= a {
                b += 1;
            }
            (eligible[a], eligible[b])
        })
        .collect()
}

/// Single-point crossover at break point `point` (1..L-1).
pub fn crossover_at(x: &Chromosome, y: &Chromosome, point: usize) -> Result<(Chromosome, Chromosome), GaError> {
    if x.len() != y.len() {
        return Err(GaError::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let p = point.min(x.len());
    let mut a = x.genes[..p].to_vec();
    a.extend_from_slice(&y.genes[p..]);
    let mut b = y.genes[..p].to_vec();
    b.extend_from_slice(&x.genes[p..]);
    Ok((Chromosome::new(a), Chromosome::new(b)))
}

/// Single-point crossover with a uniformly drawn break point. Chromosomes
/// shorter than two genes are returned unchanged without drawing.
pub fn crossover<R: Rng>(x: &Chromosome, y: &Chromosome, rng: &mut R) -> Result<(Chromosome, Chromosome), GaError> {
    if x.len() != y.len() {
        return Err(GaError::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Ok((x.clone(), y.clone()));
    }
    let p = rng.gen_range(1..x.len());
    crossover_at(x, y, p)
}

/// With probability `probability`, flips one uniformly chosen gene.
pub fn mutate<R: Rng>(c: &Chromosome, probability: f64, rng: &mut R) -> Chromosome {
    let mut out = c.clone();
    if !out.is_empty() && rng.gen_bool(probability) {
        let i = rng.gen_range(0..out.len());
        out.genes[i] = !out.genes[i];
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub chromosome: Chromosome,
    pub eval: Evaluation,
}

fn rank(a: &Scored, b: &Scored) -> Ordering {
    b.eval
        .fitness
        .total_cmp(&a.eval.fitness)
        .then_with(|| a.chromosome.count_ones().cmp(&b.chromosome.count_ones()))
        .then_with(|| a.chromosome.cmp(&b.chromosome))
}

/// Elite survival: the best `size` members of parents ∪ offspring, ranked
/// by fitness, then fewer ones, then gene order. Distinct genotypes are
/// preferred; duplicates only fill remaining slots.
pub fn next_generation<F>(
    population: Vec<Scored>,
    offspring: Vec<Chromosome>,
    size: usize,
    mut evaluate: F,
) -> Result<Vec<Scored>, GaError>
where
    F: FnMut(&Chromosome) -> Result<Evaluation, GaError>,
{
    let mut pool = population;
    for c in offspring {
        let eval = evaluate(&c)?;
        pool.push(Scored { chromosome: c, eval });
    }
    pool.sort_by(rank);
    let mut seen = HashSet::new();
    let (mut unique, mut dupes): (Vec<Scored>, Vec<Scored>) = (Vec::new(), Vec::new());
    for s in pool {
        if seen.insert(s.chromosome.clone()) {
            unique.push(s);
        } else {
            dupes.push(s);
        }
    }
    unique.truncate(size);
    let missing = size.saturating_sub(unique.len());
    unique.extend(dupes.into_iter().take(missing));
    unique.sort_by(rank);
    Ok(unique)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: Chromosome,
    pub best_fitness: f64,
    pub containment: f64,
    pub reduction: f64,
    pub energy: f64,
    pub dimension: usize,
    pub zeros: usize,
    pub generations_run: usize,
    /// Best fitness after initialization and after each generation.
    pub fitness_history: Vec<f64>,
}

/// Runs the genetic search for one class.
pub fn run_ga(problem: &ClassProblem, cfg: &GaConfig) -> Result<GaResult, GaError> {
    cfg.validate()?;
    let len = problem.dim();
    let mut rng = GaRng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<Chromosome, Evaluation> = HashMap::new();
    let mut evaluate = |c: &Chromosome| -> Result<Evaluation, GaError> {
        if let Some(e) = cache.get(c) {
            return Ok(*e);
        }
        let e = fitness(c, problem, cfg)?;
        cache.insert(c.clone(), e);
        Ok(e)
    };

    let all_ones = Chromosome::ones(len);
    let base = evaluate(&all_ones)?;
    if base.containment < cfg.theta {
        return Err(GaError::InfeasibleClass {
            containment: base.containment,
        });
    }

    let mut population = vec![Scored {
        chromosome: all_ones,
        eval: base,
    }];
    for _ in 1..cfg.population_size {
        let c = Chromosome::random(len, INITIAL_GENE_PROBABILITY, &mut rng);
        let eval = evaluate(&c)?;
        population.push(Scored { chromosome: c, eval });
    }
    population.sort_by(rank);

    let mut history = vec![population[0].eval.fitness];
    let mut stagnant = 0;
    let mut generations_run = 0;
    for generation in 1..=cfg.max_generations {
        let fits: Vec<f64> = population.iter().map(|s| s.eval.fitness).collect();
        let pairs = select_parents(&fits, cfg.population_size / 2, &mut rng);
        let mut offspring = Vec::with_capacity(cfg.population_size);
        for (i, j) in pairs {
            let (a, b) = crossover(&population[i].chromosome, &population[j].chromosome, &mut rng)?;
            offspring.push(mutate(&a, cfg.mutation_probability, &mut rng));
            offspring.push(mutate(&b, cfg.mutation_probability, &mut rng));
        }
        let previous = population[0].eval.fitness;
        population = next_generation(population, offspring, cfg.population_size, &mut evaluate)?;
        let best = population[0].eval.fitness;
        history.push(best);
        generations_run = generation;
        if best > previous {
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= cfg.stagnation_limit {
                break;
            }
        }
    }

    let best = population.swap_remove(0);
    Ok(GaResult {
        dimension: len,
        zeros: best.chromosome.count_zeros(),
        best_fitness: best.eval.fitness,
        containment: best.eval.containment,
        reduction: best.eval.reduction,
        energy: best.eval.energy,
        best: best.chromosome,
        generations_run,
        fitness_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> GaRng {
        GaRng::seed_from_u64(seed)
    }

    fn bits(s: &str) -> Chromosome {
        s.parse().unwrap()
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = norm_sq(v).sqrt();
        v.iter().map(|x| x / n).collect()
    }

    /// Class over 4 coordinates: 0,1 are class signal, 2,3 are noise shared
    /// with one other class.
    fn planted() -> ClassProblem {
        let docs: Vec<Vec<f64>> = [
            [3.0, 1.0, 1.0, 0.0],
            [2.0, 2.0, 0.0, 1.0],
            [1.0, 3.0, 1.0, 1.0],
            [2.0, 1.0, 0.0, 1.0],
        ]
        .iter()
        .map(|d| unit(d))
        .collect();
        let mut sum = vec![0.0; 4];
        for d in &docs {
            sum.iter_mut().zip(d).for_each(|(s, x)| *s += x);
        }
        // Other centroid: mass on the noise coordinates plus its own terms
        // outside this class, so the restriction has norm below one.
        let other = vec![0.0, 0.0, 0.5, 0.5];
        ClassProblem::new(docs, unit(&sum), vec![other]).unwrap()
    }

    #[test]
    fn chromosome_text_round_trip() {
        let c = bits("10110");
        assert_eq!(c.to_string(), "10110");
        assert_eq!(c.count_ones(), 3);
        assert!("10a".parse::<Chromosome>().is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "\"10110\"");
        assert_eq!(serde_json::from_str::<Chromosome>(&json).unwrap(), c);
    }

    #[test]
    fn mask_examples() {
        let b = [0.6, 0.7, 0.8];
        let m = mask_apply(&Chromosome::ones(3), &b).unwrap();
        assert!(m.unit.iter().zip(unit(&b)).all(|(x, y)| (x - y).abs() < 1e-12));
        let m = mask_apply(&Chromosome::zeros(3), &b).unwrap();
        assert!(m.is_degenerate());
        assert_eq!(m.unit, vec![0.0; 3]);
        let m = mask_apply(&bits("101"), &b).unwrap();
        assert!((m.raw_norm - 1.0).abs() < 1e-12);
        assert!((m.unit[0] - 0.6).abs() < 1e-12 && m.unit[1] == 0.0 && (m.unit[2] - 0.8).abs() < 1e-12);
        assert!(matches!(
            mask_apply(&bits("10"), &b),
            Err(GaError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn allowance_examples() {
        let p = planted();
        let all = is_allowed(&Chromosome::ones(4), &p).unwrap();
        assert!(all.allowed);
        assert_eq!(all.satisfied, 4);
        let none = is_allowed(&Chromosome::zeros(4), &p).unwrap();
        assert!(!none.allowed);
        assert_eq!(none.satisfied, 0);

        // Zeroing one noise coordinate, checked by recomputing every product.
        let mask = bits("1110");
        let got = is_allowed(&mask, &p).unwrap();
        let own = unit(&[p.own_centroid[0], p.own_centroid[1], p.own_centroid[2], 0.0]);
        let mut expected = 0;
        for d in &p.docs {
            let md = unit(&[d[0], d[1], d[2], 0.0]);
            let s_own: f64 = md.iter().zip(&own).map(|(a, b)| a * b).sum();
            let s_other: f64 = md.iter().zip(&p.others[0]).map(|(a, b)| a * b).sum();
            if s_own > s_other {
                expected += 1;
            }
        }
        assert_eq!(got.satisfied, expected);
        assert_eq!(got.satisfied, 4);
        assert!(got.allowed);
    }

    #[test]
    fn fitness_examples() {
        let p = planted();
        let cfg = GaConfig::default();
        let e = fitness(&Chromosome::ones(4), &p, &cfg).unwrap();
        let expected = cfg.theta + (1.0 - cfg.rho) * ENERGY_TIE_BREAK;
        assert!((e.fitness - expected).abs() < 1e-12);
        assert_eq!(e.reduction, 0.0);
        assert!((e.energy - 1.0).abs() < 1e-12);

        // Half the docs separated with θ = 0.9: the containment itself.
        let docs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p2 = ClassProblem::new(docs, vec![1.0, 0.0], vec![vec![0.0, 1.0]]).unwrap();
        let e = fitness(&Chromosome::ones(2), &p2, &cfg).unwrap();
        assert_eq!(e.containment, 0.5);
        assert_eq!(e.fitness, 0.5);
        assert_eq!(fitness(&Chromosome::zeros(2), &p2, &cfg).unwrap().fitness, 0.0);
    }

    #[test]
    fn reduction_dominates_energy_above_threshold() {
        // Reductions 0.3 vs 0.1 with worst-case energies e(0.3) = 0 and
        // e(0.1) = 1. The larger reduction wins iff 0.2ρ > 0.01(1-ρ), that is
        // ρ > 1/21.
        let f = |rho: f64, r: f64, e: f64| 0.9 + rho * r + (1.0 - rho) * e * ENERGY_TIE_BREAK;
        let bound = 1.0 / 21.0;
        for i in 1..=1000 {
            let rho = i as f64 / 1000.0;
            let worst = f(rho, 0.3, 0.0) - f(rho, 0.1, 1.0);
            assert_eq!(worst > 0.0, rho > bound, "rho = {rho}");
        }
        assert!(f(0.5, 0.3, 0.0) > f(0.5, 0.1, 1.0));
        // With an energy gap of at most 0.7 the bound relaxes to ≈ 0.034.
        let relaxed: f64 = 0.007 / (0.2 + 0.007);
        assert!((relaxed - 0.0338).abs() < 1e-3);
        assert!(f(0.035, 0.3, 0.3) > f(0.035, 0.1, 1.0));
    }

    #[test]
    fn parent_selection_examples() {
        let mut r = rng(7);
        let pairs = select_parents(&[1.0, 2.0, 3.0, 4.0], 50, &mut r);
        assert_eq!(pairs.len(), 50);
        for (a, b) in &pairs {
            assert!(*a >= 2 && *b >= 2 && a != b);
        }
        let mut r = rng(7);
        let flat = select_parents(&[0.1, 0.1, 0.1], 200, &mut r);
        let used: HashSet<usize> = flat.iter().flat_map(|&(a, b)| [a, b]).collect();
        assert_eq!(used.len(), 3);
        assert_eq!(
            select_parents(&[0.5, 1.0, 0.2, 0.9], 10, &mut rng(3)),
            select_parents(&[0.5, 1.0, 0.2, 0.9], 10, &mut rng(3))
        );
        // A single member above the mean falls back to the whole population.
        let pairs = select_parents(&[0.0, 0.0, 0.0, 10.0], 100, &mut rng(1));
        assert!(pairs.iter().any(|&(a, b)| a < 3 || b < 3));
    }

    #[test]
    fn crossover_examples() {
        let (a, b) = crossover_at(&bits("1111"), &bits("0000"), 2).unwrap();
        assert_eq!((a.to_string(), b.to_string()), ("1100".into(), "0011".into()));
        let x = bits("10101");
        let mut r = rng(11);
        let (a, b) = crossover(&x, &x, &mut r).unwrap();
        assert_eq!((a, b), (x.clone(), x.clone()));
        assert!(crossover(&bits("10"), &bits("101"), &mut r).is_err());
    }

    #[test]
    fn mutation_examples() {
        let mut r = rng(5);
        let c = bits("0110");
        assert_eq!(mutate(&c, 0.0, &mut r), c);
        let m = mutate(&bits("0000"), 1.0, &mut r);
        assert_eq!(m.count_ones(), 1);
        for _ in 0..200 {
            assert!(mutate(&c, 0.5, &mut r).hamming(&c) <= 1);
        }
    }

    fn scored(s: &str, f: f64) -> Scored {
        Scored {
            chromosome: bits(s),
            eval: Evaluation {
                fitness: f,
                containment: 1.0,
                reduction: 0.0,
                energy: 0.0,
            },
        }
    }

    fn eval_const(f: f64) -> impl FnMut(&Chromosome) -> Result<Evaluation, GaError> {
        move |_| {
            Ok(Evaluation {
                fitness: f,
                containment: 1.0,
                reduction: 0.0,
                energy: 0.0,
            })
        }
    }

    #[test]
    fn elitism_examples() {
        let pop = vec![scored("11", 0.9), scored("10", 0.8)];
        let next = next_generation(pop.clone(), vec![bits("00"), bits("01")], 2, eval_const(0.1)).unwrap();
        assert_eq!(next, pop);

        let next = next_generation(pop.clone(), vec![bits("01")], 2, eval_const(0.95)).unwrap();
        assert_eq!(next[0].chromosome, bits("01"));
        assert_eq!(next[1].chromosome, bits("11"));

        // Equal fitness: fewer ones first, then gene order.
        let tied = vec![scored("11", 0.5), scored("10", 0.5)];
        let next = next_generation(tied, vec![bits("01")], 2, eval_const(0.5)).unwrap();
        assert_eq!(next[0].chromosome, bits("01"));
        assert_eq!(next[1].chromosome, bits("10"));
    }

    #[test]
    fn ga_finds_noise_free_mask_and_is_reproducible() {
        let p = planted();
        let cfg = GaConfig {
            seed: 9,
            ..GaConfig::default()
        };
        let r1 = run_ga(&p, &cfg).unwrap();
        let r2 = run_ga(&p, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.containment >= cfg.theta);
        assert!(r1.reduction > 0.0);
        assert!(r1.fitness_history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r1.zeros, r1.best.count_zeros());
    }

    #[test]
    fn zero_threshold_reduces_to_a_single_gene() {
        let p = planted();
        let cfg = GaConfig {
            theta: 0.0,
            ..GaConfig::default()
        };
        let r = run_ga(&p, &cfg).unwrap();
        assert_eq!(r.best.count_ones(), 1);
    }

    #[test]
    fn inseparable_class_is_reported() {
        let docs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = ClassProblem::new(docs, vec![1.0, 0.0], vec![vec![0.0, 1.0]]).unwrap();
        let cfg = GaConfig {
            theta: 1.0,
            ..GaConfig::default()
        };
        assert_eq!(run_ga(&p, &cfg), Err(GaError::InfeasibleClass { containment: 0.5 }));
    }

    #[test]
    fn config_validation() {
        let bad = |f: fn(&mut GaConfig)| {
            let mut c = GaConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.population_size = 3));
        assert!(bad(|c| c.population_size = 0));
        assert!(bad(|c| c.mutation_probability = 1.5));
        assert!(bad(|c| c.theta = -0.1));
        assert!(bad(|c| c.max_generations = 0));
        assert!(GaConfig::default().validate().is_ok());
    }
}
