use rand::Rng;

use crate::error::{Error, Result};
use crate::genetic::SignBitVector;

/// Score to minimise. Inside the budget only accuracy counts (`epsilon * l`);
/// outside it the distance dominates (`d + d * l`), so every in-budget
/// candidate ranks ahead of every out-of-budget one.
#[inline]
pub fn fitness(accuracy: f64, distance: usize, epsilon: usize) -> f64 {
    if distance <= epsilon {
        epsilon as f64 * accuracy
    } else {
        distance as f64 * (1.0 + accuracy)
    }
}

/// Number of elites kept: `round(retain * population)`, at least two.
pub fn elite_count(population: usize, retain: f64) -> Result<usize> {
    let n = (retain * population as f64).round() as usize;
    if n < 2 {
        return Err(Error::Argument(format!(
            "retain {retain} of a population of {population} keeps {n} individuals; crossover needs two parents"
        )));
    }
    Ok(n.min(population))
}

/// Uniform crossover: at each position, with probability 1/2, the children
/// take each other's parent's allele.
pub fn crossover<R: Rng + ?Sized>(
    p1: &SignBitVector,
    p2: &SignBitVector,
    rng: &mut R,
) -> Result<(SignBitVector, SignBitVector)> {
    if p1.len() != p2.len() {
        return Err(Error::Dimension(format!("parents have lengths {} and {}", p1.len(), p2.len())));
    }
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    let (a, b) = (c1.bits_mut(), c2.bits_mut());
    let mut word = 0u64;
    for i in 0..a.len() {
        if i % 64 == 0 {
            word = rng.gen();
        }
        if (word >> (i % 64)) & 1 == 1 {
            std::mem::swap(&mut a[i], &mut b[i]);
        }
    }
    Ok((c1, c2))
}

/// Each bit that differs from `raw` is restored to `raw` with probability
/// `p_m`; bits already equal to `raw` are never touched.
pub fn recovery_mutation<R: Rng + ?Sized>(
    x: &SignBitVector,
    raw: &SignBitVector,
    p_m: f64,
    rng: &mut R,
) -> Result<SignBitVector> {
    if x.len() != raw.len() {
        return Err(Error::Dimension(format!("genome length {} vs original {}", x.len(), raw.len())));
    }
    if !(0.0..=1.0).contains(&p_m) {
        return Err(Error::Argument(format!("mutation probability {p_m} outside [0, 1]")));
    }
    let mut out = x.clone();
    for (b, &r) in out.bits_mut().iter_mut().zip(raw.as_slice()) {
        if *b != r && rng.gen_bool(p_m) {
            *b = r;
        }
    }
    Ok(out)
}

/// Generations needed for recovery mutation to shrink a fully flipped
/// genome to the budget, with a 35% reserve:
/// `ceil((ln eps - ln L) / ln(1 - p_m) * 1.35)`.
pub fn estimate_generations(genome_length: usize, epsilon: usize, p_m: f64) -> Result<u32> {
    if epsilon == 0 || epsilon >= genome_length {
        return Err(Error::Argument(format!(
            "generation estimate needs 0 < epsilon < genome length, got epsilon={epsilon}, length={genome_length}"
        )));
    }
    if !(p_m > 0.0 && p_m < 1.0) {
        return Err(Error::Argument(format!("mutation probability must be in (0, 1), got {p_m}")));
    }
    let g = ((epsilon as f64).ln() - (genome_length as f64).ln()) / (1.0 - p_m).ln() * 1.35;
    Ok(g.ceil() as u32)
}

/// Budget as a fraction of a layer's sign bits, rounded to the nearest
/// integer and never below one.
pub fn epsilon_from_fraction(genome_length: usize, fraction: f64) -> usize {
    ((genome_length as f64 * fraction).round() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sv(v: &[i8]) -> SignBitVector {
        SignBitVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn fitness_examples() {
        assert!((fitness(0.2, 30, 50) - 10.0).abs() < 1e-12);
        assert!((fitness(0.2, 60, 50) - 72.0).abs() < 1e-12);
        assert_eq!(fitness(0.0, 50, 50), 0.0);
    }

    #[test]
    fn elite_counts() {
        assert_eq!(elite_count(100, 0.6).unwrap(), 60);
        assert!(elite_count(3, 0.4).is_err());
    }

    #[test]
    fn identical_parents_give_identical_children() {
        let p = sv(&[1, -1, 1, 1, -1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, b) = crossover(&p, &p, &mut rng).unwrap();
        assert_eq!(a, p);
        assert_eq!(b, p);
    }

    #[test]
    fn children_take_complementary_alleles() {
        let p1 = sv(&[1; 200]);
        let p2 = sv(&[-1; 200]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, b) = crossover(&p1, &p2, &mut rng).unwrap();
        for i in 0..200 {
            assert_eq!(a.as_slice()[i], -b.as_slice()[i]);
        }
        assert!(crossover(&p1, &sv(&[1]), &mut rng).is_err());
    }

    #[test]
    fn mutation_edge_cases() {
        let raw = sv(&[1, -1, 1, -1]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(recovery_mutation(&raw, &raw, 0.7, &mut rng).unwrap(), raw);
        assert_eq!(recovery_mutation(&raw.negated(), &raw, 1.0, &mut rng).unwrap(), raw);
        assert_eq!(recovery_mutation(&raw.negated(), &raw, 0.0, &mut rng).unwrap(), raw.negated());
    }

    #[test]
    fn generation_estimate_examples() {
        assert_eq!(estimate_generations(5120, 50, 0.05).unwrap(), 122);
        // epsilon = L - 1: ln(L/(L-1)) / 0.0513 * 1.35 is tiny, so the ceiling is 1.
        assert_eq!(estimate_generations(5120, 5119, 0.05).unwrap(), 1);
        let g50 = estimate_generations(5120, 50, 0.05).unwrap();
        let g25 = estimate_generations(5120, 25, 0.05).unwrap();
        assert!((18..=19).contains(&(g25 - g50)), "{g25} - {g50}");
        assert!(estimate_generations(10, 10, 0.05).is_err());
        assert!(estimate_generations(10, 0, 0.05).is_err());
    }

    #[test]
    fn fractional_budgets_round_to_nearest() {
        assert_eq!(epsilon_from_fraction(5120, 0.01), 51);
        assert_eq!(epsilon_from_fraction(128, 0.005), 1);
        assert_eq!(epsilon_from_fraction(1000, 0.0025), 3);
    }
}
