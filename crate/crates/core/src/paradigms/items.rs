use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Condition, Experiment, ParadigmError, Result};

pub const ITEMS_SHOWN: usize = 3;
const PAIR_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Samples three distinct items from the pool, in display order.
pub fn sample_items(pool: &[String], seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, pool.len(), ITEMS_SHOWN.min(pool.len()))
        .into_iter()
        .map(|i| pool[i].clone())
        .collect()
}

/// Index pairs `(i, j)`, `i < j`, whose ratings fit the condition.
pub fn qualifying_pairs(ratings: &[u8], condition: Condition) -> Result<Vec<(usize, usize)>> {
    let fits: fn(u8) -> bool = match condition {
        Condition::Hard => |d| d <= 1,
        Condition::Easy => |d| d >= 3,
        other => {
            return Err(ParadigmError::InvalidCondition {
                experiment: Experiment::ItemRating,
                condition: other,
            });
        }
    };
    let mut out = Vec::new();
    for i in 0..ratings.len() {
        for j in i + 1..ratings.len() {
            if fits(ratings[i].abs_diff(ratings[j])) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Picks the pair to present, uniformly among qualifying pairs.
pub fn select_choice_pair(
    ratings: &[(String, u8)],
    condition: Condition,
    seed: u64,
) -> Result<(String, String)> {
    if ratings.len() != ITEMS_SHOWN {
        return Err(ParadigmError::WrongItemCount(ratings.len()));
    }
    let values: Vec<u8> = ratings.iter().map(|(_, r)| *r).collect();
    let pairs = qualifying_pairs(&values, condition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PAIR_STREAM);
    let &(i, j) = pairs
        .choose(&mut rng)
        .ok_or(ParadigmError::NoQualifyingPair { condition })?;
    Ok((ratings[i].0.clone(), ratings[j].0.clone()))
}

pub fn with_article(noun: &str) -> String {
    let first_word = noun.split_whitespace().next().unwrap_or_default();
    let is_acronym = first_word.len() > 1 && first_word.chars().all(|c| c.is_ascii_uppercase());
    let first = first_word.chars().next().unwrap_or('x');
    let vowel_sound = if is_acronym {
        "AEFHILMNORSX".contains(first)
    } else {
        "aeiouAEIOU".contains(first)
    };
    format!("{} {noun}", if vowel_sound { "an" } else { "a" })
}

/// "a X, a Y, and a Z"
pub fn items_list(items: &[String]) -> String {
    let named: Vec<String> = items.iter().map(|i| with_article(i)).collect();
    match named.as_slice() {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}
