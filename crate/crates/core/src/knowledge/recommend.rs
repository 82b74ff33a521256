use super::keywords::KeywordVector;

fn cosine(a: &KeywordVector, b: &KeywordVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

/// Rounding grain for ordering, so scores that differ only by float noise tie.
const GRAIN: f64 = 1e-12;

/// Top-k items by cosine similarity to the profile, ties by ascending id.
/// A zero profile or `k == 0` yields nothing.
pub fn recommend<'a, I>(profile: &KeywordVector, items: I, k: usize) -> Vec<(String, f64)>
where
    I: IntoIterator<Item = (&'a str, &'a KeywordVector)>,
{
    if profile.is_zero() || k == 0 {
        return Vec::new();
    }
    let mut scored: Vec<(String, f64, i64)> = items
        .into_iter()
        .map(|(id, v)| {
            let s = cosine(profile, v);
            (id.to_owned(), s, (s / GRAIN).round() as i64)
        })
        .collect();
    scored.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored.into_iter().map(|(id, s, _)| (id, s)).collect()
}

/// As [`recommend`], keeping only scores strictly above `cutoff`.
pub fn recommend_above<'a, I>(
    profile: &KeywordVector,
    items: I,
    k: usize,
    cutoff: f64,
) -> Vec<(String, f64)>
where
    I: IntoIterator<Item = (&'a str, &'a KeywordVector)>,
{
    let mut all = recommend(profile, items, usize::MAX);
    all.retain(|(_, s)| *s > cutoff);
    all.truncate(k);
    all
}
