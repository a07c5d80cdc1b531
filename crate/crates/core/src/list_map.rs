//! Reference model: an association list kept strictly ordered by key.
//!
//! Every operation returns a new map and leaves its receiver untouched.
//! Because the representation is canonical, structural equality coincides
//! with map equality.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrderedListMap<V> {
    entries: Vec<(i64, V)>,
}

impl<V> Default for OrderedListMap<V> {
    fn default() -> Self {
        OrderedListMap { entries: Vec::new() }
    }
}

impl<V: fmt::Debug> fmt::Debug for OrderedListMap<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(k, v)| (k, v))).finish()
    }
}

impl<V: Clone> OrderedListMap<V> {
    pub fn empty() -> Self {
        Self::default()
    }

    fn position(&self, k: i64) -> Result<usize, usize> {
        self.entries.binary_search_by_key(&k, |(key, _)| *key)
    }

    /// `self + (k, v)`.
    #[must_use]
    pub fn insert(&self, k: i64, v: V) -> Self {
        let mut entries = self.entries.clone();
        match self.position(k) {
            Ok(i) => entries[i].1 = v,
            Err(i) => entries.insert(i, (k, v)),
        }
        OrderedListMap { entries }
    }

    /// `self - k`.
    #[must_use]
    pub fn remove(&self, k: i64) -> Self {
        match self.position(k) {
            Ok(i) => {
                let mut entries = self.entries.clone();
                entries.remove(i);
                OrderedListMap { entries }
            }
            Err(_) => self.clone(),
        }
    }

    /// Same result as folding `insert` over `pairs` in order, so a later
    /// pair overrides an earlier one with the same key.
    pub fn from_pairs<I: IntoIterator<Item = (i64, V)>>(pairs: I) -> Self {
        let mut entries: Vec<(i64, V)> = pairs.into_iter().collect();
        // stable sort keeps insertion order among equal keys; keep the last
        entries.sort_by_key(|(k, _)| *k);
        let mut out: Vec<(i64, V)> = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 = v,
                _ => out.push((k, v)),
            }
        }
        OrderedListMap { entries: out }
    }
}

impl<V> OrderedListMap<V> {
    pub fn contains(&self, k: i64) -> bool {
        self.get(k).is_some()
    }

    pub fn get(&self, k: i64) -> Option<&V> {
        self.entries.binary_search_by_key(&k, |(key, _)| *key).ok().map(|i| &self.entries[i].1)
    }

    /// Value mapped to `k`.
    ///
    /// # Panics
    ///
    /// If `k` is absent.
    pub fn apply(&self, k: i64) -> &V {
        self.get(k).unwrap_or_else(|| panic!("apply on absent key {k}"))
    }

    pub fn entries(&self) -> &[(i64, V)] {
        &self.entries
    }

    pub fn keys(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().map(|(k, _)| *k)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keys strictly increasing, hence no duplicates.
    pub fn is_strictly_ordered(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

/// The model's algebraic laws as checkable predicates.
///
/// Each returns `None` when its precondition does not hold for the given
/// inputs, otherwise whether the conclusion holds.
pub mod lemmas {
    use super::OrderedListMap;

    fn given(pre: bool, post: impl FnOnce() -> bool) -> Option<bool> {
        pre.then(post)
    }

    pub fn add_still_contains<V: Clone>(lm: &OrderedListMap<V>, a: i64, b: V, a0: i64) -> Option<bool> {
        given(lm.contains(a0), || lm.insert(a, b).contains(a0))
    }

    pub fn add_apply_different<V: Clone + PartialEq>(lm: &OrderedListMap<V>, a: i64, b: V, a0: i64) -> Option<bool> {
        given(lm.contains(a0) && a0 != a, || lm.insert(a, b).apply(a0) == lm.apply(a0))
    }

    pub fn add_still_not_contains<V: Clone>(lm: &OrderedListMap<V>, a: i64, b: V, a0: i64) -> Option<bool> {
        given(!lm.contains(a0) && a != a0, || !lm.insert(a, b).contains(a0))
    }

    pub fn add_commutative_for_diff_keys<V: Clone + PartialEq>(
        lm: &OrderedListMap<V>,
        a1: i64,
        b1: V,
        a2: i64,
        b2: V,
    ) -> Option<bool> {
        given(a1 != a2, || lm.insert(a1, b1.clone()).insert(a2, b2.clone()) == lm.insert(a2, b2).insert(a1, b1))
    }

    pub fn add_same_as_add_twice_same_key<V: Clone + PartialEq>(
        lm: &OrderedListMap<V>,
        a: i64,
        b1: V,
        b2: V,
    ) -> Option<bool> {
        Some(lm.insert(a, b2.clone()) == lm.insert(a, b1).insert(a, b2))
    }

    pub fn add_remove_commutative_for_diff_keys<V: Clone + PartialEq>(
        lm: &OrderedListMap<V>,
        a1: i64,
        b1: V,
        a2: i64,
    ) -> Option<bool> {
        given(a1 != a2, || lm.insert(a1, b1.clone()).remove(a2) == lm.remove(a2).insert(a1, b1))
    }

    pub fn remove_not_present_still_same<V: Clone + PartialEq>(lm: &OrderedListMap<V>, a: i64) -> Option<bool> {
        given(!lm.contains(a), || lm.remove(a) == *lm)
    }

    pub fn add_then_remove_for_new_key_is_same<V: Clone + PartialEq>(
        lm: &OrderedListMap<V>,
        a1: i64,
        b1: V,
    ) -> Option<bool> {
        given(!lm.contains(a1), || lm.insert(a1, b1).remove(a1) == *lm)
    }

    pub fn empty_contains_nothing<V: Clone>(k: i64) -> Option<bool> {
        Some(!OrderedListMap::<V>::empty().contains(k))
    }
}
