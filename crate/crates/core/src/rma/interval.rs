use std::collections::BTreeMap;
use std::ops::Range;

/// Map from disjoint byte ranges to values. Inserting a range overwrites
/// whatever it overlaps.
#[derive(Clone, Debug, Default)]
pub(crate) struct IntervalMap<V> {
    // start -> (end, value)
    spans: BTreeMap<usize, (usize, V)>,
}

impl<V: Clone> IntervalMap<V> {
    pub fn new() -> Self {
        Self { spans: BTreeMap::new() }
    }

    pub fn clear(&mut self) {
        self.spans.clear();
    }

    pub fn insert(&mut self, range: Range<usize>, value: V) {
        if range.is_empty() {
            return;
        }
        self.remove(range.clone());
        self.spans.insert(range.start, (range.end, value));
    }

    pub fn remove(&mut self, range: Range<usize>) {
        if range.is_empty() {
            return;
        }
        let overlapping: Vec<usize> = self
            .spans
            .range(..range.end)
            .rev()
            .take_while(|(_, (end, _))| *end > range.start)
            .map(|(start, _)| *start)
            .collect();
        for start in overlapping {
            let (end, value) = self.spans.remove(&start).expect("span present");
            if start < range.start {
                self.spans.insert(start, (range.start, value.clone()));
            }
            if end > range.end {
                self.spans.insert(range.end, (end, value));
            }
        }
    }

    pub fn overlaps(&self, range: Range<usize>) -> bool {
        if range.is_empty() {
            return false;
        }
        self.spans
            .range(..range.end)
            .next_back()
            .is_some_and(|(_, (end, _))| *end > range.start)
            || self.spans.range(range.start..range.end).next().is_some()
    }

    /// Pieces covering `range`, gaps reported as `None`.
    pub fn query(&self, range: Range<usize>) -> Vec<(Range<usize>, Option<V>)> {
        let mut out = Vec::new();
        if range.is_empty() {
            return out;
        }
        let mut cursor = range.start;
        let first = self
            .spans
            .range(..=range.start)
            .next_back()
            .filter(|(_, (end, _))| *end > range.start)
            .map(|(s, _)| *s)
            .unwrap_or(range.start);
        for (&start, (end, value)) in self.spans.range(first..range.end) {
            let s = start.max(range.start);
            let e = (*end).min(range.end);
            if s > cursor {
                out.push((cursor..s, None));
            }
            if e > s {
                out.push((s..e, Some(value.clone())));
            }
            cursor = cursor.max(e);
        }
        if cursor < range.end {
            out.push((cursor..range.end, None));
        }
        out
    }

    pub fn spans(&self) -> impl Iterator<Item = (Range<usize>, &V)> {
        self.spans.iter().map(|(s, (e, v))| (*s..*e, v))
    }
}
