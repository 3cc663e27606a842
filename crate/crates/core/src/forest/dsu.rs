/// Disjoint sets over labels 1..=n where the representative of each set is its
/// smallest label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { parent: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Adds label `len() + 1` as a singleton and returns it.
    pub fn push(&mut self) -> u32 {
        let label = self.parent.len() as u32 + 1;
        self.parent.push(label);
        label
    }

    fn slot(label: u32) -> usize {
        label as usize - 1
    }

    pub fn find(&mut self, label: u32) -> u32 {
        let mut root = label;
        while self.parent[Self::slot(root)] != root {
            root = self.parent[Self::slot(root)];
        }
        let mut cur = label;
        while cur != root {
            let next = self.parent[Self::slot(cur)];
            self.parent[Self::slot(cur)] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; the smaller root wins. Returns the new root.
    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        let (keep, drop) = if ra <= rb { (ra, rb) } else { (rb, ra) };
        self.parent[Self::slot(drop)] = keep;
        keep
    }
}
