use rand::Rng;

/// Vose alias table over the positive-weight items of an instance.
///
/// Zero-weight items are left out of the table entirely, so they can never be
/// returned by a draw regardless of rounding in the construction.
#[derive(Debug, Clone)]
pub(crate) struct AliasTable {
    /// Instance indices of the positive-weight items.
    members: Vec<usize>,
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// `total` must be the (positive) sum of `weights`.
    pub(crate) fn new(weights: &[f64], total: f64) -> Self {
        let members: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let len = members.len();
        let mut prob: Vec<f64> = members
            .iter()
            .map(|&i| weights[i] * len as f64 / total)
            .collect();
        let mut alias: Vec<usize> = (0..len).collect();

        let mut small = Vec::new();
        let mut large = Vec::new();
        for (slot, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(slot);
            } else {
                large.push(slot);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] = (prob[l] + prob[s]) - 1.0;
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for slot in small.into_iter().chain(large) {
            prob[slot] = 1.0;
        }

        Self {
            members,
            prob,
            alias,
        }
    }

    /// Returns an instance index.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let slot = rng.gen_range(0..self.prob.len());
        let coin: f64 = rng.gen();
        if coin < self.prob[slot] {
            self.members[slot]
        } else {
            self.members[self.alias[slot]]
        }
    }

    /// Exact probability of each instance index, reconstructed from the table.
    #[cfg(test)]
    pub(crate) fn implied_distribution(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let len = self.prob.len() as f64;
        for slot in 0..self.prob.len() {
            out[self.members[slot]] += self.prob[slot] / len;
            out[self.members[self.alias[slot]]] += (1.0 - self.prob[slot]) / len;
        }
        out
    }
}
