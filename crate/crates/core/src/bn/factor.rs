//! Dense table factors over network variable indices.

/// A nonnegative function over the joint states of `scope`.
///
/// Values are stored row-major: the last variable in `scope` varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub scope: Vec<usize>,
    pub card: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, card: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(scope.len(), card.len());
        debug_assert_eq!(values.len(), card.iter().product::<usize>());
        Factor { scope, card, values }
    }

    pub fn scalar(value: f64) -> Self {
        Factor::new(Vec::new(), Vec::new(), vec![value])
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    fn strides(card: &[usize]) -> Vec<usize> {
        let mut strides = vec![1; card.len()];
        for i in (0..card.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * card[i + 1];
        }
        strides
    }

    /// Pointwise product over the union of both scopes.
    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut card = self.card.clone();
        for (v, c) in other.scope.iter().zip(&other.card) {
            if !scope.contains(v) {
                scope.push(*v);
                card.push(*c);
            }
        }
        let a_strides = Self::strides(&self.card);
        let b_strides = Self::strides(&other.card);
        // Stride of each result variable inside each operand (0 when absent).
        let a_map: Vec<usize> = scope
            .iter()
            .map(|v| self.scope.iter().position(|x| x == v).map_or(0, |i| a_strides[i]))
            .collect();
        let b_map: Vec<usize> = scope
            .iter()
            .map(|v| other.scope.iter().position(|x| x == v).map_or(0, |i| b_strides[i]))
            .collect();

        let total: usize = card.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut assignment = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..total {
            values.push(self.values[ia] * other.values[ib]);
            // Odometer increment, last position fastest.
            for pos in (0..scope.len()).rev() {
                assignment[pos] += 1;
                ia += a_map[pos];
                ib += b_map[pos];
                if assignment[pos] < card[pos] {
                    break;
                }
                ia -= a_map[pos] * card[pos];
                ib -= b_map[pos] * card[pos];
                assignment[pos] = 0;
            }
        }
        Factor::new(scope, card, values)
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let outer: usize = self.card[..pos].iter().product();
        let k = self.card[pos];
        let inner: usize = self.card[pos + 1..].iter().product();
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..k {
                let base = (o * k + s) * inner;
                let dst = o * inner;
                for i in 0..inner {
                    values[dst + i] += self.values[base + i];
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut card = self.card.clone();
        scope.remove(pos);
        card.remove(pos);
        Factor::new(scope, card, values)
    }

    /// Fixes `var` to `state`, dropping it from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let outer: usize = self.card[..pos].iter().product();
        let k = self.card[pos];
        let inner: usize = self.card[pos + 1..].iter().product();
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * k + state) * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut scope = self.scope.clone();
        let mut card = self.card.clone();
        scope.remove(pos);
        card.remove(pos);
        Factor::new(scope, card, values)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}
