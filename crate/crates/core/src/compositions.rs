//! Compositions of an integer into a fixed number of positive parts.

/// Enumerates the compositions of `n` into `k` positive parts in
/// colexicographic order, reusing one buffer.
///
/// `parts[1..]` run as an odometer (least significant digit first) and
/// `parts[0]` absorbs the remainder.
#[derive(Debug, Clone)]
pub struct Compositions {
    n: usize,
    parts: Vec<usize>,
    state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Fresh,
    Running,
    Done,
}

impl Compositions {
    pub fn new(n: usize, k: usize) -> Self {
        let state = if (k == 0 && n != 0) || k > n {
            State::Done
        } else {
            State::Fresh
        };
        let mut parts = vec![1; k];
        if let Some(first) = parts.first_mut() {
            *first = n + 1 - k;
        }
        Compositions { n, parts, state }
    }

    /// Advances to the next composition and returns it.
    pub fn next_parts(&mut self) -> Option<&[usize]> {
        match self.state {
            State::Done => return None,
            State::Fresh => {
                self.state = State::Running;
                return Some(&self.parts);
            }
            State::Running => {}
        }
        let k = self.parts.len();
        // parts[0] == 1 means the tail is saturated at this digit.
        for i in 1..k {
            if self.parts[0] > 1 {
                self.parts[i] += 1;
                self.parts[0] -= 1;
                return Some(&self.parts);
            }
            // Carry: reset digit i and move its excess back into parts[0].
            self.parts[0] += self.parts[i] - 1;
            self.parts[i] = 1;
        }
        debug_assert_eq!(self.parts.iter().sum::<usize>(), self.n.max(k));
        self.state = State::Done;
        None
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_parts().map(<[usize]>::to_vec)
    }
}
