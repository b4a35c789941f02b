//! N-queens as a repair domain: one queen per column, conflicts counted per
//! attacking pair.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamic::ViolationRecord;

pub const ATTACK: &str = "attack";
pub const MIN_CONFLICTS: &str = "min_conflicts";
pub const RANDOM_ROW: &str = "random_row";

/// Column to row assignment with line occupancy counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct QueensBoard {
    rows: Vec<usize>,
    row_count: Vec<u32>,
    /// Indexed by `row + col`.
    diag: Vec<u32>,
    /// Indexed by `row + n - 1 - col`.
    anti: Vec<u32>,
}

impl TryFrom<Vec<usize>> for QueensBoard {
    type Error = String;

    fn try_from(rows: Vec<usize>) -> Result<Self, String> {
        match rows.iter().position(|&r| r >= rows.len()) {
            Some(c) => Err(format!("column {c}: row {} out of range", rows[c])),
            None => Ok(Self::new(rows)),
        }
    }
}

impl From<QueensBoard> for Vec<usize> {
    fn from(b: QueensBoard) -> Self {
        b.rows
    }
}

fn pairs(k: u32) -> usize {
    (k as usize) * (k.saturating_sub(1) as usize) / 2
}

impl QueensBoard {
    /// Panics if a row is out of range.
    pub fn new(rows: Vec<usize>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|&r| r < n), "row out of range");
        let mut b = Self {
            rows: Vec::with_capacity(n),
            row_count: vec![0; n],
            diag: vec![0; 2 * n.max(1) - 1],
            anti: vec![0; 2 * n.max(1) - 1],
        };
        for (c, r) in rows.into_iter().enumerate() {
            b.rows.push(r);
            b.occupy(c, r, 1);
        }
        b
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self::new((0..n).map(|_| rng.gen_range(0..n)).collect())
    }

    fn occupy(&mut self, col: usize, row: usize, delta: i32) {
        let n = self.row_count.len();
        let apply = |v: &mut u32| *v = (*v as i32 + delta) as u32;
        apply(&mut self.row_count[row]);
        apply(&mut self.diag[row + col]);
        apply(&mut self.anti[row + n - 1 - col]);
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn row(&self, col: usize) -> usize {
        self.rows[col]
    }

    /// Number of attacking pairs.
    pub fn conflicts(&self) -> usize {
        self.row_count.iter().chain(&self.diag).chain(&self.anti).map(|&k| pairs(k)).sum()
    }

    /// Queens attacking the queen in `col`.
    pub fn conflicts_at(&self, col: usize) -> usize {
        let n = self.rows.len();
        let r = self.rows[col];
        (self.row_count[r] + self.diag[r + col] + self.anti[r + n - 1 - col] - 3) as usize
    }

    /// Queens that would attack a queen placed at (`col`, `row`), ignoring
    /// the one currently in `col`.
    fn conflicts_if(&self, col: usize, row: usize) -> usize {
        let n = self.rows.len();
        // the queen itself lies on all three lines only when it stays put
        let own = 3 * (self.rows[col] == row) as u32;
        (self.row_count[row] + self.diag[row + col] + self.anti[row + n - 1 - col] - own) as usize
    }

    pub fn set(&mut self, col: usize, row: usize) {
        let old = self.rows[col];
        self.occupy(col, old, -1);
        self.rows[col] = row;
        self.occupy(col, row, 1);
    }

    /// Moves the queen in `col` to the row with the fewest conflicts, lowest
    /// row on ties. Returns the chosen row.
    pub fn repair(&mut self, col: usize) -> usize {
        let best = (0..self.n())
            .min_by_key(|&r| (self.conflicts_if(col, r), r))
            .expect("non-empty board");
        self.set(col, best);
        best
    }

    /// One `attack` violation per attacked column, scored 1/(1 + attackers).
    pub fn violations(&self) -> Vec<ViolationRecord> {
        let mut v: Vec<ViolationRecord> = (0..self.n())
            .filter_map(|c| {
                let k = self.conflicts_at(c);
                (k > 0).then(|| {
                    let s = 1.0 / (1.0 + k as f64);
                    ViolationRecord {
                        constraint_type: ATTACK.into(),
                        name: format!("{ATTACK}@{c}"),
                        score: s,
                        weighted_score: s,
                        positions: vec![c],
                    }
                })
            })
            .collect();
        v.sort_by(|a, b| a.weighted_score.total_cmp(&b.weighted_score).then(a.positions.cmp(&b.positions)));
        v
    }

    pub fn score(&self) -> f64 {
        1.0 / (1.0 + self.conflicts() as f64)
    }
}

pub fn queens_conflicts(b: &QueensBoard) -> usize {
    b.conflicts()
}

pub fn queens_repair(b: &QueensBoard, col: usize) -> QueensBoard {
    let mut out = b.clone();
    out.repair(col);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute(rows: &[usize]) -> usize {
        let mut k = 0;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                if rows[i] == rows[j] || rows[i].abs_diff(rows[j]) == j - i {
                    k += 1;
                }
            }
        }
        k
    }

    #[test]
    fn known_solution() {
        assert_eq!(queens_conflicts(&QueensBoard::new(vec![1, 3, 0, 2])), 0);
    }

    #[test]
    fn single_row() {
        let b = QueensBoard::new(vec![0; 4]);
        assert_eq!(queens_conflicts(&b), 6);
        assert_eq!(b.conflicts_at(0), 3);
    }

    #[test]
    fn repair_reaches_column_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let b = QueensBoard::random(8, &mut rng);
            let col = rng.gen_range(0..8);
            let scan: Vec<usize> = (0..8)
                .map(|r| {
                    let mut rows = b.rows().to_vec();
                    rows[col] = r;
                    brute(&rows)
                })
                .collect();
            let min = *scan.iter().min().unwrap();
            let lowest = scan.iter().position(|&k| k == min).unwrap();
            let after = queens_repair(&b, col);
            assert_eq!(queens_conflicts(&after), min);
            assert_eq!(after.row(col), lowest);
            assert!(queens_conflicts(&after) <= queens_conflicts(&b));
        }
    }

    #[test]
    fn counters_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut b = QueensBoard::random(12, &mut rng);
        for _ in 0..300 {
            b.set(rng.gen_range(0..12), rng.gen_range(0..12));
            assert_eq!(b.conflicts(), brute(b.rows()));
        }
    }

    #[test]
    fn violations_cover_attacked_columns() {
        let b = QueensBoard::new(vec![0, 0, 3, 1]);
        let cols: Vec<usize> = b.violations().iter().map(|v| v.positions[0]).collect();
        assert_eq!(cols.len(), (0..4).filter(|&c| b.conflicts_at(c) > 0).count());
        assert!(b.violations().windows(2).all(|w| w[0].weighted_score <= w[1].weighted_score));
    }

    #[test]
    fn serde_as_row_list() {
        let b = QueensBoard::new(vec![1, 3, 0, 2]);
        let j = serde_json::to_string(&b).unwrap();
        assert_eq!(j, "[1,3,0,2]");
        let back: QueensBoard = serde_json::from_str(&j).unwrap();
        assert_eq!(back, b);
    }
}
