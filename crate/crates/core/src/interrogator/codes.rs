use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a code book derives its chip patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CodeMode {
    /// Square waves from successive clock-divider stages (32, 64, ...),
    /// as a ripple counter produces them.
    Divider {
        /// Largest divider the counter offers.
        max_divider: u32,
    },
    /// Walsh-Hadamard rows sharing one chip rate.
    Walsh,
}

impl Default for CodeMode {
    fn default() -> Self {
        CodeMode::Divider { max_divider: 1024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeKind {
    Divider,
    Walsh,
    /// Constant +1: no chopping.
    Unchopped,
}

/// One subcarrier code: a periodic ±1 chip sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierCode {
    pub code_id: usize,
    pub kind: CodeKind,
    /// Clock divider whose half period is one chip.
    pub base_divider: u32,
    pub chips: Vec<i8>,
    /// Seconds per chip.
    pub chip_duration: f64,
}

/// Tolerance, in chips, when locating a chip boundary from a time stamp.
const CHIP_EPS: f64 = 1e-9;

impl SubcarrierCode {
    /// Square wave from clock division: `divider` carrier cycles per period.
    pub fn divider(code_id: usize, f_main: f64, base_divider: u32, divider: u32) -> Result<Self> {
        check_divider(base_divider)?;
        if divider < base_divider || !divider.is_power_of_two() {
            return Err(Error::validation(
                "divider",
                format!("{divider} must be a power of two >= {base_divider}"),
            ));
        }
        let half = (divider / base_divider) as usize;
        let mut chips = vec![1i8; half];
        chips.extend(std::iter::repeat_n(-1i8, half));
        Ok(SubcarrierCode {
            code_id,
            kind: CodeKind::Divider,
            base_divider,
            chips,
            chip_duration: base_divider as f64 / (2.0 * f_main),
        })
    }

    /// Constant code, used when the chopper is off.
    pub fn unchopped(code_id: usize, f_main: f64, base_divider: u32) -> Self {
        SubcarrierCode {
            code_id,
            kind: CodeKind::Unchopped,
            base_divider,
            chips: vec![1],
            chip_duration: base_divider as f64 / (2.0 * f_main),
        }
    }

    /// Duration of one full code period, s.
    pub fn period(&self) -> f64 {
        self.chips.len() as f64 * self.chip_duration
    }

    /// Fundamental frequency of the pattern, Hz.
    pub fn frequency(&self) -> f64 {
        1.0 / self.period()
    }

    /// Chip sign at `t` seconds after the code started. Times before the
    /// start read the first chip.
    pub fn sign_at(&self, t: f64) -> f64 {
        let k = (t / self.chip_duration + CHIP_EPS).floor().max(0.0) as usize;
        self.chips[k % self.chips.len()] as f64
    }

    /// Sum of chips over one period.
    pub fn dc(&self) -> i64 {
        self.chips.iter().map(|&c| c as i64).sum()
    }

    pub fn is_zero_mean(&self) -> bool {
        self.dc() == 0
    }
}

fn check_divider(d: u32) -> Result<()> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::validation(
            "base_divider",
            format!("{d} must be a power of two >= 2"),
        ));
    }
    Ok(())
}

/// Normalised cross-correlation of two codes sharing a chip duration,
/// taken over the least common period.
pub fn cross_correlation(a: &SubcarrierCode, b: &SubcarrierCode) -> f64 {
    let la = a.chips.len();
    let lb = b.chips.len();
    let l = lcm(la, lb);
    let s: i64 = (0..l)
        .map(|i| a.chips[i % la] as i64 * b.chips[i % lb] as i64)
        .sum();
    s as f64 / l as f64
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// An orthogonal set of subcarrier codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBook {
    pub f_main: f64,
    pub base_divider: u32,
    pub mode: CodeMode,
    pub codes: Vec<SubcarrierCode>,
}

impl CodeBook {
    pub fn get(&self, code_id: usize) -> Result<&SubcarrierCode> {
        self.codes.get(code_id).ok_or(Error::Capacity {
            requested: code_id + 1,
            capacity: self.codes.len(),
        })
    }

    /// Number of chips in the common period of the given codes.
    pub fn common_chips(codes: &[&SubcarrierCode]) -> usize {
        codes.iter().fold(1, |acc, c| lcm(acc, c.chips.len()))
    }

    /// Largest |normalised cross-correlation| between distinct codes.
    pub fn max_cross_correlation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.codes.iter().enumerate() {
            for b in &self.codes[i + 1..] {
                worst = worst.max(cross_correlation(a, b).abs());
            }
        }
        worst
    }
}

/// Sylvester Hadamard rows of order `n` sorted by descending sequency
/// (number of sign changes), so the constant row comes last.
fn walsh_rows(n: usize) -> Vec<Vec<i8>> {
    let mut h = vec![vec![1i8]];
    while h.len() < n {
        let mut next = Vec::with_capacity(2 * h.len());
        for row in &h {
            let mut r = row.clone();
            r.extend(row.iter());
            next.push(r);
        }
        for row in &h {
            let mut r = row.clone();
            r.extend(row.iter().map(|&x| -x));
            next.push(r);
        }
        h = next;
    }
    let sequency = |r: &Vec<i8>| r.windows(2).filter(|w| w[0] != w[1]).count();
    h.sort_by_key(|r| std::cmp::Reverse(sequency(r)));
    h
}

/// Builds a code book of `n_motes` mutually orthogonal codes.
///
/// In divider mode code `i` is the square wave of divider
/// `base_divider · 2^i`. In Walsh mode all codes share the chip rate of
/// the base divider's half period.
pub fn build_code_book(
    n_motes: usize,
    f_main: f64,
    base_divider: u32,
    mode: CodeMode,
) -> Result<CodeBook> {
    if n_motes == 0 {
        return Err(Error::validation("n_motes", "must be >= 1"));
    }
    if !(f_main > 0.0) {
        return Err(Error::validation("f_main", "must be > 0"));
    }
    check_divider(base_divider)?;
    let codes = match mode {
        CodeMode::Divider { max_divider } => {
            let stages = if max_divider >= base_divider {
                (max_divider / base_divider).ilog2() as usize + 1
            } else {
                0
            };
            if n_motes > stages {
                return Err(Error::Capacity {
                    requested: n_motes,
                    capacity: stages,
                });
            }
            (0..n_motes)
                .map(|i| SubcarrierCode::divider(i, f_main, base_divider, base_divider << i))
                .collect::<Result<Vec<_>>>()?
        }
        CodeMode::Walsh => {
            let order = n_motes.next_power_of_two();
            walsh_rows(order)
                .into_iter()
                .take(n_motes)
                .enumerate()
                .map(|(i, chips)| SubcarrierCode {
                    code_id: i,
                    kind: if chips.iter().all(|&c| c == 1) {
                        CodeKind::Unchopped
                    } else {
                        CodeKind::Walsh
                    },
                    base_divider,
                    chips,
                    chip_duration: base_divider as f64 / (2.0 * f_main),
                })
                .collect()
        }
    };
    Ok(CodeBook {
        f_main,
        base_divider,
        mode,
        codes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const F_MAIN: f64 = 1.78e6;

    #[test]
    fn divider_32_is_55_625_khz() {
        let book = build_code_book(2, F_MAIN, 32, CodeMode::default()).unwrap();
        assert!((book.codes[0].frequency() - 55_625.0).abs() < 1e-6);
        assert!((book.codes[1].frequency() - 27_812.5).abs() < 1e-6);
        assert_eq!(book.codes[1].chips, [1, 1, -1, -1]);
    }

    #[test]
    fn divider_codes_orthogonal_and_normalised() {
        let book = build_code_book(6, F_MAIN, 32, CodeMode::default()).unwrap();
        assert_eq!(book.max_cross_correlation(), 0.0);
        for c in &book.codes {
            assert_eq!(cross_correlation(c, c), 1.0);
            assert!(c.is_zero_mean());
        }
        assert!(matches!(
            build_code_book(7, F_MAIN, 32, CodeMode::default()),
            Err(Error::Capacity {
                requested: 7,
                capacity: 6
            })
        ));
    }

    #[test]
    fn walsh_rows_orthogonal_constant_last() {
        for n in [1, 2, 3, 4, 8] {
            let book = build_code_book(n, F_MAIN, 32, CodeMode::Walsh).unwrap();
            assert_eq!(book.codes.len(), n);
            assert_eq!(book.max_cross_correlation(), 0.0);
        }
        let book = build_code_book(4, F_MAIN, 32, CodeMode::Walsh).unwrap();
        assert_eq!(book.codes[0].chips, [1, -1, 1, -1]);
        assert_eq!(book.codes[3].kind, CodeKind::Unchopped);
    }

    #[test]
    fn sign_lookup_on_sample_grid() {
        let c = SubcarrierCode::divider(1, F_MAIN, 32, 64).unwrap();
        let dt = 2.0 / F_MAIN;
        // 8 samples per chip at half the carrier rate
        let signs: Vec<f64> = (0..32).map(|n| c.sign_at(n as f64 * dt)).collect();
        for (n, s) in signs.iter().enumerate() {
            let want = if (n / 16) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(*s, want, "sample {n}");
        }
    }

    #[test]
    fn rejects_bad_dividers() {
        assert!(build_code_book(1, F_MAIN, 48, CodeMode::Walsh).is_err());
        assert!(SubcarrierCode::divider(0, F_MAIN, 32, 16).is_err());
        assert!(build_code_book(0, F_MAIN, 32, CodeMode::Walsh).is_err());
    }
}
