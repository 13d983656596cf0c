//! GF(2^8) arithmetic (reduction polynomial `x^8 + x^4 + x^3 + x^2 + 1`) and
//! the small dense matrix routines the linear-combination shuffle needs.

use std::sync::OnceLock;

const POLY: u16 = 0x11d;

struct Tables {
    exp: [u8; 512],
    log: [u8; 256],
    mul: Vec<[u8; 256]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut v: u16 = 1;
        for (i, e) in exp.iter_mut().take(255).enumerate() {
            *e = v as u8;
            log[v as usize] = i as u8;
            v <<= 1;
            if v & 0x100 != 0 {
                v ^= POLY;
            }
        }
        for i in 255..512 {
            exp[i] = exp[i - 255];
        }
        let mut mul = vec![[0u8; 256]; 256];
        for a in 1..256usize {
            for b in 1..256usize {
                mul[a][b] = exp[log[a] as usize + log[b] as usize];
            }
        }
        Tables { exp, log, mul }
    })
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    tables().mul[a as usize][b as usize]
}

/// Multiplicative inverse; `None` for zero.
pub fn inv(a: u8) -> Option<u8> {
    if a == 0 {
        return None;
    }
    let t = tables();
    Some(t.exp[255 - t.log[a as usize] as usize])
}

/// `dst += c * src`, elementwise.
pub fn mul_add(dst: &mut [u8], src: &[u8], c: u8) {
    debug_assert_eq!(dst.len(), src.len());
    match c {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let row = &tables().mul[c as usize];
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= row[s as usize]);
        }
    }
}

/// `dst += sum_k coeffs[k] * srcs[k]`, elementwise.
pub fn mul_add_many<S: AsRef<[u8]>>(dst: &mut [u8], coeffs: &[u8], srcs: &[S]) {
    debug_assert_eq!(coeffs.len(), srcs.len());
    let mul = &tables().mul;
    for (&c, src) in coeffs.iter().zip(srcs) {
        let src = src.as_ref();
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            continue;
        }
        let row = &mul[c as usize];
        dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= row[s as usize]);
    }
}

/// `buf *= c`, elementwise.
pub fn scale(buf: &mut [u8], c: u8) {
    let row = &tables().mul[c as usize];
    buf.iter_mut().for_each(|b| *b = row[*b as usize]);
}

/// Row-major dense matrix over GF(2^8).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            m.row_mut(r).copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u8] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let c = self[(r, k)];
                if c != 0 {
                    let (src, dst) = (other.row(k).to_vec(), out.row_mut(r));
                    mul_add(dst, &src, c);
                }
            }
        }
        out
    }

    /// Reduces a copy to row echelon form and returns the rank.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| m[(r, col)] != 0) else {
                continue;
            };
            m.swap_rows(rank, p);
            let pinv = inv(m[(rank, col)]).expect("nonzero pivot");
            scale(m.row_mut(rank), pinv);
            let pivot = m.row(rank).to_vec();
            for r in 0..m.rows {
                if r != rank {
                    let f = m[(r, col)];
                    mul_add(m.row_mut(r), &pivot, f);
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    /// Gauss-Jordan inverse of a square matrix; `None` if singular.
    pub fn inverse(&self) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut b = Matrix::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&r| a[(r, col)] != 0)?;
            a.swap_rows(col, p);
            b.swap_rows(col, p);
            let pinv = inv(a[(col, col)]).expect("nonzero pivot");
            scale(a.row_mut(col), pinv);
            scale(b.row_mut(col), pinv);
            let (pa, pb) = (a.row(col).to_vec(), b.row(col).to_vec());
            for r in 0..n {
                if r != col {
                    let f = a[(r, col)];
                    if f != 0 {
                        mul_add(a.row_mut(r), &pa, f);
                        mul_add(b.row_mut(r), &pb, f);
                    }
                }
            }
        }
        Some(b)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = u8;
    fn index(&self, (r, c): (usize, usize)) -> &u8 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut u8 {
        &mut self.data[r * self.cols + c]
    }
}
