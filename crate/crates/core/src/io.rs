//! Matrix file formats: alist and dense 0/1 text.
//!
//! The alist layout is the one used by the LDPC community for sparse binary
//! matrices: a header "N M" (columns then rows), the maximum column/row
//! degrees, per-column and per-row degree lists, then 1-based adjacency
//! lists, columns first. Writers emit the unpadded variant; the reader
//! accepts both padded (zero-filled) and unpadded files.

use std::io::{BufRead, Write};

use crate::gf2::{BitMatrix, BitVector};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// alist
// ---------------------------------------------------------------------------

pub fn write_alist(m: &BitMatrix, out: &mut impl Write) -> Result<()> {
    let (rows, cols) = (m.rows(), m.cols());
    let col_idx: Vec<Vec<usize>> = (0..cols)
        .map(|c| (0..rows).filter(|&r| m.get(r, c)).collect())
        .collect();
    let row_idx: Vec<Vec<usize>> = (0..rows)
        .map(|r| m.row(r).iter_ones().collect())
        .collect();
    let max_col = col_idx.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = row_idx.iter().map(Vec::len).max().unwrap_or(0);

    writeln!(out, "{cols} {rows}")?;
    writeln!(out, "{max_col} {max_row}")?;
    let degrees = |v: &[Vec<usize>]| {
        v.iter().map(|x| x.len().to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "{}", degrees(&col_idx))?;
    writeln!(out, "{}", degrees(&row_idx))?;
    for list in col_idx.iter().chain(row_idx.iter()) {
        let line: Vec<String> = list.iter().map(|&i| (i + 1).to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_alist(input: &mut impl BufRead) -> Result<BitMatrix> {
    let mut tokens = Vec::new();
    for line in input.lines() {
        for tok in line?.split_whitespace() {
            tokens.push(
                tok.parse::<usize>()
                    .map_err(|_| Error::Format(format!("non-numeric alist token {tok:?}")))?,
            );
        }
    }
    let mut pos = 0usize;
    let mut next = |what: &str| -> Result<usize> {
        let v = tokens
            .get(pos)
            .copied()
            .ok_or_else(|| Error::Format(format!("alist truncated while reading {what}")))?;
        pos += 1;
        Ok(v)
    };

    let cols = next("column count")?;
    let rows = next("row count")?;
    if cols == 0 || rows == 0 {
        return Err(Error::Format("alist declares an empty matrix".into()));
    }
    let max_col = next("max column degree")?;
    let max_row = next("max row degree")?;
    let col_deg: Vec<usize> = (0..cols).map(|_| next("column degree")).collect::<Result<_>>()?;
    let row_deg: Vec<usize> = (0..rows).map(|_| next("row degree")).collect::<Result<_>>()?;

    let mut m = BitMatrix::zeros(rows, cols);
    // Adjacency lists may be zero-padded up to the max degrees; tell the two
    // variants apart by the total body length. The header is exactly
    // 4 + cols + rows tokens.
    let body = tokens.len() - (4 + cols + rows);
    let unpadded: usize = col_deg.iter().sum::<usize>() + row_deg.iter().sum::<usize>();
    let padded = cols * max_col + rows * max_row;
    let is_padded = body != unpadded;
    if is_padded && body != padded {
        return Err(Error::Format(format!(
            "alist body has {body} entries; expected {unpadded} (unpadded) or {padded} (padded)"
        )));
    }
    for c in 0..cols {
        let width = if is_padded { max_col } else { col_deg[c] };
        let mut seen = 0usize;
        for _ in 0..width {
            let r = next("column adjacency")?;
            if r == 0 {
                continue; // padding
            }
            if r > rows {
                return Err(Error::Format(format!("row index {r} out of range 1..={rows}")));
            }
            m.set(r - 1, c, true);
            seen += 1;
        }
        if seen != col_deg[c] {
            return Err(Error::Format(format!(
                "column {c} lists {seen} entries but declares degree {}",
                col_deg[c]
            )));
        }
    }
    // Row lists are redundant with the column lists; validate consistency.
    for r in 0..rows {
        let width = if is_padded { max_row } else { row_deg[r] };
        let mut listed = Vec::with_capacity(width);
        for _ in 0..width {
            let c = next("row adjacency")?;
            if c == 0 {
                continue;
            }
            if c > cols {
                return Err(Error::Format(format!("column index {c} out of range 1..={cols}")));
            }
            listed.push(c - 1);
        }
        let from_cols: Vec<usize> = m.row(r).iter_ones().collect();
        let mut sorted = listed.clone();
        sorted.sort_unstable();
        if sorted != from_cols {
            return Err(Error::Format(format!(
                "row {r} adjacency disagrees with the column lists"
            )));
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// dense 0/1 text
// ---------------------------------------------------------------------------

pub fn write_dense(m: &BitMatrix, out: &mut impl Write) -> Result<()> {
    for r in 0..m.rows() {
        let line: String = (0..m.cols()).map(|c| if m.get(r, c) { '1' } else { '0' }).collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_dense(input: &mut impl BufRead) -> Result<BitMatrix> {
    let mut rows: Vec<BitVector> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bits: Vec<u8> = line
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::Format(format!("dense matrix rows must be 0/1, found {ch:?}"))),
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if bits.len() != first.len() {
                return Err(Error::Format(format!(
                    "ragged dense matrix: row 0 has {} columns, a later row has {}",
                    first.len(),
                    bits.len()
                )));
            }
        }
        rows.push(BitVector::from_bits(&bits));
    }
    if rows.is_empty() {
        return Err(Error::Format("dense matrix file is empty".into()));
    }
    Ok(BitMatrix::from_rows(rows))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
