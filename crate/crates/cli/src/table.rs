use std::fmt::Write;

/// Left-aligned text columns, numbers right-aligned, two spaces apart.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Text(String),
    Num(String),
}

impl Cell {
    fn text(&self) -> &str {
        match self {
            Cell::Text(s) | Cell::Num(s) => s,
        }
    }
}

pub fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

pub fn num(v: impl ToString) -> Cell {
    Cell::Num(v.to_string())
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.text().chars().count());
            }
        }
        let mut out = String::new();
        let last = widths.len() - 1;
        let line = |out: &mut String, cells: Vec<(&str, bool)>| {
            let mut s = String::new();
            for (i, ((t, right), w)) in cells.into_iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let pad = w - t.chars().count();
                if right {
                    s.extend(std::iter::repeat_n(' ', pad));
                    s.push_str(t);
                } else {
                    s.push_str(t);
                    if i != last {
                        s.extend(std::iter::repeat_n(' ', pad));
                    }
                }
            }
            let _ = writeln!(out, "{}", s.trim_end());
        };
        let header_right: Vec<bool> =
            (0..self.header.len()).map(|i| self.rows.first().is_some_and(|r| matches!(r[i], Cell::Num(_)))).collect();
        line(&mut out, self.header.iter().zip(&header_right).map(|(h, r)| (*h, *r)).collect());
        for row in &self.rows {
            line(&mut out, row.iter().map(|c| (c.text(), matches!(c, Cell::Num(_)))).collect());
        }
        out
    }
}
