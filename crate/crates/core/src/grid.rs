//! Pixel grids over a small symbol alphabet.

use std::fmt;

use thiserror::Error;

pub type Symbol = u8;

pub const EMPTY: Symbol = 0;
pub const SHIP: Symbol = 1;
pub const BULLET: Symbol = 2;
pub const TARGET: Symbol = 3;
pub const BULLSEYE: Symbol = 4;
pub const EXPLODE_HIT: Symbol = 5;
pub const EXPLODE_BULLSEYE: Symbol = 6;
/// Context-only padding for reads outside the grid; never stored in a grid.
pub const BORDER: Symbol = 7;

/// Symbols that may appear inside a grid.
pub const NUM_SYMBOLS: usize = 7;
/// Bits per symbol in binarized contexts (covers `BORDER` too).
pub const SYMBOL_BITS: usize = 3;

/// Stable symbol ↔ character table used by the ASCII renderer.
pub const ASCII: [(Symbol, char); 8] = [
    (EMPTY, '.'),
    (SHIP, 'A'),
    (BULLET, '|'),
    (TARGET, '='),
    (BULLSEYE, 'o'),
    (EXPLODE_HIT, '*'),
    (EXPLODE_BULLSEYE, '@'),
    (BORDER, '#'),
];

pub fn symbol_char(s: Symbol) -> char {
    ASCII[s as usize].1
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("row {row} has width {got}, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("unknown grid character {0:?}")]
    UnknownChar(char),
    #[error("symbol {0} is outside the grid alphabet")]
    BadSymbol(Symbol),
    #[error("grid must have at least one cell")]
    Empty,
}

/// Row-major `width × height` array of symbols.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    cells: Vec<Symbol>,
}

impl PixelGrid {
    pub fn filled(width: usize, height: usize, symbol: Symbol) -> Self {
        assert!((symbol as usize) < NUM_SYMBOLS);
        Self {
            width,
            height,
            cells: vec![symbol; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<Symbol>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::Empty);
        }
        if cells.len() != width * height {
            return Err(GridError::Ragged {
                row: cells.len() / width,
                expected: width,
                got: cells.len() % width,
            });
        }
        if let Some(&s) = cells.iter().find(|&&s| s as usize >= NUM_SYMBOLS) {
            return Err(GridError::BadSymbol(s));
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    /// Parses one line per row using the [`ASCII`] table.
    pub fn from_ascii(text: &str) -> Result<Self, GridError> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let Some(first) = rows.first() else {
            return Err(GridError::Empty);
        };
        let width = first.chars().count();
        let mut cells = Vec::with_capacity(width * rows.len());
        for (row, line) in rows.iter().enumerate() {
            let got = line.chars().count();
            if got != width {
                return Err(GridError::Ragged {
                    row,
                    expected: width,
                    got,
                });
            }
            for c in line.chars() {
                let sym = ASCII
                    .iter()
                    .take(NUM_SYMBOLS)
                    .find(|(_, ch)| *ch == c)
                    .ok_or(GridError::UnknownChar(c))?
                    .0;
                cells.push(sym);
            }
        }
        Self::from_cells(width, rows.len(), cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> Symbol {
        self.cells[y * self.width + x]
    }

    /// Reads with out-of-grid coordinates mapped to `outside`.
    pub fn get_or(&self, x: isize, y: isize, outside: Symbol) -> Symbol {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            outside
        } else {
            self.cells[y as usize * self.width + x as usize]
        }
    }

    pub fn set(&mut self, x: usize, y: usize, s: Symbol) {
        assert!((s as usize) < NUM_SYMBOLS, "symbol {s} not storable");
        self.cells[y * self.width + x] = s;
    }

    pub fn count(&self, s: Symbol) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&s| symbol_char(s)));
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for PixelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PixelGrid {}x{}", self.width, self.height)?;
        f.write_str(&self.to_ascii())
    }
}
