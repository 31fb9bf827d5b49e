use super::{AutomataError, Boundary, GridState};

/// Reads a `.`/`*` block, one row per line. Blank lines and lines starting
/// with `!` are skipped. The result has a dead boundary.
pub fn parse_pattern(text: &str) -> Result<GridState, AutomataError> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        let row = line
            .chars()
            .map(|c| match c {
                '.' => Ok(0),
                '*' => Ok(1),
                other => Err(AutomataError::Pattern {
                    line: i + 1,
                    message: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(AutomataError::Pattern {
                    line: i + 1,
                    message: format!("row has {} cells, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(AutomataError::EmptyGrid);
    }
    Ok(GridState {
        width: rows[0].len(),
        height: rows.len(),
        cells: rows.concat(),
        boundary: Boundary::Dead,
    })
}

pub fn to_pattern(g: &GridState) -> String {
    let mut out = String::with_capacity((g.width + 1) * g.height);
    for row in g.cells.chunks(g.width) {
        out.extend(row.iter().map(|&c| if c == 0 { '.' } else { '*' }));
        out.push('\n');
    }
    out
}
