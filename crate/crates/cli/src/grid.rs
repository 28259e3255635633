//! Parsing of order lists and sweep grids.

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    let v = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("'{p}' is not a non-negative integer")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

fn strictly_monotone<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

/// `e1,e2,...` or `start:stop:count`, the latter log-spaced with both ends
/// included.
pub fn parse_eps_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("epsilon grid is empty".into());
    }
    let grid: Vec<f64> = if let [start, stop, count] = text.split(':').collect::<Vec<_>>()[..] {
        let start: f64 = start.trim().parse().map_err(|_| format!("bad grid start '{start}'"))?;
        let stop: f64 = stop.trim().parse().map_err(|_| format!("bad grid stop '{stop}'"))?;
        let count: usize = count.trim().parse().map_err(|_| format!("bad grid count '{count}'"))?;
        if count == 0 {
            return Err("epsilon grid is empty".into());
        }
        if !(start > 0.0 && stop > 0.0) {
            return Err("log-spaced grid needs positive ends".into());
        }
        if count == 1 {
            vec![start]
        } else {
            let (a, b) = (start.ln(), stop.ln());
            (0..count)
                .map(|i| match i {
                    0 => start,
                    _ if i == count - 1 => stop,
                    _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number")))
            .collect::<Result<_, _>>()?
    };
    if !strictly_monotone(&grid) {
        return Err("epsilon grid must be strictly monotone".into());
    }
    Ok(grid)
}

/// `n1,n2,...` or `lo..hi` (inclusive).
pub fn parse_n_grid(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    let grid = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start '{lo}'"))?;
        let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end '{hi}'"))?;
        (lo..=hi).collect()
    } else {
        parse_usize_list(text)?
    };
    if grid.is_empty() {
        return Err("n grid is empty".into());
    }
    if !strictly_monotone(&grid) {
        return Err("n grid must be strictly monotone".into());
    }
    Ok(grid)
}
