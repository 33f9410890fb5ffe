#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ggmsv::linalg::SymMatrix;
use serde_json::Value;

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

pub fn sym_det(m: &SymMatrix) -> f64 {
    det(&m.rows())
}

/// Mean and batch-means standard error (`batches` equal batches).
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (var / batches as f64).sqrt())
}

/// Kolmogorov–Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn spd(rows: &[&[f64]]) -> SymMatrix {
    SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

/// Wall-clock fields are the only thing allowed to differ between runs.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "seconds" && k != "repeat_seconds" && k != "speedup");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let bytes = fs::read(&path).unwrap();
        let bytes = if name.ends_with(".json") {
            let mut v: Value = serde_json::from_slice(&bytes).unwrap();
            strip_timing(&mut v);
            serde_json::to_vec(&v).unwrap()
        } else {
            bytes
        };
        out.insert(name, bytes);
    }
    assert!(!out.is_empty(), "{} is empty", dir.display());
    out
}

