//! Independent reference implementations shared by the integration and
//! acceptance suites.

#![allow(dead_code)]

use activefollow::geometry::Point2;
use activefollow::world::{CellIndex, OccupancyGrid};

/// Dense reference for the weighted ε-SVR dual in reduced form:
/// `min ½βᵀKβ − yᵀβ + εΣ|βᵢ|` s.t. `Σβ = 0`, `|βᵢ| ≤ uᵢ`.
///
/// Accelerated projected (proximal) gradient with adaptive restart. Returns
/// the minimizer and its objective value.
pub fn reference_svr_dual(k: &[Vec<f64>], y: &[f64], eps: f64, upper: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let lip = power_iteration(k, 200).max(1e-12);
    let eta = 1.0 / lip;
    let matvec = |b: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| k[i][j] * b[j]).sum()).collect() };
    // objective from a precomputed K·b
    let obj = |b: &[f64], kb: &[f64]| {
        let q: f64 = b.iter().zip(kb).map(|(a, c)| a * c).sum();
        0.5 * q - y.iter().zip(b).map(|(a, c)| a * c).sum::<f64>() + eps * b.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut x = vec![0.0; n];
    let mut kx = vec![0.0; n];
    let mut z = x.clone();
    let mut kz = kx.clone();
    let mut t = 1.0f64;
    let mut fx = 0.0;
    for _ in 0..iters {
        let v: Vec<f64> = (0..n).map(|i| z[i] - eta * (kz[i] - y[i])).collect();
        let xn = prox(&v, eta * eps, upper);
        let kxn = matvec(&xn);
        let fxn = obj(&xn, &kxn);
        if fxn > fx {
            // restart momentum
            t = 1.0;
            z = x.clone();
            kz = kx.clone();
            continue;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / tn;
        z = (0..n).map(|i| xn[i] + mom * (xn[i] - x[i])).collect();
        kz = (0..n).map(|i| kxn[i] + mom * (kxn[i] - kx[i])).collect();
        x = xn;
        kx = kxn;
        fx = fxn;
        t = tn;
    }
    (x, fx)
}

fn soft(v: f64, s: f64) -> f64 {
    v.signum() * (v.abs() - s).max(0.0)
}

/// Prox of `s|·|` plus box `|βᵢ| ≤ uᵢ` plus `Σβ = 0`, via bisection on the multiplier.
fn prox(v: &[f64], s: f64, upper: &[f64]) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> {
        v.iter().zip(upper).map(|(&vi, &u)| soft(vi - lam, s).clamp(-u, u)).collect()
    };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + s + 1.0;
    let (mut lo, mut hi) = (-span, span);
    while hi - lo > 1e-15 * span {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid).iter().sum::<f64>() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn power_iteration(k: &[Vec<f64>], iters: usize) -> f64 {
    let n = k.len();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lam = 0.0;
    for _ in 0..iters {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lam = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lam
}

/// Minimum total distance over all gated matchings of maximum cardinality,
/// by enumerating every injective map from the smaller side.
pub fn brute_force_association(tracks: &[Point2], dets: &[Point2], gate: f64) -> (usize, f64) {
    fn rec(i: usize, a: &[Point2], b: &[Point2], used: &mut Vec<bool>, gate: f64, best: &mut (usize, f64), acc: (usize, f64)) {
        if i == a.len() {
            if acc.0 > best.0 || (acc.0 == best.0 && acc.1 < best.1) {
                *best = acc;
            }
            return;
        }
        rec(i + 1, a, b, used, gate, best, acc);
        for j in 0..b.len() {
            let d = a[i].distance(b[j]);
            if !used[j] && d <= gate {
                used[j] = true;
                rec(i + 1, a, b, used, gate, best, (acc.0 + 1, acc.1 + d));
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    rec(0, tracks, dets, &mut vec![false; dets.len()], gate, &mut best, (0, 0.0));
    best
}

/// Door scenario path: straight along +x at speed `v` until `t_turn`, then a
/// quarter circle of radius `r` (left for `side` +1, right for −1, none for
/// 0), then straight again.
pub fn door_path(t: f64, v: f64, r: f64, t_turn: f64, side: f64) -> Point2 {
    let s = v * (t - t_turn);
    if s <= 0.0 || side == 0.0 {
        return Point2::new(s, 0.0);
    }
    let quarter = r * std::f64::consts::FRAC_PI_2;
    if s <= quarter {
        let th = s / r;
        Point2::new(r * th.sin(), side * r * (1.0 - th.cos()))
    } else {
        Point2::new(r, side * (r + s - quarter))
    }
}

/// Dijkstra over 8-connected cells with `p ≤ tau` in a row-major probability
/// grid; returns the cost in cell units (`None` if unreachable).
pub fn dijkstra_cost(cells: &[f64], w: usize, h: usize, tau: f64, s: (usize, usize), g: (usize, usize)) -> Option<f64> {
    let idx = |x: usize, y: usize| y * w + x;
    let mut dist = vec![f64::INFINITY; w * h];
    let mut done = vec![false; w * h];
    dist[idx(s.0, s.1)] = 0.0;
    loop {
        let mut u = None;
        let mut best = f64::INFINITY;
        for i in 0..w * h {
            if !done[i] && dist[i] < best {
                best = dist[i];
                u = Some(i);
            }
        }
        let u = u?;
        if u == idx(g.0, g.1) {
            return Some(dist[u]);
        }
        done[u] = true;
        let (ux, uy) = ((u % w) as i64, (u / w) as i64);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (ux + dx, uy + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let v = idx(nx as usize, ny as usize);
                if cells[v] > tau {
                    continue;
                }
                let nd = dist[u] + ((dx * dx + dy * dy) as f64).sqrt();
                if nd < dist[v] {
                    dist[v] = nd;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    Free,
    Unknown,
    Occupied,
}

/// Ternary layout from codes 0..9 (mostly free) where no occupied cell touches an unknown one
/// (Chebyshev separation of at least two cells).
pub fn separated_layout(kinds: &[u8], w: usize, h: usize) -> Vec<Kind> {
    let mut g: Vec<Kind> = kinds
        .iter()
        .map(|k| match k % 10 {
            0..=4 => Kind::Free,
            5..=7 => Kind::Unknown,
            _ => Kind::Occupied,
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            if g[y * w + x] != Kind::Occupied {
                continue;
            }
            let touches = neighbors(x, y, w, h).any(|(nx, ny)| g[ny * w + nx] == Kind::Unknown);
            if touches {
                g[y * w + x] = Kind::Free;
            }
        }
    }
    g
}

fn neighbors(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1i64..=1)
        .flat_map(|dy| (-1i64..=1).map(move |dx| (dx, dy)))
        .filter(|&d| d != (0, 0))
        .map(move |(dx, dy)| (x as i64 + dx, y as i64 + dy))
        .filter(move |&(nx, ny)| nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64)
        .map(|(nx, ny)| (nx as usize, ny as usize))
}

pub fn layout_grid(kinds: &[Kind], w: usize) -> OccupancyGrid {
    let rows: Vec<Vec<f64>> = kinds
        .chunks(w)
        .map(|r| {
            r.iter()
                .map(|k| match k {
                    Kind::Free => 0.1,
                    Kind::Unknown => 0.5,
                    Kind::Occupied => 0.9,
                })
                .collect()
        })
        .collect();
    OccupancyGrid::from_rows(Point2::ORIGIN, 0.1, &rows)
}

/// Free cells with an unknown 8-neighbour, row-major.
pub fn frontier_oracle(layout: &[Kind], w: usize, h: usize) -> Vec<CellIndex> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if layout[y * w + x] == Kind::Free && neighbors(x, y, w, h).any(|(nx, ny)| layout[ny * w + nx] == Kind::Unknown) {
                out.push((x as i64, y as i64));
            }
        }
    }
    out
}
