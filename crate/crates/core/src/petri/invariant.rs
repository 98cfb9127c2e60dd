//! P-invariants by Farkas elimination.

use num_integer::Integer;

use super::PetriNet;

fn support(row: &[i64]) -> Vec<usize> {
    row.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, _)| i).collect()
}

fn normalize(row: &mut [i64]) {
    let g = row.iter().fold(0i64, |g, &x| g.gcd(&x));
    if g > 1 {
        row.iter_mut().for_each(|x| *x /= g);
    }
}

/// Minimal-support non-negative place weightings `x` with `xᵀ·C = 0`, sorted
/// by support size, then lexicographically by support.
///
/// Each row is `[C(p) | e_p]`; eliminating a transition column combines every
/// positive row with every negative row so that the column cancels. Rows whose
/// support strictly contains another row's support are dropped after every step.
pub fn p_invariants(net: &PetriNet) -> Vec<Vec<i64>> {
    let places = net.places.len();
    let transitions = net.transitions.len();
    let incidence = net.incidence();
    let mut rows: Vec<Vec<i64>> = (0..places)
        .map(|p| {
            let mut row = incidence[p].clone();
            row.extend((0..places).map(|q| i64::from(q == p)));
            row
        })
        .collect();

    for col in 0..transitions {
        let (zero, nonzero): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r[col] == 0);
        let (pos, neg): (Vec<_>, Vec<_>) = nonzero.into_iter().partition(|r| r[col] > 0);
        let mut next = zero;
        for a in &pos {
            for b in &neg {
                let (wa, wb) = (-b[col], a[col]);
                let mut row: Vec<i64> = a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect();
                normalize(&mut row);
                next.push(row);
            }
        }
        rows = prune(next, transitions);
    }

    let mut out: Vec<Vec<i64>> = rows.into_iter().map(|r| r[transitions..].to_vec()).collect();
    out.sort_by(|a, b| {
        let (sa, sb) = (support(a), support(b));
        sa.len().cmp(&sb.len()).then_with(|| sa.cmp(&sb)).then_with(|| a.cmp(b))
    });
    out.dedup();
    out
}

fn prune(rows: Vec<Vec<i64>>, offset: usize) -> Vec<Vec<i64>> {
    let supports: Vec<Vec<usize>> = rows.iter().map(|r| support(&r[offset..])).collect();
    let mut keep: Vec<Vec<i64>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let dominated = supports.iter().enumerate().any(|(j, s)| {
            j != i
                && s.iter().all(|x| supports[i].contains(x))
                && (s.len() < supports[i].len() || j < i)
        });
        if !dominated {
            keep.push(row.clone());
        }
    }
    keep
}
