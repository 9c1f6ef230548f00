//! Two-dimensional Nelder-Mead used to polish grid optima.

use crate::scalar::Scalar;

pub(crate) struct Polished<S> {
    pub point: [S; 2],
    pub value: S,
}

/// Minimizes `f` starting from the simplex `{start, start + step_0 e_0, start + step_1 e_1}`.
/// `f` may return `+inf` to reject a point.
pub(crate) fn minimize<S: Scalar, F: FnMut([S; 2]) -> S>(
    mut f: F,
    start: [S; 2],
    step: [S; 2],
    max_iter: usize,
    tol: S,
) -> Polished<S> {
    let half = S::lit(0.5);
    let two = S::lit(2.0);
    let mut pts = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut vals = [f(pts[0]), f(pts[1]), f(pts[2])];

    for _ in 0..max_iter {
        // order best..worst; the stable sort keeps the earlier vertex on ties
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| {
            vals[a]
                .partial_cmp(&vals[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];

        let spread = vals[2] - vals[0];
        let size = pts[1..]
            .iter()
            .map(|p| (p[0] - pts[0][0]).abs().max((p[1] - pts[0][1]).abs()))
            .fold(S::zero(), |a, b| a.max(b));
        if spread.is_finite() && spread <= tol && size <= tol.sqrt() {
            break;
        }
        if size <= S::epsilon() {
            break;
        }

        let centroid = [
            (pts[0][0] + pts[1][0]) * half,
            (pts[0][1] + pts[1][1]) * half,
        ];
        let along = |coef: S| {
            [
                centroid[0] + coef * (pts[2][0] - centroid[0]),
                centroid[1] + coef * (pts[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-S::one());
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = along(-two);
            let fe = f(expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[2] {
            let c = along(-half);
            (c, f(c))
        } else {
            let c = along(half);
            (c, f(c))
        };
        if fc < vals[2].min(fr) {
            pts[2] = contracted;
            vals[2] = fc;
            continue;
        }
        for k in 1..3 {
            pts[k] = [
                pts[0][0] + half * (pts[k][0] - pts[0][0]),
                pts[0][1] + half * (pts[k][1] - pts[0][1]),
            ];
            vals[k] = f(pts[k]);
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| {
            vals[a]
                .partial_cmp(&vals[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    Polished {
        point: pts[best],
        value: vals[best],
    }
}
