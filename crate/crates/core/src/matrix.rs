// Small fixed-size helpers for 2x2 stochastic matrices.

pub(crate) type Mat2 = [[f64; 2]; 2];

pub(crate) const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub(crate) fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Clips entries into [0, 1] and rescales each row to sum to one.
#[inline]
pub(crate) fn renormalize(m: &mut Mat2) {
    for row in m.iter_mut() {
        row[0] = row[0].clamp(0.0, 1.0);
        row[1] = row[1].clamp(0.0, 1.0);
        let s = row[0] + row[1];
        if s > 0.0 {
            row[0] /= s;
            row[1] /= s;
        }
    }
}
