/// Structure constants `c[i][j][k]` with `[e_i, e_j] = sum_k c[i][j][k] e_k`
/// for the rescaled basis `(X', Y', Z')`: `[X', Y'] = Z'`,
/// `[Y', Z'] = hbar^2 X'`, `[Z', X'] = hbar^2 Y'`.
pub fn su2_bracket_family(hbar: f64) -> [[[f64; 3]; 3]; 3] {
    let h2 = hbar * hbar;
    let mut c = [[[0.0; 3]; 3]; 3];
    let mut set = |i: usize, j: usize, k: usize, v: f64| {
        c[i][j][k] = v;
        c[j][i][k] = -v;
    };
    set(0, 1, 2, 1.0);
    set(1, 2, 0, h2);
    set(2, 0, 1, h2);
    c
}

/// Largest coefficient of the Jacobiator over basis triples.
pub fn jacobi_residual(c: &[[[f64; 3]; 3]; 3]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut s = 0.0;
                    for m in 0..3 {
                        s += c[j][k][m] * c[i][m][l] + c[k][i][m] * c[j][m][l] + c[i][j][m] * c[k][m][l];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}
