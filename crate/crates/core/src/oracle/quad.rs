//! Verification quadrature.
//!
//! Two numerical integrators that serve as implementation-independent
//! referees for the closed forms:
//!
//! * [`tanh_sinh`] — double-exponential quadrature on a finite interval,
//!   robust to integrable endpoint singularities such as `t^{-1/2}`.
//!   [`reg_beta_by_quadrature`] uses it to evaluate the defining beta
//!   integral without touching the continued-fraction code path.
//! * [`gauss_laguerre`] — nodes and weights of the generalized
//!   Gauss–Laguerre rule, i.e. expectations under a `Gamma(α+1, 1)`
//!   distribution. Used to marginalize the timed probability over the
//!   honest mining time.

/// Integrates `f` over `[lo, hi]` by tanh-sinh quadrature.
///
/// The integrand receives `(x, dist_lo, dist_hi)` — the abscissa plus its
/// exact distances to the two endpoints, which stay meaningful after `x`
/// itself has rounded onto an endpoint. Integrable endpoint
/// singularities like `t^{-1/2}` must be written in terms of the
/// distances to converge to full precision.
///
/// `tol` is the relative change between refinement levels at which the
/// result is accepted.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    assert!(lo.is_finite() && hi.is_finite() && lo < hi);
    let half = 0.5 * (hi - lo);
    let width = hi - lo;

    // g(u) = f(x(u)) · x'(u) with x(u) = (lo+hi)/2 + half·tanh((π/2)·sinh u).
    let eval = |u: f64| -> f64 {
        let s = std::f64::consts::FRAC_PI_2 * u.sinh();
        // 1 ∓ tanh(s) without cancellation: the distance from x to the
        // near endpoint, exact even when x itself rounds onto it.
        let es = (-2.0 * s.abs()).exp();
        let offset = half * 2.0 * es / (1.0 + es);
        if offset == 0.0 {
            return 0.0;
        }
        let (x, dist_lo, dist_hi) = if s >= 0.0 {
            (hi - offset, width - offset, offset)
        } else {
            (lo + offset, offset, width - offset)
        };
        let sech2 = 4.0 * es / ((1.0 + es) * (1.0 + es));
        let weight = half * std::f64::consts::FRAC_PI_2 * u.cosh() * sech2;
        let fx = f(x, dist_lo, dist_hi);
        if !fx.is_finite() {
            return 0.0;
        }
        fx * weight
    };

    let mut h = 1.0_f64;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let term = eval(k as f64 * h) + eval(-(k as f64) * h);
        sum += term;
        if term.abs() <= sum.abs() * f64::EPSILON && k > 3 {
            break;
        }
        k += 1;
        if k > 200 {
            break;
        }
    }
    let mut integral = h * sum;

    for _level in 0..12 {
        h *= 0.5;
        // New points are the odd multiples of the refined step.
        let mut new_sum = 0.0;
        let mut k = 1;
        loop {
            let u = k as f64 * h;
            let term = eval(u) + eval(-u);
            new_sum += term;
            if term.abs() <= (sum.abs() + new_sum.abs()) * f64::EPSILON && k > 6 {
                break;
            }
            k += 2;
            if k > 100_000 {
                break;
            }
        }
        sum += new_sum;
        let refined = h * sum;
        let converged = (refined - integral).abs() <= tol * refined.abs().max(1e-300);
        integral = refined;
        if converged && _level >= 2 {
            break;
        }
    }
    integral
}

/// Evaluates `I_x(a, b)` straight from its definition: the ratio of two
/// tanh-sinh integrals of `t^{a-1} (1-t)^{b-1}`.
///
/// Shares no code with the continued-fraction implementation, including
/// the normalizing constant (integrated rather than taken from
/// log-gamma), so it can referee it.
pub fn reg_beta_by_quadrature(x: f64, a: f64, b: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x) && a > 0.0 && b > 0.0);
    if x == 0.0 {
        return 0.0;
    }
    // t and 1−t expressed through the endpoint distances, so the
    // singular factors keep full precision at both ends.
    let full = tanh_sinh(
        |_t, dist0, dist1| dist0.powf(a - 1.0) * dist1.powf(b - 1.0),
        0.0,
        1.0,
        1e-14,
    );
    if x == 1.0 {
        return 1.0;
    }
    let one_minus_x = 1.0 - x;
    let partial = tanh_sinh(
        |_t, dist0, dist_x| dist0.powf(a - 1.0) * (one_minus_x + dist_x).powf(b - 1.0),
        0.0,
        x,
        1e-14,
    );
    partial / full
}

/// Nodes and weights of the `n`-point generalized Gauss–Laguerre rule for
/// the weight `x^alpha e^{-x}`, with the weights normalized to sum to 1.
///
/// The returned pairs therefore integrate expectations under a
/// `Gamma(alpha+1, scale 1)` distribution: `E[f] ≈ Σ wᵢ f(xᵢ)`, exact for
/// polynomials of degree `< 2n`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0);
    // Golub–Welsch: eigenvalues of the Jacobi matrix are the nodes, the
    // squared first eigenvector components the weights (up to the zeroth
    // moment, which normalization removes).
    let mut diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let mut off: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                (k as f64 * (k as f64 + alpha)).sqrt()
            }
        })
        .collect();
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let nodes: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut weights: Vec<f64> = order.iter().map(|&i| first[i] * first[i]).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (nodes, weights)
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix,
/// accumulating the rotations on a single vector (the first row of the
/// orthogonal factor). `d` is the diagonal, `e[1..]` the subdiagonal
/// (`e[k]` couples rows `k-1` and `k`).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    if n == 1 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL did not converge");

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0_f64;
            let mut c = 1.0_f64;
            let mut p = 0.0_f64;
            let mut underflow = false;

            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}
