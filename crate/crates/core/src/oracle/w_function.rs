//! W-shaped piecewise cubic with a saddle at the origin.
//!
//! With `s = sqrt(eps)`, the function is a local maximum at 0 (curvature
//! `-2s`), linear with slope `eps` on `s < |x| <= L s`, and has global minima
//! at `x = ±(L + 1) s` with value `-(3L + 1) eps^{3/2} / 3`. Value, slope and
//! curvature are continuous at every breakpoint.

/// Value and first two derivatives of `w` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Evaluates `w(x)` for slope parameter `eps_w > 0` and length `len_w >= 1`.
pub fn w_function(x: f64, eps_w: f64, len_w: f64) -> WEval {
    let s = eps_w.sqrt();
    let piece = if x <= -len_w * s {
        0
    } else if x <= -s {
        1
    } else if x <= 0.0 {
        2
    } else if x <= s {
        3
    } else if x < len_w * s {
        4
    } else {
        5
    };
    w_piece(piece, x, eps_w, len_w)
}

/// Breakpoints `[-L s, -s, 0, s, L s]`.
pub fn w_breakpoints(eps_w: f64, len_w: f64) -> [f64; 5] {
    let s = eps_w.sqrt();
    [-len_w * s, -s, 0.0, s, len_w * s]
}

/// Evaluates one of the six polynomial pieces (0 = leftmost) at `x`,
/// regardless of whether `x` lies in that piece's interval.
pub fn w_piece(piece: usize, x: f64, eps_w: f64, len_w: f64) -> WEval {
    let s = eps_w.sqrt();
    let e32 = eps_w * s;
    let floor = -(3.0 * len_w + 1.0) * e32 / 3.0;
    match piece {
        0 => {
            let u = x + (len_w + 1.0) * s;
            WEval { value: s * u * u - u * u * u / 3.0 + floor, d1: 2.0 * s * u - u * u, d2: 2.0 * s - 2.0 * u }
        }
        1 => WEval { value: eps_w * x + e32 / 3.0, d1: eps_w, d2: 0.0 },
        2 => WEval { value: -s * x * x - x * x * x / 3.0, d1: -2.0 * s * x - x * x, d2: -2.0 * s - 2.0 * x },
        3 => WEval { value: -s * x * x + x * x * x / 3.0, d1: -2.0 * s * x + x * x, d2: -2.0 * s + 2.0 * x },
        4 => WEval { value: -eps_w * x + e32 / 3.0, d1: -eps_w, d2: 0.0 },
        5 => {
            let u = x - (len_w + 1.0) * s;
            WEval { value: s * u * u + u * u * u / 3.0 + floor, d1: 2.0 * s * u + u * u, d2: 2.0 * s + 2.0 * u }
        }
        _ => unreachable!("w has six pieces"),
    }
}
