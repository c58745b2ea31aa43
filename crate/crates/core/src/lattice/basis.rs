use crate::Scalar;

/// Uniform cubic B-spline basis `(W0, W1, W2, W3)` at `t`:
///
/// ```text
/// W0 = (1 - 3t + 3t^2 - t^3) / 6
/// W1 = (4 - 6t^2 + 3t^3) / 6
/// W2 = (1 + 3t + 3t^2 - 3t^3) / 6
/// W3 = t^3 / 6
/// ```
pub fn bspline_weights<T: Scalar>(t: T) -> [T; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let one = T::one();
    let three = T::lit(3.0);
    let sixth = T::lit(1.0 / 6.0);
    [
        (one - three * t + three * t2 - t3) * sixth,
        (T::lit(4.0) - T::lit(6.0) * t2 + three * t3) * sixth,
        (one + three * t + three * t2 - three * t3) * sixth,
        t3 * sixth,
    ]
}

/// Basis mass landing on the lower and upper corner after clamped grid
/// extension: `(W0 + W1, W2 + W3)`.
pub fn collapsed_weights<T: Scalar>(t: T) -> [T; 2] {
    let w = bspline_weights(t);
    [w[0] + w[1], w[2] + w[3]]
}
