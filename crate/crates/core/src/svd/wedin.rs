use nalgebra::DVector;

/// Early-stop test for a leading right singular vector estimate.
///
/// With `m₁ ≥ m₂` the two largest magnitudes in `v1`, the argmax of `|v1|`
/// cannot move while the perturbation bound `2‖f₂‖/(σ̂₁ − σ̂₂)` stays below
/// the margin `m₁ − m₂`. Returns `false` when the gap is not positive.
pub fn wedin_gap_stop(v1: &DVector<f64>, sigma1: f64, sigma2: f64, f2_norm: f64) -> bool {
    let gap = sigma1 - sigma2;
    if gap.is_nan() || gap <= 0.0 || v1.is_empty() {
        return false;
    }
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    for &x in v1.iter() {
        let a = x.abs();
        if a > m1 {
            m2 = m1;
            m1 = a;
        } else if a > m2 {
            m2 = a;
        }
    }
    m1 - m2 > 2.0 * f2_norm / gap
}
