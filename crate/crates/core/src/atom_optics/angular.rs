//! Wigner 3j symbols for half-integer angular momenta. Arguments are passed
//! doubled (`two_j = 2J`) so every quantum number is an integer.

fn factorial(n: i64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn half(two_x: i64) -> Option<i64> {
    (two_x % 2 == 0).then_some(two_x / 2)
}

/// `( j1 j2 j3 ; m1 m2 m3 )` by the Racah formula.
pub fn wigner_3j(two_j1: i64, two_j2: i64, two_j3: i64, two_m1: i64, two_m2: i64, two_m3: i64) -> f64 {
    if two_m1 + two_m2 + two_m3 != 0 {
        return 0.0;
    }
    if two_m1.abs() > two_j1 || two_m2.abs() > two_j2 || two_m3.abs() > two_j3 {
        return 0.0;
    }
    if (two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0 || (two_j3 + two_m3) % 2 != 0 {
        return 0.0;
    }
    // triangle condition
    if two_j3 > two_j1 + two_j2 || two_j3 < (two_j1 - two_j2).abs() {
        return 0.0;
    }
    let Some(jsum) = half(two_j1 + two_j2 + two_j3) else {
        return 0.0;
    };
    let t1 = half(two_j1 + two_j2 - two_j3).unwrap();
    let t2 = half(two_j1 - two_j2 + two_j3).unwrap();
    let t3 = half(-two_j1 + two_j2 + two_j3).unwrap();
    let delta = (factorial(t1) * factorial(t2) * factorial(t3) / factorial(jsum + 1)).sqrt();

    let a = |two_j: i64, two_m: i64| half(two_j + two_m).unwrap();
    let b = |two_j: i64, two_m: i64| half(two_j - two_m).unwrap();
    let pre = (factorial(a(two_j1, two_m1))
        * factorial(b(two_j1, two_m1))
        * factorial(a(two_j2, two_m2))
        * factorial(b(two_j2, two_m2))
        * factorial(a(two_j3, two_m3))
        * factorial(b(two_j3, two_m3)))
    .sqrt();

    // k runs over values keeping every factorial argument non-negative
    let c1 = half(two_j3 - two_j2 + two_m1).unwrap();
    let c2 = half(two_j3 - two_j1 - two_m2).unwrap();
    let c3 = t1;
    let c4 = b(two_j1, two_m1);
    let c5 = a(two_j2, two_m2);
    let kmin = 0.max(-c1).max(-c2);
    let kmax = c3.min(c4).min(c5);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let term = factorial(k)
            * factorial(c1 + k)
            * factorial(c2 + k)
            * factorial(c3 - k)
            * factorial(c4 - k)
            * factorial(c5 - k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / term;
    }
    let phase = half(two_j1 - two_j2 - two_m3).unwrap();
    let phase = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * delta * pre * sum
}

/// Reduced coupling between `|J_e m_e⟩` and `|J_g m_g⟩` for a rank-`k`
/// multipole component `q = m_e − m_g`, normalised so that the squared
/// coefficients from a fixed `m_e` sum to one over all `m_g`.
pub fn multipole_coefficient(two_je: i64, two_me: i64, two_jg: i64, two_mg: i64, rank: i64) -> f64 {
    let two_q = two_me - two_mg;
    let sign = if half(two_je - two_me).unwrap_or(0).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    sign * ((two_je + 1) as f64).sqrt() * wigner_3j(two_je, 2 * rank, two_jg, -two_me, two_q, two_mg)
}
