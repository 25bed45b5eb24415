//! Hartigan's dip test of unimodality, used to decide whether the edge-weight
//! distribution is single-peaked (Type I) or not (Type II).

use crate::loss::LossMatrix;

use super::DistType;

/// Upper 5% critical values of the dip statistic under the uniform null,
/// indexed by sample size (Hartigan & Hartigan's Monte Carlo table, as
/// redistributed with the R/Python `diptest` packages).
const CRIT_95: [(usize, f64); 21] = [
    (4, 0.20726978858736),
    (5, 0.186391796027944),
    (6, 0.164769608513302),
    (7, 0.159903395678336),
    (8, 0.153978303998561),
    (9, 0.146603784954019),
    (10, 0.139611395137099),
    (15, 0.118760769203664),
    (20, 0.105130218270636),
    (30, 0.0881689143126666),
    (50, 0.0702737877191269),
    (100, 0.0511279442868827),
    (200, 0.0368418413878307),
    (500, 0.0237294742633411),
    (1000, 0.0169343970067564),
    (2000, 0.0120380990328341),
    (5000, 0.0076506368153935),
    (10000, 0.00542372242836395),
    (20000, 0.00384330190244679),
    (40000, 0.00272375073486223),
    (72000, 0.00203178401610555),
];

/// 5% critical value for `n` samples. Interpolates `√n · crit` linearly in
/// `n`; beyond the table `√n · crit` is held at its last value.
pub fn dip_critical_value(n: usize) -> f64 {
    let scaled = |(m, c): (usize, f64)| (m as f64).sqrt() * c;
    let first = CRIT_95[0];
    let last = CRIT_95[CRIT_95.len() - 1];
    let s = if n <= first.0 {
        scaled(first)
    } else if n >= last.0 {
        scaled(last)
    } else {
        let hi = CRIT_95.iter().position(|&(m, _)| m >= n).expect("n within table");
        let (a, b) = (CRIT_95[hi - 1], CRIT_95[hi]);
        let frac = (n - a.0) as f64 / (b.0 - a.0) as f64;
        scaled(a) + frac * (scaled(b) - scaled(a))
    };
    s / (n.max(1) as f64).sqrt()
}

/// Dip statistic of an ascending-sorted sample: the sup distance between its
/// empirical CDF and the closest unimodal CDF. Zero for fewer than two
/// distinct values.
pub fn dip_statistic(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 2 || sorted[0] == sorted[n - 1] {
        return 0.0;
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    // 1-based indexing keeps the index arithmetic of the classic algorithm.
    let x = |i: usize| sorted[i - 1];
    let f = |i: usize| i as f64;

    // Change points of the greatest convex minorant...
    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1 || (x(j) - x(mnj)) * (f(mnj) - f(mnmnj)) < (x(mnj) - x(mnmnj)) * (f(j) - f(mnj)) {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    // ...and of the least concave majorant.
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n || (x(k) - x(mjk)) * (f(mjk) - f(mjmjk)) < (x(mjk) - x(mjmjk)) * (f(k) - f(mjk)) {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    let (mut low, mut high) = (1usize, n);
    let mut dip = 0.0f64;
    loop {
        gcm[1] = high;
        let mut i = 1;
        while gcm[i] > low {
            gcm[i + 1] = mn[gcm[i]];
            i += 1;
        }
        let l_gcm = i;
        let mut ig = l_gcm;
        let mut ix = ig - 1;

        lcm[1] = low;
        i = 1;
        while lcm[i] < high {
            lcm[i + 1] = mj[lcm[i]];
            i += 1;
        }
        let l_lcm = i;
        let mut ih = l_lcm;
        let mut iv = 2;

        let mut d = 0.0f64;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (f(lcmiv) - f(gcmi1) + 1.0)
                        - (x(lcmiv) - x(gcmi1)) * (f(gcmix) - f(gcmi1)) / (x(gcmix) - x(gcmi1));
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x(gcmix) - x(lcmiv1)) * (f(lcmiv) - f(lcmiv1)) / (x(lcmiv) - x(lcmiv1))
                        - (f(gcmix) - f(lcmiv1) - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                ix = ix.max(1);
                iv = iv.min(l_lcm);
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        }
        if d < dip {
            break;
        }

        let mut dip_l = 0.0f64;
        for j in ig..l_gcm {
            let (jb, je) = (gcm[j + 1], gcm[j]);
            let mut max_t = 1.0f64;
            if je - jb > 1 && x(je) != x(jb) {
                let c = (f(je) - f(jb)) / (x(je) - x(jb));
                for jj in jb..=je {
                    max_t = max_t.max((f(jj) - f(jb) + 1.0) - (x(jj) - x(jb)) * c);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        let mut dip_u = 0.0f64;
        for j in ih..l_lcm {
            let (jb, je) = (lcm[j], lcm[j + 1]);
            let mut max_t = 1.0f64;
            if je - jb > 1 && x(je) != x(jb) {
                let c = (f(je) - f(jb)) / (x(je) - x(jb));
                for jj in jb..=je {
                    max_t = max_t.max((x(jj) - x(jb)) * c - (f(jj) - f(jb) - 1.0));
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_u.max(dip_l));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip / (2.0 * n as f64)
}

/// Type I when the dip test does not reject unimodality at the 5% level over
/// the upper-triangle edge weights of the symmetrized matrix.
pub fn classify_distribution(loss: &LossMatrix) -> DistType {
    let k = loss.k();
    let mut w = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            w.push(loss.sym(i, j));
        }
    }
    w.sort_by(f64::total_cmp);
    if dip_statistic(&w) < dip_critical_value(w.len()) {
        DistType::TypeI
    } else {
        DistType::TypeII
    }
}
