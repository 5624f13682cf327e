//! Quadrature rules: adaptive Gauss–Kronrod on intervals, and composite rules
//! on uniformly sampled data.

use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// 10-point Gauss weights paired with XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

fn gk21<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut kronrod = fc * T::lit(WGK[10]);
    let mut gauss = T::zero();
    for i in 0..10 {
        let dx = half * T::lit(XGK[i]);
        let pair = f(mid - dx) + f(mid + dx);
        kronrod = kronrod + pair * T::lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[i / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive 21-point Gauss–Kronrod over the breakpoint-separated
/// pieces of `[points[0], points[last]]`.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> QuadResult<T> {
    let mut pieces: Vec<(T, T, T, T)> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk21(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: T = pieces.iter().map(|p| p.2).sum();
        let err: T = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || pieces.len() >= max_intervals {
            return QuadResult {
                value: total,
                error: err,
                intervals: pieces.len(),
            };
        }
        let (worst, _) =
            pieces.iter().enumerate().fold(
                (0, T::neg_infinity()),
                |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc },
            );
        let (a, b, _, _) = pieces.swap_remove(worst);
        let m = (a + b) / T::lit(2.0);
        if m <= a || m >= b {
            // interval can no longer be split in this precision
            pieces.push((a, b, gk21(&f, a, b).0, T::zero()));
            continue;
        }
        let (v1, e1) = gk21(&f, a, m);
        let (v2, e2) = gk21(&f, m, b);
        pieces.push((a, m, v1, e1));
        pieces.push((m, b, v2, e2));
    }
}

/// Composite trapezoid rule on uniform samples.
pub fn trapezoid<T: Real>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner: T = values[1..n - 1].iter().copied().sum();
            h * (inner + (values[0] + values[n - 1]) / T::lit(2.0))
        }
    }
}

/// Running trapezoid integral: `out[k] = ∫_0^{t_k}`.
pub fn cumulative_trapezoid<T: Real>(values: &[T], h: T) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    for (k, &v) in values.iter().enumerate() {
        if k > 0 {
            acc = acc + h * (values[k - 1] + v) / T::lit(2.0);
        }
        out.push(acc);
    }
    out
}

/// Composite Simpson rule; an odd interval count closes with Simpson's 3/8 rule.
pub fn simpson<T: Real>(values: &[T], h: T) -> T {
    let n = values.len().saturating_sub(1);
    match n {
        0 => T::zero(),
        1 => trapezoid(values, h),
        2 => h / T::lit(3.0) * (values[0] + T::lit(4.0) * values[1] + values[2]),
        _ => {
            let (even_end, tail) = if n.is_multiple_of(2) {
                (n, None)
            } else {
                (n - 3, Some(n - 3))
            };
            let mut s = T::zero();
            if even_end > 0 {
                s = values[0] + values[even_end];
                for (i, v) in values.iter().enumerate().take(even_end).skip(1) {
                    let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
                    s = s + w * *v;
                }
                s = s * h / T::lit(3.0);
            }
            if let Some(j) = tail {
                s = s + T::lit(3.0) * h / T::lit(8.0)
                    * (values[j] + T::lit(3.0) * values[j + 1] + T::lit(3.0) * values[j + 2] + values[j + 3]);
            }
            s
        }
    }
}
