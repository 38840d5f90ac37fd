//! Dormand–Prince 8(5,3) integrator for complex first-order systems of fixed size.
//!
//! Steps are clipped so that every requested output abscissa is hit exactly; no dense output
//! is needed.
#![allow(clippy::excessive_precision)]

use num_complex::Complex;

use crate::error::{HillError, Result};
use crate::scalar::Real;

/// Right-hand side `y' = f(x, y)` of an `N`-component complex system.
pub trait OdeSystem<T: Real, const N: usize> {
    fn rhs(&self, x: T, y: &[Complex<T>; N], dy: &mut [Complex<T>; N]);
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        OdeOptions { rtol: tol, atol: tol, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

/// `y + h Σ a_j k_j`
#[inline(always)]
fn combine<T: Real, const N: usize>(
    y: &[Complex<T>; N],
    h: T,
    terms: &[(f64, &[Complex<T>; N])],
) -> [Complex<T>; N] {
    let mut out = *y;
    for &(a, k) in terms {
        let ah = T::lit(a) * h;
        for i in 0..N {
            out[i] = out[i] + k[i] * ah;
        }
    }
    out
}

fn rms_norm<T: Real, const N: usize>(v: &[Complex<T>; N], sk: &[T; N]) -> T {
    let mut s = T::zero();
    for i in 0..N {
        let r = v[i].norm() / sk[i];
        s = s + r * r;
    }
    (s / T::lit(N as f64)).sqrt()
}

/// Integrates from `x0` through every abscissa in `stops` (increasing, all `>= x0`),
/// calling `record(i, y)` when `stops[i]` is reached. Returns the state at the last stop.
pub fn integrate<T, S, const N: usize>(
    sys: &S,
    x0: T,
    y0: [Complex<T>; N],
    stops: &[T],
    opts: &OdeOptions<T>,
    mut record: impl FnMut(usize, &[Complex<T>; N]),
) -> Result<([Complex<T>; N], OdeStats)>
where
    T: Real,
    S: OdeSystem<T, N>,
{
    let zero = Complex::new(T::zero(), T::zero());
    let mut stats = OdeStats::default();
    let mut x = x0;
    let mut y = y0;
    let Some(&x_end) = stops.last() else {
        return Ok((y, stats));
    };
    let mut k1 = [zero; N];
    sys.rhs(x, &y, &mut k1);
    stats.evals += 1;

    let safe = T::lit(0.9);
    let facc1 = T::lit(1.0 / 0.333);
    let facc2 = T::lit(1.0 / 6.0);
    let expo1 = T::lit(1.0 / 8.0);
    let mut last_rejected = false;

    let mut h = initial_step(sys, x, &y, &k1, x_end - x, opts, &mut stats);

    for (idx, &stop) in stops.iter().enumerate() {
        while x < stop {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(HillError::StepSizeUnderflow { x: x.as_f64() });
            }
            let remaining = stop - x;
            let mut last = false;
            let mut hs = h;
            if hs >= remaining {
                hs = remaining;
                last = true;
            }
            if hs.abs() <= T::lit(16.0) * T::eps() * x.abs().max(T::one()) {
                return Err(HillError::StepSizeUnderflow { x: x.as_f64() });
            }

            let mut k2 = [zero; N];
            let mut k3 = [zero; N];
            let mut k4 = [zero; N];
            let mut k5 = [zero; N];
            let mut k6 = [zero; N];
            let mut k7 = [zero; N];
            let mut k8 = [zero; N];
            let mut k9 = [zero; N];
            let mut k10 = [zero; N];
            let mut k11 = [zero; N];
            let mut k12 = [zero; N];
            let c = |v: f64| x + T::lit(v) * hs;
            sys.rhs(c(C2), &combine(&y, hs, &[(A21, &k1)]), &mut k2);
            sys.rhs(c(C3), &combine(&y, hs, &[(A31, &k1), (A32, &k2)]), &mut k3);
            sys.rhs(c(C4), &combine(&y, hs, &[(A41, &k1), (A43, &k3)]), &mut k4);
            sys.rhs(c(C5), &combine(&y, hs, &[(A51, &k1), (A53, &k3), (A54, &k4)]), &mut k5);
            sys.rhs(c(C6), &combine(&y, hs, &[(A61, &k1), (A64, &k4), (A65, &k5)]), &mut k6);
            sys.rhs(
                c(C7),
                &combine(&y, hs, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]),
                &mut k7,
            );
            sys.rhs(
                c(C8),
                &combine(&y, hs, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
                &mut k8,
            );
            sys.rhs(
                c(C9),
                &combine(
                    &y,
                    hs,
                    &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)],
                ),
                &mut k9,
            );
            sys.rhs(
                c(C10),
                &combine(
                    &y,
                    hs,
                    &[
                        (A101, &k1),
                        (A104, &k4),
                        (A105, &k5),
                        (A106, &k6),
                        (A107, &k7),
                        (A108, &k8),
                        (A109, &k9),
                    ],
                ),
                &mut k10,
            );
            sys.rhs(
                c(C11),
                &combine(
                    &y,
                    hs,
                    &[
                        (A111, &k1),
                        (A114, &k4),
                        (A115, &k5),
                        (A116, &k6),
                        (A117, &k7),
                        (A118, &k8),
                        (A119, &k9),
                        (A1110, &k10),
                    ],
                ),
                &mut k11,
            );
            let x_new = if last { stop } else { x + hs };
            sys.rhs(
                x_new,
                &combine(
                    &y,
                    hs,
                    &[
                        (A121, &k1),
                        (A124, &k4),
                        (A125, &k5),
                        (A126, &k6),
                        (A127, &k7),
                        (A128, &k8),
                        (A129, &k9),
                        (A1210, &k10),
                        (A1211, &k11),
                    ],
                ),
                &mut k12,
            );
            stats.evals += 11;

            let mut ksum = [zero; N];
            let b = [B1, B6, B7, B8, B9, B10, B11, B12];
            let ks = [&k1, &k6, &k7, &k8, &k9, &k10, &k11, &k12];
            for i in 0..N {
                let mut s = zero;
                for (bj, kj) in b.iter().zip(ks.iter()) {
                    s = s + kj[i] * T::lit(*bj);
                }
                ksum[i] = s;
            }
            let mut y_new = y;
            for i in 0..N {
                y_new[i] = y[i] + ksum[i] * hs;
            }

            let mut sk = [T::zero(); N];
            for i in 0..N {
                sk[i] = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            }
            let mut e3 = [zero; N];
            let mut e5 = [zero; N];
            for i in 0..N {
                e3[i] = ksum[i] - k1[i] * T::lit(BHH1) - k9[i] * T::lit(BHH2) - k12[i] * T::lit(BHH3);
                e5[i] = k1[i] * T::lit(ER1)
                    + k6[i] * T::lit(ER6)
                    + k7[i] * T::lit(ER7)
                    + k8[i] * T::lit(ER8)
                    + k9[i] * T::lit(ER9)
                    + k10[i] * T::lit(ER10)
                    + k11[i] * T::lit(ER11)
                    + k12[i] * T::lit(ER12);
            }
            let err5 = rms_norm(&e5, &sk);
            let err3 = rms_norm(&e3, &sk);
            let mut deno = err5 * err5 + T::lit(0.01) * err3 * err3;
            if deno <= T::zero() {
                deno = T::one();
            }
            let err = hs.abs() * err5 * err5 / deno.sqrt();

            let fac11 = err.powf(expo1);
            let fac = (fac11 / safe).min(facc1).max(facc2);
            if !err.is_finite() {
                stats.rejected += 1;
                h = hs * T::lit(0.1);
                last_rejected = true;
                continue;
            }
            if err <= T::one() {
                stats.accepted += 1;
                y = y_new;
                x = x_new;
                sys.rhs(x, &y, &mut k1);
                stats.evals += 1;
                let mut h_new = hs / fac;
                if last_rejected {
                    h_new = h_new.min(hs);
                }
                last_rejected = false;
                // a clipped final step says nothing about the natural step length
                h = if last { h.max(h_new) } else { h_new };
            } else {
                stats.rejected += 1;
                h = hs / (fac11 / safe).min(facc1);
                last_rejected = true;
            }
        }
        record(idx, &y);
    }
    Ok((y, stats))
}

fn initial_step<T: Real, S: OdeSystem<T, N>, const N: usize>(
    sys: &S,
    x: T,
    y: &[Complex<T>; N],
    f0: &[Complex<T>; N],
    span: T,
    opts: &OdeOptions<T>,
    stats: &mut OdeStats,
) -> T {
    let mut sk = [T::zero(); N];
    for i in 0..N {
        sk[i] = opts.atol + opts.rtol * y[i].norm();
    }
    let d0 = rms_norm(y, &sk);
    let d1 = rms_norm(f0, &sk);
    let mut h0 = if d0 < T::lit(1e-10) || d1 < T::lit(1e-10) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h0 = h0.min(span);
    let mut y1 = *y;
    for i in 0..N {
        y1[i] = y[i] + f0[i] * h0;
    }
    let mut f1 = [Complex::new(T::zero(), T::zero()); N];
    sys.rhs(x + h0, &y1, &mut f1);
    stats.evals += 1;
    let mut diff = [Complex::new(T::zero(), T::zero()); N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = rms_norm(&diff, &sk) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / dm).powf(T::lit(1.0 / 8.0))
    };
    (T::lit(100.0) * h0).min(h1).min(span)
}
