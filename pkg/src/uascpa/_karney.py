"""Compiled kernels for geodesics on an ellipsoid of revolution.

Series-expansion solution of the direct and inverse problems after
C. F. F. Karney, "Algorithms for geodesics", J. Geodesy 87 (2013).  Series
are carried to sixth order in the third flattening, which gives round-off
limited accuracy (~15 nm) for terrestrial ellipsoids.  The inverse solver
keeps a bracket on the azimuth so that Newton's method falls back to
bisection, so it converges for every pair including nearly antipodal ones.

Everything here works on plain floats in degrees and meters; validation and
wrapping into user-facing types happens in :mod:`uascpa.geodesy`.
"""

import math

import numpy as np
from numba import njit

_jit = njit(cache=True, nogil=True)

TINY = math.sqrt(2.2250738585072014e-308)
TOL0 = 2.220446049250313e-16
TOL1 = 200.0 * TOL0
TOL2 = math.sqrt(TOL0)
TOLB = TOL0 * TOL2
XTHRESH = 1000.0 * TOL2
MAXIT1 = 20
MAXIT2 = MAXIT1 + 53 + 10


# ---------------------------------------------------------------------------
# angle helpers


@_jit
def _sq(x):
    return x * x


@_jit
def _norm2(s, c):
    r = math.hypot(s, c)
    return s / r, c / r


@_jit
def _ang_round(x):
    # Coarsens tiny angles so that values like 1e-200 do not reach the
    # near-singular branches; resolution is 1/2^57 deg (~0.7 pm).
    z = 1.0 / 16.0
    y = abs(x)
    w = z - y
    if w > 0:
        y = z - w
    return -y if x < 0 else y


@_jit
def _remainder360(x):
    y = np.fmod(x, 360.0)
    if y > 180.0:
        y -= 360.0
    elif y < -180.0:
        y += 360.0
    return y


@_jit
def ang_normalize(x):
    """Reduce an angle to (-180, 180]."""
    y = _remainder360(x)
    return 180.0 if y == -180.0 else y


@_jit
def _two_sum(u, v):
    s = u + v
    up = s - v
    vpp = s - up
    up -= u
    vpp -= v
    return s, -(up + vpp)


@_jit
def _ang_diff(x, y):
    # y - x reduced to [-180, 180] plus the rounding error of that result.
    d, t = _two_sum(ang_normalize(-x), ang_normalize(y))
    d = ang_normalize(d)
    if d == 180.0 and t > 0:
        d = -180.0
    return _two_sum(d, t)


@_jit
def _sincosd(x):
    r = np.fmod(x, 360.0)
    q = int(math.floor(r / 90.0 + 0.5))
    r -= 90.0 * q
    r = r * (math.pi / 180.0)
    s = math.sin(r)
    c = math.cos(r)
    q = q % 4
    if q == 1:
        s, c = c, -s
    elif q == 2:
        s, c = -s, -c
    elif q == 3:
        s, c = -c, s
    return s, c + 0.0


@_jit
def _atan2d(y, x):
    q = 0
    if abs(y) > abs(x):
        q = 2
        x, y = y, x
    if x < 0:
        q += 1
        x = -x
    ang = math.atan2(y, x) * (180.0 / math.pi)
    if q == 1:
        ang = (180.0 if y >= 0 else -180.0) - ang
    elif q == 2:
        ang = 90.0 - ang
    elif q == 3:
        ang = -90.0 + ang
    return ang


# ---------------------------------------------------------------------------
# series coefficients (sixth order)


@_jit
def _sin_series(sx, cx, c1, c2, c3, c4, c5, c6):
    # sum(c_k * sin(2*k*x), k = 1..6) by Clenshaw summation
    ar = 2.0 * (cx - sx) * (cx + sx)
    b6 = c6
    b5 = ar * b6 + c5
    b4 = ar * b5 - b6 + c4
    b3 = ar * b4 - b5 + c3
    b2 = ar * b3 - b4 + c2
    b1 = ar * b2 - b3 + c1
    return 2.0 * sx * cx * b1


@_jit
def _a1m1f(eps):
    eps2 = eps * eps
    t = eps2 * (eps2 * (eps2 + 4.0) + 64.0) / 256.0
    return (t + eps) / (1.0 - eps)


@_jit
def _c1f(eps):
    eps2 = eps * eps
    d = eps
    c1 = d * ((6.0 - eps2) * eps2 - 16.0) / 32.0
    d *= eps
    c2 = d * ((64.0 - 9.0 * eps2) * eps2 - 128.0) / 2048.0
    d *= eps
    c3 = d * (9.0 * eps2 - 16.0) / 768.0
    d *= eps
    c4 = d * (3.0 * eps2 - 5.0) / 512.0
    d *= eps
    c5 = -7.0 * d / 1280.0
    d *= eps
    c6 = -7.0 * d / 2048.0
    return c1, c2, c3, c4, c5, c6


@_jit
def _c1pf(eps):
    eps2 = eps * eps
    d = eps
    c1 = d * (eps2 * (205.0 * eps2 - 432.0) + 768.0) / 1536.0
    d *= eps
    c2 = d * (eps2 * (4005.0 * eps2 - 4736.0) + 3840.0) / 12288.0
    d *= eps
    c3 = d * (116.0 - 225.0 * eps2) / 384.0
    d *= eps
    c4 = d * (2695.0 - 7173.0 * eps2) / 7680.0
    d *= eps
    c5 = 3467.0 * d / 7680.0
    d *= eps
    c6 = 38081.0 * d / 61440.0
    return c1, c2, c3, c4, c5, c6


@_jit
def _a2m1f(eps):
    eps2 = eps * eps
    t = eps2 * (eps2 * (25.0 * eps2 + 36.0) + 64.0) / 256.0
    return t * (1.0 - eps) - eps


@_jit
def _c2f(eps):
    eps2 = eps * eps
    d = eps
    c1 = d * (eps2 * (eps2 + 2.0) + 16.0) / 32.0
    d *= eps
    c2 = d * (eps2 * (35.0 * eps2 + 64.0) + 384.0) / 2048.0
    d *= eps
    c3 = d * (15.0 * eps2 + 80.0) / 768.0
    d *= eps
    c4 = d * (7.0 * eps2 + 35.0) / 512.0
    d *= eps
    c5 = 63.0 * d / 1280.0
    d *= eps
    c6 = 77.0 * d / 2048.0
    return c1, c2, c3, c4, c5, c6


@_jit
def _a3f(eps, n):
    # Horner evaluation of the A3 polynomial in eps; coefficients depend on n.
    v = -3.0 / 128.0
    v = eps * v + (-2.0 * n - 3.0) / 64.0
    v = eps * v + ((-n - 3.0) * n - 1.0) / 16.0
    v = eps * v + (n * (3.0 * n - 1.0) - 2.0) / 8.0
    v = eps * v + (n - 1.0) / 2.0
    v = eps * v + 1.0
    return v


@_jit
def _c3f(eps, n):
    c1 = (1.0 - n) / 4.0 + eps * (
        (1.0 - n * n) / 8.0 + eps * (
            ((3.0 - n) * n + 3.0) / 64.0 + eps * (
                (2.0 * n + 5.0) / 128.0 + eps * (3.0 / 128.0))))
    c2 = ((n - 3.0) * n + 2.0) / 32.0 + eps * (
        ((-3.0 * n - 2.0) * n + 3.0) / 64.0 + eps * (
            (n + 3.0) / 128.0 + eps * (5.0 / 256.0)))
    c3 = (n * (5.0 * n - 9.0) + 5.0) / 192.0 + eps * (
        (9.0 - 10.0 * n) / 384.0 + eps * (7.0 / 512.0))
    c4 = (7.0 - 14.0 * n) / 512.0 + eps * (7.0 / 512.0)
    c5 = 21.0 / 2560.0
    e2 = eps * eps
    e3 = e2 * eps
    e4 = e3 * eps
    return c1 * eps, c2 * e2, c3 * e3, c4 * e4, c5 * e4 * eps


# ---------------------------------------------------------------------------
# inverse problem


@_jit
def _lengths(eps, sig12, ssig1, csig1, dn1, ssig2, csig2, dn2):
    # Returns distance / b and reduced length / b.
    c11, c12, c13, c14, c15, c16 = _c1f(eps)
    c21, c22, c23, c24, c25, c26 = _c2f(eps)
    a1m1 = _a1m1f(eps)
    a2m1 = _a2m1f(eps)
    b1 = (_sin_series(ssig2, csig2, c11, c12, c13, c14, c15, c16)
          - _sin_series(ssig1, csig1, c11, c12, c13, c14, c15, c16))
    b2 = (_sin_series(ssig2, csig2, c21, c22, c23, c24, c25, c26)
          - _sin_series(ssig1, csig1, c21, c22, c23, c24, c25, c26))
    a1 = 1.0 + a1m1
    a2 = 1.0 + a2m1
    s12b = a1 * (sig12 + b1)
    j12 = (a1m1 - a2m1) * sig12 + (a1 * b1 - a2 * b2)
    m12b = dn2 * (csig1 * ssig2) - dn1 * (ssig1 * csig2) - csig1 * csig2 * j12
    return s12b, m12b


@_jit
def _astroid(x, y):
    # Positive root of k^4 + 2k^3 - (x^2 + y^2 - 1) k^2 - 2 y^2 k - y^2 = 0.
    p = x * x
    q = y * y
    r = (p + q - 1.0) / 6.0
    if not (q == 0 and r <= 0):
        s = p * q / 4.0
        r2 = r * r
        r3 = r * r2
        disc = s * (s + 2.0 * r3)
        u = r
        if disc >= 0:
            t3 = s + r3
            t3 += -math.sqrt(disc) if t3 < 0 else math.sqrt(disc)
            t = math.copysign(abs(t3) ** (1.0 / 3.0), t3)
            u += t + (r2 / t if t != 0 else 0.0)
        else:
            ang = math.atan2(math.sqrt(-disc), -(s + r3))
            u += 2.0 * r * math.cos(ang / 3.0)
        v = math.sqrt(u * u + q)
        uv = q / (v - u) if u < 0 else u + v
        w = (uv - q) / (2.0 * v)
        return uv / (math.sqrt(uv + w * w) + w)
    return 0.0


@_jit
def _inverse_start(sbet1, cbet1, dn1, sbet2, cbet2, dn2, lam12, slam12, clam12,
                   f, f1, ep2, n, etol2):
    sig12 = -1.0
    salp2 = math.nan
    calp2 = math.nan
    dnm = math.nan
    sbet12 = sbet2 * cbet1 - cbet2 * sbet1
    cbet12 = cbet2 * cbet1 + sbet2 * sbet1
    sbet12a = sbet2 * cbet1 + cbet2 * sbet1
    shortline = cbet12 >= 0 and sbet12 < 0.5 and cbet2 * lam12 < 0.5
    if shortline:
        sbetm2 = _sq(sbet1 + sbet2)
        sbetm2 /= sbetm2 + _sq(cbet1 + cbet2)
        dnm = math.sqrt(1.0 + ep2 * sbetm2)
        omg12 = lam12 / (f1 * dnm)
        somg12 = math.sin(omg12)
        comg12 = math.cos(omg12)
    else:
        somg12 = slam12
        comg12 = clam12

    salp1 = cbet2 * somg12
    if comg12 >= 0:
        calp1 = sbet12 + cbet2 * sbet1 * _sq(somg12) / (1.0 + comg12)
    else:
        calp1 = sbet12a - cbet2 * sbet1 * _sq(somg12) / (1.0 - comg12)

    ssig12 = math.hypot(salp1, calp1)
    csig12 = sbet1 * sbet2 + cbet1 * cbet2 * comg12

    if shortline and ssig12 < etol2:
        salp2 = cbet1 * somg12
        if comg12 >= 0:
            calp2 = sbet12 - cbet1 * sbet2 * (_sq(somg12) / (1.0 + comg12))
        else:
            calp2 = sbet12 - cbet1 * sbet2 * (1.0 - comg12)
        salp2, calp2 = _norm2(salp2, calp2)
        sig12 = math.atan2(ssig12, csig12)
    elif abs(n) > 0.1 or csig12 >= 0 or ssig12 >= 6.0 * abs(n) * math.pi * _sq(cbet1):
        pass
    else:
        # Nearly antipodal: scale to the astroid coordinates (oblate case).
        lam12x = math.atan2(-slam12, -clam12)
        k2 = _sq(sbet1) * ep2
        eps = k2 / (2.0 * (1.0 + math.sqrt(1.0 + k2)) + k2)
        lamscale = f * cbet1 * _a3f(eps, n) * math.pi
        betscale = lamscale * cbet1
        x = lam12x / lamscale
        y = sbet12a / betscale
        if y > -TOL1 and x > -1.0 - XTHRESH:
            salp1 = min(1.0, -x)
            calp1 = -math.sqrt(1.0 - _sq(salp1))
        else:
            k = _astroid(x, y)
            omg12a = lamscale * (-x * k / (1.0 + k))
            somg12 = math.sin(omg12a)
            comg12 = -math.cos(omg12a)
            salp1 = cbet2 * somg12
            calp1 = sbet12a - cbet2 * sbet1 * _sq(somg12) / (1.0 - comg12)

    if not (salp1 <= 0):
        salp1, calp1 = _norm2(salp1, calp1)
    else:
        salp1 = 1.0
        calp1 = 0.0
    return sig12, salp1, calp1, salp2, calp2, dnm


@_jit
def _lambda12(sbet1, cbet1, dn1, sbet2, cbet2, dn2, salp1, calp1,
              slam120, clam120, diffp, f, f1, ep2, n):
    if sbet1 == 0 and calp1 == 0:
        calp1 = -TINY

    salp0 = salp1 * cbet1
    calp0 = math.hypot(calp1, salp1 * sbet1)

    ssig1 = sbet1
    somg1 = salp0 * sbet1
    csig1 = calp1 * cbet1
    comg1 = csig1
    ssig1, csig1 = _norm2(ssig1, csig1)

    salp2 = salp0 / cbet2 if cbet2 != cbet1 else salp1
    if cbet2 != cbet1 or abs(sbet2) != -sbet1:
        if cbet1 < -sbet1:
            t = (cbet2 - cbet1) * (cbet1 + cbet2)
        else:
            t = (sbet1 - sbet2) * (sbet1 + sbet2)
        calp2 = math.sqrt(_sq(calp1 * cbet1) + t) / cbet2
    else:
        calp2 = abs(calp1)

    ssig2 = sbet2
    somg2 = salp0 * sbet2
    csig2 = calp2 * cbet2
    comg2 = csig2
    ssig2, csig2 = _norm2(ssig2, csig2)

    sig12 = math.atan2(max(0.0, csig1 * ssig2 - ssig1 * csig2),
                       csig1 * csig2 + ssig1 * ssig2)
    somg12 = max(0.0, comg1 * somg2 - somg1 * comg2)
    comg12 = comg1 * comg2 + somg1 * somg2
    eta = math.atan2(somg12 * clam120 - comg12 * slam120,
                     comg12 * clam120 + somg12 * slam120)

    k2 = _sq(calp0) * ep2
    eps = k2 / (2.0 * (1.0 + math.sqrt(1.0 + k2)) + k2)
    c31, c32, c33, c34, c35 = _c3f(eps, n)
    b312 = (_sin_series(ssig2, csig2, c31, c32, c33, c34, c35, 0.0)
            - _sin_series(ssig1, csig1, c31, c32, c33, c34, c35, 0.0))
    domg12 = -f * _a3f(eps, n) * salp0 * (sig12 + b312)
    lam12 = eta + domg12

    dlam12 = math.nan
    if diffp:
        if calp2 == 0:
            dlam12 = -2.0 * f1 * dn1 / sbet1
        else:
            _, m12b = _lengths(eps, sig12, ssig1, csig1, dn1, ssig2, csig2, dn2)
            dlam12 = m12b * f1 / (calp2 * cbet2)
    return lam12, salp2, calp2, sig12, ssig1, csig1, ssig2, csig2, eps, dlam12


@_jit
def inverse(lat1, lon1, lat2, lon2, a, f):
    """Distance (m) and forward azimuths (deg) at both ends of the geodesic."""
    f1 = 1.0 - f
    e2 = f * (2.0 - f)
    ep2 = e2 / (f1 * f1)
    n = f / (2.0 - f)
    b = a * f1
    etol2 = 0.1 * TOL2 / math.sqrt(max(0.001, abs(f)) * min(1.0, 1.0 - f / 2.0) / 2.0)

    lon12, lon12s = _ang_diff(lon1, lon2)
    lonsign = 1.0 if lon12 >= 0 else -1.0
    lon12 = lonsign * _ang_round(lon12)
    lon12s = _ang_round((180.0 - lon12) - lonsign * lon12s)
    lam12 = lon12 * (math.pi / 180.0)
    if lon12 > 90.0:
        slam12, clam12 = _sincosd(lon12s)
        clam12 = -clam12
    else:
        slam12, clam12 = _sincosd(lon12)

    lat1 = _ang_round(lat1)
    lat2 = _ang_round(lat2)
    swapp = -1.0 if abs(lat1) < abs(lat2) else 1.0
    if swapp < 0:
        lonsign = -lonsign
        lat1, lat2 = lat2, lat1
    latsign = 1.0 if lat1 < 0 else -1.0
    lat1 *= latsign
    lat2 *= latsign
    # canonical: 0 <= lon12 <= 180, -90 <= lat1 <= 0, lat1 <= lat2 <= -lat1

    sbet1, cbet1 = _sincosd(lat1)
    sbet1 *= f1
    sbet1, cbet1 = _norm2(sbet1, cbet1)
    cbet1 = max(TINY, cbet1)
    sbet2, cbet2 = _sincosd(lat2)
    sbet2 *= f1
    sbet2, cbet2 = _norm2(sbet2, cbet2)
    cbet2 = max(TINY, cbet2)

    if cbet1 < -sbet1:
        if cbet2 == cbet1:
            sbet2 = math.copysign(sbet1, sbet2)
    else:
        if abs(sbet2) == -sbet1:
            cbet2 = cbet1

    dn1 = math.sqrt(1.0 + ep2 * _sq(sbet1))
    dn2 = math.sqrt(1.0 + ep2 * _sq(sbet2))

    s12x = math.nan
    salp1 = calp1 = salp2 = calp2 = math.nan

    meridian = lat1 == -90.0 or slam12 == 0
    if meridian:
        calp1 = clam12
        salp1 = slam12
        calp2 = 1.0
        salp2 = 0.0
        ssig1 = sbet1
        csig1 = calp1 * cbet1
        ssig2 = sbet2
        csig2 = calp2 * cbet2
        sig12 = math.atan2(max(0.0, csig1 * ssig2 - ssig1 * csig2),
                           csig1 * csig2 + ssig1 * ssig2)
        s12x, m12x = _lengths(n, sig12, ssig1, csig1, dn1, ssig2, csig2, dn2)
        if sig12 < 1 or m12x >= 0:
            if sig12 < 3 * TINY or (sig12 < TOL0 and (s12x < 0 or m12x < 0)):
                s12x = 0.0
            s12x *= b
        else:
            meridian = False

    if not meridian and sbet1 == 0 and (f <= 0 or lon12s >= f * 180.0):
        # along the equator
        calp1 = calp2 = 0.0
        salp1 = salp2 = 1.0
        s12x = a * lam12
    elif not meridian:
        sig12, salp1, calp1, salp2, calp2, dnm = _inverse_start(
            sbet1, cbet1, dn1, sbet2, cbet2, dn2, lam12, slam12, clam12,
            f, f1, ep2, n, etol2)
        if sig12 >= 0:
            s12x = sig12 * b * dnm
        else:
            ssig1 = csig1 = ssig2 = csig2 = eps = 0.0
            tripn = False
            tripb = False
            salp1a = TINY
            calp1a = 1.0
            salp1b = TINY
            calp1b = -1.0
            for numit in range(MAXIT2):
                (v, salp2, calp2, sig12, ssig1, csig1, ssig2, csig2, eps,
                 dv) = _lambda12(sbet1, cbet1, dn1, sbet2, cbet2, dn2,
                                 salp1, calp1, slam12, clam12, numit < MAXIT1,
                                 f, f1, ep2, n)
                if tripb or not (abs(v) >= (8.0 if tripn else 1.0) * TOL0):
                    break
                if v > 0 and (numit > MAXIT1 or calp1 / salp1 > calp1b / salp1b):
                    salp1b = salp1
                    calp1b = calp1
                elif v < 0 and (numit > MAXIT1 or calp1 / salp1 < calp1a / salp1a):
                    salp1a = salp1
                    calp1a = calp1
                if numit < MAXIT1 and dv > 0:
                    dalp1 = -v / dv
                    if abs(dalp1) < math.pi:
                        sdalp1 = math.sin(dalp1)
                        cdalp1 = math.cos(dalp1)
                        nsalp1 = salp1 * cdalp1 + calp1 * sdalp1
                        if nsalp1 > 0:
                            calp1 = calp1 * cdalp1 - salp1 * sdalp1
                            salp1 = nsalp1
                            salp1, calp1 = _norm2(salp1, calp1)
                            tripn = abs(v) <= 16.0 * TOL0
                            continue
                # Newton step unusable: bisect the bracket
                salp1 = (salp1a + salp1b) / 2.0
                calp1 = (calp1a + calp1b) / 2.0
                salp1, calp1 = _norm2(salp1, calp1)
                tripn = False
                tripb = (abs(salp1a - salp1) + (calp1a - calp1) < TOLB
                         or abs(salp1 - salp1b) + (calp1 - calp1b) < TOLB)
            s12x, _ = _lengths(eps, sig12, ssig1, csig1, dn1, ssig2, csig2, dn2)
            s12x *= b

    s12 = 0.0 + s12x

    if swapp < 0:
        salp1, salp2 = salp2, salp1
        calp1, calp2 = calp2, calp1
    salp1 *= swapp * lonsign
    calp1 *= swapp * latsign
    salp2 *= swapp * lonsign
    calp2 *= swapp * latsign
    return s12, _atan2d(salp1, calp1), _atan2d(salp2, calp2)


# ---------------------------------------------------------------------------
# direct problem


@_jit
def direct(lat1, lon1, azi1, s12, a, f):
    """Endpoint (lat, lon) and forward azimuth after travelling s12 meters."""
    f1 = 1.0 - f
    e2 = f * (2.0 - f)
    ep2 = e2 / (f1 * f1)
    n = f / (2.0 - f)
    b = a * f1

    azi1 = ang_normalize(azi1)
    salp1, calp1 = _sincosd(_ang_round(azi1))
    sbet1, cbet1 = _sincosd(_ang_round(lat1))
    sbet1 *= f1
    sbet1, cbet1 = _norm2(sbet1, cbet1)
    cbet1 = max(TINY, cbet1)

    salp0 = salp1 * cbet1
    calp0 = math.hypot(calp1, salp1 * sbet1)
    ssig1 = sbet1
    somg1 = salp0 * sbet1
    csig1 = calp1 * cbet1 if (sbet1 != 0 or calp1 != 0) else 1.0
    comg1 = csig1
    ssig1, csig1 = _norm2(ssig1, csig1)

    k2 = _sq(calp0) * ep2
    eps = k2 / (2.0 * (1.0 + math.sqrt(1.0 + k2)) + k2)
    a1m1 = _a1m1f(eps)
    c11, c12, c13, c14, c15, c16 = _c1f(eps)
    b11 = _sin_series(ssig1, csig1, c11, c12, c13, c14, c15, c16)
    s = math.sin(b11)
    c = math.cos(b11)
    stau1 = ssig1 * c + csig1 * s
    ctau1 = csig1 * c - ssig1 * s
    p1, p2, p3, p4, p5, p6 = _c1pf(eps)
    a3c = -f * salp0 * _a3f(eps, n)
    c31, c32, c33, c34, c35 = _c3f(eps, n)
    b31 = _sin_series(ssig1, csig1, c31, c32, c33, c34, c35, 0.0)

    tau12 = s12 / (b * (1.0 + a1m1))
    s = math.sin(tau12)
    c = math.cos(tau12)
    b12 = -_sin_series(stau1 * c + ctau1 * s, ctau1 * c - stau1 * s,
                       p1, p2, p3, p4, p5, p6)
    sig12 = tau12 - (b12 - b11)
    ssig12 = math.sin(sig12)
    csig12 = math.cos(sig12)

    ssig2 = ssig1 * csig12 + csig1 * ssig12
    csig2 = csig1 * csig12 - ssig1 * ssig12
    sbet2 = calp0 * ssig2
    cbet2 = math.hypot(salp0, calp0 * csig2)
    if cbet2 == 0:
        cbet2 = csig2 = TINY
    salp2 = salp0
    calp2 = calp0 * csig2

    somg2 = salp0 * ssig2
    comg2 = csig2
    e = math.copysign(1.0, salp0)
    omg12 = e * (sig12
                 - (math.atan2(ssig2, csig2) - math.atan2(ssig1, csig1))
                 + (math.atan2(e * somg2, comg2) - math.atan2(e * somg1, comg1)))
    b32 = _sin_series(ssig2, csig2, c31, c32, c33, c34, c35, 0.0)
    lam12 = omg12 + a3c * (sig12 + (b32 - b31))
    lon12 = lam12 * (180.0 / math.pi)
    lon2 = ang_normalize(ang_normalize(lon1) + ang_normalize(lon12))
    lat2 = _atan2d(sbet2, f1 * cbet2)
    return lat2, lon2, _atan2d(salp2, calp2)


# ---------------------------------------------------------------------------
# array kernels


@_jit
def inverse_pairs(lat1, lon1, lat2, lon2, a, f):
    m = lat1.shape[0]
    dist = np.empty(m)
    azi1 = np.empty(m)
    azi2 = np.empty(m)
    for i in range(m):
        dist[i], azi1[i], azi2[i] = inverse(lat1[i], lon1[i], lat2[i], lon2[i], a, f)
    return dist, azi1, azi2


@_jit
def inverse_from(lat, lon, lats, lons, a, f):
    m = lats.shape[0]
    dist = np.empty(m)
    azi1 = np.empty(m)
    azi2 = np.empty(m)
    for i in range(m):
        dist[i], azi1[i], azi2[i] = inverse(lat, lon, lats[i], lons[i], a, f)
    return dist, azi1, azi2


@_jit
def direct_from(lat, lon, azis, dists, a, f):
    m = azis.shape[0]
    lats = np.empty(m)
    lons = np.empty(m)
    azi2 = np.empty(m)
    for i in range(m):
        lats[i], lons[i], azi2[i] = direct(lat, lon, azis[i], dists[i], a, f)
    return lats, lons, azi2


@_jit
def nearest_in_candidates(lat, lon, x, y, z, cand_lat, cand_lon, cand_x, cand_y,
                          cand_z, cand_ord, radius, inner, chord_tol, a, f):
    """Nearest candidate within ``radius`` plus the exact in-range count.

    Chord length never exceeds geodesic distance, so a candidate whose chord
    is longer than the best geodesic found so far cannot win.  Candidates with
    chord <= ``inner`` are certainly in range; only the shell between
    ``inner`` and ``radius`` needs a geodesic to be counted.

    Returns (distance, candidate position or -1, fwd azimuth, count).
    """
    m = cand_lat.shape[0]
    chords = np.empty(m)
    jmin = -1
    cmin = math.inf
    count = 0
    for j in range(m):
        dx = cand_x[j] - x
        dy = cand_y[j] - y
        dz = cand_z[j] - z
        c = math.sqrt(dx * dx + dy * dy + dz * dz)
        chords[j] = c
        if c <= inner:
            count += 1
        elif c <= radius + chord_tol:
            d, _, _ = inverse(lat, lon, cand_lat[j], cand_lon[j], a, f)
            if d <= radius:
                count += 1
        if c < cmin:
            cmin = c
            jmin = j
    if jmin < 0 or cmin > radius + chord_tol:
        return radius, -1, math.nan, count

    best_d, best_az, _ = inverse(lat, lon, cand_lat[jmin], cand_lon[jmin], a, f)
    best_j = jmin
    threshold = best_d + chord_tol
    for j in range(m):
        if j == jmin or chords[j] > threshold:
            continue
        d, az, _ = inverse(lat, lon, cand_lat[j], cand_lon[j], a, f)
        if d < best_d or (d == best_d and cand_ord[j] < cand_ord[best_j]):
            best_d = d
            best_az = az
            best_j = j
    if best_d > radius:
        return radius, -1, math.nan, count
    return best_d, best_j, best_az, count
