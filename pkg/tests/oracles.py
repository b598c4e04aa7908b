"""Independent reference implementations used by the tests.

Written in scalar pure Python (``math`` only) straight from the canonical
BBOB-style definitions, evaluated in the original ``x`` coordinates. They
share nothing with the package except the instance data (shift, rotation,
Gallagher peak tables).
"""
from __future__ import annotations

import math

WEIERSTRASS_TERMS = 12
SCHWEFEL_CONST = 4.189828872724339


def lam(i, d):
    return i / (d - 1) if d > 1 else 0.0


def tosz(v):
    if v == 0:
        return 0.0
    xh = math.log(abs(v))
    if v > 0:
        c1, c2 = 10.0, 7.9
    else:
        c1, c2 = 5.5, 3.1
    return math.copysign(math.exp(xh + 0.049 * (math.sin(c1 * xh) + math.sin(c2 * xh))), v)


def tasy(vec, beta):
    d = len(vec)
    return [v ** (1 + beta * lam(i, d) * math.sqrt(v)) if v > 0 else v for i, v in enumerate(vec)]


def cond(vec, alpha):
    d = len(vec)
    return [alpha ** (0.5 * lam(i, d)) * v for i, v in enumerate(vec)]


def fpen(x):
    return sum(max(0.0, abs(v) - 5.0) ** 2 for v in x)


def matvec(m, v):
    return [sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m))]


def rastrigin_core(z):
    d = len(z)
    return 10.0 * (d - sum(math.cos(2 * math.pi * v) for v in z)) + sum(v * v for v in z)


def rosen_core(z):
    return sum(100.0 * (z[i] ** 2 - z[i + 1]) ** 2 + (z[i] - 1.0) ** 2 for i in range(len(z) - 1))


def bbob_value(no, x, shift, rotation, aux, f_star):
    """Noiseless value of synthetic function ``no`` at the point ``x``."""
    x = [float(v) for v in x]
    d = len(x)
    xopt = [float(v) for v in shift]
    R = [[float(v) for v in row] for row in rotation]
    z = matvec(R, [x[i] - xopt[i] for i in range(d)])
    if no == 1:
        f = sum(v * v for v in z)
    elif no in (2, 10):
        f = sum(10 ** (6 * lam(i, d)) * tosz(v) ** 2 for i, v in enumerate(z))
    elif no in (3, 15):
        f = rastrigin_core(cond(tasy([tosz(v) for v in z], 0.2), 10.0))
    elif no == 4:
        zz = []
        for i, v in enumerate(z):
            t = tosz(v)
            s = 10 ** (0.5 * lam(i, d))
            if t > 0 and i % 2 == 0:
                s *= 10
            zz.append(s * t)
        f = rastrigin_core(zz) + 100.0 * fpen(x)
    elif no == 5:
        f = 0.0
        for i in range(d):
            s = math.copysign(10 ** lam(i, d), xopt[i])
            xi = x[i] if xopt[i] * x[i] < 25.0 else xopt[i]
            f += 5 * abs(s) - s * xi
    elif no == 6:
        zz = cond(z, 10.0)
        tot = sum((100.0 * v if v > 0 else v) ** 2 for v in zz)
        f = tosz(tot) ** 0.9
    elif no == 7:
        zh = cond(z, 10.0)
        acc = 0.0
        for i, v in enumerate(zh):
            zt = math.floor(0.5 + v) if abs(v) > 0.5 else math.floor(0.5 + 10 * v) / 10
            acc += 10 ** (2 * lam(i, d)) * zt * zt
        f = 0.1 * max(abs(zh[0]) / 1e4, acc) + fpen(x)
    elif no in (8, 9):
        c = max(1.0, math.sqrt(d) / 8.0)
        f = rosen_core([c * v + 1.0 for v in z])
    elif no == 11:
        t = [tosz(v) for v in z]
        f = 1e6 * t[0] ** 2 + sum(v * v for v in t[1:])
    elif no == 12:
        t = tasy(z, 0.5)
        f = t[0] ** 2 + 1e6 * sum(v * v for v in t[1:])
    elif no == 13:
        t = cond(z, 10.0)
        f = t[0] ** 2 + 100.0 * math.sqrt(sum(v * v for v in t[1:]))
    elif no == 14:
        f = math.sqrt(sum(abs(v) ** (2 + 4 * lam(i, d)) for i, v in enumerate(z)))
    elif no == 16:
        zz = cond([tosz(v) for v in z], 0.01)
        f0 = sum(0.5 ** k * math.cos(math.pi * 3 ** k) for k in range(WEIERSTRASS_TERMS))
        acc = 0.0
        for v in zz:
            for k in range(WEIERSTRASS_TERMS):
                acc += 0.5 ** k * math.cos(2 * math.pi * 3 ** k * (v + 0.5))
        f = 10.0 * (acc / d - f0) ** 3 + 10.0 / d * fpen(x)
    elif no in (17, 18):
        alpha = 10.0 if no == 17 else 1000.0
        zz = cond(tasy(z, 0.5), alpha)
        acc = 0.0
        for i in range(d - 1):
            s = math.sqrt(zz[i] ** 2 + zz[i + 1] ** 2)
            acc += math.sqrt(s) + math.sqrt(s) * math.sin(50 * s ** 0.2) ** 2
        f = (acc / (d - 1)) ** 2 + 10.0 * fpen(x)
    elif no == 19:
        c = max(1.0, math.sqrt(d) / 8.0)
        zz = [c * v + 1.0 for v in z]
        acc = 0.0
        for i in range(d - 1):
            s = 100.0 * (zz[i] ** 2 - zz[i + 1]) ** 2 + (zz[i] - 1.0) ** 2
            acc += s / 4000.0 - math.cos(s)
        f = 10.0 / (d - 1) * acc + 10.0
    elif no == 20:
        # x_opt = 4.2096874633/2 * sign vector; the sign vector sits on the rotation diagonal
        sgn = [R[i][i] for i in range(d)]
        two_opt = [2 * abs(v) for v in xopt]
        xh = [2 * sgn[i] * x[i] for i in range(d)]
        zh = [xh[0]] + [xh[i] + 0.25 * (xh[i - 1] - two_opt[i - 1]) for i in range(1, d)]
        zc = cond([zh[i] - two_opt[i] for i in range(d)], 10.0)
        zz = [100.0 * (zc[i] + two_opt[i]) for i in range(d)]
        f = (-sum(v * math.sin(math.sqrt(abs(v))) for v in zz) / (100.0 * d) + SCHWEFEL_CONST
             + 100.0 * fpen([v / 100.0 for v in zz]))
    elif no in (21, 22):
        offsets, cmat, weights = aux["offsets"], aux["cond"], aux["weights"]
        best = -math.inf
        for p in range(len(weights)):
            q = sum(float(cmat[p][j]) * (z[j] - float(offsets[p][j])) ** 2 for j in range(d))
            best = max(best, float(weights[p]) * math.exp(-q / (2.0 * d)))
        f = tosz(10.0 - best) ** 2 + fpen(x)
    elif no == 23:
        zz = cond(z, 100.0)
        prod = 1.0
        for i, v in enumerate(zz):
            s = sum(abs(2 ** j * v - round(2 ** j * v)) / 2 ** j for j in range(1, 33))
            prod *= (1 + (i + 1) * s) ** (10.0 / d ** 1.2)
        f = 10.0 / d ** 2 * prod - 10.0 / d ** 2 + fpen(x)
    elif no == 24:
        mu0 = 2.5
        s = 1 - 1 / (2 * math.sqrt(d + 20) - 8.2)
        mu1 = -math.sqrt((mu0 ** 2 - 1) / s)
        sgn = [R[i][i] for i in range(d)]
        xh = [2 * sgn[i] * x[i] for i in range(d)]
        first = sum((v - mu0) ** 2 for v in xh)
        second = d + s * sum((v - mu1) ** 2 for v in xh)
        zz = cond([v - mu0 for v in xh], 100.0)
        f = min(first, second) + 10 * (d - sum(math.cos(2 * math.pi * v) for v in zz)) + 1e4 * fpen(x)
    else:
        raise ValueError(no)
    return f + f_star


# ---------------------------------------------------------------------------
# aggregated evaluation indicator, brute force


def brute_force_aei(records, rs_records, max_fes, t0, eps_floor=1e-12, sigma_floor=1e-12):
    """``records`` are tuples ``(problem, run, v_obj_raw, v_fes_raw, t1, t2)``."""

    def logs(recs):
        out = {}
        for k, n, obj, fes, t1, t2 in recs:
            com_raw = max((t2 - t1) / t0, eps_floor)
            out.setdefault(k, []).append((math.log(1 / obj), math.log(max_fes / fes), math.log(1 / com_raw)))
        return out

    base, mine = logs(rs_records), logs(records)
    total = 0.0
    for k in sorted(mine):
        zsum = 0.0
        for j in range(3):
            rs_vals = [row[j] for row in base[k]]
            mu = sum(rs_vals) / len(rs_vals)
            sigma = max(math.sqrt(sum((v - mu) ** 2 for v in rs_vals) / len(rs_vals)), sigma_floor)
            vals = [row[j] for row in mine[k]]
            zsum += sum((v - mu) / sigma for v in vals) / len(vals)
        try:
            total += math.exp(zsum)
        except OverflowError:
            return math.inf
    return total / len(mine)
