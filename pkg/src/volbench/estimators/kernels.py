"""Jit-compiled inner loops shared by the likelihood-based estimators.

Everything here is a pure function of its arguments; no RNG state lives in
this module (random draws are generated by the caller and passed in).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def garch11_filter(eps, omega, alpha, beta, s2_init):
    """Gaussian GARCH(1,1) filter with analytic score.

    Returns (loglik, d_omega, d_alpha, d_beta, last_var, next_var) for the
    recursion s2[t] = omega + alpha*eps[t-1]^2 + beta*s2[t-1], s2[0] fixed
    at ``s2_init`` (treated as a constant w.r.t. the parameters).
    """
    t_len = eps.shape[0]
    ll = 0.0
    g_w = 0.0
    g_a = 0.0
    g_b = 0.0
    s2 = s2_init
    d_w = 0.0
    d_a = 0.0
    d_b = 0.0
    for t in range(t_len):
        if t > 0:
            e2 = eps[t - 1] * eps[t - 1]
            nd_w = 1.0 + beta * d_w
            nd_a = e2 + beta * d_a
            nd_b = s2 + beta * d_b
            s2 = omega + alpha * e2 + beta * s2
            d_w = nd_w
            d_a = nd_a
            d_b = nd_b
        if s2 < 1e-300:
            s2 = 1e-300
        e2t = eps[t] * eps[t]
        ll += -0.5 * (LOG_2PI + math.log(s2) + e2t / s2)
        w = -0.5 * (1.0 / s2 - e2t / (s2 * s2))
        g_w += w * d_w
        g_a += w * d_a
        g_b += w * d_b
    next_var = omega + alpha * eps[t_len - 1] * eps[t_len - 1] + beta * s2
    return ll, g_w, g_a, g_b, s2, next_var


@njit(cache=True)
def _chol(a):
    """Cholesky factor of a; returns (L, ok)."""
    n = a.shape[0]
    lo = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= lo[i, k] * lo[j, k]
            if i == j:
                if s <= 0.0:
                    return lo, False
                lo[i, i] = math.sqrt(s)
            else:
                lo[i, j] = s / lo[j, j]
    return lo, True


@njit(cache=True)
def _chol_solve(lo, b):
    """Solve (L L') x = b given the Cholesky factor L."""
    n = b.shape[0]
    y = np.empty(n)
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= lo[i, k] * y[k]
        y[i] = s / lo[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= lo[k, i] * x[k]
        x[i] = s / lo[i, i]
    return x


@njit(cache=True)
def dcc_filter(z, zneg, qbar, nbar, a, b, g, want_grad):
    """Correlation quasi-likelihood of a (A)DCC(1,1) recursion.

    z are GARCH-standardized residuals, zneg their negative parts.  The
    intercept is the targeting form (1-a-b)*qbar - g*nbar.  Returns
    (loglik, grad[3], q_last); grad entries are d loglik / d(a, b, g) and
    are zero when ``want_grad`` is false.
    """
    t_len, n = z.shape
    c0 = (1.0 - a - b) * qbar - g * nbar
    q = qbar.copy()
    dqa = np.zeros((n, n))
    dqb = np.zeros((n, n))
    dqg = np.zeros((n, n))
    grad = np.zeros(3)
    ll = 0.0
    huge_neg = -1e100

    for t in range(t_len):
        if t > 0:
            zz = np.outer(z[t - 1], z[t - 1])
            nn = np.outer(zneg[t - 1], zneg[t - 1])
            if want_grad:
                dqa = -qbar + zz + b * dqa
                dqb = -qbar + q + b * dqb
                dqg = -nbar + nn + b * dqg
            q = c0 + a * zz + b * q + g * nn
        diag = np.empty(n)
        for i in range(n):
            diag[i] = q[i, i]
            if diag[i] <= 0.0:
                return huge_neg, grad, q
        r = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                r[i, j] = q[i, j] / math.sqrt(diag[i] * diag[j])
        lo, ok = _chol(r)
        if not ok:
            return huge_neg, grad, q
        logdet = 0.0
        for i in range(n):
            logdet += 2.0 * math.log(lo[i, i])
        u = _chol_solve(lo, z[t])
        quad = 0.0
        zz_self = 0.0
        for i in range(n):
            quad += u[i] * z[t, i]
            zz_self += z[t, i] * z[t, i]
        ll += -0.5 * (logdet + quad - zz_self)
        if want_grad and t > 0:
            rinv = np.linalg.inv(r)
            for kpar in range(3):
                if kpar == 0:
                    dq = dqa
                elif kpar == 1:
                    dq = dqb
                else:
                    dq = dqg
                acc = 0.0
                for i in range(n):
                    for j in range(n):
                        dr = dq[i, j] / math.sqrt(diag[i] * diag[j]) - 0.5 * r[i, j] * (
                            dq[i, i] / diag[i] + dq[j, j] / diag[j]
                        )
                        acc += (rinv[i, j] - u[i] * u[j]) * dr
                grad[kpar] += -0.5 * acc
    return ll, grad, q


@njit(cache=True)
def bekk_filter(eps, cc, amat, bmat, gmat, use_asym, h_init):
    """Gaussian quasi-likelihood of a (A)BEKK(1,1) recursion.

    ``cc`` is the already-formed intercept C C'.  Returns
    (loglik, H_next) where H_next is the one-step forecast after the
    sample.  A non-positive-definite H yields loglik = -1e100.
    """
    t_len, n = eps.shape
    h = h_init.copy()
    ll = 0.0
    for t in range(t_len):
        if t > 0:
            e = eps[t - 1]
            ae = amat @ e
            h_new = cc + np.outer(ae, ae) + bmat @ h @ bmat.T
            if use_asym:
                eta = np.minimum(e, 0.0)
                ge = gmat @ eta
                h_new = h_new + np.outer(ge, ge)
            h = h_new
        lo, ok = _chol(h)
        if not ok:
            return -1e100, h
        logdet = 0.0
        for i in range(n):
            logdet += 2.0 * math.log(lo[i, i])
        u = _chol_solve(lo, eps[t])
        quad = 0.0
        for i in range(n):
            quad += u[i] * eps[t, i]
        ll += -0.5 * (n * LOG_2PI + logdet + quad)
    e = eps[t_len - 1]
    ae = amat @ e
    h_next = cc + np.outer(ae, ae) + bmat @ h @ bmat.T
    if use_asym:
        eta = np.minimum(e, 0.0)
        ge = gmat @ eta
        h_next = h_next + np.outer(ge, ge)
    return ll, h_next


@njit(cache=True)
def hamilton_filter(logdens, trans, pi0):
    """Forward filter for a discrete-regime model.

    ``logdens[t, k]`` is the log observation density under regime k and
    ``trans[i, j]`` = P(next = j | current = i).  Returns
    (loglik, filtered, predicted).
    """
    t_len, k = logdens.shape
    filtered = np.empty((t_len, k))
    predicted = np.empty((t_len, k))
    pred = pi0.copy()
    ll = 0.0
    for t in range(t_len):
        for j in range(k):
            predicted[t, j] = pred[j]
        m = logdens[t, 0]
        for j in range(1, k):
            if logdens[t, j] > m:
                m = logdens[t, j]
        s = 0.0
        for j in range(k):
            filtered[t, j] = pred[j] * math.exp(logdens[t, j] - m)
            s += filtered[t, j]
        if s <= 0.0:
            return -1e100, filtered, predicted
        for j in range(k):
            filtered[t, j] /= s
        ll += math.log(s) + m
        for j in range(k):
            acc = 0.0
            for i in range(k):
                acc += trans[i, j] * filtered[t, i]
            pred[j] = acc
    return ll, filtered, predicted


@njit(cache=True)
def kim_smoother(filtered, predicted, trans):
    """Backward smoother; also accumulates expected transition counts."""
    t_len, k = filtered.shape
    smoothed = np.empty((t_len, k))
    counts = np.zeros((k, k))
    for j in range(k):
        smoothed[t_len - 1, j] = filtered[t_len - 1, j]
    for t in range(t_len - 2, -1, -1):
        for i in range(k):
            tot = 0.0
            for j in range(k):
                pr = predicted[t + 1, j]
                if pr > 1e-300:
                    x = filtered[t, i] * trans[i, j] * smoothed[t + 1, j] / pr
                else:
                    x = 0.0
                counts[i, j] += x
                tot += x
            smoothed[t, i] = tot
    return smoothed, counts


@njit(cache=True)
def sv_ffbs(ystar, mix_mean, mix_var, mu, phi, sig2_eta, normals):
    """Forward-filter backward-sample the log-variance path of an SV model.

    Observation: ystar[t] = h[t] + mix_mean[t] + noise(0, mix_var[t]);
    state: h[t+1] = mu + phi*(h[t] - mu) + eta, eta ~ N(0, sig2_eta).
    ``normals`` supplies the T standard-normal draws for the backward pass.
    """
    t_len = ystar.shape[0]
    fm = np.empty(t_len)
    fv = np.empty(t_len)
    if abs(phi) < 0.999:
        p = sig2_eta / (1.0 - phi * phi)
    else:
        p = sig2_eta * 500.0
    a = mu
    for t in range(t_len):
        v = mix_var[t]
        gain = p / (p + v)
        m = a + gain * (ystar[t] - mix_mean[t] - a)
        pf = (1.0 - gain) * p
        fm[t] = m
        fv[t] = pf
        a = mu + phi * (m - mu)
        p = phi * phi * pf + sig2_eta
    h = np.empty(t_len)
    h[t_len - 1] = fm[t_len - 1] + math.sqrt(max(fv[t_len - 1], 0.0)) * normals[t_len - 1]
    for t in range(t_len - 2, -1, -1):
        pnext = phi * phi * fv[t] + sig2_eta
        if pnext > 0.0:
            j = phi * fv[t] / pnext
        else:
            j = 0.0
        cm = fm[t] + j * (h[t + 1] - (mu + phi * (fm[t] - mu)))
        cv = fv[t] - j * phi * fv[t]
        h[t] = cm + math.sqrt(max(cv, 0.0)) * normals[t]
    return h
