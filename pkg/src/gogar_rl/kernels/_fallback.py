"""Pure-Python twin of ``_core.pyx``.

Same signatures, same uniform protocol, same operation order, so results
agree bit-for-bit with the compiled kernels (both use the platform libm
``exp``). Arrays are copied to lists for speed and written back on exit.
"""

from math import exp

import numpy as np


def _draw(cum_row, u):
    for j, c in enumerate(cum_row):
        if u < c:
            return j
    return len(cum_row) - 1


def sample_cum(cum, u):
    return _draw(cum.tolist() if hasattr(cum, "tolist") else cum, u)


def q_run(q, cum, reward, terminal, s, alpha, gamma, epsilon, max_steps, u, pos):
    n_actions = q.shape[1]
    ql = q.tolist()
    cuml = cum.tolist()
    rl = reward.tolist()
    term = terminal.tolist()
    base = pos
    ul = u[pos:pos + 3 * max_steps].tolist()
    pos = 0
    n = 0
    ret = 0.0
    td_abs = 0.0
    done = bool(term[s])
    while not done and n < max_steps:
        row = ql[s]
        if ul[pos] < epsilon:
            a = int(ul[pos + 1] * n_actions)
            if a >= n_actions:
                a = n_actions - 1
        else:
            a = 0
            for b in range(1, n_actions):
                if row[b] > row[a]:
                    a = b
        sn = _draw(cuml[s][a], ul[pos + 2])
        pos += 3
        r = rl[s][a][sn]
        if term[sn]:
            done = True
            target = r
        else:
            nxt = ql[sn]
            best = nxt[0]
            for b in range(1, n_actions):
                if nxt[b] > best:
                    best = nxt[b]
            target = r + gamma * best
        td = target - row[a]
        row[a] = row[a] + alpha * td
        ret += r
        td_abs += abs(td)
        s = sn
        n += 1
    q[...] = ql
    return s, n, base + pos, ret, done, td_abs


def ac_run(theta, w, d_theta, d_w, phi, cum, reward, terminal, s, I, alpha, beta,
           gamma, max_steps, learn, u, pos, log_s, log_a, log_sn, log_r, log_delta):
    n_actions, dim = theta.shape
    th = theta.tolist()
    wl = w.tolist()
    dth = th if np.shares_memory(theta, d_theta) else d_theta.tolist()
    dwl = wl if np.shares_memory(w, d_w) else d_w.tolist()
    nz = [[(k, f) for k, f in enumerate(row) if f != 0.0] for row in phi.tolist()]
    cuml = cum.tolist()
    rl = reward.tolist()
    term = terminal.tolist()
    base = pos
    ul = u[pos:pos + 2 * max_steps].tolist()
    pos = 0
    n = 0
    done = bool(term[s])
    probs = [0.0] * n_actions
    while not done and n < max_steps:
        feats = nz[s]
        m = 0.0
        for b in range(n_actions):
            sc = 0.0
            tb = th[b]
            for k, f in feats:
                sc += tb[k] * f
            probs[b] = sc
            if b == 0 or sc > m:
                m = sc
        z = 0.0
        for b in range(n_actions):
            probs[b] = exp(probs[b] - m)
            z += probs[b]
        for b in range(n_actions):
            probs[b] = probs[b] / z
        a = n_actions - 1
        while a > 0 and probs[a] == 0.0:
            a -= 1
        acc = 0.0
        for b in range(n_actions):
            acc += probs[b]
            if ul[pos] < acc:
                a = b
                break
        sn = _draw(cuml[s][a], ul[pos + 1])
        pos += 2
        r = rl[s][a][sn]
        v_s = 0.0
        for k, f in feats:
            v_s += wl[k] * f
        v_sn = 0.0
        if term[sn]:
            done = True
        else:
            for k, f in nz[sn]:
                v_sn += wl[k] * f
        delta = r + gamma * v_sn - v_s
        if learn:
            cw = beta * delta
            for k, f in feats:
                dwl[k] += cw * f
            ca = alpha * I * delta
            for b in range(n_actions):
                if b == a:
                    g = ca * (1.0 - probs[b])
                else:
                    g = ca * (0.0 - probs[b])
                row = dth[b]
                for k, f in feats:
                    row[k] += g * f
        I = gamma * I
        log_s[n] = s
        log_a[n] = a
        log_sn[n] = sn
        log_r[n] = r
        log_delta[n] = delta
        s = sn
        n += 1
    if learn:
        d_theta[...] = dth
        d_w[...] = dwl
    return s, n, base + pos, I, done
