# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops for the tabular and actor-critic learners.

Uniform protocol (shared with ``_fallback``): ``q_run`` reads three uniforms
per step (explore test, exploratory action, transition); ``ac_run`` reads two
(action, transition). Arithmetic order matches the fallback line for line.
"""
from libc.math cimport exp, fabs
from libc.stdlib cimport malloc, free


cdef inline Py_ssize_t _draw(const double[:, :, ::1] cum, Py_ssize_t s,
                             Py_ssize_t a, double u) noexcept nogil:
    cdef Py_ssize_t j, n = cum.shape[2]
    for j in range(n):
        if u < cum[s, a, j]:
            return j
    return n - 1


def sample_cum(const double[::1] cum, double u):
    cdef Py_ssize_t j, n = cum.shape[0]
    for j in range(n):
        if u < cum[j]:
            return j
    return n - 1


def q_run(double[:, ::1] q, const double[:, :, ::1] cum,
          const double[:, :, ::1] reward, const unsigned char[::1] terminal,
          Py_ssize_t s, double alpha, double gamma, double epsilon,
          Py_ssize_t max_steps, const double[::1] u, Py_ssize_t pos):
    cdef Py_ssize_t n_actions = q.shape[1]
    cdef Py_ssize_t a, b, sn, n = 0
    cdef double best, target, td, r
    cdef double ret = 0.0, td_abs = 0.0
    cdef bint done = terminal[s]
    with nogil:
        while not done and n < max_steps:
            if u[pos] < epsilon:
                a = <Py_ssize_t>(u[pos + 1] * n_actions)
                if a >= n_actions:
                    a = n_actions - 1
            else:
                a = 0
                for b in range(1, n_actions):
                    if q[s, b] > q[s, a]:
                        a = b
            sn = _draw(cum, s, a, u[pos + 2])
            pos += 3
            r = reward[s, a, sn]
            if terminal[sn]:
                done = True
                target = r
            else:
                best = q[sn, 0]
                for b in range(1, n_actions):
                    if q[sn, b] > best:
                        best = q[sn, b]
                target = r + gamma * best
            td = target - q[s, a]
            q[s, a] = q[s, a] + alpha * td
            ret += r
            td_abs += fabs(td)
            s = sn
            n += 1
    return s, n, pos, ret, done, td_abs


def ac_run(const double[:, ::1] theta, const double[::1] w,
           double[:, ::1] d_theta, double[::1] d_w,
           const double[:, ::1] phi, const double[:, :, ::1] cum,
           const double[:, :, ::1] reward, const unsigned char[::1] terminal,
           Py_ssize_t s, double I, double alpha, double beta, double gamma,
           Py_ssize_t max_steps, bint learn, const double[::1] u, Py_ssize_t pos,
           long long[::1] log_s, long long[::1] log_a, long long[::1] log_sn,
           double[::1] log_r, double[::1] log_delta):
    """Run up to ``max_steps`` actor-critic steps from ``s``.

    The policy is read from ``theta`` and the critic from ``w``; increments
    are added into ``d_theta`` / ``d_w``. Passing the same arrays for both
    gives in-place updates, passing zeroed buffers gives accumulation against
    a frozen snapshot.
    """
    cdef Py_ssize_t n_actions = theta.shape[0]
    cdef Py_ssize_t dim = theta.shape[1]
    cdef Py_ssize_t a, b, k, sn, n = 0
    cdef double sc, m, z, acc, r, v_s, v_sn, delta, cw, ca, g, f
    cdef bint done = terminal[s]
    cdef double *probs = <double *> malloc(n_actions * sizeof(double))
    if probs == NULL:
        raise MemoryError()
    try:
        with nogil:
            while not done and n < max_steps:
                m = 0.0
                for b in range(n_actions):
                    sc = 0.0
                    for k in range(dim):
                        f = phi[s, k]
                        if f != 0.0:
                            sc += theta[b, k] * f
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
                    if u[pos] < acc:
                        a = b
                        break
                sn = _draw(cum, s, a, u[pos + 1])
                pos += 2
                r = reward[s, a, sn]
                v_s = 0.0
                for k in range(dim):
                    f = phi[s, k]
                    if f != 0.0:
                        v_s += w[k] * f
                v_sn = 0.0
                if terminal[sn]:
                    done = True
                else:
                    for k in range(dim):
                        f = phi[sn, k]
                        if f != 0.0:
                            v_sn += w[k] * f
                delta = r + gamma * v_sn - v_s
                if learn:
                    cw = beta * delta
                    for k in range(dim):
                        f = phi[s, k]
                        if f != 0.0:
                            d_w[k] += cw * f
                    ca = alpha * I * delta
                    for b in range(n_actions):
                        if b == a:
                            g = ca * (1.0 - probs[b])
                        else:
                            g = ca * (0.0 - probs[b])
                        for k in range(dim):
                            f = phi[s, k]
                            if f != 0.0:
                                d_theta[b, k] += g * f
                I = gamma * I
                log_s[n] = s
                log_a[n] = a
                log_sn[n] = sn
                log_r[n] = r
                log_delta[n] = delta
                s = sn
                n += 1
    finally:
        free(probs)
    return s, n, pos, I, done
