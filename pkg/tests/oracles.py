"""Independent reference computations used by several test modules."""
import numpy as np

from fujita_lab.exact import eval_u


def richardson(f, x, h):
    """Central difference of ``f`` at ``x`` with one Richardson step (error O(h^4))."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def richardson2(f, x, h):
    """Second derivative, central difference plus one Richardson step."""
    def c(step):
        return (f(x + step) - 2 * f(x) + f(x - step)) / step**2
    return (4 * c(h / 2) - c(h)) / 3


def fd_residual(p, field, t, r, h=1e-4, h2=1e-2):
    """``(u_t - Lu - u^q) / u`` and a matching scale, all derivatives numerical.

    Differences are taken of ``g = log eval_u`` (``u_r = u g_r``,
    ``u_rr = u (g_rr + g_r^2)``), which stays well conditioned where ``u``
    itself varies over hundreds of e-folds.  ``Lu = a u_rr + (a_r + (n-1) a/r) u_r``
    is the radial divergence form, so ``r > 0`` is required.  The second
    difference uses the larger step ``h2`` (its rounding error grows like eps/h^2).
    """
    def g_of_t(s):
        return np.log(eval_u(p, s, r))

    def g_of_r(s):
        return np.log(eval_u(p, t, s))

    def a_of_r(s):
        return field.scalar(0.0, s)

    u = eval_u(p, t, r)
    g_t = richardson(g_of_t, t, h)
    g_r = richardson(g_of_r, r, h)
    g_rr = richardson2(g_of_r, r, h2)
    a = a_of_r(r)
    a_r = richardson(a_of_r, r, h)
    drift = (a_r + (p.n - 1) * a / r) * g_r
    lu_over_u = a * g_rr + a * g_r**2 + drift
    src = u ** (p.q - 1)
    scale = np.abs(g_t) + np.abs(a * g_rr) + a * g_r**2 + np.abs(drift) + src
    return g_t - lu_over_u - src, scale
