"""Pure-numpy Frank-Wolfe (Todd-Yildirim, with away steps) for the centered
minimum-volume enclosing ellipsoid. Same contract as the compiled kernel."""
import numpy as np


def fw_iterate(P, u, Xinv, g, tol, max_iter):
    """Run at most ``max_iter`` steps, updating ``u``, ``Xinv`` and ``g`` in place.

    ``g[i]`` must equal ``P[i] @ Xinv @ P[i]`` on entry. Returns
    ``(iterations, eps_plus, eps_minus)`` with the optimality measures of the
    final iterate.
    """
    m, D = P.shape
    it = 0
    while True:
        jmax = int(np.argmax(g))
        gmax = g[jmax]
        supp = u > 0
        gs = np.where(supp, g, np.inf)
        jmin = int(np.argmin(gs))
        gmin = gs[jmin]
        eps_plus = gmax / D - 1.0
        eps_minus = 1.0 - gmin / D
        if (eps_plus <= tol and eps_minus <= tol) or it >= max_iter:
            return it, eps_plus, eps_minus
        uj = u[jmin]
        if eps_plus >= eps_minus or uj >= 1.0:
            tau = (gmax / D - 1.0) / (gmax - 1.0)
            w = Xinv @ P[jmax]
            c = tau / (1.0 - tau + tau * gmax)
            Xinv -= c * np.outer(w, w)
            Xinv /= 1.0 - tau
            s = P @ w
            g -= c * s * s
            g /= 1.0 - tau
            u *= 1.0 - tau
            u[jmax] += tau
        else:
            tau_max = uj / (1.0 - uj)
            if gmin <= 1.0:
                tau = tau_max
            else:
                tau = min((1.0 - gmin / D) / (gmin - 1.0), tau_max)
            w = Xinv @ P[jmin]
            c = tau / (1.0 + tau - tau * gmin)
            Xinv += c * np.outer(w, w)
            Xinv /= 1.0 + tau
            s = P @ w
            g += c * s * s
            g /= 1.0 + tau
            u *= 1.0 + tau
            if tau == tau_max:
                u[jmin] = 0.0
            else:
                u[jmin] -= tau
        it += 1
