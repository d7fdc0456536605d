"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def lstsq(x, y):
    """Least-squares coefficients via LAPACK QR; see ``_kernels.lstsq``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise ValueError("design rows and response length differ")
    q, r = np.linalg.qr(x, mode="reduced")
    d = np.abs(np.diag(r))
    if d.size == 0 or d.max() == 0.0 or d.min() == 0.0:
        return np.zeros(x.shape[1]), 0.0
    coef = np.linalg.solve(np.triu(r), q.T @ y)
    return coef, float(d.min() / d.max())


def logistic_newton(x, r, tol=1e-10, max_iter=50, bound=30.0):
    """Newton-Raphson logistic fit; see ``_kernels.logistic_newton``."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    coef = np.zeros(x.shape[1])
    iters = 0
    for it in range(max_iter):
        eta = x @ coef
        mu = np.where(eta >= 0, 1.0 / (1.0 + np.exp(-np.abs(eta))),
                      np.exp(-np.abs(eta)) / (1.0 + np.exp(-np.abs(eta))))
        grad = x.T @ (r - mu)
        if np.sqrt(grad @ grad) < tol:
            return coef, 0, it
        hess = (x * (mu * (1.0 - mu))[:, None]).T @ x
        try:
            chol = np.linalg.cholesky(hess)
        except np.linalg.LinAlgError:
            return coef, 3, it + 1
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, grad))
        coef = coef + step
        iters = it + 1
        if np.any(np.abs(coef) > bound):
            return coef, 1, iters
        if np.max(np.abs(step)) < tol:
            return coef, 0, iters
    return coef, 2, iters
