"""
Independent reference computations.

Nothing here shares code with the iterative solvers it is used to check: the
spectral oracle is a full dense LAPACK eigendecomposition, and the generator
oracle is a centered finite-difference stencil.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import as_expr
from .kernels import DiscretizedKernel
from .state_space import GridSpace


@dataclass(frozen=True)
class DenseSpectrum:
    lambda_cap: float
    right: np.ndarray  # positive Perron vector, max entry 1
    left: np.ndarray  # positive left Perron vector, sums to 1
    second_modulus: float  # |lambda_2|
    eigenvalues: np.ndarray  # sorted by decreasing modulus

    @property
    def ratio(self) -> float:
        """``|lambda_2| / Lambda``: the per-step contraction of the h-transform."""
        return self.second_modulus / self.lambda_cap

    def invariant_measure(self) -> np.ndarray:
        """Fixed point of the normalized evolution: the left Perron vector."""
        return self.left / self.left.sum()

    def h_invariant(self) -> np.ndarray:
        """Invariant law of the h-transform: ``left * right`` normalized."""
        m = self.left * self.right
        return m / m.sum()


def dense_spectrum(K: DiscretizedKernel | np.ndarray) -> DenseSpectrum:
    """Dense eigenvalues, then both Perron vectors as singular vectors of ``K - Lambda I``.

    Tilted kernels can span hundreds of orders of magnitude, which makes the
    eigenvectors returned by the nonsymmetric QR algorithm unreliable; the
    null vectors of the SVD are backward stable regardless.
    """
    M = K.matrix if isinstance(K, DiscretizedKernel) else np.asarray(K, dtype=float)
    vals = np.linalg.eigvals(M)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals = vals[order]
    lam = float(vals[np.argmax(vals.real)].real)
    u, _, vt = np.linalg.svd(M - lam * np.eye(M.shape[0]))
    right = np.abs(vt[-1])
    left = np.abs(u[:, -1])
    return DenseSpectrum(
        lambda_cap=lam,
        right=right / right.max(),
        left=left / left.sum(),
        second_modulus=float(np.abs(vals[1])) if len(vals) > 1 else 0.0,
        eigenvalues=vals,
    )


def finite_difference_generator_ratio(drift_spec, W_spec, f_spec, space: GridSpace) -> np.ndarray:
    """``(b W' + W'' + f W) / W`` with centered differences of the sampled ``W``.

    Returns values at interior nodes only (the two end nodes are NaN on a segment).
    """
    b, W, f = as_expr(drift_spec), as_expr(W_spec), as_expr(f_spec)
    x = space.nodes
    h = space.dx
    Wx = W(x)
    out = np.full(x.shape, np.nan)
    w_minus, w0, w_plus = Wx[:-2], Wx[1:-1], Wx[2:]
    d1 = (w_plus - w_minus) / (2 * h)
    d2 = (w_plus - 2 * w0 + w_minus) / h**2
    xi = x[1:-1]
    out[1:-1] = (b(xi) * d1 + d2) / w0 + f(xi)
    return out
