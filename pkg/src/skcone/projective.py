"""The projective metric on the orbit space and the submersion checks.

The quotient metric is evaluated through its defining formula

    gbar(X) = g(X, X) / g(u, u) - | h(X, xi) / h(xi, xi) |^2

without ever forming the projection differential; the mixed term uses the
complex modulus of the Hermitian pairing, which is what makes the formula
descend to the orbit space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InadmissiblePoint
from .expr import PrepotentialAst, parse_prepotential
from .geometry import DomainSample, domain_sample, to_complex, to_real

_LEVEL_TOL = 1e-8


@dataclass(frozen=True)
class ProjectiveSample:
    """Horizontal component of a direction and the quotient metric value."""

    u: np.ndarray
    X_h: np.ndarray
    gbar_val: float


def _horizontal(dom: DomainSample, X) -> np.ndarray:
    """Remove the complex-linear projection of X onto the line through xi."""
    X = np.asarray(X, dtype=float)
    xi = dom.xi
    h_xx = dom.h_form(xi, xi)  # = 2k, real
    if abs(h_xx) < 2e-8:
        raise InadmissiblePoint("h(xi, xi) = 2k too small for horizontal projection")
    c = dom.h_form(X, xi) / h_xx
    return X - c.real * xi - c.imag * (dom.J @ xi)


def horizontal_project(ast: PrepotentialAst, u, X) -> np.ndarray:
    """Component of X with h(xi, X) = 0 (the horizontal distribution)."""
    return _horizontal(domain_sample(ast, u), X)


def projective_sample(ast: PrepotentialAst, u, X) -> ProjectiveSample:
    """Bundle the horizontal projection of X with its quotient metric value.

    The metric value is insensitive to the vertical component of X, so it
    is the same whether evaluated on X or on X_h.
    """
    dom = domain_sample(ast, u)
    Xh = _horizontal(dom, X)
    return ProjectiveSample(u=np.asarray(u, dtype=complex), X_h=Xh,
                            gbar_val=_gbar(dom, Xh, Xh))


def _gbar(dom: DomainSample, X, Y) -> float:
    two_k = 2.0 * dom.k
    mixed = dom.h_form(X, dom.xi) * np.conj(dom.h_form(Y, dom.xi))
    return dom.g_form(X, Y) / two_k - float(np.real(mixed)) / two_k**2


def projective_metric(ast: PrepotentialAst, u, X) -> float:
    """gbar evaluated on (the projection of) X at the orbit of u."""
    dom = domain_sample(ast, u)
    return _gbar(dom, np.asarray(X, dtype=float), np.asarray(X, dtype=float))


def projective_metric_bilinear(ast: PrepotentialAst, u, X, Y) -> float:
    """Polarized form of :func:`projective_metric`."""
    dom = domain_sample(ast, u)
    return _gbar(dom, np.asarray(X, dtype=float), np.asarray(Y, dtype=float))


def submersion_residual(ast: PrepotentialAst, u, X) -> float:
    """| gbar(X) - kappa g(X, X) | for horizontal X tangent to S.

    kappa = +1 is the semi-Riemannian submersion statement at c = 1/2;
    kappa = -1 is the anti-isometry branch.
    """
    dom = domain_sample(ast, u)
    if abs(abs(dom.k) - 0.5) > _LEVEL_TOL:
        raise InadmissiblePoint(f"|k(u)| = {abs(dom.k):.6f}, point not on S")
    X = np.asarray(X, dtype=float)
    scale = 1.0 + float(X @ X)
    if abs(dom.h_form(dom.xi, X)) > 1e-6 * scale:
        raise ValueError("X is not horizontal: h(xi, X) != 0")
    kappa = 1.0 if dom.k > 0 else -1.0
    return abs(_gbar(dom, X, X) - kappa * dom.g_form(X, X))


def pkm_vertical_residual(ast: PrepotentialAst, u) -> float:
    """gbar must annihilate the vertical plane span(xi, J xi)."""
    dom = domain_sample(ast, u)
    xi = dom.xi
    return max(abs(_gbar(dom, xi, xi)), abs(_gbar(dom, dom.J @ xi, dom.J @ xi)))


def pkm_pullback_residual(ast: PrepotentialAst, u, X) -> float:
    """|g_u(u,u) * gbar(X_h) - g(X_h, X_h)| on the horizontal part of TS."""
    dom = domain_sample(ast, u)
    Xh = _horizontal(dom, X)
    return abs(2.0 * dom.k * _gbar(dom, Xh, Xh) - dom.g_form(Xh, Xh))


def pkm_scale_residual(ast: PrepotentialAst, u, X, lam: complex) -> float:
    """Invariance of gbar under u -> lam u, X -> lam X (lam in C^*)."""
    u = np.asarray(u, dtype=complex)
    X = np.asarray(X, dtype=float)
    base = projective_metric(ast, u, X)
    X_scaled = to_real(lam * to_complex(X))
    moved = projective_metric(ast, lam * u, X_scaled)
    return abs(moved - base) / (1.0 + abs(base))


def horizontal_gram_determinant(ast: PrepotentialAst, u, frame) -> float:
    """|det| of the gbar Gram matrix on a basis of the horizontal space.

    ``frame`` spans ker dk at u; its horizontal projections have one real
    relation (the sigma direction), which is dropped by rank reduction.
    """
    dom = domain_sample(ast, u)
    projected = np.array([_horizontal(dom, T) for T in frame])
    q, r = np.linalg.qr(projected.T)
    keep = np.abs(np.diag(r)) > 1e-8
    basis = q.T[keep]
    gram = np.array([[_gbar(dom, a, b) for b in basis] for a in basis])
    return abs(float(np.linalg.det(gram)))


# ---------------------------------------------------------------------------
# Fubini-Study comparison
# ---------------------------------------------------------------------------

_FS_CONSTANT = None


def _fs_closed_form(u, X) -> float:
    u = np.asarray(u, dtype=complex)
    zx = to_complex(np.asarray(X, dtype=float))
    nu2 = float(np.real(np.vdot(u, u)))
    inner = complex(np.dot(zx, np.conj(u)))
    return float(np.real(np.vdot(zx, zx))) / nu2 - abs(inner) ** 2 / nu2**2


def _fs_ast(dim: int) -> PrepotentialAst:
    terms = " + ".join(f"z{j}^2" for j in range(dim))
    return parse_prepotential(f"i*({terms})", dim)


def fs_fitted_constant() -> float:
    """Scale between gbar for F = i sum z^2 and the closed Fubini-Study form.

    Fitted once on a fixed probe set and cached; reported in suite output.
    """
    global _FS_CONSTANT
    if _FS_CONSTANT is None:
        ast = _fs_ast(3)
        rng = np.random.default_rng(2024)
        num = 0.0
        den = 0.0
        for _ in range(8):
            u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            X = rng.standard_normal(6)
            ours = projective_metric(ast, u, X)
            closed = _fs_closed_form(u, X)
            num += ours * closed
            den += closed * closed
        _FS_CONSTANT = num / den
    return _FS_CONSTANT


def fubini_study_compare(u, X) -> float:
    """Residual between gbar of the quadratic prepotential and closed-form FS."""
    u = np.asarray(u, dtype=complex)
    ast = _fs_ast(u.size)
    ours = projective_metric(ast, u, X)
    return abs(ours - fs_fitted_constant() * _fs_closed_form(u, X))
