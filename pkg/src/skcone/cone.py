"""The level hypersphere S = M_{1/2} and its affine/Sasaki structure.

All derivative checks run in the flat chart, where the ambient connection
is plain componentwise differentiation; Christoffel symbols of the cone
metric come from central differences of the pushforward of g.  Fields are
pushed through the inverse coordinate map at every stencil point, so the
residuals genuinely test the geometric identities instead of restating
their closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric, InadmissiblePoint
from .expr import PrepotentialAst, parse_prepotential
from .geometry import (
    DomainSample,
    canonical_symplectic,
    domain_sample,
    invert_flat_coords,
    kahler_potential,
)

# Global Hamiltonian sign, fixed once on the Fubini-Study case (see
# fit_hamiltonian_sign) and asserted for every other input.
HAMILTONIAN_SIGN = 1.0

_FIELD_STEP = 1e-5   # first derivatives of fields along the chart
_GAMMA_STEP = 1e-4   # derivatives of the pushforward of g (Christoffels)
_OUTER_STEP = 3e-4   # outer derivative of quantities that are themselves FD


@dataclass(frozen=True)
class SphereSample:
    """A point of S = M_{1/2} with its tangent frame and structure fields."""

    u: np.ndarray        # complex (m,), |k(u)| = 1/2
    kappa: int           # sign of k
    frame: np.ndarray    # (2n+1, 2m) Euclidean-orthonormal basis of ker dk
    E: np.ndarray        # Blaschke normal -kappa * xi
    sigma: np.ndarray    # J xi
    eta: np.ndarray      # contact covector omega(xi, .)
    g_ind: np.ndarray    # induced metric on the frame
    domain: DomainSample

    @property
    def m(self) -> int:
        return self.u.size


@dataclass(frozen=True)
class GaussSplit:
    tangential: np.ndarray
    normal_coeff: float


def _householder_complement(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to v (rows)."""
    n = v.size
    v = v / np.linalg.norm(v)
    w = v.copy()
    w[0] += 1.0 if v[0] >= 0 else -1.0
    H = np.eye(n) - 2.0 * np.outer(w, w) / (w @ w)
    # H maps -sign(v0) e_0 to v, so columns 1..n-1 span the complement.
    return H[:, 1:].T


def project_to_sphere(ast: PrepotentialAst, z) -> SphereSample:
    """Radially project z onto S and assemble the sphere-level data."""
    z = np.asarray(z, dtype=complex)
    k = kahler_potential(ast, z)
    if abs(k) < 1e-12:
        raise InadmissiblePoint("cannot project a point with k = 0 onto S")
    r = (2.0 * abs(k)) ** -0.5
    u = r * z
    dom = domain_sample(ast, u)
    kappa = 1 if dom.k > 0 else -1
    frame = _householder_complement(dom.dk)
    xi = dom.xi
    E = -kappa * xi
    sigma = dom.J @ xi
    eta = dom.omega.T @ xi
    g_ind = frame @ dom.g @ frame.T
    return SphereSample(u=u, kappa=kappa, frame=frame, E=E, sigma=sigma,
                        eta=eta, g_ind=g_ind, domain=dom)


def random_tangent(sphere: SphereSample, rng) -> np.ndarray:
    """Euclidean-unit tangent vector drawn from the frame (seeded)."""
    coeff = rng.standard_normal(sphere.frame.shape[0])
    vec = sphere.frame.T @ coeff
    return vec / np.linalg.norm(vec)


# ---------------------------------------------------------------------------
# Chart machinery
# ---------------------------------------------------------------------------


class _Chart:
    """Flat-chart field evaluation around a seed point, with caching."""

    def __init__(self, ast: PrepotentialAst, seed_z):
        self.ast = ast
        self.seed = np.asarray(seed_z, dtype=complex)
        self._cache = {}

    def sample(self, w) -> DomainSample:
        key = w.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            z = invert_flat_coords(self.ast, w, self.seed)
            hit = domain_sample(self.ast, z)
            self._cache[key] = hit
        return hit

    def g_flat(self, w) -> np.ndarray:
        s = self.sample(w)
        ji = np.linalg.inv(s.flat_jac)
        return ji.T @ s.g @ ji

    def sigma_flat(self, w) -> np.ndarray:
        s = self.sample(w)
        return s.flat_jac @ (s.J @ s.xi)

    def xi_flat(self, w) -> np.ndarray:
        s = self.sample(w)
        return s.flat_jac @ s.xi

    def level_tangent_flat(self, w, Y0) -> np.ndarray:
        """Level-set projection of the constant vector Y0, in flat components."""
        s = self.sample(w)
        denom = float(s.dk @ s.xi)
        if abs(denom) < 1e-10:
            raise DegenerateMetric("dk(xi) = 2k vanished during tangent extension")
        Yl = Y0 - (float(s.dk @ Y0) / denom) * s.xi
        return s.flat_jac @ Yl

    def dir_deriv(self, field, w, direction, step) -> np.ndarray:
        """Central difference of a chart field along ``direction``."""
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            probe = np.asarray(field(w), dtype=float)
            return np.zeros_like(probe)
        unit = direction / norm
        h = step * (1.0 + float(np.linalg.norm(w)))
        hi = np.asarray(field(w + h * unit), dtype=float)
        lo = np.asarray(field(w - h * unit), dtype=float)
        return (hi - lo) / (2.0 * h) * norm

    def christoffel(self, w, step=_GAMMA_STEP) -> np.ndarray:
        """Gamma^c_{ab} of the cone metric in flat coordinates."""
        n = w.size
        h = step * (1.0 + float(np.linalg.norm(w)))
        dg = np.zeros((n, n, n))
        for a in range(n):
            e = np.zeros(n)
            e[a] = h
            dg[a] = (self.g_flat(w + e) - self.g_flat(w - e)) / (2.0 * h)
        g_inv = np.linalg.inv(self.g_flat(w))
        # bracket[d, a, b] = d_a g_{db} + d_b g_{da} - d_d g_{ab}
        bracket = np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (2, 0, 1)) - dg
        return np.einsum("cd,dab->cab", 0.5 * g_inv, bracket)

    def lc_deriv(self, field, w, direction, gamma, step=_FIELD_STEP) -> np.ndarray:
        """Levi-Civita directional derivative of a flat-components field."""
        partial = self.dir_deriv(field, w, direction, step)
        return partial + np.einsum("cab,a,b->c", gamma, direction, field(w))


# ---------------------------------------------------------------------------
# Affine hypersphere checks
# ---------------------------------------------------------------------------


def gauss_split(ast: PrepotentialAst, sphere: SphereSample, X, Y,
                step: float = _FIELD_STEP) -> GaussSplit:
    """Split nabla_X Y along ker dk + span(E).

    Y is extended off S by level-set projection; its flat components are
    differentiated along X with central differences.  The normal
    coefficient should reproduce g(X, Y): that is the affine-sphere claim.
    """
    dom = sphere.domain
    chart = _Chart(ast, dom.z)
    w0 = dom.flat
    Y0 = np.asarray(Y, dtype=float)
    X_flat = dom.flat_jac @ np.asarray(X, dtype=float)
    D = chart.dir_deriv(lambda w: chart.level_tangent_flat(w, Y0), w0, X_flat, step)
    V = np.linalg.solve(dom.flat_jac, D)
    dk_E = float(dom.dk @ sphere.E)
    if abs(dk_E) < 1e-10:
        raise DegenerateMetric("dk(E) vanished on the sphere sample")
    coeff = float(dom.dk @ V) / dk_E
    tangential = V - coeff * sphere.E
    return GaussSplit(tangential=tangential, normal_coeff=coeff)


def shape_residual(ast: PrepotentialAst, sphere: SphereSample, X,
                   step: float = _FIELD_STEP) -> float:
    """|(-nabla_X E) - kappa X|: the shape tensor is kappa * Id."""
    dom = sphere.domain
    chart = _Chart(ast, dom.z)
    kappa = float(sphere.kappa)

    def e_flat(w):
        s = chart.sample(w)
        return s.flat_jac @ (-kappa * s.xi)

    X = np.asarray(X, dtype=float)
    X_flat = dom.flat_jac @ X
    D = chart.dir_deriv(e_flat, dom.flat, X_flat, step)
    A_X = -np.linalg.solve(dom.flat_jac, D)
    return float(np.linalg.norm(A_X - kappa * X))


def mean_curvature_residual(ast: PrepotentialAst, sphere: SphereSample) -> float:
    """|trace(A)/(2n+1) - kappa| over the Euclidean-orthonormal frame."""
    dom = sphere.domain
    chart = _Chart(ast, dom.z)
    kappa = float(sphere.kappa)

    def e_flat(w):
        s = chart.sample(w)
        return s.flat_jac @ (-kappa * s.xi)

    trace = 0.0
    for T in sphere.frame:
        D = chart.dir_deriv(e_flat, dom.flat, dom.flat_jac @ T, _FIELD_STEP)
        A_T = -np.linalg.solve(dom.flat_jac, D)
        trace += float(T @ A_T)
    dim = sphere.frame.shape[0]
    return abs(trace / dim - kappa)


def blaschke_volume_residual(ast: PrepotentialAst, sphere: SphereSample) -> float:
    """Equiaffine volume normalization of the Blaschke normal.

    Compares |det_flat(E, frame)| converted to the metric volume of the
    ambient space against the metric volume of the induced metric.
    """
    dom = sphere.domain
    cols = [dom.flat_jac @ sphere.E] + [dom.flat_jac @ T for T in sphere.frame]
    det_flat = float(np.linalg.det(np.column_stack(cols)))
    ji = np.linalg.inv(dom.flat_jac)
    g_flat = ji.T @ dom.g @ ji
    c_vol = float(np.sqrt(abs(np.linalg.det(g_flat))))
    rhs = float(np.sqrt(abs(np.linalg.det(sphere.g_ind))))
    return abs(abs(det_flat) * c_vol - rhs)


# ---------------------------------------------------------------------------
# Sasaki structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SasakiResiduals:
    killing: float
    structure: float
    affine: float
    contact: float


def _tangential(dom: DomainSample, V) -> np.ndarray:
    """g-orthogonal projection onto ker dk (equals the affine split)."""
    return V - (float(dom.dk @ V) / (2.0 * dom.k)) * dom.xi


def sasaki_residuals(ast: PrepotentialAst, sphere: SphereSample, pairs) -> SasakiResiduals:
    """Residuals of the Sasaki identities for sigma = J xi on S.

    killing    Killing equation for sigma against the Levi-Civita connection
    structure  (D_X Phi)(Y) = kappa g(sigma, Y) X - g(X, Y) sigma
    affine     Phi = nabla-hat sigma (affine Sasaki condition)
    contact    d eta = 2 omega on ker eta
    """
    dom = sphere.domain
    chart = _Chart(ast, dom.z)
    w0 = dom.flat
    jac0 = dom.flat_jac
    kappa = float(sphere.kappa)
    gamma0 = chart.christoffel(w0)
    g_flat0 = chart.g_flat(w0)
    sigma0_flat = chart.sigma_flat(w0)

    def lc_sigma(w, direction, gamma):
        return chart.lc_deriv(chart.sigma_flat, w, direction, gamma)

    def phi_at_u(vec_real):
        """Phi(W) = tangential Levi-Civita derivative of sigma along W."""
        Wf = jac0 @ vec_real
        V = np.linalg.solve(jac0, lc_sigma(w0, Wf, gamma0))
        return _tangential(dom, V)

    killing = 0.0
    structure = 0.0
    affine = 0.0
    contact = 0.0

    for X, Y in pairs:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        Xf = jac0 @ X
        Yf = jac0 @ Y

        # Killing: g(D_X sigma, Y) + g(X, D_Y sigma) = 0 for tangent X, Y.
        DXs = lc_sigma(w0, Xf, gamma0)
        DYs = lc_sigma(w0, Yf, gamma0)
        killing = max(killing, abs(float(DXs @ g_flat0 @ Yf + Xf @ g_flat0 @ DYs)))

        # Affine: flat derivative of sigma vs Levi-Civita derivative, both
        # projected tangentially (Phi = nabla-hat sigma).
        nabla_s = np.linalg.solve(jac0, chart.dir_deriv(chart.sigma_flat, w0, Xf, _FIELD_STEP))
        lc_s = np.linalg.solve(jac0, DXs)
        affine = max(affine, float(np.linalg.norm(_tangential(dom, nabla_s - lc_s))))

        # Structure tensor equation, with the covariant derivative of Phi
        # assembled from a nested chart difference.
        def q_flat(w):
            s = chart.sample(w)
            gamma_w = chart.christoffel(w)
            Yf_w = chart.level_tangent_flat(w, Y)
            Ds = lc_sigma(w, Yf_w, gamma_w)
            V = np.linalg.solve(s.flat_jac, Ds)
            return s.flat_jac @ _tangential(s, V)

        DXq = chart.lc_deriv(q_flat, w0, Xf, gamma0, step=_OUTER_STEP)
        term1 = _tangential(dom, np.linalg.solve(jac0, DXq))
        DXY = np.linalg.solve(
            jac0,
            chart.lc_deriv(lambda w: chart.level_tangent_flat(w, Y), w0, Xf, gamma0),
        )
        term2 = phi_at_u(_tangential(dom, DXY))
        lhs = term1 - term2
        # Expanding (D-bar J) = 0 on the cone with J X = Phi X - eta(X) xi
        # puts kappa on both terms; for kappa = 1 this is the usual form.
        rhs = kappa * (dom.g_form(sphere.sigma, Y) * X - dom.g_form(X, Y) * sphere.sigma)
        structure = max(structure, float(np.linalg.norm(lhs - rhs)))

        # Contact: d eta = 2 omega on ker eta.
        eta_sigma = float(sphere.eta @ sphere.sigma)
        Xc = X - (float(sphere.eta @ X) / eta_sigma) * sphere.sigma
        Yc = Y - (float(sphere.eta @ Y) / eta_sigma) * sphere.sigma
        Xcf = jac0 @ Xc
        Ycf = jac0 @ Yc

        def eta_flat(w):
            s = chart.sample(w)
            return np.linalg.solve(s.flat_jac.T, s.omega.T @ s.xi)

        d1 = chart.dir_deriv(lambda w: np.array([eta_flat(w) @ Ycf]), w0, Xcf, _FIELD_STEP)
        d2 = chart.dir_deriv(lambda w: np.array([eta_flat(w) @ Xcf]), w0, Ycf, _FIELD_STEP)
        d_eta = float(d1[0] - d2[0])
        contact = max(contact, abs(d_eta - 2.0 * dom.omega_form(Xc, Yc)))

    return SasakiResiduals(killing=killing, structure=structure,
                           affine=affine, contact=contact)


# ---------------------------------------------------------------------------
# Hamiltonian field and warped product
# ---------------------------------------------------------------------------


def hamiltonian_field_residual(ast: PrepotentialAst, sphere: SphereSample,
                               potential=None, sign: float = HAMILTONIAN_SIGN) -> float:
    """Residual of sigma against the Hamiltonian field of k^2 on S.

    The field X solves iota_X omega_can = d(potential) in flat coordinates,
    with omega_can the canonical Darboux matrix of the chart (the constant
    pushforward of omega, normalized).  The reference is sign * 2k * sigma;
    on S the factor 2k equals kappa, so one fitted global sign covers both
    metric branches.  ``potential`` defaults to k^2 with analytic gradient;
    a callable (real frame -> float) is differentiated numerically.
    """
    dom = sphere.domain
    m = dom.m
    if potential is None:
        grad = 2.0 * dom.k * dom.dk
    else:
        w_real = dom.xi
        h = 1e-6 * (1.0 + float(np.linalg.norm(w_real)))
        grad = np.zeros(2 * m)
        for a in range(2 * m):
            e = np.zeros(2 * m)
            e[a] = h
            grad[a] = (potential(w_real + e) - potential(w_real - e)) / (2.0 * h)
    c_flat = np.linalg.solve(dom.flat_jac.T, grad)
    omega_can = canonical_symplectic(m)
    X_flat = omega_can @ c_flat
    ref = 2.0 * dom.k * (dom.flat_jac @ sphere.sigma)
    return float(np.linalg.norm(X_flat - sign * ref))


def fit_hamiltonian_sign(dim: int = 3) -> float:
    """Fit the global Hamiltonian sign on the Fubini-Study case."""
    terms = " + ".join(f"z{j}^2" for j in range(dim))
    ast = parse_prepotential(f"i*({terms})", dim)
    z = np.full(dim, 0.4 + 0.3j, dtype=complex)
    sphere = project_to_sphere(ast, z)
    dom = sphere.domain
    grad = 2.0 * dom.k * dom.dk
    X_flat = canonical_symplectic(dim) @ np.linalg.solve(dom.flat_jac.T, grad)
    ref = 2.0 * dom.k * (dom.flat_jac @ sphere.sigma)
    return float(np.sign(X_flat @ ref))


def warped_product_residuals(ast: PrepotentialAst, sphere: SphereSample,
                             r: float, X, Y, step: float = _FIELD_STEP) -> tuple:
    """Radial (warped product) identities at the scaled point r*u.

    w1: nabla_{X~} Y~ at ru equals r * (nabla-hat_X Y + g(X, Y) E) from the
        Gauss data at u, for the homogeneous extensions X~(ru) = r X(u).
    w2: nabla_{X~} xi = X~ (xi is the flat position field).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    dom_p = domain_sample(ast, r * sphere.u)
    chart = _Chart(ast, dom_p.z)
    wp = dom_p.flat
    Xt_flat = dom_p.flat_jac @ (r * X)

    def y_homog_flat(w):
        s = chart.sample(w)
        scale = float(np.sqrt(2.0 * abs(s.k)))
        denom = float(s.dk @ s.xi)
        Yl = Y - (float(s.dk @ Y) / denom) * s.xi
        return s.flat_jac @ (scale * Yl)

    D = chart.dir_deriv(y_homog_flat, wp, Xt_flat, step)
    V = np.linalg.solve(dom_p.flat_jac, D)
    split = gauss_split(ast, sphere, X, Y)
    rhs = r * (split.tangential + split.normal_coeff * sphere.E)
    w1 = float(np.linalg.norm(V - rhs))

    D2 = chart.dir_deriv(chart.xi_flat, wp, Xt_flat, step)
    V2 = np.linalg.solve(dom_p.flat_jac, D2)
    w2 = float(np.linalg.norm(V2 - r * X))
    return w1, w2
