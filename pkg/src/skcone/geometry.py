"""Pointwise special Kahler structures on a conic domain.

Conventions (recorded in every report header):

* real frame ordering is (Re z_0..Re z_n, Im z_0..Im z_n);
* flat special coordinates are (x_0..x_n, y_0..y_n) with x = Re z and
  y = Re dF/dz;
* the Hermitian form is h(X, Y) = Z(X)^T N conj(Z(Y)) with
  N = Im(d2F), realized on the real frame as h = g - 2i*omega, i.e.
  g = Re h and omega = -Im(h)/2.

With these choices Lemma-style identities h(xi,.) = 2 dbar k,
g(xi,.) = dk and g(xi,xi) = 2k hold simultaneously, and the pushforward
of omega to the flat chart is the constant matrix -(1/2) * J_can where
J_can is the canonical Darboux matrix of the (x, y) ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMetric,
    EvaluationSingularity,
    InadmissiblePoint,
    NoConvergence,
)
from .expr import PrepotentialAst, eval_jet

K_MIN_DEFAULT = 1e-8
DET_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


def to_real(z) -> np.ndarray:
    """Complex m-vector -> real 2m-vector in (Re block, Im block) order."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag])


def to_complex(w) -> np.ndarray:
    """Inverse of :func:`to_real`."""
    w = np.asarray(w, dtype=float)
    m = w.size // 2
    return w[:m] + 1j * w[m:]


def complex_structure(m: int) -> np.ndarray:
    """The constant real matrix of multiplication by i."""
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = -np.eye(m)
    J[m:, :m] = np.eye(m)
    return J


def canonical_symplectic(m: int) -> np.ndarray:
    """Matrix of sum_i dx_i ^ dy_i in the (x, y) block ordering."""
    S = np.zeros((2 * m, 2 * m))
    S[:m, m:] = np.eye(m)
    S[m:, :m] = -np.eye(m)
    return S


# ---------------------------------------------------------------------------
# Domain samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSample:
    """All pointwise geometry of the conic domain at z."""

    z: np.ndarray          # complex (m,)
    k: float
    dk: np.ndarray         # real covector (2m,)
    h: np.ndarray          # complex Hermitian (m, m); here = N (real symmetric)
    g: np.ndarray          # real symmetric (2m, 2m)
    omega: np.ndarray      # real antisymmetric (2m, 2m)
    J: np.ndarray          # real (2m, 2m), J^2 = -Id
    flat: np.ndarray       # (2m,)
    flat_jac: np.ndarray   # (2m, 2m)
    flat_hess: np.ndarray  # (2m, 2m, 2m); [c, a, b] = d2 flat_c / dw_a dw_b

    @property
    def m(self) -> int:
        return self.z.size

    @property
    def xi(self) -> np.ndarray:
        """Position vector field at z, in the real frame."""
        return to_real(self.z)

    def h_form(self, X, Y) -> complex:
        """Hermitian pairing of real-frame vectors."""
        zx = to_complex(np.asarray(X, dtype=float))
        zy = to_complex(np.asarray(Y, dtype=float))
        return complex(zx @ self.h @ np.conj(zy))

    def g_form(self, X, Y) -> float:
        return float(np.asarray(X) @ self.g @ np.asarray(Y))

    def omega_form(self, X, Y) -> float:
        return float(np.asarray(X) @ self.omega @ np.asarray(Y))

    def eta(self) -> np.ndarray:
        """Contact covector eta = omega(xi, .) in the real frame."""
        return self.omega.T @ self.xi


def _dk_z(tau, f1, z):
    """Holomorphic Wirtinger gradient of k: dk/dz_j."""
    return -0.25j * (tau @ np.conj(z) - np.conj(f1))


def kahler_potential(ast: PrepotentialAst, z) -> float:
    """k(z) = Im(sum_i dF/dz_i * conj(z_i)) / 2."""
    z = np.asarray(z, dtype=complex)
    jet = eval_jet(ast, z, 1)
    return 0.5 * float(np.imag(np.dot(jet.deriv(1), np.conj(z))))


def domain_sample(ast: PrepotentialAst, z, k_min: float = K_MIN_DEFAULT) -> DomainSample:
    """Assemble the full pointwise structure; raises on inadmissible points."""
    z = np.asarray(z, dtype=complex)
    m = ast.n_vars
    jet = eval_jet(ast, z, 3)
    f1 = jet.deriv(1)
    tau = jet.deriv(2)
    f3 = jet.deriv(3)

    k = 0.5 * float(np.imag(np.dot(f1, np.conj(z))))
    if abs(k) < k_min:
        raise InadmissiblePoint(f"|k| = {abs(k):.3e} below admissibility gate {k_min:.1e}")

    N = np.imag(tau)
    det_n = float(np.linalg.det(N))
    scale = max(1.0, float(np.linalg.norm(N)) ** m)
    if abs(det_n) < DET_RTOL * scale:
        raise DegenerateMetric(f"|det Im d2F| = {abs(det_n):.3e} below {DET_RTOL * scale:.3e}")

    dkz = _dk_z(tau, f1, z)
    dk = np.concatenate([2.0 * dkz.real, -2.0 * dkz.imag])

    g = np.zeros((2 * m, 2 * m))
    g[:m, :m] = N
    g[m:, m:] = N
    omega = np.zeros((2 * m, 2 * m))
    omega[:m, m:] = 0.5 * N
    omega[m:, :m] = -0.5 * N
    J = complex_structure(m)

    flat = np.concatenate([z.real, f1.real])
    jac = np.zeros((2 * m, 2 * m))
    jac[:m, :m] = np.eye(m)
    jac[m:, :m] = tau.real
    jac[m:, m:] = -N

    hess = np.zeros((2 * m, 2 * m, 2 * m))
    re3, im3 = f3.real, f3.imag
    for j in range(m):
        hess[m + j, :m, :m] = re3[j]
        hess[m + j, :m, m:] = -im3[j]
        hess[m + j, m:, :m] = -im3[j]
        hess[m + j, m:, m:] = -re3[j]

    return DomainSample(z=z, k=k, dk=dk, h=N.astype(complex), g=g, omega=omega,
                        J=J, flat=flat, flat_jac=jac, flat_hess=hess)


def parabolic_immersion(ast: PrepotentialAst, z) -> np.ndarray:
    """The graph immersion (x, y, k) realizing the domain as a hypersurface."""
    s = domain_sample(ast, z)
    return np.concatenate([s.flat, [s.k]])


# ---------------------------------------------------------------------------
# Flat chart as a coordinate system
# ---------------------------------------------------------------------------


def invert_flat_coords(ast: PrepotentialAst, target, z_init, max_steps: int = 50) -> np.ndarray:
    """Newton-invert the flat coordinate map near ``z_init``.

    Returns z with |flat(z) - target| <= 1e-12 * (1 + |target|).
    """
    target = np.asarray(target, dtype=float)
    tol = 1e-12 * (1.0 + float(np.linalg.norm(target)))
    w = to_real(np.asarray(z_init, dtype=complex))
    m = ast.n_vars
    for _ in range(max_steps):
        try:
            jet = eval_jet(ast, to_complex(w), 2)
        except EvaluationSingularity as exc:
            raise NoConvergence(f"hit a singular point during Newton: {exc}") from exc
        f1 = jet.deriv(1)
        tau = jet.deriv(2)
        flat = np.concatenate([w[:m], f1.real])
        res = flat - target
        if np.linalg.norm(res) <= tol:
            return to_complex(w)
        jac = np.zeros((2 * m, 2 * m))
        jac[:m, :m] = np.eye(m)
        jac[m:, :m] = tau.real
        jac[m:, m:] = -np.imag(tau)
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise DegenerateMetric("flat-coordinate Jacobian is singular") from exc
        if not np.all(np.isfinite(step)):
            raise DegenerateMetric("flat-coordinate Jacobian is numerically singular")
        w = w - step
    raise NoConvergence(f"Newton did not reach tolerance {tol:.1e} in {max_steps} steps")


def _k_real_hessian(ast: PrepotentialAst, sample: DomainSample) -> np.ndarray:
    """Real-frame Hessian of k, assembled from the order-3 jet."""
    z = sample.z
    m = sample.m
    f3 = eval_jet(ast, z, 3).deriv(3)
    # A_jl = d2k/dz_j dz_l = (1/4i) sum_i F3_ijl conj(z_i);  B = N/2 is real.
    A = -0.25j * np.einsum("ijl,i->jl", f3, np.conj(z))
    N = np.real(sample.h)
    H = np.zeros((2 * m, 2 * m))
    H[:m, :m] = 2.0 * A.real + N
    H[:m, m:] = -2.0 * A.imag
    H[m:, :m] = -2.0 * A.imag
    H[m:, m:] = -2.0 * A.real + N
    return H


def flat_hessian_of_k(ast: PrepotentialAst, z) -> np.ndarray:
    """Hessian of k with respect to the flat chart (analytic chain rule)."""
    s = domain_sample(ast, z)
    H_w = _k_real_hessian(ast, s)
    jac_inv = np.linalg.inv(s.flat_jac)
    grad_flat = jac_inv.T @ s.dk
    corrected = H_w - np.einsum("c,cab->ab", grad_flat, s.flat_hess)
    return jac_inv.T @ corrected @ jac_inv


def flat_hessian_fd(ast: PrepotentialAst, z, step: float = 1e-4) -> np.ndarray:
    """Finite-difference oracle for :func:`flat_hessian_of_k`.

    Central second differences of k along the flat chart, with every chart
    point realized through :func:`invert_flat_coords`.
    """
    z = np.asarray(z, dtype=complex)
    w0 = domain_sample(ast, z).flat
    n = w0.size

    def k_at(w):
        return kahler_potential(ast, invert_flat_coords(ast, w, z))

    k0 = k_at(w0)
    H = np.zeros((n, n))
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = step
        H[a, a] = (k_at(w0 + ea) - 2.0 * k0 + k_at(w0 - ea)) / step**2
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = step
            val = (
                k_at(w0 + ea + eb)
                - k_at(w0 + ea - eb)
                - k_at(w0 - ea + eb)
                + k_at(w0 - ea - eb)
            ) / (4.0 * step**2)
            H[a, b] = H[b, a] = val
    return H


# ---------------------------------------------------------------------------
# Residual checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MongeAmpereReport:
    values: tuple
    rel_spread: float
    skipped: tuple


def monge_ampere_spread(ast: PrepotentialAst, samples) -> MongeAmpereReport:
    """|det| of the flat Hessian of k over samples, and its relative spread."""
    values = []
    skipped = []
    for idx, z in enumerate(samples):
        try:
            values.append(abs(float(np.linalg.det(flat_hessian_of_k(ast, z)))))
        except (InadmissiblePoint, DegenerateMetric, EvaluationSingularity):
            skipped.append(idx)
    if len(values) < 2:
        return MongeAmpereReport(tuple(values), 0.0, tuple(skipped))
    arr = np.array(values)
    rel = float((arr.max() - arr.min()) / arr.mean())
    return MongeAmpereReport(tuple(values), rel, tuple(skipped))


def lemma1_residuals(ast: PrepotentialAst, z) -> dict:
    """Residuals of h(xi,.) = 2 dbar k, g(xi,.) = dk, g(xi,xi) = 2k."""
    s = domain_sample(ast, z)
    zc = s.z
    jet = eval_jet(ast, zc, 2)
    dkz = _dk_z(jet.deriv(2), jet.deriv(1), zc)
    h_xi = s.h @ zc                        # components of h(xi, .) in dzbar
    r1 = float(np.linalg.norm(h_xi - 2.0 * np.conj(dkz)))
    xi = s.xi
    r2 = float(np.linalg.norm(s.g @ xi - s.dk))
    r3 = abs(float(xi @ s.g @ xi) - 2.0 * s.k)
    return {"r1": r1, "r2": r2, "r3": r3}


def xi_flat_residual(ast: PrepotentialAst, z) -> float:
    """Position-field check: flat_jac . xi equals the flat coordinates."""
    s = domain_sample(ast, z)
    return float(np.linalg.norm(s.flat_jac @ s.xi - s.flat)) / (1.0 + float(np.linalg.norm(s.flat)))


def metric_scaling_residual(ast: PrepotentialAst, z, lam: float = 2.0) -> float:
    """Cone isometry: g_{lam z}(lam X, lam X) = lam^2 g_z(X, X)."""
    g0 = domain_sample(ast, z).g
    g1 = domain_sample(ast, lam * np.asarray(z, dtype=complex)).g
    scale = 1.0 + float(np.max(np.abs(g0)))
    return float(np.max(np.abs(g1 - g0))) / scale


def chart_matrix_derivative(field, w0, step: float) -> np.ndarray:
    """Central differences of a matrix-valued chart field along every axis.

    Returns D with D[a] = d(field)/dw_a at w0.
    """
    n = w0.size
    out = None
    for a in range(n):
        e = np.zeros(n)
        e[a] = step
        hi = np.asarray(field(w0 + e), dtype=float)
        lo = np.asarray(field(w0 - e), dtype=float)
        if out is None:
            out = np.zeros((n,) + hi.shape)
        out[a] = (hi - lo) / (2.0 * step)
    return out


def antisymmetrized_chart_derivative(field, w0, step: float) -> float:
    """max over (a, b, c) of |d_a field[c, b] - d_b field[c, a]|.

    Vanishing of this residual for the pushforward of J is the special
    Kahler condition in flat coordinates.
    """
    D = chart_matrix_derivative(field, w0, step)
    # D[a, c, b] = d_a J^c_b; antisymmetrize in (a, b).
    anti = D - np.transpose(D, (2, 1, 0))
    return float(np.max(np.abs(anti)))


def _pushforward_J(ast, w, seed):
    s = domain_sample(ast, invert_flat_coords(ast, w, seed))
    return s.flat_jac @ s.J @ np.linalg.inv(s.flat_jac)


def dnabla_J_residual(ast: PrepotentialAst, z, step: float = 1e-4) -> float:
    """Residual of d^nabla J = 0, via the flat-chart parametrization of J."""
    z = np.asarray(z, dtype=complex)
    w0 = domain_sample(ast, z).flat
    h = step * (1.0 + float(np.linalg.norm(w0)))
    return antisymmetrized_chart_derivative(lambda w: _pushforward_J(ast, w, z), w0, h)


def omega_parallel_residual(ast: PrepotentialAst, z, step: float = 1e-4) -> float:
    """Max chart derivative of the pushforward of omega (should vanish)."""
    z = np.asarray(z, dtype=complex)
    w0 = domain_sample(ast, z).flat
    h = step * (1.0 + float(np.linalg.norm(w0)))

    def omega_flat(w):
        s = domain_sample(ast, invert_flat_coords(ast, w, z))
        jac_inv = np.linalg.inv(s.flat_jac)
        return jac_inv.T @ s.omega @ jac_inv

    return float(np.max(np.abs(chart_matrix_derivative(omega_flat, w0, h))))


def d_eta_residual(ast: PrepotentialAst, z, step: float = 1e-4) -> float:
    """Residual of d(eta) = 2*omega in the flat chart.

    eta = omega(xi, .) is realized as a chart covector field through the
    inverse coordinate map, so the check exercises both the parallelism of
    omega and the position-field property of xi.
    """
    z = np.asarray(z, dtype=complex)
    s0 = domain_sample(ast, z)
    w0 = s0.flat
    h = step * (1.0 + float(np.linalg.norm(w0)))

    def eta_flat(w):
        s = domain_sample(ast, invert_flat_coords(ast, w, z))
        return np.linalg.solve(s.flat_jac.T, s.eta())

    D = chart_matrix_derivative(eta_flat, w0, h)  # D[a, b] = d_a eta_b
    d_eta = D - D.T
    jac_inv = np.linalg.inv(s0.flat_jac)
    omega_flat = jac_inv.T @ s0.omega @ jac_inv
    return float(np.max(np.abs(d_eta - 2.0 * omega_flat)))
