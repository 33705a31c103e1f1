"""Gluing-data computation and AS-G1 certification for patch interfaces.

For an interface pairing side j of patch i (edge parameter xi) with side J of
patch I, define on the left parameter

    D1(xi) = det grad(G_i)  on the left edge,
    D2(xi) = det grad(G_I)  at the matched point,
    D3(xi) = det [ N_J(e(xi)), N_j(xi) ],

where N is the outward cross-derivative (n . grad)G of the respective side.
The parameterization is AS-G1 along the interface when there are linear
alpha > 0 and beta, one pair per side, with

    D1 * (alpha_J o e) = D2 * alpha_j,
    D1 * (beta_J o e) - D2 * beta_j = D3.

These are the constraints induced by requiring the crossing directions
d = (n + beta t) / alpha to push forward to opposite vectors on the two
sides; boundary edges carry alpha = 1, beta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Interface,
    MultiPatch,
    NORMALS,
    TANGENTS,
    edge_coords,
    edge_parameter_map,
)

__all__ = [
    "LinearFunction",
    "EdgeGluing",
    "AsG1Report",
    "GluingData",
    "interface_determinants",
    "recover_gluing",
    "fit_linear_gluing",
    "recover_all",
    "crossing_direction",
    "g1_compatibility_residual",
]


@dataclass(frozen=True)
class LinearFunction:
    """The linear function a0 + a1 * x on [0, 1]."""

    a0: float
    a1: float

    def __call__(self, x):
        return self.a0 + self.a1 * np.asarray(x, dtype=float)

    @property
    def slope(self) -> float:
        return self.a1

    @staticmethod
    def from_endpoints(v0: float, v1: float) -> "LinearFunction":
        return LinearFunction(float(v0), float(v1 - v0))

    def endpoints(self) -> tuple[float, float]:
        return self.a0, self.a0 + self.a1

    def flipped(self) -> "LinearFunction":
        """The composition with x -> 1 - x."""
        return LinearFunction(self.a0 + self.a1, -self.a1)


ONE = LinearFunction(1.0, 0.0)
ZERO = LinearFunction(0.0, 0.0)


@dataclass(frozen=True)
class EdgeGluing:
    """Linear gluing data (alpha, beta) of one patch side, own parameter."""

    alpha: LinearFunction = ONE
    beta: LinearFunction = ZERO
    boundary: bool = False


@dataclass
class AsG1Report:
    interface: Interface
    residual_alpha: float
    residual_beta: float
    alpha_positive: bool
    normalization_min: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.alpha_positive
            and self.residual_alpha <= self.tol
            and self.residual_beta <= self.tol
        )


@dataclass
class GluingData:
    """Per-edge gluing functions for a whole multi-patch geometry."""

    edges: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)

    def __getitem__(self, key) -> EdgeGluing:
        return self.edges[key]

    def for_patch(self, i: int) -> dict:
        return {j: self.edges[i, j] for j in (1, 2, 3, 4)}

    @property
    def certified(self) -> bool:
        return all(r.passed for r in self.reports)


# -- determinants -----------------------------------------------------------------


def _edge_cross_and_det(patch, j, t):
    """Outward cross-derivative N_j and Jacobian determinant on side j."""
    x1, x2 = edge_coords(j, t)
    d1 = patch.gmap.derivative(x1, x2, 1, 0)
    d2 = patch.gmap.derivative(x1, x2, 0, 1)
    n = NORMALS[j]
    N = n[0] * d1 + n[1] * d2
    det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    return N, det


def interface_determinants(mp: MultiPatch, iface: Interface, xi):
    """(D1, D2, D3) sampled at left-edge parameters ``xi``."""
    xi = np.asarray(xi, dtype=float)
    (i, j), (ii, jj) = iface.left, iface.right
    eta = edge_parameter_map(iface, xi)
    N_left, D1 = _edge_cross_and_det(mp.patches[i], j, xi)
    N_right, D2 = _edge_cross_and_det(mp.patches[ii], jj, eta)
    D3 = N_right[..., 0] * N_left[..., 1] - N_right[..., 1] * N_left[..., 0]
    return D1, D2, D3


def _chebyshev_samples(m: int = 64) -> np.ndarray:
    k = np.arange(m)
    return 0.5 * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * m)))


def _sup_residuals(mp, iface, alpha_l, beta_l, alpha_r_left, beta_r_left,
                   n_dense: int = 501):
    xi = np.linspace(0.0, 1.0, n_dense)
    D1, D2, D3 = interface_determinants(mp, iface, xi)
    scale = max(float(np.max(np.abs(D1))), float(np.max(np.abs(D2))),
                float(np.max(np.abs(D3))), 1e-300)
    res_a = float(np.max(np.abs(D1 * alpha_r_left(xi) - D2 * alpha_l(xi)))) / scale
    res_b = float(
        np.max(np.abs(D1 * beta_r_left(xi) - D2 * beta_l(xi) - D3))
    ) / scale
    return res_a, res_b, scale


def _to_right_parameter(fn: LinearFunction, iface: Interface) -> LinearFunction:
    return fn.flipped() if iface.reversed else fn


def recover_gluing(mp: MultiPatch, iface: Interface, tol: float = 1e-10):
    """Normalized gluing data of an interface, plus its AS-G1 report.

    The linear alpha pair minimizes the sampled maximum subject to the
    determinant proportionality (least squares over 64 Chebyshev samples)
    and min-normalization 1; the beta pair is the minimum-norm least-squares
    solution of the D3 constraint.  Near-constant alphas snap to constants.
    """
    xi = _chebyshev_samples(64)
    D1, D2, D3 = interface_determinants(mp, iface, xi)
    scale = max(float(np.max(np.abs(D1))), float(np.max(np.abs(D2))),
                float(np.max(np.abs(D3))), 1e-300)
    if np.any(D1 <= 0) or np.any(D2 <= 0):
        raise ValueError(
            "interface determinants must be positive (geometry not 2-regular "
            "along the interface)"
        )

    phi = np.stack([1.0 - xi, xi], axis=1)

    # alpha: D1 * alpha_R - D2 * alpha_L = 0 with linear unknowns
    ratio = D1 / D2
    alpha_positive = True
    if float(np.max(ratio) - np.min(ratio)) <= tol * float(np.max(np.abs(ratio))):
        c = float(np.mean(ratio))
        m = min(c, 1.0)
        aL = LinearFunction(c / m, 0.0)
        aR = LinearFunction(1.0 / m, 0.0)
    else:
        A = np.hstack([-D2[:, None] * phi, D1[:, None] * phi])
        _, _, Vt = np.linalg.svd(A)
        v = Vt[-1]
        if np.all(v < 0):
            v = -v
        if np.any(v <= 0):
            alpha_positive = False
            v = np.abs(v) + 1e-300
        m = float(np.min(v))
        v = v / m
        if abs(v[1] - v[0]) <= tol * max(abs(v[0]), abs(v[1])):
            v[0] = v[1] = 0.5 * (v[0] + v[1])
        if abs(v[3] - v[2]) <= tol * max(abs(v[2]), abs(v[3])):
            v[2] = v[3] = 0.5 * (v[2] + v[3])
        aL = LinearFunction.from_endpoints(v[0], v[1])
        aR = LinearFunction.from_endpoints(v[2], v[3])

    # beta: D1 * beta_R - D2 * beta_L = D3, minimum-norm least squares
    B = np.hstack([-D2[:, None] * phi, D1[:, None] * phi])
    b, *_ = np.linalg.lstsq(B, D3, rcond=None)
    b = np.where(np.abs(b) <= tol * scale, 0.0, b)
    bL = LinearFunction.from_endpoints(b[0], b[1])
    bR = LinearFunction.from_endpoints(b[2], b[3])

    res_a, res_b, _ = _sup_residuals(mp, iface, aL, bL, aR, bR)
    norm_min = min(min(aL.endpoints()), min(aR.endpoints()))
    report = AsG1Report(iface, res_a, res_b, alpha_positive, norm_min, tol)
    left = EdgeGluing(aL, bL)
    right = EdgeGluing(_to_right_parameter(aR, iface), _to_right_parameter(bR, iface))
    return left, right, report


def fit_linear_gluing(mp: MultiPatch, iface: Interface, lam_beta: float = 1e-6,
                      nq: int = 32):
    """Interpolatory linear gluing data for general (non-AS-G1) interfaces.

    The alphas interpolate the endpoint values of D1 and D2; the betas solve
    the regularized least-squares problem for the D3 constraint with its two
    endpoint values imposed exactly.  This construction does not reproduce
    normalized gluing data when the interface happens to be AS-G1.
    """
    ends = np.array([0.0, 1.0])
    D1e, D2e, D3e = interface_determinants(mp, iface, ends)
    if np.any(D1e <= 0) or np.any(D2e <= 0):
        raise ValueError("endpoint determinants must be positive")
    aL = LinearFunction.from_endpoints(D1e[0], D1e[1])
    aR = LinearFunction.from_endpoints(D2e[0], D2e[1])

    xg, wg = np.polynomial.legendre.leggauss(nq)
    xi = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    D1, D2, D3 = interface_determinants(mp, iface, xi)
    phi = np.stack([1.0 - xi, xi], axis=1)
    # combined function q = alpha_L * beta_R + alpha_R * beta_L, unknowns
    # x = (bL0, bL1, bR0, bR1) in endpoint form
    Psi = np.hstack([aR(xi)[:, None] * phi, aL(xi)[:, None] * phi])
    H = Psi.T @ (w[:, None] * Psi)
    g = Psi.T @ (w * D3)
    gram_phi = np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
    R = np.zeros((4, 4))
    R[:2, :2] = gram_phi
    R[2:, 2:] = gram_phi
    # constraints q(0) = D3(0), q(1) = D3(1)
    C = np.array([
        [aR(0.0), 0.0, aL(0.0), 0.0],
        [0.0, aR(1.0), 0.0, aL(1.0)],
    ])
    d = np.array([D3e[0], D3e[1]])
    kkt = np.zeros((6, 6))
    kkt[:4, :4] = 2.0 * (H + lam_beta * R)
    kkt[:4, 4:] = C.T
    kkt[4:, :4] = C
    rhs = np.concatenate([2.0 * g, d])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "constrained gluing fit is singular (degenerate determinants)"
        ) from exc
    bL_fit = sol[:2]
    bR_fit = sol[2:4]
    obj_data = float(np.sum(w * (Psi @ sol[:4] - D3) ** 2))
    obj = obj_data + lam_beta * float(sol[:4] @ (R @ sol[:4]))
    # The combined constraint orients beta_R with +D3 and beta_L with -D3
    # (the same convention as recover_gluing), so the left side flips sign.
    bL = LinearFunction.from_endpoints(-bL_fit[0], -bL_fit[1])
    bR = LinearFunction.from_endpoints(bR_fit[0], bR_fit[1])
    left = EdgeGluing(aL, bL)
    right = EdgeGluing(_to_right_parameter(aR, iface), _to_right_parameter(bR, iface))
    return left, right, {"objective": obj, "data_misfit": obj_data}


def recover_all(mp: MultiPatch, tol: float = 1e-10) -> GluingData:
    """Recovered gluing for all interfaces plus boundary defaults."""
    data = GluingData()
    for i in range(len(mp.patches)):
        for j in (1, 2, 3, 4):
            data.edges[i, j] = EdgeGluing(boundary=True)
    for iface in mp.interfaces:
        left, right, report = recover_gluing(mp, iface, tol)
        data.edges[iface.left] = left
        data.edges[iface.right] = right
        data.reports.append(report)
    return data


def boundary_gluing(mp: MultiPatch) -> GluingData:
    """Trivial gluing alpha=1, beta=0 on every edge (single-patch use)."""
    data = GluingData()
    for i in range(len(mp.patches)):
        for j in (1, 2, 3, 4):
            data.edges[i, j] = EdgeGluing(boundary=True)
    return data


def crossing_direction(gluing: EdgeGluing, j: int):
    """The parameter-domain direction d_j(xi) = (n_j + beta t_j) / alpha."""
    n = np.array(NORMALS[j])
    t = np.array(TANGENTS[j])

    def d(xi):
        xi = np.asarray(xi, dtype=float)
        a = gluing.alpha(xi)
        if np.any(a <= 0):
            raise ValueError("alpha must be positive on [0, 1]")
        return (n[..., :] + gluing.beta(xi)[..., None] * t[..., :]) / a[..., None]

    return d


def g1_compatibility_residual(mp: MultiPatch, iface: Interface,
                              left: EdgeGluing, right: EdgeGluing,
                              samples: int = 50):
    """sup |d_j . grad(G_i) + (d_J . grad(G_I)) o e| over the interface,
    normalized by the largest Jacobian entry encountered."""
    xi = np.linspace(0.0, 1.0, samples)
    eta = edge_parameter_map(iface, xi)
    (i, j), (ii, jj) = iface.left, iface.right

    def pushforward(patch, side, glue, t):
        x1, x2 = edge_coords(side, t)
        d1 = patch.gmap.derivative(x1, x2, 1, 0)
        d2 = patch.gmap.derivative(x1, x2, 0, 1)
        dvec = crossing_direction(glue, side)(t)
        return dvec[..., :1] * d1 + dvec[..., 1:] * d2, max(
            float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))
        )

    vl, s1 = pushforward(mp.patches[i], j, left, xi)
    vr, s2 = pushforward(mp.patches[ii], jj, right, eta)
    return float(np.max(np.abs(vl + vr))) / max(s1, s2, 1e-300)
