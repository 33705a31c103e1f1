"""Patch-local and global C1-conforming quasi-interpolation.

The patch-local projector starts from the tensor projection Q and adds, for
every side, two correction terms that replace the trace and the outward
normal derivative on that side by dedicated edge projections:

    value:   P0 = endpoint projector of the trace           (in S_{p,k+1})
    normal:  P1 = alpha * proj(crossing derivative) - beta * (tangential P0)'
             with proj the crossing-derivative projector onto S_{p-1,k}

Each correction is transported into the patch interior by a boundary-bubble
extension that leaves the data on the other three sides untouched.  Gluing
the per-patch projections of the pullbacks then yields a globally C1 function
whenever the gluing data certifies the geometry.

Sign convention: the order-1 extensions carry a negated bubble factor so
that the *outward* normal derivative of the extension restricted to its own
side is exactly the extended data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (
    ScalarField2D,
    directional_edge_field,
    pullback,
    restrict_to_edge,
)
from .geometry import (
    CORNERS,
    EDGE_AXIS,
    EDGE_PARAM_SIGN,
    MultiPatch,
    Patch,
    edge_coords,
    edge_parameter_map,
)
from .gluing import EdgeGluing, GluingData, crossing_direction
from .ritz1d import (
    bubble,
    pi_cross_functionals,
    pi_star_functionals,
    reflected_bubble_spline,
)
from .splines import UniSpline, UniSplineSpace, derivative, embed, multiply_by_linear
from .tensor import (
    TensorSpline,
    TensorSplineSpace,
    normal_derivative_trace,
    tensor_project_Q,
    trace,
)

__all__ = [
    "EdgeCorrection",
    "PatchProjection",
    "GlobalProjection",
    "extend",
    "edge_projector_P0",
    "edge_projector_P1",
    "patch_project",
    "global_project",
    "check_conformity",
    "ConformityReport",
]


@dataclass
class EdgeCorrection:
    side: int
    sigma: int
    edge_spline: UniSpline
    extension: TensorSpline

    @property
    def magnitude(self) -> float:
        return float(np.max(np.abs(self.extension.coefficients)))


@dataclass
class PatchProjection:
    index: int
    spline: TensorSpline
    corrections: list[EdgeCorrection]


@dataclass
class GlobalProjection:
    multipatch: MultiPatch
    gluing: GluingData
    patches: list[PatchProjection]
    field: ScalarField2D
    degree: int
    smoothness: int


# -- extension operators --------------------------------------------------------


def _bubble_factor(j: int, sigma: int, p: int, partitions) -> UniSpline:
    """The univariate bubble factor of side j's extension, own axis."""
    Z1, Z2 = partitions
    if j == 1:
        return bubble(p, Z2, sigma).spline
    if j == 2:
        return reflected_bubble_spline(p, Z1, sigma)
    if j == 3:
        return reflected_bubble_spline(p, Z2, sigma)
    if j == 4:
        return bubble(p, Z1, sigma).spline
    raise ValueError(f"side index must be 1..4, got {j}")


def extend(j: int, sigma: int, g: UniSpline, partitions, p: int, k: int
           ) -> TensorSpline:
    """Extension of edge data ``g`` from side ``j`` into the patch.

    The result has trace ``g`` (sigma=0) or outward normal derivative ``g``
    (sigma=1) on side j, and vanishing value and normal derivative on the
    other three sides.
    """
    if sigma not in (0, 1):
        raise ValueError("sigma must be 0 or 1")
    Z1, Z2 = partitions
    tangential = UniSplineSpace(p, k, Z1 if EDGE_AXIS[j] == 0 else Z2)
    gc = embed(g, tangential).coefficients
    bub = _bubble_factor(j, sigma, p, partitions)
    normal_space = UniSplineSpace(p, k, Z2 if EDGE_AXIS[j] == 0 else Z1)
    bc = embed(bub, normal_space).coefficients
    if sigma == 1:
        bc = -bc
    if EDGE_AXIS[j] == 0:
        grid = np.outer(gc, bc)
        space = TensorSplineSpace(tangential, normal_space)
    else:
        grid = np.outer(bc, gc)
        space = TensorSplineSpace(normal_space, tangential)
    return TensorSpline(space, grid)


# -- edge projectors ---------------------------------------------------------------


def edge_projector_P0(u: ScalarField2D, j: int, p: int, k: int, partition,
                      nq: int | None = None) -> UniSpline:
    """Endpoint-interpolating projection of the side-j trace, in S_{p,k+1}."""
    return pi_star_functionals(p, k, partition, nq).apply(restrict_to_edge(u, j))


def edge_projector_P1(u: ScalarField2D, j: int, gluing: EdgeGluing, p: int,
                      k: int, partition, P0: UniSpline,
                      nq: int | None = None) -> UniSpline:
    """Normal-derivative edge projection in S_{p,k}.

    alpha * Ritz_2(crossing derivative of u) minus beta times the tangential
    derivative of P0, with the tangential orientation sign of the side.
    """
    crossing = directional_edge_field(u, j, gluing.alpha, gluing.beta)
    w = pi_cross_functionals(p, k, partition, nq).apply(crossing)
    t1 = multiply_by_linear(w, gluing.alpha.a0, gluing.alpha.a1)
    dP0 = derivative(P0)
    t2 = multiply_by_linear(dP0, gluing.beta.a0, gluing.beta.a1)
    sign = EDGE_PARAM_SIGN[j]
    return UniSpline(t1.space, t1.coefficients - sign * t2.coefficients)


# -- patch projector ------------------------------------------------------------------


def patch_project(patch: Patch, u: ScalarField2D, gluing: dict, p: int, k: int,
                  nq: int | None = None, index: int = 0) -> PatchProjection:
    """The patch-local C1 quasi-interpolant of a parametric field.

    ``gluing`` maps each side 1..4 to its :class:`EdgeGluing`.  Requires
    3 <= k+2 <= p and grid sizes at most 1/(p+1) in both directions.
    """
    if not 3 <= k + 2 <= p:
        raise ValueError(f"need 3 <= k+2 <= p, got k={k}, p={p}")
    Z1, Z2 = patch.partitions
    for Z in (Z1, Z2):
        if Z.grid_size > 1.0 / (p + 1) + 1e-14:
            raise ValueError(
                f"grid size {Z.grid_size:.6g} exceeds 1/(p+1) = {1 / (p + 1):.6g}"
            )
    V = TensorSplineSpace(UniSplineSpace(p, k, Z1), UniSplineSpace(p, k, Z2))
    Q = tensor_project_Q(V, u, nq)

    P0 = {
        j: edge_projector_P0(u, j, p, k, patch.side_partition(j), nq)
        for j in (1, 2, 3, 4)
    }
    result = Q
    corrections = []
    for sigma in (0, 1):
        for j in (1, 2, 3, 4):
            side_space = V.side_space(j)
            if sigma == 0:
                f_j = embed(P0[j], side_space) - trace(Q, j)
            else:
                P1 = edge_projector_P1(u, j, gluing[j], p, k,
                                       patch.side_partition(j), P0[j], nq)
                f_j = embed(P1, side_space) - normal_derivative_trace(Q, j)
            ext = extend(j, sigma, f_j, patch.partitions, p, k)
            corrections.append(EdgeCorrection(j, sigma, f_j, ext))
            result = result + ext
    return PatchProjection(index, result, corrections)


# -- global projector -------------------------------------------------------------------


def global_project(mp: MultiPatch, gluing: GluingData, u: ScalarField2D,
                   p: int, k: int, nq: int | None = None,
                   force: bool = False) -> GlobalProjection:
    """Patch-wise projection of the pullbacks of a physical field.

    Refuses geometries whose gluing certification failed unless ``force``.
    """
    if gluing.reports and not gluing.certified and not force:
        bad = [r for r in gluing.reports if not r.passed]
        raise ValueError(
            f"geometry is not certified AS-G1 ({len(bad)} interface(s) failed); "
            "pass force=True to project anyway"
        )
    projections = []
    for i, patch in enumerate(mp.patches):
        uhat = pullback(u, patch.gmap)
        projections.append(
            patch_project(patch, uhat, gluing.for_patch(i), p, k, nq, index=i)
        )
    return GlobalProjection(mp, gluing, projections, u, p, k)


# -- conformity verification ---------------------------------------------------------


@dataclass
class InterfaceConformity:
    left: tuple[int, int]
    right: tuple[int, int]
    value_jump: float
    value_scale: float
    d_jump: float
    d_scale: float

    @property
    def relative_value_jump(self) -> float:
        return self.value_jump / max(self.value_scale, 1e-12)

    @property
    def relative_d_jump(self) -> float:
        return self.d_jump / max(self.d_scale, 1e-12)


@dataclass
class VertexConformity:
    location: tuple[float, float]
    members: list[tuple[int, int]]
    c2_defect: float
    scale: float

    @property
    def relative_defect(self) -> float:
        return self.c2_defect / max(self.scale, 1e-12)


@dataclass
class BoundaryConformity:
    edge: tuple[int, int]
    input_trace_sup: float
    projected_trace_sup: float
    input_d_sup: float
    projected_d_sup: float


@dataclass
class ConformityReport:
    interfaces: list[InterfaceConformity] = field(default_factory=list)
    vertices: list[VertexConformity] = field(default_factory=list)
    boundaries: list[BoundaryConformity] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "interfaces": [
                {
                    "left": list(r.left),
                    "right": list(r.right),
                    "value_jump": r.value_jump,
                    "value_jump_relative": r.relative_value_jump,
                    "d_derivative_jump": r.d_jump,
                    "d_derivative_jump_relative": r.relative_d_jump,
                }
                for r in self.interfaces
            ],
            "vertices": [
                {
                    "location": list(v.location),
                    "patch_corners": [list(m) for m in v.members],
                    "c2_defect": v.c2_defect,
                    "c2_defect_relative": v.relative_defect,
                }
                for v in self.vertices
            ],
            "boundary_edges": [
                {
                    "edge": list(b.edge),
                    "input_trace_sup": b.input_trace_sup,
                    "projected_trace_sup": b.projected_trace_sup,
                    "input_d_derivative_sup": b.input_d_sup,
                    "projected_d_derivative_sup": b.projected_d_sup,
                }
                for b in self.boundaries
            ],
        }


def _d_derivative_on_edge(proj: TensorSpline, glue: EdgeGluing, j: int, t):
    x1, x2 = edge_coords(j, t)
    d = crossing_direction(glue, j)(t)
    return d[..., 0] * proj(x1, x2, 1, 0) + d[..., 1] * proj(x1, x2, 0, 1)


def _physical_c2_data(patch: Patch, spline: TensorSpline, corner):
    x1 = np.asarray(corner[0])
    x2 = np.asarray(corner[1])
    J = np.stack(
        [patch.gmap.derivative(x1, x2, 1, 0), patch.gmap.derivative(x1, x2, 0, 1)],
        axis=-1,
    )
    Jinv = np.linalg.inv(J)
    ghat = np.array([spline(x1, x2, 1, 0), spline(x1, x2, 0, 1)])
    grad = Jinv.T @ ghat
    Hhat = np.array(
        [
            [spline(x1, x2, 2, 0), spline(x1, x2, 1, 1)],
            [spline(x1, x2, 1, 1), spline(x1, x2, 0, 2)],
        ]
    )
    G2 = {
        (a, b): patch.gmap.derivative(x1, x2, a, b)
        for a, b in ((2, 0), (1, 1), (0, 2))
    }
    corr = np.zeros((2, 2))
    for (a, b), vec in G2.items():
        contrib = grad[0] * vec[0] + grad[1] * vec[1]
        if (a, b) == (2, 0):
            corr[0, 0] += contrib
        elif (a, b) == (0, 2):
            corr[1, 1] += contrib
        else:
            corr[0, 1] += contrib
            corr[1, 0] += contrib
    H = Jinv.T @ (Hhat - corr) @ Jinv
    value = float(spline(x1, x2))
    return value, grad, H


def check_conformity(gp: GlobalProjection, samples: int = 50) -> ConformityReport:
    """Sampled interface, vertex, and boundary conformity of a projection."""
    mp = gp.multipatch
    report = ConformityReport()
    t = np.linspace(0.0, 1.0, samples)

    grid = np.linspace(0.0, 1.0, 9)
    GX, GY = np.meshgrid(grid, grid, indexing="ij")

    def patch_scales(idx):
        f = gp.patches[idx].spline
        vs = float(np.max(np.abs(f(GX, GY))))
        gs = max(float(np.max(np.abs(f(GX, GY, 1, 0)))),
                 float(np.max(np.abs(f(GX, GY, 0, 1)))))
        return vs, gs

    for iface in mp.interfaces:
        (i, j), (ii, jj) = iface.left, iface.right
        s = edge_parameter_map(iface, t)
        fl = gp.patches[i].spline
        fr = gp.patches[ii].spline
        xl, yl = edge_coords(j, t)
        xr, yr = edge_coords(jj, s)
        value_jump = float(np.max(np.abs(fl(xl, yl) - fr(xr, yr))))
        dl = _d_derivative_on_edge(fl, gp.gluing[i, j], j, t)
        dr = _d_derivative_on_edge(fr, gp.gluing[ii, jj], jj, s)
        d_jump = float(np.max(np.abs(dl + dr)))
        vsl, gsl = patch_scales(i)
        vsr, gsr = patch_scales(ii)
        report.interfaces.append(
            InterfaceConformity((i, j), (ii, jj), value_jump, max(vsl, vsr),
                                d_jump, max(gsl, gsr))
        )

    # vertices: cluster patch corners by physical location
    diam = mp.domain_diameter()
    tol = 1e-7 * max(diam, 1e-300)
    entries = []
    for i, patch in enumerate(mp.patches):
        for ell, corner in CORNERS.items():
            pt = patch.gmap.point(np.asarray(corner[0]), np.asarray(corner[1]))
            entries.append((i, ell, tuple(float(v) for v in np.asarray(pt))))
    clusters: list[list] = []
    for entry in entries:
        for cluster in clusters:
            ref = cluster[0][2]
            if np.hypot(entry[2][0] - ref[0], entry[2][1] - ref[1]) <= tol:
                cluster.append(entry)
                break
        else:
            clusters.append([entry])
    for members in clusters:
        if len(members) < 2:
            continue
        datas = []
        for i, ell, loc in members:
            value, grad, H = _physical_c2_data(
                mp.patches[i], gp.patches[i].spline, CORNERS[ell]
            )
            datas.append(np.concatenate([[value], grad, H.ravel()]))
        datas = np.array(datas)
        defect = float(np.max(np.abs(datas - datas[0])))
        scale = max(1.0, float(np.max(np.abs(datas))))
        report.vertices.append(
            VertexConformity(members[0][2], [(m[0], m[1]) for m in members],
                             defect, scale)
        )

    # boundary edges: record input and projected trace magnitudes
    for (i, j) in mp.boundary_edges:
        patch = mp.patches[i]
        x1, x2 = edge_coords(j, t)
        pts = patch.gmap.point(x1, x2)
        uvals = gp.field(pts[..., 0], pts[..., 1])
        uhat = pullback(gp.field, patch.gmap)
        glue = gp.gluing[i, j]
        dfield = directional_edge_field(uhat, j, glue.alpha, glue.beta)
        proj = gp.patches[i].spline
        report.boundaries.append(
            BoundaryConformity(
                (i, j),
                float(np.max(np.abs(uvals))),
                float(np.max(np.abs(proj(x1, x2)))),
                float(np.max(np.abs(dfield(t)))),
                float(np.max(np.abs(_d_derivative_on_edge(proj, glue, j, t)))),
            )
        )
    return report
