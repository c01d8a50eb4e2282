"""Clough-Tocher C1 cubic patches on triangles.

Each macro triangle (P1, P2, P3) is split at its centroid P4 into three
cubic Bezier micro-triangles. Control points are indexed by a 4-tuple
``(i, j, k, l)`` with ``i + j + k + l = 3`` counting the powers of the
barycentric weights of P1, P2, P3 and P4; a micro-triangle uses the ten
points whose index is zero in the slot of the vertex it leaves out.

Vertex control points come from node values and gradients. The point
next to the middle of each macro edge is fixed by requiring the derivative
along the edge normal to be linear along that edge; since the normal and
the end gradients are shared by both triangles at an edge, the surface is
C1 across macro edges. Interior points follow the usual averaging rules,
which make the three micro-patches join C1 inside the macro triangle.
"""

from itertools import product
from math import factorial

import numpy as np

MULTI_INDICES: tuple[tuple[int, int, int, int], ...] = tuple(
    idx for idx in product(range(4), repeat=4) if sum(idx) == 3
)
INDEX = {idx: pos for pos, idx in enumerate(MULTI_INDICES)}
MULTINOMIAL = np.array(
    [6.0 / np.prod([factorial(p) for p in idx]) for idx in MULTI_INDICES]
)

QUADRATIC_INDICES: tuple[tuple[int, int, int, int], ...] = tuple(
    idx for idx in product(range(3), repeat=4) if sum(idx) == 2
)
QUADRATIC_MULTINOMIAL = np.array(
    [2.0 / np.prod([factorial(p) for p in idx]) for idx in QUADRATIC_INDICES]
)


def _dot(gradient: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Directional derivative of every component: gradient (2, C) . vector (2,)."""
    return vector[0] * gradient[0] + vector[1] * gradient[1]


def _edge_point(
    pa: np.ndarray,
    pb: np.ndarray,
    p4: np.ndarray,
    c300: np.ndarray,
    c210: np.ndarray,
    c120: np.ndarray,
    c030: np.ndarray,
    c201: np.ndarray,
    c021: np.ndarray,
) -> np.ndarray:
    """Control point c111 of micro-triangle (pa, pb, p4).

    The derivative along the unit normal of edge (pa, pb) is a quadratic in
    Bernstein form with coefficients d0, d1, d2 (times 3). Setting
    d1 = (d0 + d2) / 2 makes it linear and leaves c111 as the only unknown.
    """
    edge = pb - pa
    normal = np.array([-edge[1], edge[0]]) / np.hypot(edge[0], edge[1])
    # normal = a_b (pb - pa) + a_4 (p4 - pa), a_a = -(a_b + a_4)
    basis = np.column_stack([pb - pa, p4 - pa])
    a_b, a_4 = np.linalg.solve(basis, normal)
    a_a = -(a_b + a_4)

    d0 = a_a * c300 + a_b * c210 + a_4 * c201
    d2 = a_a * c120 + a_b * c030 + a_4 * c021
    return ((d0 + d2) / 2.0 - a_a * c210 - a_b * c120) / a_4


def control_points(
    vertices: np.ndarray, values: np.ndarray, gradients: np.ndarray
) -> np.ndarray:
    """
    Bezier control points of one macro triangle.

    Args:
        vertices: (3, 2) vertex coordinates, counter-clockwise
        values: (3, C) node values
        gradients: (3, 2, C) node partial derivatives d/dx, d/dy

    Returns:
        (20, C) control points ordered as ``MULTI_INDICES``.
    """
    p1, p2, p3 = vertices
    p4 = vertices.mean(axis=0)
    f1, f2, f3 = values
    g1, g2, g3 = gradients

    c = {}
    c[3, 0, 0, 0] = f1
    c[0, 3, 0, 0] = f2
    c[0, 0, 3, 0] = f3

    c[2, 1, 0, 0] = f1 + _dot(g1, p2 - p1) / 3.0
    c[2, 0, 1, 0] = f1 + _dot(g1, p3 - p1) / 3.0
    c[1, 2, 0, 0] = f2 + _dot(g2, p1 - p2) / 3.0
    c[0, 2, 1, 0] = f2 + _dot(g2, p3 - p2) / 3.0
    c[1, 0, 2, 0] = f3 + _dot(g3, p1 - p3) / 3.0
    c[0, 1, 2, 0] = f3 + _dot(g3, p2 - p3) / 3.0

    # Tangent plane at each vertex, evaluated toward the centroid
    c[2, 0, 0, 1] = (c[3, 0, 0, 0] + c[2, 1, 0, 0] + c[2, 0, 1, 0]) / 3.0
    c[0, 2, 0, 1] = (c[0, 3, 0, 0] + c[1, 2, 0, 0] + c[0, 2, 1, 0]) / 3.0
    c[0, 0, 2, 1] = (c[0, 0, 3, 0] + c[1, 0, 2, 0] + c[0, 1, 2, 0]) / 3.0

    c[1, 1, 0, 1] = _edge_point(
        p1, p2, p4,
        c[3, 0, 0, 0], c[2, 1, 0, 0], c[1, 2, 0, 0], c[0, 3, 0, 0],
        c[2, 0, 0, 1], c[0, 2, 0, 1],
    )
    c[0, 1, 1, 1] = _edge_point(
        p2, p3, p4,
        c[0, 3, 0, 0], c[0, 2, 1, 0], c[0, 1, 2, 0], c[0, 0, 3, 0],
        c[0, 2, 0, 1], c[0, 0, 2, 1],
    )
    c[1, 0, 1, 1] = _edge_point(
        p3, p1, p4,
        c[0, 0, 3, 0], c[1, 0, 2, 0], c[2, 0, 1, 0], c[3, 0, 0, 0],
        c[0, 0, 2, 1], c[2, 0, 0, 1],
    )

    c[1, 0, 0, 2] = (c[1, 1, 0, 1] + c[1, 0, 1, 1] + c[2, 0, 0, 1]) / 3.0
    c[0, 1, 0, 2] = (c[1, 1, 0, 1] + c[0, 1, 1, 1] + c[0, 2, 0, 1]) / 3.0
    c[0, 0, 1, 2] = (c[1, 0, 1, 1] + c[0, 1, 1, 1] + c[0, 0, 2, 1]) / 3.0

    c[0, 0, 0, 3] = (c[1, 0, 0, 2] + c[0, 1, 0, 2] + c[0, 0, 1, 2]) / 3.0

    # No micro-triangle spans P1, P2 and P3 at once; this basis term is always 0
    c[1, 1, 1, 0] = np.zeros_like(f1)

    return np.stack([c[idx] for idx in MULTI_INDICES])


def split_barycentric(bary: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Macro barycentric (N, 3) -> micro weights (N, 4) and removed vertex (N,).

    With m = min(b), the point equals sum((b_i - m) P_i) + 3m P4, which
    puts it in the micro-triangle opposite the vertex holding the minimum.
    """
    removed = np.argmin(bary, axis=1)
    m = bary[np.arange(len(bary)), removed]
    weights = np.empty((len(bary), 4))
    weights[:, :3] = bary - m[:, None]
    weights[np.arange(len(bary)), removed] = 0.0
    weights[:, 3] = 3.0 * m
    return weights, removed


def bernstein(weights: np.ndarray) -> np.ndarray:
    """Cubic Bernstein basis (N, 20) at micro weights (N, 4)."""
    basis = np.empty((len(weights), len(MULTI_INDICES)))
    for pos, idx in enumerate(MULTI_INDICES):
        term = np.full(len(weights), MULTINOMIAL[pos])
        for slot, power in enumerate(idx):
            if power:
                term = term * weights[:, slot] ** power
        basis[:, pos] = term
    return basis


def evaluate(weights: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Value of the cubic at micro weights.

    Args:
        weights: (N, 4) micro weights
        points: (N, 20, C) control points of each point's macro triangle

    Returns:
        (N, C); terms are accumulated in a fixed order so a point gives the
        same bits whether evaluated alone or in a batch.
    """
    basis = bernstein(weights)
    out = np.zeros((len(weights), points.shape[2]))
    for pos in range(len(MULTI_INDICES)):
        out += basis[:, pos, None] * points[:, pos, :]
    return out


def weight_derivatives(weights: np.ndarray, points: np.ndarray) -> np.ndarray:
    """
    Partial derivatives of the cubic w.r.t. each of the 4 micro weights.

    Returns:
        (N, 4, C): 3 * sum over quadratic indices g of B2_g * c_{g + e_slot}.
    """
    n, _, components = points.shape
    out = np.zeros((n, 4, components))
    for q_pos, idx in enumerate(QUADRATIC_INDICES):
        term = np.full(n, QUADRATIC_MULTINOMIAL[q_pos])
        for slot, power in enumerate(idx):
            if power:
                term = term * weights[:, slot] ** power
        for slot in range(4):
            raised = list(idx)
            raised[slot] += 1
            out[:, slot, :] += 3.0 * term[:, None] * points[:, INDEX[tuple(raised)], :]
    return out
