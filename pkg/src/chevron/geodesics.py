"""Transition cost between the two de Gennes wells under the metric sqrt(W).

Three independent evaluations: the closed form stored on
:class:`~chevron.potentials.WellSpec`, quadrature along the great arc
through the north pole, and a shortest path on a refined icosphere graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .potentials import ParameterError, degennes_well, w_degennes_raw

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
DISCRETE_ORACLE = "discrete_oracle"


@dataclass(frozen=True)
class GeodesicResult:
    cost: float
    path: np.ndarray = field(repr=False)
    method: str
    edge_length: float = 0.0


def gamma_c(t, alpha):
    """Great arc from n- (t=0) through the north pole to n+ (t=1)."""
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) > 1):
        raise ValueError("t must lie in [0, 1]")
    s = 2 * alpha * np.asarray(t, dtype=float) - alpha
    return np.stack([np.sin(s), np.zeros_like(s), np.cos(s)])


def closed_form(sigma):
    well = degennes_well(sigma)
    path = gamma_c(np.linspace(0, 1, 65), well.alpha).T
    return GeodesicResult(well.c0, path, CLOSED_FORM)


def c0_quadrature(sigma):
    """Adaptive quadrature of ``sqrt(W(gamma_c(t))) |gamma_c'(t)|`` over ``[0, 1]``."""
    well = degennes_well(sigma)
    if well.alpha == 0:
        return 0.0

    def integrand(t):
        p = gamma_c(t, well.alpha)
        return np.sqrt(max(w_degennes_raw(p[0], p[1], p[2], well.sigma), 0.0)) * 2 * well.alpha

    # sqrt(W) vanishes like |t| at both ends; split at the symmetric midpoint
    a, _ = integrate.quad(integrand, 0.0, 0.5, epsabs=1e-13, epsrel=1e-12, limit=200)
    b, _ = integrate.quad(integrand, 0.5, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return a + b


_ICO_FACES = np.array(
    [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
     [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
     [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
     [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
)


def _edges(faces):
    e = np.sort(np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    return uniq, inv.ravel()


@lru_cache(maxsize=8)
def icosphere(level):
    """Vertices and faces of the icosahedron subdivided ``level`` times.

    The base icosahedron is in the orientation where the plane ``y = 0``
    is a mirror plane, so the arc ``gamma_c`` is reflected onto itself.
    """
    t = (1 + 5**0.5) / 2
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = _ICO_FACES
    for _ in range(level):
        uniq, inv = _edges(f)
        mid = v[uniq[:, 0]] + v[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1)[:, None]
        nv = len(v)
        v = np.vstack([v, mid])
        nf = len(f)
        a, b, c = inv[:nf] + nv, inv[nf : 2 * nf] + nv, inv[2 * nf :] + nv
        f = np.vstack([np.c_[f[:, 0], a, c], np.c_[f[:, 1], b, a], np.c_[f[:, 2], c, b], np.c_[a, b, c]])
    return v, f


@lru_cache(maxsize=8)
def _steiner_graph(level):
    """Icosphere vertices plus one node per edge midpoint, fully connected per face."""
    v, f = icosphere(level)
    uniq, inv = _edges(f)
    mid = v[uniq[:, 0]] + v[uniq[:, 1]]
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    points = np.vstack([v, mid])
    nf = len(f)
    per_face = np.stack([f[:, 0], f[:, 1], f[:, 2]] + [len(v) + inv[k * nf : (k + 1) * nf] for k in range(3)], axis=1)
    a, b = np.triu_indices(per_face.shape[1], k=1)
    pairs = np.sort(np.stack([per_face[:, a].ravel(), per_face[:, b].ravel()], axis=1), axis=1)
    pairs = np.unique(pairs, axis=0)
    edge_length = float(np.arccos(np.clip(v[f[0, 0]] @ v[f[0, 1]], -1, 1)))
    return points, pairs, edge_length


def discrete_shortest_path(sigma, mesh_level):
    """Dijkstra shortest path from n- to n+ on a refined icosphere graph.

    Edge weight is ``sqrt(W(midpoint)) * chord``.  Each icosphere edge
    carries an extra midpoint node and all six nodes of a face are
    mutually connected, which keeps the graph metric close to the
    continuum one.  The exact wells are added as nodes linked to every
    graph node within 1.5 edge lengths.
    """
    if mesh_level < 3:
        raise ParameterError(f"mesh_level must be >= 3, got {mesh_level}")
    well = degennes_well(sigma)
    if well.c0 == 0:
        p = well.n_plus
        return GeodesicResult(0.0, np.stack([p, p]), DISCRETE_ORACLE, 0.0)
    points, pairs, h = _steiner_graph(int(mesh_level))
    nm, npl = well.n_minus, well.n_plus
    tree = cKDTree(points)
    extra = []
    i_minus, i_plus = len(points), len(points) + 1
    for idx, q in ((i_minus, nm), (i_plus, npl)):
        near = tree.query_ball_point(q, 1.5 * h)
        if not near:
            raise ParameterError("mesh too coarse to resolve the well neighborhoods")
        extra.append(np.stack([np.full(len(near), idx), np.asarray(near)], axis=1))
    allp = np.vstack([points, nm, npl])
    edges = np.vstack([pairs] + extra)
    i, j = edges[:, 0], edges[:, 1]
    mid = allp[i] + allp[j]
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    w = np.sqrt(np.maximum(w_degennes_raw(mid[:, 0], mid[:, 1], mid[:, 2], well.sigma), 0.0))
    w = w * np.linalg.norm(allp[i] - allp[j], axis=1)
    graph = coo_matrix((w, (i, j)), shape=(len(allp), len(allp))).tocsr()
    dist, pred = dijkstra(graph, directed=False, indices=i_minus, return_predecessors=True)
    path = [i_plus]
    while path[-1] != i_minus:
        path.append(pred[path[-1]])
    return GeodesicResult(float(dist[i_plus]), allp[path[::-1]], DISCRETE_ORACLE, h)
