"""Closed oriented triangulated surfaces.

Connectivity is stored as flat halfedge arrays (three halfedges per face,
halfedge 3*f + c runs from corner c to corner c+1 of face f).  Edges are
unordered vertex pairs carrying a fixed orientation from the smaller to the
larger vertex id; every 1-form value lives on that oriented edge.

Construction validates that the input describes a closed, connected,
orientable 2-manifold: boundary edges, non-manifold edges or vertices and
non-orientable gluings are rejected with the offending simplex attached to
the error.  Face orientations are made globally consistent by a breadth
first sweep, so OFF files with mixed windings load fine.
"""

from __future__ import annotations

from collections import deque
from importlib import resources

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, MeshError

_TRI_EPS = 1e-12


def _as_faces(faces):
    f = np.asarray(faces, dtype=np.int64)
    if f.ndim != 2 or f.shape[1] != 3:
        raise MeshError("faces must be an (F, 3) integer array")
    if f.size == 0:
        raise MeshError("empty face list")
    if f.min() < 0:
        raise MeshError("negative vertex index in face list")
    return np.ascontiguousarray(f)


def _orient_consistently(faces):
    """Flip faces so adjacent windings disagree across every shared edge.

    Raises MeshError on boundary edges, non-manifold edges and
    non-orientable input.  Returns the reoriented face array.
    """
    n_faces = len(faces)
    edge_inc = {}
    for f in range(n_faces):
        a, b, c = faces[f]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_inc.setdefault(key, []).append((f, 1 if u < v else -1))

    adjacency = [[] for _ in range(n_faces)]
    for key, inc in edge_inc.items():
        if len(inc) == 1:
            raise MeshError("boundary edge %s" % (key,), simplex=key)
        if len(inc) > 2:
            raise MeshError("non-manifold edge %s" % (key,), simplex=key)
        (f1, d1), (f2, d2) = inc
        adjacency[f1].append((f2, d1 * d2))
        adjacency[f2].append((f1, d1 * d2))

    flip = np.full(n_faces, -1, dtype=np.int8)
    flip[0] = 0
    queue = deque([0])
    seen = 1
    while queue:
        f = queue.popleft()
        for g, dd in adjacency[f]:
            # consistent orientation means the shared edge is traversed in
            # opposite directions, i.e. dd == -1 once flips are applied
            want = flip[f] if dd == -1 else 1 - flip[f]
            if flip[g] == -1:
                flip[g] = want
                queue.append(g)
                seen += 1
            elif flip[g] != want:
                raise MeshError("mesh is not orientable", simplex=g)
    if seen != n_faces:
        raise MeshError("mesh is not connected")

    out = faces.copy()
    flipped = flip == 1
    out[flipped] = out[flipped][:, ::-1]
    return out


class TriMesh:
    """Halfedge mesh of a closed connected oriented triangulated surface.

    Parameters
    ----------
    faces : (F, 3) int array
        Vertex triples.  Windings may be inconsistent; they are fixed.
    positions : (V, 3) float array, optional
        Embedding used for OFF/VTK output and for deriving edge lengths.
        Purely combinatorial meshes (e.g. the flat torus) carry None.
    """

    def __init__(self, faces, positions=None):
        faces = _as_faces(faces)
        if np.any(faces[:, 0] == faces[:, 1]) or np.any(faces[:, 1] == faces[:, 2]) \
                or np.any(faces[:, 2] == faces[:, 0]):
            bad = int(np.nonzero((faces[:, 0] == faces[:, 1])
                                 | (faces[:, 1] == faces[:, 2])
                                 | (faces[:, 2] == faces[:, 0]))[0][0])
            raise MeshError("face %d repeats a vertex" % bad, simplex=bad)

        self.n_vertices = int(faces.max()) + 1
        used = np.zeros(self.n_vertices, dtype=bool)
        used[faces.ravel()] = True
        if not used.all():
            raise MeshError("isolated vertex %d" % int(np.nonzero(~used)[0][0]))

        faces = _orient_consistently(faces)
        self.faces = faces
        self.n_faces = len(faces)

        if positions is not None:
            positions = np.asarray(positions, dtype=np.float64)
            if positions.shape != (self.n_vertices, 3):
                raise MeshError("positions must be (V, 3)")
        self.positions = positions

        self._build_halfedges()
        self._check_vertex_umbrellas()

        chi = self.euler_characteristic()
        if chi % 2 != 0 or chi > 2:
            raise MeshError("inconsistent Euler characteristic %d" % chi)

        self._d0_int = None
        self._d1_int = None

    # -- construction ------------------------------------------------------

    def _build_halfedges(self):
        F = self.n_faces
        faces = self.faces
        nh = 3 * F
        # halfedge 3f+c runs from corner c to corner c+1 of face f
        src = np.empty(nh, dtype=np.int64)
        dst = np.empty(nh, dtype=np.int64)
        for c in range(3):
            src[c::3] = faces[:, c]
            dst[c::3] = faces[:, (c + 1) % 3]
        self.he_src, self.he_dst = src, dst

        self.he_face = np.repeat(np.arange(F, dtype=np.int64), 3)
        base = 3 * (np.arange(nh, dtype=np.int64) // 3)
        self.he_next = base + (np.arange(nh) + 1) % 3
        self.he_prev = base + (np.arange(nh) + 2) % 3

        lookup = {}
        for h in range(nh):
            key = (src[h], dst[h])
            if key in lookup:
                raise MeshError("non-manifold edge %s" % (key,), simplex=key)
            lookup[key] = h
        twin = np.empty(nh, dtype=np.int64)
        for h in range(nh):
            other = lookup.get((dst[h], src[h]))
            if other is None:
                raise MeshError("boundary edge %s" % ((src[h], dst[h]),),
                                simplex=(int(src[h]), int(dst[h])))
            twin[h] = other
        self.he_twin = twin

        pairs = np.sort(np.stack([src, dst], axis=1), axis=1)
        edges, he_edge = np.unique(pairs, axis=0, return_inverse=True)
        self.edges = edges
        self.he_edge = he_edge.astype(np.int64)
        self.n_edges = len(edges)
        self.he_sign = np.where(src < dst, 1, -1).astype(np.int8)
        # representative halfedge running min -> max for each edge
        rep = np.full(self.n_edges, -1, dtype=np.int64)
        forward = np.nonzero(self.he_sign == 1)[0]
        rep[self.he_edge[forward]] = forward
        self.edge_he = rep

        out = np.full(self.n_vertices, -1, dtype=np.int64)
        for h in range(nh - 1, -1, -1):
            out[src[h]] = h
        self.v_out = out
        self.v_degree = np.bincount(src, minlength=self.n_vertices)

    def _check_vertex_umbrellas(self):
        for v in range(self.n_vertices):
            h0 = self.v_out[v]
            h = h0
            count = 0
            while True:
                count += 1
                if count > self.v_degree[v]:
                    break
                h = self.he_twin[self.he_prev[h]]
                if h == h0:
                    break
            if count != self.v_degree[v]:
                raise MeshError("non-manifold vertex %d" % v, simplex=v)

    # -- queries -----------------------------------------------------------

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def genus(self):
        return (2 - self.euler_characteristic()) // 2

    def ring_halfedges(self, v):
        """Outgoing halfedges around v, counterclockwise, starting at v_out[v]."""
        h0 = self.v_out[v]
        ring = [h0]
        h = self.he_twin[self.he_prev[h0]]
        while h != h0:
            ring.append(h)
            h = self.he_twin[self.he_prev[h]]
        return np.asarray(ring, dtype=np.int64)

    def face_edges(self):
        """(F, 3) edge ids, column c holding the edge of halfedge 3f+c."""
        return self.he_edge.reshape(-1, 3)

    # -- incidence operators ------------------------------------------------

    def d0_incidence(self):
        """Signed incidence of oriented edges on vertices, integer entries."""
        if self._d0_int is None:
            e = np.arange(self.n_edges)
            rows = np.concatenate([e, e])
            cols = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            vals = np.concatenate([-np.ones(self.n_edges, dtype=np.int64),
                                   np.ones(self.n_edges, dtype=np.int64)])
            self._d0_int = sp.csr_matrix((vals, (rows, cols)),
                                         shape=(self.n_edges, self.n_vertices))
        return self._d0_int

    def d1_incidence(self):
        """Signed incidence of faces on oriented edges, integer entries."""
        if self._d1_int is None:
            rows = self.he_face
            cols = self.he_edge
            vals = self.he_sign.astype(np.int64)
            self._d1_int = sp.csr_matrix((vals, (rows, cols)),
                                         shape=(self.n_faces, self.n_edges))
        return self._d1_int


def euler_characteristic(mesh):
    """V - E + F of a TriMesh."""
    return mesh.euler_characteristic()


class EdgeLengthMetric:
    """Positive edge lengths defining a piecewise flat metric on a TriMesh.

    Every face must satisfy the strict triangle inequality; violations are
    reported with the face id.
    """

    def __init__(self, mesh, lengths, check=True):
        lengths = np.asarray(lengths, dtype=np.float64)
        if lengths.shape != (mesh.n_edges,):
            raise GeometryError("expected %d edge lengths" % mesh.n_edges)
        if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
            bad = int(np.nonzero(~(np.isfinite(lengths) & (lengths > 0)))[0][0])
            raise GeometryError("non-positive length on edge %d" % bad, simplex=bad)
        self.mesh = mesh
        self.lengths = lengths
        if check:
            check_triangle_inequalities(mesh, lengths)

    @classmethod
    def from_positions(cls, mesh, positions=None):
        pos = positions if positions is not None else mesh.positions
        if pos is None:
            raise GeometryError("mesh carries no embedding")
        vec = pos[mesh.edges[:, 1]] - pos[mesh.edges[:, 0]]
        return cls(mesh, np.linalg.norm(vec, axis=1))


def check_triangle_inequalities(mesh, lengths):
    """Raise GeometryError naming the first face violating strictness."""
    ell = lengths[mesh.face_edges()]
    scale = ell.max(axis=1)
    slack = ell.sum(axis=1) - 2.0 * scale
    bad = np.nonzero(slack <= _TRI_EPS * scale)[0]
    if bad.size:
        f = int(bad[0])
        raise GeometryError("triangle inequality fails on face %d" % f, simplex=f)


# -- OFF input/output --------------------------------------------------------


def load_off(path):
    """Read an ASCII OFF file into (TriMesh, EdgeLengthMetric).

    Only triangular faces are accepted.  Trailing per-face color fields are
    ignored.  Lengths come from the embedding.
    """
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            hash_at = line.find("#")
            if hash_at >= 0:
                line = line[:hash_at]
            parts = line.split()
            if parts:
                rows.append(parts)
    if not rows or rows[0][0] != "OFF":
        raise MeshError("not an OFF file: missing header")
    rows[0] = rows[0][1:]  # counts may share the header line
    if not rows[0]:
        rows.pop(0)
    try:
        nv, nf = int(rows[0][0]), int(rows[0][1])
        at = 1
        coords = np.array([rows[at + v][:3] for v in range(nv)],
                          dtype=np.float64).reshape(nv, 3)
        at += nv
        faces = np.empty((nf, 3), dtype=np.int64)
        for f in range(nf):
            row = rows[at + f]
            cnt = int(row[0])
            if cnt != 3:
                raise MeshError("face %d is not a triangle (%d vertices)" % (f, cnt),
                                simplex=f)
            # anything after the three indices is a color spec; ignore it
            faces[f] = [int(row[1]), int(row[2]), int(row[3])]
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError("malformed OFF file: %s" % exc) from exc
    mesh = TriMesh(faces, positions=coords)
    return mesh, EdgeLengthMetric.from_positions(mesh)


def save_off(mesh, path):
    """Write an ASCII OFF file; coordinates round-trip as 64-bit floats."""
    if mesh.positions is None:
        raise GeometryError("mesh carries no embedding")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("OFF\n%d %d %d\n" % (mesh.n_vertices, mesh.n_faces, mesh.n_edges))
        for p in mesh.positions:
            fh.write("%r %r %r\n" % (float(p[0]), float(p[1]), float(p[2])))
        for f in mesh.faces:
            fh.write("3 %d %d %d\n" % (f[0], f[1], f[2]))


def builtin_mesh_path(name):
    """Filesystem path of a shipped template OFF (tetrahedron, icosahedron, genus2)."""
    ref = resources.files("mlc").joinpath("data/%s.off" % name)
    if not ref.is_file():
        raise MeshError("no shipped mesh named %r" % name)
    return str(ref)


# -- templates ----------------------------------------------------------------


def _tetrahedron_data():
    s = 1.0 / np.sqrt(3.0)
    pos = s * np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                       dtype=np.float64)
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int64)
    return pos, faces

def _icosahedron_data():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    pos = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    pos /= np.linalg.norm(pos[0])
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return pos, faces


# Mild shear applied to the voxel templates.  Orthogonal cells would tile the
# flat walls with co-circular right triangles whose cotangent weights vanish;
# the shear keeps every 1-form Hodge ratio strictly positive at all
# subdivision levels (checked for genus 1..4, subdivisions 0..6).
_FRAME_SHEAR = np.array([[1.0, 0.35, 0.15],
                         [0.0, 1.0, 0.28],
                         [0.0, 0.0, 1.0]])


def _voxel_frame(genus):
    """Boundary surface of a one-cell-thick sheared slab with `genus` holes.

    The handlebody is a (2g+1) x 3 x 1 block of unit cells with every cell
    (2k+1, 1, 0) removed.  Its boundary is a closed orientable surface of
    genus g; all walls are one cell wide so no vertex sits in the interior
    of a flat grid patch, which keeps later smoothing effective everywhere.
    Each boundary quad is split along its shorter diagonal.
    """
    nx, ny, nz = 2 * genus + 1, 3, 1
    holes = {(2 * k + 1, 1, 0) for k in range(genus)}

    def solid(i, j, k):
        return 0 <= i < nx and 0 <= j < ny and 0 <= k < nz and (i, j, k) not in holes

    vid = {}
    pos = []

    def vertex(p):
        if p not in vid:
            vid[p] = len(pos)
            pos.append(p)
        return vid[p]

    quads = []
    axes = np.eye(3, dtype=np.int64)
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                if not solid(i, j, k):
                    continue
                cell = np.array([i, j, k], dtype=np.int64)
                for a in range(3):
                    for s in (1, -1):
                        nb = cell + s * axes[a]
                        if solid(*nb):
                            continue
                        u, v = axes[(a + 1) % 3], axes[(a + 2) % 3]
                        if s < 0:
                            u, v = v, u
                        base = cell + (axes[a] if s > 0 else 0)
                        corners = [base, base + u, base + u + v, base + v]
                        quads.append([vertex(tuple(c)) for c in corners])

    coords = np.array(pos, dtype=np.float64) @ _FRAME_SHEAR.T
    faces = []
    for q in quads:
        d02 = np.linalg.norm(coords[q[0]] - coords[q[2]])
        d13 = np.linalg.norm(coords[q[1]] - coords[q[3]])
        if d02 <= d13:
            faces.append([q[0], q[1], q[2]])
            faces.append([q[0], q[2], q[3]])
        else:
            faces.append([q[1], q[2], q[3]])
            faces.append([q[1], q[3], q[0]])
    return coords, np.array(faces, dtype=np.int64)


# -- subdivision --------------------------------------------------------------


def _edge_midpoint_table(faces, n_vertices):
    table = {}
    nxt = n_vertices
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if key not in table:
                table[key] = nxt
                nxt += 1
    return table, nxt


def _split_topology(faces, table):
    out = np.empty((4 * len(faces), 3), dtype=np.int64)
    for f, (a, b, c) in enumerate(faces):
        mab = table[(a, b) if a < b else (b, a)]
        mbc = table[(b, c) if b < c else (c, b)]
        mca = table[(c, a) if c < a else (a, c)]
        out[4 * f + 0] = (a, mab, mca)
        out[4 * f + 1] = (b, mbc, mab)
        out[4 * f + 2] = (c, mca, mbc)
        out[4 * f + 3] = (mab, mbc, mca)
    return out


def _subdivide_midpoint(positions, faces):
    table, total = _edge_midpoint_table(faces, len(positions))
    pos = np.empty((total, 3), dtype=np.float64)
    pos[:len(positions)] = positions
    for (a, b), m in table.items():
        pos[m] = 0.5 * (positions[a] + positions[b])
    return pos, _split_topology(faces, table)


def _subdivide_loop(positions, faces):
    """One round of Loop subdivision (closed meshes only)."""
    nv = len(positions)
    table, total = _edge_midpoint_table(faces, nv)

    wings = {key: [] for key in table}
    neighbors = [set() for _ in range(nv)]
    for a, b, c in faces:
        for u, v, w in ((a, b, c), (b, c, a), (c, a, b)):
            key = (u, v) if u < v else (v, u)
            wings[key].append(w)
            neighbors[u].add(v)
            neighbors[v].add(u)

    pos = np.empty((total, 3), dtype=np.float64)
    for v in range(nv):
        ring = np.fromiter(neighbors[v], dtype=np.int64)
        n = len(ring)
        beta = (0.625 - (0.375 + 0.25 * np.cos(2.0 * np.pi / n)) ** 2) / n
        pos[v] = (1.0 - n * beta) * positions[v] + beta * positions[ring].sum(axis=0)
    for (a, b), m in table.items():
        w1, w2 = wings[(a, b)]
        pos[m] = 0.375 * (positions[a] + positions[b]) \
            + 0.125 * (positions[w1] + positions[w2])
    return pos, _split_topology(faces, table)


def generate_genus(genus, subdivisions):
    """Shipped genus-g template refined by 1-to-4 subdivision.

    Genus 0 is the unit icosphere (midpoint split, reprojected); higher
    genus starts from the voxel frame template and applies Loop smoothing
    rounds, which rounds the frame off into a well-shaped surface.
    """
    if not 0 <= genus <= 4:
        raise MeshError("genus must be between 0 and 4, got %r" % (genus,))
    if not 0 <= subdivisions <= 6:
        raise MeshError("subdivisions must be between 0 and 6, got %r" % (subdivisions,))
    if genus == 0:
        pos, faces = _icosahedron_data()
        for _ in range(subdivisions):
            pos, faces = _subdivide_midpoint(pos, faces)
            pos /= np.linalg.norm(pos, axis=1)[:, None]
    else:
        pos, faces = _voxel_frame(genus)
        for _ in range(subdivisions):
            pos, faces = _subdivide_loop(pos, faces)
    mesh = TriMesh(faces, positions=pos)
    return mesh, EdgeLengthMetric.from_positions(mesh)


def flat_torus(n, m=None):
    """Combinatorial torus of equilateral unit triangles, exactly flat.

    Vertices are a periodic n x m rhombic lattice (vertex (i, j) has index
    j*n + i); every edge length is exactly 1, so all angle defects vanish.
    Carries no embedding.
    """
    if m is None:
        m = n
    if n < 3 or m < 3:
        raise MeshError("flat torus needs n, m >= 3")

    def idx(i, j):
        return (j % m) * n + (i % n)

    faces = []
    for j in range(m):
        for i in range(n):
            faces.append([idx(i, j), idx(i + 1, j), idx(i, j + 1)])
            faces.append([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)])
    mesh = TriMesh(np.array(faces, dtype=np.int64))
    metric = EdgeLengthMetric(mesh, np.ones(mesh.n_edges))
    return mesh, metric
