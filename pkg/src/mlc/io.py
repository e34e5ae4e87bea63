"""Delimited and legacy-VTK exports of mesh fields.

CSV files carry a single header row and one row per simplex, with floats
written via repr so a file is byte-identical across runs of the same
data.  VTK output is the legacy ASCII flavor (POLYDATA with point data),
the lowest common denominator that external viewers still read.
"""

import csv

import numpy as np

from .errors import UsageError

__all__ = ["save_form_csv", "save_cubic_csv", "save_table_csv", "save_vtk"]


def save_form_csv(path, form, label="value"):
    """Write a 0- or 1-form as (simplex id, value) rows."""
    if form.degree not in (0, 1):
        raise UsageError("CSV export handles 0- and 1-forms, got degree %r" % (form.degree,))
    simplex = "vertex" if form.degree == 0 else "edge"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([simplex, label])
        for i, v in enumerate(form.values):
            writer.writerow([i, repr(float(v))])


def save_cubic_csv(path, field):
    """Write a cubic coefficient field as (vertex, re, im) rows."""
    coeff = np.asarray(field.coeff)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "re", "im"])
        for i, c in enumerate(coeff):
            writer.writerow([i, repr(float(c.real)), repr(float(c.imag))])


def save_table_csv(path, header, rows):
    """Write a generic table; floats go through repr, everything else str."""

    def cell(x):
        if isinstance(x, float):
            return repr(x)
        return str(x)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([cell(x) for x in row])


def save_vtk(path, mesh, fields):
    """Legacy ASCII VTK export of vertex scalar fields.

    fields maps a name to one value per vertex.  Needs an embedded mesh;
    combinatorial meshes (the flat torus) carry no positions.
    """
    if mesh.positions is None:
        raise UsageError("VTK export needs vertex positions; this mesh carries none")
    names = sorted(fields)
    arrays = {}
    for name in names:
        vals = np.asarray(fields[name], dtype=np.float64)
        if vals.shape != (mesh.n_vertices,):
            raise UsageError("field %r needs one value per vertex" % (name,))
        arrays[name] = vals

    lines = [
        "# vtk DataFile Version 3.0",
        "mlc field export",
        "ASCII",
        "DATASET POLYDATA",
        "POINTS %d double" % mesh.n_vertices,
    ]
    for p in mesh.positions:
        lines.append("%s %s %s" % (repr(float(p[0])), repr(float(p[1])), repr(float(p[2]))))
    lines.append("POLYGONS %d %d" % (mesh.n_faces, 4 * mesh.n_faces))
    for f in mesh.faces:
        lines.append("3 %d %d %d" % (int(f[0]), int(f[1]), int(f[2])))
    lines.append("POINT_DATA %d" % mesh.n_vertices)
    for name in names:
        lines.append("SCALARS %s double 1" % name)
        lines.append("LOOKUP_TABLE default")
        for v in arrays[name]:
            lines.append(repr(float(v)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
