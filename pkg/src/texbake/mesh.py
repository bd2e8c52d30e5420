"""UV-mapped triangle meshes: OBJ loading, validation, normalization, export.

Only Wavefront OBJ is supported. Faces must reference `vt` records; polygons
with more than three corners are fan-triangulated. Degenerate faces (3D area
below ``DEGENERATE_AREA_TOL``) are dropped with a logged count rather than
rejected, since generated meshes routinely contain slivers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMesh, MissingUVs, ParseError

log = logging.getLogger(__name__)

DEGENERATE_AREA_TOL = 1e-12
UV_RANGE_TOL = 1e-6


@dataclass
class TriMesh:
    """Indexed triangle mesh with per-corner UV coordinates.

    positions: (V, 3) float64 vertex positions in model units.
    faces: (F, 3) int32 indices into positions.
    uv_corners: (F, 3, 2) float64 per-face per-corner UVs in [0, 1]^2.
    face_normals: (F, 3) float64 unit normals, derived from winding.
    """

    positions: np.ndarray
    faces: np.ndarray
    uv_corners: np.ndarray
    face_normals: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int32)
        self.uv_corners = np.ascontiguousarray(self.uv_corners, dtype=np.float64)
        if self.faces.size and self.faces.max() >= len(self.positions):
            raise ParseError("face index out of range")
        if self.faces.size and self.faces.min() < 0:
            raise ParseError("negative face index after resolution")
        if self.uv_corners.size and (
            self.uv_corners.min() < -UV_RANGE_TOL or self.uv_corners.max() > 1.0 + UV_RANGE_TOL
        ):
            raise ParseError("UV coordinates outside [0, 1] are not supported")
        self.uv_corners = np.clip(self.uv_corners, 0.0, 1.0)
        self._drop_degenerate()
        if len(self.faces) == 0:
            raise EmptyMesh("mesh has no non-degenerate faces")
        self.face_normals = self._compute_normals()

    def _drop_degenerate(self) -> None:
        if len(self.faces) == 0:
            return
        tri = self.positions[self.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area = 0.5 * np.linalg.norm(cross, axis=1)
        keep = area > DEGENERATE_AREA_TOL
        dropped = int((~keep).sum())
        if dropped:
            log.warning("dropped %d degenerate face(s) with 3D area <= %g", dropped, DEGENERATE_AREA_TOL)
            self.faces = self.faces[keep]
            self.uv_corners = self.uv_corners[keep]

    def _compute_normals(self) -> np.ndarray:
        tri = self.positions[self.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norms = np.linalg.norm(cross, axis=1, keepdims=True)
        return cross / norms

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def uv_degenerate(self) -> np.ndarray:
        """(F,) bool: faces whose UV triangle has ~zero area.

        Such faces render normally in 3D but are skipped by backprojection:
        their screen pixels all collapse onto one UV point and cannot carry
        texture.
        """
        e1 = self.uv_corners[:, 1] - self.uv_corners[:, 0]
        e2 = self.uv_corners[:, 2] - self.uv_corners[:, 0]
        area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return area <= DEGENERATE_AREA_TOL


@dataclass(frozen=True)
class MeshNormalization:
    """Transform (p - center) * scale that maps a mesh into the unit ball."""

    center: np.ndarray
    scale: float


def _resolve_index(raw: int, count: int, what: str) -> int:
    # OBJ indices are 1-based; negative indices count from the end.
    if raw > 0:
        idx = raw - 1
    elif raw < 0:
        idx = count + raw
    else:
        raise ParseError(f"zero {what} index")
    if not 0 <= idx < count:
        raise ParseError(f"{what} index {raw} out of range (have {count})")
    return idx


def load_mesh(path: str | Path) -> TriMesh:
    """Load a UV-mapped triangle mesh from a Wavefront OBJ file.

    Polygonal faces are fan-triangulated as (0, i, i+1). Every face corner
    must carry a `vt` reference; otherwise MissingUVs is raised.
    """
    path = Path(path)
    positions: list[list[float]] = []
    texcoords: list[list[float]] = []
    face_pos: list[tuple[int, int, int]] = []
    face_uvs: list[tuple[int, int, int]] = []

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            tag = tokens[0]
            try:
                if tag == "v":
                    if len(tokens) < 4:
                        raise ParseError("vertex record needs 3 coordinates")
                    positions.append([float(t) for t in tokens[1:4]])
                elif tag == "vt":
                    if len(tokens) < 3:
                        raise ParseError("texcoord record needs 2 coordinates")
                    texcoords.append([float(t) for t in tokens[1:3]])
                elif tag == "f":
                    corners = tokens[1:]
                    if len(corners) < 3:
                        raise ParseError("face record needs at least 3 corners")
                    vids: list[int] = []
                    tids: list[int] = []
                    for corner in corners:
                        parts = corner.split("/")
                        vids.append(_resolve_index(int(parts[0]), len(positions), "vertex"))
                        if len(parts) < 2 or parts[1] == "":
                            raise MissingUVs(f"{path.name}:{lineno}: face corner without vt reference")
                        tids.append(_resolve_index(int(parts[1]), len(texcoords), "texcoord"))
                    for i in range(1, len(corners) - 1):
                        face_pos.append((vids[0], vids[i], vids[i + 1]))
                        face_uvs.append((tids[0], tids[i], tids[i + 1]))
            except ValueError as exc:
                raise ParseError(f"{path.name}:{lineno}: {exc}") from exc

    if not face_pos:
        raise EmptyMesh(f"{path.name}: no faces")

    pos = np.asarray(positions, dtype=np.float64)
    vt = np.asarray(texcoords, dtype=np.float64)
    faces = np.asarray(face_pos, dtype=np.int32)
    uv_corners = vt[np.asarray(face_uvs, dtype=np.int64)]
    return TriMesh(positions=pos, faces=faces, uv_corners=uv_corners)


def save_mesh(mesh: TriMesh, obj_path: str | Path, texture_name: str | None = None) -> None:
    """Write a TriMesh as OBJ, optionally with an MTL referencing a texture PNG.

    Per-corner UVs are deduplicated into shared vt records. Positions and UVs
    are written with enough digits for a 1e-6 load round-trip.
    """
    obj_path = Path(obj_path)
    lines: list[str] = []
    if texture_name is not None:
        mtl_path = obj_path.with_suffix(".mtl")
        mtl_name = "baked"
        mtl_path.write_text(
            "newmtl {}\nKa 1.0 1.0 1.0\nKd 1.0 1.0 1.0\nmap_Kd {}\n".format(mtl_name, texture_name),
            encoding="utf-8",
        )
        lines.append(f"mtllib {mtl_path.name}")
        lines.append(f"usemtl {mtl_name}")

    for p in mesh.positions:
        lines.append("v {:.9g} {:.9g} {:.9g}".format(*p))

    flat_uv = mesh.uv_corners.reshape(-1, 2)
    uniq_uv, inverse = np.unique(flat_uv, axis=0, return_inverse=True)
    for t in uniq_uv:
        lines.append("vt {:.9g} {:.9g}".format(*t))
    uv_idx = inverse.reshape(-1, 3)

    for f, (v0, v1, v2) in enumerate(mesh.faces):
        t0, t1, t2 = uv_idx[f]
        lines.append(f"f {v0 + 1}/{t0 + 1} {v1 + 1}/{t1 + 1} {v2 + 1}/{t2 + 1}")

    obj_path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def normalize(mesh: TriMesh) -> tuple[TriMesh, MeshNormalization]:
    """Center a mesh at its bounding-box center and scale it into the unit ball.

    The maximal vertex distance from the origin equals 1 afterwards, so camera
    radii have a fixed meaning relative to the object.
    """
    if mesh.n_vertices == 0 or mesh.n_faces == 0:
        raise EmptyMesh("cannot normalize an empty mesh")
    lo = mesh.positions.min(axis=0)
    hi = mesh.positions.max(axis=0)
    center = 0.5 * (lo + hi)
    radius = np.linalg.norm(mesh.positions - center, axis=1).max()
    if radius <= 0.0:
        raise EmptyMesh("mesh has zero spatial extent")
    scale = 1.0 / radius
    out = TriMesh(
        positions=(mesh.positions - center) * scale,
        faces=mesh.faces.copy(),
        uv_corners=mesh.uv_corners.copy(),
    )
    return out, MeshNormalization(center=center, scale=scale)
