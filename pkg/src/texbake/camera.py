"""Orthographic cameras on a view sphere.

Conventions (fixed once, used everywhere):
  * the mesh "front" faces +Z, world up is +Y;
  * a pose is (azimuth, elevation, radius) with the camera looking at the
    origin; azimuth 0 / elevation 0 puts the camera on +Z, azimuth +pi/2 on +X;
  * view-space depth is distance along the camera forward axis (origin maps to
    depth == radius); the normalized depth image maps near -> 1, far -> 0;
  * at the poles the up vector degenerates, so it is replaced by the azimuth
    direction projected into the XZ plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCount

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

VIEW_LABELS = ("front", "back", "left side", "right side", "top", "bottom", "side")


@dataclass(frozen=True)
class CameraPose:
    azimuth: float
    elevation: float
    radius: float
    ortho_half_extent: float = 1.1
    image_size: int = 1024

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.ortho_half_extent < 1.0:
            raise ValueError("ortho_half_extent must be >= 1 so a unit mesh fits")
        if not -math.pi / 2 - 1e-12 <= self.elevation <= math.pi / 2 + 1e-12:
            raise ValueError("elevation outside [-pi/2, pi/2]")

    @property
    def direction(self) -> np.ndarray:
        """Unit vector from origin toward the camera."""
        ce = math.cos(self.elevation)
        return np.array(
            [
                math.sin(self.azimuth) * ce,
                math.sin(self.elevation),
                math.cos(self.azimuth) * ce,
            ]
        )

    @property
    def position(self) -> np.ndarray:
        return self.radius * self.direction

    @property
    def near(self) -> float:
        return self.radius - self.ortho_half_extent

    @property
    def far(self) -> float:
        return self.radius + self.ortho_half_extent

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Orthonormal (right, up, forward); forward points at the origin."""
        forward = -self.direction
        if abs(math.cos(self.elevation)) < 1e-9:
            up_hint = np.array([math.sin(self.azimuth), 0.0, math.cos(self.azimuth)])
        else:
            up_hint = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up_hint)
        right /= np.linalg.norm(right)
        up = np.cross(right, forward)
        up /= np.linalg.norm(up)
        return right, up, forward


def front_back_pair(
    radius: float, ortho_half_extent: float = 1.1, image_size: int = 1024
) -> tuple[CameraPose, CameraPose]:
    """The stage-1 pose pair: identical cameras on +Z and -Z."""
    front = CameraPose(0.0, 0.0, radius, ortho_half_extent, image_size)
    back = CameraPose(math.pi, 0.0, radius, ortho_half_extent, image_size)
    return front, back


def fibonacci_lattice(
    n: int,
    radius: float,
    ortho_half_extent: float = 1.1,
    image_size: int = 1024,
) -> list[CameraPose]:
    """n camera poses whose directions form a golden-ratio spiral on the sphere.

    The k-th direction uses z_k = 1 - (2k + 1)/n for the vertical component and
    angle 2*pi*k/phi around it, which spreads the points nearly uniformly for
    any n >= 1.
    """
    if n < 1:
        raise InvalidCount("candidate count must be >= 1")
    poses = []
    for k in range(n):
        y = 1.0 - (2.0 * k + 1.0) / n
        ring = math.sqrt(max(0.0, 1.0 - y * y))
        ang = 2.0 * math.pi * k / GOLDEN_RATIO
        x = math.cos(ang) * ring
        z = math.sin(ang) * ring
        azimuth = math.atan2(x, z)
        elevation = math.asin(max(-1.0, min(1.0, y)))
        poses.append(CameraPose(azimuth, elevation, radius, ortho_half_extent, image_size))
    return poses


def view_matrix(pose: CameraPose) -> np.ndarray:
    """4x4 world -> view transform; view z is depth along the forward axis."""
    right, up, forward = pose.basis()
    eye = pose.position
    m = np.eye(4)
    m[0, :3], m[1, :3], m[2, :3] = right, up, forward
    m[:3, 3] = -m[:3, :3] @ eye
    return m


def view_transform(pose: CameraPose) -> np.ndarray:
    """4x4 orthographic world -> clip transform.

    Clip x/y lie in [-1, 1] across the frustum; clip z maps the near plane to 0
    and the far plane to 1.
    """
    ext = pose.ortho_half_extent
    proj = np.diag([1.0 / ext, 1.0 / ext, 1.0 / (pose.far - pose.near), 1.0])
    proj[2, 3] = -pose.near / (pose.far - pose.near)
    return proj @ view_matrix(pose)


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def view_label(pose: CameraPose) -> str:
    """Deterministic coarse direction name used for prompt augmentation."""
    az = _wrap_angle(pose.azimuth)
    el = pose.elevation
    if el > math.pi / 3:
        return "top"
    if el < -math.pi / 3:
        return "bottom"
    if abs(el) <= math.pi / 4:
        if abs(az) <= math.pi / 8:
            return "front"
        if abs(_wrap_angle(az - math.pi)) <= math.pi / 8:
            return "back"
        if abs(_wrap_angle(az - math.pi / 2)) <= math.pi / 8:
            return "right side"
        if abs(_wrap_angle(az + math.pi / 2)) <= math.pi / 8:
            return "left side"
    return "side"
