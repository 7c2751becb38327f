"""Planar ellipse fitting, PCA and body-orientation geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GeometryError, normalize_angle

# inverse of the 3x3 ellipse-constraint block [[0, 0, 2], [0, -1, 0], [2, 0, 0]]
_C1_INV = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])


@dataclass(frozen=True)
class EllipseFit:
    """Conic ``a x^2 + b xy + c y^2 + d x + e y + f = 0`` plus its geometric form.

    Coefficients are scaled so that ``4ac - b^2 = 1``. ``orientation`` is the
    direction of the long axis in degrees, reported in ``[-90, 90)``.
    """

    coefficients: tuple[float, float, float, float, float, float]
    center: tuple[float, float]
    semi_major: float
    semi_minor: float
    orientation: float

    def algebraic(self, x, y):
        a, b, c, d, e, f = self.coefficients
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return a * x * x + b * x * y + c * y * y + d * x + e * y + f

    @property
    def major_axis(self) -> np.ndarray:
        t = math.radians(self.orientation)
        return np.array([math.cos(t), math.sin(t)])

    @property
    def minor_axis(self) -> np.ndarray:
        t = math.radians(self.orientation)
        return np.array([-math.sin(t), math.cos(t)])


def _axis_angle(deg: float) -> float:
    """Fold a line direction into ``[-90, 90)``."""
    return float(np.mod(deg + 90.0, 180.0) - 90.0)


def conic_to_parametric(coef):
    """Center, semi-axes and long-axis angle of an ellipse conic.

    Returns
    -------
    center : ndarray (2,)
    semi_major, semi_minor : float
    orientation : float
        Long-axis direction in degrees, ``[-90, 90)``.
    """
    a, b, c, d, e, f = (float(v) for v in coef)
    if a + c < 0:
        a, b, c, d, e, f = -a, -b, -c, -d, -e, -f
    if 4.0 * a * c - b * b <= 0:
        raise GeometryError("conic is not an ellipse")
    center = np.linalg.solve(np.array([[2 * a, b], [b, 2 * c]]), np.array([-d, -e]))
    f0 = f + 0.5 * (d * center[0] + e * center[1])
    lam, vec = np.linalg.eigh(np.array([[a, 0.5 * b], [0.5 * b, c]]))
    if lam[0] * f0 >= 0 or lam[1] * f0 >= 0:
        raise GeometryError("conic describes an imaginary ellipse")
    r_major = math.sqrt(-f0 / lam[0])
    r_minor = math.sqrt(-f0 / lam[1])
    if abs(lam[1] - lam[0]) <= 1e-12 * abs(lam[1]):
        orientation = 0.0
    else:
        orientation = _axis_angle(math.degrees(math.atan2(vec[1, 0], vec[0, 0])))
    return center, r_major, r_minor, orientation


def parametric_to_conic(center, semi_major, semi_minor, orientation):
    """Conic coefficients of an ellipse, normalised to ``4ac - b^2 = 1``."""
    t = math.radians(orientation)
    ct, st = math.cos(t), math.sin(t)
    A2, B2 = semi_major ** 2, semi_minor ** 2
    a = ct * ct / A2 + st * st / B2
    b = 2.0 * ct * st * (1.0 / A2 - 1.0 / B2)
    c = st * st / A2 + ct * ct / B2
    x0, y0 = center
    d = -2.0 * a * x0 - b * y0
    e = -b * x0 - 2.0 * c * y0
    f = a * x0 * x0 + b * x0 * y0 + c * y0 * y0 - 1.0
    coef = np.array([a, b, c, d, e, f])
    return coef / math.sqrt(4.0 * a * c - b * b)


def fit_ellipse_direct(points2d) -> EllipseFit:
    """Direct least-squares ellipse fit with the ellipse-specific constraint.

    Minimises the algebraic distance subject to ``4ac - b^2 = 1`` using the
    partitioned (quadratic / linear block) form of the scatter matrix, which
    stays well posed when the data lie exactly on an ellipse. The points are
    centred and scaled before the solve and the result is mapped back.

    Raises
    ------
    GeometryError
        Fewer than 6 points, or a degenerate (e.g. collinear) scatter with no
        eigenvector satisfying the ellipse constraint.
    """
    pts = np.asarray(points2d, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 6:
        raise GeometryError("ellipse fit needs at least 6 points")
    pts = pts[:, :2]
    mean = pts.mean(axis=0)
    scale = math.sqrt(np.mean(np.sum((pts - mean) ** 2, axis=1)))
    if not scale > 0:
        raise GeometryError("degenerate point set")
    x = (pts[:, 0] - mean[0]) / scale
    y = (pts[:, 1] - mean[1]) / scale

    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    if np.linalg.cond(S3) > 1e12:
        raise GeometryError("collinear point set")
    T = -np.linalg.solve(S3, S2.T)
    M = _C1_INV @ (S1 + S2 @ T)
    _, vecs = np.linalg.eig(M)
    vecs = np.real(vecs)
    cond = 4.0 * vecs[0] * vecs[2] - vecs[1] ** 2
    valid = np.flatnonzero(cond > 1e-12)
    if valid.size == 0:
        raise GeometryError("no eigenvector satisfies the ellipse constraint")
    if valid.size > 1:
        # keep the minimum-residual admissible solution
        res = [np.linalg.norm(D1 @ vecs[:, k] + D2 @ (T @ vecs[:, k])) /
               math.sqrt(cond[k]) for k in valid]
        valid = valid[[int(np.argmin(res))]]
    a1 = vecs[:, valid[0]]
    coef_n = np.concatenate([a1, T @ a1])
    try:
        c_n, r1, r2, ang = conic_to_parametric(coef_n)
    except GeometryError as exc:
        raise GeometryError(f"degenerate ellipse fit: {exc}") from None
    center = c_n * scale + mean
    r1 *= scale
    r2 *= scale
    coef = parametric_to_conic(center, r1, r2, ang)
    return EllipseFit(tuple(float(v) for v in coef), (float(center[0]), float(center[1])),
                      float(r1), float(r2), float(ang))


@dataclass(frozen=True)
class PcaResult:
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, ordered like eigenvalues


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col
    return vecs


def pca(points, dims: int = 3) -> PcaResult:
    """Eigen-decomposition of the sample covariance of ``points[:, :dims]``.

    Eigenvalues are descending and clipped at zero; each eigenvector has its
    first non-zero component positive.
    """
    if dims not in (2, 3):
        raise ValueError("dims must be 2 or 3")
    pts = np.asarray(points, dtype=float)[:, :dims]
    if pts.shape[0] < dims + 1:
        raise GeometryError(f"PCA in {dims}D needs at least {dims + 1} points")
    mean = pts.mean(axis=0)
    cov = np.cov(pts - mean, rowvar=False)
    lam, vec = np.linalg.eigh(cov)
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    return PcaResult(mean, lam, _fix_signs(vec[:, order]))


@dataclass(frozen=True)
class BodyOrientation:
    yaw: float
    ellipse: EllipseFit
    front_mean: float
    back_mean: float
    tie: bool

    @property
    def facing(self) -> np.ndarray:
        t = math.radians(self.yaw)
        return np.array([math.cos(t), math.sin(t)])


def _side_means(signed: np.ndarray) -> tuple[float, float]:
    pos, neg = signed[signed > 0], -signed[signed < 0]
    return (float(pos.mean()) if pos.size else 0.0,
            float(neg.mean()) if neg.size else 0.0)


def body_orientation(pc_body, pc_head, head_center=None) -> BodyOrientation:
    """Absolute body yaw from the upper-body ellipse and the head's side.

    The long axis of the ellipse fitted to the projected body points is the
    shoulder line. Head points are split by the side of that line they fall
    on; the side whose points have the larger mean perpendicular distance is
    the front. An exact tie resolves toward the +x half-plane and is flagged.
    ``head_center`` is accepted for interface symmetry and not needed.
    """
    body = np.asarray(pc_body, dtype=float)
    head = np.asarray(pc_head, dtype=float)
    if head.size == 0:
        raise GeometryError("body orientation undefined without head points")
    ell = fit_ellipse_direct(body[:, :2])
    normal = ell.minor_axis
    signed = (head[:, :2] - np.asarray(ell.center)) @ normal
    m_pos, m_neg = _side_means(signed)
    tie = abs(m_pos - m_neg) <= 1e-9 * max(1.0, m_pos, m_neg)
    if tie:
        sign = 1.0 if (normal[0] > 0 or (normal[0] == 0 and normal[1] > 0)) else -1.0
    else:
        sign = 1.0 if m_pos > m_neg else -1.0
    facing = sign * normal
    yaw = normalize_angle(math.degrees(math.atan2(facing[1], facing[0])))
    front, back = (m_pos, m_neg) if sign > 0 else (m_neg, m_pos)
    return BodyOrientation(yaw, ell, front, back, tie)


@dataclass(frozen=True)
class QuadrantPartition:
    """Head points split by the body's shoulder line and facing direction.

    Index order is front-left, front-right, back-left, back-right.
    """

    quadrants: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    labels: np.ndarray

    def __getitem__(self, i: int) -> np.ndarray:
        return self.quadrants[i]

    def counts(self) -> list[int]:
        return [len(q) for q in self.quadrants]


def quadrant_labels(points, center, facing_deg: float) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    t = math.radians(facing_deg)
    fwd = np.array([math.cos(t), math.sin(t)])
    left = np.array([-fwd[1], fwd[0]])
    rel = pts[:, :2] - np.asarray(center, dtype=float)
    f = rel @ fwd
    l = rel @ left
    # boundary points (zero distance to an axis) go to the lower-numbered quadrant
    return np.where(f >= 0, np.where(l >= 0, 0, 1), np.where(l >= 0, 2, 3))


def partition_quadrants(pc_head, body_ellipse: EllipseFit, facing: float) -> QuadrantPartition:
    pts = np.asarray(pc_head, dtype=float).reshape(-1, 3)
    labels = quadrant_labels(pts, body_ellipse.center, facing)
    quads = tuple(pts[labels == q] for q in range(4))
    return QuadrantPartition(quads, labels)
