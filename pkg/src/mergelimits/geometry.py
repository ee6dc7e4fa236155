"""High-dimensional geometry of loss sublevel sets.

Gaussian width of the ellipsoid {theta : (theta - theta*)^T H (theta -
theta*) <= 2 eps} both in the Jensen closed form sqrt(2 eps sum 1/lambda_i)
and by Monte Carlo, diminishing marginal gains, statistical dimension of
subspaces and circular cones, the projected-width redundancy threshold, and
the kinematic phase transition between a cone and a Haar-rotated subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tensorio import RngStream, as_matrix, as_pvec

_ANGLE_TOL = 1e-10


@dataclass(frozen=True)
class QuadraticTask:
    """Quadratic loss L(theta) = 0.5 (theta - theta*)^T H (theta - theta*).

    H = basis @ diag(eigenvalues) @ basis^T with orthonormal basis columns.
    The epsilon-sublevel set is an ellipsoid centered at theta* with radii
    r_i = sqrt(2 eps / lambda_i) along the eigenvectors.
    """

    theta_star: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    epsilon: float

    def __post_init__(self):
        ts = as_pvec(self.theta_star)
        lam = as_pvec(self.eigenvalues)
        q = as_matrix(self.basis)
        object.__setattr__(self, "theta_star", ts)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "basis", q)
        d = ts.size
        if lam.size != d or q.shape != (d, d):
            raise ConfigError("theta_star, eigenvalues and basis dimensions disagree")
        if np.any(lam <= 0):
            raise ConfigError("all eigenvalues must be > 0")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if np.max(np.abs(q.T @ q - np.eye(d))) > 1e-8:
            raise ConfigError("basis columns are not orthonormal")

    @property
    def dim(self) -> int:
        return self.theta_star.size

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(2.0 * self.epsilon / self.eigenvalues)

    def loss(self, theta: np.ndarray) -> float:
        z = self.basis.T @ (as_pvec(theta, self.dim) - self.theta_star)
        return 0.5 * float(self.eigenvalues @ (z * z))

    def sample_sublevel(self, stream: RngStream, n: int = 1) -> np.ndarray:
        """Uniform points of the epsilon-sublevel ellipsoid, shape (n, D)."""
        gen = stream.generator()
        d = self.dim
        g = gen.normal(size=(n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = gen.random(size=(n, 1)) ** (1.0 / d)
        z = g * u * self.radii
        return self.theta_star + z @ self.basis.T


@dataclass(frozen=True)
class CircularCone:
    """Closed convex cone {x : angle(x, axis) <= half_angle}."""

    axis: np.ndarray
    half_angle: float

    def __post_init__(self):
        u = as_pvec(self.axis)
        nrm = np.linalg.norm(u)
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError(f"cone axis must be unit-norm, got |u| = {nrm}")
        object.__setattr__(self, "axis", u)
        object.__setattr__(self, "half_angle", float(self.half_angle))
        if not 0 < self.half_angle < math.pi / 2:
            raise ConfigError(f"half_angle must be in (0, pi/2), got {self.half_angle}")


def width_jensen(task: QuadraticTask, m: int | None = None) -> float:
    """Jensen approximation sqrt(2 eps sum_{i<=m} 1/lambda_i), stored order."""
    d = task.dim
    if m is None:
        m = d
    if not 1 <= m <= d:
        raise ConfigError(f"m must be in [1, {d}], got {m}")
    return math.sqrt(2.0 * task.epsilon * float(np.sum(1.0 / task.eigenvalues[:m])))


def width_mc(task: QuadraticTask, samples: int, stream: RngStream) -> tuple[float, float]:
    """Monte-Carlo Gaussian width E[sqrt(2 eps) |H^{-1/2} g|] with stderr.

    H^{-1/2} g has the same norm distribution as diag(lambda^{-1/2}) g, so
    the basis never enters.
    """
    if samples < 1000:
        raise ConfigError(f"need >= 1000 samples, got {samples}")
    g = stream.generator().normal(size=(samples, task.dim))
    vals = math.sqrt(2.0 * task.epsilon) * np.sqrt((g * g) @ (1.0 / task.eigenvalues))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def marginal_gains(task: QuadraticTask, up_to_m: int | None = None) -> np.ndarray:
    """Width increments Delta w_M = w(S_M) - w(S_{M-1}), with w(S_0) = 0."""
    d = task.dim
    if up_to_m is None:
        up_to_m = d
    if not 1 <= up_to_m <= d:
        raise ConfigError(f"up_to_m must be in [1, {d}], got {up_to_m}")
    partial = np.cumsum(1.0 / task.eigenvalues[:up_to_m])
    widths = np.sqrt(2.0 * task.epsilon * partial)
    return np.diff(widths, prepend=0.0)


def projected_width_sq(task: QuadraticTask, theta_k: np.ndarray, active: int) -> float:
    """Squared width of the sublevel set projected onto the sphere around theta_k.

    sum over the D - active residual radii of r_i^2 / (dist^2 + r_i^2),
    where dist = |theta* - theta_k|.
    """
    d = task.dim
    if not 0 <= active < d:
        raise ConfigError(f"active must be in [0, {d}), got {active}")
    dist_sq = float(np.sum((task.theta_star - as_pvec(theta_k, d)) ** 2))
    r_sq = task.radii[: d - active] ** 2
    return float(np.sum(r_sq / (dist_sq + r_sq)))


def redundancy_bound_check(task: QuadraticTask, theta_k: np.ndarray, active: int) -> bool:
    """True while active <= D - projected width: merging more is admissible."""
    return active <= task.dim - projected_width_sq(task, theta_k, active) + _ANGLE_TOL


def statdim_subspace(k: int) -> float:
    """Statistical dimension of a k-dimensional subspace is exactly k."""
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    return float(k)


def project_circular_cone(x: np.ndarray, cone: CircularCone) -> np.ndarray:
    """Euclidean-nearest point of the cone.

    Inside the cone the point is unchanged; inside the polar cone the
    projection is 0; otherwise project onto the nearest boundary ray.
    """
    x = as_pvec(x, cone.axis.size)
    t = float(x @ cone.axis)
    w = x - t * cone.axis
    rho = float(np.linalg.norm(w))
    tan_a = math.tan(cone.half_angle)
    if rho <= t * tan_a:
        return x.copy()
    # Best alignment with any boundary ray; <= 0 means x is in the polar cone.
    dot = math.cos(cone.half_angle) * t + math.sin(cone.half_angle) * rho
    if dot <= 0 or rho == 0.0:
        return np.zeros_like(x)
    ray = math.cos(cone.half_angle) * cone.axis + math.sin(cone.half_angle) * (w / rho)
    return dot * ray


def statdim_cone_mc(cone: CircularCone, dim: int, samples: int, stream: RngStream) -> tuple[float, float]:
    """Monte-Carlo statistical dimension E|Pi_C(g)|^2 with stderr."""
    if samples < 1000:
        raise ConfigError(f"need >= 1000 samples, got {samples}")
    if dim != cone.axis.size:
        raise ConfigError(f"dim {dim} disagrees with cone axis dim {cone.axis.size}")
    g = stream.generator().normal(size=(samples, dim))
    t = g @ cone.axis
    w = g - np.outer(t, cone.axis)
    rho = np.linalg.norm(w, axis=1)
    tan_a = math.tan(cone.half_angle)
    # |Pi(g)|^2: inside -> |g|^2; polar (dot <= 0) -> 0; else boundary ray.
    inside = rho <= t * tan_a
    dot = np.cos(cone.half_angle) * t + np.sin(cone.half_angle) * rho
    sq = np.where(inside, t * t + rho * rho, np.maximum(dot, 0.0) ** 2)
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(samples))


def haar_orthogonal(dim: int, gen: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    q, r = np.linalg.qr(gen.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def _subspace_intersects(basis_a: np.ndarray, basis_b: np.ndarray, dim: int) -> bool:
    k1, k2 = basis_a.shape[1], basis_b.shape[1]
    if k1 + k2 > dim:
        return True
    s = np.linalg.svd(np.hstack([basis_a, basis_b]), compute_uv=False)
    return bool(s[-1] < 1e-8)


def kinematics_transition(
    dim: int,
    cone_or_subspace,
    k: int,
    trials: int,
    stream: RngStream,
) -> float:
    """Empirical probability that C intersects a Haar-rotated k-subspace.

    cone_or_subspace is a CircularCone or an int k1 (subspace dimension).
    For a circular cone the test is exact: the rotated subspace meets the
    cone nontrivially iff arccos |Pi_S u| <= half_angle (+ 1e-10 rad).
    """
    if trials < 100:
        raise ConfigError(f"need >= 100 trials, got {trials}")
    if not 0 < k <= dim:
        raise ConfigError(f"k must be in (0, {dim}], got {k}")
    gen = stream.generator()
    hits = 0
    base = np.eye(dim)[:, :k]
    for _ in range(trials):
        q = haar_orthogonal(dim, gen)
        s_basis = q @ base
        if isinstance(cone_or_subspace, CircularCone):
            proj = s_basis.T @ cone_or_subspace.axis
            cosang = min(float(np.linalg.norm(proj)), 1.0)
            hits += bool(math.acos(cosang) <= cone_or_subspace.half_angle + _ANGLE_TOL)
        else:
            k1 = int(cone_or_subspace)
            if not 0 < k1 <= dim:
                raise ConfigError(f"subspace dim must be in (0, {dim}], got {k1}")
            hits += _subspace_intersects(np.eye(dim)[:, :k1], s_basis, dim)
    return hits / trials
