"""Numerical discovery of Morse data on implicit surfaces in 3-space with
a finite orthogonal symmetry group.

The pipeline finds critical points by Newton iteration on the Lagrange
system, groups them into group orbits, classifies index / stabilizer /
stability, counts signed flow lines of the projected negative gradient by
shooting from descending directions, and descends everything to a Morse
datum for the quotient.

All field callables are vectorized over a leading batch axis (positions of
shape (n, 3)); trajectories are integrated as one batch and merged in
initial-direction order, so parallel-style and serial runs produce
identical output.  The metric is the induced Euclidean metric, which is
automatically equivariant for an orthogonal group action.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParams,
    BrokenFlowDetected,
    BumpTooWide,
    DegenerateCritical,
    NonConvergentTrajectory,
    SeedGridExhausted,
    UnstableEndpoint,
    UnsupportedProfile,
)
from .morse_datum import CriticalPointRecord, FlowCount, MorseDatum, validate

__all__ = [
    "Tolerances",
    "ImplicitQuotientSurface",
    "NumericCriticalPoint",
    "CriticalOrbit",
    "FlowLineCounter",
    "sphere_surface",
    "torus_surface",
    "epsilon_sphere_surface",
    "surface_from_spec",
    "group_from_generators",
    "check_surface",
    "find_critical_orbits",
    "count_flow_lines",
    "stabilize_numeric",
    "stabilize_all",
    "quotient_to_datum",
]

_CAPTURE_RADIUS = 1e-9        # distance at which a trajectory has arrived
_STALL_SPEED = 1e-12          # below this the flow is considered parked
_MAX_STEPS = 20000


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds; defaults assume unit-scale surfaces in double
    precision."""

    newton_tol: float = 1e-12
    dedup_tol: float = 1e-6
    stab_tol: float = 1e-8
    integrate_step: float = 0.02
    escape_radius: float = 1e3
    seed_count: int = 220
    seed_radii: tuple = (0.6, 1.0, 1.8, 2.6, 3.2)
    degeneracy_tol: float = 1e-7
    shoot_offset: float = 1e-5
    shoot_directions: int = 720
    bisect_width: float = 1e-10


@dataclass(frozen=True, eq=False)
class ImplicitQuotientSurface:
    """A level-set surface F = 0 with a Morse function f and a finite
    orthogonal group under which both are invariant."""

    name: str
    level: object
    level_grad: object
    level_hess: object
    morse: object
    morse_grad: object
    morse_hess: object
    group: tuple
    tolerances: Tolerances = field(default_factory=Tolerances)
    euler_characteristic: int | None = None
    point_namer: object = None


@dataclass
class NumericCriticalPoint:
    """One lift of a critical point: position, Morse index, stabilizer
    elements (indices into the group), an orthonormal frame spanning the
    descending directions, and the chosen orientation sign of that frame."""

    position: np.ndarray
    index: int
    multiplier: float
    stab_elements: tuple
    negative_frame: np.ndarray
    neg_eigenvalues: tuple
    stable: bool
    orientation: int = 1


@dataclass
class CriticalOrbit:
    """A group orbit of critical lifts; the representative comes first and
    carries the orientation data, the per-lift frames are its pushforwards."""

    label: str
    points: list
    lift_elements: tuple  # group element index g with g @ rep == lift

    @property
    def representative(self):
        return self.points[0]

    @property
    def index(self):
        return self.points[0].index

    @property
    def stable(self):
        return self.points[0].stable

    @property
    def stab_order(self):
        return len(self.points[0].stab_elements)


# --------------------------------------------------------------------------
# groups and built-in surfaces

GENERATOR_NAMES = {
    "identity": np.eye(3),
    "rotation_pi_z": np.diag([-1.0, -1.0, 1.0]),
    "antipodal": -np.eye(3),
}


def group_from_generators(names):
    """Close a set of named generators under multiplication."""
    mats = [np.eye(3)]
    for name in names:
        try:
            mats.append(np.array(GENERATOR_NAMES[name], dtype=float))
        except KeyError:
            raise BadParams(
                f"unknown generator {name!r}; choose from "
                f"{sorted(GENERATOR_NAMES)}") from None

    def key(g):
        return tuple(np.round(g, 9).ravel())

    elements = {key(g): g for g in mats}
    changed = True
    while changed:
        changed = False
        current = list(elements.values())
        for a in current:
            for b in current:
                c = a @ b
                k = key(c)
                if k not in elements:
                    if len(elements) >= 256:
                        raise BadParams("generator set does not close into a"
                                        " small finite group")
                    elements[k] = c
                    changed = True
    # the identity always comes first; the rest in a deterministic order
    identity_key = key(np.eye(3))
    ordered = [identity_key] + [k for k in sorted(elements) if k != identity_key]
    return tuple(elements[k] for k in ordered)


def _wrap_fields(value, grad, hess):
    """Promote single-point inputs to batches of one."""

    def as_batch(fn, depth):
        def wrapped(x):
            x = np.asarray(x, dtype=float)
            single = x.ndim == 1
            out = fn(x[None] if single else x)
            return out[0] if single else out
        return wrapped

    return as_batch(value, 0), as_batch(grad, 1), as_batch(hess, 2)


def sphere_surface(tolerances=None, group=()):
    """The unit sphere with the plain height function."""

    def value(x):
        return np.einsum("ij,ij->i", x, x) - 1.0

    def grad(x):
        return 2.0 * x

    def hess(x):
        return np.broadcast_to(2.0 * np.eye(3), (x.shape[0], 3, 3)).copy()

    def morse(x):
        return x[:, 2].copy()

    def morse_grad(x):
        g = np.zeros_like(x)
        g[:, 2] = 1.0
        return g

    def morse_hess(x):
        return np.zeros((x.shape[0], 3, 3))

    v, g, h = _wrap_fields(value, grad, hess)
    mv, mg, mh = _wrap_fields(morse, morse_grad, morse_hess)
    return ImplicitQuotientSurface(
        name="sphere", level=v, level_grad=g, level_hess=h,
        morse=mv, morse_grad=mg, morse_hess=mh,
        group=group_from_generators(group),
        tolerances=tolerances or Tolerances(),
        euler_characteristic=2)


def torus_surface(tilt=0.25, major=2.0, minor=1.0, tolerances=None, group=()):
    """Torus of revolution about the z-axis with a tilted height function.

    The plain height z is degenerate on this surface (its critical set is
    a pair of circles), so the Morse function is z + tilt * x, whose four
    critical points sit in the y = 0 plane at closed-form positions.
    """
    if tilt == 0:
        raise BadParams("tilt must be nonzero: the plain height function is"
                        " degenerate on a torus of revolution")

    def rho(x):
        return np.maximum(np.hypot(x[:, 0], x[:, 1]), 1e-9)

    def value(x):
        return (rho(x) - major) ** 2 + x[:, 2] ** 2 - minor ** 2

    def grad(x):
        p = rho(x)
        s = 2.0 * (p - major) / p
        return np.stack([s * x[:, 0], s * x[:, 1], 2.0 * x[:, 2]], axis=1)

    def hess(x):
        p = rho(x)
        p3 = p ** 3
        out = np.zeros((x.shape[0], 3, 3))
        out[:, 0, 0] = 2.0 - 2.0 * major * x[:, 1] ** 2 / p3
        out[:, 1, 1] = 2.0 - 2.0 * major * x[:, 0] ** 2 / p3
        out[:, 0, 1] = out[:, 1, 0] = 2.0 * major * x[:, 0] * x[:, 1] / p3
        out[:, 2, 2] = 2.0
        return out

    def morse(x):
        return x[:, 2] + tilt * x[:, 0]

    def morse_grad(x):
        g = np.zeros_like(x)
        g[:, 0] = tilt
        g[:, 2] = 1.0
        return g

    def morse_hess(x):
        return np.zeros((x.shape[0], 3, 3))

    v, g, h = _wrap_fields(value, grad, hess)
    mv, mg, mh = _wrap_fields(morse, morse_grad, morse_hess)
    return ImplicitQuotientSurface(
        name="torus", level=v, level_grad=g, level_hess=h,
        morse=mv, morse_grad=mg, morse_hess=mh,
        group=group_from_generators(group),
        tolerances=tolerances or Tolerances(),
        euler_characteristic=0)


def epsilon_sphere_surface(epsilon=0.8, group=("rotation_pi_z",), tolerances=None):
    """Unit sphere with f = z + epsilon (x^2 - y^2), invariant under the
    half-turn about the z-axis.  For epsilon > 1/2 the poles are saddles
    whose descending line is reversed by the half-turn."""

    def value(x):
        return np.einsum("ij,ij->i", x, x) - 1.0

    def grad(x):
        return 2.0 * x

    def hess(x):
        return np.broadcast_to(2.0 * np.eye(3), (x.shape[0], 3, 3)).copy()

    def morse(x):
        return x[:, 2] + epsilon * (x[:, 0] ** 2 - x[:, 1] ** 2)

    def morse_grad(x):
        return np.stack([2.0 * epsilon * x[:, 0],
                         -2.0 * epsilon * x[:, 1],
                         np.ones(x.shape[0])], axis=1)

    def morse_hess(x):
        out = np.zeros((x.shape[0], 3, 3))
        out[:, 0, 0] = 2.0 * epsilon
        out[:, 1, 1] = -2.0 * epsilon
        return out

    def namer(pos):
        if np.linalg.norm(pos - np.array([0.0, 0.0, 1.0])) < 1e-4:
            return "north_pole"
        if np.linalg.norm(pos - np.array([0.0, 0.0, -1.0])) < 1e-4:
            return "south_pole"
        return None

    v, g, h = _wrap_fields(value, grad, hess)
    mv, mg, mh = _wrap_fields(morse, morse_grad, morse_hess)
    return ImplicitQuotientSurface(
        name="epsilon_sphere", level=v, level_grad=g, level_hess=h,
        morse=mv, morse_grad=mg, morse_hess=mh,
        group=group_from_generators(group),
        tolerances=tolerances or Tolerances(),
        euler_characteristic=2,
        point_namer=namer)


def surface_from_spec(kind, params=None, group=(), tolerances=None):
    params = dict(params or {})
    if kind == "sphere":
        return sphere_surface(tolerances=tolerances, group=tuple(group))
    if kind == "torus":
        return torus_surface(tolerances=tolerances, group=tuple(group), **params)
    if kind == "epsilon_sphere":
        return epsilon_sphere_surface(
            tolerances=tolerances, group=tuple(group) or ("rotation_pi_z",),
            **params)
    raise BadParams(f"unknown surface kind {kind!r}")


# --------------------------------------------------------------------------
# basic geometry helpers

def _fibonacci_directions(n):
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    theta = i * (np.pi * (3.0 - np.sqrt(5.0)))
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)


def _project_batch(surface, pts, iters=3):
    """Newton steps along the level gradient back onto the surface."""
    x = np.array(pts, dtype=float)
    for _ in range(iters):
        val = surface.level(x)
        g = surface.level_grad(x)
        denom = np.maximum(np.einsum("ij,ij->i", g, g), 1e-300)
        x = x - (val / denom)[:, None] * g
    return x


def _velocity(surface, x):
    """Negative gradient of f projected onto the tangent planes."""
    g = surface.level_grad(x)
    n = g / np.linalg.norm(g, axis=1, keepdims=True)
    gf = surface.morse_grad(x)
    return -(gf - np.einsum("ij,ij->i", n, gf)[:, None] * n)


def _flow_jacobian(surface, x):
    """Derivative of the projected negative-gradient field at one point."""
    x = x[None]
    g = surface.level_grad(x)[0]
    norm_g = np.linalg.norm(g)
    n = g / norm_g
    hf = surface.morse_hess(x)[0]
    hF = surface.level_hess(x)[0]
    gf = surface.morse_grad(x)[0]
    projector = np.eye(3) - np.outer(n, n)
    dn = projector @ hF / norm_g
    return (-hf + np.outer(n, dn @ gf + hf @ n) + (n @ gf) * dn)


def _tangent_basis(n):
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = e - (e @ n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def _canonical_sign(vec):
    j = int(np.argmax(np.abs(vec)))
    return vec if vec[j] > 0 else -vec


def check_surface(surface, samples=1000):
    """Verify the structural invariants: the group is a closed set of
    orthogonal matrices and both fields are invariant on surface samples."""
    tol = surface.tolerances.stab_tol
    group = surface.group
    if not group:
        raise BadParams("the group must at least contain the identity")

    def key(g):
        return tuple(np.round(g, 9).ravel())

    keys = {key(g) for g in group}
    for g in group:
        if np.max(np.abs(g.T @ g - np.eye(3))) > tol:
            raise BadParams("group contains a non-orthogonal matrix")
        if key(np.linalg.inv(g)) not in keys:
            raise BadParams("group is not closed under inverses")
        for h in group:
            if key(g @ h) not in keys:
                raise BadParams("group is not closed under products")

    pts = _project_batch(surface, _fibonacci_directions(samples), iters=60)
    on_surface = np.abs(surface.level(pts)) < 1e-9
    pts = pts[on_surface]
    if len(pts) < samples // 2:
        raise BadParams("could not project the sample grid onto the surface")
    f_vals = surface.morse(pts)
    lvl_vals = surface.level(pts)
    for g in group:
        moved = pts @ g.T
        if np.max(np.abs(surface.morse(moved) - f_vals)) > tol:
            raise BadParams("the Morse function is not group invariant")
        if np.max(np.abs(surface.level(moved) - lvl_vals)) > tol:
            raise BadParams("the level function is not group invariant")


# --------------------------------------------------------------------------
# critical points

def _newton_critical_points(surface, seeds):
    """Batched Newton iteration on (grad f = lambda grad F, F = 0)."""
    x = _project_batch(surface, seeds, iters=60)
    g = surface.level_grad(x)
    gf = surface.morse_grad(x)
    lam = np.einsum("ij,ij->i", gf, g) / np.einsum("ij,ij->i", g, g)
    tol = surface.tolerances.newton_tol

    for _ in range(80):
        g = surface.level_grad(x)
        gf = surface.morse_grad(x)
        hF = surface.level_hess(x)
        hf = surface.morse_hess(x)
        res = np.concatenate(
            [gf - lam[:, None] * g, surface.level(x)[:, None]], axis=1)
        if np.max(np.abs(res)) < tol:
            break
        jac = np.zeros((x.shape[0], 4, 4))
        jac[:, :3, :3] = hf - lam[:, None, None] * hF
        jac[:, :3, 3] = -g
        jac[:, 3, :3] = g
        try:
            delta = np.linalg.solve(jac, -res[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.einsum("nij,nj->ni", np.linalg.pinv(jac), -res)
        step = np.clip(delta, -0.5, 0.5)
        x = x + step[:, :3]
        lam = lam + step[:, 3]
        bad = ~np.isfinite(x).all(axis=1) | (np.linalg.norm(x, axis=1) > 50.0)
        x[bad] = 0.0
        lam[bad] = 0.0

    res = np.concatenate(
        [surface.morse_grad(x) - lam[:, None] * surface.level_grad(x),
         surface.level(x)[:, None]], axis=1)
    ok = np.max(np.abs(res), axis=1) < tol
    return x[ok]


def _dedup(points, tol):
    kept = []
    for p in points:
        if not any(np.linalg.norm(p - q) < tol for q in kept):
            kept.append(p)
    return kept


def _tangent_spectrum(surface, pos):
    """Eigen-decomposition of the Hessian of f - lambda F restricted to
    the tangent plane at a critical point."""
    x = np.asarray(pos, dtype=float)
    g = surface.level_grad(x)
    n = g / np.linalg.norm(g)
    gf = surface.morse_grad(x)
    lam = float(gf @ g / (g @ g))
    h = surface.morse_hess(x) - lam * surface.level_hess(x)
    t1, t2 = _tangent_basis(n)
    m = np.array([[t1 @ h @ t1, t1 @ h @ t2],
                  [t2 @ h @ t1, t2 @ h @ t2]])
    m = 0.5 * (m + m.T)
    eigvals, eigvecs = np.linalg.eigh(m)
    return lam, eigvals, eigvecs, t1, t2


def _tangent_data(surface, pos):
    """Index, negative-eigenvalue list, and descending frame at a critical
    point."""
    lam, eigvals, eigvecs, t1, t2 = _tangent_spectrum(surface, pos)
    if np.min(np.abs(eigvals)) < surface.tolerances.degeneracy_tol:
        raise DegenerateCritical(
            f"tangent-Hessian eigenvalue {eigvals} below tolerance at {pos}")
    frame = []
    negs = []
    for k in range(2):
        if eigvals[k] < 0:
            vec = eigvecs[0, k] * t1 + eigvecs[1, k] * t2
            frame.append(_canonical_sign(vec / np.linalg.norm(vec)))
            negs.append(float(eigvals[k]))
    frame = np.array(frame) if frame else np.zeros((0, 3))
    return len(negs), lam, tuple(negs), frame


def _stab_elements(surface, pos):
    tol = surface.tolerances.stab_tol
    return tuple(i for i, g in enumerate(surface.group)
                 if np.linalg.norm(g @ pos - pos) < tol)


def _is_stable(surface, stab_idx, frame):
    tol = surface.tolerances.stab_tol
    for i in stab_idx:
        g = surface.group[i]
        for v in frame:
            if np.max(np.abs(g @ v - v)) > tol:
                return False
    return True


def find_critical_orbits(surface, extra_seeds=None):
    """Locate all critical points of f on the surface and organize them as
    group orbits, classified by index, stabilizer, and stability.

    Seeds come from a deterministic spherical grid at several radii; the
    alternating count of the points found must reproduce the surface's
    Euler characteristic, otherwise the grid missed a point and
    SeedGridExhausted is raised.
    """
    check_surface(surface)
    tols = surface.tolerances
    dirs = _fibonacci_directions(tols.seed_count)
    seeds = np.concatenate([r * dirs for r in tols.seed_radii], axis=0)
    if extra_seeds is not None and len(extra_seeds):
        seeds = np.concatenate([seeds, np.asarray(extra_seeds, dtype=float)],
                               axis=0)

    found = _newton_critical_points(surface, seeds)
    points = _dedup(list(found), tols.dedup_tol)

    # Close the set under the group action: the image of a critical point
    # under an invariance is a critical point exactly.
    closed = list(points)
    for p in points:
        for g in surface.group:
            q = g @ p
            if not any(np.linalg.norm(q - r) < tols.dedup_tol for r in closed):
                closed.append(q)

    # partition into orbits
    identity_index = next(
        (i for i, g in enumerate(surface.group)
         if np.max(np.abs(g - np.eye(3))) < tols.stab_tol), None)
    if identity_index is None:
        raise BadParams("the group does not contain the identity")
    remaining = sorted(closed, key=lambda p: tuple(np.round(p, 9)))
    orbits_raw = []
    while remaining:
        rep = remaining.pop(0)
        lift_positions = [rep]
        lift_elems = [identity_index]
        for gi, g in enumerate(surface.group):
            q = g @ rep
            if np.linalg.norm(q - rep) < tols.dedup_tol:
                continue
            if not any(np.linalg.norm(q - r) < tols.dedup_tol
                       for r in lift_positions):
                lift_positions.append(q)
                lift_elems.append(gi)
        still = []
        for p in remaining:
            if any(np.linalg.norm(p - q) < tols.dedup_tol for q in lift_positions):
                continue
            still.append(p)
        remaining = still
        orbits_raw.append((lift_positions, lift_elems))

    orbits = []
    for lift_positions, lift_elems in orbits_raw:
        index, lam, negs, frame = _tangent_data(surface, lift_positions[0])
        rep_stab = _stab_elements(surface, lift_positions[0])
        stable = _is_stable(surface, rep_stab, frame)
        pts = []
        for pos, gi in zip(lift_positions, lift_elems):
            g = surface.group[gi]
            pts.append(NumericCriticalPoint(
                position=np.array(pos, dtype=float),
                index=index,
                multiplier=lam,
                stab_elements=_stab_elements(surface, pos),
                negative_frame=frame @ g.T,
                neg_eigenvalues=negs,
                stable=stable,
                orientation=1,
            ))
        if len(pts) * len(pts[0].stab_elements) != len(surface.group):
            raise NonConvergentTrajectory(
                "orbit size times stabilizer order does not equal the group"
                " order; duplicate-merge tolerance is inconsistent")
        orbits.append(CriticalOrbit(label="", points=pts,
                                    lift_elements=tuple(lift_elems)))

    # Euler-characteristic sanity check over all lifts upstairs.
    if surface.euler_characteristic is not None:
        total = sum((-1) ** (o.index % 2) * len(o.points) for o in orbits)
        if total != surface.euler_characteristic:
            raise SeedGridExhausted(
                f"alternating critical count {total} does not match the "
                f"surface Euler characteristic {surface.euler_characteristic}")

    orbits.sort(key=lambda o: (-o.index,
                               tuple(np.round(o.representative.position, 9))))
    class_names = {2: "max", 1: "saddle", 0: "min"}
    counters = {}
    for orbit in orbits:
        name = None
        if surface.point_namer is not None:
            name = surface.point_namer(orbit.representative.position)
        if name is None:
            word = class_names.get(orbit.index, f"ind{orbit.index}")
            counters[word] = counters.get(word, 0)
            name = f"{word}{counters[word]}"
            counters[word] += 1
        orbit.label = name
    return orbits


# --------------------------------------------------------------------------
# flow-line counting

@dataclass
class _TransportResult:
    lift: int | None
    frames: np.ndarray
    velocity: np.ndarray
    best_saddle: tuple | None  # (distance, lift, position, frames, velocity)


class FlowLineCounter:
    """Counts signed flow lines between stable critical orbits.

    Shooting starts from one representative per source orbit: every group
    orbit of flow lines meets the chosen lift exactly once because
    stabilizers are constant along flows and fix the descending directions
    of a stable point.  Results are cached per source orbit.
    """

    def __init__(self, surface, orbits):
        self.surface = surface
        self.orbits = list(orbits)
        self.tols = surface.tolerances
        positions = []
        self.lift_orbit = []
        self.lift_frame = []
        self.lift_index = []
        for oi, orbit in enumerate(self.orbits):
            for p in orbit.points:
                positions.append(p.position)
                self.lift_orbit.append(oi)
                self.lift_frame.append(p.negative_frame)
                self.lift_index.append(p.index)
        self.lift_positions = np.array(positions)
        self.lift_orbit = np.array(self.lift_orbit)
        self.lift_index = np.array(self.lift_index)
        self.saddle_lifts = np.nonzero(self.lift_index == 1)[0]
        if len(self.lift_positions) > 1:
            diffs = self.lift_positions[:, None, :] - self.lift_positions[None, :, :]
            dists = np.linalg.norm(diffs, axis=2)
            np.fill_diagonal(dists, np.inf)
            self._min_separation = float(dists.min())
        else:
            self._min_separation = np.inf
        self.passage_radius = min(0.1, 0.3 * self._min_separation)
        # a genuine separatrix evaluation approaches its saddle much closer
        # than any grazing artifact, which by construction sits at the
        # passage-ball boundary
        self._approach_tol = 0.5 * self.passage_radius
        # keep integration steps inside the stability region of the stiffest
        # critical point (frame transport uses a midpoint rule, bound ~2)
        stiffest = 0.0
        for orbit in self.orbits:
            _, eigvals, _, _, _ = _tangent_spectrum(
                surface, orbit.representative.position)
            stiffest = max(stiffest, float(np.max(np.abs(eigvals))))
        dt_max = 10.0 * self.tols.integrate_step
        if stiffest > 0.0:
            dt_max = min(dt_max, 1.5 / stiffest)
        self._dt_max = dt_max
        self._hits_cache = {}

    # -- public API --------------------------------------------------------

    def count(self, from_orbit, to_orbit):
        fi = self._orbit_index(from_orbit)
        ti = self._orbit_index(to_orbit)
        source, target = self.orbits[fi], self.orbits[ti]
        if not source.stable or not target.stable:
            raise UnstableEndpoint(
                f"cannot count flows between {source.label!r} and "
                f"{target.label!r}: both orbits must be stable")
        if source.index - target.index != 1:
            raise ValueError(
                f"flow counting needs an index gap of exactly 1, got "
                f"{source.index} -> {target.index}")
        flag = (source.representative.orientation
                * target.representative.orientation)
        return flag * sum(sign for lift, sign in self._hits(fi)
                          if self.lift_orbit[lift] == ti)

    def _orbit_index(self, orbit):
        for i, o in enumerate(self.orbits):
            if o is orbit or o.label == getattr(orbit, "label", orbit):
                return i
        raise KeyError(f"orbit {orbit!r} is not part of this counter")

    # -- integration helpers ------------------------------------------------

    def _step_sizes(self, speed):
        return np.minimum(self.tols.integrate_step / np.maximum(speed, 1e-300),
                          self._dt_max)

    def _rk4(self, x, dt):
        s = self.surface
        k1 = _velocity(s, x)
        k2 = _velocity(s, x + 0.5 * dt[:, None] * k1)
        k3 = _velocity(s, x + 0.5 * dt[:, None] * k2)
        k4 = _velocity(s, x + dt[:, None] * k3)
        xn = x + dt[:, None] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return _project_batch(s, xn, iters=2), k1

    def _classify_batch(self, starts):
        """Integrate a batch to its limiting critical lifts.

        Returns one label per row: (lift, passages) where passages records,
        in order, each saddle lift whose neighborhood the trajectory
        crossed together with the sign of the unstable branch it left on.
        The label is a locally constant function of the start within one
        basin sector, so label changes bracket separatrices even when both
        sectors drain to the same minimum.
        """
        x = np.array(starts, dtype=float)
        b = x.shape[0]
        finished = np.zeros(b, dtype=bool)
        final_lift = np.full(b, -1, dtype=int)
        passages = [[] for _ in range(b)]
        saddles = self.saddle_lifts
        inside = np.zeros((b, len(saddles)), dtype=bool)
        escape = self.tols.escape_radius

        for _ in range(_MAX_STEPS):
            speed_vec = _velocity(self.surface, x)
            speed = np.linalg.norm(speed_vec, axis=1)
            dt = self._step_sizes(speed)
            dt[finished] = 0.0
            xn, _ = self._rk4(x, dt)
            x = np.where(finished[:, None], x, xn)

            dists = np.linalg.norm(
                x[:, None, :] - self.lift_positions[None, :, :], axis=2)
            nearest = np.argmin(dists, axis=1)
            dmin = dists[np.arange(b), nearest]

            if len(saddles):
                now_inside = dists[:, saddles] < self.passage_radius
                exited = inside & ~now_inside & ~finished[:, None]
                for row, col in zip(*np.nonzero(exited)):
                    lift = saddles[col]
                    u = self.lift_frame[lift][0]
                    branch = 1 if (x[row] - self.lift_positions[lift]) @ u >= 0 else -1
                    passages[row].append((int(lift), branch))
                inside = now_inside

            captured = ~finished & (dmin < _CAPTURE_RADIUS)
            final_lift[captured] = nearest[captured]
            finished |= captured

            stalled = ~finished & (speed < _STALL_SPEED)
            if np.any(stalled):
                near = stalled & (dmin < self.tols.dedup_tol)
                final_lift[near] = nearest[near]
                finished |= near
                if np.any(stalled & ~near):
                    raise NonConvergentTrajectory(
                        "a trajectory stalled away from every critical point")
            if np.any(~finished & (np.linalg.norm(x, axis=1) > escape)):
                raise NonConvergentTrajectory("a trajectory escaped to"
                                              f" radius {escape}")
            if finished.all():
                break
        else:
            raise NonConvergentTrajectory(
                "trajectories failed to settle within the step budget")
        return [(int(final_lift[i]), tuple(passages[i])) for i in range(b)]

    def _run_transport(self, start, frames):
        """Single trajectory with the descending frame carried along by the
        linearized flow, re-orthonormalized each step; tracks the closest
        approach to any saddle lift."""
        s = self.surface
        x = np.array(start, dtype=float)
        w = np.array(frames, dtype=float)
        best = None
        escape = self.tols.escape_radius

        def renorm(x_now, w_now):
            g = s.level_grad(x_now)
            n = g / np.linalg.norm(g)
            out = []
            for v in w_now:
                v = v - (v @ n) * n
                for prev in out:
                    v = v - (v @ prev) * prev
                norm = np.linalg.norm(v)
                if norm < 1e-12:
                    raise NonConvergentTrajectory(
                        "transported frame collapsed during integration")
                out.append(v / norm)
            return np.array(out)

        w = renorm(x, w)
        for _ in range(_MAX_STEPS):
            v1 = _velocity(s, x[None])[0]
            speed = float(np.linalg.norm(v1))
            dt = float(self._step_sizes(np.array([speed]))[0])

            dists = np.linalg.norm(self.lift_positions - x[None], axis=1)
            nearest = int(np.argmin(dists))
            dmin = float(dists[nearest])
            for lift in self.saddle_lifts:
                d = float(dists[lift])
                if best is None or d < best[0]:
                    best = (d, int(lift), x.copy(), w.copy(), v1.copy())

            if dmin < _CAPTURE_RADIUS:
                return _TransportResult(nearest, w, v1, best)
            if speed < _STALL_SPEED:
                if dmin < self.tols.dedup_tol:
                    return _TransportResult(nearest, w, v1, best)
                raise NonConvergentTrajectory(
                    "transport trajectory stalled away from critical points")
            if np.linalg.norm(x) > escape:
                raise NonConvergentTrajectory("transport trajectory escaped")

            # position step (RK4) together with a midpoint step on frames
            dt_vec = np.array([dt])
            xn, _ = self._rk4(x[None], dt_vec)
            xmid = x + 0.5 * dt * v1
            j0 = _flow_jacobian(s, x)
            jm = _flow_jacobian(s, xmid)
            w_half = w + 0.5 * dt * (w @ j0.T)
            w = w + dt * (w_half @ jm.T)
            x = xn[0]
            w = renorm(x, w)
        raise NonConvergentTrajectory(
            "transport trajectory failed to settle within the step budget")

    # -- descending-trajectory census per source orbit ----------------------

    def _hits(self, orbit_index):
        if orbit_index not in self._hits_cache:
            orbit = self.orbits[orbit_index]
            if orbit.index == 1:
                hits = self._hits_from_saddle(orbit)
            elif orbit.index == 2:
                hits = self._hits_from_maximum(orbit)
            else:
                hits = ()
            self._hits_cache[orbit_index] = hits
        return self._hits_cache[orbit_index]

    def _start_points(self, rep, directions):
        starts = rep.position[None] + self.tols.shoot_offset * directions
        return _project_batch(self.surface, starts, iters=10)

    def _hits_from_saddle(self, orbit):
        rep = orbit.representative
        v = rep.negative_frame[0]
        hits = []
        for sgn in (1.0, -1.0):
            start = self._start_points(rep, sgn * v[None])[0]
            result = self._run_transport(start, rep.negative_frame)
            if result.lift is None:
                raise NonConvergentTrajectory("descending trajectory lost")
            idx = self.lift_index[result.lift]
            if idx >= orbit.index:
                raise BrokenFlowDetected(
                    f"descending trajectory of {orbit.label!r} limits to an"
                    f" index-{idx} point: the pair is not Morse-Smale")
            vhat = result.velocity / np.linalg.norm(result.velocity)
            dot = float(result.frames[0] @ vhat)
            if abs(dot) < 1e-6:
                raise NonConvergentTrajectory(
                    "transported frame is orthogonal to the arrival direction")
            hits.append((int(result.lift), 1 if dot > 0 else -1))
        return tuple(hits)

    def _hits_from_maximum(self, orbit):
        rep = orbit.representative
        v1, v2 = rep.negative_frame
        count = self.tols.shoot_directions

        def directions(angles):
            angles = np.asarray(angles, dtype=float)
            return (np.cos(angles)[:, None] * v1[None]
                    + np.sin(angles)[:, None] * v2[None])

        def classify(angles):
            starts = self._start_points(rep, directions(np.asarray(angles)))
            return self._classify_batch(starts)

        grid = np.arange(count) * (2.0 * np.pi / count)
        labels = classify(grid)

        separatrix_angles = []
        brackets = []
        for i in range(count):
            j = (i + 1) % count
            li, lj = labels[i], labels[j]
            if self.lift_index[li[0]] == 1:
                # the grid direction hit a separatrix dead-on
                separatrix_angles.append(grid[i])
                continue
            if self.lift_index[lj[0]] == 1 or li == lj:
                continue
            lo = grid[i]
            hi = grid[i] + 2.0 * np.pi / count
            brackets.append((lo, hi, li, lj))

        # refine all brackets in lockstep; a midpoint with a third label
        # splits its bracket
        target = self.tols.bisect_width
        while brackets and max(hi - lo for lo, hi, _, _ in brackets) > target:
            if len(brackets) > 64:
                raise NonConvergentTrajectory(
                    "basin boundary structure is finer than the shooting"
                    " grid can resolve")
            mids = [0.5 * (lo + hi) for lo, hi, _, _ in brackets]
            mid_labels = classify(mids)
            refined = []
            for (lo, hi, li, lj), mid, lm in zip(brackets, mids, mid_labels):
                if self.lift_index[lm[0]] == 1:
                    separatrix_angles.append(mid)
                elif lm == li:
                    refined.append((mid, hi, lm, lj))
                elif lm == lj:
                    refined.append((lo, mid, li, lm))
                else:
                    refined.append((lo, mid, li, lm))
                    refined.append((mid, hi, lm, lj))
            brackets = refined
        separatrix_angles.extend(0.5 * (lo + hi) for lo, hi, _, _ in brackets)
        separatrix_angles.sort()

        hits = []
        for angle in separatrix_angles:
            start = self._start_points(rep, directions([angle]))[0]
            result = self._run_transport(start, rep.negative_frame)
            if result.best_saddle is None:
                raise NonConvergentTrajectory(
                    "no saddle approach recorded on a separatrix trajectory")
            dist, lift, pos, w, vel = result.best_saddle
            if dist > self._approach_tol:
                # label change without a saddle passage: a grazing artifact
                continue
            g = self.surface.level_grad(pos)
            n = g / np.linalg.norm(g)
            vhat = vel / np.linalg.norm(vel)
            u = self.lift_frame[lift][0]
            u = u - (u @ n) * n
            u /= np.linalg.norm(u)
            left = float(np.cross(w[0], w[1]) @ n)
            right = float(np.cross(vhat, u) @ n)
            if abs(right) < 1e-6 or abs(left) < 1e-6:
                raise NonConvergentTrajectory(
                    "degenerate orientation comparison at a saddle arrival")
            hits.append((int(lift), 1 if left * right > 0 else -1))
        return tuple(hits)


def count_flow_lines(surface, orbits, from_orbit, to_orbit):
    """Signed count of flow lines between two stable orbits with index gap
    one.  Convenience wrapper; reuse a FlowLineCounter to share trajectory
    work across pairs."""
    return FlowLineCounter(surface, orbits).count(from_orbit, to_orbit)


# --------------------------------------------------------------------------
# numerical stabilization

def stabilize_numeric(surface, point, orbits, width=None, amplitude=None):
    """Subtract an orbit of radial bumps to stabilize an index-1 point
    whose descending line is reversed by its stabilizer.

    The bump turns the point into a local minimum of the surface function
    and creates two new index-1 points on the former descending line; when
    the stabilizer swaps them they form one free orbit.  The modified
    function stays group invariant because the bump is summed over the
    whole orbit of centers.
    """
    if point.index != 1 or point.stable:
        raise UnsupportedProfile(
            "numerical stabilization needs an index-1 point whose descending"
            " line is reversed by the stabilizer")

    centers = None
    for orbit in orbits:
        for p in orbit.points:
            if np.linalg.norm(p.position - point.position) < 1e-9:
                centers = np.array([q.position for q in orbit.points])
    if centers is None:
        raise UnsupportedProfile("the point does not belong to the orbit list")

    all_positions = np.concatenate(
        [[p.position for p in o.points] for o in orbits])
    nearest = np.inf
    for c in centers:
        d = np.linalg.norm(all_positions - c[None], axis=1)
        d = d[d > 1e-9]
        nearest = min(nearest, float(d.min()))

    lam = abs(min(point.neg_eigenvalues))
    if width is None:
        width = 0.25 * nearest
    if width > 0.5 * nearest:
        raise BumpTooWide(
            f"bump width {width} exceeds half the nearest critical distance"
            f" {nearest}")
    if amplitude is None:
        amplitude = 2.0 * lam * width ** 2
    if amplitude <= lam * width ** 2:
        raise BadParams(
            f"amplitude {amplitude} must exceed {lam * width ** 2} to flip"
            " the point into a local minimum")

    a2 = width ** 2
    base_value = surface.morse
    base_grad = surface.morse_grad
    base_hess = surface.morse_hess

    def bump_parts(x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xb = x[None] if single else x
        diff = xb[:, None, :] - centers[None, :, :]
        e = amplitude * np.exp(-np.einsum("ncj,ncj->nc", diff, diff) / a2)
        return xb, diff, e, single

    def morse(x):
        xb, diff, e, single = bump_parts(x)
        val = base_value(xb) - e.sum(axis=1)
        return val[0] if single else val

    def morse_grad(x):
        xb, diff, e, single = bump_parts(x)
        g = base_grad(xb) + (2.0 / a2) * np.einsum("nc,ncj->nj", e, diff)
        return g[0] if single else g

    def morse_hess(x):
        xb, diff, e, single = bump_parts(x)
        outer = np.einsum("nci,ncj->ncij", diff, diff)
        h = (base_hess(xb)
             - (4.0 / a2 ** 2) * np.einsum("nc,ncij->nij", e, outer)
             + (2.0 / a2) * e.sum(axis=1)[:, None, None] * np.eye(3))
        return h[0] if single else h

    return dataclasses.replace(
        surface, name=surface.name + "+stabilized",
        morse=morse, morse_grad=morse_grad, morse_hess=morse_hess)


def stabilize_all(surface, orbits):
    """Apply stabilize_numeric to every unstable orbit and rerun the
    critical-point search, seeding it with the old lifts plus points along
    each former descending line where the new saddles appear."""
    unstable = [o for o in orbits if not o.stable]
    seeds = [p.position for o in orbits for p in o.points]
    current = surface
    for orbit in unstable:
        rep = orbit.representative
        all_positions = np.concatenate(
            [[p.position for p in o.points] for o in orbits])
        dists = np.linalg.norm(all_positions - rep.position[None], axis=1)
        nearest = float(dists[dists > 1e-9].min())
        width = 0.25 * nearest
        current = stabilize_numeric(current, rep, orbits, width=width)
        for p in orbit.points:
            v = p.negative_frame[0]
            for t in (0.4, 0.8, 1.2, 1.6, 2.2, 3.0):
                seeds.append(p.position + t * width * v)
                seeds.append(p.position - t * width * v)
    new_orbits = find_critical_orbits(current, extra_seeds=np.array(seeds))
    return current, new_orbits


# --------------------------------------------------------------------------
# descent to the quotient datum

def quotient_to_datum(surface, orbits, counter=None):
    """Build the Morse datum of the quotient: one critical point per
    orbit with the stabilizer order of its lifts, and one signed count per
    index-gap-1 pair of orbits.  The result is checked: it must validate
    and both of its boundary operators must square to zero."""
    from .morse_datum import coinvariant_complex, invariant_complex
    from .errors import BoundarySquaredNonzero

    unstable = sorted(o.label for o in orbits if not o.stable)
    if unstable:
        raise UnstableEndpoint(f"unstable points: {', '.join(unstable)}")
    if counter is None:
        counter = FlowLineCounter(surface, orbits)
    points = tuple(CriticalPointRecord(
        id=o.label, index=o.index, stab_order=o.stab_order, stable=True)
        for o in orbits)
    flows = []
    for src in orbits:
        for dst in orbits:
            if src.index - dst.index == 1:
                flows.append(FlowCount(src.label, dst.label,
                                       counter.count(src, dst)))
    datum = MorseDatum(points=points, flows=tuple(flows), ambient_dimension=2)
    report = validate(datum)
    if not report.ok:
        raise NonConvergentTrajectory(
            f"numerically produced datum is invalid: {report.violations}")
    try:
        coinvariant_complex(datum)
        invariant_complex(datum)
    except BoundarySquaredNonzero as exc:
        raise BoundarySquaredNonzero(
            "numerically counted flows are inconsistent; a separatrix "
            "narrower than the shooting grid's angular resolution was "
            f"probably missed ({exc})") from exc
    return datum
