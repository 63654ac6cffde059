"""Moebius maps, Schottky groups and the moduli-dimension count for constant transition maps."""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .errors import DegenerateSample, InvalidModulus, InvalidSchottkyGroup
from .special_functions import as_modulus

INFINITY = complex(math.inf, 0.0)


def is_infinite(z):
    return cmath.isinf(z)


@dataclass(frozen=True)
class MoebiusMap:
    """``z -> (a z + b) / (c z + d)``, stored as an SL(2, C) representative."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0:
            raise ValueError("Moebius map must have nonzero determinant")
        s = cmath.sqrt(det)
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v / s)

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=complex)
        return cls(mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1])

    @classmethod
    def _from_sl2(cls, mat):
        # products of SL(2) matrices are already unimodular; renormalizing through
        # sqrt(det) would lose accuracy to cancellation when entries are large
        obj = object.__new__(cls)
        for name, v in zip("abcd", np.asarray(mat, dtype=complex).ravel()):
            object.__setattr__(obj, name, complex(v))
        return obj

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def inverse(self):
        return MoebiusMap._from_sl2([[self.d, -self.b], [-self.c, self.a]])

    def __matmul__(self, other):
        """Composition ``(self @ other)(z) == self(other(z))``."""
        return MoebiusMap._from_sl2(self.matrix @ other.matrix)

    def __call__(self, z):
        return moebius_apply(self, z)

    def same_element(self, other, tol=1e-12):
        """Equality in PSL(2, C), i.e. up to the overall sign of the matrix."""
        m1, m2 = self.matrix, other.matrix
        scale = max(1.0, np.abs(m1).max())
        return bool(
            np.abs(m1 - m2).max() <= tol * scale or np.abs(m1 + m2).max() <= tol * scale
        )


def moebius_apply(m, z):
    """Apply a Moebius map, treating ``INFINITY`` (any infinite complex) as the point at infinity."""
    if is_infinite(z):
        return m.a / m.c if m.c != 0 else INFINITY
    z = complex(z)
    den = m.c * z + m.d
    if den == 0:
        return INFINITY
    return (m.a * z + m.b) / den


@dataclass(frozen=True)
class Circle:
    """A circle on the sphere together with the disk it bounds.

    ``exterior=False`` means the disk is the bounded interior; ``exterior=True``
    means the disk is the complement of the closed interior (the side containing
    infinity), which is how the outer boundary of an annulus is described.
    """

    center: complex
    radius: float
    exterior: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def disk_contains(self, z, tol=1e-12):
        """True when ``z`` lies in the closed disk bounded by this circle (within ``tol``)."""
        if is_infinite(z):
            return self.exterior
        dist = abs(complex(z) - self.center)
        if self.exterior:
            return dist >= self.radius - tol
        return dist <= self.radius + tol

    def points(self, n=3):
        t = np.arange(n) * 2 * math.pi / n
        return self.center + self.radius * np.exp(1j * t)


def circle_through(z1, z2, z3, tol=1e-12):
    """Circumcircle of three finite points; raises ``ValueError`` when collinear."""
    d = 2 * ((z1 - z3).real * (z2 - z3).imag - (z1 - z3).imag * (z2 - z3).real)
    scale = max(abs(z1 - z3), abs(z2 - z3)) ** 2
    if abs(d) <= tol * scale:
        raise ValueError("points are collinear: image is a line, not a circle")
    a2 = abs(z1 - z3) ** 2
    b2 = abs(z2 - z3) ** 2
    ux = (a2 * (z2 - z3).imag - b2 * (z1 - z3).imag) / d
    uy = (b2 * (z1 - z3).real - a2 * (z2 - z3).real) / d
    center = z3 + complex(ux, uy)
    return center, abs(z1 - center)


def image_circle(m, circle):
    """Center and radius of ``m(circle)``."""
    pts = [moebius_apply(m, z) for z in circle.points(3)]
    if any(is_infinite(p) for p in pts):
        raise ValueError("circle passes through the pole of the map")
    return circle_through(*pts)


def _disks_disjoint(c1, c2, sep=1e-12):
    d = abs(c1.center - c2.center)
    if c1.exterior and c2.exterior:
        return False
    if c1.exterior:
        c1, c2 = c2, c1
    if c2.exterior:
        # bounded disk c1 must sit strictly inside circle c2
        return d + c1.radius < c2.radius - sep
    return d > c1.radius + c2.radius + sep


@dataclass(frozen=True)
class SchottkyGroup:
    """Free group on ``genus`` Moebius generators, generator ``a`` pairing ``circles[a]``."""

    genus: int
    generators: tuple
    circles: tuple
    tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "circles", tuple(tuple(pair) for pair in self.circles))
        self.validate()

    def validate(self):
        g = self.genus
        if g < 1:
            raise InvalidSchottkyGroup("genus must be positive")
        if len(self.generators) != g or len(self.circles) != g:
            raise InvalidSchottkyGroup(
                f"expected {g} generators and {g} circle pairs, "
                f"got {len(self.generators)} and {len(self.circles)}"
            )
        for idx, (gen, (src, dst)) in enumerate(zip(self.generators, self.circles)):
            try:
                center, radius = image_circle(gen, src)
            except ValueError as exc:
                raise InvalidSchottkyGroup(f"generator {idx}: {exc}", generator=idx)
            scale = max(1.0, abs(dst.center), dst.radius)
            if abs(center - dst.center) > self.tol * scale or abs(radius - dst.radius) > self.tol * scale:
                raise InvalidSchottkyGroup(
                    f"generator {idx} maps circle {idx} to center={center}, radius={radius}, "
                    f"expected center={dst.center}, radius={dst.radius}",
                    generator=idx,
                )
        disks = self.all_circles()
        for i in range(len(disks)):
            for j in range(i + 1, len(disks)):
                if not _disks_disjoint(disks[i], disks[j]):
                    raise InvalidSchottkyGroup(f"disks {i} and {j} overlap", disks=(i, j))

    def all_circles(self):
        return [c for pair in self.circles for c in pair]

    def element(self, word):
        """The group element of ``word`` as a :class:`MoebiusMap`."""
        mat = np.eye(2, dtype=complex)
        for index, exp in word.letters:
            gen = self.generators[index]
            mat = mat @ (gen.matrix if exp > 0 else gen.inverse().matrix)
        return MoebiusMap._from_sl2(mat)


@dataclass(frozen=True)
class GroupWord:
    """Word in the free generators: ``letters`` is a sequence of ``(index, +1 | -1)``.

    The word ``[(a, e1), (b, e2)]`` denotes the product ``g_a^e1 g_b^e2``; acting on a
    point, the rightmost letter is applied first.
    """

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple((int(i), int(e)) for i, e in self.letters)
        for _, e in letters:
            if e not in (1, -1):
                raise ValueError(f"exponent must be +1 or -1, got {e}")
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.letters)

    def __add__(self, other):
        return GroupWord(self.letters + other.letters)

    def inverse(self):
        return GroupWord(tuple((i, -e) for i, e in reversed(self.letters)))

    def is_reduced(self):
        return all(
            not (i1 == i2 and e1 == -e2)
            for (i1, e1), (i2, e2) in zip(self.letters, self.letters[1:])
        )


def reduce_word(w):
    """Cancel adjacent letter/inverse pairs until none remain."""
    stack = []
    for letter in w.letters:
        if stack and stack[-1][0] == letter[0] and stack[-1][1] == -letter[1]:
            stack.pop()
        else:
            stack.append(letter)
    return GroupWord(tuple(stack))


def word_apply(grp, w, z):
    z_out = z
    for index, exp in reversed(w.letters):
        gen = grp.generators[index]
        z_out = moebius_apply(gen if exp > 0 else gen.inverse(), z_out)
    return z_out


def in_fundamental_domain(grp, z, tol=1e-12):
    """True iff ``z`` is strictly outside every one of the 2g disks."""
    return not any(c.disk_contains(z, tol) for c in grp.all_circles())


def genus1(m):
    """Annulus model of the curve: generator ``z -> q z`` pairing ``|z| = 1`` with ``|z| = |q|``."""
    m = as_modulus(m)
    q = m.q
    if not 0 < abs(q) < 1:
        raise InvalidModulus(f"need 0 < |q| < 1, got |q|={abs(q)}")
    s = cmath.sqrt(q)
    gen = MoebiusMap(s, 0, 0, 1 / s)
    outer = Circle(0j, 1.0, exterior=True)
    inner = Circle(0j, abs(q))
    return SchottkyGroup(1, (gen,), ((outer, inner),))


def moduli_dimension_formula(N, g):
    """``N^2 (g - 1) + 1``."""
    if N < 1 or g < 2:
        raise ValueError("need N >= 1 and g >= 2")
    return N * N * (g - 1) + 1


def random_gl(rng, N, min_det=1e-6):
    while True:
        mat = rng.uniform(-1, 1, (N, N)) + 1j * rng.uniform(-1, 1, (N, N))
        if abs(np.linalg.det(mat)) >= min_det:
            return mat


def conjugation_linearization(mats):
    """Matrix of ``X -> ([X, g_1], ..., [X, g_g])`` acting on row-major ``vec(X)``.

    Uses ``vec(X g) = (I kron g^T) vec(X)`` and ``vec(g X) = (g kron I) vec(X)``.
    """
    N = mats[0].shape[0]
    eye = np.eye(N)
    return np.vstack([np.kron(eye, g.T) - np.kron(g, eye) for g in mats])


def kernel_dimension(A, rel_threshold=1e-8):
    sv = np.linalg.svd(A, compute_uv=False)
    n = A.shape[1]
    if sv.size == 0 or sv[0] == 0:
        return n
    return n - int(np.count_nonzero(sv > rel_threshold * sv[0]))


def _dimension_trial(N, g, seed, trial):
    rng = np.random.default_rng([seed, trial])
    mats = [random_gl(rng, N) for _ in range(g)]
    return kernel_dimension(conjugation_linearization(mats))


def moduli_dimension_numeric(N, g, trials=5, seed=0):
    """Dimension of ``(GL_N)^g / GL_N`` from the rank of the linearized conjugation action.

    Each trial draws ``g`` random invertible matrices (its own generator seeded by
    ``(seed, trial)``), finds the kernel dimension ``k`` of the linearized
    simultaneous conjugation and reports ``g N^2 - N^2 + k``.
    """
    if N < 1 or g < 2:
        raise ValueError("need N >= 1 and g >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kernels = parallel_map(lambda t: _dimension_trial(N, g, seed, t), range(trials))
    if len(set(kernels)) > 1:
        raise DegenerateSample(
            f"kernel dimension varies across trials: {kernels}", kernels=kernels
        )
    return g * N * N - N * N + max(kernels)
