"""Graded free chain complexes over the integers with labeled generators."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotAComplex, ShapeMismatch
from .exact_linalg import HomologyGroup, IntegerMatrix, homology_at

__all__ = [
    "FreeChainComplex",
    "ComplexVerdict",
    "BoundaryWitness",
    "HomologyGroup",
    "verify_complex",
    "homology",
    "euler_characteristic",
]


@dataclass(frozen=True)
class BoundaryWitness:
    """A nonzero entry of a composed boundary, naming the upper degree."""

    degree: int
    row: int
    col: int
    value: int


@dataclass(frozen=True)
class ComplexVerdict:
    ok: bool
    failures: tuple = ()

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class FreeChainComplex:
    """Free Z-complex on a contiguous degree range.

    ``generators[k]`` lists the labels in degree ``min_degree + k`` and
    ``boundaries[k]`` is the matrix of the boundary map out of that degree,
    with rows indexed by the generators one degree down.  The boundary out
    of the bottom degree maps to the zero module and therefore has zero
    rows.  The degree range is explicit, never inferred, and degrees with
    no generators are allowed.
    """

    min_degree: int
    generators: tuple
    boundaries: tuple

    def __post_init__(self):
        gens = tuple(tuple(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        if len(self.boundaries) != len(gens):
            raise ShapeMismatch(
                f"{len(gens)} degrees but {len(self.boundaries)} boundary maps")
        for k, labels in enumerate(gens):
            if len(set(labels)) != len(labels):
                raise ShapeMismatch(f"duplicate generator label in degree "
                                    f"{self.min_degree + k}")
            b = self.boundaries[k]
            if b.cols != len(labels):
                raise ShapeMismatch(
                    f"boundary out of degree {self.min_degree + k} has "
                    f"{b.cols} columns for {len(labels)} generators")
            expected_rows = len(gens[k - 1]) if k > 0 else 0
            if b.rows != expected_rows:
                raise ShapeMismatch(
                    f"boundary out of degree {self.min_degree + k} has "
                    f"{b.rows} rows, expected {expected_rows}")

    @property
    def max_degree(self):
        return self.min_degree + len(self.generators) - 1

    def degrees(self):
        return range(self.min_degree, self.min_degree + len(self.generators))

    def generator_count(self, degree):
        k = degree - self.min_degree
        if 0 <= k < len(self.generators):
            return len(self.generators[k])
        return 0

    def boundary(self, degree):
        """Matrix of the boundary map out of ``degree``."""
        k = degree - self.min_degree
        return self.boundaries[k]


def verify_complex(complex_):
    """Check that consecutive boundary maps compose to zero.

    Returns a verdict; on failure the witnesses name the upper degree and
    one nonzero entry of the composition.
    """
    failures = []
    for k in range(1, len(complex_.generators)):
        product = complex_.boundaries[k - 1] @ complex_.boundaries[k]
        if not product.is_zero():
            witness = None
            for i in range(product.rows):
                for j in range(product.cols):
                    if product[i, j] != 0:
                        witness = BoundaryWitness(
                            degree=complex_.min_degree + k,
                            row=i, col=j, value=product[i, j])
                        break
                if witness:
                    break
            failures.append(witness)
    return ComplexVerdict(ok=not failures, failures=tuple(failures))


def homology(complex_):
    """Homology groups in every degree of the complex, bottom degree first."""
    verdict = verify_complex(complex_)
    if not verdict:
        bad = ", ".join(str(w.degree) for w in verdict.failures)
        raise NotAComplex(f"boundary squared is nonzero at degree {bad}")
    groups = []
    count = len(complex_.generators)
    for k in range(count):
        out = complex_.boundaries[k]
        if k + 1 < count:
            into = complex_.boundaries[k + 1]
        else:
            into = IntegerMatrix.zeros(len(complex_.generators[k]), 0)
        groups.append(homology_at(out, into, degree=complex_.min_degree + k))
    return tuple(groups)


def euler_characteristic(complex_):
    """Alternating sum of generator counts over the degree range."""
    total = 0
    for k, labels in enumerate(complex_.generators):
        degree = complex_.min_degree + k
        total += (-1) ** (degree % 2) * len(labels)
    return total
