"""Finite outcome spaces, algebras, measures and simple functions.

An algebra on a finite outcome space is stored as a partition: an
integer array mapping each atom to its block.  Simple functions are
constant per block (scalar- or vector-valued), finitely additive
measures assign a weight per block, and restriction sums fine weights
into coarser blocks.  These are the bookkeeping pieces that multi
period markets are built from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import AlgebraMismatch, DimensionMismatch, NotCoarser


@dataclass(frozen=True)
class OutcomeSpace:
    """A finite set of outcomes, optionally labelled."""

    atom_count: int
    atom_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError("need at least one outcome")
        if self.atom_labels is not None and len(self.atom_labels) != self.atom_count:
            raise DimensionMismatch("one label per atom required")


class Algebra:
    """A partition of atoms 0..n-1 into blocks 0..B-1.

    block_of[a] is the block containing atom a.  Block indices must be
    exactly 0..B-1 with every block nonempty, so functions and measures
    can store one value per block index.
    """

    __slots__ = ("block_of", "n_blocks")

    def __init__(self, block_of):
        block_of = np.asarray(block_of, dtype=int)
        if block_of.ndim != 1 or block_of.size == 0:
            raise ValueError("block_of must map a nonempty atom set")
        n_blocks = int(block_of.max()) + 1
        if block_of.min() < 0 or len(np.unique(block_of)) != n_blocks:
            raise ValueError("blocks must be numbered 0..B-1 with none empty")
        self.block_of = block_of
        self.block_of.setflags(write=False)
        self.n_blocks = n_blocks

    @property
    def n_atoms(self) -> int:
        return self.block_of.size

    @classmethod
    def trivial(cls, n_atoms: int) -> "Algebra":
        return cls(np.zeros(n_atoms, dtype=int))

    @classmethod
    def discrete(cls, n_atoms: int) -> "Algebra":
        return cls(np.arange(n_atoms))

    @classmethod
    def from_blocks(cls, blocks) -> "Algebra":
        """Build from an explicit list of atom index lists."""
        atoms = np.concatenate([np.asarray(b, dtype=int) for b in blocks])
        n = atoms.size
        if sorted(atoms.tolist()) != list(range(n)):
            raise ValueError("blocks must partition atoms 0..n-1")
        block_of = np.empty(n, dtype=int)
        for i, b in enumerate(blocks):
            block_of[np.asarray(b, dtype=int)] = i
        return cls(block_of)

    def blocks(self) -> list[np.ndarray]:
        """Atom indices of each block, in block order."""
        order = np.argsort(self.block_of, kind="stable")
        bounds = np.searchsorted(self.block_of[order], np.arange(self.n_blocks + 1))
        return [order[bounds[i]:bounds[i + 1]] for i in range(self.n_blocks)]

    def refines(self, coarser: "Algebra") -> bool:
        """True when every block of self lies inside one block of coarser."""
        if coarser.n_atoms != self.n_atoms:
            return False
        seen = np.full(self.n_blocks, -1, dtype=int)
        for a in range(self.n_atoms):
            f, c = self.block_of[a], coarser.block_of[a]
            if seen[f] == -1:
                seen[f] = c
            elif seen[f] != c:
                return False
        return True

    def coarse_block_map(self, coarser: "Algebra") -> np.ndarray:
        """For each block of self, the block of coarser containing it.

        Raises NotCoarser when the containment fails for some block.
        """
        if coarser.n_atoms != self.n_atoms:
            raise AlgebraMismatch("algebras live on different outcome spaces")
        out = np.full(self.n_blocks, -1, dtype=int)
        for a in range(self.n_atoms):
            f, c = self.block_of[a], coarser.block_of[a]
            if out[f] == -1:
                out[f] = c
            elif out[f] != c:
                raise NotCoarser(
                    f"block {f} straddles blocks {out[f]} and {c} of the target")
        return out

    def __eq__(self, other):
        return (isinstance(other, Algebra)
                and np.array_equal(self.block_of, other.block_of))

    def __hash__(self):
        return hash(self.block_of.tobytes())

    def __repr__(self):
        return f"Algebra({self.n_blocks} blocks on {self.n_atoms} atoms)"


def _block_values(algebra: Algebra, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim not in (1, 2) or v.shape[0] != algebra.n_blocks:
        raise DimensionMismatch(
            f"need one value (or row) per block, got shape {v.shape} for "
            f"{algebra.n_blocks} blocks")
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    return v


class SimpleFunction:
    """A function constant on each block of an algebra.

    values has shape (n_blocks,) for scalar functions or (n_blocks, m)
    for vector functions (one row per block).
    """

    __slots__ = ("algebra", "values")

    def __init__(self, algebra: Algebra, values):
        self.algebra = algebra
        self.values = _block_values(algebra, values)

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2

    def at_atoms(self) -> np.ndarray:
        """Values expanded to one entry (or row) per atom."""
        return self.values[self.algebra.block_of]

    def lift(self, finer: Algebra) -> "SimpleFunction":
        """The same function expressed on a refining algebra."""
        fine_to_coarse = finer.coarse_block_map(self.algebra)
        return SimpleFunction(finer, self.values[fine_to_coarse])

    def __repr__(self):
        kind = f"vector[{self.values.shape[1]}]" if self.is_vector else "scalar"
        return f"SimpleFunction({kind} on {self.algebra.n_blocks} blocks)"


class FAMeasure:
    """A finitely additive measure: one weight (or row) per block."""

    __slots__ = ("algebra", "weights")

    def __init__(self, algebra: Algebra, weights):
        self.algebra = algebra
        self.weights = _block_values(algebra, weights)

    @property
    def is_vector(self) -> bool:
        return self.weights.ndim == 2

    def mass(self):
        """Total weight over all blocks."""
        total = self.weights.sum(axis=0)
        return float(total) if np.ndim(total) == 0 else total

    def __repr__(self):
        return f"FAMeasure({self.weights.shape} on {self.algebra.n_blocks} blocks)"


def product(f: SimpleFunction, mu: FAMeasure) -> FAMeasure:
    """The measure (f mu)(b) = f(b) mu(b), blockwise.

    A vector function times a scalar measure gives a vector measure.
    """
    if f.algebra != mu.algebra:
        raise AlgebraMismatch("function and measure live on different algebras")
    fv, mw = f.values, mu.weights
    if fv.ndim == 2 and mw.ndim == 1:
        out = fv * mw[:, None]
    elif fv.ndim == 1 and mw.ndim == 2:
        out = fv[:, None] * mw
    else:
        out = fv * mw
    return FAMeasure(f.algebra, out)


def restrict(mu: FAMeasure, coarser: Algebra) -> FAMeasure:
    """Sum the weights of mu into the blocks of a coarser algebra."""
    fine_to_coarse = mu.algebra.coarse_block_map(coarser)
    shape = (coarser.n_blocks,) if mu.weights.ndim == 1 else (coarser.n_blocks,
                                                              mu.weights.shape[1])
    out = np.zeros(shape)
    np.add.at(out, fine_to_coarse, mu.weights)
    return FAMeasure(coarser, out)


def pairing(f: SimpleFunction, mu: FAMeasure):
    """The dual pairing <f, mu> = sum over blocks of f(b) mu(b).

    Scalar against scalar gives a float; when exactly one side is
    vector-valued the result is a vector; vector against vector
    contracts both indices to a float.
    """
    if f.algebra != mu.algebra:
        raise AlgebraMismatch("function and measure live on different algebras")
    fv, mw = f.values, mu.weights
    if fv.ndim == 1 and mw.ndim == 1:
        return float(fv @ mw)
    if fv.ndim == 2 and mw.ndim == 2:
        return float((fv * mw).sum())
    if fv.ndim == 2:
        return fv.T @ mw
    return mw.T @ fv


def conditional_price_check(y: SimpleFunction, p: FAMeasure,
                            x: SimpleFunction, q: FAMeasure,
                            tol: float = 1e-9) -> bool:
    """Does Y P equal the restriction of X Q to Y's algebra, blockwise?

    Y and P must share a coarse algebra, X and Q a finer one.  This is
    the conditional-price identity: Y is the price on coarse blocks of
    the payoff X priced by Q on fine blocks.
    """
    lhs = product(y, p)
    rhs = restrict(product(x, q), y.algebra)
    return bool(np.max(np.abs(lhs.weights - rhs.weights)) <= tol)


class Filtration:
    """An increasing sequence of algebras on one outcome space.

    By default consecutive algebras must refine their predecessors.
    relaxed=True skips that check; restriction between levels then
    fails only where an actual block containment is violated.
    """

    def __init__(self, algebras, relaxed: bool = False):
        algebras = list(algebras)
        if not algebras:
            raise ValueError("a filtration needs at least one algebra")
        n = algebras[0].n_atoms
        for alg in algebras:
            if alg.n_atoms != n:
                raise AlgebraMismatch("all algebras must share the atom set")
        if not relaxed:
            for j in range(len(algebras) - 1):
                if not algebras[j + 1].refines(algebras[j]):
                    raise NotCoarser(
                        f"algebra {j + 1} does not refine algebra {j}; "
                        "pass relaxed=True to allow this")
        self.algebras = algebras
        self.relaxed = relaxed

    @property
    def n_atoms(self) -> int:
        return self.algebras[0].n_atoms

    def __len__(self):
        return len(self.algebras)

    def __getitem__(self, j) -> Algebra:
        return self.algebras[j]


def binary_tree_filtration(n_periods: int) -> Filtration:
    """The filtration of a recombining-free binary tree.

    Atoms are the 2**n paths; at time j two paths share a block exactly
    when their first j moves agree, so block b of algebra j is the move
    prefix read as a binary number (bit set = up move).
    """
    if n_periods < 1:
        raise ValueError("need at least one period")
    atoms = np.arange(2 ** n_periods)
    algebras = [Algebra(atoms >> (n_periods - j)) for j in range(n_periods + 1)]
    return Filtration(algebras)


def random_walk(n_periods: int):
    """Symmetric random walk on the binary tree.

    Returns (filtration, walk, probability): walk[j] is the simple
    function Z_j = ups - downs after j moves, and probability is the
    uniform measure on the finest algebra, weight 2**-n per path.
    """
    filtration = binary_tree_filtration(n_periods)
    walk = []
    for j, algebra in enumerate(filtration.algebras):
        prefixes = np.arange(algebra.n_blocks)
        ups = np.array([bin(p).count("1") for p in prefixes])
        walk.append(SimpleFunction(algebra, 2.0 * ups - j))
    probability = FAMeasure(filtration[-1],
                            np.full(2 ** n_periods, 0.5 ** n_periods))
    return filtration, walk, probability
