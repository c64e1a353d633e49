"""Combinatorics of quantum access structures.

Players are numbered 1..n; a subset of players is a bitmask with bit i-1
standing for player Pi.  An access structure is stored as the antichain of
its minimal authorized sets; monotone-closure membership is computed on
demand instead of materializing the full 2^n family.

A structure is quantum-admissible when no two authorized sets are disjoint
(two disjoint authorized sets could each reconstruct the secret, cloning
it).  The adversary structure splits into A1 (unauthorized sets disjoint
from some authorized set) and A2 (unauthorized sets meeting every
authorized set); A2 is exactly the obstruction to perfect schemes.
"""

import itertools
import json
from dataclasses import dataclass

MAX_PLAYERS = 16
MAX_ISO_PLAYERS = 8
MAX_ENUM_PLAYERS = 6


class StructureError(ValueError):
    """Malformed subset, structure, or hypergraph input."""


def _bit_positions(mask):
    """0-based positions of set bits, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True, order=True)
class PlayerSubset:
    """A subset of the players P1..Pn, encoded as a bitmask."""

    bits: int
    n: int

    def __post_init__(self):
        if not 2 <= self.n <= MAX_PLAYERS:
            raise StructureError(f"player count must be in [2, {MAX_PLAYERS}], got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise StructureError(f"bitmask {self.bits:#x} out of range for n={self.n}")

    @classmethod
    def from_players(cls, players, n):
        bits = 0
        for p in players:
            if not 1 <= p <= n:
                raise StructureError(f"player {p} out of range 1..{n}")
            bits |= 1 << (p - 1)
        return cls(bits, n)

    def players(self):
        """1-based player indices, ascending."""
        return tuple(p + 1 for p in _bit_positions(self.bits))

    def complement(self):
        return PlayerSubset(((1 << self.n) - 1) ^ self.bits, self.n)

    def union(self, other):
        self._check_peer(other)
        return PlayerSubset(self.bits | other.bits, self.n)

    def intersection(self, other):
        self._check_peer(other)
        return PlayerSubset(self.bits & other.bits, self.n)

    def issubset(self, other):
        self._check_peer(other)
        return self.bits & other.bits == self.bits

    def isdisjoint(self, other):
        self._check_peer(other)
        return self.bits & other.bits == 0

    def _check_peer(self, other):
        if self.n != other.n:
            raise StructureError(f"player-count mismatch: {self.n} vs {other.n}")

    def __len__(self):
        return self.bits.bit_count()

    def __bool__(self):
        return self.bits != 0

    def __str__(self):
        return "{" + ",".join(f"P{p}" for p in self.players()) + "}"


@dataclass(frozen=True)
class AccessStructure:
    """Antichain of minimal authorized player subsets."""

    n: int
    minimal_sets: tuple

    def __post_init__(self):
        sets = tuple(sorted(self.minimal_sets, key=lambda s: s.bits))
        object.__setattr__(self, "minimal_sets", sets)
        seen = set()
        for s in sets:
            if s.n != self.n:
                raise StructureError(f"set {s} has player count {s.n}, expected {self.n}")
            if s.bits == 0:
                raise StructureError("minimal authorized set must be nonempty")
            if s.bits in seen:
                raise StructureError(f"duplicate minimal set {s}")
            seen.add(s.bits)
        for a, b in itertools.combinations(sets, 2):
            if a.bits & b.bits == a.bits or a.bits & b.bits == b.bits:
                raise StructureError(f"not an antichain: {a} and {b} are nested")

    @classmethod
    def from_sets(cls, n, sets):
        """Build from 1-based player collections, e.g. [[1,2,3],[1,4]]."""
        return cls(n, tuple(PlayerSubset.from_players(s, n) for s in sets))

    @classmethod
    def from_masks(cls, n, masks):
        return cls(n, tuple(PlayerSubset(m, n) for m in masks))

    def masks(self):
        return tuple(s.bits for s in self.minimal_sets)

    def contains(self, s):
        """Monotone-closure membership: some minimal set is inside s."""
        if s.n != self.n:
            raise StructureError(f"player-count mismatch: {s.n} vs {self.n}")
        return any(m.bits & s.bits == m.bits for m in self.minimal_sets)

    def __str__(self):
        return "{" + ", ".join(str(s) for s in self.minimal_sets) + "}"


@dataclass(frozen=True)
class AdversaryPartition:
    """Unauthorized subsets split into A1 (avoidable) and A2 (unavoidable)."""

    a1: tuple
    a2: tuple


@dataclass(frozen=True)
class Hypergraph:
    """Vertices 1..n with nonempty hyperedges given as PlayerSubsets."""

    n: int
    edges: tuple

    def __post_init__(self):
        if not self.edges:
            raise StructureError("hypergraph needs at least one edge")
        for e in self.edges:
            if e.n != self.n or e.bits == 0:
                raise StructureError(f"bad hyperedge {e}")


def as_hypergraph(gamma):
    """View an access structure's minimal sets as hyperedges."""
    return Hypergraph(gamma.n, gamma.minimal_sets)


def monotone_closure_contains(gamma, s):
    """True iff s contains some minimal authorized set."""
    return gamma.contains(s)


def is_quantum_admissible(gamma):
    """True iff every pair of minimal authorized sets intersects."""
    return all(
        a.bits & b.bits != 0
        for a, b in itertools.combinations(gamma.minimal_sets, 2)
    )


def is_hyperstar(h):
    """True iff all hyperedges share a common vertex."""
    common = (1 << h.n) - 1
    for e in h.edges:
        common &= e.bits
    return common != 0


def adversary_partition(gamma):
    """Classify every nonempty unauthorized subset into A1 or A2.

    A in A1 iff A is disjoint from some minimal authorized set; A in A2 iff
    A intersects every minimal authorized set.  Requires an admissible
    structure, otherwise the two predicates do not partition the adversary
    structure meaningfully.
    """
    if not is_quantum_admissible(gamma):
        raise StructureError("adversary partition requires a quantum-admissible structure")
    a1, a2 = [], []
    for bits in range(1, 1 << gamma.n):
        s = PlayerSubset(bits, gamma.n)
        if gamma.contains(s):
            continue
        if any(m.bits & bits == 0 for m in gamma.minimal_sets):
            a1.append(s)
        else:
            a2.append(s)
    return AdversaryPartition(tuple(a1), tuple(a2))


@dataclass(frozen=True)
class ComplementLawResult:
    """Outcome of the complement-classification check.

    holds is True when the complement of every A1 member is authorized and
    the complement of every A2 member is again in A2.  On failure,
    counterexample carries the first offending subset and clause names the
    violated half ("a1" or "a2").
    """

    holds: bool
    counterexample: PlayerSubset | None = None
    clause: str | None = None

    def __bool__(self):
        return self.holds


def check_complement_law(gamma):
    """Machine-check that complements of A1 members are authorized and A2 is closed under complement."""
    partition = adversary_partition(gamma)
    a2_bits = {s.bits for s in partition.a2}
    for s in partition.a1:
        if not gamma.contains(s.complement()):
            return ComplementLawResult(False, s, "a1")
    for s in partition.a2:
        if s.complement().bits not in a2_bits:
            return ComplementLawResult(False, s, "a2")
    return ComplementLawResult(True)


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Whether a perfect scheme can exist for the structure."""

    feasible: bool
    witness: PlayerSubset | None = None

    def __bool__(self):
        return self.feasible


def perfect_feasibility(gamma):
    """Perfect schemes exist iff A2 is empty; a witness from A2 is returned otherwise."""
    partition = adversary_partition(gamma)
    if partition.a2:
        return FeasibilityVerdict(False, partition.a2[0])
    return FeasibilityVerdict(True)


def threshold_structure(k, n):
    """The ((k,n)) structure: authorized sets are all subsets of size >= k."""
    if not 1 <= k <= n:
        raise StructureError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n >= 2 * k:
        raise StructureError(
            f"((({k},{n}))) is not quantum-admissible: two disjoint {k}-subsets exist"
        )
    sets = [
        PlayerSubset.from_players(c, n) for c in itertools.combinations(range(1, n + 1), k)
    ]
    return AccessStructure(n, tuple(sets))


def _remap_mask(mask, image):
    """Apply a 0-based position map to a bitmask."""
    out = 0
    for p in _bit_positions(mask):
        out |= 1 << image[p]
    return out


def are_isomorphic(g1, g2):
    """Search for a player permutation mapping g1's minimal sets onto g2's.

    Returns the permutation as a tuple (image of P1, image of P2, ...) with
    1-based entries, or None.  Brute force over all n! permutations, so n
    is capped at 8.
    """
    if g1.n != g2.n:
        raise StructureError(f"player-count mismatch: {g1.n} vs {g2.n}")
    n = g1.n
    if n > MAX_ISO_PLAYERS:
        raise StructureError(f"isomorphism search capped at n={MAX_ISO_PLAYERS}")
    m1, m2 = g1.masks(), g2.masks()
    if len(m1) != len(m2):
        return None
    if sorted(m.bit_count() for m in m1) != sorted(m.bit_count() for m in m2):
        return None
    target = tuple(sorted(m2))
    for image in itertools.permutations(range(n)):
        if tuple(sorted(_remap_mask(m, image) for m in m1)) == target:
            return tuple(image[p] + 1 for p in range(n))
    return None


def canonical_key(gamma):
    """Lexicographically least sorted bitmask tuple over all player permutations.

    Only permutations that send some smallest minimal set onto {P1..Ps}
    can realize the least first element, so the search is restricted to
    those; the result equals the full n! minimum.
    """
    masks = gamma.masks()
    if not masks:
        return ()
    n = gamma.n
    smin = min(m.bit_count() for m in masks)
    best = None
    for edge in (m for m in masks if m.bit_count() == smin):
        inside = _bit_positions(edge)
        outside = [p for p in range(n) if not (edge >> p) & 1]
        for head in itertools.permutations(range(smin)):
            for tail in itertools.permutations(range(smin, n)):
                image = [0] * n
                for pos, t in zip(inside, head):
                    image[pos] = t
                for pos, t in zip(outside, tail):
                    image[pos] = t
                key = tuple(sorted(_remap_mask(m, image) for m in masks))
                if best is None or key < best:
                    best = key
    return best


def _pinned_hyperstar_antichains(n):
    """All antichains of subsets containing player 1 whose union covers 1..n.

    Every hyperstar class has such a representative (relabel its common
    vertex to P1), so this generates at least one candidate per class.
    """
    edges = [m for m in range(1, 1 << n) if m & 1]
    full = (1 << n) - 1
    found = []

    def extend(start, chosen, union):
        for idx in range(start, len(edges)):
            e = edges[idx]
            # ascending masks: e can only be a superset of an earlier choice
            if any(c & e == c for c in chosen):
                continue
            chosen.append(e)
            new_union = union | e
            if new_union == full:
                found.append(tuple(chosen))
            extend(idx + 1, chosen, new_union)
            chosen.pop()

    extend(0, [], 0)
    return found


def enumerate_hyperstars(max_n):
    """All isomorphism classes of hyperstar structures covering n players, for n = 2..max_n.

    Returns (n, structure) pairs where each structure is the canonical
    class representative (least lexicographic bitmask list under player
    permutation), in deterministic (n, key) order.
    """
    if not 2 <= max_n <= MAX_ENUM_PLAYERS:
        raise StructureError(f"enumeration supported for 2 <= max_n <= {MAX_ENUM_PLAYERS}")
    out = []
    for n in range(2, max_n + 1):
        classes = {}
        for masks in _pinned_hyperstar_antichains(n):
            gamma = AccessStructure.from_masks(n, masks)
            key = canonical_key(gamma)
            if key not in classes:
                classes[key] = AccessStructure.from_masks(n, key)
        out.extend((n, classes[key]) for key in sorted(classes))
    return out


@dataclass(frozen=True)
class CatalogEntry:
    """A numbered hyperstar class with at most five players."""

    number: int
    structure: AccessStructure


def _entry(number, n, sets):
    return CatalogEntry(number, AccessStructure.from_sets(n, sets))


#: The sixteen hyperstar classes on 2..5 players used by the feasibility matrix.
HYPERSTAR_CATALOG = (
    _entry(1, 2, [[1, 2]]),
    _entry(2, 3, [[1, 2], [1, 3]]),
    _entry(3, 3, [[1, 2, 3]]),
    _entry(4, 4, [[1, 2], [1, 3], [1, 4]]),
    _entry(5, 4, [[1, 2, 3], [1, 4]]),
    _entry(6, 4, [[1, 2, 3], [1, 2, 4]]),
    _entry(7, 4, [[1, 2, 3, 4]]),
    _entry(8, 5, [[1, 2], [1, 3], [1, 4], [1, 5]]),
    _entry(9, 5, [[1, 2], [1, 3], [1, 4, 5]]),
    _entry(10, 5, [[1, 2], [1, 3, 4], [1, 3, 5]]),
    _entry(11, 5, [[1, 2], [1, 3, 4, 5]]),
    _entry(12, 5, [[1, 2, 3], [1, 2, 4], [1, 2, 5]]),
    _entry(13, 5, [[1, 2, 3], [1, 4, 5]]),
    _entry(14, 5, [[1, 2, 3], [1, 2, 4, 5]]),
    _entry(15, 5, [[1, 2, 3, 4], [1, 2, 3, 5]]),
    _entry(16, 5, [[1, 2, 3, 4, 5]]),
)


def catalog_number(gamma):
    """Catalog number of the class isomorphic to gamma, or None if uncataloged."""
    for entry in HYPERSTAR_CATALOG:
        if entry.structure.n == gamma.n and are_isomorphic(gamma, entry.structure) is not None:
            return entry.number
    return None


def load_structure(data):
    """Parse the access-structure JSON document.

    Accepts a JSON string or an already-decoded dict of the form
    {"players": 4, "minimal_authorized": [[1,2,3],[1,4]]} with 1-based
    player indices.  Rejects empty sets and nested (non-antichain) entries
    with a diagnostic naming the offender.
    """
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise StructureError("structure document must be a JSON object")
    try:
        n = int(data["players"])
        raw_sets = data["minimal_authorized"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"missing or bad field: {exc}") from exc
    if not isinstance(raw_sets, list) or not raw_sets:
        raise StructureError("minimal_authorized must be a nonempty list of player lists")
    subsets = []
    for raw in raw_sets:
        if not isinstance(raw, list) or not raw:
            raise StructureError(f"minimal set {raw!r} is empty or not a list")
        subsets.append(PlayerSubset.from_players(raw, n))
    for a, b in itertools.combinations(subsets, 2):
        if a.bits & b.bits in (a.bits, b.bits):
            raise StructureError(
                f"not an antichain: {sorted(a.players())} and {sorted(b.players())} are nested or equal"
            )
    return AccessStructure(n, tuple(subsets))


def structure_to_dict(gamma):
    """Inverse of load_structure."""
    return {
        "players": gamma.n,
        "minimal_authorized": [list(s.players()) for s in gamma.minimal_sets],
    }
