"""Share-distribution schemes: constructors, particle assignment, search.

A scheme is an isometry from the one-qubit secret into n particle
registers, given by the images of |0> and |1>, plus an assignment of
particles to holders.  Holders are the players P1..Pn and optionally
DEALER; dealer-retained particles never count toward any player subset
and are traced out during verification.

Particle p occupies register "p<p>"; particle 1 is the most significant
bit of an image ket, matching the register layout convention.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .qstate import ISOMETRY_TOL, PureState, RegisterLayout, apply_isometry, purify_secret
from .structures import AccessStructure, PlayerSubset, _bit_positions

MAX_SEARCH_PARTICLES = 7
DEALER = "DEALER"


class SchemeError(ValueError):
    """Malformed scheme, assignment, or family parameters."""


def particle_labels(m):
    return tuple(f"p{i}" for i in range(1, m + 1))


def _validate_assignment(assignment, num_particles):
    holders = dict(assignment)
    players = [h for h in holders if h != DEALER]
    n = len(players)
    if n == 0:
        raise SchemeError("assignment needs at least one player")
    indices = sorted(
        int(h[1:]) for h in players if h.startswith("P") and h[1:].isdigit()
    )
    if indices != list(range(1, n + 1)):
        raise SchemeError(f"players must be named P1..P{n} contiguously, got {sorted(players)}")
    seen = {}
    for holder, particles in holders.items():
        for p in particles:
            if not 1 <= p <= num_particles:
                raise SchemeError(f"particle {p} out of range 1..{num_particles}")
            if p in seen:
                raise SchemeError(f"particle {p} assigned to both {seen[p]} and {holder}")
            seen[p] = holder
    missing = sorted(set(range(1, num_particles + 1)) - set(seen))
    if missing:
        raise SchemeError(f"particles {missing} are unassigned")
    return {h: tuple(sorted(holders[h])) for h in holders}


@dataclass(eq=False)
class SchemeSpec:
    """Basis-image isometry plus a particle-to-holder assignment."""

    num_particles: int
    basis_images: np.ndarray
    assignment: dict
    name: str = ""

    def __post_init__(self):
        images = np.asarray(self.basis_images, dtype=np.complex128)
        if images.shape != (2, 1 << self.num_particles):
            raise SchemeError(
                f"basis images must have shape (2, {1 << self.num_particles}), got {images.shape}"
            )
        gram = images @ images.conj().T
        if np.max(np.abs(gram - np.eye(2))) > ISOMETRY_TOL:
            raise SchemeError("basis images are not orthonormal: not an isometry")
        self.basis_images = images
        self.assignment = _validate_assignment(self.assignment, self.num_particles)

    @property
    def num_players(self):
        return sum(1 for h in self.assignment if h != DEALER)

    @property
    def dealer_particles(self):
        return self.assignment.get(DEALER, ())

    def particles_of(self, player_bits):
        """Sorted particle indices jointly held by the players in the bitmask."""
        out = []
        for pos in _bit_positions(player_bits):
            out.extend(self.assignment.get(f"P{pos + 1}", ()))
        return tuple(sorted(out))

    def particle_mask(self, player):
        mask = 0
        for p in self.assignment.get(player, ()):
            mask |= 1 << (p - 1)
        return mask

    def registers_of(self, player_bits):
        return tuple(f"p{p}" for p in self.particles_of(player_bits))

    def __eq__(self, other):
        if not isinstance(other, SchemeSpec):
            return NotImplemented
        return (
            self.num_particles == other.num_particles
            and np.array_equal(self.basis_images, other.basis_images)
            and self.assignment == other.assignment
        )


def identity_assignment(n):
    return {f"P{i}": (i,) for i in range(1, n + 1)}


def apply_to_secret(scheme, alpha, beta):
    """State over the particle registers for a known pure secret a|0>+b|1>."""
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise SchemeError("secret amplitudes are not normalized")
    amps = alpha * scheme.basis_images[0] + beta * scheme.basis_images[1]
    return PureState(RegisterLayout(particle_labels(scheme.num_particles)), amps)


def distribute_purified(scheme, probabilities=(0.5, 0.5)):
    """Purify the secret mixture and push it through the scheme isometry.

    Returns the global state over (R, p1..pm); this is the object all
    entropy verification runs on.
    """
    state = purify_secret(probabilities)
    return apply_isometry(state, "S", particle_labels(scheme.num_particles), scheme.basis_images)


def antichain_reduce(n, masks):
    """Minimal elements of a family of subset bitmasks."""
    unique = sorted(set(masks))
    keep = []
    for m in unique:
        if not any(o != m and o & m == o for o in unique):
            keep.append(m)
    return AccessStructure.from_masks(n, keep)


def block_structure(n, block):
    """Authorized sets: the block plus one outsider, or the co-block plus one insider."""
    block = _as_subset(block, n)
    masks = []
    comp = block.complement().bits
    for pos in _bit_positions(comp):
        masks.append(block.bits | (1 << pos))
    for pos in _bit_positions(block.bits):
        masks.append(comp | (1 << pos))
    return antichain_reduce(n, masks)


def _as_subset(block, n):
    if isinstance(block, PlayerSubset):
        if block.n != n:
            raise SchemeError(f"block is over {block.n} players, expected {n}")
        return block
    return PlayerSubset.from_players(block, n)


def _pattern_index(block, n):
    """Flat ket index with bit 1 exactly on the block's particles."""
    idx = 0
    for p in block.players():
        idx |= 1 << (n - p)
    return idx


def build_block_scheme(n, block):
    """Scheme whose images superpose all-equal kets and the block pattern.

    |0> maps to (|0..0> + |1..1>)/sqrt(2); |1> maps to (|x> + |~x>)/sqrt(2)
    where x marks the block's particles.  Returns the scheme (identity
    assignment) together with its access structure.
    """
    if not 3 <= n <= 7:
        raise SchemeError(f"block schemes are built for 3 <= n <= 7, got {n}")
    block = _as_subset(block, n)
    if block.bits == 0 or block.bits == (1 << n) - 1:
        raise SchemeError("block must be a nonempty proper subset of the players")
    dim = 1 << n
    images = np.zeros((2, dim), dtype=np.complex128)
    images[0, 0] = images[0, dim - 1] = 1 / np.sqrt(2)
    x = _pattern_index(block, n)
    images[1, x] = images[1, (dim - 1) ^ x] = 1 / np.sqrt(2)
    name = f"block(n={n},b={{{','.join(map(str, block.players()))}}})"
    scheme = SchemeSpec(n, images, identity_assignment(n), name=name)
    return scheme, block_structure(n, block)


def build_star_scheme(n, center):
    """Scheme for the star structure: authorized sets are {center, j} pairs."""
    scheme, gamma = build_block_scheme(n, [center])
    scheme.name = f"star(n={n},center={center})"
    return scheme, gamma


def build_threshold34():
    """The four-share scheme in which any three players recover the secret."""
    scheme, _ = build_block_scheme(4, [3, 4])
    scheme.name = "threshold34"
    return scheme


def induce_structure(scheme, base_gamma):
    """Access structure on players induced by the particle assignment.

    A player subset is authorized iff the particles it jointly holds
    contain some minimal authorized particle set of the base structure;
    dealer particles are out of reach.  Result is reduced to its minimal
    antichain and may be empty if no player subset qualifies.
    """
    if base_gamma.n != scheme.num_particles:
        raise SchemeError(
            f"base structure is over {base_gamma.n} particles, scheme has {scheme.num_particles}"
        )
    n = scheme.num_players
    base_masks = base_gamma.masks()
    player_masks = [scheme.particle_mask(f"P{i}") for i in range(1, n + 1)]
    union = [0] * (1 << n)
    authorized = [False] * (1 << n)
    minimal = []
    for bits in range(1, 1 << n):
        low = bits & -bits
        union[bits] = union[bits ^ low] | player_masks[low.bit_length() - 1]
        authorized[bits] = any(union[bits] & bm == bm for bm in base_masks)
        if authorized[bits] and not any(
            authorized[bits ^ (1 << pos)] for pos in _bit_positions(bits)
        ):
            minimal.append(bits)
    return AccessStructure.from_masks(n, minimal)


def permute_particles(scheme, perm):
    """Relabel particle i as perm[i-1] in images and assignment."""
    m = scheme.num_particles
    if sorted(perm) != list(range(1, m + 1)):
        raise SchemeError(f"{perm} is not a permutation of 1..{m}")
    order = [0] * m
    for i0, j in enumerate(perm):
        order[j - 1] = i0
    images = np.stack(
        [
            scheme.basis_images[b].reshape((2,) * m).transpose(order).reshape(-1)
            for b in (0, 1)
        ]
    )
    assignment = {
        holder: tuple(sorted(perm[p - 1] for p in particles))
        for holder, particles in scheme.assignment.items()
    }
    return SchemeSpec(m, images, assignment, name=f"{scheme.name}~perm")


def _assignment_grid(num_particles, num_holders):
    """All holder^particles assignments, rows in lexicographic particle order."""
    grid = np.indices((num_holders,) * num_particles, dtype=np.int8)
    return grid.reshape(num_particles, -1).T


def _holder_particle_masks(grid, num_holders):
    """Per-row particle bitmask of each holder."""
    rows = grid.shape[0]
    masks = np.zeros((rows, num_holders), dtype=np.int32)
    arange = np.arange(rows)
    for p in range(grid.shape[1]):
        masks[arange, grid[:, p]] |= 1 << p
    return masks


def _induced_match_indices(masks, base_masks, target):
    """Row indices whose induced player closure equals the target's."""
    n = target.n
    rows = masks.shape[0]
    union = {0: np.zeros(rows, dtype=np.int32)}
    ok = np.ones(rows, dtype=bool)
    for bits in range(1, 1 << n):
        low = bits & -bits
        u = union[bits ^ low] | masks[:, low.bit_length() - 1]
        union[bits] = u
        authorized = np.zeros(rows, dtype=bool)
        for bm in base_masks:
            authorized |= (u & bm) == bm
        flag = target.contains(PlayerSubset(bits, n))
        ok &= authorized == flag
    return np.nonzero(ok)[0]


def search_assignment(base, target, allow_dealer, tolerance=1e-9):
    """Exhaustive particle-to-holder search realizing the target structure.

    base is a (scheme, structure-over-particles) pair.  Holders are the
    target's players P1..Pn, plus DEALER when allow_dealer is set, ordered
    P1 < ... < Pn < DEALER; assignments are scanned lexicographically by
    particle.  The first assignment whose induced structure equals the
    target and whose scheme then passes the generalized verification is
    returned as a holder->particles dict; None means the search exhausted.
    """
    scheme, base_gamma = base
    m = scheme.num_particles
    if base_gamma.n != m:
        raise SchemeError("base structure must be over the scheme's particles")
    if not target.n <= m <= MAX_SEARCH_PARTICLES:
        raise SchemeError(
            f"search needs target players <= particles <= {MAX_SEARCH_PARTICLES}"
        )
    from . import verifier  # deferred: verifier builds on schemes

    n = target.n
    holders = [f"P{i}" for i in range(1, n + 1)] + ([DEALER] if allow_dealer else [])
    grid = _assignment_grid(m, len(holders))
    masks = _holder_particle_masks(grid, len(holders))
    candidates = _induced_match_indices(masks[:, :n], base_gamma.masks(), target)
    if candidates.size == 0:
        return None
    checker = verifier.GeneralizedChecker(scheme, target, tolerance=tolerance)
    for idx in candidates:
        player_masks = [int(masks[idx, j]) for j in range(n)]
        if checker.passes(player_masks):
            row = grid[idx]
            return {
                holder: tuple(p + 1 for p in range(m) if row[p] == j)
                for j, holder in enumerate(holders)
            }
    return None


def save_scheme(scheme):
    """Serialize a scheme to the JSON document structure."""
    m = scheme.num_particles
    images = {}
    for b in (0, 1):
        entries = []
        for idx in range(1 << m):
            amp = scheme.basis_images[b, idx]
            if abs(amp) > 1e-15:
                entries.append(
                    {"ket": format(idx, f"0{m}b"), "re": float(amp.real), "im": float(amp.imag)}
                )
        images[str(b)] = entries
    return {
        "num_particles": m,
        "secret_dim": 2,
        "basis_images": images,
        "assignment": {h: list(ps) for h, ps in scheme.assignment.items()},
    }


def load_scheme(data, name=""):
    """Parse a scheme JSON document; normalizes images, rejects non-isometries."""
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise SchemeError("scheme document must be a JSON object")
    try:
        m = int(data["num_particles"])
        if int(data.get("secret_dim", 2)) != 2:
            raise SchemeError("only secret_dim = 2 is supported")
        raw_images = data["basis_images"]
        raw_assignment = data["assignment"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemeError(f"missing or bad field: {exc}") from exc
    images = np.zeros((2, 1 << m), dtype=np.complex128)
    for b in (0, 1):
        entries = raw_images.get(str(b))
        if not entries:
            raise SchemeError(f"no image entries for basis ket |{b}>")
        for entry in entries:
            ket = entry["ket"]
            if len(ket) != m or set(ket) - {"0", "1"}:
                raise SchemeError(f"bad ket {ket!r} for {m} particles")
            images[b, int(ket, 2)] = complex(float(entry["re"]), float(entry["im"]))
        norm = float(np.linalg.norm(images[b]))
        if norm == 0.0:
            raise SchemeError(f"image of |{b}> is the zero vector")
        if abs(norm - 1.0) > 1e-6:
            warnings.warn(
                f"image of |{b}> had norm {norm:.6g}; normalized on load", stacklevel=2
            )
        if abs(norm - 1.0) > 1e-12:  # keep exact serializations bit-identical
            images[b] /= norm
    assignment = {h: tuple(int(p) for p in ps) for h, ps in raw_assignment.items()}
    return SchemeSpec(m, images, assignment, name=name)
