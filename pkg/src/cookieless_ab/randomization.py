"""Two-stage randomization: macrocluster hashing and treatment allocation.

Stage one sends every user to one of two macroclusters with a salted
deterministic hash that any cooperating site can reproduce from the same
key bytes, with no per-user state shared between sites. Stage two draws
treatments independently per site, with site 2 swapping its allocation
probability between the clusters.

The hash is fully specified so independent implementations agree
byte-for-byte:

    h = 0xcbf29ce484222325                    # FNV-1a offset basis
    for b in salt_le8 + key:                  # salt as 8 little-endian bytes
        h = (h XOR b) * 0x100000001b3 mod 2^64
    h = mix64(h)                              # finalizer below
    cluster = C1 if h is even else C2

    mix64(x): x ^= x >> 30; x *= 0xbf58476d1ce4e5b9
              x ^= x >> 27; x *= 0x94d049bb133111eb
              x ^= x >> 31                    # all mod 2^64

All simulation randomness flows through substreams derived from a base
seed and a tuple of labels, so any replication can be regenerated in
isolation and results do not depend on execution order or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Cluster, DesignConfig, Site1Treatment, Site2Exposure, EXPOSURE_INDEX
from .errors import ValidationError

_MASK64 = 0xFFFFFFFFFFFFFFFF
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MIX_MULT_1 = 0xBF58476D1CE4E5B9
_MIX_MULT_2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """Finalizing 64-bit mixer; avalanches every input bit to every output bit."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * _MIX_MULT_1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX_MULT_2) & _MASK64
    x ^= x >> 31
    return x


def fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def cluster_hash(key: bytes, salt: int) -> int:
    """64-bit hash of salt-then-key; the low bit selects the macrocluster."""
    if not key:
        raise ValidationError("cluster key must be non-empty")
    h = fnv1a64((int(salt) & _MASK64).to_bytes(8, "little"))
    return mix64(fnv1a64(key, h))


def assign_macrocluster(key: bytes | str, salt: int) -> Cluster:
    """Deterministically map a user key to C1 or C2.

    Any party holding the same key bytes and salt computes the same
    cluster; changing the salt reshuffles the whole population.
    """
    if isinstance(key, str):
        key = key.encode("utf-8")
    return Cluster.C1 if cluster_hash(key, salt) & 1 == 0 else Cluster.C2


def cluster_bits_for_uids(uids: np.ndarray, salt: int) -> np.ndarray:
    """Vectorized cluster bit (0 for C1, 1 for C2) for uint64 user ids.

    Matches assign_macrocluster applied to each id's 8 big-endian bytes.
    """
    uids = np.ascontiguousarray(uids, dtype=np.uint64)
    h0 = fnv1a64((int(salt) & _MASK64).to_bytes(8, "little"))
    h = np.full(uids.shape, h0, dtype=np.uint64)
    prime = np.uint64(_FNV_PRIME)
    for shift in range(56, -8, -8):  # big-endian byte order
        byte = (uids >> np.uint64(shift)) & np.uint64(0xFF)
        h = (h ^ byte) * prime
    h ^= h >> np.uint64(30)
    h *= np.uint64(_MIX_MULT_1)
    h ^= h >> np.uint64(27)
    h *= np.uint64(_MIX_MULT_2)
    h ^= h >> np.uint64(31)
    return (h & np.uint64(1)).astype(np.uint8)


def _label_to_int(part) -> int:
    if isinstance(part, str):
        return fnv1a64(part.encode("utf-8"))
    return int(part) & _MASK64


def substream(seed: int, *parts) -> np.random.Generator:
    """Independent counter-based random stream for (seed, labels...).

    Streams with distinct label tuples are statistically independent, so
    replications and draw roles can be generated in any order, on any
    number of workers, with bit-identical results.
    """
    spawn_key = tuple(_label_to_int(p) for p in parts)
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seed=ss))


def derive_seed(seed: int, *parts) -> int:
    """Stable 64-bit seed for a named child scope of a base seed."""
    h = int(seed) & _MASK64
    for part in parts:
        h = mix64(h ^ _label_to_int(part))
    return h


@dataclass(frozen=True)
class AllocationTable:
    """Per-cluster treatment probabilities for both sites.

    Site 1 uses the same split in both clusters. Site 2 serves its arm 3
    with probability ``alpha`` in C1 and ``1 - alpha`` in C2; that swap is
    the only difference between the clusters and is what lets the
    corrected estimator separate cross-site interference from the
    site-1 effect.
    """

    site1_split: float
    alpha: float
    allow_degenerate: bool = False

    def __post_init__(self):
        for name, p in (("site1_split", self.site1_split), ("alpha", self.alpha)):
            if self.allow_degenerate:
                if not (0.0 <= p <= 1.0):
                    raise ValidationError(f"{name} must lie in [0, 1], got {p!r}")
            elif not (0.0 < p < 1.0):
                raise ValidationError(
                    f"{name} must lie strictly inside (0, 1) so every arm keeps "
                    f"positive probability, got {p!r}"
                )

    @classmethod
    def from_config(cls, config: DesignConfig) -> "AllocationTable":
        return cls(
            site1_split=config.site1_split,
            alpha=config.alpha,
            allow_degenerate=config.allow_degenerate,
        )

    def prob_site1_t1(self, cluster: Cluster) -> float:
        del cluster  # identical in both clusters by design
        return self.site1_split

    def prob_site2_t3(self, cluster: Cluster) -> float:
        return self.alpha if cluster is Cluster.C1 else 1.0 - self.alpha


def allocate_treatment(
    cluster: Cluster,
    site: int,
    table: AllocationTable,
    rng: np.random.Generator,
):
    """Draw one treatment for a user of the given cluster on one site."""
    if site == 1:
        p = table.prob_site1_t1(cluster)
        return Site1Treatment.T1 if rng.random() < p else Site1Treatment.T2
    if site == 2:
        p = table.prob_site2_t3(cluster)
        return Site2Exposure.T3 if rng.random() < p else Site2Exposure.T4
    raise ValidationError(f"site must be 1 or 2, got {site!r}")


# Fields are fixed on purpose: a site-1 log carries no user keys and no
# site-2 assignment, so exporting it leaks nothing about cross-site identity.
@dataclass
class Site1Log:
    """Columnar site-1 observations: cluster, own arm, outcome, covariates."""

    cluster_codes: np.ndarray  # uint8, 0 = C1, 1 = C2
    treatment_codes: np.ndarray  # uint8, 0 = T1, 1 = T2
    outcomes: np.ndarray  # float64
    covariates: np.ndarray  # float64, shape (n, d)
    outcome_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        n = len(self.outcomes)
        if self.covariates.ndim != 2 or self.covariates.shape[0] != n:
            raise ValidationError("covariates must be a (n, d) array")
        if len(self.cluster_codes) != n or len(self.treatment_codes) != n:
            raise ValidationError("log columns must share one length")

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def covariate_dim(self) -> int:
        return self.covariates.shape[1]

    def mask(self, cluster: Cluster, treatment: Site1Treatment) -> np.ndarray:
        want_c = 0 if cluster is Cluster.C1 else 1
        want_t = 0 if treatment is Site1Treatment.T1 else 1
        return (self.cluster_codes == want_c) & (self.treatment_codes == want_t)


def assign_exposures(population, config: DesignConfig, seed: int):
    """Draw the full exposure of every user: cluster, both arms, outcome.

    Returns (cluster_bits, site1_codes, site2_codes, outcomes) where
    site2 codes are 0/3/4. The site-2 column pairs users with their
    cross-site arm, so only simulator internals may see it; anything
    exported to an analysis surface must go through the site-1 log.
    """
    n = population.n
    table = AllocationTable.from_config(config)
    bits = cluster_bits_for_uids(population.uids, config.cluster_salt)

    u1 = substream(seed, "site1-arm").random(n)
    treat = np.where(u1 < table.site1_split, 0, 1).astype(np.uint8)

    u2 = substream(seed, "site2-arm").random(n)
    p3 = np.where(bits == 0, table.alpha, 1.0 - table.alpha)
    site2 = np.where(
        population.visits_both, np.where(u2 < p3, 3, 4), 0
    ).astype(np.uint8)

    # Outcome lookup: column index of (t, s) in the canonical layout.
    col = np.empty(n, dtype=np.intp)
    for (t, s), idx in EXPOSURE_INDEX.items():
        col[((treat + 1) == t) & (site2 == s)] = idx
    outcomes = population.outcomes[np.arange(n), col].astype(np.float64, copy=True)
    return bits, treat, site2, outcomes


def expose_population(population, config: DesignConfig, seed: int) -> Site1Log:
    """Run the full two-stage design over a generated population.

    Assigns clusters by hashing each user id with the config salt, draws
    both sites' treatments from independent substreams, resolves each
    user's observed outcome from their potential-outcome table, and
    returns the privacy-safe site-1 log.
    """
    bits, treat, _, outcomes = assign_exposures(population, config, seed)
    return Site1Log(
        cluster_codes=bits,
        treatment_codes=treat,
        outcomes=outcomes,
        covariates=np.array(population.covariates, dtype=np.float64, copy=True),
        outcome_bounds=population.outcome_bounds,
    )
